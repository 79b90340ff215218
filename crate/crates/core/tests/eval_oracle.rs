use mvsoftmax::eval::{cmc_rank1, evaluate_embeddings, roc_curve, tpr_at_far, verification_scores, PairSet};
use mvsoftmax::oracle::{brute_cmc_rank1, brute_tpr_at_far, random_matrix};
use mvsoftmax::trainer::{generate_synthetic, train, SyntheticDatasetSpec, TrainConfig};
use mvsoftmax::{LossConfig, MarginSpec, MvMode};
use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Scores on a coarse grid so that ties are common.
fn random_scores(rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<bool>) {
    loop {
        let levels = rng.random_range(2..60);
        let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..levels)) / f64::from(levels)).collect();
        let same: Vec<bool> = (0..n).map(|_| rng.random_bool(0.3)).collect();
        if same.iter().any(|&s| s) && same.iter().any(|&s| !s) {
            return (scores, same);
        }
    }
}

#[test]
fn tpr_matches_exhaustive_thresholds() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for trial in 0..300 {
        let n = rng.random_range(2..=1000);
        let (scores, same) = random_scores(&mut rng, n);
        let negatives = same.iter().filter(|&&s| !s).count();
        let smallest = 1.0 / negatives as f64;
        let levels: Vec<f64> = [smallest, 0.01, 0.05, 0.1, 0.3, 1.0].into_iter().filter(|&f| f >= smallest).collect();
        let got = tpr_at_far(&scores, &same, &levels).unwrap();
        for (far, tpr) in got {
            assert_eq!(tpr, brute_tpr_at_far(&scores, &same, far), "trial {trial}, far {far}");
        }
    }
}

#[test]
fn tpr_is_monotone_in_far_and_roc_spans_unit_square() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let (scores, same) = random_scores(&mut rng, 400);
        let levels = [0.05, 0.1, 0.2, 0.5, 1.0];
        let tprs: Vec<f64> = tpr_at_far(&scores, &same, &levels).unwrap().into_iter().map(|p| p.1).collect();
        assert!(tprs.windows(2).all(|w| w[0] <= w[1]), "{tprs:?}");
        let roc = roc_curve(&scores, &same).unwrap();
        assert_eq!((roc[0].far, roc[0].tpr), (0.0, 0.0));
        let last = roc.last().unwrap();
        assert_eq!((last.far, last.tpr), (1.0, 1.0));
        assert!(roc.windows(2).all(|w| w[0].far <= w[1].far && w[0].tpr <= w[1].tpr));
    }
}

#[test]
fn scores_match_dot_product_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pairs: Vec<(Array1<f64>, Array1<f64>, bool)> = (0..200)
        .map(|_| {
            let m = random_matrix(&mut rng, 2, 8);
            (m.row(0).to_owned(), m.row(1).to_owned(), rng.random_bool(0.5))
        })
        .collect();
    let set = PairSet::new(pairs.clone()).unwrap();
    for (s, (a, b, _)) in verification_scores(&set).unwrap().iter().zip(&pairs) {
        let oracle = a.dot(b) / (a.dot(a).sqrt() * b.dot(b).sqrt());
        assert!((s - oracle).abs() < 1e-14);
    }
}

#[test]
fn cmc_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let classes = rng.random_range(2..10);
        let d = rng.random_range(2..12);
        let mut gallery = random_matrix(&mut rng, classes, d);
        let mut gallery_labels: Vec<usize> = (0..classes).collect();
        // duplicated gallery rows under another label produce exact ties
        let dup = rng.random_range(0..classes);
        let row = gallery.row(dup).to_owned();
        gallery.push_row(row.view()).unwrap();
        gallery_labels.push((dup + 1) % classes);
        let probes_n = rng.random_range(1..=200);
        let mut probes = random_matrix(&mut rng, probes_n, d);
        for i in 0..probes_n / 4 {
            probes.row_mut(i).assign(&row);
        }
        let probe_labels: Vec<usize> = (0..probes_n).map(|_| rng.random_range(0..classes)).collect();
        let got = cmc_rank1(probes.view(), &probe_labels, gallery.view(), &gallery_labels).unwrap();
        let want = brute_cmc_rank1(probes.view(), &probe_labels, gallery.view(), &gallery_labels);
        assert_eq!(got, want);
    }
}

#[test]
fn cmc_on_trained_model_matches_exhaustive_search() {
    let spec = SyntheticDatasetSpec { samples_per_class: 55, train_fraction: 0.8, concentration: 5.0, ..Default::default() };
    let data = generate_synthetic(&spec).unwrap();
    let loss = LossConfig::softmax(32.0).with_margin(MarginSpec::additive_cosine(0.35)).with_mv(MvMode::Adaptive, 0.2);
    let model = train(&TrainConfig { loss, ..Default::default() }, &data.train).unwrap();
    let emb = model.embed(data.test.inputs.view()).unwrap();
    // 11 test samples per class: the first is the gallery entry, the other 10 are probes
    let (mut g_idx, mut p_idx) = (Vec::new(), Vec::new());
    let mut seen = [0; 8];
    for (i, &l) in data.test.labels.iter().enumerate() {
        if seen[l] == 0 { g_idx.push(i) } else { p_idx.push(i) }
        seen[l] += 1;
    }
    assert_eq!(p_idx.len(), 80);
    let labels = |idx: &[usize]| idx.iter().map(|&i| data.test.labels[i]).collect::<Vec<_>>();
    let (g, p) = (emb.select(Axis(0), &g_idx), emb.select(Axis(0), &p_idx));
    let got = cmc_rank1(p.view(), &labels(&p_idx), g.view(), &labels(&g_idx)).unwrap();
    assert_eq!(got, brute_cmc_rank1(p.view(), &labels(&p_idx), g.view(), &labels(&g_idx)));
    let report = evaluate_embeddings(emb.view(), &data.test.labels, &[1e-2], 1).unwrap();
    assert_eq!(report.cmc_rank1, got);
}

#[test]
fn power_of_two_rescaling_leaves_metrics_bit_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let emb = random_matrix(&mut rng, 60, 6);
    let labels: Vec<usize> = (0..60).map(|i| i % 5).collect();
    let base = evaluate_embeddings(emb.view(), &labels, &[0.01, 0.1], 2).unwrap();
    for c in [0.25, 2.0, 1024.0] {
        let scaled: Array2<f64> = &emb * c;
        assert_eq!(evaluate_embeddings(scaled.view(), &labels, &[0.01, 0.1], 2).unwrap(), base);
    }
    let scaled: Array2<f64> = &emb * 3.7;
    let other = evaluate_embeddings(scaled.view(), &labels, &[0.01, 0.1], 2).unwrap();
    assert_eq!(other.cmc_rank1, base.cmc_rank1);
    assert!((other.mean_intra_cos - base.mean_intra_cos).abs() < 1e-12);
}
