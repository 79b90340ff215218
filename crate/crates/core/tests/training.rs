use mvsoftmax::trainer::{gaussian_matrix, generate_synthetic, train, Backbone, SyntheticDatasetSpec, TrainConfig};
use mvsoftmax::{LossConfig, MarginSpec, MiningSpec, MvMode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn default_task() -> mvsoftmax::trainer::SyntheticData {
    generate_synthetic(&SyntheticDatasetSpec::default()).unwrap()
}

fn mv_am_adaptive() -> LossConfig {
    LossConfig::softmax(32.0)
        .with_margin(MarginSpec::additive_cosine(0.35))
        .with_mv(MvMode::Adaptive, 0.2)
}

#[test]
fn same_seed_same_outcome() {
    let data = default_task();
    let cfg = TrainConfig { epochs: 3, lr_decay_epochs: vec![2], seed: 9, loss: mv_am_adaptive(), ..Default::default() };
    let a = train(&cfg, &data.train).unwrap();
    let b = train(&cfg, &data.train).unwrap();
    assert_eq!(a, b);
    let c = train(&TrainConfig { seed: 10, ..cfg }, &data.train).unwrap();
    assert_ne!(a.classifier, c.classifier);
}

#[test]
fn zero_learning_rate_keeps_initial_parameters() {
    let data = default_task();
    let cfg = TrainConfig { lr: 0.0, epochs: 2, lr_decay_epochs: vec![], seed: 5, ..Default::default() };
    let out = train(&cfg, &data.train).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let backbone = Backbone::init(32, 64, 32, &mut rng);
    let classifier = gaussian_matrix(8, 32, &mut rng);
    assert_eq!(out.backbone, backbone);
    assert_eq!(out.classifier.weights(), &classifier);
}

#[test]
fn mv_am_adaptive_converges_on_default_task() {
    let data = default_task();
    let out = train(&TrainConfig { loss: mv_am_adaptive(), ..Default::default() }, &data.train).unwrap();
    let (first, last) = (out.log[0].mean_loss, out.log.last().unwrap().mean_loss);
    assert!(last < 0.2 * first, "first {first}, final {last}");
}

#[test]
fn every_family_lowers_its_loss_and_misclass_median() {
    let data = default_task();
    let s = LossConfig::softmax(32.0);
    let am = MarginSpec::additive_cosine(0.35);
    let arc = MarginSpec::additive_angle(0.5);
    let families = [
        s,
        s.with_mining(MiningSpec::Focal { gamma: 2.0 }),
        s.with_mining(MiningSpec::Hard { keep_ratio: 0.9 }),
        s.with_margin(MarginSpec::angular(3)),
        s.with_margin(am),
        s.with_margin(arc),
        s.with_margin(am).with_mining(MiningSpec::Focal { gamma: 2.0 }),
        s.with_margin(arc).with_mining(MiningSpec::Hard { keep_ratio: 0.9 }),
        s.with_margin(am).with_mv(MvMode::Fixed, 0.25),
        s.with_margin(arc).with_mv(MvMode::Adaptive, 0.3),
    ];
    for loss in families {
        let out = train(&TrainConfig { loss, ..Default::default() }, &data.train).unwrap();
        let (first, last) = (&out.log[0], out.log.last().unwrap());
        assert!(last.mean_loss < first.mean_loss, "{loss:?}: {} -> {}", first.mean_loss, last.mean_loss);
        assert!(last.median_misclass_count <= first.median_misclass_count, "{loss:?}");
    }
}

#[test]
fn log_follows_schedule_and_keeps_partial_batches() {
    let data = default_task();
    let cfg = TrainConfig { batch_size: 100, ..Default::default() };
    let out = train(&cfg, &data.train).unwrap();
    assert_eq!(out.log.len(), 12);
    for (i, r) in out.log.iter().enumerate() {
        assert_eq!(r.epoch, i + 1);
        assert_eq!(r.lr, cfg.lr_at_epoch(i + 1));
        assert_eq!(r.misclass_histogram.iter().sum::<usize>(), data.train.len());
        assert_eq!(r.wall_ms, 0);
    }
}

#[test]
fn invalid_config_is_rejected_before_training() {
    let data = default_task();
    let cfg = TrainConfig { lr_decay_epochs: vec![3, 3], ..Default::default() };
    assert!(matches!(train(&cfg, &data.train), Err(mvsoftmax::error::Error::InvalidConfig(_))));
}
