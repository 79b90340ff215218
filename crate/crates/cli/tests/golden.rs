//! Pins every artifact of one seeded run. Set `MVSOFTMAX_BLESS=1` to rewrite
//! the files under `tests/golden/` after an intended change.

use std::fs;
use std::path::Path;

use mvsoftmax_cli::{run_experiment, ExperimentSpec};

const FILES: [&str; 7] = [
    "comparison.txt",
    "softmax/train_log.txt",
    "softmax/roc.txt",
    "softmax/summary.txt",
    "mv-am-softmax-a/train_log.txt",
    "mv-am-softmax-a/roc.txt",
    "mv-am-softmax-a/summary.txt",
];

#[test]
fn seeded_run_matches_golden_files() {
    let tmp = tempfile::tempdir().unwrap();
    let mut spec = ExperimentSpec::new("golden", tmp.path());
    spec.methods = vec!["softmax".into(), "mv-am-softmax-a".into()];
    spec.dataset.samples_per_class = 20;
    spec.dataset.concentration = 5.0;
    spec.train.epochs = 4;
    spec.train.lr_decay_epochs = vec![2, 3];
    spec.train.batch_size = 32;
    spec.train.seed = 42;
    spec.eval_far_levels = vec![0.1, 0.05];
    run_experiment(&spec).unwrap();

    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let bless = std::env::var_os("MVSOFTMAX_BLESS").is_some();
    for file in FILES {
        let got = fs::read_to_string(tmp.path().join(file)).unwrap();
        let path = golden.join(file);
        if bless {
            fs::create_dir_all(path.parent().unwrap()).unwrap();
            fs::write(&path, &got).unwrap();
            continue;
        }
        let want = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(got, want, "{file} differs from the golden copy");
    }
}
