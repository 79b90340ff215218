use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mvsoftmax_cli::eval_files::{evaluate_pairs, parse_embeddings, parse_pairs};
use mvsoftmax_cli::{report, run_experiment, sweep_t, CliError, ExperimentSpec, Result};

#[derive(Parser)]
#[command(name = "mvsoftmax", version, about = "Train and evaluate normalized-softmax loss variants on synthetic identity data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and evaluate one method.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        method: String,
        /// Overrides `train.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every method listed in the experiment file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train one MV method once per value of t.
    SweepT {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        method: String,
        /// Comma-separated values, e.g. 0.15,0.2,0.25
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        t: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score precomputed embeddings on a list of pairs.
    Eval {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3")]
        far: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        gallery_per_class: usize,
        /// Directory for `roc.txt` and `summary.txt`; the summary is always
        /// printed.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(config: &Path, out: Option<PathBuf>) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::load(config)?;
    if let Some(out) = out {
        spec.output_dir = out;
    }
    Ok(spec)
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Train { config, method, seed, out } => {
            let mut spec = load(&config, out)?;
            if let Some(seed) = seed {
                spec.train.seed = seed;
            }
            spec.methods = vec![method];
            let results = run_experiment(&spec)?;
            for r in &results {
                print!("{}", report::summary(r));
            }
        }
        Command::Run { config, out } => {
            let spec = load(&config, out)?;
            let results = run_experiment(&spec)?;
            print!("{}", report::comparison("method", results.iter().map(|r| (r.name.clone(), r))));
        }
        Command::SweepT { config, method, t, out } => {
            let spec = load(&config, out)?;
            let results = sweep_t(&spec, &method, &t)?;
            print!("{}", report::comparison("t", results.iter().map(|(t, r)| (t.to_string(), r))));
        }
        Command::Eval { embeddings, pairs, far, gallery_per_class, out } => {
            let text = std::fs::read_to_string(&embeddings).map_err(CliError::io(&embeddings))?;
            let emb = parse_embeddings(&text, &embeddings)?;
            let text = std::fs::read_to_string(&pairs).map_err(CliError::io(&pairs))?;
            let pair_list = parse_pairs(&text, &pairs, emb.labels.len())?;
            let result = evaluate_pairs(&emb, &pair_list, &far, gallery_per_class)?;
            let summary = mvsoftmax_cli::eval_files::summary(&result);
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
                let roc_path = dir.join("roc.txt");
                std::fs::write(&roc_path, report::roc(&result.roc)).map_err(CliError::io(&roc_path))?;
                let summary_path = dir.join("summary.txt");
                std::fs::write(&summary_path, &summary).map_err(CliError::io(&summary_path))?;
            }
            print!("{summary}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
