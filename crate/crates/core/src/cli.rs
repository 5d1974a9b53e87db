//! Command-line front end.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on data errors.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::ann::TrainConfig;
use crate::error::Result;
use crate::evaluation::{self, CvConfig};
use crate::features::{self, LabeledDataset};
use crate::model::Classifier;
use crate::pca::ReductionMode;
use crate::signal_io;
use crate::synth::{self, SynthConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "vocalfold", version, about = "Vocal fold pathology detection from sustained vowels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone, Copy)]
struct TrainArgs {
    /// Gradient descent step size.
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    #[arg(long, default_value_t = 2000)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl TrainArgs {
    fn config(&self, hidden: usize) -> TrainConfig {
        TrainConfig {
            learning_rate: self.lr,
            epochs: self.epochs,
            seed: self.seed,
            hidden,
        }
    }

    fn cv(&self, folds: usize, mode: ReductionMode, hidden: usize) -> CvConfig {
        CvConfig {
            folds,
            seed: self.seed,
            mode,
            train: self.config(hidden),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic sustained-vowel dataset with a manifest.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 75)]
        n_path: usize,
        #[arg(long, default_value_t = 55)]
        n_healthy: usize,
        #[arg(long, default_value_t = 32_000)]
        sample_rate: u32,
        #[arg(long, default_value_t = 1.0)]
        duration: f64,
    },
    /// Extract 139-dim feature vectors for every file in a manifest.
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit PCA and the network on a feature CSV and save the model.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value_t = 36)]
        k: usize,
        #[arg(long, default_value_t = 5)]
        hidden: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "project")]
        mode: ReductionMode,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Cross-validate the pipeline.
    Evaluate {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value_t = 36)]
        k: usize,
        #[arg(long, default_value_t = 5)]
        hidden: usize,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value = "project")]
        mode: ReductionMode,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Classify a single WAV file.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        wav: PathBuf,
    },
    /// Cross-validated accuracy as a function of hidden units.
    SweepNeurons {
        #[arg(long)]
        features: PathBuf,
        /// Inclusive range `lo:hi`.
        #[arg(long, default_value = "1:15", value_parser = parse_range)]
        range: (usize, usize),
        /// Number of PCA components; all 139 by default.
        #[arg(long, default_value_t = features::FEATURE_LEN)]
        k: usize,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        /// Output stem for `<stem>.csv` and `<stem>.dat`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Cross-validated accuracy as a function of the PCA dimension.
    SweepFeatures {
        #[arg(long)]
        features: PathBuf,
        /// Comma-separated counts; `5,10,...,135,139` by default.
        #[arg(long, value_delimiter = ',')]
        counts: Option<Vec<usize>>,
        #[arg(long, default_value_t = 5)]
        hidden: usize,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value = "project")]
        mode: ReductionMode,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        train: TrainArgs,
    },
}

fn parse_range(s: &str) -> std::result::Result<(usize, usize), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("range {s:?} must look like lo:hi"))?;
    let lo: usize = lo.trim().parse().map_err(|_| format!("bad range start {lo:?}"))?;
    let hi: usize = hi.trim().parse().map_err(|_| format!("bad range end {hi:?}"))?;
    if lo == 0 || lo > hi {
        return Err(format!("range {s:?} must satisfy 1 <= lo <= hi"));
    }
    Ok((lo, hi))
}

fn default_counts() -> Vec<usize> {
    let mut v: Vec<usize> = (5..features::FEATURE_LEN).step_by(5).collect();
    v.push(features::FEATURE_LEN);
    v
}

fn print_report(report: &evaluation::EvalReport) {
    let c = &report.confusion;
    println!("accuracy     {:.4}", report.accuracy);
    println!("sensitivity  {:.4}", report.sensitivity);
    println!("specificity  {:.4}", report.specificity);
    println!(
        "confusion    TN={} FP={} FN={} TP={}",
        c.true_negative, c.false_positive, c.false_negative, c.true_positive
    );
    let folds: Vec<String> = report.per_fold.iter().map(|a| format!("{a:.3}")).collect();
    println!("per-fold     {}", folds.join(" "));
}

fn print_sweep(rows: &[evaluation::SweepRow], out: Option<&PathBuf>, param: &str) -> Result<()> {
    print!("{}", evaluation::sweep_csv(rows));
    if let Some(stem) = out {
        evaluation::write_sweep(stem, rows, param)?;
    }
    Ok(())
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Synth {
            out,
            seed,
            n_path,
            n_healthy,
            sample_rate,
            duration,
        } => {
            let cfg = SynthConfig {
                sample_rate,
                duration,
                ..SynthConfig::default()
            };
            let entries = synth::synth_dataset(&out, n_path, n_healthy, &cfg, seed)?;
            println!(
                "wrote {} files and {}",
                entries.len(),
                out.join(synth::MANIFEST_NAME).display()
            );
        }
        Command::Extract { manifest, out } => {
            let entries = synth::read_manifest(&manifest)?;
            let extraction = features::extract_dataset(&entries)?;
            for f in &extraction.failures {
                eprintln!("skipped {} ({}): {}", f.id, f.path.display(), f.error);
            }
            extraction.dataset.write_csv(&out)?;
            println!(
                "extracted {} of {} files into {}",
                extraction.dataset.len(),
                entries.len(),
                out.display()
            );
        }
        Command::Train {
            features,
            k,
            hidden,
            out,
            mode,
            train,
        } => {
            let ds = LabeledDataset::read_csv(&features)?;
            let (reducer, mlp) = evaluation::fit_classifier(&ds, k, mode, &train.config(hidden))?;
            Classifier::new(reducer, mlp)?.save(&out)?;
            println!("saved model to {}", out.display());
        }
        Command::Evaluate {
            features,
            k,
            hidden,
            folds,
            mode,
            train,
        } => {
            let ds = LabeledDataset::read_csv(&features)?;
            let report = evaluation::cross_validate(&ds, k, hidden, &train.cv(folds, mode, hidden))?;
            print_report(&report);
        }
        Command::Classify { model, wav } => {
            let classifier = Classifier::load(&model)?;
            let signal = signal_io::read_wav(&wav)?;
            let fv = features::extract_features(&signal)?;
            let (label, p) = classifier.classify(fv.values())?;
            println!("{label} {p:.17}");
        }
        Command::SweepNeurons {
            features,
            range,
            k,
            folds,
            out,
            train,
        } => {
            let ds = LabeledDataset::read_csv(&features)?;
            let values: Vec<usize> = (range.0..=range.1).collect();
            let cv = train.cv(folds, ReductionMode::Project, 5);
            let rows = evaluation::sweep_hidden(&ds, k, &values, &cv)?;
            print_sweep(&rows, out.as_ref(), "hidden")?;
        }
        Command::SweepFeatures {
            features,
            counts,
            hidden,
            folds,
            mode,
            out,
            train,
        } => {
            let ds = LabeledDataset::read_csv(&features)?;
            let counts = counts.unwrap_or_else(default_counts);
            let sweep = evaluation::sweep_features(&ds, &counts, hidden, &train.cv(folds, mode, hidden))?;
            print_sweep(&sweep.rows, out.as_ref(), "features")?;
            println!("# best count {}: {}", sweep.best_count, sweep.selection_summary());
        }
    }
    Ok(())
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}
