use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use lungcad::classifiers::Family;
use lungcad::cli::{
    self, DEFAULT_IMAGE_SIZE, DEFAULT_MARGIN, DEFAULT_SEED, DEFAULT_TRAIN_FRACTION,
};
use lungcad::data::SplitLevel;
use lungcad::features::{DEFAULT_GRADIENT_BINS, DEFAULT_GRAY_BINS};
use lungcad::modelsel::DEFAULT_FOLDS;
use lungcad::{FeatureLayout, Result};

#[derive(Parser)]
#[command(
    name = "lungcad",
    version,
    about = "Benign/malignant lung nodule classification"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    Slice,
    Subject,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset (PGM images and manifest.json).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 150)]
        n_benign: usize,
        #[arg(long, default_value_t = 150)]
        n_malignant: usize,
        #[arg(long, default_value_t = DEFAULT_IMAGE_SIZE)]
        image_size: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Extract the feature table from a manifest.
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MARGIN)]
        margin: f64,
        #[arg(long, default_value_t = DEFAULT_GRAY_BINS)]
        gray_bins: usize,
        #[arg(long, default_value_t = DEFAULT_GRADIENT_BINS)]
        grad_bins: usize,
    },
    /// Split a feature table into train.csv and test.csv.
    Split {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TRAIN_FRACTION)]
        train_fraction: f64,
        #[arg(long, value_enum, default_value = "slice")]
        split_level: Level,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Cross-validated grid search; writes cv_table.csv and best.json.
    Tune {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        family: Option<Family>,
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_FOLDS)]
        folds: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the selected configuration on the training table.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        best: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a model on a labeled table; writes report.json.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the ROC curve as CSV.
    Roc {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score and label every row of a feature table.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth {
            out,
            n_benign,
            n_malignant,
            image_size,
            seed,
        } => {
            let manifest = cli::cmd_synth(&out, n_benign, n_malignant, image_size, seed)?;
            println!("wrote {}", manifest.display());
        }
        Command::Extract {
            manifest,
            out,
            margin,
            gray_bins,
            grad_bins,
        } => {
            let layout = FeatureLayout {
                gray_bins,
                gradient_bins: grad_bins,
            };
            let table = cli::cmd_extract(&manifest, &out, margin, layout)?;
            println!("extracted {} nodules to {}", table.len(), out.display());
        }
        Command::Split {
            features,
            manifest,
            out,
            train_fraction,
            split_level,
            seed,
        } => {
            let level = match split_level {
                Level::Slice => SplitLevel::Slice,
                Level::Subject => SplitLevel::Subject,
            };
            let (tr, te) = cli::cmd_split(
                &features,
                manifest.as_deref(),
                &out,
                train_fraction,
                level,
                seed,
            )?;
            println!("train {} / test {}", tr.len(), te.len());
        }
        Command::Tune {
            features,
            family,
            grid,
            folds,
            seed,
            out,
        } => {
            let result = cli::cmd_tune(&features, family, grid.as_deref(), folds, seed, &out)?;
            let row = result.best_row();
            println!(
                "selected {} (mean F {:.4}, threshold {})",
                result.best.describe(),
                row.mean_f,
                result.threshold
            );
        }
        Command::Train {
            features,
            best,
            out,
        } => {
            let model = cli::cmd_train(&features, &best, &out)?;
            println!("trained {} -> {}", model.config.describe(), out.display());
        }
        Command::Eval {
            model,
            features,
            out,
        } => {
            let r = cli::cmd_eval(&model, &features, &out)?;
            println!(
                "Se {:.4} Sp {:.4} A {:.4} F {:.4} AUC {:.4}",
                r.metrics.sensitivity,
                r.metrics.specificity,
                r.metrics.accuracy,
                r.metrics.f_measure,
                r.auc
            );
        }
        Command::Roc {
            model,
            features,
            out,
        } => {
            let roc = cli::cmd_roc(&model, &features, &out)?;
            println!("AUC {:.4}", lungcad::eval::auc(&roc));
        }
        Command::Predict {
            model,
            features,
            out,
        } => {
            let preds = cli::cmd_predict(&model, &features, &out)?;
            println!("scored {} rows", preds.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}
