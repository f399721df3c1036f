//! Thin command-line frontend over the library's command implementations.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sthoi::commands::{
    cmd_detect, cmd_evaluate, cmd_synth, cmd_tag, cmd_track, cmd_train, SynthArgs,
};
use sthoi::PipelineConfig;

#[derive(Parser)]
#[command(
    name = "sthoi",
    about = "Spatio-temporal human-object interaction detection pipeline",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Pipeline configuration file (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> sthoi::Result<PipelineConfig> {
        match &self.config {
            Some(path) => PipelineConfig::load(path),
            None => Ok(PipelineConfig::default()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene suite (scenes, embeddings, manifest).
    Synth {
        /// Output directory for the suite.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        scenes: usize,
        /// Frames per scene.
        #[arg(long, default_value_t = 100)]
        frames: usize,
        /// Gaussian box jitter in pixels.
        #[arg(long, default_value_t = 0.0)]
        noise_sigma: f64,
        /// Detection drop probability.
        #[arg(long, default_value_t = 0.0)]
        drop_rate: f64,
        /// Duplicate-detection probability.
        #[arg(long, default_value_t = 0.0)]
        fp_rate: f64,
        /// Word-embedding dimension.
        #[arg(long, default_value_t = 16)]
        embedding_dim: usize,
    },
    /// Detect object trajectories and report throughput (and detection mAP
    /// when annotations are available).
    Track {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the interaction recognizer on annotated trajectories.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
        /// Output directory for model.ckpt and loss_curve.txt.
        #[arg(long)]
        out: PathBuf,
        /// Disable the body-part behavior descriptor branch.
        #[arg(long)]
        no_bp: bool,
        /// Disable the object-conditioned hard mask.
        #[arg(long)]
        no_oc: bool,
        /// Replace late score fusion with one concatenated-feature classifier.
        #[arg(long)]
        no_lf: bool,
        /// Replace factorized recognition with a joint label classifier.
        #[arg(long)]
        no_cf: bool,
    },
    /// Run the full detection pipeline and write a predictions file.
    Detect {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: PathBuf,
        /// Use annotated trajectories instead of detected ones.
        #[arg(long)]
        gt_trajectories: bool,
    },
    /// Rank deduplicated HOI labels per video.
    Tag {
        #[arg(long)]
        predictions: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score predictions against ground-truth annotations.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
        /// Metrics report output file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-class AP table (CSV).
        #[arg(long)]
        per_class: Option<PathBuf>,
    },
    /// Configuration helpers.
    Config {
        /// Print the effective configuration (defaults merged with --config).
        #[arg(long)]
        dump: bool,
        #[command(flatten)]
        config: ConfigArg,
    },
}

fn run(cli: Cli) -> sthoi::Result<()> {
    match cli.command {
        Command::Synth {
            out,
            seed,
            scenes,
            frames,
            noise_sigma,
            drop_rate,
            fp_rate,
            embedding_dim,
        } => {
            let manifest = cmd_synth(
                &SynthArgs {
                    seed,
                    scenes,
                    frames,
                    jitter_sigma: noise_sigma,
                    drop_rate,
                    false_positive_rate: fp_rate,
                    embedding_dim,
                },
                &out,
            )?;
            println!("wrote {scenes} scenes, manifest at {}", manifest.display());
        }
        Command::Track {
            manifest,
            config,
            out,
        } => {
            let cfg = config.load()?;
            let report = cmd_track(&manifest, &cfg, &out)?;
            print!("{}", report.render());
        }
        Command::Train {
            manifest,
            config,
            out,
            no_bp,
            no_oc,
            no_lf,
            no_cf,
        } => {
            let mut cfg = config.load()?;
            if no_bp {
                cfg.recognition.behavior_descriptor = false;
            }
            if no_oc {
                cfg.recognition.object_mask = false;
            }
            if no_lf {
                cfg.recognition.late_fusion = false;
            }
            if no_cf {
                cfg.recognition.factorized = false;
            }
            let summary = cmd_train(&manifest, &cfg, &out)?;
            println!(
                "trained on {} samples for {} epochs, final loss {:.6}",
                summary.samples, summary.epochs, summary.final_loss
            );
            println!("model: {}", summary.model_path.display());
        }
        Command::Detect {
            manifest,
            model,
            config,
            out,
            gt_trajectories,
        } => {
            let cfg = config.load()?;
            let summary = cmd_detect(&manifest, &model, &cfg, &out, gt_trajectories)?;
            println!(
                "{} instances over {} videos -> {}",
                summary.instances,
                summary.videos,
                summary.predictions_path.display()
            );
        }
        Command::Tag {
            predictions,
            config,
            out,
        } => {
            let cfg = config.load()?;
            let report = cmd_tag(&predictions, &cfg, out.as_deref())?;
            print!("{}", report.render());
        }
        Command::Evaluate {
            predictions,
            manifest,
            config,
            out,
            per_class,
        } => {
            let cfg = config.load()?;
            let report = cmd_evaluate(
                &predictions,
                &manifest,
                &cfg,
                out.as_deref(),
                per_class.as_deref(),
            )?;
            print!("{}", report.render());
        }
        Command::Config { dump, config } => {
            let cfg = config.load()?;
            if dump {
                print!("{}", cfg.dump());
            } else {
                println!("configuration valid");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
