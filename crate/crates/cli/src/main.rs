//! `bgpscope`: file-artifact pipeline for BGP update-stream anomaly
//! detection. Each subcommand runs one stage and leaves its artifact in the
//! configured output directory; `run-all` chains them.

use bgpscope_core::pipeline::{self, EvalManifest, PipelineConfig};
use bgpscope_core::synth;
use bgpscope_core::{Error, Real};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "bgpscope", version, about = "BGP update-stream anomaly detection pipeline")]
struct Cli {
    /// Override the config's evaluation seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Pipeline configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Parse MRT (optionally gzipped) or an event log into the canonical
    /// sorted event-log CSV.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Abort on the first malformed record instead of skipping it.
        #[arg(long)]
        strict: bool,
    },
    /// Generate a labeled synthetic scenario.
    Synth {
        /// One of: nimda-like, slammer-like, codered-like, eastcoast-like,
        /// florida-like, katrina-like.
        #[arg(long)]
        preset: String,
        #[arg(long)]
        output: PathBuf,
        /// Override the preset's RNG seed.
        #[arg(long)]
        scenario_seed: Option<u64>,
    },
    /// Events -> per-bin base feature matrix.
    Features(ConfigArg),
    /// Base matrix -> augmented matrix with rolling-correlation columns.
    Correlate(ConfigArg),
    /// Augmented matrix -> ranked feature selection report.
    Select(ConfigArg),
    /// Selected features -> trained one-class model.
    Train(ConfigArg),
    /// Model + features -> per-bin verdicts.
    Detect {
        #[command(flatten)]
        config: ConfigArg,
        /// Use a different model file than the config's output directory.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Score a different feature matrix (e.g. another dataset).
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Cross-evaluate models on datasets per an evaluation manifest.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Group events from a distance-matrix CSV.
    Cluster {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        restarts: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Summarize the artifacts in the output directory and emit plot CSVs.
    Report(ConfigArg),
    /// Print the bundled six-event accuracy matrix, its distance matrix and
    /// the k = 2 / k = 3 clusterings.
    ReproTables {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Features through report in one invocation.
    RunAll(ConfigArg),
}

fn main() -> ExitCode {
    // Usage problems exit 1; only I/O failures exit 2.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn load_config(arg: &ConfigArg, seed: Option<u64>, out: Option<&PathBuf>) -> Result<PipelineConfig, Error> {
    let mut config = PipelineConfig::load(&arg.config)?;
    if let Some(seed) = seed {
        config.evaluation.seed = seed;
    }
    if let Some(dir) = out {
        config.output.dir = dir.clone();
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<(), Error> {
    let seed = cli.seed;
    let out = cli.out.as_ref();
    match cli.command {
        Command::Ingest {
            input,
            output,
            strict,
        } => {
            let stats = pipeline::stage_ingest(&input, &output, strict)?;
            println!(
                "ingest: {} records read, {} accepted, {} skipped, {} malformed, {} events",
                stats.records_read,
                stats.records_accepted,
                stats.records_skipped,
                stats.records_malformed,
                stats.events_emitted
            );
        }
        Command::Synth {
            preset,
            output,
            scenario_seed,
        } => {
            let mut config = synth::preset(&preset).ok_or_else(|| {
                Error::InvalidParam(format!(
                    "unknown preset `{preset}`; available: {}",
                    synth::PRESET_NAMES.join(", ")
                ))
            })?;
            if let Some(s) = scenario_seed {
                config.seed = s;
            }
            let n = pipeline::stage_synth(&config, &output)?;
            println!("synth: {n} events -> {}", output.display());
        }
        Command::Features(arg) => {
            let config = load_config(&arg, seed, out)?;
            let matrix = pipeline::stage_features::<Real>(&config)?;
            println!(
                "features: {} bins x {} columns -> {}",
                matrix.nrows(),
                matrix.ncols(),
                config.out("features.csv").display()
            );
        }
        Command::Correlate(arg) => {
            let config = load_config(&arg, seed, out)?;
            let (augmented, emitted) = pipeline::stage_correlate::<Real>(&config)?;
            println!(
                "correlate: {emitted} significant pairs, {} columns -> {}",
                augmented.ncols(),
                config.out("augmented.csv").display()
            );
        }
        Command::Select(arg) => {
            let config = load_config(&arg, seed, out)?;
            let report = pipeline::stage_select::<Real>(&config)?;
            if report.selected_base.len() < report.n_base {
                eprintln!(
                    "warning: only {} base features available (requested {})",
                    report.selected_base.len(),
                    report.n_base
                );
            }
            if report.selected_corr.len() < report.n_corr {
                eprintln!(
                    "warning: only {} correlation features available (requested {})",
                    report.selected_corr.len(),
                    report.n_corr
                );
            }
            println!(
                "select: base [{}] corr [{}] -> {}",
                report.selected_base.join(", "),
                report.selected_corr.join(", "),
                config.out("selection.csv").display()
            );
        }
        Command::Train(arg) => {
            let config = load_config(&arg, seed, out)?;
            let (model, diagnostics) = pipeline::stage_train::<Real>(&config)?;
            println!(
                "train: nu = {}, gamma = {}, {} support vectors, {} iterations, converged = {} -> {}",
                model.nu,
                model.kernel.gamma,
                model.support_vectors.len(),
                diagnostics.iterations,
                diagnostics.converged,
                config.out("model.txt").display()
            );
            println!(
                "train: fraction of training bins scored abnormal = {:.4}",
                diagnostics.fraction_negative
            );
        }
        Command::Detect {
            config: arg,
            model,
            features,
        } => {
            let config = load_config(&arg, seed, out)?;
            let outcome =
                pipeline::stage_detect::<Real>(&config, model.as_deref(), features.as_deref())?;
            println!(
                "detect: {} bins, abnormal fraction {:.4} -> {}",
                outcome.decisions.len(),
                outcome.abnormal_fraction,
                config.out("verdicts.csv").display()
            );
        }
        Command::Evaluate { manifest, out: dir } => {
            let manifest = EvalManifest::load(&manifest)?;
            let (am, _) = pipeline::stage_evaluate::<Real>(&manifest, &dir)?;
            println!("evaluate: {} events -> {}", am.n(), dir.display());
        }
        Command::Cluster {
            dist,
            k,
            seed: cluster_seed,
            restarts,
            output,
        } => {
            let result =
                pipeline::stage_cluster::<Real>(&dist, k, seed.unwrap_or(cluster_seed), restarts, &output)?;
            print!("{}", pipeline::cluster_text(&result, k, seed.unwrap_or(cluster_seed)));
        }
        Command::Report(arg) => {
            let config = load_config(&arg, seed, out)?;
            let text = pipeline::stage_report::<Real>(&config)?;
            print!("{text}");
        }
        Command::ReproTables { out: dir, seed: rt_seed } => {
            let text = pipeline::repro_tables::<Real>(dir.as_deref(), seed.unwrap_or(rt_seed), 100)?;
            print!("{text}");
        }
        Command::RunAll(arg) => {
            let config = load_config(&arg, seed, out)?;
            let text = pipeline::run_all::<Real>(&config)?;
            print!("{text}");
        }
    }
    Ok(())
}
