//! Thin command line front end over the pipeline stages. All diagnostics
//! go to stderr; data only ever goes to files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ppisplit::audit::{emit_experiment_report, emit_leakage_report, ReportFormat};
use ppisplit::pipeline::{
    default_config_toml, stage_audit, stage_calibrate, stage_cluster, stage_experiment,
    stage_extract, stage_split, PipelineConfig, PipelineError,
};
use ppisplit::splits::{Packing, SplitSpec, SplitStrategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl FormatArg {
    fn report_format(self) -> ReportFormat {
        match self {
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Csv => ReportFormat::Csv,
        }
    }

    fn extension(self) -> &'static str {
        match self {
            FormatArg::Json => "json",
            FormatArg::Csv => "csv",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ppisplit",
    version,
    about = "Extract protein-protein interfaces, embed them, and build \
             leakage-audited train/test splits"
)]
struct Cli {
    /// Configuration file (TOML); omitted keys take built-in defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Worker threads; 0 means one per available core.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,

    /// Overrides every seed in the configuration.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Report format for audit and experiment outputs.
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: FormatArg,

    /// Output path; each command has a default name in the working directory.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract qualifying interfaces from structure files or directories.
    Extract(ExtractArgs),
    /// Embed an interfaces artifact into fixed-length descriptors.
    Embed(EmbedArgs),
    /// Cluster chain sequences into families.
    ClusterSeq(ClusterSeqArgs),
    /// Partition a descriptor store into folds.
    Split(SplitArgs),
    /// Measure near-duplicate leakage between the folds of a split.
    Audit(AuditArgs),
    /// Repeatedly subsample the corpus and compare split strategies.
    Experiment(ExperimentArgs),
    /// Pick the duplicate threshold from labeled descriptor pairs.
    Calibrate(CalibrateArgs),
    /// Write a commented default configuration file.
    InitConfig,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    /// Structure files (.pdb/.ent/.cif/.mmcif, optionally .gz) or
    /// directories containing them.
    #[arg(required = true, value_name = "PATH")]
    inputs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct EmbedArgs {
    /// Interfaces artifact produced by `extract`.
    #[arg(value_name = "INTERFACES")]
    interfaces: PathBuf,
}

#[derive(Debug, Args)]
struct ClusterSeqArgs {
    /// FASTA of chain sequences (extract writes one as a sidecar).
    #[arg(value_name = "FASTA")]
    fasta: PathBuf,

    /// External clustering executable; omitted means the built-in method.
    #[arg(long, value_name = "PATH")]
    tool: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SplitArgs {
    /// Descriptor store produced by `embed`.
    #[arg(value_name = "STORE")]
    store: PathBuf,

    /// Grouping strategy; defaults to the configuration's [split] section.
    #[arg(long, value_name = "NAME")]
    strategy: Option<String>,

    /// Held-out fraction; switches the split to train/test mode.
    #[arg(long, value_name = "F")]
    test_fraction: Option<f64>,

    /// Number of folds; switches the split to cross-validation mode.
    #[arg(long, value_name = "K")]
    folds: Option<usize>,

    /// Group packing: "random" or "largest_first".
    #[arg(long, value_name = "NAME")]
    packing: Option<String>,

    /// Dates artifact (extract sidecar); needed by deposition_time.
    #[arg(long, value_name = "PATH")]
    dates: Option<PathBuf>,

    /// Clusters artifact from `cluster-seq`; needed by sequence_component.
    #[arg(long, value_name = "PATH")]
    clusters: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AuditArgs {
    /// Split artifact produced by `split`.
    #[arg(value_name = "SPLIT")]
    split: PathBuf,

    /// Descriptor store the split was built from.
    #[arg(value_name = "STORE")]
    store: PathBuf,

    /// Fold to treat as training data (with --test-fold).
    #[arg(long, value_name = "FOLD", requires = "test_fold")]
    train_fold: Option<String>,

    /// Fold to treat as held-out data (with --train-fold).
    #[arg(long, value_name = "FOLD", requires = "train_fold")]
    test_fold: Option<String>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Descriptor store covering the whole corpus.
    #[arg(value_name = "STORE")]
    store: PathBuf,

    /// Dates artifact (extract sidecar).
    #[arg(long, value_name = "PATH")]
    dates: PathBuf,

    /// Chain FASTA (extract sidecar).
    #[arg(long, value_name = "PATH")]
    fasta: PathBuf,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    /// JSON array of {"a", "b", "is_duplicate"} descriptor pairs.
    #[arg(value_name = "PAIRS")]
    pairs: PathBuf,

    /// Descriptor store holding the referenced ids.
    #[arg(value_name = "STORE")]
    store: PathBuf,
}

fn parse_strategy(name: &str) -> Result<SplitStrategy, String> {
    SplitStrategy::ALL
        .into_iter()
        .find(|s| s.name() == name)
        .ok_or_else(|| {
            let known: Vec<&str> = SplitStrategy::ALL.iter().map(|s| s.name()).collect();
            format!("unknown strategy {name:?}; expected one of: {}", known.join(", "))
        })
}

fn parse_packing(name: &str) -> Result<Packing, String> {
    match name {
        "random" => Ok(Packing::Random),
        "largest_first" => Ok(Packing::LargestFirst),
        other => Err(format!(
            "unknown packing {other:?}; expected \"random\" or \"largest_first\""
        )),
    }
}

/// Applies command line split overrides on top of the configured spec.
fn resolve_split_spec(config: &PipelineConfig, args: &SplitArgs) -> Result<SplitSpec, String> {
    let mut spec = config.split.clone();
    if let Some(name) = &args.strategy {
        spec.strategy = parse_strategy(name)?;
    }
    if let Some(f) = args.test_fraction {
        spec.test_fraction = Some(f);
        spec.n_folds = None;
    }
    if let Some(k) = args.folds {
        spec.n_folds = Some(k);
        spec.test_fraction = None;
    }
    if args.test_fraction.is_some() && args.folds.is_some() {
        return Err("--test-fraction and --folds are mutually exclusive".to_string());
    }
    if let Some(name) = &args.packing {
        spec.packing = parse_packing(name)?;
    }
    Ok(spec)
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, PipelineError> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.split.seed = seed;
        config.experiment.seed = seed;
        for spec in &mut config.experiment.strategies {
            spec.seed = seed;
        }
    }
    Ok(config)
}

fn default_out(name: &str) -> PathBuf {
    PathBuf::from(name)
}

fn out_path(cli: &Cli, default_name: &str) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| default_out(default_name))
}

fn write_report(path: &Path, render: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<(), PipelineError> {
    let mut buffer = Vec::new();
    render(&mut buffer)?;
    fs::write(path, buffer)?;
    Ok(())
}

fn run(cli: &Cli) -> Result<ExitCode, String> {
    let config = load_config(cli).map_err(|e| e.to_string())?;

    let workers = cli.workers.unwrap_or(config.io.workers);
    if workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| format!("thread pool: {e}"))?;
    }

    match &cli.command {
        Command::Extract(args) => {
            let out = out_path(cli, "interfaces.ndjson");
            let outcome =
                stage_extract(&args.inputs, &config, &out).map_err(|e| e.to_string())?;
            for (path, reason) in &outcome.failures {
                log::warn!("skipped {}: {reason}", path.display());
            }
            log::info!(
                "{} interfaces from {} files ({} skipped) -> {}",
                outcome.interfaces.len(),
                outcome.n_files,
                outcome.failures.len(),
                out.display()
            );
            if outcome.interfaces.is_empty() {
                log::error!("no interfaces were extracted");
                return Ok(ExitCode::FAILURE);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Embed(args) => {
            let out = out_path(cli, "descriptors.store");
            let store = ppisplit::pipeline::stage_embed(&args.interfaces, &config, &out)
                .map_err(|e| e.to_string())?;
            log::info!("{} descriptors -> {}", store.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::ClusterSeq(args) => {
            let out = out_path(cli, "clusters.json");
            let clusters = stage_cluster(&args.fasta, &config, args.tool.as_deref(), &out)
                .map_err(|e| e.to_string())?;
            log::info!(
                "{} chains in {} clusters -> {}",
                clusters.assignments.len(),
                clusters.representatives.len(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Split(args) => {
            let out = out_path(cli, "split.json");
            let spec = resolve_split_spec(&config, args)?;
            let split = stage_split(
                &args.store,
                args.dates.as_deref(),
                args.clusters.as_deref(),
                &spec,
                &config,
                &out,
            )
            .map_err(|e| e.to_string())?;
            let sizes: Vec<String> = split
                .folds
                .iter()
                .map(|(name, members)| format!("{name}={}", members.len()))
                .collect();
            log::info!(
                "{} split ({}) -> {}",
                spec.strategy.name(),
                sizes.join(", "),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Audit(args) => {
            let out = out_path(cli, &format!("leakage.{}", cli.format.extension()));
            let fold_pair = match (&args.train_fold, &args.test_fold) {
                (Some(train), Some(test)) => Some((train.as_str(), test.as_str())),
                _ => None,
            };
            let report = stage_audit(&args.split, &args.store, &config, fold_pair)
                .map_err(|e| e.to_string())?;
            write_report(&out, |w| {
                emit_leakage_report(&report, cli.format.report_format(), w)
            })
            .map_err(|e| e.to_string())?;
            log::info!(
                "mean leakage {:.4} over {} fold pair(s) -> {}",
                report.mean_leakage_fraction,
                report.fold_pairs.len(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Experiment(args) => {
            let out = out_path(cli, &format!("experiment.{}", cli.format.extension()));
            let result = stage_experiment(&args.store, &args.dates, &args.fasta, &config)
                .map_err(|e| e.to_string())?;
            write_report(&out, |w| {
                emit_experiment_report(&result, cli.format.report_format(), w)
            })
            .map_err(|e| e.to_string())?;
            for warning in &result.warnings {
                log::warn!("{warning}");
            }
            for strategy in &result.strategies {
                match strategy.mean {
                    Some(mean) => log::info!(
                        "{}: mean leakage {:.4}",
                        strategy.strategy_name,
                        mean
                    ),
                    None => log::warn!("{}: every sample failed", strategy.strategy_name),
                }
            }
            log::info!("experiment report -> {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Calibrate(args) => {
            let out = out_path(cli, "calibration.json");
            let calibration = stage_calibrate(&args.pairs, &args.store, &config, &out)
                .map_err(|e| e.to_string())?;
            log::info!(
                "threshold {:.6} (F1 {:.4}) -> {}",
                calibration.tau,
                calibration.f1,
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::InitConfig => {
            let out = out_path(cli, "ppisplit.toml");
            if out.exists() {
                return Err(format!("{} already exists; refusing to overwrite", out.display()));
            }
            fs::write(&out, default_config_toml()).map_err(|e| e.to_string())?;
            log::info!("default configuration -> {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(message) => {
            log::error!("{message}");
            ExitCode::FAILURE
        }
    }
}
