//! `uwbdetect generate | run | report`.
//!
//! Output directory layout:
//!
//! ```text
//! datasets/<id>_train.uwbd        datasets/<id>_train.meta.toml
//! datasets/<id>_test.uwbd         datasets/<id>_test.meta.toml
//! reports/<id>.json
//! models/<id>_<estimator>.uwbm    only with --save-models
//! aggregate.csv
//! summary.csv                     written by `report`
//! ```

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{parse_estimators, ExperimentConfig, PlanEntry};
use crate::dataset::{write_atomic, DataType, LabeledDataset, FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::estimators::TrainedModel;
use crate::labeling::{LabelScheme, SchemeKind};
use crate::modelsel::{run_experiment_with_models, EvalReport};
use crate::report;
use crate::sigproc::derive_dataset;
use crate::synth::{generate_dataset, Scenario, TargetModel};

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_CONFIG: u8 = 3;
pub const EXIT_MISSING_INPUT: u8 = 4;
pub const EXIT_ESTIMATOR_FAILED: u8 = 5;

pub const DATASETS_DIR: &str = "datasets";
pub const MODELS_DIR: &str = "models";

#[derive(Debug, Parser)]
#[command(name = "uwbdetect", version, about = "Obstacle detection on synthetic UWB radar scans")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize train and test datasets for every plan entry.
    Generate(GenerateArgs),
    /// Grid-search, fit and score the estimators on generated datasets.
    Run(RunArgs),
    /// Rank estimators per dataset from the reports of a run.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataTypeArg {
    Raw,
    Baseband,
    MotionFiltered,
    All,
}

impl DataTypeArg {
    fn select(self, configured: &[DataType]) -> Vec<DataType> {
        match self {
            DataTypeArg::Raw => vec![DataType::Raw],
            DataTypeArg::Baseband => vec![DataType::Baseband],
            DataTypeArg::MotionFiltered => vec![DataType::MotionFiltered],
            DataTypeArg::All => configured.to_vec(),
        }
    }
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Experiment config (TOML). Built-in defaults when omitted.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` of the config.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, value_name = "TYPE", default_value = "all")]
    pub data_type: DataTypeArg,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Overrides the data seed.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Overrides the estimator seed. Splits and folds keep their seeds.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Comma-separated estimator names, e.g. `kNN,RF`.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub estimators: Option<Vec<String>>,
    /// Also write every refit model.
    #[arg(long)]
    pub save_models: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Run directory; falls back to --out, then to the config.
    #[arg(value_name = "DIR")]
    pub dir: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::InvalidParam { .. } => EXIT_CONFIG,
        Error::MissingInput(_) => EXIT_MISSING_INPUT,
        _ => EXIT_FAILURE,
    }
}

pub fn main_with(cli: Cli) -> ExitCode {
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(&a).map(|_| 0),
        Command::Run(a) => cmd_run(&a).map(|failed| if failed > 0 { EXIT_ESTIMATOR_FAILED } else { 0 }),
        Command::Report(a) => cmd_report(&a).map(|_| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load_config(path: Option<&Path>, out: Option<&Path>) -> Result<ExperimentConfig> {
    let mut cfg = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(o) = out {
        cfg.output_dir = o.to_path_buf();
    }
    Ok(cfg)
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        b = b.num_threads(n);
    }
    let pool = b.build().map_err(|e| Error::invalid(e.to_string()))?;
    Ok(pool.install(f))
}

pub fn dataset_path(out: &Path, id: &str, role: &str) -> PathBuf {
    out.join(DATASETS_DIR).join(format!("{id}_{role}.uwbd"))
}

fn meta_path(out: &Path, id: &str, role: &str) -> PathBuf {
    out.join(DATASETS_DIR).join(format!("{id}_{role}.meta.toml"))
}

#[derive(Serialize)]
struct DatasetMeta<'a> {
    dataset_id: String,
    role: &'a str,
    format_version: u16,
    data_type: DataType,
    n_examples: usize,
    n_bins: usize,
    class_counts: Vec<usize>,
    /// Examples removed because the derived scan was constant.
    dropped: usize,
    n_per_class: usize,
    /// Hex, since TOML integers are signed.
    seed: String,
    scenario: &'a Scenario,
    labeling: LabelScheme,
    target: &'a TargetModel,
}

fn plan(cfg: &ExperimentConfig, data_type: DataTypeArg) -> Vec<PlanEntry> {
    let types = data_type.select(&cfg.generate.data_types);
    cfg.plan()
        .into_iter()
        .filter(|e| types.contains(&e.data_type))
        .collect()
}

/// Returns the paths of the written dataset files.
pub fn cmd_generate(args: &GenerateArgs) -> Result<Vec<PathBuf>> {
    let mut cfg = load_config(args.common.config.as_deref(), args.common.out.as_deref())?;
    if let Some(s) = args.seed {
        cfg.seeds.data = Some(s);
    }
    let types = args.common.data_type.select(&cfg.generate.data_types);
    let groups: Vec<(&Scenario, SchemeKind)> = cfg
        .scenarios
        .iter()
        .flat_map(|s| cfg.generate.schemes.iter().map(move |&k| (s, k)))
        .collect();
    let out = cfg.output_dir.clone();
    let written = with_pool(args.common.jobs, || {
        groups
            .par_iter()
            .map(|&(scenario, kind)| generate_group(&cfg, &out, scenario, kind, &types))
            .collect::<Result<Vec<_>>>()
    })??;
    let written: Vec<PathBuf> = written.into_iter().flatten().collect();
    eprintln!("wrote {} dataset files to {}", written.len(), out.join(DATASETS_DIR).display());
    Ok(written)
}

fn generate_group(
    cfg: &ExperimentConfig,
    out: &Path,
    scenario: &Scenario,
    kind: SchemeKind,
    types: &[DataType],
) -> Result<Vec<PathBuf>> {
    let scheme = cfg.labeling.scheme(kind);
    let (train_seed, test_seed) = cfg.dataset_seeds(&scenario.name, kind);
    let mut written = Vec::new();
    for (role, n_per_class, seed) in [
        ("train", cfg.generate.n_per_class, train_seed),
        ("test", cfg.generate.test_n_per_class, test_seed),
    ] {
        let raw = generate_dataset(scenario, &scheme, &cfg.target, n_per_class, seed)?;
        for &dt in types {
            let derived = derive_dataset(&raw, dt)?;
            let ds = derived.dataset;
            let id = ds.id();
            let path = dataset_path(out, &id, role);
            ds.write_file(&path)?;
            let meta = DatasetMeta {
                dataset_id: id.clone(),
                role,
                format_version: FORMAT_VERSION,
                data_type: dt,
                n_examples: ds.len(),
                n_bins: ds.n_bins(),
                class_counts: ds.class_counts(),
                dropped: derived.dropped,
                n_per_class,
                seed: format!("{seed:#018x}"),
                scenario,
                labeling: scheme,
                target: &cfg.target,
            };
            let text = toml::to_string_pretty(&meta).map_err(|e| Error::Format(e.to_string()))?;
            write_atomic(&meta_path(out, &id, role), text.as_bytes())?;
            written.push(path);
        }
    }
    Ok(written)
}

fn read_dataset(path: &Path) -> Result<LabeledDataset> {
    if !path.is_file() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    LabeledDataset::read_file(path)
}

/// Returns the number of failed estimator reports.
pub fn cmd_run(args: &RunArgs) -> Result<usize> {
    let mut cfg = load_config(args.common.config.as_deref(), args.common.out.as_deref())?;
    if let Some(s) = args.seed {
        cfg.seeds.estimator = Some(s);
    }
    if let Some(names) = &args.estimators {
        parse_estimators(names)?;
        cfg.evaluation.estimators = names.clone();
    }
    let settings = cfg.settings()?;
    let out = cfg.output_dir.clone();
    let entries = plan(&cfg, args.common.data_type);
    for e in &entries {
        for role in ["train", "test"] {
            let p = dataset_path(&out, &e.id(), role);
            if !p.is_file() {
                return Err(Error::MissingInput(p));
            }
        }
    }

    let results = with_pool(args.common.jobs, || {
        entries
            .par_iter()
            .map(|e| {
                let id = e.id();
                let train = read_dataset(&dataset_path(&out, &id, "train"))?;
                let test = read_dataset(&dataset_path(&out, &id, "test"))?;
                let res = run_experiment_with_models(&train, &test, &settings)?;
                eprintln!("finished {id}");
                Ok(res)
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let mut all: Vec<EvalReport> = Vec::new();
    for res in results {
        let reports: Vec<EvalReport> = res.iter().map(|(r, _)| r.clone()).collect();
        report::write_dataset_reports(&out, &reports)?;
        if args.save_models {
            for (r, m) in &res {
                if let Some(m) = m {
                    save_model(&out, r, m)?;
                }
            }
        }
        all.extend(reports);
    }
    let failed = all.iter().filter(|r| !r.is_ok()).count();
    for r in all.iter().filter(|r| !r.is_ok()) {
        eprintln!(
            "estimator {} failed on {}: {}",
            r.estimator.short_name(),
            r.dataset_id,
            r.error.as_deref().unwrap_or("unknown error")
        );
    }
    let agg = out.join(report::AGGREGATE_FILE);
    write_atomic(&agg, report::aggregate_csv(&all).as_bytes())?;
    eprintln!("wrote {} reports and {}", all.len(), agg.display());
    Ok(failed)
}

fn save_model(out: &Path, r: &EvalReport, m: &TrainedModel) -> Result<()> {
    let path = out
        .join(MODELS_DIR)
        .join(format!("{}_{}.uwbm", r.dataset_id, r.estimator.short_name()));
    m.save(&path)
}

pub fn cmd_report(args: &ReportArgs) -> Result<PathBuf> {
    let dir = match (&args.dir, &args.out) {
        (Some(d), _) | (None, Some(d)) => d.clone(),
        (None, None) => load_config(args.config.as_deref(), None)?.output_dir,
    };
    let reports = report::load_reports(&dir)?;
    print!("{}", report::summary_text(&reports));
    let path = dir.join(report::SUMMARY_FILE);
    write_atomic(&path, report::summary_csv(&reports).as_bytes())?;
    Ok(path)
}
