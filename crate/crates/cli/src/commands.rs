use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;

use copaug::dataset::{flatten, load_profiles_auto, save_profiles, LevelGrid, Which};
use copaug::evaluation::error_metrics;
use copaug::multicop::{CopulaKind, FittedCopula};
use copaug::radiation::radiate_set;
use copaug::Emulator;

use crate::config::ExperimentConfig;
use crate::error::{Category, CliError, CliResult};
use crate::pipeline::{fit_copula, labelled_splits, load_data, run_pipeline};
use crate::report::{self, MetricRow};
use crate::seeds::{derive_seed, Purpose};

#[derive(Debug, Parser)]
#[command(name = "copaug", version, about = "Copula-based training-set augmentation for radiation emulators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Experiment configuration (TOML); defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the master seed of the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a surrogate profile file.
    GenData {
        #[command(flatten)]
        common: Common,
    },
    /// Fit marginals and a copula to the training split.
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        kind: CopulaKind,
        /// Profile file; otherwise the configured data source.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Draw synthetic profiles from a fitted copula.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        n: usize,
    },
    /// Label profiles with downwelling longwave fluxes.
    Radiate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
    },
    /// Train one emulator on labelled profiles.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        val: PathBuf,
        #[arg(long, default_value = "baseline")]
        case: String,
        #[arg(long, default_value_t = 0)]
        repeat: usize,
    },
    /// Score a trained emulator on labelled test profiles.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, default_value = "baseline")]
        case: String,
        #[arg(long, default_value_t = 0)]
        repeat: usize,
    },
    /// Run the whole experiment.
    Pipeline {
        #[command(flatten)]
        common: Common,
    },
}

fn setup(common: &Common) -> CliResult<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    std::fs::create_dir_all(&common.out).map_err(|e| CliError::io(&common.out, e))?;
    Ok(cfg)
}

fn finish(common: &Common, cfg: &ExperimentConfig) -> CliResult<()> {
    report::write_manifest(&common.out, &cfg.hash(), cfg.seed)
}

fn load(path: &Path) -> CliResult<copaug::dataset::ProfileSet> {
    if !path.exists() {
        return Err(CliError::new(Category::Io, format!("{}: no such file", path.display())));
    }
    Ok(load_profiles_auto(path)?)
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::GenData { common } => {
            let cfg = setup(&common)?;
            let data = load_data(&ExperimentConfig {
                data: copaug_data_without_input(&cfg),
                ..cfg.clone()
            })?;
            save_profiles(&common.out.join("profiles.csv"), &data)?;
            println!("{} rows, {} input columns", data.len(), data.grid().input_width());
            finish(&common, &cfg)
        }
        Command::Fit { common, kind, data } => {
            let mut cfg = setup(&common)?;
            if data.is_some() {
                cfg.data.input = data;
            }
            let profiles = load_data(&cfg)?;
            cfg.data.levels = profiles.grid().n_full();
            let splits = labelled_splits(&cfg, &profiles)?;
            let fitted = fit_copula(&cfg, kind, &splits.train)?;
            let path = common.out.join(format!("copula-{kind}.json"));
            fitted.save(&path)?;
            println!("fitted {kind} copula on {} profiles ({} columns, {} active)", splits.train.len(), fitted.ncols(), fitted.active.len());
            finish(&common, &cfg)
        }
        Command::Sample { common, model, n } => {
            let cfg = setup(&common)?;
            let fitted = FittedCopula::load(&model)?;
            if fitted.ncols() % 3 != 0 {
                return Err(CliError::new(Category::Artifact, "copula columns are not a whole number of levels"));
            }
            let grid = LevelGrid::new(fitted.ncols() / 3)?;
            let seed = derive_seed(cfg.seed, Purpose::Generate, "sample", 0, 0);
            let synth = fitted.sample_profiles(n, grid, seed)?;
            save_profiles(&common.out.join("synthetic.csv"), &synth.profiles)?;
            println!("{n} profiles, {} with re-sorted pressure", synth.resorted_pressure);
            finish(&common, &cfg)
        }
        Command::Radiate { common, input } => {
            let cfg = setup(&common)?;
            let set = radiate_set(&load(&input)?, &cfg.radiation_constants()?)?;
            save_profiles(&common.out.join("radiated.csv"), &set)?;
            println!("{} profiles labelled", set.len());
            finish(&common, &cfg)
        }
        Command::Train { common, train, val, case, repeat } => {
            let cfg = setup(&common)?;
            let (t, v) = (load(&train)?, load(&val)?);
            let seed = derive_seed(cfg.seed, Purpose::Train, &case, 0, repeat);
            let model: Emulator = copaug::emulator::train_on_profiles(&t, &v, &cfg.training.hidden, &cfg.train_config(seed))?;
            let best = model.best_epoch.map(|b| model.history[b].val);
            model.save(&common.out.join("emulator.json"))?;
            println!("trained {} epochs, best validation loss {best:?}", model.history.len());
            finish(&common, &cfg)
        }
        Command::Eval { common, model, test, case, repeat } => {
            let cfg = setup(&common)?;
            if !model.exists() {
                return Err(CliError::new(Category::Artifact, format!("{}: model not found", model.display())));
            }
            let m = Emulator::load(&model)?;
            let test = load(&test)?;
            let y = flatten(&test, Which::Outputs)?.values;
            let pred = m.predict_set(&test)?;
            let metrics = error_metrics(y.view(), pred.values.view())?;
            let row = MetricRow {
                case: case.clone(),
                repeat,
                mb: metrics.mb,
                mae: metrics.mae,
            };
            report::write_csv(&common.out.join("metrics.csv"), [&row])?;
            report::write_csv(&common.out.join("levels.csv"), report::level_rows(&case, None, repeat, &metrics))?;
            println!("{case} repeat {repeat}: MB {} MAE {}", row.mb, row.mae);
            finish(&common, &cfg)
        }
        Command::Pipeline { common } => {
            let cfg = setup(&common)?;
            let results = run_pipeline(&cfg, &common.out)?;
            for c in &results {
                match (&c.failure, c.median_mae()) {
                    (Some(f), _) => println!("{}: failed ({f})", c.label),
                    (None, Some(m)) => println!("{}: {} runs, median MAE {m:.4}", c.label, c.runs.len()),
                    (None, None) => println!("{}: no runs", c.label),
                }
            }
            info!("outputs written to {}", common.out.display());
            Ok(())
        }
    }
}

/// gen-data always writes surrogate profiles, whatever the input setting.
fn copaug_data_without_input(cfg: &ExperimentConfig) -> crate::config::DataConfig {
    crate::config::DataConfig {
        input: None,
        ..cfg.data.clone()
    }
}
