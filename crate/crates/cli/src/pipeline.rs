//! The full experiment: split, label, train the baseline, then for every
//! copula kind and augmentation factor generate, label and retrain.

use std::path::Path;

use log::{error, info};
use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;

use copaug::dataset::{flatten, generate_surrogate, load_profiles_auto, save_profiles, split_shuffle, ProfileSet, Splits, Which};
use copaug::emulator::train_on_profiles;
use copaug::evaluation::{error_metrics, quantile_sorted, random_projection_report, ErrorMetrics};
use copaug::multicop::{CopulaKind, CopulaModel, FittedCopula};
use copaug::radiation::radiate_set;
use copaug::{Constants, Emulator};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::report::{self, DepthRow, LevelRow, ProjectionRow};
use crate::seeds::{derive_seed, Purpose};

/// Baseline (`kind == None`) or one copula kind at one augmentation factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Case {
    pub kind: Option<CopulaKind>,
    pub factor: usize,
}

impl Case {
    pub const BASELINE: Case = Case { kind: None, factor: 0 };

    pub fn label(&self) -> String {
        match self.kind {
            None => "baseline".into(),
            Some(k) => format!("{k}-x{}", self.factor),
        }
    }
}

/// One trained emulator scored on the test split.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub case: String,
    pub generation: Option<usize>,
    pub training: usize,
    pub seed: u64,
    pub train_profiles: usize,
    pub epochs: usize,
    pub best_epoch: usize,
    pub mb: f64,
    pub mae: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseResult {
    pub label: String,
    pub runs: Vec<RunRecord>,
    /// Reason the case was aborted.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct SummaryRow {
    case: String,
    status: String,
    runs: usize,
    mae_median: Option<f64>,
    mae_q25: Option<f64>,
    mae_q75: Option<f64>,
    mb_median: Option<f64>,
    mb_q25: Option<f64>,
    mb_q75: Option<f64>,
}

fn quartiles(mut v: Vec<f64>) -> Option<[f64; 3]> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some([0.5, 0.25, 0.75].map(|q| quantile_sorted(&v, q)))
}

impl CaseResult {
    pub fn median_mae(&self) -> Option<f64> {
        quartiles(self.runs.iter().map(|r| r.mae).collect()).map(|q| q[0])
    }

    pub fn median_abs_mb(&self) -> Option<f64> {
        quartiles(self.runs.iter().map(|r| r.mb.abs()).collect()).map(|q| q[0])
    }

    fn summary(&self) -> SummaryRow {
        let mae = quartiles(self.runs.iter().map(|r| r.mae).collect());
        let mb = quartiles(self.runs.iter().map(|r| r.mb).collect());
        SummaryRow {
            case: self.label.clone(),
            status: match &self.failure {
                None => "ok".into(),
                Some(_) => "failed".into(),
            },
            runs: self.runs.len(),
            mae_median: mae.map(|q| q[0]),
            mae_q25: mae.map(|q| q[1]),
            mae_q75: mae.map(|q| q[2]),
            mb_median: mb.map(|q| q[0]),
            mb_q25: mb.map(|q| q[1]),
            mb_q75: mb.map(|q| q[2]),
        }
    }
}

/// Input profiles from the configured file, or the surrogate generator.
pub fn load_data(cfg: &ExperimentConfig) -> CliResult<ProfileSet> {
    match &cfg.data.input {
        Some(path) => Ok(load_profiles_auto(path)?),
        None => {
            let seed = derive_seed(cfg.seed, Purpose::Data, "", 0, 0);
            Ok(generate_surrogate(cfg.data.profiles, cfg.grid(), seed)?)
        }
    }
}

/// Seeded split with every part labelled by the radiation model.
pub fn labelled_splits(cfg: &ExperimentConfig, data: &ProfileSet) -> CliResult<Splits> {
    let mut spec = cfg.split_spec()?;
    spec.seed = derive_seed(cfg.seed, Purpose::Split, "", 0, 0);
    let s = split_shuffle(data, &spec)?;
    let c = cfg.radiation_constants()?;
    Ok(Splits {
        train: radiate_set(&s.train, &c)?,
        validation: radiate_set(&s.validation, &c)?,
        test: radiate_set(&s.test, &c)?,
    })
}

pub fn fit_copula(cfg: &ExperimentConfig, kind: CopulaKind, train: &ProfileSet) -> CliResult<FittedCopula> {
    let x = flatten(train, Which::Inputs)?;
    let fitted = FittedCopula::fit(&x, &cfg.copula_spec(kind))?;
    if let CopulaModel::Vine(v) = &fitted.model {
        let mut hist = std::collections::BTreeMap::new();
        for (_, _, fit) in v.edges() {
            *hist.entry(fit.copula.family.name()).or_insert(0usize) += 1;
        }
        info!("vine edge families: {hist:?}");
    }
    Ok(fitted)
}

struct Scored {
    record: RunRecord,
    metrics: ErrorMetrics<f64>,
    diff: Array2<f64>,
    model: Emulator,
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    splits: &'a Splits,
    y_test: Array2<f64>,
}

impl Context<'_> {
    fn train_one(&self, label: &str, generation: Option<usize>, training: usize, train: &ProfileSet) -> CliResult<Scored> {
        let seed = derive_seed(self.cfg.seed, Purpose::Train, label, generation.unwrap_or(0), training);
        let tc = self.cfg.train_config(seed);
        let model: Emulator = train_on_profiles(train, &self.splits.validation, &self.cfg.training.hidden, &tc)?;
        let pred = model.predict_set(&self.splits.test)?;
        let metrics = error_metrics(self.y_test.view(), pred.values.view())?;
        let g = generation.map(|g| format!(" generation {g}")).unwrap_or_default();
        info!("{label}{g} repeat {training}: MAE {:.4} MB {:.4} after {} epochs", metrics.mae, metrics.mb, model.history.len());
        Ok(Scored {
            record: RunRecord {
                case: label.to_string(),
                generation,
                training,
                seed,
                train_profiles: train.len(),
                epochs: model.history.len(),
                best_epoch: model.best_epoch.unwrap_or(0),
                mb: metrics.mb,
                mae: metrics.mae,
            },
            metrics,
            diff: &self.y_test - &pred.values,
            model,
        })
    }

    fn train_repeats(&self, label: &str, generation: Option<usize>, train: &ProfileSet) -> CliResult<Vec<Scored>> {
        (0..self.cfg.training.repeats)
            .into_par_iter()
            .map(|r| self.train_one(label, generation, r, train))
            .collect()
    }
}

#[derive(Default)]
struct Reports {
    levels: Vec<LevelRow>,
    projection: Vec<ProjectionRow>,
    depth: Vec<DepthRow>,
}

/// Keeps the per-level rows of every run and the error matrix of the best one.
fn absorb(out: &Path, cfg: &ExperimentConfig, runs: Vec<Scored>, reports: &mut Reports, best: &mut Option<(f64, Array2<f64>)>) -> CliResult<Vec<RunRecord>> {
    let mut records = Vec::with_capacity(runs.len());
    for s in runs {
        let r = &s.record;
        reports.levels.extend(report::level_rows(&r.case, r.generation, r.training, &s.metrics));
        if cfg.training.save_models {
            let g = r.generation.map(|g| format!("-g{g}")).unwrap_or_default();
            s.model.save(&out.join(format!("models/emulator-{}{g}-r{}.json", r.case, r.training)))?;
        }
        if best.as_ref().is_none_or(|b| s.metrics.mae < b.0) {
            *best = Some((s.metrics.mae, s.diff));
        }
        records.push(s.record);
    }
    Ok(records)
}

fn create_dirs(out: &Path) -> CliResult<()> {
    for sub in ["", "data", "models", "synthetic"] {
        let p = out.join(sub);
        std::fs::create_dir_all(&p).map_err(|e| CliError::io(&p, e))?;
    }
    Ok(())
}

/// Runs every case and writes `results.csv`, `summary.csv`, `levels.csv`,
/// `projection.csv`, `depth.csv` and `manifest.json` under `out`.
pub fn run_pipeline(cfg: &ExperimentConfig, out: &Path) -> CliResult<Vec<CaseResult>> {
    cfg.validate()?;
    create_dirs(out)?;
    let config_path = out.join("config.toml");
    let text = toml::to_string(cfg).map_err(|e| CliError::config(e.to_string()))?;
    std::fs::write(&config_path, text).map_err(|e| CliError::io(&config_path, e))?;

    let data = load_data(cfg)?;
    let splits = labelled_splits(cfg, &data)?;
    info!(
        "{} profiles on {} levels: {} train, {} validation, {} test",
        data.len(),
        data.grid().n_full(),
        splits.train.len(),
        splits.validation.len(),
        splits.test.len()
    );
    for (name, set) in [("train", &splits.train), ("validation", &splits.validation), ("test", &splits.test)] {
        save_profiles(&out.join(format!("data/{name}.csv")), set)?;
    }
    let ctx = Context {
        cfg,
        y_test: flatten(&splits.test, Which::Outputs)?.values,
        splits: &splits,
    };
    let max_curves = cfg.evaluation.depth_curves;
    let mut reports = Reports::default();
    reports.depth.extend(report::set_depth_rows("train", &splits.train, max_curves)?);
    let mut results = Vec::new();

    let label = Case::BASELINE.label();
    let mut best = None;
    let baseline = ctx
        .train_repeats(&label, None, &splits.train)
        .and_then(|runs| absorb(out, cfg, runs, &mut reports, &mut best));
    results.push(finish(&label, baseline, best, &mut reports, max_curves)?);

    for &kind in &cfg.copula.kinds {
        let fitted = fit_copula(cfg, kind, &splits.train).and_then(|f| {
            f.save(&out.join(format!("models/copula-{kind}.json")))?;
            Ok(f)
        });
        for &factor in &cfg.copula.factors {
            let label = Case { kind: Some(kind), factor }.label();
            let mut best = None;
            let outcome = match &fitted {
                Ok(f) => run_case(&ctx, out, f, &label, factor, &mut reports, &mut best),
                Err(e) => Err(CliError::new(e.category, format!("copula fit failed: {}", e.message))),
            };
            results.push(finish(&label, outcome, best, &mut reports, max_curves)?);
        }
    }

    let records: Vec<&RunRecord> = results.iter().flat_map(|c| &c.runs).collect();
    report::write_csv(&out.join("results.csv"), records)?;
    report::write_csv(&out.join("summary.csv"), results.iter().map(CaseResult::summary))?;
    report::write_csv(&out.join("levels.csv"), &reports.levels)?;
    report::write_csv(&out.join("projection.csv"), &reports.projection)?;
    report::write_csv(&out.join("depth.csv"), &reports.depth)?;
    report::write_manifest(out, &cfg.hash(), cfg.seed)?;
    Ok(results)
}

fn finish(
    label: &str,
    outcome: CliResult<Vec<RunRecord>>,
    best: Option<(f64, Array2<f64>)>,
    reports: &mut Reports,
    max_curves: usize,
) -> CliResult<CaseResult> {
    Ok(match outcome {
        Ok(runs) => {
            if let Some((_, d)) = best {
                reports.depth.extend(report::error_depth_rows(&format!("{label}/best"), &d, max_curves)?);
            }
            CaseResult {
                label: label.to_string(),
                runs,
                failure: None,
            }
        }
        Err(e) => {
            error!("case {label} aborted: {e}");
            CaseResult {
                label: label.to_string(),
                runs: Vec::new(),
                failure: Some(e.to_string()),
            }
        }
    })
}

fn run_case(
    ctx: &Context<'_>,
    out: &Path,
    fitted: &FittedCopula,
    label: &str,
    factor: usize,
    reports: &mut Reports,
    best: &mut Option<(f64, Array2<f64>)>,
) -> CliResult<Vec<RunRecord>> {
    let cfg = ctx.cfg;
    let train = &ctx.splits.train;
    let c: Constants = cfg.radiation_constants()?;
    let mut records = Vec::new();
    for g in 0..cfg.copula.generation_repeats {
        let seed = derive_seed(cfg.seed, Purpose::Generate, label, g, 0);
        let synth = fitted.sample_profiles(factor * train.len(), train.grid(), seed)?;
        if synth.resorted_pressure > 0 {
            info!("{label} g{g}: re-sorted pressure in {} profiles", synth.resorted_pressure);
        }
        let synth = radiate_set(&synth.profiles, &c)?;
        save_profiles(&out.join(format!("synthetic/{label}-g{g}.csv")), &synth)?;
        if g == 0 {
            let real = flatten(train, Which::Inputs)?.values;
            let fake = flatten(&synth, Which::Inputs)?.values;
            let pseed = derive_seed(cfg.seed, Purpose::Projection, label, 0, 0);
            let r = random_projection_report(real.view(), fake.view(), cfg.evaluation.projection_iterations, pseed)?;
            reports.projection.extend(report::projection_rows(label, &r));
            reports.depth.extend(report::set_depth_rows(label, &synth, cfg.evaluation.depth_curves)?);
        }
        let augmented = train.concat(&synth)?;
        let runs = ctx.train_repeats(label, Some(g), &augmented)?;
        records.extend(absorb(out, cfg, runs, reports, best)?);
    }
    Ok(records)
}
