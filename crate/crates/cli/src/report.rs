//! Delimited report files and the output manifest.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use serde::Serialize;
use sha2::{Digest, Sha256};

use copaug::dataset::{flatten, ProfileSet, Which};
use copaug::evaluation::{band_depth, depth_groups, quantile_sorted, DepthGroup, ErrorMetrics, ProjectionReport, ERROR_QUANTILES};

use crate::error::{CliError, CliResult};

pub fn write_csv<S: Serialize>(path: &Path, rows: impl IntoIterator<Item = S>) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub case: String,
    pub repeat: usize,
    pub mb: f64,
    pub mae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelRow {
    pub case: String,
    pub generation: Option<usize>,
    pub repeat: usize,
    pub level: usize,
    pub q_low: f64,
    pub q_mid: f64,
    pub q_high: f64,
}

pub fn level_rows(case: &str, generation: Option<usize>, repeat: usize, m: &ErrorMetrics<f64>) -> Vec<LevelRow> {
    m.levels
        .iter()
        .map(|l| LevelRow {
            case: case.to_string(),
            generation,
            repeat,
            level: l.level,
            q_low: l.low,
            q_mid: l.mid,
            q_high: l.high,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionRow {
    pub case: String,
    pub statistic: &'static str,
    pub iteration: usize,
    pub s_real: f64,
    pub s_synth: f64,
}

pub fn projection_rows(case: &str, r: &ProjectionReport<f64>) -> Vec<ProjectionRow> {
    r.rows()
        .map(|(s, iteration, s_real, s_synth)| ProjectionRow {
            case: case.to_string(),
            statistic: s.name(),
            iteration,
            s_real,
            s_synth,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthRow {
    pub source: String,
    pub quantity: &'static str,
    pub group: &'static str,
    pub level: usize,
    pub q_low: f64,
    pub q_mid: f64,
    pub q_high: f64,
}

/// Per-level quantiles of each depth group plus the median curve.
pub fn depth_profile(source: &str, quantity: &'static str, curves: ArrayView2<f64>) -> CliResult<Vec<DepthRow>> {
    let ranking = depth_groups(&band_depth(curves)?)?;
    let mut rows = Vec::new();
    for level in 0..curves.ncols() {
        let v = curves[[ranking.median, level]];
        rows.push(DepthRow {
            source: source.to_string(),
            quantity,
            group: "median",
            level,
            q_low: v,
            q_mid: v,
            q_high: v,
        });
    }
    for (group, name) in [(DepthGroup::Central, "central"), (DepthGroup::Middle, "middle"), (DepthGroup::Outer, "outer")] {
        let members = ranking.members(group);
        if members.is_empty() {
            continue;
        }
        let block = curves.select(Axis(0), &members);
        for (level, col) in block.axis_iter(Axis(1)).enumerate() {
            let mut s = col.to_vec();
            s.sort_by(f64::total_cmp);
            let [lo, mid, hi] = ERROR_QUANTILES.map(|q| quantile_sorted(&s, q));
            rows.push(DepthRow {
                source: source.to_string(),
                quantity,
                group: name,
                level,
                q_low: lo,
                q_mid: mid,
                q_high: hi,
            });
        }
    }
    Ok(rows)
}

/// Depth profiles of every quantity of the first `max_curves` profiles.
pub fn set_depth_rows(source: &str, set: &ProfileSet, max_curves: usize) -> CliResult<Vec<DepthRow>> {
    let take: Vec<usize> = (0..set.len().min(max_curves)).collect();
    if take.len() < 3 {
        return Ok(Vec::new());
    }
    let sub = set.select(&take);
    let n = set.grid().n_full();
    let x = flatten(&sub, Which::Inputs)?.values;
    let mut rows = Vec::new();
    for (k, q) in ["T", "p", "tauc"].into_iter().enumerate() {
        rows.extend(depth_profile(source, q, x.slice(ndarray::s![.., k * n..(k + 1) * n]))?);
    }
    if sub.fluxes().is_some() {
        let y = flatten(&sub, Which::Outputs)?.values;
        rows.extend(depth_profile(source, "L", y.view())?);
    }
    Ok(rows)
}

pub fn error_depth_rows(source: &str, d: &Array2<f64>, max_curves: usize) -> CliResult<Vec<DepthRow>> {
    let n = d.nrows().min(max_curves);
    if n < 3 {
        return Ok(Vec::new());
    }
    depth_profile(source, "error", d.slice(ndarray::s![0..n, ..]))
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    version: u32,
    config_hash: &'a str,
    seed: u64,
    /// Relative path to SHA-256 of the file.
    artifacts: BTreeMap<String, String>,
}

/// Lists every file under `out` (except the manifest itself) with its digest.
pub fn write_manifest(out: &Path, config_hash: &str, seed: u64) -> CliResult<()> {
    let mut artifacts = BTreeMap::new();
    let mut stack = vec![out.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).map_err(|e| CliError::io(&dir, e))? {
            let path = entry.map_err(|e| CliError::io(&dir, e))?.path();
            if path.is_dir() {
                stack.push(path);
                continue;
            }
            let rel = path.strip_prefix(out).expect("under out").to_string_lossy().replace('\\', "/");
            if rel != "manifest.json" {
                artifacts.insert(rel, sha256_file(&path)?);
            }
        }
    }
    let m = Manifest {
        version: 1,
        config_hash,
        seed,
        artifacts,
    };
    let path = out.join("manifest.json");
    let text = serde_json::to_string_pretty(&m).expect("manifest serializes");
    std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
}
