//! Multivariate copulas on pseudo-observations (Gaussian and regular vine)
//! and the fit-then-simulate synthesis of new profiles.

mod gaussian;
mod vine;

use std::path::Path;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

pub use gaussian::{GaussianCopula, EIGEN_FLOOR};
pub use vine::{fit_vine, select_structure, Edge, EdgeFit, VineModel, VineOptions, VineStructure, SIM_BLOCK};

use crate::bicop::{Family, FitOptions};
use crate::dataset::{flatten, unflatten, ColumnLabel, DataMatrix, LevelGrid, ProfileSet, Which};
use crate::error::{Error, Result};
use crate::marginals::{pseudo_observations, EmpiricalMarginal, UMatrix};

/// Version written into model artifacts.
pub const ARTIFACT_VERSION: u32 = 1;

/// Feature count above which vines are truncated unless configured otherwise.
pub const AUTO_TRUNCATION_ABOVE: usize = 60;
pub const AUTO_TRUNCATION_LEVEL: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CopulaKind {
    Gaussian,
    VineParametric,
}

impl std::fmt::Display for CopulaKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CopulaKind::Gaussian => "gaussian",
            CopulaKind::VineParametric => "vine-parametric",
        })
    }
}

impl std::str::FromStr for CopulaKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(CopulaKind::Gaussian),
            "vine-parametric" | "vine" => Ok(CopulaKind::VineParametric),
            other => Err(Error::invalid(format!("unknown copula kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopulaSpec {
    pub kind: CopulaKind,
    pub catalogue: Vec<Family>,
    /// Number of fitted vine trees; `None` picks the size-based default.
    pub truncation: Option<usize>,
}

impl CopulaSpec {
    pub fn gaussian() -> Self {
        Self {
            kind: CopulaKind::Gaussian,
            catalogue: Family::ALL.to_vec(),
            truncation: None,
        }
    }

    pub fn vine() -> Self {
        Self {
            kind: CopulaKind::VineParametric,
            ..Self::gaussian()
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.kind == CopulaKind::VineParametric && self.catalogue.is_empty() {
            return Err(Error::invalid("vine copula needs a nonempty family catalogue"));
        }
        if self.truncation == Some(0) {
            return Err(Error::invalid("truncation level must be at least 1"));
        }
        Ok(())
    }

    /// Truncation applied to a vine on `d` variables.
    pub fn truncation_for(&self, d: usize) -> Option<usize> {
        self.truncation
            .or((d > AUTO_TRUNCATION_ABOVE).then_some(AUTO_TRUNCATION_LEVEL))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CopulaModel {
    Gaussian(GaussianCopula),
    Vine(VineModel),
}

impl CopulaModel {
    pub fn fit(u: &UMatrix, spec: &CopulaSpec) -> Result<Self> {
        spec.check()?;
        match spec.kind {
            CopulaKind::Gaussian => GaussianCopula::fit(u).map(CopulaModel::Gaussian),
            CopulaKind::VineParametric => {
                let opts = VineOptions {
                    fit: FitOptions::with_catalogue(&spec.catalogue),
                    truncation: spec.truncation_for(u.ncols()),
                };
                fit_vine(u, &opts).map(CopulaModel::Vine)
            }
        }
    }

    pub fn kind(&self) -> CopulaKind {
        match self {
            CopulaModel::Gaussian(_) => CopulaKind::Gaussian,
            CopulaModel::Vine(_) => CopulaKind::VineParametric,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            CopulaModel::Gaussian(g) => g.dim(),
            CopulaModel::Vine(v) => v.dim(),
        }
    }

    pub fn simulate(&self, n: usize, seed: u64) -> Result<UMatrix> {
        match self {
            CopulaModel::Gaussian(g) => g.simulate(n, seed),
            CopulaModel::Vine(v) => v.simulate(n, seed),
        }
    }
}

/// Marginals plus copula for one data matrix. Constant columns bypass the
/// copula and are reproduced as constants.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedCopula {
    pub labels: Vec<ColumnLabel>,
    pub marginals: Vec<EmpiricalMarginal>,
    /// Columns modelled by the copula, ascending.
    pub active: Vec<usize>,
    pub model: CopulaModel,
}

/// Synthetic profiles and how many pressure columns had to be re-sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub profiles: ProfileSet,
    pub resorted_pressure: usize,
}

#[derive(Serialize, Deserialize)]
struct Artifact {
    version: u32,
    kind: CopulaKind,
    d: usize,
    labels: Vec<String>,
    active: Vec<usize>,
    marginals: Vec<EmpiricalMarginal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    correlation: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vine: Option<VineModel>,
}

impl FittedCopula {
    pub fn fit(data: &DataMatrix, spec: &CopulaSpec) -> Result<Self> {
        spec.check()?;
        if data.nrows() < 10 {
            return Err(Error::invalid(format!("copula fit needs at least 10 rows, got {}", data.nrows())));
        }
        let marginals = data
            .values
            .axis_iter(Axis(1))
            .map(|c| EmpiricalMarginal::fit(&c.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        let active: Vec<usize> = (0..marginals.len()).filter(|&j| !marginals[j].is_constant()).collect();
        let sub = data.values.select(Axis(1), &active);
        let u = pseudo_observations(&sub)?;
        let model = CopulaModel::fit(&u, spec)?;
        Ok(Self {
            labels: data.labels.clone(),
            marginals,
            active,
            model,
        })
    }

    pub fn ncols(&self) -> usize {
        self.marginals.len()
    }

    /// `n` synthetic rows on the original scale.
    pub fn sample(&self, n: usize, seed: u64) -> Result<DataMatrix> {
        let u = self.model.simulate(n, seed)?;
        let mut out = Array2::zeros((n, self.ncols()));
        for (j, m) in self.marginals.iter().enumerate() {
            if m.is_constant() {
                out.column_mut(j).fill(m.sorted()[0]);
            }
        }
        for (k, &j) in self.active.iter().enumerate() {
            let m = &self.marginals[j];
            for (dst, &src) in out.column_mut(j).iter_mut().zip(u.column(k)) {
                *dst = m.quantile_unchecked(src);
            }
        }
        DataMatrix::new(out, self.labels.clone())
    }

    /// `n` synthetic profiles; pressure columns that come out non-monotone are re-sorted.
    pub fn sample_profiles(&self, n: usize, grid: LevelGrid, seed: u64) -> Result<Synthesis> {
        let mut m = self.sample(n, seed)?;
        let resorted_pressure = repair_pressure(&mut m.values, grid);
        let profiles = unflatten(&m, grid)?;
        Ok(Synthesis {
            profiles,
            resorted_pressure,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let (correlation, vine) = match &self.model {
            CopulaModel::Gaussian(g) => (Some(g.correlation_matrix().iter().copied().collect()), None),
            CopulaModel::Vine(v) => (None, Some(v.clone())),
        };
        let a = Artifact {
            version: ARTIFACT_VERSION,
            kind: self.model.kind(),
            d: self.ncols(),
            labels: self.labels.iter().map(ToString::to_string).collect(),
            active: self.active.clone(),
            marginals: self.marginals.clone(),
            correlation,
            vine,
        };
        serde_json::to_string_pretty(&a).map_err(|e| Error::Artifact(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let a: Artifact = serde_json::from_str(text).map_err(|e| Error::Artifact(e.to_string()))?;
        if a.version != ARTIFACT_VERSION {
            return Err(Error::Artifact(format!(
                "model version {} is not supported (expected {ARTIFACT_VERSION})",
                a.version
            )));
        }
        if a.labels.len() != a.d || a.marginals.len() != a.d {
            return Err(Error::Artifact(format!("model declares d={} but lists {} labels and {} marginals", a.d, a.labels.len(), a.marginals.len())));
        }
        let labels = a
            .labels
            .iter()
            .map(|s| ColumnLabel::parse(s).ok_or_else(|| Error::Artifact(format!("bad column label '{s}'"))))
            .collect::<Result<Vec<_>>>()?;
        let marginals = a
            .marginals
            .into_iter()
            .map(|m| EmpiricalMarginal::from_sorted(m.sorted().to_vec()))
            .collect::<Result<Vec<_>>>()?;
        let expected: Vec<usize> = (0..a.d).filter(|&j| !marginals[j].is_constant()).collect();
        if a.active != expected {
            return Err(Error::Artifact("active column list does not match the marginals".into()));
        }
        let k = a.active.len();
        let model = match (a.kind, a.correlation, a.vine) {
            (CopulaKind::Gaussian, Some(r), None) => CopulaModel::Gaussian(GaussianCopula::from_correlation(k, r)?),
            (CopulaKind::VineParametric, None, Some(v)) => {
                if v.dim() != k {
                    return Err(Error::Artifact(format!("vine has {} variables, expected {k}", v.dim())));
                }
                v.validate()?;
                CopulaModel::Vine(v)
            }
            _ => return Err(Error::Artifact(format!("{} model body missing or mixed", a.kind))),
        };
        Ok(Self {
            labels,
            marginals,
            active: a.active,
            model,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }
}

/// Sorts the pressure block of any row where it is not strictly increasing;
/// returns the number of rows touched.
fn repair_pressure(values: &mut Array2<f64>, grid: LevelGrid) -> usize {
    let n = grid.n_full();
    let mut count = 0;
    for mut row in values.rows_mut() {
        let mut p: Vec<f64> = row.iter().skip(n).take(n).copied().collect();
        if p.windows(2).all(|w| w[0] < w[1]) {
            continue;
        }
        count += 1;
        p.sort_by(f64::total_cmp);
        for k in 1..n {
            if p[k] <= p[k - 1] {
                p[k] = p[k - 1].next_up();
            }
        }
        for (k, v) in p.into_iter().enumerate() {
            row[n + k] = v;
        }
    }
    count
}

/// Fits marginals and copula to the inputs of `train` and draws
/// `factor * train.len()` synthetic profiles.
pub fn synthesize(train: &ProfileSet, spec: &CopulaSpec, factor: usize, seed: u64) -> Result<Synthesis> {
    if train.is_empty() {
        return Err(Error::invalid("cannot synthesize from an empty training set"));
    }
    if factor == 0 {
        return Err(Error::invalid("augmentation factor must be at least 1"));
    }
    let data = flatten(train, Which::Inputs)?;
    let fitted = FittedCopula::fit(&data, spec)?;
    fitted.sample_profiles(factor * train.len(), train.grid(), seed)
}
