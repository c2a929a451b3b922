//! Comparing real and synthetic data, and scoring emulator predictions.
//!
//! Random projections reduce a data matrix to one column per iteration and
//! compare summary statistics of the two projections. Band depth orders
//! profiles from central to outlying. MB and MAE score predicted fluxes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use ndarray::{Array1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::rng::{substream, CounterRng};
use crate::scalar::Real;

pub const DEFAULT_ITERATIONS: usize = 100;

/// Quantile levels reported per half level for the prediction errors.
pub const ERROR_QUANTILES: [f64; 3] = [0.1, 0.5, 0.9];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    Mean,
    Variance,
    Std,
    Q10,
    Q50,
    Q90,
}

impl Statistic {
    pub const ALL: [Statistic; 6] = [
        Statistic::Mean,
        Statistic::Variance,
        Statistic::Std,
        Statistic::Q10,
        Statistic::Q50,
        Statistic::Q90,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Statistic::Mean => "mean",
            Statistic::Variance => "variance",
            Statistic::Std => "std",
            Statistic::Q10 => "q10",
            Statistic::Q50 => "q50",
            Statistic::Q90 => "q90",
        }
    }

    /// Evaluates the statistic; `sorted` must be `x` in ascending order.
    fn eval<T: Real>(self, x: &[T], sorted: &[T]) -> T {
        match self {
            Statistic::Mean => mean(x),
            Statistic::Variance => variance(x),
            Statistic::Std => variance(x).sqrt(),
            Statistic::Q10 => quantile_sorted(sorted, T::of(0.1)),
            Statistic::Q50 => quantile_sorted(sorted, T::of(0.5)),
            Statistic::Q90 => quantile_sorted(sorted, T::of(0.9)),
        }
    }
}

pub fn mean<T: Real>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |a, &v| a + v) / T::of(x.len() as f64)
}

/// Population variance (divisor n).
pub fn variance<T: Real>(x: &[T]) -> T {
    let m = mean(x);
    x.iter().fold(T::zero(), |a, &v| a + (v - m) * (v - m)) / T::of(x.len() as f64)
}

/// Linear interpolation between order statistics at position `q (n - 1)`.
pub fn quantile_sorted<T: Real>(sorted: &[T], q: T) -> T {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * T::of((n - 1) as f64);
    let lo = pos.floor().to_usize().unwrap_or(0).min(n - 1);
    let hi = (lo + 1).min(n - 1);
    let frac = pos - T::of(lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn sorted_copy<T: Real>(x: &[T]) -> Vec<T> {
    let mut s = x.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    s
}

/// For each statistic, one `(real, synthetic)` pair per iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport<T> {
    pub iterations: usize,
    pub seed: u64,
    /// Indexed like [`Statistic::ALL`].
    pub pairs: Vec<Vec<(T, T)>>,
}

impl<T: Real> ProjectionReport<T> {
    pub fn get(&self, stat: Statistic) -> &[(T, T)] {
        &self.pairs[stat as usize]
    }

    /// `|median(real) - median(synth)| / |median(real)|` over iterations.
    pub fn relative_discrepancy(&self, stat: Statistic) -> T {
        let pairs = self.get(stat);
        let real = sorted_copy(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
        let synth = sorted_copy(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
        let half = T::of(0.5);
        let (mr, ms) = (quantile_sorted(&real, half), quantile_sorted(&synth, half));
        (mr - ms).abs() / mr.abs()
    }

    /// `(statistic, iteration, s_real, s_synth)` rows.
    pub fn rows(&self) -> impl Iterator<Item = (Statistic, usize, T, T)> + '_ {
        Statistic::ALL
            .iter()
            .flat_map(move |&s| self.get(s).iter().enumerate().map(move |(i, &(r, y))| (s, i, r, y)))
    }
}

/// Projects both matrices onto the same standard-normal weight vector in
/// every iteration and records each statistic of the two projections.
pub fn random_projection_report<T: Real>(
    real: ArrayView2<T>,
    synth: ArrayView2<T>,
    iterations: usize,
    seed: u64,
) -> Result<ProjectionReport<T>> {
    if real.ncols() != synth.ncols() {
        return Err(Error::shape(format!("{} columns", real.ncols()), synth.ncols()));
    }
    if iterations == 0 {
        return Err(Error::invalid("projection report needs at least one iteration"));
    }
    if real.nrows() == 0 || synth.nrows() == 0 {
        return Err(Error::invalid("projection report needs nonempty matrices"));
    }
    if real.iter().chain(synth.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("projection report needs finite data"));
    }
    let per_iter: Vec<Vec<(T, T)>> = (0..iterations)
        .into_par_iter()
        .map(|it| {
            let mut rng = CounterRng::new(substream(seed, it as u64));
            let w = Array1::from_shape_simple_fn(real.ncols(), || T::of(rng.normal()));
            let pr = real.dot(&w).to_vec();
            let ps = synth.dot(&w).to_vec();
            let (sr, ss) = (sorted_copy(&pr), sorted_copy(&ps));
            Statistic::ALL.iter().map(|s| (s.eval(&pr, &sr), s.eval(&ps, &ss))).collect()
        })
        .collect();
    let pairs = (0..Statistic::ALL.len())
        .map(|k| per_iter.iter().map(|v| v[k]).collect())
        .collect();
    Ok(ProjectionReport {
        iterations,
        seed,
        pairs,
    })
}

/// Band depth with bands formed by pairs of curves (closed envelopes). Each
/// row of `curves` is one curve.
pub fn band_depth<T: Real>(curves: ArrayView2<T>) -> Result<Vec<f64>> {
    let n = curves.nrows();
    if n < 3 {
        return Err(Error::invalid(format!("band depth needs at least 3 curves, got {n}")));
    }
    let len = curves.ncols();
    let words = len.div_ceil(64).max(1);
    let pairs = (n * (n - 1) / 2) as f64;
    let rows: Vec<Vec<T>> = curves.axis_iter(Axis(0)).map(|r| r.to_vec()).collect();

    let depths = (0..n)
        .into_par_iter()
        .map(|f| {
            // Per other curve: bit t set where it lies strictly above (below) f.
            let mut above = vec![0u64; n * words];
            let mut below = vec![0u64; n * words];
            for (i, r) in rows.iter().enumerate() {
                for (t, (&v, &fv)) in r.iter().zip(&rows[f]).enumerate() {
                    let bit = 1u64 << (t % 64);
                    if v > fv {
                        above[i * words + t / 64] |= bit;
                    } else if v < fv {
                        below[i * words + t / 64] |= bit;
                    }
                }
            }
            let disjoint = |m: &[u64], i: usize, j: usize| (0..words).all(|w| m[i * words + w] & m[j * words + w] == 0);
            // Every pair containing f itself bands it.
            let mut count = n - 1;
            for i in (0..n).filter(|&i| i != f) {
                for j in (i + 1..n).filter(|&j| j != f) {
                    if disjoint(&above, i, j) && disjoint(&below, i, j) {
                        count += 1;
                    }
                }
            }
            count as f64 / pairs
        })
        .collect();
    Ok(depths)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthGroup {
    /// Deepest quarter.
    Central,
    Middle,
    Outer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthRanking {
    pub depths: Vec<f64>,
    /// Curve indices by decreasing depth, ties by index.
    pub order: Vec<usize>,
    /// Group of each curve, indexed like `depths`.
    pub groups: Vec<DepthGroup>,
    pub median: usize,
}

impl DepthRanking {
    pub fn members(&self, g: DepthGroup) -> Vec<usize> {
        self.order.iter().copied().filter(|&i| self.groups[i] == g).collect()
    }
}

/// First `ceil(n/4)` curves by depth are central, the next `ceil(n/4)` middle,
/// the rest outer.
pub fn depth_groups(depths: &[f64]) -> Result<DepthRanking> {
    if depths.is_empty() {
        return Err(Error::invalid("depth grouping needs at least one curve"));
    }
    let n = depths.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| depths[b].total_cmp(&depths[a]).then(a.cmp(&b)));
    let quarter = n.div_ceil(4);
    let mut groups = vec![DepthGroup::Outer; n];
    for (rank, &i) in order.iter().enumerate() {
        groups[i] = if rank < quarter {
            DepthGroup::Central
        } else if rank < 2 * quarter {
            DepthGroup::Middle
        } else {
            DepthGroup::Outer
        };
    }
    Ok(DepthRanking {
        depths: depths.to_vec(),
        median: order[0],
        order,
        groups,
    })
}

/// Error quantiles of one half level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelQuantiles<T> {
    pub level: usize,
    pub low: T,
    pub mid: T,
    pub high: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics<T> {
    /// Mean bias of `y_true - y_pred` [W m^-2].
    pub mb: T,
    /// Mean absolute error [W m^-2].
    pub mae: T,
    pub levels: Vec<LevelQuantiles<T>>,
}

/// MB and MAE over every entry, plus per-column quantiles of the differences.
pub fn error_metrics<T: Real>(y_true: ArrayView2<T>, y_pred: ArrayView2<T>) -> Result<ErrorMetrics<T>> {
    if y_true.dim() != y_pred.dim() {
        return Err(Error::shape(
            format!("{}x{}", y_true.nrows(), y_true.ncols()),
            format!("{}x{}", y_pred.nrows(), y_pred.ncols()),
        ));
    }
    if y_true.is_empty() {
        return Err(Error::invalid("error metrics of an empty matrix"));
    }
    let d = &y_true - &y_pred;
    let n = T::of(d.len() as f64);
    let mb = d.iter().fold(T::zero(), |a, &v| a + v) / n;
    let mae = d.iter().fold(T::zero(), |a, &v| a + v.abs()) / n;
    let [ql, qm, qh] = ERROR_QUANTILES.map(T::of);
    let levels = d
        .axis_iter(Axis(1))
        .enumerate()
        .map(|(level, col)| {
            let s = sorted_copy(&col.to_vec());
            LevelQuantiles {
                level,
                low: quantile_sorted(&s, ql),
                mid: quantile_sorted(&s, qm),
                high: quantile_sorted(&s, qh),
            }
        })
        .collect();
    Ok(ErrorMetrics { mb, mae, levels })
}
