//! Empirical marginals: rescaled empirical CDFs, their piecewise-linear
//! inverses, and rank-based pseudo-observations.

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sorted sample of one feature. Node `k` (1-based) sits at probability `k / (n + 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmpiricalMarginal {
    sorted: Vec<f64>,
}

impl EmpiricalMarginal {
    pub fn fit(column: &[f64]) -> Result<Self> {
        if column.len() < 2 {
            return Err(Error::invalid(format!(
                "empirical marginal needs at least 2 values, got {}",
                column.len()
            )));
        }
        if column.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("empirical marginal input contains non-finite values"));
        }
        let mut sorted = column.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    /// Rebuilds a marginal from an already sorted sample (artifact loading).
    pub fn from_sorted(sorted: Vec<f64>) -> Result<Self> {
        if sorted.len() < 2 || sorted.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::Artifact("marginal sample must be sorted with n >= 2".into()));
        }
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn is_constant(&self) -> bool {
        self.sorted[0] == self.sorted[self.sorted.len() - 1]
    }

    /// Linear interpolation of `(z_(k), k / (n + 1))`, clamped to the end nodes.
    pub fn cdf(&self, z: f64) -> f64 {
        let n = self.sorted.len();
        let scale = 1.0 / (n as f64 + 1.0);
        if z < self.sorted[0] {
            return scale;
        }
        if z >= self.sorted[n - 1] {
            return n as f64 * scale;
        }
        // Largest k (0-based) with z_(k) <= z; k + 1 < n here.
        let k = self.sorted.partition_point(|&x| x <= z) - 1;
        let (lo, hi) = (self.sorted[k], self.sorted[k + 1]);
        let frac = if hi > lo { (z - lo) / (hi - lo) } else { 0.0 };
        (k as f64 + 1.0 + frac) * scale
    }

    /// Inverse of [`Self::cdf`], clamped to the observed range.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::invalid(format!("quantile level {u} outside (0, 1)")));
        }
        Ok(self.quantile_unchecked(u))
    }

    pub(crate) fn quantile_unchecked(&self, u: f64) -> f64 {
        let n = self.sorted.len();
        let x = u * (n as f64 + 1.0);
        if x <= 1.0 {
            return self.sorted[0];
        }
        if x >= n as f64 {
            return self.sorted[n - 1];
        }
        let k = x.floor() as usize; // 1 <= k < n
        let frac = x - k as f64;
        let (lo, hi) = (self.sorted[k - 1], self.sorted[k]);
        lo + frac * (hi - lo)
    }
}

/// Sample-by-feature matrix of pseudo-observations, every entry in (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct UMatrix(Array2<f64>);

impl UMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(Error::invalid(format!("pseudo-observation {v} outside (0, 1)")));
        }
        Ok(Self(values))
    }

    pub fn view(&self) -> ndarray::ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.0.column(j)
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

/// Average ranks (1-based) with ties sharing the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) share rank mean((i+1)..=j)
        let r = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = r;
        }
        i = j;
    }
    ranks
}

/// Column-wise `rank / (n + 1)`.
pub fn pseudo_observations(values: &Array2<f64>) -> Result<UMatrix> {
    let n = values.nrows();
    if n < 2 {
        return Err(Error::invalid(format!("pseudo-observations need n >= 2 rows, got {n}")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("pseudo-observation input contains non-finite values"));
    }
    let mut out = Array2::zeros(values.dim());
    let scale = 1.0 / (n as f64 + 1.0);
    for (j, col) in values.axis_iter(Axis(1)).enumerate() {
        let ranks = average_ranks(&col.to_vec());
        for (i, r) in ranks.into_iter().enumerate() {
            out[[i, j]] = r * scale;
        }
    }
    UMatrix::new(out)
}
