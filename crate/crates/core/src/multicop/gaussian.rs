use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;

use crate::bicop::clamp01;
use crate::error::{Error, Result};
use crate::marginals::UMatrix;
use crate::rng::CounterRng;
use crate::special::{norm_cdf, norm_quantile};

/// Smallest eigenvalue kept when regularizing the score correlation.
pub const EIGEN_FLOOR: f64 = 1e-6;

/// Gaussian copula with correlation `r` and its Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianCopula {
    d: usize,
    /// Row-major `d x d` correlation.
    r: Vec<f64>,
    /// Row-major lower-triangular factor.
    l: Vec<f64>,
    /// True when eigenvalue clipping changed the sample correlation.
    pub regularized: bool,
}

impl GaussianCopula {
    /// Builds the model from a symmetric, unit-diagonal, positive definite
    /// correlation matrix given row-major.
    pub fn from_correlation(d: usize, r: Vec<f64>) -> Result<Self> {
        Self::factor(d, r, false)
    }

    fn factor(d: usize, r: Vec<f64>, regularized: bool) -> Result<Self> {
        if r.len() != d * d {
            return Err(Error::shape(format!("{} correlation entries", d * d), r.len()));
        }
        if r.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("correlation matrix has non-finite entries"));
        }
        for i in 0..d {
            if r[i * d + i] != 1.0 {
                return Err(Error::invalid(format!("correlation diagonal entry {i} is {}", r[i * d + i])));
            }
            for j in 0..i {
                if (r[i * d + j] - r[j * d + i]).abs() > 1e-12 {
                    return Err(Error::invalid(format!("correlation matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        let m = DMatrix::from_row_slice(d, d, &r);
        let chol = m
            .cholesky()
            .ok_or_else(|| Error::Degenerate("correlation matrix is not positive definite".into()))?;
        let l = chol.l();
        Ok(Self {
            d,
            r,
            l: (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|ij| l[ij]).collect(),
            regularized,
        })
    }

    /// Clips eigenvalues below [`EIGEN_FLOOR`] and rescales to unit diagonal.
    fn regularize(d: usize, r: Vec<f64>) -> Result<Self> {
        let m = DMatrix::from_row_slice(d, d, &r);
        let eig = SymmetricEigen::new(m);
        if d == 0 || eig.eigenvalues.min() >= EIGEN_FLOOR {
            return Self::factor(d, r, false);
        }
        let clipped = eig.eigenvalues.map(|e| e.max(EIGEN_FLOOR));
        let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
        let s = rebuilt.diagonal().map(|x| 1.0 / x.sqrt());
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            out[i * d + i] = 1.0;
            for j in 0..i {
                let v = (rebuilt[(i, j)] * s[i] * s[j]).clamp(-1.0, 1.0);
                out[i * d + j] = v;
                out[j * d + i] = v;
            }
        }
        Self::factor(d, out, true)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        self.r[i * self.d + j]
    }

    pub fn correlation_matrix(&self) -> Array2<f64> {
        Array2::from_shape_vec((self.d, self.d), self.r.clone()).expect("square by construction")
    }

    pub fn cholesky_factor(&self) -> Array2<f64> {
        Array2::from_shape_vec((self.d, self.d), self.l.clone()).expect("square by construction")
    }

    /// Correlation of the normal scores of `u`, regularized if needed.
    pub fn fit(u: &UMatrix) -> Result<Self> {
        let (n, d) = (u.nrows(), u.ncols());
        if n < 10 {
            return Err(Error::invalid(format!("Gaussian copula fit needs n >= 10, got {n}")));
        }
        let mut z = DMatrix::<f64>::zeros(n, d);
        for j in 0..d {
            let col = u.column(j);
            let first = col[0];
            if col.iter().all(|&x| x == first) {
                return Err(Error::Degenerate(format!("column {j} is constant")));
            }
            let scores: Vec<f64> = col.iter().map(|&x| norm_quantile(x)).collect();
            let mean = scores.iter().sum::<f64>() / n as f64;
            for (i, s) in scores.into_iter().enumerate() {
                z[(i, j)] = s - mean;
            }
        }
        let cov = z.transpose() * &z;
        let sd: Vec<f64> = (0..d).map(|j| cov[(j, j)].sqrt()).collect();
        let r = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| {
                let (a, b) = (i.min(j), i.max(j));
                if a == b { 1.0 } else { (cov[(a, b)] / (sd[a] * sd[b])).clamp(-1.0, 1.0) }
            })
            .collect();
        Self::regularize(d, r)
    }

    /// Rows `Phi(L z)` with `z` drawn row by row from the counter generator.
    pub fn simulate(&self, n: usize, seed: u64) -> Result<UMatrix> {
        let d = self.d;
        let mut rng = CounterRng::new(seed);
        let mut out = Array2::zeros((n, d));
        let mut z = vec![0.0; d];
        for i in 0..n {
            for zk in z.iter_mut() {
                *zk = rng.normal();
            }
            for a in 0..d {
                let row = &self.l[a * d..a * d + a + 1];
                let x: f64 = row.iter().zip(&z).map(|(l, z)| l * z).sum();
                out[[i, a]] = clamp01(norm_cdf(x));
            }
        }
        UMatrix::new(out)
    }
}
