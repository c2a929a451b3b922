//! Parametric bivariate copulas with rotations: densities, h-functions and
//! their inverses, Kendall's tau, parameter inversion, and AIC selection.

mod family;
mod fit;
mod tau;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::CounterRng;

pub use fit::{fit_pair, FitOptions, STUDENT_DF_GRID};
pub use tau::{independence_threshold, kendall_tau, param_to_tau, tau_to_param};

/// Arguments are clamped into `[EPS, 1 - EPS]` before any evaluation.
pub const EPS: f64 = 1e-10;

/// Clamps into `[EPS, 1 - EPS]` so copula formulas stay finite.
#[inline]
pub fn clamp01(x: f64) -> f64 {
    x.clamp(EPS, 1.0 - EPS)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Independence,
    Gaussian,
    #[serde(rename = "student")]
    StudentT,
    Clayton,
    Gumbel,
    Frank,
    Joe,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Independence,
        Family::Gaussian,
        Family::StudentT,
        Family::Clayton,
        Family::Gumbel,
        Family::Frank,
        Family::Joe,
    ];

    pub fn n_params(self) -> usize {
        match self {
            Family::Independence => 0,
            Family::StudentT => 2,
            _ => 1,
        }
    }

    /// Families whose density is not symmetric under `(u, v) -> (1 - u, 1 - v)`
    /// and therefore take rotations.
    pub fn is_rotatable(self) -> bool {
        matches!(self, Family::Clayton | Family::Gumbel | Family::Joe)
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Independence => "independence",
            Family::Gaussian => "gaussian",
            Family::StudentT => "student",
            Family::Clayton => "clayton",
            Family::Gumbel => "gumbel",
            Family::Frank => "frank",
            Family::Joe => "joe",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::invalid(format!("unknown copula family '{s}'")))
    }
}

/// Counter-clockwise rotation of the copula density.
///
/// With `c` the unrotated density: `c90(u, v) = c(1 - u, v)`,
/// `c180(u, v) = c(1 - u, 1 - v)`, `c270(u, v) = c(u, 1 - v)`. For the
/// exchangeable families here these equal `c(v, 1 - u)` and `c(1 - v, u)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "u16", into = "u16")]
pub enum Rotation {
    #[default]
    R0,
    R90,
    R180,
    R270,
}

impl Rotation {
    pub fn degrees(self) -> u16 {
        match self {
            Rotation::R0 => 0,
            Rotation::R90 => 90,
            Rotation::R180 => 180,
            Rotation::R270 => 270,
        }
    }

    /// 90 and 270 degrees turn positive into negative dependence.
    pub fn flips_sign(self) -> bool {
        matches!(self, Rotation::R90 | Rotation::R270)
    }
}

impl From<Rotation> for u16 {
    fn from(r: Rotation) -> u16 {
        r.degrees()
    }
}

impl TryFrom<u16> for Rotation {
    type Error = String;

    fn try_from(d: u16) -> std::result::Result<Self, String> {
        match d {
            0 => Ok(Rotation::R0),
            90 => Ok(Rotation::R90),
            180 => Ok(Rotation::R180),
            270 => Ok(Rotation::R270),
            other => Err(format!("rotation must be 0, 90, 180 or 270, got {other}")),
        }
    }
}

/// Which argument an h-function conditions on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conditioning {
    /// `∂C/∂u`: distribution of the second argument given the first.
    OnFirst,
    /// `∂C/∂v`: distribution of the first argument given the second.
    OnSecond,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCopula {
    pub family: Family,
    pub rotation: Rotation,
    pub theta: f64,
    /// Degrees of freedom, Student-t only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default)]
    pub loglik: f64,
}

impl PairCopula {
    pub fn independence() -> Self {
        Self {
            family: Family::Independence,
            rotation: Rotation::R0,
            theta: 0.0,
            nu: None,
            loglik: 0.0,
        }
    }

    pub fn new(family: Family, rotation: Rotation, theta: f64, nu: Option<f64>) -> Result<Self> {
        let c = Self {
            family,
            rotation,
            theta,
            nu,
            loglik: 0.0,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn gaussian(rho: f64) -> Result<Self> {
        Self::new(Family::Gaussian, Rotation::R0, rho, None)
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.theta;
        let ok = match self.family {
            Family::Independence => true,
            Family::Gaussian => t.abs() < 1.0,
            Family::StudentT => t.abs() < 1.0 && self.nu.is_some_and(|nu| nu >= 2.0 && nu.is_finite()),
            Family::Clayton => t > 0.0 && t.is_finite(),
            Family::Gumbel | Family::Joe => t >= 1.0 && t.is_finite(),
            Family::Frank => t != 0.0 && t.is_finite() && t.abs() < 700.0,
        };
        if !ok {
            return Err(Error::invalid(format!(
                "parameter theta={} nu={:?} outside the range of the {} family",
                t, self.nu, self.family
            )));
        }
        if self.rotation != Rotation::R0 && !self.family.is_rotatable() {
            return Err(Error::invalid(format!(
                "{} copula does not take rotation {}",
                self.family,
                self.rotation.degrees()
            )));
        }
        if self.family == Family::StudentT && self.nu.is_none() {
            return Err(Error::invalid("student copula needs degrees of freedom"));
        }
        Ok(())
    }

    pub fn n_params(&self) -> usize {
        self.family.n_params()
    }

    pub fn aic(&self) -> f64 {
        2.0 * self.n_params() as f64 - 2.0 * self.loglik
    }

    fn nu(&self) -> f64 {
        self.nu.unwrap_or(0.0)
    }

    /// Kendall's tau implied by the parameter, including the rotation sign.
    pub fn tau(&self) -> f64 {
        let t = param_to_tau(self.family, self.theta);
        if self.rotation.flips_sign() {
            -t
        } else {
            t
        }
    }

    pub fn ln_pdf(&self, u: f64, v: f64) -> f64 {
        let (u, v) = (clamp01(u), clamp01(v));
        let (a, b) = match self.rotation {
            Rotation::R0 => (u, v),
            Rotation::R90 => (1.0 - u, v),
            Rotation::R180 => (1.0 - u, 1.0 - v),
            Rotation::R270 => (u, 1.0 - v),
        };
        family::ln_pdf(self.family, self.theta, self.nu(), a, b)
    }

    pub fn pdf(&self, u: f64, v: f64) -> f64 {
        self.ln_pdf(u, v).exp()
    }

    pub fn cdf(&self, u: f64, v: f64) -> f64 {
        let (u, v) = (clamp01(u), clamp01(v));
        let c0 = |a: f64, b: f64| family::cdf(self.family, self.theta, self.nu(), a, b);
        let c = match self.rotation {
            Rotation::R0 => c0(u, v),
            Rotation::R90 => v - c0(1.0 - u, v),
            Rotation::R180 => u + v - 1.0 + c0(1.0 - u, 1.0 - v),
            Rotation::R270 => u - c0(u, 1.0 - v),
        };
        c.clamp(0.0, 1.0)
    }

    /// Conditional CDF. `OnSecond` returns `P(U <= u | V = v)`, `OnFirst`
    /// returns `P(V <= v | U = u)`.
    pub fn h_func(&self, u: f64, v: f64, cond: Conditioning) -> f64 {
        let (u, v) = (clamp01(u), clamp01(v));
        let h0 = |a: f64, b: f64| family::h2(self.family, self.theta, self.nu(), a, b);
        let h = match (cond, self.rotation) {
            (Conditioning::OnSecond, Rotation::R0) => h0(u, v),
            (Conditioning::OnSecond, Rotation::R90) => 1.0 - h0(1.0 - u, v),
            (Conditioning::OnSecond, Rotation::R180) => 1.0 - h0(1.0 - u, 1.0 - v),
            (Conditioning::OnSecond, Rotation::R270) => h0(u, 1.0 - v),
            (Conditioning::OnFirst, Rotation::R0) => h0(v, u),
            (Conditioning::OnFirst, Rotation::R90) => h0(v, 1.0 - u),
            (Conditioning::OnFirst, Rotation::R180) => 1.0 - h0(1.0 - v, 1.0 - u),
            (Conditioning::OnFirst, Rotation::R270) => 1.0 - h0(1.0 - v, u),
        };
        clamp01(h)
    }

    /// Inverse of [`Self::h_func`] in the conditioned argument: returns `u`
    /// with `h_func(u, given, OnSecond) = w`, or `v` with `h_func(given, v, OnFirst) = w`.
    pub fn h_inv(&self, w: f64, given: f64, cond: Conditioning) -> Result<f64> {
        let (w, g) = (clamp01(w), clamp01(given));
        let inv0 = |a: f64, b: f64| family::h2_inv(self.family, self.theta, self.nu(), a, b);
        let x = match (cond, self.rotation) {
            (Conditioning::OnSecond, Rotation::R0) => inv0(w, g)?,
            (Conditioning::OnSecond, Rotation::R90) => 1.0 - inv0(1.0 - w, g)?,
            (Conditioning::OnSecond, Rotation::R180) => 1.0 - inv0(1.0 - w, 1.0 - g)?,
            (Conditioning::OnSecond, Rotation::R270) => inv0(w, 1.0 - g)?,
            (Conditioning::OnFirst, Rotation::R0) => inv0(w, g)?,
            (Conditioning::OnFirst, Rotation::R90) => inv0(w, 1.0 - g)?,
            (Conditioning::OnFirst, Rotation::R180) => 1.0 - inv0(1.0 - w, 1.0 - g)?,
            (Conditioning::OnFirst, Rotation::R270) => 1.0 - inv0(1.0 - w, g)?,
        };
        Ok(clamp01(x))
    }

    pub fn loglik(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).map(|(&a, &b)| self.ln_pdf(a, b)).sum()
    }

    /// `n` draws `(u, v)`: `v` uniform, `u = h_inv(w | v)` with `w` uniform.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
        let mut rng = CounterRng::new(seed);
        (0..n)
            .map(|_| {
                let v = rng.uniform();
                let w = rng.uniform();
                Ok((self.h_inv(w, v, Conditioning::OnSecond)?, v))
            })
            .collect()
    }
}

impl fmt::Display for PairCopula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Independence => write!(f, "independence"),
            Family::StudentT => write!(f, "student(rho={:.4}, nu={})", self.theta, self.nu()),
            fam if fam.is_rotatable() => write!(f, "{}{}(theta={:.4})", fam, self.rotation.degrees(), self.theta),
            fam => write!(f, "{}(theta={:.4})", fam, self.theta),
        }
    }
}
