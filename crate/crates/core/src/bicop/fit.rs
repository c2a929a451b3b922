//! Per-pair family selection: tau inversion for a starting bracket,
//! golden-section likelihood refinement, then minimum AIC.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::numeric::golden_max;
use crate::special::{norm_quantile, t_ln_pdf, t_quantile};

use super::{kendall_tau, independence_threshold, tau_to_param, Family, PairCopula, Rotation};

/// Degrees-of-freedom grid searched for the Student-t family.
pub const STUDENT_DF_GRID: [f64; 7] = [2.0, 3.0, 4.0, 6.0, 10.0, 20.0, 30.0];

/// Half-width of the tau bracket searched around the empirical tau.
const TAU_BRACKET: f64 = 0.5;
const MAX_TAU_ARCHIMEDEAN: f64 = 0.95;
const MAX_TAU_ELLIPTICAL: f64 = 0.99;
const MIN_PAIRS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub catalogue: Vec<Family>,
    /// Select independence outright when |tau| is below the 5 % critical value.
    pub independence_test: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            catalogue: Family::ALL.to_vec(),
            independence_test: true,
        }
    }
}

impl FitOptions {
    pub fn with_catalogue(catalogue: &[Family]) -> Self {
        Self {
            catalogue: catalogue.to_vec(),
            ..Self::default()
        }
    }
}

/// Fits every catalogue family to the pseudo-observations `(u, v)` and
/// returns the minimum-AIC candidate.
pub fn fit_pair(u: &[f64], v: &[f64], opts: &FitOptions) -> Result<PairCopula> {
    if u.len() != v.len() {
        return Err(Error::shape(format!("{} pairs", u.len()), v.len()));
    }
    if u.len() < MIN_PAIRS {
        return Err(Error::invalid(format!("pair fit needs at least {MIN_PAIRS} pairs, got {}", u.len())));
    }
    if opts.catalogue.is_empty() {
        return Err(Error::invalid("empty family catalogue"));
    }
    if let Some(x) = u.iter().chain(v).find(|x| !(**x > 0.0 && **x < 1.0)) {
        return Err(Error::invalid(format!("pseudo-observation {x} outside (0, 1)")));
    }
    for (name, col) in [("first", u), ("second", v)] {
        if col.iter().all(|&x| x == col[0]) {
            return Err(Error::Degenerate(format!("{name} column is constant")));
        }
    }

    let tau = kendall_tau(u, v)?;
    if opts.independence_test && tau.abs() < independence_threshold(u.len()) {
        return Ok(PairCopula::independence());
    }

    let mut best: Option<PairCopula> = None;
    for &family in &opts.catalogue {
        for cand in fit_family(family, u, v, tau) {
            if best.as_ref().is_none_or(|b| cand.aic() < b.aic()) {
                best = Some(cand);
            }
        }
    }
    best.ok_or_else(|| Error::Degenerate(format!("no catalogue family admits tau = {tau:.4}")))
}

fn golden(f: impl FnMut(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let tol = 1e-7 * (hi - lo).abs().max(1e-3);
    golden_max(f, lo, hi, tol, 200)
}

fn tau_bracket(tau: f64, lo: f64, hi: f64) -> (f64, f64) {
    ((tau - TAU_BRACKET).max(lo), (tau + TAU_BRACKET).min(hi))
}

fn fit_family(family: Family, u: &[f64], v: &[f64], tau: f64) -> Vec<PairCopula> {
    match family {
        Family::Independence => vec![PairCopula::independence()],
        Family::Gaussian => fit_gaussian(u, v, tau).into_iter().collect(),
        Family::StudentT => fit_student(u, v, tau).into_iter().collect(),
        Family::Frank => fit_frank(u, v, tau).into_iter().collect(),
        Family::Clayton | Family::Gumbel | Family::Joe => {
            let rotations = if tau > 0.0 {
                [Rotation::R0, Rotation::R180]
            } else {
                [Rotation::R90, Rotation::R270]
            };
            rotations
                .into_iter()
                .filter_map(|r| fit_archimedean(family, r, u, v, tau.abs()))
                .collect()
        }
    }
}

fn elliptical_bracket(tau: f64) -> (f64, f64) {
    let (lo, hi) = tau_bracket(tau, -MAX_TAU_ELLIPTICAL, MAX_TAU_ELLIPTICAL);
    // tau -> rho is monotone and infallible on (-1, 1)
    (
        tau_to_param(Family::Gaussian, lo).unwrap_or(-0.999),
        tau_to_param(Family::Gaussian, hi).unwrap_or(0.999),
    )
}

fn fit_gaussian(u: &[f64], v: &[f64], tau: f64) -> Option<PairCopula> {
    let n = u.len() as f64;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (&a, &b) in u.iter().zip(v) {
        let (x, y) = (norm_quantile(a), norm_quantile(b));
        sxx += x * x + y * y;
        sxy += x * y;
    }
    let ll = |r: f64| {
        let q = 1.0 - r * r;
        -0.5 * n * q.ln() - (r * r * sxx - 2.0 * r * sxy) / (2.0 * q)
    };
    let (lo, hi) = elliptical_bracket(tau);
    let (rho, loglik) = golden(ll, lo, hi);
    let mut c = PairCopula::gaussian(rho).ok()?;
    c.loglik = loglik;
    Some(c)
}

fn fit_student(u: &[f64], v: &[f64], tau: f64) -> Option<PairCopula> {
    let (lo, hi) = elliptical_bracket(tau);
    let mut best: Option<PairCopula> = None;
    for nu in STUDENT_DF_GRID {
        let scores: Vec<(f64, f64)> = u.iter().zip(v).map(|(&a, &b)| (t_quantile(a, nu), t_quantile(b, nu))).collect();
        let n = scores.len() as f64;
        let marginal: f64 = scores.iter().map(|&(x, y)| t_ln_pdf(x, nu) + t_ln_pdf(y, nu)).sum();
        let constant = ln_gamma(0.5 * (nu + 2.0)) - ln_gamma(0.5 * nu) - (nu * std::f64::consts::PI).ln();
        let ll = |r: f64| {
            let q = 1.0 - r * r;
            let s: f64 = scores
                .iter()
                .map(|&(x, y)| ((x * x + y * y - 2.0 * r * x * y) / (nu * q)).ln_1p())
                .sum();
            n * (constant - 0.5 * q.ln()) - 0.5 * (nu + 2.0) * s - marginal
        };
        let (rho, loglik) = golden(ll, lo, hi);
        if best.as_ref().is_none_or(|b| loglik > b.loglik) {
            let mut c = PairCopula::new(Family::StudentT, Rotation::R0, rho, Some(nu)).ok()?;
            c.loglik = loglik;
            best = Some(c);
        }
    }
    best
}

fn fit_frank(u: &[f64], v: &[f64], tau: f64) -> Option<PairCopula> {
    let (lo, hi) = tau_bracket(tau, -MAX_TAU_ARCHIMEDEAN, MAX_TAU_ARCHIMEDEAN);
    let theta_of = |t: f64| if t == 0.0 { Some(0.0) } else { tau_to_param(Family::Frank, t).ok() };
    let (a, b) = (theta_of(lo)?, theta_of(hi)?);
    let ll = |th: f64| {
        if th.abs() < 1e-8 {
            return 0.0;
        }
        PairCopula {
            family: Family::Frank,
            rotation: Rotation::R0,
            theta: th,
            nu: None,
            loglik: 0.0,
        }
        .loglik(u, v)
    };
    let (theta, loglik) = golden(ll, a, b);
    let mut c = PairCopula::new(Family::Frank, Rotation::R0, theta, None).ok()?;
    if theta.abs() < 1e-8 {
        return None;
    }
    c.loglik = loglik;
    Some(c)
}

fn fit_archimedean(family: Family, rotation: Rotation, u: &[f64], v: &[f64], tau_abs: f64) -> Option<PairCopula> {
    let floor = if family == Family::Clayton { 1e-3 } else { 0.0 };
    let (lo, hi) = tau_bracket(tau_abs, floor, MAX_TAU_ARCHIMEDEAN);
    if lo >= hi {
        return None;
    }
    let a = tau_to_param(family, lo).ok()?;
    let b = tau_to_param(family, hi).ok()?;
    let mut probe = PairCopula::new(family, rotation, a, None).ok()?;
    let ll = |th: f64| {
        probe.theta = th;
        let l = probe.loglik(u, v);
        if l.is_finite() {
            l
        } else {
            f64::NEG_INFINITY
        }
    };
    let (theta, loglik) = golden(ll, a, b);
    let mut c = PairCopula::new(family, rotation, theta, None).ok()?;
    c.loglik = loglik;
    Some(c)
}
