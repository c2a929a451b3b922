//! Grey longwave toy model: downwelling flux from a layer-by-layer
//! emissivity recursion, starting from zero at the top of the atmosphere.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Profile, ProfileSet};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Stefan-Boltzmann constant [W m^-2 K^-4].
pub const STEFAN_BOLTZMANN: f64 = 5.670374419e-8;
/// 1 / cos(53 deg).
pub const DIFFUSIVITY: f64 = 1.66;
/// Total-column gas optical depth.
pub const GAS_OPTICAL_DEPTH: f64 = 1.7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiationConstants<T> {
    pub sigma_sb: T,
    pub diffusivity: T,
    pub tau_gas: T,
}

impl<T: Real> Default for RadiationConstants<T> {
    fn default() -> Self {
        Self {
            sigma_sb: T::of(STEFAN_BOLTZMANN),
            diffusivity: T::of(DIFFUSIVITY),
            tau_gas: T::of(GAS_OPTICAL_DEPTH),
        }
    }
}

impl<T: Real> RadiationConstants<T> {
    /// `tau_gas` may be zero (transparent gas); the others must be positive.
    pub fn new(sigma_sb: T, diffusivity: T, tau_gas: T) -> Result<Self> {
        let c = Self {
            sigma_sb,
            diffusivity,
            tau_gas,
        };
        c.check()?;
        Ok(c)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.sigma_sb > T::zero() && self.sigma_sb.is_finite()) {
            return Err(Error::invalid(format!("Stefan-Boltzmann constant must be positive, got {}", self.sigma_sb)));
        }
        if !(self.diffusivity > T::zero() && self.diffusivity.is_finite()) {
            return Err(Error::invalid(format!("diffusivity factor must be positive, got {}", self.diffusivity)));
        }
        if !(self.tau_gas >= T::zero() && self.tau_gas.is_finite()) {
            return Err(Error::invalid(format!("gas optical depth must be non-negative, got {}", self.tau_gas)));
        }
        Ok(())
    }
}

/// Downwelling flux on half levels, index 0 at the top of the atmosphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxProfile<T> {
    pub flux: Vec<T>,
}

impl<T: Real> FluxProfile<T> {
    pub fn surface(&self) -> T {
        self.flux[self.flux.len() - 1]
    }
}

/// Layer mass fractions and the half-level pressures they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaLayers<T> {
    pub delta_sigma: Vec<T>,
    pub p_half: Vec<T>,
}

/// Midpoints between full levels, 0 at the top, and the surface half level
/// mirrored about the lowest full level.
pub fn half_level_pressures<T: Real>(p_full: &[T]) -> Result<Vec<T>> {
    let n = p_full.len();
    if n == 0 {
        return Err(Error::invalid("pressure profile is empty"));
    }
    if p_full.iter().any(|p| !p.is_finite() || *p <= T::zero()) {
        return Err(Error::invalid("pressures must be finite and positive"));
    }
    if let Some(i) = p_full.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::invalid(format!("pressure not strictly increasing at full level {}", i + 2)));
    }
    let half = T::of(0.5);
    let mut out = Vec::with_capacity(n + 1);
    out.push(T::zero());
    for w in p_full.windows(2) {
        out.push((w[0] + w[1]) * half);
    }
    let above = out[n - 1];
    out.push(p_full[n - 1] + (p_full[n - 1] - above));
    Ok(out)
}

/// `delta_sigma[i] = (p_half[i + 1] - p_half[i]) / p_surface`.
pub fn sigma_layers<T: Real>(p_half: &[T]) -> Result<SigmaLayers<T>> {
    if p_half.len() < 2 {
        return Err(Error::invalid("need at least two half levels"));
    }
    if p_half[0] != T::zero() {
        return Err(Error::invalid(format!("top half-level pressure must be 0, got {}", p_half[0])));
    }
    let p0 = p_half[p_half.len() - 1];
    if !(p0 > T::zero() && p0.is_finite()) {
        return Err(Error::invalid(format!("surface pressure must be positive, got {p0}")));
    }
    if let Some(i) = p_half.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::invalid(format!("half-level pressure not increasing at index {}", i + 1)));
    }
    Ok(SigmaLayers {
        delta_sigma: p_half.windows(2).map(|w| (w[1] - w[0]) / p0).collect(),
        p_half: p_half.to_vec(),
    })
}

/// Black-body flux `sigma T^4`.
pub fn planck_flux<T: Real>(temperature: T, c: &RadiationConstants<T>) -> Result<T> {
    if !(temperature >= T::zero() && temperature.is_finite()) {
        return Err(Error::invalid(format!("temperature must be non-negative, got {temperature}")));
    }
    Ok(c.sigma_sb * temperature.powi(4))
}

/// `tau_c + tau_g * delta_sigma`.
pub fn layer_optical_depth<T: Real>(tau_cloud: T, delta_sigma: T, c: &RadiationConstants<T>) -> Result<T> {
    if !(tau_cloud >= T::zero() && delta_sigma >= T::zero()) {
        return Err(Error::invalid(format!(
            "optical depth inputs must be non-negative, got tau_c={tau_cloud}, delta_sigma={delta_sigma}"
        )));
    }
    Ok(tau_cloud + c.tau_gas * delta_sigma)
}

/// `1 - exp(-D tau)`.
pub fn layer_emissivity<T: Real>(tau: T, c: &RadiationConstants<T>) -> Result<T> {
    if !(tau >= T::zero()) {
        return Err(Error::invalid(format!("optical depth must be non-negative, got {tau}")));
    }
    Ok(-(-c.diffusivity * tau).exp_m1())
}

/// Recursion `L[i] = L[i - 1] (1 - eps_i) + B_i eps_i` from `L[0] = 0`.
pub fn downwelling_recursion<T: Real>(planck: &[T], emissivity: &[T]) -> Result<Vec<T>> {
    if planck.len() != emissivity.len() {
        return Err(Error::shape(format!("{} emissivities", planck.len()), emissivity.len()));
    }
    let mut out = Vec::with_capacity(planck.len() + 1);
    let mut flux = T::zero();
    out.push(flux);
    for (&b, &e) in planck.iter().zip(emissivity) {
        flux = flux * (T::one() - e) + b * e;
        out.push(flux);
    }
    Ok(out)
}

/// Flux through layers given directly by temperature and optical depth.
pub fn downwelling_layers<T: Real>(temperature: &[T], tau: &[T], c: &RadiationConstants<T>) -> Result<FluxProfile<T>> {
    let planck = temperature.iter().map(|&t| planck_flux(t, c)).collect::<Result<Vec<_>>>()?;
    let eps = tau.iter().map(|&t| layer_emissivity(t, c)).collect::<Result<Vec<_>>>()?;
    Ok(FluxProfile {
        flux: downwelling_recursion(&planck, &eps)?,
    })
}

pub fn downwelling_longwave<T: Real>(profile: &Profile, c: &RadiationConstants<T>) -> Result<FluxProfile<T>> {
    c.check()?;
    let n = profile.n_levels();
    if profile.pressure.len() != n || profile.cloud_optical_depth.len() != n {
        return Err(Error::invalid("profile quantities have different lengths"));
    }
    let p: Vec<T> = profile.pressure.iter().map(|&x| T::of(x)).collect();
    let layers = sigma_layers(&half_level_pressures(&p)?)?;
    let tau = profile
        .cloud_optical_depth
        .iter()
        .zip(&layers.delta_sigma)
        .map(|(&tc, &ds)| layer_optical_depth(T::of(tc), ds, c))
        .collect::<Result<Vec<_>>>()?;
    let temperature: Vec<T> = profile.temperature.iter().map(|&x| T::of(x)).collect();
    downwelling_layers(&temperature, &tau, c)
}

/// Attaches fluxes to every profile, preserving order.
pub fn radiate_set(set: &ProfileSet, c: &RadiationConstants<f64>) -> Result<ProfileSet> {
    let fluxes = set
        .profiles()
        .par_iter()
        .enumerate()
        .map(|(row, p)| {
            downwelling_longwave(p, c)
                .map(|f| f.flux)
                .map_err(|e| Error::InvalidProfile {
                    row,
                    reason: e.to_string(),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    set.clone().with_fluxes(fluxes)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;
    use crate::dataset::{generate_surrogate, LevelGrid};

    fn consts() -> RadiationConstants<f64> {
        RadiationConstants::default()
    }

    #[test]
    fn half_level_examples() {
        assert_eq!(half_level_pressures(&[100.0, 300.0, 500.0]).unwrap(), vec![0.0, 200.0, 400.0, 600.0]);
        assert_eq!(half_level_pressures(&[500.0]).unwrap(), vec![0.0, 1000.0]);
        assert!(half_level_pressures(&[100.0, 100.0]).is_err());
        assert!(half_level_pressures(&[300.0, 100.0]).is_err());
        assert!(half_level_pressures::<f64>(&[]).is_err());
    }

    #[test]
    fn sigma_examples() {
        let s = sigma_layers(&[0.0, 200.0, 400.0, 600.0]).unwrap();
        for d in &s.delta_sigma {
            assert_relative_eq!(*d, 1.0 / 3.0, max_relative = 1e-15);
        }
        assert_eq!(sigma_layers(&[0.0, 870.0]).unwrap().delta_sigma, vec![1.0]);
        assert!(sigma_layers(&[0.0, 0.0]).is_err());
        assert!(sigma_layers(&[10.0, 100.0]).is_err());
    }

    #[test]
    fn planck_examples() {
        let c = consts();
        assert_eq!(planck_flux(0.0, &c).unwrap(), 0.0);
        assert_relative_eq!(planck_flux(300.0, &c).unwrap(), 459.300_327_939, max_relative = 1e-12);
        assert_relative_eq!(planck_flux(255.0, &c).unwrap(), 239.757_641_811_207_6, max_relative = 1e-12);
        assert!(planck_flux(-1.0, &c).is_err());
    }

    #[test]
    fn optical_depth_examples() {
        let c = consts();
        assert_relative_eq!(layer_optical_depth(0.0, 0.5, &c).unwrap(), 0.85, max_relative = 1e-15);
        assert_eq!(layer_optical_depth(2.0, 0.0, &c).unwrap(), 2.0);
        assert!(layer_optical_depth(-0.1, 0.2, &c).is_err());
    }

    #[test]
    fn emissivity_examples() {
        let c = consts();
        assert_eq!(layer_emissivity(0.0, &c).unwrap(), 0.0);
        assert_relative_eq!(layer_emissivity(1.0, &c).unwrap(), 0.809_861_019_898_479_5, max_relative = 1e-14);
        assert!((1.0 - layer_emissivity(50.0, &c).unwrap()) < 1e-9);
        assert!(layer_emissivity(-1.0, &c).is_err());
    }

    #[test]
    fn hand_recursion_two_layers() {
        let l = downwelling_recursion(&[100.0, 200.0], &[0.5, 0.25]).unwrap();
        assert_eq!(l, vec![0.0, 50.0, 87.5]);
    }

    #[test]
    fn transparent_atmosphere_is_dark() {
        let c = RadiationConstants::new(STEFAN_BOLTZMANN, DIFFUSIVITY, 0.0).unwrap();
        let p = Profile {
            temperature: vec![220.0, 250.0, 290.0],
            pressure: vec![10_000.0, 50_000.0, 95_000.0],
            cloud_optical_depth: vec![0.0; 3],
        };
        let l = downwelling_longwave(&p, &c).unwrap();
        assert!(l.flux.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn opaque_isothermal_column_emits_black_body() {
        let c = consts();
        let p = Profile {
            temperature: vec![280.0; 4],
            pressure: vec![20_000.0, 50_000.0, 80_000.0, 98_000.0],
            cloud_optical_depth: vec![0.0, 0.0, 0.0, 100.0],
        };
        let l = downwelling_longwave(&p, &c).unwrap();
        assert_relative_eq!(l.surface(), 348.532_965_888_486_4, max_relative = 1e-6);
    }

    #[test]
    fn clear_column_gas_depth_sums_to_constant() {
        let c = consts();
        let grid = LevelGrid::new(30).unwrap();
        for p in generate_surrogate(20, grid, 3).unwrap().profiles() {
            let s = sigma_layers(&half_level_pressures(&p.pressure).unwrap()).unwrap();
            let total: f64 = s.delta_sigma.iter().map(|&d| layer_optical_depth(0.0, d, &c).unwrap()).sum();
            assert!((total - GAS_OPTICAL_DEPTH).abs() < 1e-12, "{total}");
        }
    }

    #[test]
    fn layer_split_matches_on_isothermal_column() {
        let c = consts();
        let t = vec![260.0; 3];
        let coarse = downwelling_layers(&t, &[0.3, 0.8, 0.5], &c).unwrap();
        let fine = downwelling_layers(&[260.0; 4], &[0.3, 0.4, 0.4, 0.5], &c).unwrap();
        for (a, b) in [(0, 0), (1, 1), (2, 3), (3, 4)] {
            assert!((coarse.flux[a] - fine.flux[b]).abs() <= 0.01 * coarse.flux[a].abs() + 1e-12);
        }
    }

    #[test]
    fn thicker_cloud_raises_flux_below_warm_layer() {
        let c = consts();
        let t = [200.0, 230.0, 280.0, 290.0];
        let base = downwelling_layers(&t, &[0.1, 0.1, 0.2, 0.2], &c).unwrap();
        let cloudy = downwelling_layers(&t, &[0.1, 0.1, 1.5, 0.2], &c).unwrap();
        for i in 0..=2 {
            assert_eq!(base.flux[i], cloudy.flux[i]);
        }
        for i in 3..=4 {
            assert!(cloudy.flux[i] >= base.flux[i]);
        }
    }

    #[test]
    fn radiate_set_preserves_order_and_count() {
        let grid = LevelGrid::new(10).unwrap();
        let set = generate_surrogate(40, grid, 9).unwrap();
        let out = radiate_set(&set, &consts()).unwrap();
        let fluxes = out.fluxes().unwrap();
        assert_eq!(fluxes.len(), 40);
        assert!(fluxes.iter().flatten().all(|x| x.is_finite() && *x >= 0.0));
        let rev: Vec<usize> = (0..40).rev().collect();
        let out_rev = radiate_set(&set.select(&rev), &consts()).unwrap();
        for (i, &j) in rev.iter().enumerate() {
            assert_eq!(out_rev.fluxes().unwrap()[i], fluxes[j]);
        }
    }

    #[test]
    fn single_precision_agrees_with_double() {
        let p = Profile {
            temperature: vec![210.0, 240.0, 270.0, 288.0],
            pressure: vec![5_000.0, 30_000.0, 70_000.0, 100_000.0],
            cloud_optical_depth: vec![0.0, 0.4, 2.0, 0.0],
        };
        let hi = downwelling_longwave::<f64>(&p, &RadiationConstants::default()).unwrap();
        let lo = downwelling_longwave::<f32>(&p, &RadiationConstants::default()).unwrap();
        for (a, b) in hi.flux.iter().zip(&lo.flux) {
            assert!((a - f64::from(*b)).abs() < 1e-4 * a.max(1.0));
        }
    }

    proptest! {
        #[test]
        fn flux_is_bounded_by_planck_above(
            layers in proptest::collection::vec((150.0..320.0f64, 0.0..5.0f64), 1..30),
        ) {
            let c = consts();
            let t: Vec<f64> = layers.iter().map(|l| l.0).collect();
            let tau: Vec<f64> = layers.iter().map(|l| l.1).collect();
            let l = downwelling_layers(&t, &tau, &c).unwrap();
            prop_assert_eq!(l.flux[0], 0.0);
            let mut bmax = 0.0f64;
            for i in 0..t.len() {
                bmax = bmax.max(planck_flux(t[i], &c).unwrap());
                prop_assert!(l.flux[i + 1] >= 0.0);
                prop_assert!(l.flux[i + 1] <= bmax * (1.0 + 1e-12));
            }
        }

        #[test]
        fn half_levels_interleave_full_levels(raw in proptest::collection::vec(1.0..1000.0f64, 1..40)) {
            let mut p = Vec::new();
            let mut acc = 0.0;
            for x in raw {
                acc += x;
                p.push(acc);
            }
            let h = half_level_pressures(&p).unwrap();
            prop_assert_eq!(h.len(), p.len() + 1);
            for i in 0..p.len() {
                prop_assert!(h[i] < p[i] && p[i] < h[i + 1]);
            }
            let s = sigma_layers(&h).unwrap();
            prop_assert!(s.delta_sigma.iter().all(|&d| d > 0.0));
            prop_assert!((s.delta_sigma.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
