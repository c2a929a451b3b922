//! Synthetic atmosphere used in place of the operational profile archive for
//! desk-scale experiments. Only its statistical shape matters downstream:
//! smooth temperature profiles with strong cross-level dependence, pressure on
//! a fixed sigma grid, and sparse blocky clouds in the mid and low troposphere.

use super::{LevelGrid, Profile, ProfileSet};
use crate::error::{Error, Result};
use crate::rng::CounterRng;

/// Every tunable of the generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateParams {
    pub t_top: f64,
    pub t_surface: f64,
    /// Shape exponent of the baseline temperature in sigma.
    pub t_shape: f64,
    /// Standard deviation of the per-profile temperature offset [K].
    pub t_offset_sd: f64,
    /// Stationary standard deviation of the level-correlated noise [K].
    pub t_noise_sd: f64,
    /// Lag-one autocorrelation of the noise between adjacent levels.
    pub t_noise_ar: f64,
    pub t_floor: f64,
    /// Exponent of the full-level sigma grid `((i - 1/2) / n)^e`.
    pub sigma_exponent: f64,
    pub p_surface_mean: f64,
    pub p_surface_sd: f64,
    pub cloudy_fraction: f64,
    pub max_cloud_blocks: usize,
    /// Sigma band where cloud blocks may start.
    pub cloud_sigma_band: (f64, f64),
    /// Maximum block length as a fraction of the level count (at least one level).
    pub cloud_max_depth: f64,
    pub cloud_log_mean: f64,
    pub cloud_log_sd: f64,
}

impl Default for SurrogateParams {
    fn default() -> Self {
        Self {
            t_top: 210.0,
            t_surface: 288.0,
            t_shape: 0.8,
            t_offset_sd: 6.0,
            t_noise_sd: 2.0,
            t_noise_ar: 0.9,
            t_floor: 150.0,
            sigma_exponent: 1.5,
            p_surface_mean: 101_325.0,
            p_surface_sd: 1_200.0,
            cloudy_fraction: 0.4,
            max_cloud_blocks: 3,
            cloud_sigma_band: (0.4, 0.95),
            cloud_max_depth: 0.1,
            cloud_log_mean: -0.5,
            cloud_log_sd: 1.2,
        }
    }
}

impl SurrogateParams {
    pub fn sigma_grid(&self, grid: LevelGrid) -> Vec<f64> {
        let n = grid.n_full() as f64;
        (1..=grid.n_full())
            .map(|i| ((i as f64 - 0.5) / n).powf(self.sigma_exponent))
            .collect()
    }

    fn profile(&self, grid: LevelGrid, sigma: &[f64], rng: &mut CounterRng) -> Profile {
        let n = grid.n_full();
        let offset = self.t_offset_sd * rng.normal();
        let innovation = (1.0 - self.t_noise_ar * self.t_noise_ar).sqrt();
        let mut noise = self.t_noise_sd * rng.normal();
        let temperature = sigma
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                if i > 0 {
                    noise = self.t_noise_ar * noise + innovation * self.t_noise_sd * rng.normal();
                }
                let base = self.t_top + (self.t_surface - self.t_top) * s.powf(self.t_shape);
                (base + offset + noise).max(self.t_floor)
            })
            .collect();

        let p0 = (self.p_surface_mean + self.p_surface_sd * rng.normal())
            .clamp(self.p_surface_mean - 5.0 * self.p_surface_sd, self.p_surface_mean + 5.0 * self.p_surface_sd);
        let pressure = sigma.iter().map(|s| s * p0).collect();

        let mut tau = vec![0.0; n];
        if rng.uniform() < self.cloudy_fraction {
            let (lo, hi) = self.cloud_sigma_band;
            let first = sigma.iter().position(|&s| s >= lo).unwrap_or(0);
            let last = sigma.iter().rposition(|&s| s <= hi).unwrap_or(n - 1).max(first);
            let max_depth = ((self.cloud_max_depth * n as f64).round() as usize).max(1);
            let blocks = 1 + rng.below(self.max_cloud_blocks);
            for _ in 0..blocks {
                let start = first + rng.below(last - first + 1);
                let depth = 1 + rng.below(max_depth);
                for t in tau.iter_mut().skip(start).take(depth) {
                    *t += (self.cloud_log_mean + self.cloud_log_sd * rng.normal()).exp();
                }
            }
        }
        Profile {
            temperature,
            pressure,
            cloud_optical_depth: tau,
        }
    }
}

/// `n` surrogate profiles with the default parameters; deterministic in `seed`.
pub fn generate_surrogate(n: usize, grid: LevelGrid, seed: u64) -> Result<ProfileSet> {
    generate_surrogate_with(n, grid, seed, &SurrogateParams::default())
}

pub fn generate_surrogate_with(n: usize, grid: LevelGrid, seed: u64, params: &SurrogateParams) -> Result<ProfileSet> {
    if n == 0 {
        return Err(Error::invalid("surrogate profile count must be at least 1"));
    }
    let sigma = params.sigma_grid(grid);
    let mut rng = CounterRng::new(seed);
    let profiles = (0..n).map(|_| params.profile(grid, &sigma, &mut rng)).collect();
    ProfileSet::new(grid, profiles)
}
