//! Atmospheric profile data: the level grid, profiles and sets of profiles,
//! flattening to sample-by-feature matrices, shuffled splits and the cloud
//! optical depth derivation.

mod io;
mod surrogate;

use std::fmt;

use ndarray::{s, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::CounterRng;

pub use io::{infer_grid, load_profiles, load_profiles_auto, read_profiles, save_profiles, write_profiles};
pub use surrogate::{generate_surrogate, generate_surrogate_with, SurrogateParams};

/// Standard gravitational acceleration [m s^-2].
pub const GRAVITY: f64 = 9.81;
/// Density of liquid water [kg m^-3].
pub const RHO_LIQUID: f64 = 1000.0;
/// Density of ice [kg m^-3].
pub const RHO_ICE: f64 = 917.0;

/// Vertical grid: `n_full` full levels (index 1 = top of atmosphere) and
/// `n_full + 1` half levels (index 0 = TOA interface).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelGrid {
    n_full: usize,
}

impl LevelGrid {
    pub fn new(n_full: usize) -> Result<Self> {
        if n_full == 0 {
            return Err(Error::invalid("level grid needs at least one full level"));
        }
        Ok(Self { n_full })
    }

    pub fn n_full(&self) -> usize {
        self.n_full
    }

    pub fn n_half(&self) -> usize {
        self.n_full + 1
    }

    /// Width of the flattened input matrix (T, p and tau_c per full level).
    pub fn input_width(&self) -> usize {
        3 * self.n_full
    }
}

/// One atmospheric column on full levels, ordered top to surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    /// Dry-bulb air temperature [K].
    pub temperature: Vec<f64>,
    /// Pressure [Pa], strictly increasing toward the surface.
    pub pressure: Vec<f64>,
    /// Cloud layer optical depth [-].
    pub cloud_optical_depth: Vec<f64>,
}

impl Profile {
    pub fn n_levels(&self) -> usize {
        self.temperature.len()
    }

    /// Checks the profile invariants; the message names the violated one.
    pub fn check(&self, grid: LevelGrid) -> std::result::Result<(), String> {
        let n = grid.n_full();
        if self.temperature.len() != n || self.pressure.len() != n || self.cloud_optical_depth.len() != n {
            return Err(format!(
                "expected {n} levels, found T={}, p={}, tau_c={}",
                self.temperature.len(),
                self.pressure.len(),
                self.cloud_optical_depth.len()
            ));
        }
        if let Some(i) = self.temperature.iter().position(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(format!("temperature at level {} is {}", i + 1, self.temperature[i]));
        }
        if let Some(i) = self.pressure.iter().position(|p| !p.is_finite()) {
            return Err(format!("pressure at level {} is not finite", i + 1));
        }
        if let Some(i) = self.pressure.windows(2).position(|w| w[1] <= w[0]) {
            return Err(format!(
                "pressure not strictly increasing between levels {} and {}",
                i + 1,
                i + 2
            ));
        }
        if let Some(i) = self
            .cloud_optical_depth
            .iter()
            .position(|t| !(t.is_finite() && *t >= 0.0))
        {
            return Err(format!(
                "cloud optical depth at level {} is {}",
                i + 1,
                self.cloud_optical_depth[i]
            ));
        }
        Ok(())
    }
}

/// Profiles sharing one grid, optionally paired with downwelling longwave
/// fluxes on half levels [W m^-2].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSet {
    grid: LevelGrid,
    profiles: Vec<Profile>,
    fluxes: Option<Vec<Vec<f64>>>,
}

impl ProfileSet {
    pub fn new(grid: LevelGrid, profiles: Vec<Profile>) -> Result<Self> {
        for (row, p) in profiles.iter().enumerate() {
            p.check(grid).map_err(|reason| Error::InvalidProfile { row, reason })?;
        }
        Ok(Self {
            grid,
            profiles,
            fluxes: None,
        })
    }

    pub fn with_fluxes(mut self, fluxes: Vec<Vec<f64>>) -> Result<Self> {
        if fluxes.len() != self.profiles.len() {
            return Err(Error::shape(
                format!("{} flux profiles", self.profiles.len()),
                fluxes.len(),
            ));
        }
        if let Some((row, f)) = fluxes.iter().enumerate().find(|(_, f)| f.len() != self.grid.n_half()) {
            return Err(Error::InvalidProfile {
                row,
                reason: format!("flux has {} half levels, expected {}", f.len(), self.grid.n_half()),
            });
        }
        self.fluxes = Some(fluxes);
        Ok(self)
    }

    pub fn grid(&self) -> LevelGrid {
        self.grid
    }

    pub fn profiles(&self) -> &[Profile] {
        &self.profiles
    }

    pub fn fluxes(&self) -> Option<&[Vec<f64>]> {
        self.fluxes.as_deref()
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    /// Profiles at `indices`, in that order (fluxes follow when present).
    pub fn select(&self, indices: &[usize]) -> ProfileSet {
        ProfileSet {
            grid: self.grid,
            profiles: indices.iter().map(|&i| self.profiles[i].clone()).collect(),
            fluxes: self
                .fluxes
                .as_ref()
                .map(|f| indices.iter().map(|&i| f[i].clone()).collect()),
        }
    }

    /// Appends `other` after `self`. Fluxes survive only if both sides carry them.
    pub fn concat(&self, other: &ProfileSet) -> Result<ProfileSet> {
        if self.grid != other.grid {
            return Err(Error::shape(
                format!("{} levels", self.grid.n_full()),
                format!("{} levels", other.grid.n_full()),
            ));
        }
        let mut profiles = self.profiles.clone();
        profiles.extend(other.profiles.iter().cloned());
        let fluxes = match (&self.fluxes, &other.fluxes) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).cloned().collect()),
            _ => None,
        };
        Ok(ProfileSet {
            grid: self.grid,
            profiles,
            fluxes,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantity {
    Temperature,
    Pressure,
    CloudOpticalDepth,
    DownwellingFlux,
}

impl Quantity {
    pub fn prefix(self) -> &'static str {
        match self {
            Quantity::Temperature => "T",
            Quantity::Pressure => "p",
            Quantity::CloudOpticalDepth => "tauc",
            Quantity::DownwellingFlux => "L",
        }
    }
}

/// Column label: quantity and level index (full levels from 1, half levels from 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColumnLabel {
    pub quantity: Quantity,
    pub level: usize,
}

impl fmt::Display for ColumnLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.quantity.prefix(), self.level)
    }
}

impl ColumnLabel {
    pub fn parse(s: &str) -> Option<Self> {
        let (prefix, level) = s.trim().rsplit_once('_')?;
        let quantity = match prefix {
            "T" => Quantity::Temperature,
            "p" => Quantity::Pressure,
            "tauc" => Quantity::CloudOpticalDepth,
            "L" => Quantity::DownwellingFlux,
            _ => return None,
        };
        Some(Self {
            quantity,
            level: level.parse().ok()?,
        })
    }
}

/// Input labels in quantity-major order: T_1..T_n, p_1..p_n, tauc_1..tauc_n.
pub fn input_labels(grid: LevelGrid) -> Vec<ColumnLabel> {
    [Quantity::Temperature, Quantity::Pressure, Quantity::CloudOpticalDepth]
        .into_iter()
        .flat_map(|quantity| (1..=grid.n_full()).map(move |level| ColumnLabel { quantity, level }))
        .collect()
}

/// Output labels L_0..L_n.
pub fn output_labels(grid: LevelGrid) -> Vec<ColumnLabel> {
    (0..grid.n_half())
        .map(|level| ColumnLabel {
            quantity: Quantity::DownwellingFlux,
            level,
        })
        .collect()
}

/// Samples-by-features matrix with labelled columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataMatrix {
    pub values: Array2<f64>,
    pub labels: Vec<ColumnLabel>,
}

impl DataMatrix {
    pub fn new(values: Array2<f64>, labels: Vec<ColumnLabel>) -> Result<Self> {
        if values.ncols() != labels.len() {
            return Err(Error::shape(format!("{} columns", labels.len()), values.ncols()));
        }
        Ok(Self { values, labels })
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    /// Stacks rows of `other` below `self`; labels must agree.
    pub fn vstack(&self, other: &DataMatrix) -> Result<DataMatrix> {
        if self.labels != other.labels {
            return Err(Error::shape("matching column labels", "different labels"));
        }
        let values = ndarray::concatenate(Axis(0), &[self.values.view(), other.values.view()])
            .map_err(|e| Error::shape("stackable matrices", e))?;
        Ok(DataMatrix {
            values,
            labels: self.labels.clone(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Inputs,
    Outputs,
}

pub fn flatten(data: &ProfileSet, which: Which) -> Result<DataMatrix> {
    let grid = data.grid();
    let n = grid.n_full();
    match which {
        Which::Inputs => {
            let mut values = Array2::zeros((data.len(), 3 * n));
            for (i, p) in data.profiles().iter().enumerate() {
                let mut row = values.row_mut(i);
                row.slice_mut(s![0..n]).assign(&ndarray::aview1(&p.temperature));
                row.slice_mut(s![n..2 * n]).assign(&ndarray::aview1(&p.pressure));
                row.slice_mut(s![2 * n..3 * n])
                    .assign(&ndarray::aview1(&p.cloud_optical_depth));
            }
            DataMatrix::new(values, input_labels(grid))
        }
        Which::Outputs => {
            let fluxes = data
                .fluxes()
                .ok_or_else(|| Error::invalid("profile set carries no fluxes to flatten"))?;
            let mut values = Array2::zeros((data.len(), grid.n_half()));
            for (i, f) in fluxes.iter().enumerate() {
                values.row_mut(i).assign(&ndarray::aview1(f));
            }
            DataMatrix::new(values, output_labels(grid))
        }
    }
}

/// Inverse of [`flatten`] for input matrices. Rows are validated as profiles.
pub fn unflatten(m: &DataMatrix, grid: LevelGrid) -> Result<ProfileSet> {
    let n = grid.n_full();
    if m.ncols() != 3 * n {
        return Err(Error::shape(format!("{} input columns", 3 * n), m.ncols()));
    }
    let profiles = m
        .values
        .rows()
        .into_iter()
        .map(|row| Profile {
            temperature: row.slice(s![0..n]).to_vec(),
            pressure: row.slice(s![n..2 * n]).to_vec(),
            cloud_optical_depth: row.slice(s![2 * n..3 * n]).to_vec(),
        })
        .collect();
    ProfileSet::new(grid, profiles)
}

/// Fractions of the shuffled set assigned to each split, plus the shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: f64, validation: f64, test: f64, seed: u64) -> Result<Self> {
        let spec = Self {
            train,
            validation,
            test,
            seed,
        };
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> Result<()> {
        let fr = [self.train, self.validation, self.test];
        if fr.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(Error::invalid(format!("split fractions must be positive, got {fr:?}")));
        }
        if fr.iter().sum::<f64>() > 1.0 + 1e-9 {
            return Err(Error::invalid(format!("split fractions sum to more than 1: {fr:?}")));
        }
        Ok(())
    }

    /// Split sizes for `n` items: train and validation rounded, test takes the
    /// remainder when the fractions sum to one.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let n_train = ((self.train * n as f64).round() as usize).min(n);
        let n_val = ((self.validation * n as f64).round() as usize).min(n - n_train);
        let rest = n - n_train - n_val;
        let n_test = if (self.train + self.validation + self.test - 1.0).abs() < 1e-9 {
            rest
        } else {
            ((self.test * n as f64).round() as usize).min(rest)
        };
        (n_train, n_val, n_test)
    }
}

pub struct Splits {
    pub train: ProfileSet,
    pub validation: ProfileSet,
    pub test: ProfileSet,
}

/// Seeded shuffle followed by contiguous train / validation / test slices.
pub fn split_shuffle(data: &ProfileSet, spec: &SplitSpec) -> Result<Splits> {
    spec.check()?;
    if data.is_empty() {
        return Err(Error::invalid("cannot split an empty profile set"));
    }
    let (a, b, c) = spec.sizes(data.len());
    let perm = CounterRng::new(spec.seed).permutation(data.len());
    Ok(Splits {
        train: data.select(&perm[..a]),
        validation: data.select(&perm[a..a + b]),
        test: data.select(&perm[a + b..a + b + c]),
    })
}

/// Cloud layer optical depth from condensate mixing ratios and effective
/// radii: `1.5 * dp / g * (q_l / (rho_l r_l) + q_i / (rho_i r_i))`.
///
/// Levels without a given condensate may carry any radius for it.
pub fn derive_cloud_optical_depth(
    q_liquid: &[f64],
    q_ice: &[f64],
    r_liquid: &[f64],
    r_ice: &[f64],
    dp: &[f64],
) -> Result<Vec<f64>> {
    let n = q_liquid.len();
    for (name, len) in [("q_ice", q_ice.len()), ("r_liquid", r_liquid.len()), ("r_ice", r_ice.len()), ("dp", dp.len())] {
        if len != n {
            return Err(Error::shape(format!("{name} with {n} levels"), len));
        }
    }
    (0..n)
        .map(|i| {
            let (ql, qi, rl, ri, dpi) = (q_liquid[i], q_ice[i], r_liquid[i], r_ice[i], dp[i]);
            if ql < 0.0 || qi < 0.0 || !(dpi > 0.0) {
                return Err(Error::invalid(format!(
                    "level {}: mixing ratios must be >= 0 and dp > 0 (q_l={ql}, q_i={qi}, dp={dpi})",
                    i + 1
                )));
            }
            let term = |q: f64, rho: f64, r: f64, what: &str| -> Result<f64> {
                if q == 0.0 {
                    Ok(0.0)
                } else if r > 0.0 {
                    Ok(q / (rho * r))
                } else {
                    Err(Error::invalid(format!(
                        "level {}: {what} effective radius {r} with nonzero mixing ratio",
                        i + 1
                    )))
                }
            };
            let s = term(ql, RHO_LIQUID, rl, "liquid")? + term(qi, RHO_ICE, ri, "ice")?;
            Ok(1.5 * dpi / GRAVITY * s)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn small_set() -> ProfileSet {
        let grid = LevelGrid::new(3).unwrap();
        ProfileSet::new(
            grid,
            vec![
                Profile {
                    temperature: vec![220.0, 250.0, 280.0],
                    pressure: vec![100.0, 300.0, 500.0],
                    cloud_optical_depth: vec![0.0, 1.5, 0.0],
                },
                Profile {
                    temperature: vec![215.0, 245.0, 290.0],
                    pressure: vec![110.0, 320.0, 510.0],
                    cloud_optical_depth: vec![0.0, 0.0, 0.2],
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn grid_sizes() {
        let g = LevelGrid::new(137).unwrap();
        assert_eq!(g.n_half(), 138);
        assert_eq!(g.input_width(), 411);
        assert!(LevelGrid::new(0).is_err());
    }

    #[test]
    fn flatten_shapes_and_order() {
        let s = small_set();
        let x = flatten(&s, Which::Inputs).unwrap();
        assert_eq!(x.values.dim(), (2, 9));
        assert_eq!(x.values[[0, 3]], 100.0);
        assert_eq!(x.values[[1, 8]], 0.2);
        assert_eq!(x.labels[0].to_string(), "T_1");
        assert_eq!(x.labels[5].to_string(), "p_3");
        assert_eq!(x.labels[6].to_string(), "tauc_1");
        assert_eq!(unflatten(&x, s.grid()).unwrap(), s);
        assert!(flatten(&s, Which::Outputs).is_err());
    }

    #[test]
    fn full_grid_widths() {
        let g = LevelGrid::new(137).unwrap();
        assert_eq!(input_labels(g).len(), 411);
        assert_eq!(output_labels(g).len(), 138);
    }

    #[test]
    fn unflatten_rejects_wrong_width() {
        let s = small_set();
        let x = flatten(&s, Which::Inputs).unwrap();
        assert!(unflatten(&x, LevelGrid::new(2).unwrap()).is_err());
    }

    #[test]
    fn rejects_non_monotone_pressure() {
        let grid = LevelGrid::new(3).unwrap();
        let bad = Profile {
            temperature: vec![220.0, 250.0, 280.0],
            pressure: vec![500.0, 300.0, 100.0],
            cloud_optical_depth: vec![0.0; 3],
        };
        let err = ProfileSet::new(grid, vec![small_set().profiles()[0].clone(), bad]).unwrap_err();
        assert!(matches!(err, Error::InvalidProfile { row: 1, .. }), "{err}");
    }

    #[test]
    fn split_sizes_follow_rounding_rule() {
        let spec = SplitSpec::new(0.4, 0.2, 0.4, 1).unwrap();
        assert_eq!(spec.sizes(25_000), (10_000, 5_000, 10_000));
        assert_eq!(spec.sizes(10), (4, 2, 4));
        assert_eq!(spec.sizes(2500), (1000, 500, 1000));
        assert!(SplitSpec::new(0.6, 0.3, 0.3, 1).is_err());
        assert!(SplitSpec::new(0.0, 0.3, 0.3, 1).is_err());
    }

    #[test]
    fn split_is_deterministic_disjoint_and_exhaustive() {
        let grid = LevelGrid::new(4).unwrap();
        let set = generate_surrogate(37, grid, 5).unwrap();
        let spec = SplitSpec::new(0.4, 0.2, 0.4, 9).unwrap();
        let a = split_shuffle(&set, &spec).unwrap();
        let b = split_shuffle(&set, &spec).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.test, b.test);
        assert_eq!(a.train.len() + a.validation.len() + a.test.len(), 37);
        let mut all: Vec<Profile> = a.train.profiles().to_vec();
        all.extend_from_slice(a.validation.profiles());
        all.extend_from_slice(a.test.profiles());
        for p in set.profiles() {
            assert_eq!(all.iter().filter(|q| *q == p).count(), 1);
        }
    }

    #[test]
    fn split_rejects_empty() {
        let grid = LevelGrid::new(2).unwrap();
        let empty = ProfileSet::new(grid, vec![]).unwrap();
        let spec = SplitSpec::new(0.4, 0.2, 0.4, 0).unwrap();
        assert!(split_shuffle(&empty, &spec).is_err());
    }

    #[test]
    fn cloud_optical_depth_examples() {
        let zero = derive_cloud_optical_depth(&[0.0; 3], &[0.0; 3], &[0.0; 3], &[0.0; 3], &[1000.0; 3]).unwrap();
        assert_eq!(zero, vec![0.0; 3]);

        let tau = derive_cloud_optical_depth(&[1e-4], &[0.0], &[1e-5], &[0.0], &[1000.0]).unwrap();
        assert_abs_diff_eq!(tau[0], 1.5 * (1000.0 / 9.81) * (1e-4 / (1000.0 * 1e-5)), epsilon = 1e-12);
        assert_abs_diff_eq!(tau[0], 1.529, epsilon = 5e-4);

        let doubled = derive_cloud_optical_depth(&[2e-4], &[0.0], &[1e-5], &[0.0], &[1000.0]).unwrap();
        assert_abs_diff_eq!(doubled[0], 2.0 * tau[0], epsilon = 1e-12);
    }

    #[test]
    fn cloud_optical_depth_errors() {
        assert!(derive_cloud_optical_depth(&[1e-4], &[0.0], &[0.0], &[0.0], &[1000.0]).is_err());
        assert!(derive_cloud_optical_depth(&[-1e-4], &[0.0], &[1e-5], &[0.0], &[1000.0]).is_err());
        assert!(derive_cloud_optical_depth(&[0.0], &[1e-5], &[0.0], &[-2e-5], &[1000.0]).is_err());
        assert!(derive_cloud_optical_depth(&[0.0], &[0.0], &[0.0], &[0.0], &[0.0]).is_err());
    }

    proptest! {
        #[test]
        fn cloud_optical_depth_is_additive(ql in 0.0..1e-3f64, qi in 0.0..1e-3f64,
                                           rl in 1e-6..1e-4f64, ri in 1e-6..1e-4f64, dp in 1.0..5000.0f64) {
            let both = derive_cloud_optical_depth(&[ql], &[qi], &[rl], &[ri], &[dp]).unwrap()[0];
            let liq = derive_cloud_optical_depth(&[ql], &[0.0], &[rl], &[ri], &[dp]).unwrap()[0];
            let ice = derive_cloud_optical_depth(&[0.0], &[qi], &[rl], &[ri], &[dp]).unwrap()[0];
            prop_assert!(both >= 0.0);
            prop_assert!((both - liq - ice).abs() <= 1e-12 * both.max(1.0));
        }

        #[test]
        fn flatten_round_trip(seed in any::<u64>(), n in 1usize..20, levels in 1usize..12) {
            let grid = LevelGrid::new(levels).unwrap();
            let set = generate_surrogate(n, grid, seed).unwrap();
            let x = flatten(&set, Which::Inputs).unwrap();
            prop_assert_eq!(unflatten(&x, grid).unwrap(), set);
        }
    }
}
