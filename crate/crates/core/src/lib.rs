//! Copula-based augmentation of emulator training sets.
//!
//! Profiles are flattened to feature matrices, their dependence is modelled
//! with a Gaussian or vine copula, synthetic profiles are drawn and labelled
//! with a grey longwave model, and a small network is trained on real plus
//! synthetic samples.
//!
//! The numeric kernels in [`radiation`], [`emulator`] and [`evaluation`] are
//! generic over [`scalar::Real`]; the aliases below fix them to `f64`.

pub mod bicop;
pub mod dataset;
pub mod emulator;
pub mod error;
pub mod evaluation;
pub mod marginals;
pub mod multicop;
pub mod numeric;
pub mod radiation;
pub mod rng;
pub mod scalar;
pub mod special;

pub use error::{Error, Result};

pub type Emulator = emulator::MlpModel<f64>;
pub type Constants = radiation::RadiationConstants<f64>;
pub type Flux = radiation::FluxProfile<f64>;
pub type Metrics = evaluation::ErrorMetrics<f64>;
pub type Projection = evaluation::ProjectionReport<f64>;
