//! Scalar abstraction shared by the numeric kernels.
//!
//! The radiation model, the emulator and the error metrics are written once
//! against [`Real`] and instantiated for `f64` (the default everywhere in the
//! pipeline) or `f32`. Copula fitting stays in `f64` because its special
//! functions and root finders need the headroom.

use std::fmt::{Debug, Display};

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};
use serde::{de::DeserializeOwned, Serialize};

pub trait Real:
    Float
    + NumAssignOps
    + FromPrimitive
    + ToPrimitive
    + LinalgScalar
    + ScalarOperand
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossy conversion from `f64`; every caller passes finite constants.
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite f64 converts to Real")
    }

    fn to64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
