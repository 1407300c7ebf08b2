//! Scalar abstraction shared by the dynamics, integrator and learning code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type the simulation can run on (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Relative tolerance the adaptive integrator can reasonably honour.
    const DEFAULT_REL_TOL: f64;
    const DEFAULT_ABS_TOL: f64;
    const DEFAULT_EVENT_TOL: f64;

    /// Lossless-enough conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar converts to f64")
    }
}

impl Real for f64 {
    const DEFAULT_REL_TOL: f64 = 1e-9;
    const DEFAULT_ABS_TOL: f64 = 1e-11;
    const DEFAULT_EVENT_TOL: f64 = 1e-10;
}

impl Real for f32 {
    const DEFAULT_REL_TOL: f64 = 1e-5;
    const DEFAULT_ABS_TOL: f64 = 1e-6;
    const DEFAULT_EVENT_TOL: f64 = 1e-5;
}

pub fn deg<T: Real>(degrees: f64) -> T {
    T::lit(degrees.to_radians())
}

pub fn to_deg<T: Real>(radians: T) -> f64 {
    radians.as_f64().to_degrees()
}
