//! Spring-loaded inverted pendulum (SLIP) hopping on its apex return map:
//! viability analysis, reward landscapes of a linear Gaussian policy, and
//! actor-critic learning under different initial-state distributions.
//!
//! The numerical core is generic over the scalar type (`f64` or `f32`).
//! The aliases below fix the scalar for the common cases.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod integrator;
pub mod io;
pub mod landscape;
pub mod learning;
pub mod matrix;
pub mod policy;
pub mod rng;
pub mod scalar;
pub mod viability;

pub use error::{Error, Result};
pub use scalar::Real;

pub type ModelParams = dynamics::ModelParams<f64>;
pub type ApexState = dynamics::ApexState<f64>;
pub type StepOutcome = dynamics::StepOutcome<f64>;
pub type IntegratorConfig = integrator::IntegratorConfig<f64>;
pub type GridSpec = viability::GridSpec<f64>;
pub type TransitionGrid = viability::TransitionGrid<f64>;
pub type ViabilityKernel = viability::ViabilityKernel<f64>;
pub type PolicyParams = policy::PolicyParams<f64>;
pub type Env = learning::Env<f64>;
pub type InitStrategy = learning::InitStrategy<f64>;
pub type LandscapeSpec = landscape::LandscapeSpec<f64>;
pub type LandscapeGrid = landscape::LandscapeGrid<f64>;

pub type ModelParamsF32 = dynamics::ModelParams<f32>;
pub type ApexStateF32 = dynamics::ApexState<f32>;
pub type IntegratorConfigF32 = integrator::IntegratorConfig<f32>;
pub type PolicyParamsF32 = policy::PolicyParams<f32>;
pub type EnvF32 = learning::Env<f32>;
