//! Monte-Carlo reward landscape over `(theta0, theta1)` and the salient
//! gradient set (SGS): the parameter cells where the expected return is
//! measurably non-zero.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learning::{evaluate_policy, Env, InitStrategy};
use crate::matrix::{linspace, Matrix};
use crate::policy::PolicyParams;
use crate::rng;
use crate::scalar::{deg, Real};
use crate::viability::ReferenceFit;

/// Default SGS membership threshold, mean steps per rollout.
pub const DEFAULT_SGS_EPS: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis<T> {
    pub min: T,
    pub max: T,
    pub count: usize,
}

impl<T: Real> Axis<T> {
    pub fn values(&self) -> Vec<T> {
        linspace(self.min, self.max, self.count)
    }

    pub fn centered(center: T, half_span: T, count: usize) -> Self {
        Self { min: center - half_span, max: center + half_span, count }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct LandscapeSpec<T> {
    /// Slope axis, rad per unit s.
    pub theta0: Axis<T>,
    /// Offset axis, rad.
    pub theta1: Axis<T>,
    /// Exploration std-dev, rad.
    pub sigma: T,
    pub strategy: InitStrategy<T>,
    pub n_rollouts: usize,
    /// Display cap on mean steps.
    pub reward_cap: f64,
    /// Episode horizon for each rollout.
    pub max_steps: usize,
}

impl<T: Real> LandscapeSpec<T> {
    /// Default axes: centered on a reference fit, the slope spans three times
    /// the fitted slope on either side and the offset a 50° window, which
    /// moves the mean action across `[-10°, 40°]` relative to the reference.
    pub fn axes_around(fit: &ReferenceFit<T>, count: usize) -> (Axis<T>, Axis<T>) {
        let slope_half = T::lit(3.0) * fit.theta0.abs();
        let offset_half = T::lit(0.5) * (deg::<T>(40.0) - deg::<T>(-10.0));
        (Axis::centered(fit.theta0, slope_half, count), Axis::centered(fit.theta1, offset_half, count))
    }

    /// 61×61 grid around `fit`, 100 rollouts per cell.
    pub fn centered_on(fit: &ReferenceFit<T>, sigma: T, strategy: InitStrategy<T>) -> Self {
        let (theta0, theta1) = Self::axes_around(fit, 61);
        Self { theta0, theta1, sigma, strategy, n_rollouts: 100, reward_cap: 1.0, max_steps: 50 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta0.count < 2 || self.theta1.count < 2 {
            return Err(Error::Config("landscape axes need at least two points".into()));
        }
        if !(self.theta0.min < self.theta0.max && self.theta1.min < self.theta1.max) {
            return Err(Error::Config("landscape axes need min < max".into()));
        }
        if self.n_rollouts == 0 || self.max_steps == 0 {
            return Err(Error::Config("n_rollouts and max_steps must be at least 1".into()));
        }
        if !(self.sigma > T::zero()) {
            return Err(Error::Config("landscape sigma must be positive".into()));
        }
        if !(self.reward_cap > 0.0) {
            return Err(Error::Config("reward_cap must be positive".into()));
        }
        self.strategy.validate()
    }

    pub fn same_axes(&self, other: &Self) -> bool {
        self.theta0 == other.theta0 && self.theta1 == other.theta1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct LandscapeGrid<T> {
    pub spec: LandscapeSpec<T>,
    pub seed: u64,
    pub theta0_values: Vec<T>,
    pub theta1_values: Vec<T>,
    /// Row `i` is `theta0_values[i]`, column `j` is `theta1_values[j]`.
    pub mean_steps: Matrix<f64>,
    pub capped: Matrix<f64>,
}

impl<T: Real> LandscapeGrid<T> {
    pub fn policy_at(&self, i: usize, j: usize) -> PolicyParams<T> {
        PolicyParams { theta0: self.theta0_values[i], theta1: self.theta1_values[j], sigma: self.spec.sigma }
    }

    pub fn sgs_mask(&self, eps: f64) -> Matrix<bool> {
        self.mean_steps.map(|&m| m > eps)
    }
}

/// Estimates the landscape cell by cell. Cell `k` uses RNG streams derived
/// from `(seed, k)` only, so the result is independent of scheduling and two
/// landscapes with one seed share per-cell randomness.
pub fn compute_landscape<T: Real>(spec: &LandscapeSpec<T>, env: &Env<T>, seed: u64) -> Result<LandscapeGrid<T>> {
    spec.validate()?;
    env.validate()?;
    let theta0_values = spec.theta0.values();
    let theta1_values = spec.theta1.values();
    let cols = theta1_values.len();
    let mean: Vec<f64> = (0..theta0_values.len() * cols)
        .into_par_iter()
        .map(|k| {
            let pp = PolicyParams { theta0: theta0_values[k / cols], theta1: theta1_values[k % cols], sigma: spec.sigma };
            let cell_seed = rng::derive_seed(seed, rng::tag::LANDSCAPE_CELL, k as u64);
            evaluate_policy(&pp, &spec.strategy, spec.n_rollouts, spec.max_steps, env, cell_seed)
        })
        .collect::<Result<_>>()?;
    let mean_steps = Matrix::from_vec(theta0_values.len(), cols, mean);
    let capped = mean_steps.map(|&m| m.min(spec.reward_cap));
    Ok(LandscapeGrid { spec: *spec, seed, theta0_values, theta1_values, mean_steps, capped })
}

/// Fraction of cells whose mean steps exceed `eps`.
pub fn sgs_area<T: Real>(grid: &LandscapeGrid<T>, eps: f64) -> f64 {
    let cells = grid.mean_steps.as_slice();
    cells.iter().filter(|&&m| m > eps).count() as f64 / cells.len() as f64
}

/// Relative SGS growth from `a` to `b`.
pub fn compare_sgs<T: Real>(a: &LandscapeGrid<T>, b: &LandscapeGrid<T>, eps: f64) -> Result<f64> {
    if !a.spec.same_axes(&b.spec) {
        return Err(Error::Config("landscapes must share axes to be compared".into()));
    }
    let base = sgs_area(a, eps);
    if base == 0.0 {
        return Err(Error::UndefinedComparison);
    }
    Ok((sgs_area(b, eps) - base) / base)
}

/// Cells in `a`'s SGS that are missing from `b`'s.
pub fn sgs_violations<T: Real>(a: &LandscapeGrid<T>, b: &LandscapeGrid<T>, eps: f64) -> usize {
    a.mean_steps
        .as_slice()
        .iter()
        .zip(b.mean_steps.as_slice())
        .filter(|(&x, &y)| x > eps && y <= eps)
        .count()
}

/// Parameter-space coordinates rotated by 45°, for plotting.
pub fn rotated<T: Real>(theta0: T, theta1: T) -> (T, T) {
    let r = T::FRAC_1_SQRT_2();
    (r * (theta0 + theta1), r * (theta1 - theta0))
}
