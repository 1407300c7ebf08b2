//! Linear Gaussian policy `alpha ~ N(theta0 * s + theta1, sigma^2)`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::{ActionRange, ApexState};
use crate::error::{Error, Result};
use crate::scalar::{deg, to_deg, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "PolicyParamsDeg", from = "PolicyParamsDeg")]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct PolicyParams<T> {
    /// Slope, rad per unit of normalized height.
    pub theta0: T,
    /// Offset, rad.
    pub theta1: T,
    /// Exploration standard deviation, rad.
    pub sigma: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledAction<T> {
    /// Gaussian draw, rad.
    pub drawn: T,
    /// `drawn` clamped to the admissible range, rad.
    pub executed: T,
}

/// How an exploration level quoted in degrees maps to the Gaussian width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplorationScale {
    /// The level is the variance, in deg²: `sigma = sqrt(level)` degrees.
    #[default]
    Variance,
    /// The level is the standard deviation in degrees.
    StdDev,
}

impl ExplorationScale {
    /// Standard deviation in radians for a quoted level.
    pub fn sigma<T: Real>(self, level_deg: f64) -> T {
        match self {
            Self::Variance => deg(level_deg.sqrt()),
            Self::StdDev => deg(level_deg),
        }
    }
}

/// On-disk form: angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyParamsDeg {
    pub theta0_deg: f64,
    pub theta1_deg: f64,
    pub sigma_deg: f64,
}

impl<T: Real> From<PolicyParams<T>> for PolicyParamsDeg {
    fn from(p: PolicyParams<T>) -> Self {
        Self { theta0_deg: to_deg(p.theta0), theta1_deg: to_deg(p.theta1), sigma_deg: to_deg(p.sigma) }
    }
}

impl<T: Real> From<PolicyParamsDeg> for PolicyParams<T> {
    fn from(p: PolicyParamsDeg) -> Self {
        Self { theta0: deg(p.theta0_deg), theta1: deg(p.theta1_deg), sigma: deg(p.sigma_deg) }
    }
}

impl<T: Real> PolicyParams<T> {
    pub fn new(theta0: T, theta1: T, sigma: T) -> Result<Self> {
        let pp = Self { theta0, theta1, sigma };
        pp.validate()?;
        Ok(pp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta0.is_finite() && self.theta1.is_finite()) {
            return Err(Error::Config(format!("policy parameters must be finite: {self:?}")));
        }
        if !(self.sigma > T::zero() && self.sigma.is_finite()) {
            return Err(Error::Config(format!("policy sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }

    pub fn with_sigma(self, sigma: T) -> Self {
        Self { sigma, ..self }
    }

    /// Greedy action, unclamped.
    pub fn mean_action(&self, s: ApexState<T>) -> T {
        self.theta0 * s.value() + self.theta1
    }

    /// Gaussian draw clamped to `actions`; the clamped value is what executes.
    pub fn sample_action<R: Rng + ?Sized>(&self, s: ApexState<T>, actions: &ActionRange<T>, rng: &mut R) -> T {
        self.sample_raw(s, actions, rng).executed
    }

    /// Like [`sample_action`](Self::sample_action) but also returns the
    /// Gaussian draw before clamping.
    pub fn sample_raw<R: Rng + ?Sized>(&self, s: ApexState<T>, actions: &ActionRange<T>, rng: &mut R) -> SampledAction<T> {
        let z: f64 = rng.sample(StandardNormal);
        let drawn = self.mean_action(s) + self.sigma * T::lit(z);
        SampledAction { drawn, executed: actions.clamp(drawn) }
    }

    /// Log-density of the unclamped Gaussian at `a`.
    pub fn log_density(&self, s: ApexState<T>, a: T) -> T {
        let z = (a - self.mean_action(s)) / self.sigma;
        -T::lit(0.5) * z * z - self.sigma.ln() - T::lit(0.5) * (T::lit(2.0) * T::PI()).ln()
    }

    /// `d/dtheta log pi(a | s)` for `(theta0, theta1)`.
    pub fn score(&self, s: ApexState<T>, a: T) -> [T; 2] {
        let g = (a - self.mean_action(s)) / (self.sigma * self.sigma);
        [g * s.value(), g]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn st(v: f64) -> ApexState<f64> {
        ApexState::new(v).unwrap()
    }

    #[test]
    fn mean_action_examples() {
        let pp = PolicyParams::new(0.0, 0.2, 0.1).unwrap();
        assert_eq!(pp.mean_action(st(0.9)), 0.2);
        let pp = PolicyParams::new(0.5, 0.0, 0.1).unwrap();
        assert_eq!(pp.mean_action(st(0.8)), 0.4);
    }

    #[test]
    fn score_examples() {
        let pp = PolicyParams::new(0.0, 0.0, 1.0).unwrap();
        let [d0, d1] = pp.score(st(0.5), 0.2);
        assert!((d0 - 0.1).abs() < 1e-15 && (d1 - 0.2).abs() < 1e-15);
        let pp = PolicyParams::new(-1.3, 1.4, 0.2).unwrap();
        let mu = pp.mean_action(st(0.7));
        assert_eq!(pp.score(st(0.7), mu), [0.0, 0.0]);
    }

    #[test]
    fn validation() {
        assert!(PolicyParams::new(0.0, 0.0, 0.0).is_err());
        assert!(PolicyParams::new(f64::NAN, 0.0, 0.1).is_err());
        assert!(PolicyParams::new(0.0, f64::INFINITY, 0.1).is_err());
    }

    #[test]
    fn tiny_sigma_returns_clamped_mean() {
        let actions = ActionRange::default();
        let mut rng = stream(1, "t", 0);
        let pp = PolicyParams::new(0.0, 0.2, 1e-12).unwrap();
        assert!((pp.sample_action(st(0.8), &actions, &mut rng) - 0.2).abs() < 1e-9);
        let pp = PolicyParams::new(0.0, 1.0, 1e-12).unwrap();
        assert_eq!(pp.sample_action(st(0.8), &actions, &mut rng), actions.max);
        let pp = PolicyParams::new(0.0, -1.0, 1e-12).unwrap();
        assert_eq!(pp.sample_action(st(0.8), &actions, &mut rng), 0.0);
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let actions = ActionRange::default();
        let pp = PolicyParams::new(-1.0, 1.2, 0.2).unwrap();
        let draw = |seed| {
            let mut rng = stream(seed, "t", 0);
            (0..16).map(|_| pp.sample_action(st(0.8), &actions, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6));
    }

    #[test]
    fn empirical_mean_near_center() {
        let actions = ActionRange::default();
        let pp = PolicyParams::new(0.0, 15f64.to_radians(), 5f64.to_radians()).unwrap();
        let mut rng = stream(42, "t", 0);
        let n = 100_000;
        let sum: f64 = (0..n).map(|_| pp.sample_action(st(0.8), &actions, &mut rng)).sum();
        let mean_deg = (sum / n as f64).to_degrees();
        assert!((mean_deg - 15.0).abs() < 0.1, "mean {mean_deg}");
    }

    #[test]
    fn json_uses_degrees() {
        let pp = PolicyParams::new(-1.0f64.to_radians(), 20f64.to_radians(), 8f64.to_radians()).unwrap();
        let v: serde_json::Value = serde_json::to_value(pp).unwrap();
        assert!((v["sigma_deg"].as_f64().unwrap() - 8.0).abs() < 1e-12);
        assert!((v["theta1_deg"].as_f64().unwrap() - 20.0).abs() < 1e-12);
        let back: PolicyParams<f64> = serde_json::from_value(v).unwrap();
        assert!((back.sigma - pp.sigma).abs() < 1e-15);
    }
}
