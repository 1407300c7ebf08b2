//! Brute-force transition grid over `(s, alpha)` and the viability kernel it
//! implies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{apex_step, ActionRange, ApexState, ModelParams, StepOutcome};
use crate::error::{Error, Result};
use crate::integrator::IntegratorConfig;
use crate::matrix::{linspace, Matrix};
use crate::scalar::{deg, to_deg, Real};

/// Slack allowed when testing whether a successor lies above the lowest
/// kernel row. Covers integration error only; far below one grid cell.
const HULL_SLACK: f64 = 1e-7;

/// Sign-change refinement stops once the bracket is this narrow, radians.
const NEUTRAL_ALPHA_TOL: f64 = 1e-6;

/// A successor within this distance of its origin counts as an exact
/// limit cycle when no sign change brackets it.
const EXACT_CYCLE_TOL: f64 = 1e-9;

/// Default band, in normalized height, within which a step counts as neutral.
pub const DEFAULT_NEUTRAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct GridSpec<T> {
    pub s_min: T,
    pub s_max: T,
    pub n_s: usize,
    /// radians
    pub alpha_min: T,
    /// radians
    pub alpha_max: T,
    pub n_alpha: usize,
}

impl<T: Real> Default for GridSpec<T> {
    fn default() -> Self {
        Self {
            s_min: T::lit(0.01),
            s_max: T::one(),
            n_s: 401,
            alpha_min: T::zero(),
            alpha_max: deg(30.0),
            n_alpha: 301,
        }
    }
}

impl<T: Real> GridSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.s_min > T::zero() && self.s_min < self.s_max && self.s_max <= T::one()) {
            return Err(Error::Config(format!(
                "grid needs 0 < s_min < s_max <= 1, got [{}, {}]",
                self.s_min, self.s_max
            )));
        }
        if self.n_s < 2 || self.n_alpha < 2 {
            return Err(Error::Config("grid needs at least two points per axis".into()));
        }
        if !(self.alpha_min <= self.alpha_max) || self.alpha_min < T::zero() {
            return Err(Error::Config("grid needs 0 <= alpha_min <= alpha_max".into()));
        }
        Ok(())
    }

    pub fn s_values(&self) -> Vec<T> {
        linspace(self.s_min, self.s_max, self.n_s)
    }

    pub fn alpha_values(&self) -> Vec<T> {
        linspace(self.alpha_min, self.alpha_max, self.n_alpha)
    }

    pub fn s_step(&self) -> T {
        (self.s_max - self.s_min) / T::lit((self.n_s - 1) as f64)
    }

    pub fn actions(&self) -> ActionRange<T> {
        ActionRange { min: self.alpha_min, max: self.alpha_max }
    }

    /// Both resolutions doubled (cell widths halved).
    pub fn refined(&self) -> Self {
        Self { n_s: 2 * self.n_s - 1, n_alpha: 2 * self.n_alpha - 1, ..*self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct TransitionGrid<T> {
    pub spec: GridSpec<T>,
    pub params: ModelParams<T>,
    pub s_values: Vec<T>,
    pub alpha_values: Vec<T>,
    /// Row `i` is `s_values[i]`, column `j` is `alpha_values[j]`.
    pub outcomes: Matrix<StepOutcome<T>>,
}

impl<T: Real> TransitionGrid<T> {
    /// Smallest grid row with at least one feasible action.
    pub fn min_feasible_s(&self) -> Option<T> {
        (0..self.s_values.len())
            .find(|&i| self.outcomes.row(i).iter().any(|o| !matches!(o, StepOutcome::Infeasible)))
            .map(|i| self.s_values[i])
    }

    fn nearest_row(&self, s: T) -> usize {
        let step = self.spec.s_step();
        let k = ((s - self.spec.s_min) / step).round().max(T::zero()).as_f64() as usize;
        k.min(self.s_values.len() - 1)
    }
}

/// Evaluates the return map on every grid cell (in parallel).
pub fn compute_transition_grid<T: Real>(
    spec: &GridSpec<T>,
    p: &ModelParams<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<TransitionGrid<T>> {
    spec.validate()?;
    p.validate(&spec.actions())?;
    cfg.validate()?;
    let s_values = spec.s_values();
    let alpha_values = spec.alpha_values();
    let n_alpha = alpha_values.len();
    let outcomes = (0..s_values.len() * n_alpha)
        .into_par_iter()
        .map(|k| {
            let (s, a) = (s_values[k / n_alpha], alpha_values[k % n_alpha]);
            ApexState::new(s)
                .and_then(|st| apex_step(st, a, p, cfg))
                .map_err(|e| Error::Cell { s_bar: s.as_f64(), alpha_deg: to_deg(a), source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TransitionGrid {
        spec: *spec,
        params: *p,
        outcomes: Matrix::from_vec(s_values.len(), n_alpha, outcomes),
        s_values,
        alpha_values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellClass {
    Infeasible,
    Fall,
    Higher,
    Lower,
    Neutral,
}

impl CellClass {
    pub const ALL: [CellClass; 5] =
        [CellClass::Infeasible, CellClass::Fall, CellClass::Higher, CellClass::Lower, CellClass::Neutral];

    pub fn name(self) -> &'static str {
        match self {
            CellClass::Infeasible => "infeasible",
            CellClass::Fall => "fall",
            CellClass::Higher => "higher",
            CellClass::Lower => "lower",
            CellClass::Neutral => "neutral",
        }
    }
}

pub fn classify_outcome<T: Real>(s: T, outcome: &StepOutcome<T>, tol_neutral: T) -> CellClass {
    match outcome {
        StepOutcome::Infeasible => CellClass::Infeasible,
        StepOutcome::Fall => CellClass::Fall,
        StepOutcome::NextApex(next) => {
            let d = next.value() - s;
            if d > tol_neutral {
                CellClass::Higher
            } else if d < -tol_neutral {
                CellClass::Lower
            } else {
                CellClass::Neutral
            }
        }
    }
}

pub fn classify<T: Real>(grid: &TransitionGrid<T>, tol_neutral: T) -> Result<Matrix<CellClass>> {
    if !(tol_neutral > T::zero()) {
        return Err(Error::Config(format!("tol_neutral must be positive, got {tol_neutral}")));
    }
    Ok(Matrix::from_fn(grid.outcomes.rows(), grid.outcomes.cols(), |i, j| {
        classify_outcome(grid.s_values[i], grid.outcomes.get(i, j), tol_neutral)
    }))
}

pub fn class_counts(classes: &Matrix<CellClass>) -> Vec<(CellClass, usize)> {
    CellClass::ALL
        .iter()
        .map(|&c| (c, classes.as_slice().iter().filter(|&&x| x == c).count()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViabilityKernel<T> {
    /// Lowest member row.
    pub s_low: T,
    /// Highest member row.
    pub s_high: T,
    /// Membership per grid row, aligned with `TransitionGrid::s_values`.
    pub members: Vec<bool>,
    /// Fixed-point rounds until convergence.
    pub rounds: usize,
}

impl<T: Real> ViabilityKernel<T> {
    pub fn contains(&self, s: T) -> bool {
        s >= self.s_low && s <= self.s_high
    }

    /// Kernel given directly as an interval, e.g. loaded from a summary.
    pub fn from_interval(s_low: T, s_high: T) -> Result<Self> {
        if !(s_low > T::zero() && s_low <= s_high && s_high <= T::one()) {
            return Err(Error::Config(format!("bad kernel interval [{s_low}, {s_high}]")));
        }
        Ok(Self { s_low, s_high, members: Vec::new(), rounds: 0 })
    }

    pub fn member_count(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }
}

/// Iteratively removes rows with no action landing back among the members.
///
/// A successor is accepted only inside the closed hull of the current member
/// rows (with [`HULL_SLACK`]) and when its nearest grid row is a member.
pub fn compute_viability_kernel<T: Real>(grid: &TransitionGrid<T>) -> Result<ViabilityKernel<T>> {
    let n = grid.s_values.len();
    let mut members: Vec<bool> =
        (0..n).map(|i| grid.outcomes.row(i).iter().any(|o| o.next().is_some())).collect();
    let slack = T::lit(HULL_SLACK);
    let mut rounds = 0;
    loop {
        let (lo, hi) = match hull(&members, &grid.s_values) {
            Some(h) => h,
            None => return Err(Error::EmptyKernel),
        };
        let next: Vec<bool> = (0..n)
            .map(|i| {
                members[i]
                    && grid.outcomes.row(i).iter().any(|o| match o.next() {
                        Some(s_next) => {
                            s_next >= lo - slack
                                && s_next <= hi + slack
                                && members[grid.nearest_row(s_next)]
                        }
                        None => false,
                    })
            })
            .collect();
        rounds += 1;
        if next == members {
            break;
        }
        members = next;
    }
    let (s_low, s_high) = hull(&members, &grid.s_values).ok_or(Error::EmptyKernel)?;
    Ok(ViabilityKernel { s_low, s_high, members, rounds })
}

fn hull<T: Real>(members: &[bool], s: &[T]) -> Option<(T, T)> {
    let first = members.iter().position(|&m| m)?;
    let last = members.iter().rposition(|&m| m)?;
    Some((s[first], s[last]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeutralPoint<T> {
    pub s: T,
    /// radians
    pub alpha: T,
}

/// Limit-cycle angle for each kernel row: the first place along the row where
/// `P(s, alpha) - s` changes sign, refined by bisection on the return map.
pub fn neutral_curve<T: Real>(
    grid: &TransitionGrid<T>,
    kernel: &ViabilityKernel<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<Vec<NeutralPoint<T>>> {
    let exact = T::lit(EXACT_CYCLE_TOL);
    let mut curve = Vec::new();
    for (i, &s) in grid.s_values.iter().enumerate() {
        if !kernel.members.get(i).copied().unwrap_or_else(|| kernel.contains(s)) {
            continue;
        }
        let diffs: Vec<Option<T>> =
            grid.outcomes.row(i).iter().map(|o| o.next().map(|n| n - s)).collect();
        let mut found = None;
        for j in 0..diffs.len() {
            if let Some(d) = diffs[j] {
                if d.abs() <= exact {
                    found = Some(grid.alpha_values[j]);
                    break;
                }
            }
            if j + 1 < diffs.len() {
                if let (Some(a), Some(b)) = (diffs[j], diffs[j + 1]) {
                    if (a < T::zero()) != (b < T::zero()) {
                        found = refine_root(s, grid.alpha_values[j], grid.alpha_values[j + 1], a, &grid.params, cfg)?;
                        if found.is_some() {
                            break;
                        }
                    }
                }
            }
        }
        if let Some(alpha) = found {
            curve.push(NeutralPoint { s, alpha });
        }
    }
    Ok(curve)
}

fn refine_root<T: Real>(
    s: T,
    mut lo: T,
    mut hi: T,
    d_lo: T,
    p: &ModelParams<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<Option<T>> {
    let state = ApexState::new(s)?;
    let lo_negative = d_lo < T::zero();
    let tol = T::lit(NEUTRAL_ALPHA_TOL);
    let half = T::lit(0.5);
    while hi - lo > tol {
        let mid = half * (lo + hi);
        let Some(next) = apex_step(state, mid, p, cfg)?.next() else {
            return Ok(None);
        };
        if ((next - s) < T::zero()) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(half * (lo + hi)))
}

/// Least-squares line `alpha = theta0 * s + theta1` through a neutral curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFit<T> {
    /// rad per unit s
    pub theta0: T,
    /// rad
    pub theta1: T,
    /// RMS of the fit residual, rad
    pub rms: T,
    /// Largest absolute residual, rad
    pub max_abs: T,
}

pub fn fit_reference_policy<T: Real>(curve: &[NeutralPoint<T>]) -> Result<ReferenceFit<T>> {
    if curve.len() < 2 {
        return Err(Error::DegenerateCurve(format!("{} point(s); need at least 2", curve.len())));
    }
    let n = T::lit(curve.len() as f64);
    let mean_s = curve.iter().fold(T::zero(), |acc, p| acc + p.s) / n;
    let mean_a = curve.iter().fold(T::zero(), |acc, p| acc + p.alpha) / n;
    let (mut sxx, mut sxy) = (T::zero(), T::zero());
    for p in curve {
        let ds = p.s - mean_s;
        sxx = sxx + ds * ds;
        sxy = sxy + ds * (p.alpha - mean_a);
    }
    if !(sxx > T::zero()) {
        return Err(Error::DegenerateCurve("all points share one s value".into()));
    }
    let theta0 = sxy / sxx;
    let theta1 = mean_a - theta0 * mean_s;
    let mut sq = T::zero();
    let mut max_abs = T::zero();
    for p in curve {
        let r = p.alpha - (theta0 * p.s + theta1);
        sq = sq + r * r;
        max_abs = max_abs.max(r.abs());
    }
    Ok(ReferenceFit { theta0, theta1, rms: (sq / n).sqrt(), max_abs })
}
