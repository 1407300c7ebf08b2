//! Hybrid SLIP dynamics and the one-dimensional apex-to-apex return map.
//!
//! The apex state is reduced to the normalized height
//! `s = g·y / (vx²/2 + g·y)`, the share of potential energy in the total at
//! apex. With the total energy fixed, `s` determines both apex height and
//! forward speed.
//!
//! Flight phases are ballistic and solved in closed form. Only the stance
//! phase is integrated numerically, terminating at liftoff (`l = l0`) or at
//! ground contact of the body (`y = 0`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{integrate_to_event, Direction, Event, IntegratorConfig, OdeSystem};
use crate::scalar::{deg, Real};

/// Physical constants of the SLIP model plus its (conserved) total energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ModelParams<T> {
    /// Body mass, kg.
    pub mass: T,
    /// Leg spring stiffness, N/m.
    pub stiffness: T,
    /// Leg rest length, m.
    pub rest_length: T,
    /// Gravitational acceleration, m/s².
    pub gravity: T,
    /// Total mechanical energy, J.
    pub total_energy: T,
}

impl<T: Real> Default for ModelParams<T> {
    /// Human-running parameters at 1.86 kJ.
    fn default() -> Self {
        Self {
            mass: T::lit(80.0),
            stiffness: T::lit(8200.0),
            rest_length: T::one(),
            gravity: T::lit(9.81),
            total_energy: T::lit(1860.0),
        }
    }
}

impl<T: Real> ModelParams<T> {
    /// Checks positivity and that some apex state admits the shallowest
    /// landing angle in `actions`.
    pub fn validate(&self, actions: &ActionRange<T>) -> Result<()> {
        let fields = [
            ("mass", self.mass),
            ("stiffness", self.stiffness),
            ("rest_length", self.rest_length),
            ("gravity", self.gravity),
            ("total_energy", self.total_energy),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > T::zero()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        let floor = self.mass * self.gravity * self.rest_length * actions.max.cos();
        if self.total_energy <= floor {
            return Err(Error::Config(format!(
                "total energy {} J leaves no feasible apex state (needs > {floor} J)",
                self.total_energy
            )));
        }
        Ok(())
    }

    /// Apex height at which the whole energy budget is potential.
    pub fn max_apex_height(&self) -> T {
        self.total_energy / (self.mass * self.gravity)
    }

    /// Smallest normalized height that admits a landing angle of `alpha`.
    pub fn min_feasible_s(&self, alpha: T) -> T {
        self.rest_length * alpha.cos() / self.max_apex_height()
    }

    /// Mechanical energy (kinetic, gravitational, spring) of a full state.
    pub fn energy(&self, st: &FullState<T>) -> T {
        let half = T::lit(0.5);
        let kinetic = half * self.mass * (st.vx * st.vx + st.vy * st.vy);
        let potential = self.mass * self.gravity * st.y;
        let spring = match st.phase {
            Phase::Flight => T::zero(),
            Phase::Stance => {
                let dl = self.rest_length - st.leg_length();
                half * self.stiffness * dl * dl
            }
        };
        kinetic + potential + spring
    }
}

/// Admissible landing angles of attack, radians from vertical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ActionRange<T> {
    pub min: T,
    pub max: T,
}

impl<T: Real> Default for ActionRange<T> {
    fn default() -> Self {
        Self { min: T::zero(), max: deg(30.0) }
    }
}

impl<T: Real> ActionRange<T> {
    pub fn clamp(&self, alpha: T) -> T {
        alpha.max(self.min).min(self.max)
    }

    pub fn contains(&self, alpha: T) -> bool {
        alpha >= self.min && alpha <= self.max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Flight,
    Stance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullState<T> {
    pub x: T,
    pub y: T,
    pub vx: T,
    pub vy: T,
    pub phase: Phase,
    /// Foot contact position; only meaningful in stance.
    pub foot_x: T,
}

impl<T: Real> FullState<T> {
    pub fn leg_length(&self) -> T {
        (self.x - self.foot_x).hypot(self.y)
    }
}

/// Normalized apex height, in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ApexState<T>(T);

impl<T: Real> ApexState<T> {
    pub fn new(s_bar: T) -> Result<Self> {
        if s_bar > T::zero() && s_bar <= T::one() {
            Ok(Self(s_bar))
        } else {
            Err(Error::Domain(format!("normalized apex height {s_bar} outside (0, 1]")))
        }
    }

    pub fn value(self) -> T {
        self.0
    }
}

/// Result of one apex-to-apex transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepOutcome<T> {
    NextApex(ApexState<T>),
    Fall,
    /// The foot would start underground at apex.
    Infeasible,
}

impl<T: Real> StepOutcome<T> {
    pub fn next(&self) -> Option<T> {
        match self {
            StepOutcome::NextApex(s) => Some(s.value()),
            _ => None,
        }
    }

    /// Stable small-integer code used in CSV output.
    pub fn code(&self) -> u8 {
        match self {
            StepOutcome::NextApex(_) => 0,
            StepOutcome::Fall => 1,
            StepOutcome::Infeasible => 2,
        }
    }
}

pub fn apex_from_full<T: Real>(y: T, vx: T, p: &ModelParams<T>) -> Result<ApexState<T>> {
    if !(y > T::zero()) || !vx.is_finite() {
        return Err(Error::Domain(format!("apex height must be positive, got y={y}")));
    }
    let potential = p.gravity * y;
    ApexState::new(potential / (T::lit(0.5) * vx * vx + potential))
}

/// Apex height and (non-negative) forward speed for a normalized height.
pub fn full_from_apex<T: Real>(s: ApexState<T>, p: &ModelParams<T>) -> (T, T) {
    let s = s.value();
    let y = s * p.max_apex_height();
    let vx = (T::lit(2.0) * (T::one() - s) * p.total_energy / p.mass).max(T::zero()).sqrt();
    (y, vx)
}

pub fn check_feasible<T: Real>(s: ApexState<T>, alpha: T, p: &ModelParams<T>) -> bool {
    let (y, _) = full_from_apex(s, p);
    y > p.rest_length * alpha.cos()
}

struct Stance<'a, T> {
    p: &'a ModelParams<T>,
    foot_x: T,
}

impl<T: Real> OdeSystem<T, 4> for Stance<'_, T> {
    fn rhs(&self, _t: T, z: &[T; 4]) -> [T; 4] {
        let dx = z[0] - self.foot_x;
        let l = dx.hypot(z[1]);
        let f = self.p.stiffness / self.p.mass * (self.p.rest_length - l) / l;
        [z[2], z[3], f * dx, f * z[1] - self.p.gravity]
    }
}

/// Longest stance phase tolerated before giving up, seconds.
const MAX_STANCE_TIME: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Touchdown,
    Liftoff,
    /// Body reached the ground during stance.
    Ground,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventStamp<T> {
    pub kind: EventKind,
    pub t: T,
    pub state: FullState<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample<T> {
    pub t: T,
    pub state: FullState<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    pub samples: Vec<TrajectorySample<T>>,
    pub events: Vec<EventStamp<T>>,
    pub outcome: StepOutcome<T>,
}

fn flight_state<T: Real>(x: T, y: T, vx: T, vy: T) -> FullState<T> {
    FullState { x, y, vx, vy, phase: Phase::Flight, foot_x: T::zero() }
}

/// Core of the return map. `sink` receives `(t, state)` samples when dense
/// output is wanted; `events` collects touchdown/liftoff/ground stamps.
fn propagate<T: Real>(
    s: ApexState<T>,
    alpha: T,
    p: &ModelParams<T>,
    cfg: &IntegratorConfig<T>,
    mut sink: Option<&mut Vec<TrajectorySample<T>>>,
    events: &mut Vec<EventStamp<T>>,
) -> Result<StepOutcome<T>> {
    if !(alpha.is_finite() && alpha.abs() < T::FRAC_PI_2()) {
        return Err(Error::Domain(format!("angle of attack {alpha} rad out of range")));
    }
    let (y0, vx) = full_from_apex(s, p);
    let g = p.gravity;
    let two = T::lit(2.0);
    let y_td = p.rest_length * alpha.cos();
    if let Some(out) = sink.as_deref_mut() {
        out.push(TrajectorySample { t: T::zero(), state: flight_state(T::zero(), y0, vx, T::zero()) });
    }
    if !(y0 > y_td) {
        return Ok(StepOutcome::Infeasible);
    }

    // Ballistic descent to touchdown.
    let t_td = (two * (y0 - y_td) / g).sqrt();
    if let Some(out) = sink.as_deref_mut() {
        let mut t = cfg.max_step;
        while t < t_td {
            let st = flight_state(vx * t, y0 - T::lit(0.5) * g * t * t, vx, -g * t);
            out.push(TrajectorySample { t, state: st });
            t = t + cfg.max_step;
        }
    }
    let x_td = vx * t_td;
    let foot_x = x_td + p.rest_length * alpha.sin();
    let vy_td = -g * t_td;
    let td_state = FullState { x: x_td, y: y_td, vx, vy: vy_td, phase: Phase::Stance, foot_x };
    events.push(EventStamp { kind: EventKind::Touchdown, t: t_td, state: td_state });

    let sys = Stance { p, foot_x };
    let l0 = p.rest_length;
    let leg = move |z: &[T; 4]| (z[0] - foot_x).hypot(z[1]) - l0;
    let height = |z: &[T; 4]| z[1];
    let stance_events = [
        Event { func: &leg, direction: Direction::Rising },
        Event { func: &height, direction: Direction::Falling },
    ];
    let stance_of = |z: &[T; 4]| FullState { x: z[0], y: z[1], vx: z[2], vy: z[3], phase: Phase::Stance, foot_x };
    let hit = {
        let mut observe = |t: T, z: &[T; 4]| {
            if let Some(out) = sink.as_deref_mut() {
                out.push(TrajectorySample { t: t_td + t, state: stance_of(z) });
            }
        };
        integrate_to_event(
            &sys,
            T::zero(),
            [x_td, y_td, vx, vy_td],
            T::lit(MAX_STANCE_TIME),
            cfg,
            &stance_events,
            &mut observe,
        )?
    };
    let t_hit = t_td + hit.t;
    let [x, y, vx1, vy1] = hit.y;

    if hit.index == 1 {
        events.push(EventStamp { kind: EventKind::Ground, t: t_hit, state: stance_of(&hit.y) });
        return Ok(StepOutcome::Fall);
    }
    events.push(EventStamp { kind: EventKind::Liftoff, t: t_hit, state: stance_of(&hit.y) });
    if vy1 <= T::zero() || vx1 < T::zero() {
        return Ok(StepOutcome::Fall);
    }

    // Ballistic ascent to the next apex.
    let t_up = vy1 / g;
    let y_apex = y + vy1 * vy1 / (two * g);
    if let Some(out) = sink.as_deref_mut() {
        let mut t = cfg.max_step;
        while t < t_up {
            let st = flight_state(x + vx1 * t, y + vy1 * t - T::lit(0.5) * g * t * t, vx1, vy1 - g * t);
            out.push(TrajectorySample { t: t_hit + t, state: st });
            t = t + cfg.max_step;
        }
        out.push(TrajectorySample {
            t: t_hit + t_up,
            state: flight_state(x + vx1 * t_up, y_apex, vx1, T::zero()),
        });
    }
    Ok(StepOutcome::NextApex(apex_from_full(y_apex, vx1, p)?))
}

/// The Poincaré return map `s_{k+1} = P(s_k, alpha_k)`.
pub fn apex_step<T: Real>(
    s: ApexState<T>,
    alpha: T,
    p: &ModelParams<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<StepOutcome<T>> {
    let mut events = Vec::with_capacity(2);
    propagate(s, alpha, p, cfg, None, &mut events)
}

/// Dense version of [`apex_step`] for inspection and plotting.
pub fn simulate_trajectory<T: Real>(
    s: ApexState<T>,
    alpha: T,
    p: &ModelParams<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<Trajectory<T>> {
    let mut samples = Vec::new();
    let mut events = Vec::with_capacity(2);
    let outcome = propagate(s, alpha, p, cfg, Some(&mut samples), &mut events)?;
    Ok(Trajectory { samples, events, outcome })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p() -> ModelParams<f64> {
        ModelParams::default()
    }

    fn s(v: f64) -> ApexState<f64> {
        ApexState::new(v).unwrap()
    }

    #[test]
    fn apex_from_full_examples() {
        let p = p();
        let y_top = 1860.0 / 784.8;
        assert_eq!(apex_from_full(y_top, 0.0, &p).unwrap().value(), 1.0);
        // E_g = 784.8 J of 1860 J; vx from the remaining kinetic energy.
        let vx = (2.0 * (1860.0 - 784.8) / 80.0f64).sqrt();
        assert_relative_eq!(vx, 5.1846, epsilon = 1e-4);
        assert_relative_eq!(apex_from_full(1.0, vx, &p).unwrap().value(), 784.8 / 1860.0, epsilon = 1e-12);
        assert_relative_eq!(apex_from_full(1.0, 5.1846, &p).unwrap().value(), 0.42194, epsilon = 1e-5);
        assert_relative_eq!(apex_from_full(1.60, 3.888, &p).unwrap().value(), 0.675, epsilon = 1e-3);
    }

    #[test]
    fn apex_from_full_rejects_nonpositive_height() {
        assert!(matches!(apex_from_full(0.0, 1.0, &p()), Err(Error::Domain(_))));
        assert!(matches!(apex_from_full(-1.0, 1.0, &p()), Err(Error::Domain(_))));
    }

    #[test]
    fn full_from_apex_examples() {
        let p = p();
        let (y, vx) = full_from_apex(s(1.0), &p);
        assert_relative_eq!(y, 2.37003, epsilon = 1e-5);
        assert_eq!(vx, 0.0);
        let (y, vx) = full_from_apex(s(0.42194), &p);
        assert_relative_eq!(y, 1.0, epsilon = 1e-4);
        assert_relative_eq!(vx, 5.1846, epsilon = 1e-4);
        let (y, vx) = full_from_apex(s(0.5), &p);
        assert_relative_eq!(y, 1.18502, epsilon = 1e-5);
        assert_relative_eq!(vx, 4.8218, epsilon = 1e-4);
    }

    #[test]
    fn apex_state_domain() {
        assert!(ApexState::new(0.0f64).is_err());
        assert!(ApexState::new(1.0 + 1e-12f64).is_err());
        assert!(ApexState::new(f64::NAN).is_err());
        assert!(ApexState::new(1.0f64).is_ok());
    }

    #[test]
    fn feasibility_examples() {
        let p = p();
        assert!(check_feasible(s(1.0), 0.0, &p));
        assert!(!check_feasible(s(0.40), 0.0, &p));
        assert!(check_feasible(s(0.37), 30f64.to_radians(), &p));
        assert_relative_eq!(p.min_feasible_s(30f64.to_radians()), 0.3654, epsilon = 1e-4);
    }

    #[test]
    fn params_validation() {
        let actions = ActionRange::default();
        assert!(p().validate(&actions).is_ok());
        let mut bad = p();
        bad.mass = 0.0;
        assert!(bad.validate(&actions).is_err());
        let mut low = p();
        low.total_energy = 600.0;
        assert!(low.validate(&actions).is_err());
    }

    #[test]
    fn vertical_hop_is_a_fixed_point() {
        let out = apex_step(s(1.0), 0.0, &p(), &IntegratorConfig::default()).unwrap();
        let next = out.next().expect("vertical hop lands on an apex");
        assert!((next - 1.0).abs() < 1e-6, "P(1,0) = {next}");
    }

    #[test]
    fn infeasible_below_touchdown_height() {
        let out = apex_step(s(0.40), 0.0, &p(), &IntegratorConfig::default()).unwrap();
        assert_eq!(out, StepOutcome::Infeasible);
    }

    #[test]
    fn low_state_steep_angle_falls() {
        let out = apex_step(s(0.5), 0.0, &p(), &IntegratorConfig::default()).unwrap();
        assert_eq!(out, StepOutcome::Fall);
        let out = apex_step(s(0.6), 5f64.to_radians(), &p(), &IntegratorConfig::default()).unwrap();
        assert_eq!(out, StepOutcome::Fall);
    }

    #[test]
    fn neutral_angle_exists_inside_kernel() {
        // Below the kernel every action loses height; search the kernel instead.
        let p = p();
        let cfg = IntegratorConfig::default();
        let diff = |a_deg: f64| -> Option<f64> {
            apex_step(s(0.8), a_deg.to_radians(), &p, &cfg).unwrap().next().map(|n| n - 0.8)
        };
        let mut lo = None;
        let mut hi = None;
        for i in 0..=300 {
            let a = i as f64 * 0.1;
            match diff(a) {
                Some(d) if d < 0.0 => lo = Some(a),
                Some(d) if d > 0.0 && lo.is_some() => {
                    hi = Some(a);
                    break;
                }
                _ => {}
            }
        }
        let (mut lo, mut hi) = (lo.unwrap(), hi.unwrap());
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if diff(mid).unwrap() < 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert!(lo > 0.0 && lo < 30.0);
        let at = diff(0.5 * (lo + hi)).unwrap();
        assert!(at.abs() < 1e-6, "residual {at}");
    }

    #[test]
    fn trajectory_vertical_hop_keeps_x() {
        let tr = simulate_trajectory(s(1.0), 0.0, &p(), &IntegratorConfig::default()).unwrap();
        assert!(tr.samples.iter().all(|smp| smp.state.x == 0.0));
        assert!(tr.samples.len() > 10);
    }

    #[test]
    fn trajectory_events_and_energy() {
        let p = p();
        let cfg = IntegratorConfig::default();
        let alpha = 20f64.to_radians();
        let tr = simulate_trajectory(s(0.8), alpha, &p, &cfg).unwrap();
        assert!(matches!(tr.outcome, StepOutcome::NextApex(_)));
        let kinds: Vec<_> = tr.events.iter().map(|e| e.kind).collect();
        assert_eq!(kinds, vec![EventKind::Touchdown, EventKind::Liftoff]);
        let td = tr.events[0].state;
        assert!((td.y - alpha.cos()).abs() < cfg.event_tol);
        let lo = tr.events[1].state;
        assert!((lo.leg_length() - 1.0).abs() < cfg.event_tol);
        for smp in &tr.samples {
            let e = p.energy(&smp.state);
            assert!(((e - 1860.0) / 1860.0).abs() < 1e-6, "energy {e} at t={}", smp.t);
        }
        let stepped = apex_step(s(0.8), alpha, &p, &cfg).unwrap();
        assert_eq!(stepped, tr.outcome);
        assert!(tr.samples.windows(2).all(|w| w[0].t <= w[1].t));
    }

    #[test]
    fn f32_vertical_hop() {
        let p = ModelParams::<f32>::default();
        let out = apex_step(ApexState::new(1.0f32).unwrap(), 0.0, &p, &IntegratorConfig::default()).unwrap();
        assert!((out.next().unwrap() - 1.0).abs() < 1e-3);
    }
}
