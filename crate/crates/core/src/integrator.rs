//! Adaptive Dormand–Prince 5(4) integration with event localization.
//!
//! Steps are accepted under a mixed absolute/relative RMS error norm. When an
//! event function changes sign across an accepted step, the crossing is
//! located with Illinois regula falsi on the step length, re-taking a single
//! Runge–Kutta step from the start of the bracket for each trial length, until
//! the event residual drops below `event_tol`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct IntegratorConfig<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    /// Residual bound on event functions at a located event.
    pub event_tol: T,
    /// Upper bound on the step length, seconds.
    pub max_step: T,
}

impl<T: Real> Default for IntegratorConfig<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::lit(T::DEFAULT_REL_TOL),
            abs_tol: T::lit(T::DEFAULT_ABS_TOL),
            event_tol: T::lit(T::DEFAULT_EVENT_TOL),
            max_step: T::lit(1e-2),
        }
    }
}

impl<T: Real> IntegratorConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: T| v.is_finite() && v > T::zero();
        if ok(self.rel_tol) && ok(self.abs_tol) && ok(self.event_tol) && ok(self.max_step) {
            Ok(())
        } else {
            Err(Error::Config(format!("integrator tolerances must be positive: {self:?}")))
        }
    }
}

pub trait OdeSystem<T, const N: usize> {
    fn rhs(&self, t: T, y: &[T; N]) -> [T; N];
}

/// Which sign change of an event function counts as a crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// negative to non-negative
    Rising,
    /// positive to non-positive
    Falling,
}

impl Direction {
    fn crossed<T: Real>(self, before: T, after: T) -> bool {
        match self {
            Direction::Rising => before < T::zero() && after >= T::zero(),
            Direction::Falling => before > T::zero() && after <= T::zero(),
        }
    }
}

pub struct Event<'a, T, const N: usize> {
    pub func: &'a dyn Fn(&[T; N]) -> T,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventHit<T, const N: usize> {
    /// Index into the event slice passed to [`integrate_to_event`].
    pub index: usize,
    pub t: T,
    pub y: [T; N],
}

struct Tableau<T> {
    c: [T; 7],
    a: [[T; 6]; 7],
    b: [T; 7],
    err: [T; 7],
}

impl<T: Real> Tableau<T> {
    fn dopri5() -> Self {
        let l = T::lit;
        let z = T::zero();
        let b = [
            l(35.0 / 384.0),
            z,
            l(500.0 / 1113.0),
            l(125.0 / 192.0),
            l(-2187.0 / 6784.0),
            l(11.0 / 84.0),
            z,
        ];
        let b4 = [
            l(5179.0 / 57600.0),
            z,
            l(7571.0 / 16695.0),
            l(393.0 / 640.0),
            l(-92097.0 / 339200.0),
            l(187.0 / 2100.0),
            l(1.0 / 40.0),
        ];
        let mut err = [z; 7];
        for i in 0..7 {
            err[i] = b[i] - b4[i];
        }
        Self {
            c: [z, l(0.2), l(0.3), l(0.8), l(8.0 / 9.0), T::one(), T::one()],
            a: [
                [z; 6],
                [l(0.2), z, z, z, z, z],
                [l(3.0 / 40.0), l(9.0 / 40.0), z, z, z, z],
                [l(44.0 / 45.0), l(-56.0 / 15.0), l(32.0 / 9.0), z, z, z],
                [
                    l(19372.0 / 6561.0),
                    l(-25360.0 / 2187.0),
                    l(64448.0 / 6561.0),
                    l(-212.0 / 729.0),
                    z,
                    z,
                ],
                [
                    l(9017.0 / 3168.0),
                    l(-355.0 / 33.0),
                    l(46732.0 / 5247.0),
                    l(49.0 / 176.0),
                    l(-5103.0 / 18656.0),
                    z,
                ],
                [
                    l(35.0 / 384.0),
                    z,
                    l(500.0 / 1113.0),
                    l(125.0 / 192.0),
                    l(-2187.0 / 6784.0),
                    l(11.0 / 84.0),
                ],
            ],
            b,
            err,
        }
    }

    /// One explicit step; returns the fifth-order solution and the embedded
    /// error vector.
    fn step<S: OdeSystem<T, N>, const N: usize>(
        &self,
        sys: &S,
        t: T,
        y: &[T; N],
        h: T,
    ) -> ([T; N], [T; N]) {
        let mut k = [[T::zero(); N]; 7];
        for s in 0..7 {
            let mut ys = *y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = self.a[s][j];
                if a != T::zero() {
                    for i in 0..N {
                        ys[i] = ys[i] + h * a * kj[i];
                    }
                }
            }
            k[s] = sys.rhs(t + self.c[s] * h, &ys);
        }
        let mut out = *y;
        let mut err = [T::zero(); N];
        for s in 0..7 {
            for i in 0..N {
                out[i] = out[i] + h * self.b[s] * k[s][i];
                err[i] = err[i] + h * self.err[s] * k[s][i];
            }
        }
        (out, err)
    }
}

fn error_norm<T: Real, const N: usize>(
    y: &[T; N],
    y_new: &[T; N],
    err: &[T; N],
    cfg: &IntegratorConfig<T>,
) -> T {
    let mut acc = T::zero();
    for i in 0..N {
        let scale = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
        let r = err[i] / scale;
        acc = acc + r * r;
    }
    (acc / T::lit(N as f64)).sqrt()
}

const MAX_STEPS: usize = 1_000_000;
const MAX_EVENT_ITERS: usize = 200;

/// Integrates from `(t0, y0)` until the first event fires, calling `observer`
/// on every accepted state (including the initial one and the event state).
///
/// Reaching `t_max` without any event is a numeric error.
pub fn integrate_to_event<T, S, const N: usize>(
    sys: &S,
    t0: T,
    y0: [T; N],
    t_max: T,
    cfg: &IntegratorConfig<T>,
    events: &[Event<'_, T, N>],
    observer: &mut dyn FnMut(T, &[T; N]),
) -> Result<EventHit<T, N>>
where
    T: Real,
    S: OdeSystem<T, N>,
{
    let tab = Tableau::<T>::dopri5();
    let mut t = t0;
    let mut y = y0;
    let mut h = cfg.max_step * T::lit(0.1);
    let mut g_prev: Vec<T> = events.iter().map(|e| (e.func)(&y)).collect();
    observer(t, &y);

    let safety = T::lit(0.9);
    let min_factor = T::lit(0.2);
    let max_factor = T::lit(5.0);
    let exponent = T::lit(0.2);

    for _ in 0..MAX_STEPS {
        if t >= t_max {
            break;
        }
        h = h.min(cfg.max_step).min(t_max - t);
        let (y_new, err) = tab.step(sys, t, &y, h);
        let en = error_norm(&y, &y_new, &err, cfg);
        if !en.is_finite() {
            return Err(Error::Numeric(format!("non-finite error estimate at t={t}")));
        }
        if en > T::one() {
            let factor = (safety * en.powf(-exponent)).max(min_factor);
            h = h * factor;
            if h < T::epsilon() * (T::one() + t.abs()) {
                return Err(Error::Numeric(format!("step size underflow at t={t}")));
            }
            continue;
        }

        // Accepted step: look for the earliest crossing inside it.
        let mut earliest: Option<(usize, T, [T; N])> = None;
        for (idx, ev) in events.iter().enumerate() {
            let g_new = (ev.func)(&y_new);
            if ev.direction.crossed(g_prev[idx], g_new) {
                let (h_hit, y_hit) =
                    localize(&tab, sys, t, &y, h, ev, g_prev[idx], g_new, y_new, cfg)?;
                if earliest.as_ref().is_none_or(|(_, he, _)| h_hit < *he) {
                    earliest = Some((idx, h_hit, y_hit));
                }
            }
        }
        if let Some((index, h_hit, y_hit)) = earliest {
            let t_hit = t + h_hit;
            observer(t_hit, &y_hit);
            return Ok(EventHit { index, t: t_hit, y: y_hit });
        }

        t = t + h;
        y = y_new;
        for (idx, ev) in events.iter().enumerate() {
            g_prev[idx] = (ev.func)(&y);
        }
        observer(t, &y);

        let factor = if en == T::zero() {
            max_factor
        } else {
            (safety * en.powf(-exponent)).max(min_factor).min(max_factor)
        };
        h = h * factor;
    }
    Err(Error::Numeric(format!("no event before t_max={t_max}")))
}

#[allow(clippy::too_many_arguments)]
fn localize<T, S, const N: usize>(
    tab: &Tableau<T>,
    sys: &S,
    t: T,
    y: &[T; N],
    h: T,
    ev: &Event<'_, T, N>,
    g_lo_init: T,
    g_hi_init: T,
    y_hi_init: [T; N],
    cfg: &IntegratorConfig<T>,
) -> Result<(T, [T; N])>
where
    T: Real,
    S: OdeSystem<T, N>,
{
    if g_hi_init.abs() < cfg.event_tol {
        return Ok((h, y_hi_init));
    }
    let (mut lo, mut g_lo) = (T::zero(), g_lo_init);
    let (mut hi, mut g_hi, mut y_hi) = (h, g_hi_init, y_hi_init);
    // side: -1 when the last update moved `lo`, +1 when it moved `hi`.
    let mut side = 0i8;
    let half = T::lit(0.5);
    for _ in 0..MAX_EVENT_ITERS {
        let mut trial = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
        if !(trial > lo && trial < hi) {
            trial = half * (lo + hi);
        }
        let (y_trial, _) = tab.step(sys, t, y, trial);
        let g = (ev.func)(&y_trial);
        if g.abs() < cfg.event_tol {
            return Ok((trial, y_trial));
        }
        if ev.direction.crossed(g_lo_init, g) {
            hi = trial;
            g_hi = g;
            y_hi = y_trial;
            if side == 1 {
                g_lo = g_lo * half;
            }
            side = 1;
        } else {
            lo = trial;
            g_lo = g;
            if side == -1 {
                g_hi = g_hi * half;
            }
            side = -1;
        }
        if hi - lo <= T::epsilon() * (T::one() + t.abs()) {
            let g_end = (ev.func)(&y_hi);
            if g_end.abs() < cfg.event_tol {
                return Ok((hi, y_hi));
            }
            break;
        }
    }
    Err(Error::Numeric(format!(
        "event not localized to residual {} near t={}",
        cfg.event_tol,
        t + hi
    )))
}
