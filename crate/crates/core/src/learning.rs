//! Episodic actor-critic with eligibility traces on the apex return map, and
//! the initial-state strategies being compared.
//!
//! Each apex reached earns a reward of 1. An episode ends on a fall, on an
//! infeasible sampled action (treated as a fall), or at the step cap.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{apex_step, ActionRange, ApexState, ModelParams, StepOutcome};
use crate::error::{Error, Result};
use crate::integrator::IntegratorConfig;
use crate::policy::{ExplorationScale, PolicyParams, SampledAction};
use crate::rng::{self, StreamRng};
use crate::scalar::Real;
use crate::viability::ViabilityKernel;

/// What happens to a policy draw outside the admissible action range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutOfRange {
    /// Execute the nearest admissible angle.
    Clamp,
    /// Terminate the episode as a fall.
    #[default]
    Fail,
}

/// Everything needed to roll the model forward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct Env<T> {
    pub params: ModelParams<T>,
    pub integrator: IntegratorConfig<T>,
    pub actions: ActionRange<T>,
    pub out_of_range: OutOfRange,
}

impl<T: Real> Default for Env<T> {
    fn default() -> Self {
        Self {
            params: ModelParams::default(),
            integrator: IntegratorConfig::default(),
            actions: ActionRange::default(),
            out_of_range: OutOfRange::default(),
        }
    }
}

impl<T: Real> Env<T> {
    pub fn validate(&self) -> Result<()> {
        self.params.validate(&self.actions)?;
        self.integrator.validate()
    }

    /// Least normalized height from which the shallowest action is executable.
    pub fn min_feasible_s(&self) -> T {
        self.params.min_feasible_s(self.actions.max)
    }
}

/// Where episodes start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitStrategy<T> {
    /// Uniform over the viability kernel `[low, high]`.
    Viable { low: T, high: T },
    /// Uniform over every state with a feasible action, `[low, 1]`.
    Feasible { low: T },
    /// Feasible until the rolling average exceeds `switch_threshold` steps,
    /// then viable for the rest of the trial.
    FeasibleThenViable { feasible_low: T, viable_low: T, viable_high: T, switch_threshold: T },
}

impl<T: Real> InitStrategy<T> {
    pub fn viable(kernel: &ViabilityKernel<T>) -> Self {
        InitStrategy::Viable { low: kernel.s_low, high: kernel.s_high }
    }

    pub fn feasible(env: &Env<T>) -> Self {
        InitStrategy::Feasible { low: env.min_feasible_s() }
    }

    pub fn feasible_then_viable(env: &Env<T>, kernel: &ViabilityKernel<T>, switch_threshold: T) -> Self {
        InitStrategy::FeasibleThenViable {
            feasible_low: env.min_feasible_s(),
            viable_low: kernel.s_low,
            viable_high: kernel.s_high,
            switch_threshold,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InitStrategy::Viable { .. } => "viable",
            InitStrategy::Feasible { .. } => "feasible",
            InitStrategy::FeasibleThenViable { .. } => "feasible_then_viable",
        }
    }

    /// Sampling interval, before or after the one-way switch.
    pub fn interval(&self, switched: bool) -> (T, T) {
        match *self {
            InitStrategy::Viable { low, high } => (low, high),
            InitStrategy::Feasible { low } => (low, T::one()),
            InitStrategy::FeasibleThenViable { feasible_low, viable_low, viable_high, .. } => {
                if switched {
                    (viable_low, viable_high)
                } else {
                    (feasible_low, T::one())
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        for switched in [false, true] {
            let (lo, hi) = self.interval(switched);
            if !(lo > T::zero() && lo <= hi && hi <= T::one()) {
                return Err(Error::Config(format!("bad initial-state interval [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

/// Uniform draw from the strategy's interval (pre-switch for
/// [`InitStrategy::FeasibleThenViable`]).
pub fn sample_initial_state<T: Real, R: Rng + ?Sized>(strategy: &InitStrategy<T>, rng: &mut R) -> Result<ApexState<T>> {
    sample_in(strategy, false, rng)
}

fn sample_in<T: Real, R: Rng + ?Sized>(strategy: &InitStrategy<T>, switched: bool, rng: &mut R) -> Result<ApexState<T>> {
    let (lo, hi) = strategy.interval(switched);
    if !(lo > T::zero() && lo <= hi) {
        return Err(Error::EmptyKernel);
    }
    let u: f64 = rng.random();
    ApexState::new((lo + (hi - lo) * T::lit(u)).min(hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition<T> {
    pub s: T,
    /// Executed (clamped) action, rad.
    pub action: T,
    /// Policy draw before clamping, rad. Scores are taken at this value.
    pub drawn: T,
    pub reward: T,
    /// Next apex state; `None` when the transition is terminal.
    pub next: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace<T> {
    pub transitions: Vec<Transition<T>>,
    /// Ended by the step cap rather than a fall.
    pub truncated: bool,
}

impl<T: Real> EpisodeTrace<T> {
    /// Apexes reached; equals the undiscounted return.
    pub fn steps(&self) -> usize {
        self.transitions.iter().filter(|t| t.next.is_some()).count()
    }
}

/// Rolls the policy from `start` until a fall or `max_steps` apexes.
pub fn run_episode<T: Real, R: Rng + ?Sized>(
    pp: &PolicyParams<T>,
    start: ApexState<T>,
    env: &Env<T>,
    max_steps: usize,
    action_rng: &mut R,
) -> Result<EpisodeTrace<T>> {
    let mut s = start;
    let mut transitions = Vec::new();
    loop {
        if transitions.len() >= max_steps {
            return Ok(EpisodeTrace { transitions, truncated: true });
        }
        let SampledAction { drawn, executed: action } = pp.sample_raw(s, &env.actions, action_rng);
        let outcome = if env.out_of_range == OutOfRange::Fail && !env.actions.contains(drawn) {
            StepOutcome::Fall
        } else {
            apex_step(s, action, &env.params, &env.integrator)?
        };
        match outcome {
            StepOutcome::NextApex(next) => {
                transitions.push(Transition { s: s.value(), action, drawn, reward: T::one(), next: Some(next.value()) });
                s = next;
            }
            StepOutcome::Fall | StepOutcome::Infeasible => {
                transitions.push(Transition { s: s.value(), action, drawn, reward: T::zero(), next: None });
                return Ok(EpisodeTrace { transitions, truncated: false });
            }
        }
    }
}

/// Schedule entry: once the rolling average reaches `min_avg_steps`, the
/// exploration level drops to `level_deg` (read through the config's
/// [`ExplorationScale`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaLevel {
    pub min_avg_steps: f64,
    pub level_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerConfig {
    pub gamma: f64,
    pub alpha_actor: f64,
    pub alpha_critic: f64,
    pub lambda: f64,
    pub variance_schedule: Vec<SigmaLevel>,
    pub exploration_scale: ExplorationScale,
    pub success_threshold: f64,
    pub rolling_window: usize,
    pub max_episodes: usize,
    pub max_steps_per_episode: usize,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        let level = |min_avg_steps, level_deg| SigmaLevel { min_avg_steps, level_deg };
        Self {
            gamma: 0.95,
            alpha_actor: 0.001,
            alpha_critic: 0.001,
            lambda: 0.9,
            variance_schedule: vec![level(0.0, 15.0), level(2.0, 10.0), level(3.0, 7.5), level(4.0, 5.0)],
            exploration_scale: ExplorationScale::default(),
            success_threshold: 15.0,
            rolling_window: 50,
            max_episodes: 20_000,
            max_steps_per_episode: 500,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return fail("gamma must lie in (0, 1)");
        }
        if !(self.lambda >= 0.0 && self.lambda <= 1.0) {
            return fail("lambda must lie in [0, 1]");
        }
        if !(self.alpha_actor > 0.0 && self.alpha_critic > 0.0) {
            return fail("step sizes must be positive");
        }
        if self.variance_schedule.is_empty() {
            return fail("variance schedule is empty");
        }
        for w in self.variance_schedule.windows(2) {
            if !(w[1].min_avg_steps > w[0].min_avg_steps) {
                return fail("schedule thresholds must strictly increase");
            }
            if !(w[1].level_deg < w[0].level_deg) {
                return fail("schedule levels must strictly decrease");
            }
        }
        if self.variance_schedule.iter().any(|l| !(l.level_deg > 0.0)) {
            return fail("schedule levels must be positive");
        }
        if self.rolling_window == 0 || self.max_episodes == 0 || self.max_steps_per_episode == 0 {
            return fail("window, episode and step limits must be at least 1");
        }
        Ok(())
    }

    /// Exploration std-dev at schedule level `i`, rad.
    pub fn sigma_at<T: Real>(&self, i: usize) -> T {
        self.exploration_scale.sigma(self.variance_schedule[i].level_deg)
    }

    /// Highest schedule level whose threshold `avg` has reached.
    pub fn schedule_level(&self, avg: f64) -> usize {
        self.variance_schedule.iter().rposition(|l| avg >= l.min_avg_steps).unwrap_or(0)
    }
}

/// Linear state-value estimate `V(s) = w0 * s + w1`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CriticParams<T> {
    pub w0: T,
    pub w1: T,
}

impl<T: Real> CriticParams<T> {
    pub fn value(&self, s: T) -> T {
        self.w0 * s + self.w1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Traces<T> {
    pub critic: [T; 2],
    pub actor: [T; 2],
}

impl<T: Real> Traces<T> {
    pub fn zero() -> Self {
        Self { critic: [T::zero(); 2], actor: [T::zero(); 2] }
    }
}

/// One actor-critic(lambda) step. Returns the TD error.
///
/// The actor's score is evaluated at the pre-clamp draw: the clamp belongs to
/// the environment, and the Gaussian is the policy being differentiated.
pub fn td_update<T: Real>(
    actor: &mut PolicyParams<T>,
    critic: &mut CriticParams<T>,
    traces: &mut Traces<T>,
    tr: &Transition<T>,
    cfg: &LearnerConfig,
) -> Result<T> {
    let gamma = T::lit(cfg.gamma);
    let decay = gamma * T::lit(cfg.lambda);
    let bootstrap = tr.next.map_or(T::zero(), |n| gamma * critic.value(n));
    let delta = tr.reward + bootstrap - critic.value(tr.s);

    let s = ApexState::new(tr.s)?;
    let score = actor.score(s, tr.drawn);
    let features = [tr.s, T::one()];
    for k in 0..2 {
        traces.critic[k] = decay * traces.critic[k] + features[k];
        traces.actor[k] = decay * traces.actor[k] + score[k];
    }
    let (ac, aa) = (T::lit(cfg.alpha_critic), T::lit(cfg.alpha_actor));
    let next_critic = CriticParams {
        w0: critic.w0 + ac * delta * traces.critic[0],
        w1: critic.w1 + ac * delta * traces.critic[1],
    };
    let next_actor = PolicyParams {
        theta0: actor.theta0 + aa * delta * traces.actor[0],
        theta1: actor.theta1 + aa * delta * traces.actor[1],
        sigma: actor.sigma,
    };
    let finite = [delta, next_critic.w0, next_critic.w1, next_actor.theta0, next_actor.theta1];
    if finite.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!(
            "delta={delta} critic={next_critic:?} actor={next_actor:?} at s={} a={}",
            tr.s, tr.action
        )));
    }
    *critic = next_critic;
    *actor = next_actor;
    Ok(delta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct TrainResult<T> {
    pub success: bool,
    pub episodes_used: usize,
    pub final_policy: PolicyParams<T>,
    pub final_critic: CriticParams<T>,
    /// Steps reached per episode.
    pub learning_curve: Vec<usize>,
    /// Schedule level used per episode, as configured (degrees).
    pub sigma_curve: Vec<f64>,
    /// First episode sampled from the viable interval after a switch.
    pub switch_episode: Option<usize>,
    pub seed: u64,
}

struct Rolling {
    window: usize,
    buf: VecDeque<usize>,
    sum: usize,
}

impl Rolling {
    fn new(window: usize) -> Self {
        Self { window, buf: VecDeque::with_capacity(window), sum: 0 }
    }

    fn push(&mut self, v: usize) {
        if self.buf.len() == self.window {
            self.sum -= self.buf.pop_front().unwrap_or(0);
        }
        self.buf.push_back(v);
        self.sum += v;
    }

    /// Mean over a full window; `None` until the window fills.
    fn full_mean(&self) -> Option<f64> {
        (self.buf.len() == self.window).then(|| self.sum as f64 / self.window as f64)
    }
}

/// Runs one learning trial. The policy's own `sigma` is replaced by the
/// schedule; all randomness comes from streams derived from `seed`.
pub fn train<T: Real>(
    initial: &PolicyParams<T>,
    strategy: &InitStrategy<T>,
    lc: &LearnerConfig,
    env: &Env<T>,
    seed: u64,
) -> Result<TrainResult<T>> {
    lc.validate()?;
    strategy.validate()?;
    let mut init_rng = rng::stream(seed, rng::tag::INIT_STATE, 0);
    let mut action_rng = rng::stream(seed, rng::tag::ACTION, 0);

    let mut level = 0usize;
    let mut actor = initial.with_sigma(lc.sigma_at(0));
    actor.validate()?;
    let mut critic = CriticParams::default();
    let mut rolling = Rolling::new(lc.rolling_window);
    let mut switched = false;
    let mut switch_episode = None;
    let mut curve = Vec::new();
    let mut sigmas = Vec::new();
    let switch_threshold = match strategy {
        InitStrategy::FeasibleThenViable { switch_threshold, .. } => Some(switch_threshold.as_f64()),
        _ => None,
    };

    let mut success = false;
    while curve.len() < lc.max_episodes {
        let start = sample_in(strategy, switched, &mut init_rng)?;
        let episode = run_episode(&actor, start, env, lc.max_steps_per_episode, &mut action_rng)?;
        let mut traces = Traces::zero();
        for tr in &episode.transitions {
            td_update(&mut actor, &mut critic, &mut traces, tr, lc)?;
        }
        let steps = episode.steps();
        curve.push(steps);
        sigmas.push(lc.variance_schedule[level].level_deg);
        rolling.push(steps);

        if let Some(avg) = rolling.full_mean() {
            if avg >= lc.success_threshold {
                success = true;
                break;
            }
            let target = lc.schedule_level(avg);
            if target > level {
                level = target;
                actor.sigma = lc.sigma_at(level);
            }
            if let Some(th) = switch_threshold {
                if !switched && avg > th {
                    switched = true;
                    switch_episode = Some(curve.len());
                }
            }
        }
    }
    Ok(TrainResult {
        success,
        episodes_used: curve.len(),
        final_policy: actor,
        final_critic: critic,
        learning_curve: curve,
        sigma_curve: sigmas,
        switch_episode,
        seed,
    })
}

/// Mean apexes reached over `n_rollouts` episodes with fixed parameters.
/// Rollout `k` draws its start and actions from streams `(seed, k)`, so two
/// strategies evaluated with one seed see matched randomness.
pub fn evaluate_policy<T: Real>(
    pp: &PolicyParams<T>,
    strategy: &InitStrategy<T>,
    n_rollouts: usize,
    max_steps: usize,
    env: &Env<T>,
    seed: u64,
) -> Result<f64> {
    if n_rollouts == 0 {
        return Err(Error::Config("n_rollouts must be at least 1".into()));
    }
    let mut total = 0usize;
    for k in 0..n_rollouts as u64 {
        let mut init_rng: StreamRng = rng::stream(seed, rng::tag::INIT_STATE, k);
        let mut action_rng: StreamRng = rng::stream(seed, rng::tag::ACTION, k);
        let start = sample_initial_state(strategy, &mut init_rng)?;
        total += run_episode(pp, start, env, max_steps, &mut action_rng)?.steps();
    }
    Ok(total as f64 / n_rollouts as f64)
}
