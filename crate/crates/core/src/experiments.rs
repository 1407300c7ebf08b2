//! Learning experiments: filtered random policy initializations, paired
//! trials under the two initialization strategies, repeated single-policy
//! trials, and their reports.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, StrategyKind};
use crate::error::{Error, Result};
use crate::io::{write_csv, write_json, RunManifest};
use crate::landscape::{Axis, LandscapeSpec};
use crate::learning::{evaluate_policy, train, Env, InitStrategy, LearnerConfig};
use crate::policy::PolicyParams;
use crate::rng::{self, tag};
use crate::scalar::{to_deg, Real};
use crate::viability::{
    compute_transition_grid, compute_viability_kernel, fit_reference_policy, neutral_curve, GridSpec, NeutralPoint,
    ReferenceFit, TransitionGrid, ViabilityKernel,
};

/// Rectangle of policy parameters, rad per unit s and rad.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    pub theta0: [f64; 2],
    pub theta1: [f64; 2],
}

impl ParamBox {
    pub fn from_axes<T: Real>(theta0: &Axis<T>, theta1: &Axis<T>) -> Self {
        Self { theta0: [theta0.min.as_f64(), theta0.max.as_f64()], theta1: [theta1.min.as_f64(), theta1.max.as_f64()] }
    }

    fn validate(&self) -> Result<()> {
        let ok = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] < r[1];
        if ok(self.theta0) && ok(self.theta1) {
            Ok(())
        } else {
            Err(Error::Config(format!("bad sampling box {self:?}")))
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        (rng.random_range(self.theta0[0]..self.theta0[1]), rng.random_range(self.theta1[0]..self.theta1[1]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub n_policy_inits: usize,
    /// Minimum mean steps for an initial policy to be kept.
    pub filter_threshold: f64,
    pub filter_rollouts: usize,
    pub n_repeats_single: usize,
    /// Rolling-average steps at which feasible initialization hands over to viable.
    pub switch_threshold: f64,
    /// Draws after which a low acceptance rate aborts sampling.
    pub filter_patience: usize,
    pub min_acceptance: f64,
    /// Policy sampling region; `None` uses the landscape axes.
    pub sampling_box: Option<ParamBox>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_policy_inits: 50,
            filter_threshold: 0.5,
            filter_rollouts: 100,
            n_repeats_single: 10,
            switch_threshold: 3.0,
            filter_patience: 10_000,
            min_acceptance: 0.01,
            sampling_box: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_policy_inits == 0 || self.filter_rollouts == 0 || self.n_repeats_single == 0 || self.filter_patience == 0 {
            return Err(Error::Config("experiment counts must be at least 1".into()));
        }
        if !(self.filter_threshold >= 0.0) || !(self.switch_threshold >= 0.0) {
            return Err(Error::Config("filter and switch thresholds must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.min_acceptance) {
            return Err(Error::Config("min_acceptance must lie in [0, 1]".into()));
        }
        match &self.sampling_box {
            Some(b) => b.validate(),
            None => Ok(()),
        }
    }
}

/// Model analysis shared by landscapes and experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct Prepared<T> {
    pub grid: TransitionGrid<T>,
    pub kernel: ViabilityKernel<T>,
    pub curve: Vec<NeutralPoint<T>>,
    pub fit: ReferenceFit<T>,
}

pub fn prepare<T: Real>(env: &Env<T>, spec: &GridSpec<T>) -> Result<Prepared<T>> {
    if spec.actions() != env.actions {
        return Err(Error::Config("grid angle range must equal the admissible action range".into()));
    }
    let grid = compute_transition_grid(spec, &env.params, &env.integrator)?;
    let kernel = compute_viability_kernel(&grid)?;
    let curve = neutral_curve(&grid, &kernel, &env.integrator)?;
    let fit = fit_reference_policy(&curve)?;
    Ok(Prepared { grid, kernel, curve, fit })
}

impl<T: Real> Prepared<T> {
    pub fn strategy(&self, kind: StrategyKind, env: &Env<T>) -> InitStrategy<T> {
        match kind {
            StrategyKind::Viable => InitStrategy::viable(&self.kernel),
            StrategyKind::Feasible => InitStrategy::feasible(env),
        }
    }
}

/// Landscape spec from the configuration tree.
pub fn landscape_spec(cfg: &RunConfig, prep: &Prepared<f64>, kind: StrategyKind, sigma_level_deg: f64) -> LandscapeSpec<f64> {
    let l = &cfg.landscape;
    let (theta0, theta1) = LandscapeSpec::axes_around(&prep.fit, l.count);
    LandscapeSpec {
        theta0,
        theta1,
        sigma: cfg.learner.exploration_scale.sigma(sigma_level_deg),
        strategy: prep.strategy(kind, &cfg.env),
        n_rollouts: l.n_rollouts,
        reward_cap: l.reward_cap,
        max_steps: l.max_steps,
    }
}

/// Sampling region for initial policies: the configured box or the
/// landscape axes.
pub fn sampling_box(cfg: &RunConfig, prep: &Prepared<f64>) -> ParamBox {
    cfg.experiment.sampling_box.unwrap_or_else(|| {
        let (a, b) = LandscapeSpec::axes_around(&prep.fit, cfg.landscape.count);
        ParamBox::from_axes(&a, &b)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct FilteredInit<T> {
    /// Position in the draw sequence.
    pub draw: usize,
    pub policy: PolicyParams<T>,
    pub filter_mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStats {
    pub draws: usize,
    pub accepted: usize,
}

const FILTER_BATCH: usize = 64;

/// Rejection-samples `n` initial policies uniformly from `bx`, keeping those
/// whose mean steps under `strategy` reach `cfg.filter_threshold`. Draw `d`
/// is evaluated with streams derived from `(seed, d)`, so the result does
/// not depend on the thread count.
#[allow(clippy::too_many_arguments)]
pub fn sample_filtered_policy_inits<T: Real>(
    cfg: &ExperimentConfig,
    n: usize,
    bx: &ParamBox,
    sigma: T,
    strategy: &InitStrategy<T>,
    max_steps: usize,
    env: &Env<T>,
    seed: u64,
) -> Result<(Vec<FilteredInit<T>>, FilterStats)> {
    cfg.validate()?;
    bx.validate()?;
    let mut draw_rng = rng::stream(seed, tag::POLICY_INIT, 0);
    let mut accepted = Vec::with_capacity(n);
    let mut draws = 0usize;
    while accepted.len() < n {
        let batch: Vec<(usize, PolicyParams<T>)> = (0..FILTER_BATCH)
            .map(|i| {
                let (t0, t1) = bx.sample(&mut draw_rng);
                (draws + i, PolicyParams { theta0: T::lit(t0), theta1: T::lit(t1), sigma })
            })
            .collect();
        let means: Vec<f64> = batch
            .par_iter()
            .map(|(d, pp)| {
                let s = rng::derive_seed(seed, tag::FILTER, *d as u64);
                evaluate_policy(pp, strategy, cfg.filter_rollouts, max_steps, env, s)
            })
            .collect::<Result<_>>()?;
        for ((d, pp), m) in batch.into_iter().zip(means) {
            draws = d + 1;
            if m >= cfg.filter_threshold {
                accepted.push(FilteredInit { draw: d, policy: pp, filter_mean: m });
                if accepted.len() == n {
                    break;
                }
            }
            if draws >= cfg.filter_patience && (accepted.len() as f64) < cfg.min_acceptance * draws as f64 {
                return Err(Error::FilterStarved { accepted: accepted.len(), draws });
            }
        }
    }
    let stats = FilterStats { draws, accepted: accepted.len() };
    Ok((accepted, stats))
}

/// One learning trial, flattened for CSV. Angles in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub init_index: usize,
    pub repeat: usize,
    pub strategy: String,
    pub seed: u64,
    pub theta0_deg: f64,
    pub theta1_deg: f64,
    pub sigma_deg: f64,
    pub success: bool,
    pub episodes_used: usize,
    pub switch_episode: Option<usize>,
    /// Mean steps of the final policy under viable initialization.
    pub final_eval: Option<f64>,
    pub final_theta0_deg: Option<f64>,
    pub final_theta1_deg: Option<f64>,
    /// Set when the trial aborted; the record is kept.
    pub error: Option<String>,
}

/// A trial to run under every strategy with the same seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialJob<T> {
    pub init_index: usize,
    pub repeat: usize,
    pub policy: PolicyParams<T>,
    pub seed: u64,
}

/// Runs every job under every strategy in parallel. Output order is job
/// order, then strategy order.
pub fn run_trials<T: Real>(
    jobs: &[TrialJob<T>],
    strategies: &[InitStrategy<T>],
    final_strategy: &InitStrategy<T>,
    final_rollouts: usize,
    lc: &LearnerConfig,
    env: &Env<T>,
) -> Result<Vec<TrialRecord>> {
    if jobs.is_empty() || strategies.is_empty() {
        return Err(Error::Config("no trials to run".into()));
    }
    lc.validate()?;
    let work: Vec<(&TrialJob<T>, &InitStrategy<T>)> =
        jobs.iter().flat_map(|j| strategies.iter().map(move |s| (j, s))).collect();
    work.par_iter()
        .map(|&(job, strategy)| {
            let mut rec = TrialRecord {
                init_index: job.init_index,
                repeat: job.repeat,
                strategy: strategy.name().to_string(),
                seed: job.seed,
                theta0_deg: to_deg(job.policy.theta0),
                theta1_deg: to_deg(job.policy.theta1),
                sigma_deg: to_deg(lc.sigma_at::<T>(0)),
                success: false,
                episodes_used: 0,
                switch_episode: None,
                final_eval: None,
                final_theta0_deg: None,
                final_theta1_deg: None,
                error: None,
            };
            let outcome = train(&job.policy, strategy, lc, env, job.seed).and_then(|r| {
                let eval_seed = rng::derive_seed(job.seed, tag::FINAL_EVAL, 0);
                let eval = evaluate_policy(&r.final_policy, final_strategy, final_rollouts, lc.max_steps_per_episode, env, eval_seed)?;
                Ok((r, eval))
            });
            match outcome {
                Ok((r, eval)) => {
                    rec.success = r.success;
                    rec.episodes_used = r.episodes_used;
                    rec.switch_episode = r.switch_episode;
                    rec.final_eval = Some(eval);
                    rec.final_theta0_deg = Some(to_deg(r.final_policy.theta0));
                    rec.final_theta1_deg = Some(to_deg(r.final_policy.theta1));
                }
                Err(e) => rec.error = Some(e.to_string()),
            }
            Ok(rec)
        })
        .collect()
}

/// The two strategies compared in every experiment: viable throughout, and
/// feasible until the switch threshold.
pub fn compared_strategies<T: Real>(prep: &Prepared<T>, env: &Env<T>, switch_threshold: f64) -> [InitStrategy<T>; 2] {
    [
        InitStrategy::viable(&prep.kernel),
        InitStrategy::feasible_then_viable(env, &prep.kernel, T::lit(switch_threshold)),
    ]
}

/// One paired trial per filtered init, seeds matched within each pair.
pub fn run_paired_trials<T: Real>(
    inits: &[FilteredInit<T>],
    strategies: &[InitStrategy<T>; 2],
    final_rollouts: usize,
    lc: &LearnerConfig,
    env: &Env<T>,
    seed: u64,
) -> Result<Vec<TrialRecord>> {
    let jobs: Vec<_> = inits
        .iter()
        .enumerate()
        .map(|(i, init)| TrialJob { init_index: i, repeat: 0, policy: init.policy, seed: rng::derive_seed(seed, tag::TRIAL, i as u64) })
        .collect();
    run_trials(&jobs, strategies, &strategies[0], final_rollouts, lc, env)
}

/// `repeats` paired trials from a single init.
pub fn run_single_trials<T: Real>(
    init: &FilteredInit<T>,
    repeats: usize,
    strategies: &[InitStrategy<T>; 2],
    final_rollouts: usize,
    lc: &LearnerConfig,
    env: &Env<T>,
    seed: u64,
) -> Result<Vec<TrialRecord>> {
    let jobs: Vec<_> = (0..repeats)
        .map(|r| TrialJob { init_index: 0, repeat: r, policy: init.policy, seed: rng::derive_seed(seed, tag::TRIAL, r as u64) })
        .collect();
    run_trials(&jobs, strategies, &strategies[0], final_rollouts, lc, env)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairCategory {
    Both,
    OnlyTreatment,
    OnlyBaseline,
    Neither,
}

/// A pair's outcome at its initial parameters, for overlaying on landscapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub init_index: usize,
    pub repeat: usize,
    pub theta0_deg: f64,
    pub theta1_deg: f64,
    pub category: PairCategory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub baseline: String,
    pub treatment: String,
    pub pairs: usize,
    pub baseline_successes: usize,
    pub treatment_successes: usize,
    pub baseline_rate: f64,
    pub treatment_rate: f64,
    pub both: usize,
    pub only_treatment: usize,
    pub only_baseline: usize,
    pub neither: usize,
    /// `(treatment - baseline) / baseline` successes; absent when the
    /// baseline never succeeds.
    pub relative_improvement: Option<f64>,
    pub aborted_trials: usize,
}

fn pair_up<'a>(records: &'a [TrialRecord], baseline: &str, treatment: &str) -> Result<Vec<(&'a TrialRecord, &'a TrialRecord)>> {
    let mut map: BTreeMap<(usize, usize), [Option<&TrialRecord>; 2]> = BTreeMap::new();
    for r in records {
        let slot = if r.strategy == baseline {
            0
        } else if r.strategy == treatment {
            1
        } else {
            return Err(Error::Config(format!("unexpected strategy {}", r.strategy)));
        };
        let entry = map.entry((r.init_index, r.repeat)).or_default();
        if entry[slot].replace(r).is_some() {
            return Err(Error::Config(format!("duplicate {} record for init {} repeat {}", r.strategy, r.init_index, r.repeat)));
        }
    }
    map.into_iter()
        .map(|((i, k), pair)| match pair {
            [Some(a), Some(b)] => Ok((a, b)),
            _ => Err(Error::Config(format!("init {i} repeat {k} is missing a strategy"))),
        })
        .collect()
}

fn category(base: bool, treat: bool) -> PairCategory {
    match (base, treat) {
        (true, true) => PairCategory::Both,
        (false, true) => PairCategory::OnlyTreatment,
        (true, false) => PairCategory::OnlyBaseline,
        (false, false) => PairCategory::Neither,
    }
}

pub fn pair_outcomes(records: &[TrialRecord], baseline: &str, treatment: &str) -> Result<Vec<PairOutcome>> {
    Ok(pair_up(records, baseline, treatment)?
        .into_iter()
        .map(|(b, t)| PairOutcome {
            init_index: b.init_index,
            repeat: b.repeat,
            theta0_deg: b.theta0_deg,
            theta1_deg: b.theta1_deg,
            category: category(b.success, t.success),
        })
        .collect())
}

pub fn report(records: &[TrialRecord], baseline: &str, treatment: &str) -> Result<Summary> {
    let pairs = pair_up(records, baseline, treatment)?;
    if pairs.is_empty() {
        return Err(Error::Config("no records to report".into()));
    }
    let count = |c: PairCategory| pairs.iter().filter(|(b, t)| category(b.success, t.success) == c).count();
    let (both, only_t, only_b, neither) =
        (count(PairCategory::Both), count(PairCategory::OnlyTreatment), count(PairCategory::OnlyBaseline), count(PairCategory::Neither));
    let bs = both + only_b;
    let ts = both + only_t;
    let n = pairs.len();
    Ok(Summary {
        baseline: baseline.to_string(),
        treatment: treatment.to_string(),
        pairs: n,
        baseline_successes: bs,
        treatment_successes: ts,
        baseline_rate: bs as f64 / n as f64,
        treatment_rate: ts as f64 / n as f64,
        both,
        only_treatment: only_t,
        only_baseline: only_b,
        neither,
        relative_improvement: (bs > 0).then(|| (ts as f64 - bs as f64) / bs as f64),
        aborted_trials: records.iter().filter(|r| r.error.is_some()).count(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Paired trials over filtered random inits.
    Random,
    /// Repeated trials from one filtered init.
    Single,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub prepared: Prepared<f64>,
    pub sampling_box: ParamBox,
    pub inits: Vec<FilteredInit<f64>>,
    pub filter: FilterStats,
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
}

/// Runs a full experiment from the configuration tree, reusing `prepared`
/// when given.
pub fn run_experiment(cfg: &RunConfig, mode: Mode, prepared: Option<Prepared<f64>>) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let env = &cfg.env;
    let prep = match prepared {
        Some(p) => p,
        None => prepare(env, &cfg.grid)?,
    };
    let ec = &cfg.experiment;
    let lc = &cfg.learner;
    let bx = sampling_box(cfg, &prep);
    let viable = InitStrategy::viable(&prep.kernel);
    let n = match mode {
        Mode::Random => ec.n_policy_inits,
        Mode::Single => 1,
    };
    let (inits, filter) =
        sample_filtered_policy_inits(ec, n, &bx, lc.sigma_at(0), &viable, lc.max_steps_per_episode, env, cfg.seed)?;
    let strategies = compared_strategies(&prep, env, ec.switch_threshold);
    let records = match mode {
        Mode::Random => run_paired_trials(&inits, &strategies, ec.filter_rollouts, lc, env, cfg.seed)?,
        Mode::Single => run_single_trials(&inits[0], ec.n_repeats_single, &strategies, ec.filter_rollouts, lc, env, cfg.seed)?,
    };
    let summary = report(&records, strategies[0].name(), strategies[1].name())?;
    Ok(ExperimentOutput { prepared: prep, sampling_box: bx, inits, filter, records, summary })
}

#[derive(Serialize)]
struct InitRow {
    init_index: usize,
    draw: usize,
    theta0_deg: f64,
    theta1_deg: f64,
    sigma_deg: f64,
    filter_mean: f64,
}

#[derive(Serialize)]
struct KernelArtifact<'a> {
    kernel: &'a ViabilityKernel<f64>,
    reference_fit: &'a ReferenceFit<f64>,
    sampling_box: &'a ParamBox,
    filter: &'a FilterStats,
}

/// Writes the run directory: records, pairs, inits, kernel, summary and the
/// manifest that digests them.
pub fn write_experiment(dir: &Path, cfg: &RunConfig, mode: Mode, out: &ExperimentOutput) -> Result<RunManifest> {
    std::fs::create_dir_all(dir)?;
    write_csv(&dir.join("records.csv"), &out.records)?;
    let pairs = pair_outcomes(&out.records, &out.summary.baseline, &out.summary.treatment)?;
    write_csv(&dir.join("pairs.csv"), &pairs)?;
    write_csv(
        &dir.join("inits.csv"),
        out.inits.iter().enumerate().map(|(i, f)| InitRow {
            init_index: i,
            draw: f.draw,
            theta0_deg: to_deg(f.policy.theta0),
            theta1_deg: to_deg(f.policy.theta1),
            sigma_deg: to_deg(f.policy.sigma),
            filter_mean: f.filter_mean,
        }),
    )?;
    write_json(
        &dir.join("kernel.json"),
        &KernelArtifact {
            kernel: &out.prepared.kernel,
            reference_fit: &out.prepared.fit,
            sampling_box: &out.sampling_box,
            filter: &out.filter,
        },
    )?;
    write_json(&dir.join("summary.json"), &out.summary)?;
    let command = match mode {
        Mode::Random => "experiment --mode random50",
        Mode::Single => "experiment --mode single",
    };
    RunManifest::write(
        dir,
        command,
        cfg.seed,
        cfg.to_value(),
        &["records.csv", "pairs.csv", "inits.csv", "kernel.json", "summary.json"],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(i: usize, strategy: &str, success: bool) -> TrialRecord {
        TrialRecord {
            init_index: i,
            repeat: 0,
            strategy: strategy.into(),
            seed: 0,
            theta0_deg: 0.0,
            theta1_deg: 0.0,
            sigma_deg: 1.0,
            success,
            episodes_used: 1,
            switch_episode: None,
            final_eval: None,
            final_theta0_deg: None,
            final_theta1_deg: None,
            error: None,
        }
    }

    #[test]
    fn all_success_report() {
        let rs: Vec<_> = (0..4).flat_map(|i| [rec(i, "a", true), rec(i, "b", true)]).collect();
        let s = report(&rs, "a", "b").unwrap();
        assert_eq!((s.baseline_rate, s.treatment_rate), (1.0, 1.0));
        assert_eq!(s.relative_improvement, Some(0.0));
        assert_eq!(s.both, 4);
    }

    #[test]
    fn categories_partition_pairs() {
        let rs = vec![
            rec(0, "a", true),
            rec(0, "b", false),
            rec(1, "a", false),
            rec(1, "b", true),
            rec(2, "b", true),
            rec(2, "a", true),
            rec(3, "a", false),
            rec(3, "b", false),
            rec(4, "b", true),
            rec(4, "a", false),
        ];
        let s = report(&rs, "a", "b").unwrap();
        assert_eq!(s.both + s.only_treatment + s.only_baseline + s.neither, 5);
        assert_eq!((s.both, s.only_treatment, s.only_baseline, s.neither), (1, 2, 1, 1));
        assert_eq!(s.relative_improvement, Some(0.5));
    }

    #[test]
    fn zero_baseline_has_no_improvement_ratio() {
        let s = report(&[rec(0, "a", false), rec(0, "b", true)], "a", "b").unwrap();
        assert_eq!(s.relative_improvement, None);
    }

    #[test]
    fn broken_pairs_are_rejected() {
        assert!(report(&[rec(0, "a", true)], "a", "b").is_err());
        assert!(report(&[rec(0, "a", true), rec(0, "a", true), rec(0, "b", true)], "a", "b").is_err());
        assert!(report(&[rec(0, "c", true)], "a", "b").is_err());
    }

    #[test]
    fn config_validation() {
        ExperimentConfig::default().validate().unwrap();
        let mut c = ExperimentConfig::default();
        c.n_policy_inits = 0;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.sampling_box = Some(ParamBox { theta0: [1.0, 0.0], theta1: [0.0, 1.0] });
        assert!(c.validate().is_err());
    }

    #[test]
    fn vacuous_filter_accepts_first_draws() {
        let env = Env::<f64>::default();
        let kernel = ViabilityKernel::from_interval(0.678, 1.0).unwrap();
        let viable = InitStrategy::viable(&kernel);
        let cfg = ExperimentConfig { filter_threshold: 0.0, filter_rollouts: 2, ..Default::default() };
        let bx = ParamBox { theta0: [-2.0, 0.0], theta1: [0.5, 2.0] };
        let (inits, stats) = sample_filtered_policy_inits(&cfg, 5, &bx, 0.05, &viable, 20, &env, 1).unwrap();
        assert_eq!(inits.iter().map(|f| f.draw).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4]);
        assert_eq!(stats, FilterStats { draws: 5, accepted: 5 });
    }

    #[test]
    fn hopeless_box_starves_the_filter() {
        let env = Env::<f64>::default();
        let kernel = ViabilityKernel::from_interval(0.678, 1.0).unwrap();
        let viable = InitStrategy::viable(&kernel);
        // Mean actions far above the admissible range: every rollout fails at once.
        let cfg = ExperimentConfig { filter_rollouts: 1, filter_patience: 200, ..Default::default() };
        let bx = ParamBox { theta0: [0.0, 0.1], theta1: [3.0, 4.0] };
        let err = sample_filtered_policy_inits(&cfg, 3, &bx, 0.05, &viable, 20, &env, 1).unwrap_err();
        assert!(matches!(err, Error::FilterStarved { accepted: 0, draws: 200 }));
    }
}
