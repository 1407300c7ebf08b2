use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use slip_viability::config::{RunConfig, StrategyKind};
use slip_viability::dynamics::{simulate_trajectory, ApexState, Phase};
use slip_viability::experiments::{self, landscape_spec, prepare, Mode, Prepared};
use slip_viability::io::{write_csv, write_json, RunManifest};
use slip_viability::landscape::{compute_landscape, rotated, sgs_area};
use slip_viability::learning::{train, InitStrategy};
use slip_viability::policy::PolicyParams;
use slip_viability::scalar::{deg, to_deg};
use slip_viability::viability::{class_counts, classify, DEFAULT_NEUTRAL_TOL};

#[derive(Parser)]
#[command(name = "slip", version, about = "SLIP hopping: viability, reward landscapes and learning experiments")]
struct Cli {
    /// Master seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON configuration tree; missing fields take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LandscapeStrategy {
    Viable,
    Feasible,
}

#[derive(Clone, Copy, ValueEnum)]
enum LearnStrategy {
    Viable,
    Feasible,
    FeasibleThenViable,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentMode {
    Random50,
    Single,
}

#[derive(Subcommand)]
enum Command {
    /// Apex return map over the (s̄, α) grid.
    TransitionMap,
    /// Viability kernel, neutral curve and reference linear fit.
    Kernel,
    /// Monte-Carlo reward landscape around the reference fit.
    Landscape {
        #[arg(long, value_enum)]
        strategy: Option<LandscapeStrategy>,
        /// Exploration level in degrees.
        #[arg(long)]
        sigma_level: Option<f64>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        rollouts: Option<usize>,
    },
    /// A single learning trial.
    Learn {
        #[arg(long, value_enum, default_value = "feasible-then-viable")]
        strategy: LearnStrategy,
        /// Initial slope, degrees per unit s̄ (default: reference fit).
        #[arg(long, allow_hyphen_values = true)]
        theta0_deg: Option<f64>,
        /// Initial offset, degrees (default: reference fit).
        #[arg(long, allow_hyphen_values = true)]
        theta1_deg: Option<f64>,
        #[arg(long)]
        max_episodes: Option<usize>,
    },
    /// Paired learning trials, viable vs feasible-then-viable.
    Experiment {
        #[arg(long, value_enum)]
        mode: ExperimentMode,
        #[arg(long)]
        n_inits: Option<usize>,
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long)]
        max_episodes: Option<usize>,
    },
    /// Full-state trajectory of one apex-to-apex step.
    Trajectory {
        #[arg(long)]
        s_bar: f64,
        #[arg(long)]
        alpha_deg: f64,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring thread pool")?;
    }
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).with_context(|| format!("reading config {}", path.display()))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match &cli.command {
        Command::Landscape { strategy, sigma_level, count, rollouts } => {
            if let Some(s) = strategy {
                cfg.landscape.strategy = match s {
                    LandscapeStrategy::Viable => StrategyKind::Viable,
                    LandscapeStrategy::Feasible => StrategyKind::Feasible,
                };
            }
            if let Some(v) = sigma_level {
                cfg.landscape.sigma_level_deg = *v;
            }
            if let Some(v) = count {
                cfg.landscape.count = *v;
            }
            if let Some(v) = rollouts {
                cfg.landscape.n_rollouts = *v;
            }
        }
        Command::Learn { max_episodes: Some(v), .. } => cfg.learner.max_episodes = *v,
        Command::Experiment { n_inits, repeats, max_episodes, .. } => {
            if let Some(v) = n_inits {
                cfg.experiment.n_policy_inits = *v;
            }
            if let Some(v) = repeats {
                cfg.experiment.n_repeats_single = *v;
            }
            if let Some(v) = max_episodes {
                cfg.learner.max_episodes = *v;
            }
        }
        _ => {}
    }
    cfg.validate()?;
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let out = cli.out.as_path();
    match cli.command {
        Command::TransitionMap => transition_map(&cfg, out),
        Command::Kernel => kernel(&cfg, out),
        Command::Landscape { .. } => landscape(&cfg, out),
        Command::Learn { strategy, theta0_deg, theta1_deg, .. } => learn(&cfg, out, strategy, theta0_deg, theta1_deg),
        Command::Experiment { mode, .. } => experiment(&cfg, out, mode),
        Command::Trajectory { s_bar, alpha_deg } => trajectory(&cfg, out, s_bar, alpha_deg),
    }
}

fn prepared(cfg: &RunConfig) -> Result<Prepared<f64>> {
    Ok(prepare(&cfg.env, &cfg.grid)?)
}

fn manifest(out: &Path, cfg: &RunConfig, command: &str, files: &[&str]) -> Result<()> {
    RunManifest::write(out, command, cfg.seed, cfg.to_value(), files)?;
    Ok(())
}

#[derive(Serialize)]
struct MapRow {
    s_bar: f64,
    alpha_deg: f64,
    outcome_code: u8,
    s_bar_next: Option<f64>,
}

fn transition_map(cfg: &RunConfig, out: &Path) -> Result<()> {
    let grid = slip_viability::viability::compute_transition_grid(&cfg.grid, &cfg.env.params, &cfg.env.integrator)?;
    let rows = grid.outcomes.iter_indexed().map(|(i, j, o)| MapRow {
        s_bar: grid.s_values[i],
        alpha_deg: to_deg(grid.alpha_values[j]),
        outcome_code: o.code(),
        s_bar_next: o.next(),
    });
    write_csv(&out.join("transition_map.csv"), rows)?;
    let classes = classify(&grid, DEFAULT_NEUTRAL_TOL)?;
    let counts: serde_json::Map<String, serde_json::Value> =
        class_counts(&classes).into_iter().map(|(c, n)| (format!("{c:?}").to_lowercase(), json!(n))).collect();
    let summary = json!({
        "grid": cfg.grid,
        "outcome_codes": {"0": "next_apex", "1": "fall", "2": "infeasible"},
        "neutral_tol": DEFAULT_NEUTRAL_TOL,
        "class_counts": counts,
        "min_feasible_s_grid": grid.min_feasible_s(),
        "min_feasible_s_analytic": cfg.env.min_feasible_s(),
    });
    write_json(&out.join("transition_map.json"), &summary)?;
    manifest(out, cfg, "transition-map", &["transition_map.csv", "transition_map.json"])?;
    println!("transition map: {} x {} cells -> {}", grid.s_values.len(), grid.alpha_values.len(), out.display());
    Ok(())
}

#[derive(Serialize)]
struct CurveRow {
    s_bar: f64,
    alpha_deg: f64,
}

fn kernel(cfg: &RunConfig, out: &Path) -> Result<()> {
    let prep = prepared(cfg)?;
    let k = &prep.kernel;
    write_csv(&out.join("neutral_curve.csv"), prep.curve.iter().map(|p| CurveRow { s_bar: p.s, alpha_deg: to_deg(p.alpha) }))?;
    let summary = json!({
        "s_low": k.s_low,
        "s_high": k.s_high,
        "member_rows": k.member_count(),
        "removal_rounds": k.rounds,
        "min_feasible_s": cfg.env.min_feasible_s(),
        "reference_fit": {
            "theta0_deg": to_deg(prep.fit.theta0),
            "theta1_deg": to_deg(prep.fit.theta1),
            "rms_deg": to_deg(prep.fit.rms),
            "max_abs_deg": to_deg(prep.fit.max_abs),
        },
        "kernel": k,
    });
    write_json(&out.join("kernel.json"), &summary)?;
    manifest(out, cfg, "kernel", &["kernel.json", "neutral_curve.csv"])?;
    println!("viability kernel [{:.5}, {:.5}] after {} rounds", k.s_low, k.s_high, k.rounds);
    Ok(())
}

#[derive(Serialize)]
struct LandscapeRow {
    theta0: f64,
    theta1: f64,
    mean_steps: f64,
    capped: f64,
    u: f64,
    v: f64,
}

fn landscape(cfg: &RunConfig, out: &Path) -> Result<()> {
    let prep = prepared(cfg)?;
    let spec = landscape_spec(cfg, &prep, cfg.landscape.strategy, cfg.landscape.sigma_level_deg);
    let g = compute_landscape(&spec, &cfg.env, cfg.seed)?;
    let rows = g.mean_steps.iter_indexed().map(|(i, j, &m)| {
        let (t0, t1) = (g.theta0_values[i], g.theta1_values[j]);
        let (u, v) = rotated(t0, t1);
        LandscapeRow { theta0: t0, theta1: t1, mean_steps: m, capped: g.capped.get(i, j).to_owned(), u, v }
    });
    write_csv(&out.join("landscape.csv"), rows)?;
    let eps_list = [cfg.landscape.sgs_eps, 0.05, 0.5];
    let areas: Vec<_> = eps_list.iter().map(|&e| json!({"eps": e, "sgs_area": sgs_area(&g, e)})).collect();
    let area = sgs_area(&g, cfg.landscape.sgs_eps);
    let summary = json!({
        "seed": cfg.seed,
        "strategy": spec.strategy,
        "sigma_level_deg": cfg.landscape.sigma_level_deg,
        "sigma_deg": to_deg(spec.sigma),
        "exploration_scale": cfg.learner.exploration_scale,
        "theta0_axis": spec.theta0,
        "theta1_axis": spec.theta1,
        "n_rollouts": spec.n_rollouts,
        "max_steps": spec.max_steps,
        "reward_cap": spec.reward_cap,
        "sgs": areas,
        "reference_fit": prep.fit,
    });
    write_json(&out.join("landscape.json"), &summary)?;
    manifest(out, cfg, "landscape", &["landscape.csv", "landscape.json"])?;
    println!("landscape {}: sgs area {:.4} at eps {}", spec.strategy.name(), area, cfg.landscape.sgs_eps);
    Ok(())
}

#[derive(Serialize)]
struct EpisodeRow {
    episode: usize,
    steps: usize,
    sigma_level_deg: f64,
}

fn learn(cfg: &RunConfig, out: &Path, strategy: LearnStrategy, theta0_deg: Option<f64>, theta1_deg: Option<f64>) -> Result<()> {
    let prep = prepared(cfg)?;
    let env = &cfg.env;
    let strategy = match strategy {
        LearnStrategy::Viable => InitStrategy::viable(&prep.kernel),
        LearnStrategy::Feasible => InitStrategy::feasible(env),
        LearnStrategy::FeasibleThenViable => {
            InitStrategy::feasible_then_viable(env, &prep.kernel, cfg.experiment.switch_threshold)
        }
    };
    let initial = PolicyParams {
        theta0: theta0_deg.map(deg).unwrap_or(prep.fit.theta0),
        theta1: theta1_deg.map(deg).unwrap_or(prep.fit.theta1),
        sigma: cfg.learner.sigma_at(0),
    };
    let r = train(&initial, &strategy, &cfg.learner, env, cfg.seed)?;
    let rows = r.learning_curve.iter().zip(&r.sigma_curve).enumerate().map(|(k, (&steps, &sigma_level_deg))| EpisodeRow {
        episode: k,
        steps,
        sigma_level_deg,
    });
    write_csv(&out.join("learning_curve.csv"), rows)?;
    write_json(&out.join("learn.json"), &json!({"strategy": strategy, "initial_policy": initial, "result": r}))?;
    manifest(out, cfg, "learn", &["learn.json", "learning_curve.csv"])?;
    println!(
        "learn {}: success {} after {} episodes",
        strategy.name(),
        r.success,
        r.episodes_used
    );
    Ok(())
}

fn experiment(cfg: &RunConfig, out: &Path, mode: ExperimentMode) -> Result<()> {
    let mode = match mode {
        ExperimentMode::Random50 => Mode::Random,
        ExperimentMode::Single => Mode::Single,
    };
    let result = experiments::run_experiment(cfg, mode, None)?;
    experiments::write_experiment(out, cfg, mode, &result)?;
    let s = &result.summary;
    println!(
        "{} pairs: {} {}/{} successes, {} {}/{}",
        s.pairs, s.baseline, s.baseline_successes, s.pairs, s.treatment, s.treatment_successes, s.pairs
    );
    Ok(())
}

#[derive(Serialize)]
struct TrajectoryRow {
    t: f64,
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
    phase: &'static str,
    x_f: Option<f64>,
}

fn phase_name(p: Phase) -> &'static str {
    match p {
        Phase::Flight => "flight",
        Phase::Stance => "stance",
    }
}

fn trajectory(cfg: &RunConfig, out: &Path, s_bar: f64, alpha_deg: f64) -> Result<()> {
    let Ok(s) = ApexState::new(s_bar) else {
        bail!("s_bar must lie in (0, 1], got {s_bar}");
    };
    let traj = simulate_trajectory(s, deg(alpha_deg), &cfg.env.params, &cfg.env.integrator)?;
    let row = |t: f64, st: &slip_viability::dynamics::FullState<f64>| TrajectoryRow {
        t,
        x: st.x,
        y: st.y,
        vx: st.vx,
        vy: st.vy,
        phase: phase_name(st.phase),
        x_f: (st.phase == Phase::Stance).then_some(st.foot_x),
    };
    write_csv(&out.join("trajectory.csv"), traj.samples.iter().map(|p| row(p.t, &p.state)))?;
    let events: Vec<_> = traj.events.iter().map(|e| json!({"kind": e.kind, "t": e.t, "state": e.state})).collect();
    write_json(
        &out.join("trajectory.json"),
        &json!({"s_bar": s_bar, "alpha_deg": alpha_deg, "outcome": traj.outcome, "outcome_code": traj.outcome.code(), "events": events}),
    )?;
    manifest(out, cfg, "trajectory", &["trajectory.csv", "trajectory.json"])?;
    println!("trajectory: {} samples, outcome {:?}", traj.samples.len(), traj.outcome);
    Ok(())
}
