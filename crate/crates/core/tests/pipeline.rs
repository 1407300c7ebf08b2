//! End-to-end runs of the analysis and experiment pipeline on coarse grids.

use slip_viability::config::{RunConfig, StrategyKind};
use slip_viability::dynamics::{apex_step, ApexState};
use slip_viability::experiments::{self, landscape_spec, prepare, Mode};
use slip_viability::landscape::{compute_landscape, sgs_area};
use slip_viability::learning::evaluate_policy;
use slip_viability::GridSpec;

fn coarse() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.grid = GridSpec { n_s: 101, n_alpha: 61, ..GridSpec::default() };
    cfg.learner.max_episodes = 200;
    cfg.learner.max_steps_per_episode = 100;
    cfg.landscape.count = 9;
    cfg.landscape.n_rollouts = 20;
    cfg.experiment.n_policy_inits = 3;
    cfg.experiment.n_repeats_single = 3;
    cfg.experiment.filter_rollouts = 20;
    cfg
}

#[test]
fn kernel_is_closed_under_some_action() {
    let cfg = coarse();
    let prep = prepare(&cfg.env, &cfg.grid).unwrap();
    let k = &prep.kernel;
    assert!((k.s_low - 0.675).abs() < 0.02, "{}", k.s_low);
    for (i, &s) in prep.grid.s_values.iter().enumerate() {
        if !k.members[i] {
            continue;
        }
        let stays = prep.grid.outcomes.row(i).iter().any(|o| o.next().is_some_and(|n| n >= k.s_low - 1e-7));
        assert!(stays, "kernel row {s} has no action staying in the kernel");
    }
}

#[test]
fn reference_fit_tracks_neutral_curve() {
    let cfg = coarse();
    let prep = prepare(&cfg.env, &cfg.grid).unwrap();
    // A point on the neutral curve maps (nearly) to itself.
    let mid = prep.curve[prep.curve.len() / 2];
    let n = apex_step(ApexState::new(mid.s).unwrap(), mid.alpha, &cfg.env.params, &cfg.env.integrator).unwrap();
    assert!((n.next().unwrap() - mid.s).abs() < 1e-4);
    // The fitted policy with little noise takes several steps from the kernel.
    let pp = slip_viability::PolicyParams { theta0: prep.fit.theta0, theta1: prep.fit.theta1, sigma: 1e-4 };
    let viable = prep.strategy(StrategyKind::Viable, &cfg.env);
    assert!(evaluate_policy(&pp, &viable, 20, 50, &cfg.env, 4).unwrap() > 2.0);
}

#[test]
fn landscape_reference_cell_is_salient() {
    let cfg = coarse();
    let prep = prepare(&cfg.env, &cfg.grid).unwrap();
    let spec = landscape_spec(&cfg, &prep, StrategyKind::Viable, 8.0);
    let g = compute_landscape(&spec, &cfg.env, cfg.seed).unwrap();
    // Odd count: the centre cell is the reference fit.
    let c = cfg.landscape.count / 2;
    assert!(g.mean_steps.get(c, c).to_owned() > 0.0);
    assert!(sgs_area(&g, cfg.landscape.sgs_eps) < 1.0);
}

#[test]
fn experiments_pair_every_init() {
    let cfg = coarse();
    let prep = prepare(&cfg.env, &cfg.grid).unwrap();
    let out = experiments::run_experiment(&cfg, Mode::Random, Some(prep.clone())).unwrap();
    assert_eq!(out.records.len(), 6);
    assert_eq!(out.summary.pairs, 3);
    let s = &out.summary;
    assert_eq!(s.both + s.only_treatment + s.only_baseline + s.neither, 3);
    for init in &out.inits {
        assert!(init.filter_mean >= cfg.experiment.filter_threshold);
    }
    for pair in out.records.chunks(2) {
        assert_eq!(pair[0].init_index, pair[1].init_index);
        assert_eq!(pair[0].seed, pair[1].seed);
        assert_eq!(pair[0].strategy, "viable");
        assert_eq!(pair[1].strategy, "feasible_then_viable");
    }

    let single = experiments::run_experiment(&cfg, Mode::Single, Some(prep)).unwrap();
    assert_eq!(single.records.len(), 6);
    assert!(single.records.iter().all(|r| r.theta0_deg == single.records[0].theta0_deg));

    let dir = tempfile::tempdir().unwrap();
    let m = experiments::write_experiment(dir.path(), &cfg, Mode::Single, &single).unwrap();
    assert_eq!(m.files.len(), 5);
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn default_grid_kernel_properties() {
    let cfg = RunConfig::default();
    let prep = prepare(&cfg.env, &cfg.grid).unwrap();
    let k = &prep.kernel;

    // The kernel is an interval of rows.
    let first = k.members.iter().position(|&m| m).unwrap();
    let last = k.members.iter().rposition(|&m| m).unwrap();
    assert!(k.members[first..=last].iter().all(|&m| m));

    // Refining the grid moves the bound by less than one coarse cell.
    let fine = prepare(&cfg.env, &cfg.grid.refined()).unwrap();
    assert!((fine.kernel.s_low - k.s_low).abs() < cfg.grid.s_step());

    // Every kernel row above the bound has a neutral action.
    let rows = prep.grid.s_values.iter().filter(|&&s| s > k.s_low && s <= 1.0).count();
    assert_eq!(prep.curve.len(), rows + 1);

    // The straight-line fit is close on average but not everywhere: the
    // curve bends sharply towards 0° near s = 1.
    let rms_deg = prep.fit.rms.to_degrees();
    let max_deg = prep.fit.max_abs.to_degrees();
    assert!(rms_deg < 2.0, "rms {rms_deg}");
    assert!(max_deg > rms_deg);
}
