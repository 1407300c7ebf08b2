use proptest::prelude::*;
use rand::SeedableRng;

use slip_viability::dynamics::{apex_step, check_feasible, ApexState, ModelParams, StepOutcome};
use slip_viability::integrator::IntegratorConfig;
use slip_viability::landscape::{compute_landscape, Axis, LandscapeSpec};
use slip_viability::learning::{Env, InitStrategy};
use slip_viability::policy::PolicyParams;
use slip_viability::scalar::deg;
use slip_viability::viability::ViabilityKernel;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn outcome_matches_feasibility(s in 0.01f64..=1.0, a_deg in 0.0f64..=30.0) {
        let p = ModelParams::<f64>::default();
        let s = ApexState::new(s).unwrap();
        let a = deg::<f64>(a_deg);
        let out = apex_step(s, a, &p, &IntegratorConfig::default()).unwrap();
        prop_assert_eq!(matches!(out, StepOutcome::Infeasible), !check_feasible(s, a, &p));
        if let Some(n) = out.next() {
            prop_assert!(n > 0.0 && n <= 1.0);
        }
    }

    #[test]
    fn f32_tracks_f64(s in 0.7f64..=0.99, a_deg in 10.0f64..=28.0) {
        let p64 = ModelParams::<f64>::default();
        let p32 = ModelParams::<f32>::default();
        let o64 = apex_step(ApexState::new(s).unwrap(), deg::<f64>(a_deg), &p64, &IntegratorConfig::default()).unwrap();
        let o32 = apex_step(ApexState::new(s as f32).unwrap(), deg::<f32>(a_deg), &p32, &IntegratorConfig::default()).unwrap();
        match (o64.next(), o32.next()) {
            (Some(a), Some(b)) => prop_assert!((a - b as f64).abs() < 1e-3, "{} vs {}", a, b),
            (a, b) => prop_assert_eq!(a.is_some(), b.is_some()),
        }
    }

    #[test]
    fn executed_action_is_admissible(t0 in -5.0f64..5.0, t1 in -2.0f64..2.0, sd in 0.001f64..1.0, s in 0.01f64..=1.0, seed in any::<u64>()) {
        let pp = PolicyParams::new(t0, t1, sd).unwrap();
        let env = Env::<f64>::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let draw = pp.sample_raw(ApexState::new(s).unwrap(), &env.actions, &mut rng);
        prop_assert!(env.actions.contains(draw.executed));
        prop_assert_eq!(draw.executed, env.actions.clamp(draw.drawn));
    }

    #[test]
    fn score_is_log_density_gradient(t0 in -3.0f64..3.0, t1 in -1.0f64..2.0, sd in 0.01f64..0.5, s in 0.01f64..=1.0, a in -0.2f64..0.8) {
        let pp = PolicyParams::new(t0, t1, sd).unwrap();
        let s = ApexState::new(s).unwrap();
        let h = 1e-5;
        let g = pp.score(s, a);
        let fd = (PolicyParams { theta1: t1 + h, ..pp }.log_density(s, a) - PolicyParams { theta1: t1 - h, ..pp }.log_density(s, a)) / (2.0 * h);
        prop_assert!((g[1] - fd).abs() <= 1e-6 * g[1].abs().max(1.0));
        prop_assert!((g[0] - g[1] * s.value()).abs() <= 1e-12 * g[1].abs().max(1.0));
    }
}

#[test]
fn landscape_ignores_thread_count() {
    let kernel = ViabilityKernel::from_interval(0.678, 1.0).unwrap();
    let spec = LandscapeSpec {
        theta0: Axis { min: -2.5, max: 0.0, count: 4 },
        theta1: Axis { min: 1.2, max: 1.7, count: 4 },
        sigma: 0.05,
        strategy: InitStrategy::viable(&kernel),
        n_rollouts: 20,
        reward_cap: 1.0,
        max_steps: 30,
    };
    let env = Env::<f64>::default();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| compute_landscape(&spec, &env, 99).unwrap())
    };
    let a = run(1);
    assert_eq!(a, run(3));
    assert!(a.mean_steps.as_slice().iter().any(|&m| m > 0.0));
}
