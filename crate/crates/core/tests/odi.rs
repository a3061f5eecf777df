use nakao_core::damping::{m_multiplier, DampingSpec, ScatteringProfile};
use nakao_core::exec::Execution;
use nakao_core::lifespan::Trigger;
use nakao_core::odi::{
    frame_audit, integrate_system, lifespan_sweep, AmplitudeRule, OdiConfig, OdiSweep,
};
use proptest::prelude::*;

fn zero_damping() -> DampingSpec {
    DampingSpec::Scattering {
        profile: ScatteringProfile::Tabulated {
            times: vec![0.0, 1.0],
            values: vec![0.0, 0.0],
            tail: 0.0,
        },
    }
}

#[test]
fn m_reference_values() {
    let d = DampingSpec::poly_decay(1.0, 2.0).unwrap();
    assert!((m_multiplier(&d, 0.0).unwrap() - (-1f64).exp()).abs() < 1e-15);
    assert!((m_multiplier(&d, 1e9).unwrap() - 1.0).abs() < 1e-8);
    let e = DampingSpec::Scattering {
        profile: ScatteringProfile::ExpDecay { c: 0.5 },
    };
    assert!((m_multiplier(&e, 0.0).unwrap() - (-0.5f64).exp()).abs() < 1e-15);
    assert!(m_multiplier(&DampingSpec::ScaleInvariant { mu: 1.0 }, 0.0).is_err());
}

#[test]
fn zero_data_is_a_fixed_point() {
    let cfg = OdiConfig {
        f0: 0.0,
        f0p: 0.0,
        g0: 0.0,
        g0p: 0.0,
        ..OdiConfig::demo()
    };
    let run = integrate_system(&cfg, 50.0, 1e8).unwrap();
    assert!(run.event.is_none());
    assert!(run.trajectory.y.iter().all(|y| y.iter().all(|&v| v == 0.0)));
}

#[test]
fn demo_blows_up_at_two_resolutions() {
    let cfg = OdiConfig::demo();
    let run = integrate_system(&cfg, 200.0, 1e8).unwrap();
    let e = run.event.unwrap();
    assert_eq!(e.trigger, Trigger::Threshold);
    assert!(e.time > 0.0 && e.time < 200.0);
    assert!(frame_audit(&run.trajectory, &cfg).unwrap().passed);
}

#[test]
fn vanishing_scattering_converges_to_undamped() {
    let t_of = |damping: DampingSpec| {
        let cfg = OdiConfig {
            damping,
            ..OdiConfig::demo()
        };
        integrate_system(&cfg, 200.0, 1e8)
            .unwrap()
            .event
            .unwrap()
            .time
    };
    let t0 = t_of(zero_damping());
    let gaps: Vec<f64> = [1e-1, 1e-2, 1e-3]
        .iter()
        .map(|&c| (t_of(DampingSpec::poly_decay(c, 2.0).unwrap()) - t0).abs() / t0)
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(gaps[2] < 1e-3, "{gaps:?}");
}

#[test]
fn demo_sweep_is_consistent() {
    let est = lifespan_sweep(&OdiSweep::demo(), Execution::Parallel).unwrap();
    assert!(est.verdict.all_blew_up && est.verdict.monotone && est.verdict.consistent);
    assert!(est.fit.unwrap().slope < 0.0);
    assert!((est.predicted_exponent + 0.6).abs() < 1e-12);
    let csv = est.to_csv();
    assert!(csv.starts_with("epsilon,T,trigger\n"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn sequential_and_parallel_sweeps_agree() {
    let sweep = OdiSweep {
        rule: AmplitudeRule::Powers { f: 1.0, g: 2.0 },
        ..OdiSweep::demo()
    };
    let a = lifespan_sweep(&sweep, Execution::Sequential).unwrap();
    let b = lifespan_sweep(&sweep, Execution::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn sweep_rejects_short_lists() {
    let sweep = OdiSweep {
        epsilons: vec![0.1, 0.2, 0.3],
        ..OdiSweep::demo()
    };
    assert!(lifespan_sweep(&sweep, Execution::Sequential)
        .unwrap_err()
        .is_usage());
}

#[test]
fn config_json_round_trip() {
    let cfg = OdiConfig {
        damping: DampingSpec::poly_decay(1.0, 2.0).unwrap(),
        ..OdiConfig::demo()
    };
    let back: OdiConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(back, cfg);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trajectories_stay_nonnegative(
        f0 in 0.0f64..0.3, f0p in 0.0f64..0.3, g0 in 0.0f64..0.3, g0p in 0.0f64..0.3,
        mu in 0.0f64..3.0,
    ) {
        let cfg = OdiConfig {
            f0, f0p, g0, g0p,
            damping: DampingSpec::ScaleInvariant { mu },
            ..OdiConfig::demo()
        };
        let run = integrate_system(&cfg, 30.0, 1e8).unwrap();
        prop_assert!(run.trajectory.y.iter().all(|y| y[0] >= 0.0 && y[2] >= 0.0));
    }

    #[test]
    fn m_is_increasing_in_unit_interval(c in 0.01f64..3.0, beta in 1.1f64..4.0, t in 0.0f64..100.0, dt in 0.0f64..10.0) {
        let d = DampingSpec::poly_decay(c, beta).unwrap();
        let a = m_multiplier(&d, t).unwrap();
        let b = m_multiplier(&d, t + dt).unwrap();
        prop_assert!(a > 0.0 && a <= b && b <= 1.0);
    }
}
