use nakao_core::curves::Exponents;
use nakao_core::damping::{DampingSpec, ScatteringProfile};
use nakao_core::exec::Execution;
use nakao_core::pde::{
    identity_audit, lifespan_sweep_pde, lower_bound_audit, read_snapshots, solve, write_snapshots,
    IdentityForm, InitialProfile, ModelConfig, PdeSweep, RadialGrid, IDENTITY_TOLERANCE,
};
use proptest::prelude::*;

fn short(t_max: f64) -> ModelConfig {
    ModelConfig {
        t_max,
        ..ModelConfig::demo()
    }
}

fn scattering() -> ModelConfig {
    ModelConfig {
        damping: DampingSpec::poly_decay(1.0, 2.0).unwrap(),
        ..ModelConfig::demo()
    }
}

#[test]
fn zero_data_stays_zero() {
    let cfg = ModelConfig {
        profile: InitialProfile {
            u0: 0.0,
            u1: 0.0,
            v0: 0.0,
            v1: 0.0,
        },
        ..short(5.0)
    };
    let run = solve(&cfg).unwrap();
    assert!(run.event.is_none());
    assert!(run.series.u.iter().chain(&run.series.v).all(|&x| x == 0.0));
}

#[test]
fn linear_energy_is_nonincreasing() {
    for damping in [
        DampingSpec::ScaleInvariant { mu: 1.0 },
        DampingSpec::poly_decay(1.0, 2.0).unwrap(),
    ] {
        let cfg = ModelConfig {
            damping,
            sources: false,
            snapshot_every: Some(1),
            ..short(8.0)
        };
        let run = solve(&cfg).unwrap();
        let grid = RadialGrid::new(cfg.n, run.grid.h, run.grid.cells);
        let e: Vec<(f64, f64)> = run
            .snapshots
            .windows(2)
            .map(|w| {
                (
                    grid.energy(&w[0].u, &w[1].u, run.dt),
                    grid.energy(&w[0].v, &w[1].v, run.dt),
                )
            })
            .collect();
        assert!(e.len() > 100);
        for w in e.windows(2) {
            assert!(w[1].0 <= w[0].0 * (1.0 + 1e-12), "{w:?}");
            assert!(w[1].1 <= w[0].1 * (1.0 + 1e-12), "{w:?}");
        }
    }
}

#[test]
fn stronger_damping_delays_blow_up() {
    let times: Vec<f64> = [0.0, 1.0, 2.0]
        .iter()
        .map(|&mu| {
            let cfg = ModelConfig {
                damping: DampingSpec::ScaleInvariant { mu },
                ..ModelConfig::demo()
            };
            solve(&cfg).unwrap().event.unwrap().time
        })
        .collect();
    assert!(times.windows(2).all(|w| w[0] <= w[1]), "{times:?}");
}

#[test]
fn higher_dimensions_satisfy_the_identities() {
    for n in [2, 3] {
        let cfg = ModelConfig {
            n,
            exponents: Exponents::new(3.0, 3.0).unwrap(),
            ..short(3.0)
        };
        let run = solve(&cfg).unwrap();
        let audit = identity_audit(&run.series, &cfg).unwrap();
        assert!(audit.passed, "n={n}: {audit:?}");
        assert!(audit.max_residual() <= 1e-2);
        let margin = run
            .series
            .support_margin
            .iter()
            .cloned()
            .fold(0.0, f64::max);
        assert!(margin <= cfg.support_tolerance(), "n={n}: {margin}");
    }
}

#[test]
fn scattering_uses_multiplier_form() {
    let cfg = ModelConfig {
        t_max: 6.0,
        ..scattering()
    };
    let run = solve(&cfg).unwrap();
    let audit = identity_audit(&run.series, &cfg).unwrap();
    assert_eq!(audit.form, IdentityForm::Multiplier);
    assert!(
        audit.passed && audit.tolerance == IDENTITY_TOLERANCE,
        "{audit:?}"
    );
}

#[test]
fn scattering_lower_bounds() {
    let cfg = scattering();
    let run = solve(&cfg).unwrap();
    assert!(run.event.is_some());
    let lb = lower_bound_audit(&run.series, &cfg).unwrap();
    assert!(lb.positive && lb.passed, "{lb:?}");
    let corrected = lb.check("V >= C8' eps (1+t)").unwrap();
    assert!(corrected.asserted && corrected.passed);
    // without the factor m(0) the constant is larger than the run allows
    let literal = lb.check("V >= min(|v0|,|v1|) eps (1+t)").unwrap();
    assert!(!literal.asserted && !literal.passed);
    assert!(literal.constant > corrected.constant);
}

#[test]
fn snapshots_round_trip() {
    let cfg = ModelConfig {
        snapshot_every: Some(40),
        ..short(4.0)
    };
    let run = solve(&cfg).unwrap();
    assert!(run.snapshots.len() >= 3);
    let mut buf = Vec::new();
    write_snapshots(&mut buf, cfg.n, run.grid.h, run.dt, &run.snapshots).unwrap();
    let (header, back) = read_snapshots(buf.as_slice()).unwrap();
    assert_eq!(header.count as usize, run.snapshots.len());
    assert_eq!(header.cells as usize, run.grid.cells);
    assert_eq!(header.dt, run.dt);
    assert_eq!(back, run.snapshots);
    assert!(read_snapshots(&buf[..buf.len() - 1]).is_err());
}

#[test]
fn series_csv() {
    let run = solve(&short(1.0)).unwrap();
    let csv = run.series.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,U,V,V0,V1,resU,resV,supp_margin"));
    assert_eq!(lines.count(), run.series.len());
}

fn tabulated(step: f64) -> ModelConfig {
    let count = (40.0 / step).round() as usize;
    let times: Vec<f64> = (0..=count).map(|i| i as f64 * step).collect();
    let values = times.iter().map(|t| (1.0 + t).powi(-2)).collect();
    ModelConfig {
        damping: DampingSpec::Scattering {
            profile: ScatteringProfile::Tabulated {
                times,
                values,
                tail: 1.0 / 41.0,
            },
        },
        ..short(6.0)
    }
}

#[test]
fn tabulated_profile_converges_to_closed_form() {
    let exact = solve(&ModelConfig {
        t_max: 6.0,
        ..scattering()
    })
    .unwrap();
    let gap = |step: f64| {
        let run = solve(&tabulated(step)).unwrap();
        run.series
            .v
            .iter()
            .zip(&exact.series.v)
            .map(|(x, y)| (x - y).abs() / y)
            .fold(0.0, f64::max)
    };
    let (coarse, fine) = (gap(0.1), gap(0.01));
    // linear interpolation of b is second order in the table spacing
    assert!(fine < coarse / 50.0, "{coarse} {fine}");
    assert!(fine < 1e-4, "{fine}");
}

#[test]
fn sweep_rejects_trivial_data() {
    let mut sweep = PdeSweep::demo();
    sweep.template.profile = InitialProfile {
        u0: 0.0,
        u1: 0.0,
        v0: 0.0,
        v1: 0.0,
    };
    assert!(lifespan_sweep_pde(&sweep, Execution::Sequential)
        .unwrap_err()
        .is_usage());
}

#[test]
fn sweep_execution_modes_agree() {
    let sweep = PdeSweep {
        template: ModelConfig {
            t_max: 12.0,
            ..ModelConfig::demo()
        },
        epsilons: vec![4.0, 2.0, 1.0, 0.5],
        ..PdeSweep::demo()
    };
    let a = lifespan_sweep_pde(&sweep, Execution::Sequential).unwrap();
    let b = lifespan_sweep_pde(&sweep, Execution::Parallel).unwrap();
    assert_eq!(a.estimate, b.estimate);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn shape_is_supported_in_ball(r in 0.0f64..5.0, radius in 0.1f64..3.0) {
        let s = InitialProfile::shape(r, radius);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(s == 0.0, r >= radius);
    }
}
