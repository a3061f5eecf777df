use nakao_core::iteration::{
    certify_m, closed_forms, constants, envelope_eval, iterate, iterate_part1, iterate_part2,
    lifespan_bound, lifespan_bound_part1, log_envelope, slicing, LadderParams, Part, MAX_RUNGS,
};
use nakao_core::odi::{frame_constant, integrate_system, OdiConfig};
use nakao_core::verify::{demo_ladder, divergence_dichotomy, ladder_consistency, random_ladders};
use proptest::prelude::*;

#[test]
fn slicing_limits() {
    let s = slicing(4.0, 1.0, 20).unwrap();
    assert!((s.l_inf - 1.355_909_673_863_479).abs() < 1e-12);
    assert!(s.partial.windows(2).all(|w| w[1] > w[0]));
    assert!(s.partial.iter().all(|&l| l <= s.l_inf));
}

#[test]
fn seeded_ladders_are_consistent() {
    for part in [Part::One, Part::Two] {
        for params in random_ladders(5, 2024) {
            let c = ladder_consistency(part, &params, 40).unwrap();
            assert!(c.closed_form_error <= 1e-12, "{part:?} {params:?}: {c:?}");
            assert!(c.log_bound_holds, "{part:?} {params:?}: {c:?}");
        }
    }
}

#[test]
fn q_factor_and_m_certificate() {
    let p = demo_ladder();
    let c1 = constants(Part::One, &p).unwrap();
    assert_eq!(c1.ln_q, (2.0 * p.p + 3.0) * p.pq().ln());
    let c2 = constants(Part::Two, &p).unwrap();
    assert_eq!(c2.ln_q, (3.0 * p.q + 2.0) * p.pq().ln());
    for (part, c) in [(Part::One, c1), (Part::Two, c2)] {
        let states = iterate(part, &p, MAX_RUNGS).unwrap();
        assert!(certify_m(&states, &p, &c).unwrap().holds);
    }
}

#[test]
fn pure_power_theta_and_amplitude_scaling() {
    let p = demo_ladder();
    let b = lifespan_bound_part1(&p).unwrap();
    assert!((b.theta - 5.0 / 3.0).abs() < 1e-15);
    let half = LadderParams {
        amplitude: p.amplitude / 2.0,
        ..p
    };
    let bh = lifespan_bound_part1(&half).unwrap();
    assert!((bh.t_bound / b.t_bound - 2f64.powf(1.0 / b.theta)).abs() < 1e-12);
    assert!(b.admissible && b.t_bound > b.floor);
}

#[test]
fn hypothesis_violation_is_reported() {
    let p = LadderParams {
        growth: -10.0,
        ..demo_ladder()
    };
    assert!(lifespan_bound(Part::One, &p).is_err());
    assert!(lifespan_bound(Part::Two, &p).is_err());
}

#[test]
fn envelope_at_first_rung() {
    let p = LadderParams {
        growth: 0.7,
        ..demo_ladder()
    };
    let s = iterate_part1(&p, 0).unwrap();
    let t = 3.0;
    let expect = p.amplitude * (p.radius + t).powf(0.0) * (t - p.t0).powf(0.7);
    assert!((envelope_eval(&s[0], p.radius, t).unwrap() / expect - 1.0).abs() < 1e-14);
    assert!(log_envelope(&s[0], p.radius, s[0].slice_time).is_err());
}

#[test]
fn ladders_diverge_above_the_explicit_threshold() {
    for part in [Part::One, Part::Two] {
        let d = divergence_dichotomy(part, &demo_ladder()).unwrap();
        assert!(d.diverges_above, "{d:?}");
        assert!(d.ladder_threshold <= d.t_bound);
    }
}

#[test]
fn odi_blows_up_before_the_bound() {
    let cfg = OdiConfig::demo();
    let run = integrate_system(&cfg, 200.0, 1e8).unwrap();
    let t = run.event.unwrap().time;
    // F'' + F' ≥ 0 with F'(0) ≥ 0 gives F ≥ F(0), the part-1 seed with a = 0.
    let params = LadderParams {
        p: cfg.exponents.p(),
        q: cfg.exponents.q(),
        r: cfg.r,
        rho: cfg.rho,
        mu: 1.0,
        b_frame: cfg.b,
        k_frame: frame_constant(&cfg).unwrap(),
        radius: cfg.radius,
        t0: 1.0,
        growth: 0.0,
        amplitude: cfg.f0,
    };
    let b = lifespan_bound_part1(&params).unwrap();
    assert!(b.admissible);
    assert!(t <= b.t_bound, "measured {t} vs bound {}", b.t_bound);
}

fn ladder() -> impl Strategy<Value = LadderParams> {
    (
        (
            1.1f64..4.0,
            1.1f64..4.0,
            -2.0f64..2.0,
            -2.0f64..2.0,
            0.0f64..4.0,
        ),
        (
            0.1f64..5.0,
            0.1f64..5.0,
            0.2f64..4.0,
            0.2f64..4.0,
            -1.0f64..2.0,
            -8.0f64..0.0,
        ),
    )
        .prop_map(
            |((p, q, r, rho, mu), (b, k, radius, t0, growth, la))| LadderParams {
                p,
                q,
                r,
                rho,
                mu,
                b_frame: b,
                k_frame: k,
                radius,
                t0,
                growth,
                amplitude: 10f64.powf(la),
            },
        )
}

proptest! {
    #[test]
    fn closed_forms_match_recursions(params in ladder()) {
        for part in [Part::One, Part::Two] {
            let states = iterate(part, &params, 40).unwrap();
            for s in &states {
                let (a, b) = closed_forms(part, &params, s.j).unwrap();
                prop_assert!((a - s.a).abs() <= 1e-12 * a.abs().max(s.a.abs()).max(1e-300));
                prop_assert!((b - s.b).abs() <= 1e-12 * b.abs().max(s.b.abs()).max(1e-300));
            }
        }
    }

    #[test]
    fn exponents_nondecreasing(params in ladder()) {
        for s in [iterate_part1(&params, 30).unwrap(), iterate_part2(&params, 30).unwrap()] {
            prop_assert!(s.windows(2).all(|w| w[1].b >= w[0].b));
            let l_inf = slicing(params.pq(), params.t0, 1).unwrap().l_inf;
            prop_assert!(s.iter().all(|x| x.slice_time <= l_inf * params.t0 * (1.0 + 1e-12)));
        }
    }

    #[test]
    fn log_bound_on_computed_ladders(params in ladder()) {
        for part in [Part::One, Part::Two] {
            prop_assert!(ladder_consistency(part, &params, 40).unwrap().log_bound_holds);
        }
    }
}
