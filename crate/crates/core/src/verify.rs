//! Invariant suites behind `nakao verify`.
//!
//! Each suite runs the module's properties on fixed, seeded inputs and
//! reports one [`Check`] per property. A check marked `required = false` is
//! reported but does not decide the verdict.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curves::{
    self, branch_provenance, gamma_dw, gamma_mu, gamma_scattering, gamma_w, region_scan,
    CurvePoint, DampingKind, Exponents, Range,
};
use crate::damping::{m_multiplier, DampingSpec, ScatteringProfile};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::iteration::{
    self, closed_forms, constants, iterate, lifespan_bound, log_envelope, LadderParams, Part,
    MAX_RUNGS,
};
use crate::odi::{self, frame_audit, integrate_system, IntegratorOptions, OdiConfig, OdiSweep};
use crate::pde::{self, ModelConfig};
use crate::quad::Tolerance;
use crate::specialfn::{self, bessel_k, BesselOrder, LambdaBound, MassBound, Multiplier};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Specialfn,
    Curves,
    Iteration,
    Odi,
    Pde,
    All,
}

impl Suite {
    pub const MEMBERS: [Suite; 5] = [
        Suite::Specialfn,
        Suite::Curves,
        Suite::Iteration,
        Suite::Odi,
        Suite::Pde,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Specialfn => "specialfn",
            Suite::Curves => "curves",
            Suite::Iteration => "iteration",
            Suite::Odi => "odi",
            Suite::Pde => "pde",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::MEMBERS
            .iter()
            .chain(&[Suite::All])
            .copied()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown suite '{s}' (expected specialfn, curves, iteration, odi, pde, all)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: Suite,
    pub name: String,
    pub passed: bool,
    pub required: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    /// Every required check passed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || !c.required)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.required && !c.passed)
    }

    /// One line per check: `PASS|FAIL|INFO suite name: detail`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let tag = match (c.passed, c.required) {
                (true, _) => "PASS",
                (false, true) => "FAIL",
                (false, false) => "INFO",
            };
            let _ = writeln!(out, "{tag} {} {}: {}", c.suite.as_str(), c.name, c.detail);
        }
        out
    }
}

struct Recorder {
    suite: Suite,
    checks: Vec<Check>,
}

impl Recorder {
    fn new(suite: Suite) -> Self {
        Recorder {
            suite,
            checks: Vec::new(),
        }
    }

    fn push(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.record(name, passed, true, detail);
    }

    fn info(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.record(name, passed, false, detail);
    }

    fn record(&mut self, name: &str, passed: bool, required: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            suite: self.suite,
            name: name.to_string(),
            passed,
            required,
            detail: detail.into(),
        });
    }
}

pub fn run_suite(suite: Suite, exec: Execution) -> Result<Report> {
    let mut checks = Vec::new();
    let members: &[Suite] = if suite == Suite::All {
        &Suite::MEMBERS
    } else {
        std::slice::from_ref(&suite)
    };
    for &m in members {
        let mut rec = Recorder::new(m);
        match m {
            Suite::Specialfn => specialfn_suite(&mut rec)?,
            Suite::Curves => curves_suite(&mut rec, exec)?,
            Suite::Iteration => iteration_suite(&mut rec)?,
            Suite::Odi => odi_suite(&mut rec, exec)?,
            Suite::Pde => pde_suite(&mut rec, exec)?,
            Suite::All => unreachable!("expanded above"),
        }
        checks.extend(rec.checks);
    }
    Ok(Report { checks })
}

fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// `n` points evenly spaced on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

/// Worst `|residual| / max(1, λ)` of the multiplier ODE over `ts`.
pub fn ode_residual_scan(mu: f64, ts: &[f64]) -> Result<f64> {
    let m = Multiplier::new(mu)?;
    let tol = Tolerance::DEFAULT.refined(100.0);
    let mut worst = 0.0_f64;
    for &t in ts {
        let r = m.ode_residual(t, 1e-4, tol)?;
        worst = worst.max(r.abs() / m.lambda_with_tol(t, tol)?.max(1.0));
    }
    Ok(worst)
}

fn specialfn_suite(rec: &mut Recorder) -> Result<()> {
    let ts = linspace(0.0, 20.0, 81);
    for mu in [0.5, 1.0, 2.0, 3.0] {
        let worst = ode_residual_scan(mu, &ts)?;
        rec.push(
            &format!("ode residual mu={mu}"),
            worst <= 1e-5,
            format!("max |res|/max(1,lambda) = {worst:.2e} (<= 1e-5)"),
        );
    }

    let zs = linspace(0.5, 20.0, 50);
    let half = BesselOrder::new(0.5)?;
    let mut worst = 0.0_f64;
    for &z in &zs {
        let exact = (std::f64::consts::PI / (2.0 * z)).sqrt() * (-z).exp();
        worst = worst.max(rel(bessel_k(half, z)?, exact));
    }
    rec.push(
        "K_1/2 closed form",
        worst <= 1e-8,
        format!("max rel error {worst:.2e} (<= 1e-8)"),
    );

    let orders = [0.0, 0.25, 0.5, 1.0, 1.5, 2.5];
    let mut monotone = true;
    for &z in &zs {
        let vals = orders
            .iter()
            .map(|&l| bessel_k(BesselOrder::new(l)?, z))
            .collect::<Result<Vec<_>>>()?;
        monotone &= vals.windows(2).all(|w| w[1] >= w[0]);
    }
    rec.push(
        "K monotone in order",
        monotone,
        format!("orders {orders:?} on 50 points of [0.5, 20]"),
    );

    let mut worst = 0.0_f64;
    for l in [0.0, 0.5, 1.0, 1.5] {
        let z = 50.0;
        let lead =
            bessel_k(BesselOrder::new(l)?, z)? * (2.0 * z / std::f64::consts::PI).sqrt() * z.exp();
        worst = worst.max((lead - 1.0).abs());
    }
    // For order 3/2 the deviation is exactly 8/(8z) = 0.02, so allow rounding.
    rec.push(
        "K asymptotics at z=50",
        worst <= 0.02 * (1.0 + 1e-9),
        format!("max deviation {worst:.4} (<= 0.02)"),
    );

    let mut worst = 0.0_f64;
    for rho in [0.0, 0.3, 1.0, 4.0, 10.0] {
        // the sphere integral by polar angle, independent of the closed form
        let polar = 2.0
            * std::f64::consts::PI
            * crate::quad::adaptive_simpson(
                |th: f64| (rho * th.cos()).exp() * th.sin(),
                0.0,
                std::f64::consts::PI,
                Tolerance::new(0.0, 1e-13),
            )?;
        worst = worst.max(rel(specialfn::phi(3, rho)?, polar));
    }
    rec.push(
        "phi(3) closed form",
        worst <= 1e-9,
        format!("max rel gap {worst:.2e} between closed form and polar quadrature"),
    );

    let mut worst = 0.0_f64;
    for n in [2u32, 3] {
        for r in [0.5, 1.0, 2.0, 5.0] {
            let h = 1e-3;
            let f = |x: f64| specialfn::phi(n, x);
            let (fm, f0, fp) = (f(r - h)?, f(r)?, f(r + h)?);
            let lap = (fp - 2.0 * f0 + fm) / (h * h) + (n as f64 - 1.0) / r * (fp - fm) / (2.0 * h);
            worst = worst.max(rel(lap, f0));
        }
    }
    rec.push(
        "laplacian of phi",
        worst <= 1e-4,
        format!("max rel |lap phi - phi| {worst:.2e} for n = 2, 3"),
    );

    for mu in [0.0, 0.5, 1.0, 2.0, 3.0] {
        let coarse = LambdaBound::calibrate(mu, 30.0, 0.05, Tolerance::DEFAULT.refined(0.01))?;
        let fine = LambdaBound::calibrate(mu, 30.0, 0.05, Tolerance::DEFAULT.refined(100.0))?;
        let drift =
            rel(coarse.min_ratio, fine.min_ratio).max(rel(coarse.max_ratio, fine.max_ratio));
        rec.push(
            &format!("lambda two-sided bound mu={mu}"),
            fine.min_ratio > 0.0 && fine.max_ratio.is_finite() && drift <= 0.01,
            format!(
                "ratio in [{:.6}, {:.6}], C1 = {:.6}, drift under refinement {drift:.1e}",
                fine.min_ratio, fine.max_ratio, fine.c1
            ),
        );
    }

    let mut ok = true;
    let mut detail = String::new();
    for (n, r) in [(1u32, 2.0), (2, 2.0), (3, 1.5)] {
        let mb = MassBound::calibrate(n, r, 1.0, MassBound::DEFAULT_T_CAL)?;
        for t in linspace(0.0, 20.0, 41) {
            let e = mb.evaluate(t)?;
            ok &= e.integral <= e.bound;
        }
        let _ = write!(detail, "n={n} r={r} C0={:.4e}; ", mb.c0);
    }
    rec.push("phi mass bound", ok, detail.trim_end().to_string());
    Ok(())
}

fn curves_suite(rec: &mut Recorder, exec: Execution) -> Result<()> {
    let e22 = Exponents::new(2.0, 2.0)?;
    let exact: [(&str, f64, f64); 6] = [
        (
            "Gamma(1,2,2,1)",
            gamma_mu(CurvePoint::new(1, 2.0, 2.0, 1.0)?)?.gamma,
            2.0 / 3.0,
        ),
        (
            "Gamma(3,2,2,0)",
            gamma_mu(CurvePoint::new(3, 2.0, 2.0, 0.0)?)?.gamma,
            -1.0 / 6.0,
        ),
        ("Gamma_W(3,2,2)", gamma_w(3, e22)?.gamma, 0.5),
        ("Gamma_DW(2,2,2)", gamma_dw(2, e22)?.gamma, 0.0),
        (
            "Gamma_N1(2,2,2)",
            curves::gamma_n1(2, e22)?.gamma,
            1.0 / 6.0,
        ),
        (
            "Gamma_N2(2,2,2)",
            curves::gamma_n2(2, e22)?.gamma,
            1.0 / 3.0,
        ),
    ];
    for (name, got, want) in exact {
        rec.push(
            name,
            (got - want).abs() <= 4.0 * f64::EPSILON,
            format!("{got} (expected {want})"),
        );
    }

    let grid = linspace(1.05, 6.0, 10);
    let mut identical = true;
    let mut count = 0;
    for n in 1..=10u32 {
        for &p in &grid {
            for &q in &grid {
                let e = Exponents::new(p, q)?;
                let a = gamma_mu(CurvePoint {
                    n,
                    exponents: e,
                    mu: 0.0,
                })?;
                let b = gamma_scattering(n, e)?;
                identical &= a.gamma.to_bits() == b.gamma.to_bits()
                    && a.branch_values
                        .iter()
                        .zip(&b.branch_values)
                        .all(|(x, y)| x.value.to_bits() == y.value.to_bits());
                count += 1;
            }
        }
    }
    rec.push(
        "mu=0 equals scattering",
        identical,
        format!("bitwise on {count} points"),
    );

    let mut w_sym = true;
    let mut asym = false;
    for &p in &grid {
        for &q in &grid {
            let e = Exponents::new(p, q)?;
            for n in [1u32, 2, 3] {
                w_sym &= gamma_w(n, e)?.gamma == gamma_w(n, e.swapped())?.gamma;
                w_sym &= gamma_dw(n, e)?.gamma == gamma_dw(n, e.swapped())?.gamma;
                let a = gamma_mu(CurvePoint {
                    n,
                    exponents: e,
                    mu: 1.0,
                })?
                .gamma;
                let b = gamma_mu(CurvePoint {
                    n,
                    exponents: e.swapped(),
                    mu: 1.0,
                })?
                .gamma;
                asym |= (a - b).abs() > 1e-9;
            }
        }
    }
    rec.push(
        "W and DW symmetric in (p,q)",
        w_sym,
        "100 (p,q) pairs, n = 1..3",
    );
    rec.push(
        "Gamma_mu asymmetric instance",
        asym,
        "found (p,q) with Gamma(p,q) != Gamma(q,p)",
    );

    let mut ok = true;
    for &p in &grid {
        let pt = |mu: f64| CurvePoint::new(2, p, 2.5, mu);
        let base = gamma_mu(pt(1.0)?)?;
        for mu in [1.5, 2.0, 4.0] {
            let r = gamma_mu(pt(mu)?)?;
            ok &= r.branch("B2") == base.branch("B2") && r.branch("B3") == base.branch("B3");
            ok &= r.branch("B1") < base.branch("B1");
        }
    }
    rec.push(
        "mu >= 1 moves only B1",
        ok,
        "B2, B3 constant; B1 strictly decreasing",
    );

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0_f64;
    let mut worst_b1 = 0.0_f64;
    let mut tried = 0;
    while tried < 200 {
        let pt = CurvePoint::new(
            rng.gen_range(1..=4),
            rng.gen_range(1.05..4.0),
            rng.gen_range(1.05..4.0),
            rng.gen_range(0.0..3.0),
        )?;
        tried += 1;
        let res = gamma_mu(pt)?;
        let b1 = curves::provenance_for(pt, DampingKind::ScaleInvariant, 0)?;
        worst_b1 = worst_b1.max((b1.theta / pt.exponents.p() - res.branch_values[0].value).abs());
        if let Ok(prov) = branch_provenance(pt, DampingKind::ScaleInvariant) {
            worst = worst.max((prov.lifespan_exponent + 1.0 / res.gamma).abs() * res.gamma.abs());
        }
    }
    rec.push(
        "provenance exponent is -1/Gamma",
        worst <= 1e-12,
        format!("max relative defect {worst:.1e} over 200 seeded points"),
    );
    rec.push(
        "B1 theta/p equals its branch",
        worst_b1 <= 1e-12,
        format!("max defect {worst_b1:.1e}"),
    );

    let pr = Range { lo: 1.2, hi: 4.0 };
    let mut ok = true;
    let scan = |n: u32, mu: f64| region_scan(n, mu, pr, pr, 12, exec);
    for mu in [0.0, 0.5, 1.0, 2.0] {
        let g: Vec<_> = (1..=4).map(|n| scan(n, mu)).collect::<Result<_>>()?;
        for w in g.windows(2) {
            ok &= w[0]
                .cells
                .iter()
                .zip(&w[1].cells)
                .all(|(a, b)| b.gamma <= a.gamma);
        }
    }
    for n in 1..=3 {
        let g: Vec<_> = [0.0, 0.5, 1.0, 2.0]
            .iter()
            .map(|&mu| scan(n, mu))
            .collect::<Result<_>>()?;
        for w in g.windows(2) {
            ok &= w[0]
                .cells
                .iter()
                .zip(&w[1].cells)
                .all(|(a, b)| b.gamma <= a.gamma);
        }
    }
    rec.push("scan monotone in n and mu", ok, "12x12 grids on [1.2, 4]^2");
    Ok(())
}

/// The ladder parameters used by the demo: `p = q = 2`, `r = ρ = 0`, `μ = 1`,
/// `B = K = R = T₀ = 1`, `a = 0`, `A = 10⁻³`.
pub fn demo_ladder() -> LadderParams {
    LadderParams {
        p: 2.0,
        q: 2.0,
        r: 0.0,
        rho: 0.0,
        mu: 1.0,
        b_frame: 1.0,
        k_frame: 1.0,
        radius: 1.0,
        t0: 1.0,
        growth: 0.0,
        amplitude: 1e-3,
    }
}

/// `count` seeded ladder parameter sets.
pub fn random_ladders(count: usize, seed: u64) -> Vec<LadderParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| LadderParams {
            p: rng.gen_range(1.2..3.0),
            q: rng.gen_range(1.2..3.0),
            r: rng.gen_range(-1.0..1.0),
            rho: rng.gen_range(-1.0..1.0),
            mu: rng.gen_range(0.0..3.0),
            b_frame: rng.gen_range(0.5..2.0),
            k_frame: rng.gen_range(0.5..2.0),
            radius: rng.gen_range(0.5..2.0),
            t0: rng.gen_range(0.5..2.0),
            growth: rng.gen_range(-0.5..1.0),
            amplitude: 10f64.powf(rng.gen_range(-4.0..-1.0)),
        })
        .collect()
}

/// Closed-form agreement and the log lower bound on one ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderConsistency {
    pub part: Part,
    /// Worst relative gap between recursion and closed form over `j ≤ j_max`.
    pub closed_form_error: f64,
    pub j_threshold: usize,
    /// Smallest `(ln B_j - (pq)^j ln(AH)) / |(pq)^j ln(AH)|` over `j₀ ≤ j ≤ j_max`.
    pub log_bound_margin: f64,
    pub log_bound_holds: bool,
}

pub fn ladder_consistency(
    part: Part,
    params: &LadderParams,
    j_max: usize,
) -> Result<LadderConsistency> {
    let states = iterate(part, params, j_max)?;
    let consts = constants(part, params)?;
    let mut err = 0.0_f64;
    for s in &states {
        let (a, b) = closed_forms(part, params, s.j)?;
        err = err.max(rel(a, s.a)).max(rel(b, s.b));
    }
    let ln_ah = params.amplitude.ln() + consts.ln_h;
    let mut margin = f64::INFINITY;
    for s in states.iter().filter(|s| s.j >= consts.j_threshold) {
        let rhs = params.pq().powi(s.j as i32) * ln_ah;
        margin = margin.min((s.log_b - rhs) / rhs.abs().max(f64::MIN_POSITIVE));
    }
    Ok(LadderConsistency {
        part,
        closed_form_error: err,
        j_threshold: consts.j_threshold,
        log_bound_margin: margin,
        log_bound_holds: margin >= -1e-12,
    })
}

/// Envelope behaviour above and below the explicit threshold `C A^{-1/θ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dichotomy {
    pub part: Part,
    pub t_bound: f64,
    pub floor: f64,
    pub admissible: bool,
    /// Zero of the ladder's asymptotic log-rate, where divergence actually starts.
    pub ladder_threshold: f64,
    /// Strictly increasing over `j₀..=j₀+10` at `1.5 T`.
    pub diverges_above: bool,
    /// Decreasing over the last ten rungs and below 1 at `0.5 T`.
    pub decays_below: bool,
    pub log_envelope_above: f64,
    pub log_envelope_below: f64,
}

pub fn divergence_dichotomy(part: Part, params: &LadderParams) -> Result<Dichotomy> {
    let bound = lifespan_bound(part, params)?;
    let consts = constants(part, params)?;
    let states = iterate(part, params, MAX_RUNGS)?;
    let logs = |t: f64| -> Result<Vec<f64>> {
        states
            .iter()
            .map(|s| log_envelope(s, params.radius, t))
            .collect()
    };
    let above = logs(1.5 * bound.t_bound)?;
    let below = logs(0.5 * bound.t_bound)?;
    let j0 = consts.j_threshold.min(MAX_RUNGS - 10);
    let diverges_above = above[j0..=j0 + 10].windows(2).all(|w| w[1] > w[0]);
    let tail = &below[MAX_RUNGS - 10..];
    let decays_below = tail.windows(2).all(|w| w[1] < w[0]) && below[MAX_RUNGS] < 0.0;
    Ok(Dichotomy {
        part,
        t_bound: bound.t_bound,
        floor: bound.floor,
        admissible: bound.admissible && 0.5 * bound.t_bound > bound.floor,
        ladder_threshold: iteration::ladder_threshold(part, params, &states)?,
        diverges_above,
        decays_below,
        log_envelope_above: above[MAX_RUNGS],
        log_envelope_below: below[MAX_RUNGS],
    })
}

fn iteration_suite(rec: &mut Recorder) -> Result<()> {
    for part in [Part::One, Part::Two] {
        let mut worst = 0.0_f64;
        let mut margin = f64::INFINITY;
        let mut sets = random_ladders(5, 7 + part.index() as u64);
        sets.push(demo_ladder());
        for params in &sets {
            let c = ladder_consistency(part, params, 40)?;
            worst = worst.max(c.closed_form_error);
            margin = margin.min(c.log_bound_margin);
        }
        let p = part.index();
        rec.push(
            &format!("part {p} closed forms"),
            worst <= 1e-12,
            format!("max rel gap {worst:.1e} for j <= 40 on 6 sets"),
        );
        rec.push(
            &format!("part {p} log lower bound"),
            margin >= -1e-12,
            format!("min relative margin {margin:.3e} for j >= j_threshold"),
        );
    }

    let mut ok = true;
    for pq in [2.0_f64, 4.0, 6.25] {
        for j in 0..=30usize {
            let direct: f64 = (0..j).map(|k| pq.powi(k as i32)).sum();
            let weighted: f64 = (0..j).map(|k| (j - k) as f64 * pq.powi(k as i32)).sum();
            ok &= rel(direct, iteration::geometric_sum(pq, j)) <= 1e-12;
            ok &= rel(weighted, iteration::weighted_geometric_sum(pq, j)) <= 1e-12;
        }
    }
    rec.push("geometric sums", ok, "j <= 30, pq in {2, 4, 6.25}");

    let ok = linspace(0.0, 20.0, 401)
        .iter()
        .all(|&s| (-s).exp() <= 1.0 - s + s * s / 2.0 + 1e-15);
    rec.push(
        "exp factor inequality",
        ok,
        "e^-s <= 1 - s + s^2/2 on [0, 20]",
    );

    let mut ok = true;
    for pq in [2.0_f64, 4.0, 6.25] {
        let sl = iteration::slicing(pq, 1.0, 20)?;
        for j in 0..19usize {
            let ell = sl.ell[j + 1];
            let t_start = sl.slice_time(j + 1);
            for k in 0..20 {
                let t = t_start * (1.0 + k as f64);
                ok &= 1.0 - (-(1.0 - 1.0 / ell) * t).exp()
                    >= iteration::exp_factor_bound(pq, j) * (1.0 - 1e-12);
            }
        }
    }
    rec.push("slicing factor bound", ok, "j < 19, pq in {2, 4, 6.25}");

    let demo = demo_ladder();
    let mut mcert = true;
    for part in [Part::One, Part::Two] {
        let states = iterate(part, &demo, MAX_RUNGS)?;
        mcert &= iteration::certify_m(&states, &demo, &constants(part, &demo)?)?.holds;
    }
    rec.push(
        "M certificate",
        mcert,
        "min l_j^-b_j >= e^-E on 60 rungs, both parts",
    );

    let d = divergence_dichotomy(Part::One, &demo)?;
    rec.push(
        "diverges above threshold",
        d.diverges_above && d.admissible,
        format!(
            "t = 1.5 x {:.2}: log envelope at j=60 is {:.3e}",
            d.t_bound, d.log_envelope_above
        ),
    );
    // The explicit threshold only bounds the divergence onset from above.
    rec.info(
        "decays below threshold",
        d.decays_below,
        format!(
            "t = 0.5 x {:.2}: log envelope at j=60 is {:.3e}; ladder diverges from t = {:.2}",
            d.t_bound, d.log_envelope_below, d.ladder_threshold
        ),
    );
    Ok(())
}

fn odi_suite(rec: &mut Recorder, exec: Execution) -> Result<()> {
    let poly = DampingSpec::poly_decay(1.0, 2.0)?;
    let m0 = m_multiplier(&poly, 0.0)?;
    rec.push(
        "m(0) for (1+t)^-2",
        rel(m0, (-1.0f64).exp()) <= 1e-14,
        format!("{m0} against e^-1"),
    );
    let mut worst = 0.0_f64;
    let mut monotone = true;
    let mut prev = 0.0;
    for t in linspace(0.0, 50.0, 101) {
        let h = 1e-4 * (1.0 + t);
        let m_at = |s: f64| m_multiplier(&poly, s);
        let fd = if t >= h {
            (m_at(t + h)? - m_at(t - h)?) / (2.0 * h)
        } else {
            (-3.0 * m_at(t)? + 4.0 * m_at(t + h)? - m_at(t + 2.0 * h)?) / (2.0 * h)
        };
        let m = m_multiplier(&poly, t)?;
        worst = worst.max(rel(fd, poly.b(t) * m));
        monotone &= m >= prev && m <= 1.0;
        prev = m;
    }
    rec.push(
        "m' = b m",
        worst <= 1e-6,
        format!("max rel defect {worst:.1e} on [0, 50]"),
    );
    rec.push(
        "m nondecreasing in (0, 1]",
        monotone,
        "101 points of [0, 50]",
    );

    let demo = OdiConfig::demo();
    let run = integrate_system(&demo, 200.0, 1e8)?;
    let nonneg = run.trajectory.y.iter().all(|y| y[0] >= 0.0 && y[2] >= 0.0);
    rec.push(
        "trajectory nonnegative",
        nonneg,
        format!("{} steps", run.trajectory.len()),
    );
    let t8 = run.event.map(|e| e.time);
    let t4 = integrate_system(&demo, 200.0, 1e4)?.event.map(|e| e.time);
    let fine = IntegratorOptions {
        atol: 1e-10,
        rtol: 1e-10,
        ..IntegratorOptions::default()
    };
    let tf = odi::integrate_system_with(&demo, 200.0, 1e8, &fine)?
        .event
        .map(|e| e.time);
    match (t8, t4, tf) {
        (Some(a), Some(b), Some(c)) => {
            rec.push(
                "threshold insensitivity",
                rel(a, b) < 0.02,
                format!("T = {a:.6} at 1e8, {b:.6} at 1e4"),
            );
            rec.push(
                "resolution stability",
                rel(a, c) < 0.01,
                format!("T = {a:.6} at 1e-8, {c:.6} at 1e-10"),
            );
        }
        _ => rec.push("demo blows up", false, "no blow-up event before t = 200"),
    }

    let audit = frame_audit(&run.trajectory, &demo)?;
    rec.push(
        "frame audit",
        audit.passed,
        format!("worst margin {:.2e}", audit.worst_margin()),
    );
    let scat = OdiConfig {
        damping: poly,
        ..OdiConfig::demo()
    };
    let srun = integrate_system(&scat, 200.0, 1e8)?;
    let saudit = frame_audit(&srun.trajectory, &scat)?;
    rec.push(
        "scattering frame audit",
        saudit.passed && rel(saudit.k_constant, m0) <= 1e-15,
        format!(
            "K = {:.6}, worst margin {:.2e}",
            saudit.k_constant,
            saudit.worst_margin()
        ),
    );

    let sweep = OdiSweep::demo();
    let est = odi::lifespan_sweep(&sweep, exec)?;
    rec.push(
        "demo sweep",
        est.verdict.all_blew_up && est.verdict.monotone && est.verdict.consistent,
        format!(
            "slope {:.3} against {:.3}, tail excess {:.3}",
            est.fit.map_or(f64::NAN, |f| f.slope),
            est.predicted_exponent,
            est.verdict.tail_excess
        ),
    );
    let doubled = OdiSweep {
        epsilons: sweep.epsilons.iter().map(|e| 2.0 * e).collect(),
        ..sweep.clone()
    };
    let est2 = odi::lifespan_sweep(&doubled, exec)?;
    let ok = est
        .samples
        .iter()
        .zip(&est2.samples)
        .all(|(a, b)| match (a.time(), b.time()) {
            (Some(ta), Some(tb)) => tb <= ta,
            _ => false,
        });
    rec.push(
        "doubling data never delays blow-up",
        ok,
        "demo sweep at 2 eps",
    );
    Ok(())
}

fn pde_suite(rec: &mut Recorder, exec: Execution) -> Result<()> {
    let zero = ModelConfig {
        profile: pde::InitialProfile {
            u0: 0.0,
            u1: 0.0,
            v0: 0.0,
            v1: 0.0,
        },
        t_max: 5.0,
        ..ModelConfig::demo()
    };
    let z = pde::solve(&zero)?;
    let quiet = z.series.max_norm.iter().all(|&m| m == 0.0)
        && z.series
            .res_u
            .iter()
            .chain(&z.series.res_v)
            .all(|&r| r == 0.0);
    rec.push("zero data stays zero", quiet, format!("{} steps", z.steps));

    let demo = ModelConfig::demo();
    let run = pde::solve(&demo)?;
    let t_blow = run.event.map(|e| e.time);
    rec.push(
        "demo blows up before t_max",
        t_blow.is_some_and(|t| t < demo.t_max),
        format!("T = {t_blow:?}"),
    );
    let ident = pde::identity_audit(&run.series, &demo)?;
    rec.push(
        "identities pre-blow-up",
        ident.passed,
        format!(
            "max residual U {:.2e}, V {:.2e} on [0, {:.3}]",
            ident.max_residual_u, ident.max_residual_v, ident.window_end
        ),
    );
    let margin = run
        .series
        .support_margin
        .iter()
        .copied()
        .fold(0.0, f64::max);
    rec.push(
        "finite propagation",
        margin <= 1e-10,
        format!("max relative support margin {margin:.1e}"),
    );
    let w = run.series.window_len();
    let positive = (0..w).all(|i| {
        run.series.u[i] >= 0.0
            && run.series.v[i] >= 0.0
            && run.series.v0[i] >= 0.0
            && run.series.v1[i] >= 0.0
    });
    rec.push("functionals nonnegative", positive, format!("{w} samples"));
    let lb = pde::lower_bound_audit(&run.series, &demo)?;
    let failing: Vec<&str> = lb
        .checks
        .iter()
        .filter(|c| c.asserted && !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    rec.push(
        "lower bounds",
        lb.passed,
        if failing.is_empty() {
            format!("{} bounds hold", lb.checks.len())
        } else {
            format!("failing: {}", failing.join(", "))
        },
    );

    let study = pde::refinement_study(&demo, exec)?;
    rec.push(
        "refinement halves residuals",
        study.halves(),
        format!(
            "ratio U {:.3}, V {:.3} (V at {:.1e})",
            study.ratio_u,
            study.ratio_v,
            study.coarse.max_residual_v.max(study.fine.max_residual_v)
        ),
    );
    rec.push(
        "two-resolution blow-up time",
        study.time_agreement.is_some_and(|a| a <= 0.05),
        format!("relative gap {:?}", study.time_agreement),
    );

    let short = ModelConfig {
        t_max: 6.0,
        ..ModelConfig::demo()
    };
    let si = pde::solve(&ModelConfig {
        damping: DampingSpec::ScaleInvariant { mu: 0.0 },
        ..short.clone()
    })?;
    let sc = pde::solve(&ModelConfig {
        damping: DampingSpec::Scattering {
            profile: ScatteringProfile::Tabulated {
                times: vec![0.0, 1.0],
                values: vec![0.0, 0.0],
                tail: 0.0,
            },
        },
        ..short
    })?;
    rec.push(
        "mu=0 matches vanishing scattering",
        si.series.u == sc.series.u && si.series.v == sc.series.v && si.series.v0 == sc.series.v0,
        "bitwise FunctionalSeries comparison",
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::MEMBERS.iter().chain(&[Suite::All]) {
            assert_eq!(s.as_str().parse::<Suite>().unwrap(), *s);
        }
        assert!("bogus".parse::<Suite>().unwrap_err().is_usage());
    }

    #[test]
    fn informational_failures_do_not_decide() {
        let mut rec = Recorder::new(Suite::Curves);
        rec.push("a", true, "");
        rec.info("b", false, "");
        let report = Report { checks: rec.checks };
        assert!(report.passed());
        assert!(report.to_text().contains("INFO curves b"));
    }

    #[test]
    fn curves_suite_passes() {
        let r = run_suite(Suite::Curves, Execution::Sequential).unwrap();
        assert!(r.passed(), "{}", r.to_text());
    }
}
