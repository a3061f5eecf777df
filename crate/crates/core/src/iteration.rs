//! Slicing procedure and the two iteration ladders for the comparison argument
//! on the ODI system
//!
//! ```text
//! F'' + F'     ≥ B (R+t)^{-r} |G|^p,
//! G'' + b G'   ≥ B̃ (R+t)^{-ρ} |F|^q,
//! ```
//!
//! in its integral frame `F ≥ B e^{-t}∫e^τ∫(R+s)^{-r}G^p`,
//! `G ≥ K∫(R+τ)^{-μ}∫s^μ(R+s)^{-ρ}F^q`. Part 1 starts from `F ≥ A t^a`,
//! part 2 from `G ≥ Ã t^α`. Products `B_j`, `K_j` are carried as logarithms;
//! the exponent sequences stay in linear space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper limit on ladder length; `(pq)^j` stays representable far beyond it.
pub const MAX_RUNGS: usize = 60;

/// Stop extending `L_∞` once the factor `ℓ_k - 1` drops below this.
const SLICING_TOLERANCE: f64 = 1e-16;

fn pos(x: f64) -> f64 {
    x.max(0.0)
}

fn neg(x: f64) -> f64 {
    (-x).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlicingSequence {
    pub pq: f64,
    pub t0: f64,
    /// `ℓ_0 = max{1, 1/T₀}`, `ℓ_k = 1 + (pq)^{-k}`.
    pub ell: Vec<f64>,
    /// Partial products `L_j = ∏_{k≤j} ℓ_k`.
    pub partial: Vec<f64>,
    pub l_inf: f64,
}

impl SlicingSequence {
    /// `L_j T₀`, the left end of the interval on which rung `j` holds.
    pub fn slice_time(&self, j: usize) -> f64 {
        self.partial[j] * self.t0
    }
}

pub fn slicing(pq: f64, t0: f64, j_max: usize) -> Result<SlicingSequence> {
    if !(pq.is_finite() && pq > 1.0) {
        return Err(Error::invalid(format!("slicing needs pq > 1, got {pq}")));
    }
    if !(t0.is_finite() && t0 > 0.0) {
        return Err(Error::invalid(format!("slicing needs T0 > 0, got {t0}")));
    }
    if j_max < 1 {
        return Err(Error::invalid("slicing needs j_max >= 1"));
    }
    let factor = |k: usize| {
        if k == 0 {
            (1.0 / t0).max(1.0)
        } else {
            1.0 + pq.powi(-(k as i32))
        }
    };
    let ell: Vec<f64> = (0..=j_max).map(factor).collect();
    let mut partial = Vec::with_capacity(ell.len());
    let mut acc = 1.0;
    for &l in &ell {
        acc *= l;
        partial.push(acc);
    }
    let mut l_inf = acc;
    let mut k = j_max + 1;
    loop {
        let inc = pq.powi(-(k as i32));
        if inc < SLICING_TOLERANCE {
            break;
        }
        l_inf *= 1.0 + inc;
        k += 1;
    }
    Ok(SlicingSequence {
        pq,
        t0,
        ell,
        partial,
        l_inf,
    })
}

/// Which lower bound seeds the ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    /// `F ≥ A t^a`.
    One,
    /// `G ≥ Ã t^α`.
    Two,
}

impl Part {
    pub fn index(self) -> u8 {
        match self {
            Part::One => 1,
            Part::Two => 2,
        }
    }
}

/// Parameters of one ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderParams {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub rho: f64,
    pub mu: f64,
    /// Frame constant `B` of the F-frame.
    pub b_frame: f64,
    /// Frame constant `K` of the G-frame.
    pub k_frame: f64,
    pub radius: f64,
    pub t0: f64,
    /// Seed growth exponent: `a` (part 1) or `α` (part 2).
    pub growth: f64,
    /// Seed amplitude: `A` (part 1) or `Ã` (part 2).
    pub amplitude: f64,
}

impl LadderParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("p - 1", self.p - 1.0),
            ("q - 1", self.q - 1.0),
            ("B", self.b_frame),
            ("K", self.k_frame),
            ("R", self.radius),
            ("T0", self.t0),
            ("A", self.amplitude),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!(
                    "ladder parameter {name} must be positive and finite, got {v}"
                )));
            }
        }
        for (name, v) in [("r", self.r), ("rho", self.rho), ("growth", self.growth)] {
            if !v.is_finite() {
                return Err(Error::invalid(format!(
                    "ladder parameter {name} must be finite"
                )));
            }
        }
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(Error::invalid(format!(
                "ladder parameter mu must be >= 0, got {}",
                self.mu
            )));
        }
        Ok(())
    }

    pub fn pq(&self) -> f64 {
        self.p * self.q
    }

    /// Initial exponents `(a₀, b₀) = (a₋, a₊)`.
    pub fn seed(&self) -> (f64, f64) {
        (neg(self.growth), pos(self.growth))
    }

    /// Additive constants `(c_a, c_b)` of the exponent recursions
    /// `a_{j+1} = c_a + pq a_j`, `b_{j+1} = c_b + pq b_j`.
    pub fn increments(&self, part: Part) -> (f64, f64) {
        let (p, q, mu) = (self.p, self.q, self.mu);
        let (rp, rm, hp, hm) = (pos(self.r), neg(self.r), pos(self.rho), neg(self.rho));
        match part {
            Part::One => (rp + (mu + hp) * p, rm + (mu + hm) * p + 2.0 * p + 1.0),
            Part::Two => (mu + hp + rp * q, mu + hm + rm * q + q + 2.0),
        }
    }

    /// `θ = a + (2p+1-(ρp+r))/(pq-1)` or `θ̃ = α + (q+2-(rq+ρ))/(pq-1)`.
    pub fn theta(&self, part: Part) -> f64 {
        theta(part, self.p, self.q, self.r, self.rho, self.growth)
    }

    /// Exponent of 2 in `H̃ = 2^{-κ} H` (resp. `Ñ = 2^{-κ} N`).
    fn halving_exponent(&self, part: Part) -> f64 {
        let d = self.pq() - 1.0;
        let (p, q, mu) = (self.p, self.q, self.mu);
        match part {
            Part::One => {
                self.growth.abs()
                    + (2.0 * p + 1.0 + self.r.abs() + (2.0 * mu + self.rho.abs()) * p) / d
            }
            Part::Two => {
                self.growth.abs() + (q + 2.0 + 2.0 * mu + self.rho.abs() + self.r.abs() * q) / d
            }
        }
    }
}

/// `θ = a + (2p+1-(ρp+r))/(pq-1)` (part 1) or `θ̃ = α + (q+2-(rq+ρ))/(pq-1)` (part 2).
pub fn theta(part: Part, p: f64, q: f64, r: f64, rho: f64, growth: f64) -> f64 {
    let d = p * q - 1.0;
    match part {
        Part::One => growth + (2.0 * p + 1.0 - (rho * p + r)) / d,
        Part::Two => growth + (q + 2.0 - (r * q + rho)) / d,
    }
}

/// One rung `(j, ln B_j, a_j, b_j, L_j T₀)` (part 2: `ln K_j, α_j, β_j`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationState {
    pub j: usize,
    pub log_b: f64,
    pub a: f64,
    pub b: f64,
    pub slice_time: f64,
}

fn check_rungs(j_max: usize) -> Result<()> {
    if j_max > MAX_RUNGS {
        return Err(Error::invalid(format!(
            "ladder length {j_max} exceeds the cap {MAX_RUNGS}"
        )));
    }
    Ok(())
}

/// Recursions for either part, `j = 0..=j_max`.
pub fn iterate(part: Part, params: &LadderParams, j_max: usize) -> Result<Vec<IterationState>> {
    params.validate()?;
    check_rungs(j_max)?;
    let LadderParams {
        p,
        q,
        mu,
        b_frame,
        k_frame,
        ..
    } = *params;
    let pq = params.pq();
    let slices = slicing(pq, params.t0, j_max.max(1))?;
    let (c_a, c_b) = params.increments(part);
    let (a0, b0) = params.seed();
    let rm = neg(params.r);
    let hm = neg(params.rho);
    let ln_pq = pq.ln();
    let mut states = Vec::with_capacity(j_max + 1);
    let mut cur = IterationState {
        j: 0,
        log_b: params.amplitude.ln(),
        a: a0,
        b: b0,
        slice_time: slices.slice_time(0),
    };
    states.push(cur);
    for j in 0..j_max {
        let jn = (j + 1) as f64;
        let ln_ell = slices.ell[j + 1].ln();
        let a = c_a + pq * cur.a;
        let b = c_b + pq * cur.b;
        let log_b = match part {
            Part::One => {
                b_frame.ln() + p * k_frame.ln() + (pq - 0.5).ln() - 2.0 * jn * ln_pq - b * ln_ell
                    + pq * cur.log_b
                    - 2.0 * p * (mu + hm + q * cur.b + 2.0).ln()
                    - b.ln()
            }
            Part::Two => {
                let inner = rm + p * cur.b + 1.0;
                k_frame.ln() + q * b_frame.ln() + q * (pq - 0.5).ln()
                    - 2.0 * q * jn * ln_pq
                    - inner * q * ln_ell
                    + pq * cur.log_b
                    - q * inner.ln()
                    - 2.0 * b.ln()
            }
        };
        cur = IterationState {
            j: j + 1,
            log_b,
            a,
            b,
            slice_time: slices.slice_time(j + 1),
        };
        states.push(cur);
    }
    Ok(states)
}

pub fn iterate_part1(params: &LadderParams, j_max: usize) -> Result<Vec<IterationState>> {
    iterate(Part::One, params, j_max)
}

pub fn iterate_part2(params: &LadderParams, j_max: usize) -> Result<Vec<IterationState>> {
    iterate(Part::Two, params, j_max)
}

/// Closed forms `a_j = (a₀ + c_a/(pq-1))(pq)^j - c_a/(pq-1)` and likewise for `b_j`.
pub fn closed_forms(part: Part, params: &LadderParams, j: usize) -> Result<(f64, f64)> {
    params.validate()?;
    let pq = params.pq();
    let (c_a, c_b) = params.increments(part);
    let (a0, b0) = params.seed();
    let (ka, kb) = (c_a / (pq - 1.0), c_b / (pq - 1.0));
    let g = pq.powi(j as i32);
    Ok(((a0 + ka) * g - ka, (b0 + kb) * g - kb))
}

pub fn closed_forms_part1(j: usize, params: &LadderParams) -> Result<(f64, f64)> {
    closed_forms(Part::One, params, j)
}

pub fn closed_forms_part2(j: usize, params: &LadderParams) -> Result<(f64, f64)> {
    closed_forms(Part::Two, params, j)
}

/// Derived constants of a ladder. For part 2 read `D̃, P, Ẽ, M̃, N, Ñ, j₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationConstants {
    pub part: Part,
    pub b_frame: f64,
    pub k_frame: f64,
    pub e: f64,
    pub m: f64,
    pub ln_d: f64,
    /// `ln Q` (part 1) or `ln P` (part 2).
    pub ln_q: f64,
    pub ln_h: f64,
    pub ln_h_tilde: f64,
    pub j_threshold: usize,
}

impl IterationConstants {
    pub fn d(&self) -> f64 {
        self.ln_d.exp()
    }

    /// `Q = (pq)^{2p+3}` or `P = (pq)^{3q+2}`.
    pub fn q_factor(&self) -> f64 {
        self.ln_q.exp()
    }

    pub fn h(&self) -> f64 {
        self.ln_h.exp()
    }

    pub fn h_tilde(&self) -> f64 {
        self.ln_h_tilde.exp()
    }
}

pub fn constants(part: Part, params: &LadderParams) -> Result<IterationConstants> {
    params.validate()?;
    let LadderParams {
        p,
        q,
        b_frame,
        k_frame,
        ..
    } = *params;
    let pq = params.pq();
    let d1 = pq - 1.0;
    let (_, c_b) = params.increments(part);
    let (_, b0) = params.seed();
    let e = b0 + c_b / d1;
    let ln_m = -e;
    let (ln_d, ln_q) = match part {
        Part::One => (
            b_frame.ln() + p * k_frame.ln() + (pq - 0.5).ln() + 2.0 * p * p.ln() + ln_m
                - (2.0 * p + 1.0) * e.ln(),
            (2.0 * p + 3.0) * pq.ln(),
        ),
        Part::Two => (
            k_frame.ln() + q * b_frame.ln() + q * (pq - 0.5).ln() + q * q.ln() + ln_m
                - (q + 2.0) * e.ln(),
            (3.0 * q + 2.0) * pq.ln(),
        ),
    };
    let ln_h = -pq * ln_q / (d1 * d1) + ln_d / d1;
    let ln_h_tilde = ln_h - params.halving_exponent(part) * std::f64::consts::LN_2;
    let bound = ln_d / ln_q - pq / d1;
    // smallest nonnegative integer strictly greater than `bound`
    let j_threshold = if bound < 0.0 {
        0
    } else {
        bound.floor() as usize + 1
    };
    Ok(IterationConstants {
        part,
        b_frame,
        k_frame,
        e,
        m: ln_m.exp(),
        ln_d,
        ln_q,
        ln_h,
        ln_h_tilde,
        j_threshold,
    })
}

pub fn constants_part1(params: &LadderParams) -> Result<IterationConstants> {
    constants(Part::One, params)
}

pub fn constants_part2(params: &LadderParams) -> Result<IterationConstants> {
    constants(Part::Two, params)
}

/// Smallest `ℓ_j^{-b_j}` (part 2: `ℓ_j^{-β_j}`) over rungs `j ≥ 1` of a ladder,
/// compared with `M = e^{-E}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCertificate {
    pub m: f64,
    pub min_factor: f64,
    pub holds: bool,
}

pub fn certify_m(
    states: &[IterationState],
    params: &LadderParams,
    consts: &IterationConstants,
) -> Result<MCertificate> {
    let slices = slicing(params.pq(), params.t0, states.len().max(2) - 1)?;
    let min_factor = states
        .iter()
        .filter(|s| s.j >= 1)
        .map(|s| (-s.b * slices.ell[s.j].ln()).exp())
        .fold(1.0_f64, f64::min);
    Ok(MCertificate {
        m: consts.m,
        min_factor,
        holds: min_factor >= consts.m * (1.0 - 1e-9),
    })
}

/// Explicit lifespan bound `T ≤ C A^{-1/θ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifespanBound {
    pub part: Part,
    pub theta: f64,
    /// `C = H̃^{-1/θ}`.
    pub constant: f64,
    pub t_bound: f64,
    /// Admissibility floor `T₁ = max{R, 2 L_∞ T₀}`.
    pub floor: f64,
    /// Largest amplitude with `C A^{-1/θ} ≥ T₁`.
    pub amplitude_max: f64,
    pub admissible: bool,
}

pub fn lifespan_bound(part: Part, params: &LadderParams) -> Result<LifespanBound> {
    let consts = constants(part, params)?;
    let theta = params.theta(part);
    if !(theta > 0.0) {
        let cond = match part {
            Part::One => "a(pq-1) + 2p + 1 > rho p + r",
            Part::Two => "alpha(pq-1) + q + 2 > r q + rho",
        };
        return Err(Error::HypothesisViolation(format!(
            "{cond} fails (theta = {theta})"
        )));
    }
    let constant = (-consts.ln_h_tilde / theta).exp();
    let t_bound = constant * params.amplitude.powf(-1.0 / theta);
    let l_inf = slicing(params.pq(), params.t0, 1)?.l_inf;
    let floor = params.radius.max(2.0 * l_inf * params.t0);
    let amplitude_max = (constant / floor).powf(theta);
    Ok(LifespanBound {
        part,
        theta,
        constant,
        t_bound,
        floor,
        amplitude_max,
        admissible: params.amplitude <= amplitude_max,
    })
}

pub fn lifespan_bound_part1(params: &LadderParams) -> Result<LifespanBound> {
    lifespan_bound(Part::One, params)
}

pub fn lifespan_bound_part2(params: &LadderParams) -> Result<LifespanBound> {
    lifespan_bound(Part::Two, params)
}

/// `ln(B_j (R+t)^{-a_j} (t - L_j T₀)^{b_j})`.
pub fn log_envelope(state: &IterationState, radius: f64, t: f64) -> Result<f64> {
    if !(t > state.slice_time) {
        return Err(Error::invalid(format!(
            "envelope needs t > L_j T0 = {} at rung {}, got {t}",
            state.slice_time, state.j
        )));
    }
    Ok(state.log_b + state.b * (t - state.slice_time).ln() - state.a * (radius + t).ln())
}

/// `B_j (R+t)^{-a_j} (t - L_j T₀)^{b_j}` (may overflow to `+∞` for large `j`).
pub fn envelope_eval(state: &IterationState, radius: f64, t: f64) -> Result<f64> {
    Ok(log_envelope(state, radius, t)?.exp())
}

/// Time at which the ladder itself changes from decay to divergence:
/// the zero of `lim_j (pq)^{-j} ln(envelope_j(t))`, estimated from the last rung.
/// The proof's threshold `C A^{-1/θ}` bounds it from above.
pub fn ladder_threshold(
    part: Part,
    params: &LadderParams,
    states: &[IterationState],
) -> Result<f64> {
    let last = states
        .last()
        .ok_or_else(|| Error::invalid("empty ladder"))?;
    let pq = params.pq();
    let g = pq.powi(last.j as i32);
    let (c_a, c_b) = params.increments(part);
    let (a0, b0) = params.seed();
    let ea = a0 + c_a / (pq - 1.0);
    let eb = b0 + c_b / (pq - 1.0);
    let s = last.log_b / g;
    let start = slicing(pq, params.t0, 1)?.l_inf * params.t0;
    let rate = |t: f64| s + eb * (t - start).ln() - ea * (params.radius + t).ln();
    let mut hi = start + 1.0;
    while rate(hi) <= 0.0 {
        hi = start + 2.0 * (hi - start);
        if hi > 1e300 {
            return Err(Error::AuditFailure("ladder never diverges".into()));
        }
    }
    let mut lo = start;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if rate(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `∑_{k<j} (pq)^k = ((pq)^j - 1)/(pq - 1)`.
pub fn geometric_sum(pq: f64, j: usize) -> f64 {
    (pq.powi(j as i32) - 1.0) / (pq - 1.0)
}

/// `∑_{k<j} (j-k)(pq)^k = (((pq)^{j+1} - 1)/(pq - 1) - (j+1))/(pq - 1)`.
pub fn weighted_geometric_sum(pq: f64, j: usize) -> f64 {
    ((pq.powi(j as i32 + 1) - 1.0) / (pq - 1.0) - (j as f64 + 1.0)) / (pq - 1.0)
}

/// Lower bound `(pq)^{-2(j+1)}(pq - 1/2)` for `1 - e^{-(1-1/ℓ_{j+1})t}` on `t ≥ L_{j+1}T₀`.
pub fn exp_factor_bound(pq: f64, j: usize) -> f64 {
    pq.powi(-2 * (j as i32 + 1)) * (pq - 0.5)
}
