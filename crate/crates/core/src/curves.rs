//! Critical-curve functionals for the weakly coupled system and the map from
//! each branch of `Γ(n, p, q, μ)` to the lower bound that produces it.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};

/// Branches that agree to within this distance of the maximum are tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Nonlinearity exponents `p, q > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    p: f64,
    q: f64,
}

impl Exponents {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::invalid(format!(
                "exponent p must be finite and > 1, got {p}"
            )));
        }
        if !(q.is_finite() && q > 1.0) {
            return Err(Error::invalid(format!(
                "exponent q must be finite and > 1, got {q}"
            )));
        }
        Ok(Exponents { p, q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn pq(&self) -> f64 {
        self.p * self.q
    }

    pub fn swapped(&self) -> Self {
        Exponents {
            p: self.q,
            q: self.p,
        }
    }
}

/// `(n, p, q, μ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: u32,
    pub exponents: Exponents,
    pub mu: f64,
}

impl CurvePoint {
    pub fn new(n: u32, p: f64, q: f64, mu: f64) -> Result<Self> {
        check_dimension(n)?;
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::invalid(format!(
                "damping strength mu must be finite and >= 0, got {mu}"
            )));
        }
        Ok(CurvePoint {
            n,
            exponents: Exponents::new(p, q)?,
            mu,
        })
    }
}

fn check_dimension(n: u32) -> Result<()> {
    if n < 1 {
        return Err(Error::invalid("dimension n must be >= 1"));
    }
    Ok(())
}

/// Which functional is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Curve {
    /// Undamped system.
    W,
    /// Classical damping in both equations.
    Dw,
    /// Nakao problem, weak solutions.
    N1,
    /// Nakao problem, energy solutions.
    N2,
    /// Scale-invariant damping in the second equation.
    Mu,
}

impl std::str::FromStr for Curve {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "w" => Ok(Curve::W),
            "dw" => Ok(Curve::Dw),
            "n1" => Ok(Curve::N1),
            "n2" => Ok(Curve::N2),
            "mu" => Ok(Curve::Mu),
            other => Err(Error::invalid(format!(
                "unknown curve '{other}' (expected w, dw, n1, n2, mu)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchValue {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveResult {
    pub curve: Curve,
    pub branch_values: Vec<BranchValue>,
    pub gamma: f64,
    pub argmax_branch: String,
    /// Another branch lies within [`TIE_TOLERANCE`] of the maximum.
    pub tie: bool,
    /// `Γ > 0` strictly; `Γ = 0` is not a prediction.
    pub blowup_predicted: bool,
    /// The ε-exponent `-1/Γ` in `T(ε) ≲ ε^{-1/Γ}`, present iff `Γ > 0`.
    pub lifespan_exponent: Option<f64>,
}

impl CurveResult {
    fn from_branches(curve: Curve, values: &[f64]) -> Self {
        let gamma = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let hits: Vec<usize> = (0..values.len())
            .filter(|&i| gamma - values[i] <= TIE_TOLERANCE)
            .collect();
        let branch_values = values
            .iter()
            .enumerate()
            .map(|(i, &value)| BranchValue {
                label: branch_label(i),
                value,
            })
            .collect();
        let blowup_predicted = gamma > 0.0;
        CurveResult {
            curve,
            branch_values,
            gamma,
            argmax_branch: branch_label(hits[0]),
            tie: hits.len() > 1,
            blowup_predicted,
            lifespan_exponent: blowup_predicted.then(|| -1.0 / gamma),
        }
    }

    pub fn branch(&self, label: &str) -> Option<f64> {
        self.branch_values
            .iter()
            .find(|b| b.label == label)
            .map(|b| b.value)
    }

    pub fn argmax_index(&self) -> usize {
        self.branch_values
            .iter()
            .position(|b| b.label == self.argmax_branch)
            .expect("argmax is a branch")
    }
}

fn branch_label(i: usize) -> String {
    format!("B{}", i + 1)
}

/// `Γ_W = max{(p+2+q^{-1}), (q+2+p^{-1})}/(pq-1) - (n-1)/2`.
pub fn gamma_w(n: u32, e: Exponents) -> Result<CurveResult> {
    check_dimension(n)?;
    let (p, q, d) = (e.p, e.q, e.pq() - 1.0);
    let shift = (n as f64 - 1.0) / 2.0;
    Ok(CurveResult::from_branches(
        Curve::W,
        &[
            (p + 2.0 + 1.0 / q) / d - shift,
            (q + 2.0 + 1.0 / p) / d - shift,
        ],
    ))
}

/// `Γ_DW = max{(p+1), (q+1)}/(pq-1) - n/2`.
pub fn gamma_dw(n: u32, e: Exponents) -> Result<CurveResult> {
    check_dimension(n)?;
    let (p, q, d) = (e.p, e.q, e.pq() - 1.0);
    let shift = n as f64 / 2.0;
    Ok(CurveResult::from_branches(
        Curve::Dw,
        &[(p + 1.0) / d - shift, (q + 1.0) / d - shift],
    ))
}

/// `Γ_N1 = max{(q/2+1)/(pq-1) + 1/2, (p+1)/(pq-1), (q+1)/(pq-1)} - n/2`.
pub fn gamma_n1(n: u32, e: Exponents) -> Result<CurveResult> {
    check_dimension(n)?;
    let (p, q, d) = (e.p, e.q, e.pq() - 1.0);
    let shift = n as f64 / 2.0;
    Ok(CurveResult::from_branches(
        Curve::N1,
        &[
            (q / 2.0 + 1.0) / d + 0.5 - shift,
            (p + 1.0) / d - shift,
            (q + 1.0) / d - shift,
        ],
    ))
}

/// `Γ_N2 = max{(2+p^{-1})/(pq-1), (q/2+1)/(pq-1), (p+1/2)/(pq-1) - 1/2} - (n-1)/2`.
pub fn gamma_n2(n: u32, e: Exponents) -> Result<CurveResult> {
    check_dimension(n)?;
    let (p, q, d) = (e.p, e.q, e.pq() - 1.0);
    let shift = (n as f64 - 1.0) / 2.0;
    Ok(CurveResult::from_branches(
        Curve::N2,
        &[
            (2.0 + 1.0 / p) / d - shift,
            (q / 2.0 + 1.0) / d - shift,
            (p + 0.5) / d - 0.5 - shift,
        ],
    ))
}

/// `Γ(n,p,q,μ) = max{(2+p^{-1})/(pq-1) - (n+μ-1)/2, (q+2)/(pq-1) - n + [1-μ]₊, (2p+1)/(pq-1) - n}`.
pub fn gamma_mu(point: CurvePoint) -> Result<CurveResult> {
    let CurvePoint {
        n,
        exponents: e,
        mu,
    } = point;
    check_dimension(n)?;
    let (p, q, d) = (e.p, e.q, e.pq() - 1.0);
    let n = n as f64;
    Ok(CurveResult::from_branches(
        Curve::Mu,
        &[
            (2.0 + 1.0 / p) / d - (n + mu - 1.0) / 2.0,
            (q + 2.0) / d - n + (1.0 - mu).max(0.0),
            (2.0 * p + 1.0) / d - n,
        ],
    ))
}

/// The scattering-damping exponent `Γ(n,p,q,0)`, written out directly.
pub fn gamma_scattering(n: u32, e: Exponents) -> Result<CurveResult> {
    check_dimension(n)?;
    let (p, q, d) = (e.p, e.q, e.pq() - 1.0);
    let n = n as f64;
    Ok(CurveResult::from_branches(
        Curve::Mu,
        &[
            (2.0 + 1.0 / p) / d - (n - 1.0) / 2.0,
            (q + 2.0) / d - n + 1.0,
            (2.0 * p + 1.0) / d - n,
        ],
    ))
}

/// Evaluate any curve at a point (`μ` is ignored except for [`Curve::Mu`]).
pub fn evaluate(curve: Curve, point: CurvePoint) -> Result<CurveResult> {
    match curve {
        Curve::W => gamma_w(point.n, point.exponents),
        Curve::Dw => gamma_dw(point.n, point.exponents),
        Curve::N1 => gamma_n1(point.n, point.exponents),
        Curve::N2 => gamma_n2(point.n, point.exponents),
        Curve::Mu => gamma_mu(point),
    }
}

/// Which damping regime the second equation carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DampingKind {
    ScaleInvariant,
    Scattering,
}

/// Functional lower bound that seeds the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerBound {
    /// `U(t) ≳ ε^p (R+t)^{-(n+μ-1)p/2} t^n`.
    UPolynomial,
    /// `V(t) ≳ ε · {t^{1-μ}, ln(1+t), 1}`.
    VGrowth,
    /// `U(t) ≥ U(0)`.
    UConstant,
}

/// Which quantity the lower bound feeds and how the lifespan exponent follows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub branch: String,
    pub damping: DampingKind,
    pub lower_bound: LowerBound,
    /// Iteration part (1 seeds `F = U`, 2 seeds `G = V`).
    pub part: u8,
    /// The seed growth exponent: `a` for part 1, `α` for part 2.
    pub growth: f64,
    /// Power of ε in the seed amplitude.
    pub amplitude_power: f64,
    /// Frame exponents `r = n(p-1)`, `ρ = n(q-1)`.
    pub r: f64,
    pub rho: f64,
    /// Iteration exponent `θ` (part 1) or `θ̃` (part 2).
    pub theta: f64,
    /// `-amplitude_power / θ`, which collapses to `-1/Γ_branch`.
    pub lifespan_exponent: f64,
    /// `μ ≥ 1` forces `α = [1-μ]₊ = 0`.
    pub alpha_clamped: bool,
    /// The seed is the logarithmic bound (`μ = 1`).
    pub logarithmic: bool,
}

/// Provenance of the maximizing branch of `Γ`. Errors if `Γ ≤ 0`.
pub fn branch_provenance(point: CurvePoint, damping: DampingKind) -> Result<Provenance> {
    let point = effective_point(point, damping);
    let res = gamma_mu(point)?;
    if !res.blowup_predicted {
        return Err(Error::OutsideBlowupRange { gamma: res.gamma });
    }
    provenance_for(point, damping, res.argmax_index())
}

fn effective_point(point: CurvePoint, damping: DampingKind) -> CurvePoint {
    match damping {
        DampingKind::ScaleInvariant => point,
        DampingKind::Scattering => CurvePoint { mu: 0.0, ..point },
    }
}

/// Provenance of branch `index` (0-based) regardless of whether it is the maximum.
pub fn provenance_for(point: CurvePoint, damping: DampingKind, index: usize) -> Result<Provenance> {
    let point = effective_point(point, damping);
    let CurvePoint {
        n,
        exponents: e,
        mu,
    } = point;
    check_dimension(n)?;
    let (p, q, d) = (e.p, e.q, e.pq() - 1.0);
    let nf = n as f64;
    let r = nf * (p - 1.0);
    let rho = nf * (q - 1.0);
    let theta_part1 = |a: f64| a + (2.0 * p + 1.0 - (rho * p + r)) / d;
    let (lower_bound, part, growth, amplitude_power, theta) = match index {
        0 => {
            let a = nf - (nf + mu - 1.0) * p / 2.0;
            (LowerBound::UPolynomial, 1, a, p, theta_part1(a))
        }
        1 => {
            let alpha = match damping {
                DampingKind::ScaleInvariant => (1.0 - mu).max(0.0),
                DampingKind::Scattering => 1.0,
            };
            (
                LowerBound::VGrowth,
                2,
                alpha,
                1.0,
                alpha + (q + 2.0 - (r * q + rho)) / d,
            )
        }
        2 => (LowerBound::UConstant, 1, 0.0, 1.0, theta_part1(0.0)),
        _ => {
            return Err(Error::invalid(format!(
                "branch index {index} out of range (0..3)"
            )))
        }
    };
    let scale_invariant = damping == DampingKind::ScaleInvariant;
    Ok(Provenance {
        branch: branch_label(index),
        damping,
        lower_bound,
        part,
        growth,
        amplitude_power,
        r,
        rho,
        theta,
        lifespan_exponent: -amplitude_power / theta,
        alpha_clamped: index == 1 && scale_invariant && mu >= 1.0,
        logarithmic: index == 1 && scale_invariant && mu == 1.0,
    })
}

/// Inclusive range for a scan axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    fn nodes(&self, resolution: usize) -> Vec<f64> {
        (0..resolution)
            .map(|k| {
                if k + 1 == resolution {
                    self.hi
                } else {
                    self.lo + (self.hi - self.lo) * k as f64 / (resolution - 1) as f64
                }
            })
            .collect()
    }
}

/// `Γ(n, p, q, μ)` on a rectangular `(p, q)` grid, row `i` holding `p = ps[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionGrid {
    pub n: u32,
    pub mu: f64,
    pub ps: Vec<f64>,
    pub qs: Vec<f64>,
    pub cells: Vec<CurveResult>,
}

impl RegionGrid {
    pub fn at(&self, i: usize, j: usize) -> &CurveResult {
        &self.cells[i * self.qs.len() + j]
    }

    /// Row-major CSV with header `p,q,gamma,branch`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,q,gamma,branch\n");
        for (i, p) in self.ps.iter().enumerate() {
            for (j, q) in self.qs.iter().enumerate() {
                let c = self.at(i, j);
                let _ = writeln!(out, "{p},{q},{},{}", c.gamma, c.argmax_branch);
            }
        }
        out
    }
}

pub fn region_scan(
    n: u32,
    mu: f64,
    p_range: Range,
    q_range: Range,
    resolution: usize,
    exec: Execution,
) -> Result<RegionGrid> {
    check_dimension(n)?;
    if resolution < 2 {
        return Err(Error::invalid(format!(
            "scan resolution must be >= 2, got {resolution}"
        )));
    }
    for (name, r) in [("p", p_range), ("q", q_range)] {
        if !(r.lo.is_finite() && r.hi.is_finite() && r.lo > 1.0 && r.hi > r.lo) {
            return Err(Error::invalid(format!(
                "{name} range must satisfy 1 < lo < hi, got [{}, {}]",
                r.lo, r.hi
            )));
        }
    }
    CurvePoint::new(n, p_range.lo, q_range.lo, mu)?;
    let ps = p_range.nodes(resolution);
    let qs = q_range.nodes(resolution);
    let rows = exec::map(&ps, exec, |&p| {
        qs.iter()
            .map(|&q| {
                gamma_mu(CurvePoint {
                    n,
                    exponents: Exponents { p, q },
                    mu,
                })
            })
            .collect::<Result<Vec<_>>>()
    });
    let mut cells = Vec::with_capacity(resolution * resolution);
    for row in rows {
        cells.extend(row?);
    }
    Ok(RegionGrid {
        n,
        mu,
        ps,
        qs,
        cells,
    })
}
