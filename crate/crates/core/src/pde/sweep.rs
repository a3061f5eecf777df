use serde::{Deserialize, Serialize};

use super::audit::{identity_audit_until, IdentityAudit};
use super::solve::{solve, PdeRun};
use super::ModelConfig;
use crate::curves::{evaluate, gamma_scattering, Curve, CurvePoint};
use crate::damping::DampingSpec;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::lifespan::{
    assess, check_epsilons, LifespanEstimate, LifespanSample, DEFAULT_TAIL_TOLERANCE,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeSweep {
    pub template: ModelConfig,
    pub epsilons: Vec<f64>,
    #[serde(default = "default_tail")]
    pub tail_tolerance: f64,
}

fn default_tail() -> f64 {
    DEFAULT_TAIL_TOLERANCE
}

impl PdeSweep {
    /// The demo model at `ε ∈ {1, 0.5, 0.25, 0.125}`.
    pub fn demo() -> Self {
        PdeSweep {
            template: ModelConfig::demo(),
            epsilons: vec![1.0, 0.5, 0.25, 0.125],
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
        }
    }

    /// `-1/Γ` at the template's point: `Γ(n,p,q,μ)` for scale-invariant
    /// damping, `Γ(n,p,q,0)` for summable damping.
    pub fn predicted_exponent(&self) -> Result<f64> {
        let t = &self.template;
        let result = match t.damping {
            DampingSpec::ScaleInvariant { mu } => evaluate(
                Curve::Mu,
                CurvePoint::new(t.n, t.exponents.p(), t.exponents.q(), mu)?,
            )?,
            DampingSpec::Scattering { .. } => gamma_scattering(t.n, t.exponents)?,
        };
        result.lifespan_exponent.ok_or(Error::OutsideBlowupRange {
            gamma: result.gamma,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeSweepOutcome {
    pub estimate: LifespanEstimate,
    /// Runs in the order of `PdeSweep::epsilons`.
    pub runs: Vec<PdeRun>,
}

/// Solve once per ε (in parallel) and judge `T(ε) ≤ C ε^{-1/Γ}`.
pub fn lifespan_sweep_pde(sweep: &PdeSweep, exec: Execution) -> Result<PdeSweepOutcome> {
    check_epsilons(&sweep.epsilons)?;
    sweep.template.validate()?;
    if sweep.template.profile.is_trivial() {
        return Err(Error::invalid(
            "a lifespan sweep needs nontrivial initial data",
        ));
    }
    let predicted = sweep.predicted_exponent()?;
    let runs = exec::map(&sweep.epsilons, exec, |&eps| {
        solve(&sweep.template.with_epsilon(eps))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let samples = sweep
        .epsilons
        .iter()
        .zip(&runs)
        .map(|(&epsilon, run)| LifespanSample {
            epsilon,
            event: run.event,
        })
        .collect();
    Ok(PdeSweepOutcome {
        estimate: assess(samples, predicted, sweep.tail_tolerance)?,
        runs,
    })
}

/// Relative residual treated as exact: the centred damping makes the discrete
/// V-identity hold to rounding, where refinement cannot halve anything.
pub const ROUNDOFF_FLOOR: f64 = 1e-11;

/// Two-resolution study at `h` and `h/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementStudy {
    pub h: f64,
    pub coarse: IdentityAudit,
    pub fine: IdentityAudit,
    /// `fine / coarse` maximal residuals of each identity on the common window.
    pub ratio_u: f64,
    pub ratio_v: f64,
    pub blowup_coarse: Option<f64>,
    pub blowup_fine: Option<f64>,
    /// `|T_fine - T_coarse| / T_fine`.
    pub time_agreement: Option<f64>,
}

impl RefinementStudy {
    /// Each identity improves by at least half, or sits at roundoff on both grids.
    pub fn halves(&self) -> bool {
        let ok = |ratio: f64, c: f64, f: f64| ratio <= 0.5 || c.max(f) <= ROUNDOFF_FLOOR;
        ok(
            self.ratio_u,
            self.coarse.max_residual_u,
            self.fine.max_residual_u,
        ) && ok(
            self.ratio_v,
            self.coarse.max_residual_v,
            self.fine.max_residual_v,
        )
    }
}

pub fn refinement_study(config: &ModelConfig, exec: Execution) -> Result<RefinementStudy> {
    config.validate()?;
    let h = config.resolved_grid().h;
    let configs = [config.with_spacing(h), config.with_spacing(h / 2.0)];
    let runs = exec::map(&configs, exec, solve)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let t_end = runs[0].series.window_end().min(runs[1].series.window_end());
    let coarse = identity_audit_until(&runs[0].series, &configs[0], t_end)?;
    let fine = identity_audit_until(&runs[1].series, &configs[1], t_end)?;
    let ratio = |f: f64, c: f64| if c == 0.0 { 0.0 } else { f / c };
    let (tc, tf) = (runs[0].event.map(|e| e.time), runs[1].event.map(|e| e.time));
    Ok(RefinementStudy {
        h,
        ratio_u: ratio(fine.max_residual_u, coarse.max_residual_u),
        ratio_v: ratio(fine.max_residual_v, coarse.max_residual_v),
        coarse,
        fine,
        blowup_coarse: tc,
        blowup_fine: tf,
        time_agreement: tc.zip(tf).map(|(c, f)| (f - c).abs() / f),
    })
}
