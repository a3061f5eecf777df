use serde::{Deserialize, Serialize};

use super::{integrate_system_with, IntegratorOptions, OdiConfig, DEFAULT_THRESHOLD};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::iteration::{theta, Part};
use crate::lifespan::{
    assess, check_epsilons, LifespanEstimate, LifespanSample, DEFAULT_TAIL_TOLERANCE,
};

/// How the template's initial values scale with ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum AmplitudeRule {
    /// All four initial values multiplied by ε.
    Uniform,
    /// `(F0, F0')` multiplied by `ε^f`, `(G0, G0')` by `ε^g`.
    Powers { f: f64, g: f64 },
}

impl AmplitudeRule {
    pub fn apply(&self, template: &OdiConfig, eps: f64) -> OdiConfig {
        let (sf, sg) = match *self {
            AmplitudeRule::Uniform => (eps, eps),
            AmplitudeRule::Powers { f, g } => (eps.powf(f), eps.powf(g)),
        };
        OdiConfig {
            f0: template.f0 * sf,
            f0p: template.f0p * sf,
            g0: template.g0 * sg,
            g0p: template.g0p * sg,
            ..template.clone()
        }
    }
}

/// The lower bound that feeds the comparison argument: `F ≥ A t^a` (part 1)
/// or `G ≥ Ã t^α` (part 2), with `A ∝ ε^{amplitude_power}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    pub part: Part,
    pub growth: f64,
    pub amplitude_power: f64,
}

impl Seed {
    /// `F ≥ F(0)`: part 1, `a = 0`, `A ∝ ε`.
    pub fn constant_f() -> Self {
        Seed {
            part: Part::One,
            growth: 0.0,
            amplitude_power: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdiSweep {
    pub template: OdiConfig,
    pub epsilons: Vec<f64>,
    pub rule: AmplitudeRule,
    pub seed: Seed,
    pub t_max: f64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_tail")]
    pub tail_tolerance: f64,
    #[serde(default)]
    pub options: Option<IntegratorOptions>,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

fn default_tail() -> f64 {
    DEFAULT_TAIL_TOLERANCE
}

impl OdiSweep {
    /// The demo system (all data 0.1) scaled uniformly by ε ∈ {0.4, 0.2, 0.1, 0.05}.
    pub fn demo() -> Self {
        OdiSweep {
            template: OdiConfig::demo(),
            epsilons: vec![0.4, 0.2, 0.1, 0.05],
            rule: AmplitudeRule::Uniform,
            seed: Seed::constant_f(),
            t_max: 500.0,
            threshold: DEFAULT_THRESHOLD,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
            options: None,
        }
    }

    /// `-amplitude_power/θ` with `θ` from the comparison argument.
    pub fn predicted_exponent(&self) -> Result<f64> {
        let e = self.template.exponents;
        let th = theta(
            self.seed.part,
            e.p(),
            e.q(),
            self.template.r,
            self.template.rho,
            self.seed.growth,
        );
        if !(th > 0.0) {
            return Err(Error::HypothesisViolation(format!(
                "iteration exponent theta = {th} is not positive"
            )));
        }
        Ok(-self.seed.amplitude_power / th)
    }
}

pub fn lifespan_sweep(sweep: &OdiSweep, exec: Execution) -> Result<LifespanEstimate> {
    check_epsilons(&sweep.epsilons)?;
    sweep.template.validate()?;
    let predicted = sweep.predicted_exponent()?;
    let options = sweep.options.unwrap_or_default();
    let runs = exec::map(&sweep.epsilons, exec, |&eps| {
        let cfg = sweep.rule.apply(&sweep.template, eps);
        integrate_system_with(&cfg, sweep.t_max, sweep.threshold, &options).map(|run| {
            LifespanSample {
                epsilon: eps,
                event: run.event,
            }
        })
    });
    let samples = runs.into_iter().collect::<Result<Vec<_>>>()?;
    assess(samples, predicted, sweep.tail_tolerance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_sweep_is_monotone() {
        let est = lifespan_sweep(&OdiSweep::demo(), Execution::Sequential).unwrap();
        assert!(est.verdict.all_blew_up && est.verdict.monotone);
        assert!(est.fit.unwrap().slope < 0.0);
        assert!((est.predicted_exponent + 0.6).abs() < 1e-12);
    }

    #[test]
    fn doubling_data_never_delays_blowup() {
        let base = lifespan_sweep(&OdiSweep::demo(), Execution::Sequential).unwrap();
        let mut doubled = OdiSweep::demo();
        doubled.epsilons.iter_mut().for_each(|e| *e *= 2.0);
        let dbl = lifespan_sweep(&doubled, Execution::Sequential).unwrap();
        for (a, b) in base.samples.iter().zip(&dbl.samples) {
            assert!(b.time().unwrap() <= a.time().unwrap());
        }
    }

    #[test]
    fn rejects_short_sweeps() {
        let mut s = OdiSweep::demo();
        s.epsilons.truncate(3);
        assert!(lifespan_sweep(&s, Execution::Sequential).is_err());
        s.epsilons = vec![0.1, 0.1, 0.2, 0.3];
        assert!(lifespan_sweep(&s, Execution::Sequential).is_err());
    }
}
