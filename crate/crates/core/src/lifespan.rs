//! Blow-up events, log-log lifespan fits and the one-sided consistency verdict
//! shared by the ODI and PDE sweeps.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default allowance for the smallest-ε sample to exceed the envelope fitted
/// on the remaining samples.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    F,
    G,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trigger {
    Threshold,
    StepCollapse,
    Overflow,
}

impl Trigger {
    pub fn as_str(self) -> &'static str {
        match self {
            Trigger::Threshold => "threshold",
            Trigger::StepCollapse => "step-collapse",
            Trigger::Overflow => "overflow",
        }
    }
}

/// Numerical proxy for finite-time blow-up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupEvent {
    pub time: f64,
    pub component: Component,
    pub trigger: Trigger,
    pub threshold_used: f64,
}

/// One run of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifespanSample {
    pub epsilon: f64,
    pub event: Option<BlowupEvent>,
}

impl LifespanSample {
    pub fn time(&self) -> Option<f64> {
        self.event.map(|e| e.time)
    }
}

/// Least-squares fit `ln T = intercept + slope ln ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_power_law(epsilons: &[f64], times: &[f64]) -> Result<PowerFit> {
    if epsilons.len() != times.len() || epsilons.len() < 2 {
        return Err(Error::invalid("power-law fit needs >= 2 paired samples"));
    }
    if epsilons
        .iter()
        .chain(times)
        .any(|v| !(v.is_finite() && *v > 0.0))
    {
        return Err(Error::invalid(
            "power-law fit needs positive finite samples",
        ));
    }
    let xs: Vec<f64> = epsilons.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid(
            "power-law fit needs at least two distinct epsilons",
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok(PowerFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    /// A single `C` with `T(ε) ≤ C ε^{predicted}` fits every sample within tolerance.
    pub consistent: bool,
    pub all_blew_up: bool,
    /// `T` nonincreasing in `ε`.
    pub monotone: bool,
    /// `ratio(ε_min) / max_{others} ratio - 1` with `ratio = T ε^{-predicted}`.
    pub tail_excess: f64,
    pub tail_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifespanEstimate {
    /// Samples in increasing ε.
    pub samples: Vec<LifespanSample>,
    pub fit: Option<PowerFit>,
    /// Predicted ε-exponent `-1/Γ` (or `-1/θ`).
    pub predicted_exponent: f64,
    /// `C = max_i T_i ε_i^{-predicted}` over the blown-up samples.
    pub constant: Option<f64>,
    /// Decades spanned by the ε values.
    pub span_decades: f64,
    /// Some run did not blow up.
    pub partial: bool,
    pub verdict: Verdict,
}

impl LifespanEstimate {
    /// Sweep CSV with header `epsilon,T,trigger`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,T,trigger\n");
        for s in &self.samples {
            match s.event {
                Some(e) => {
                    let _ = writeln!(out, "{},{},{}", s.epsilon, e.time, e.trigger.as_str());
                }
                None => {
                    let _ = writeln!(out, "{},,none", s.epsilon);
                }
            }
        }
        out
    }
}

/// At least four distinct positive ε values.
pub(crate) fn check_epsilons(epsilons: &[f64]) -> Result<()> {
    if epsilons.len() < 4 {
        return Err(Error::invalid(format!(
            "a sweep needs >= 4 epsilons, got {}",
            epsilons.len()
        )));
    }
    if epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::invalid("sweep epsilons must be positive and finite"));
    }
    let mut sorted = epsilons.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("sweep epsilons must be distinct"));
    }
    Ok(())
}

/// Sort samples by ε, fit, and judge against the predicted exponent.
pub fn assess(
    mut samples: Vec<LifespanSample>,
    predicted_exponent: f64,
    tail_tolerance: f64,
) -> Result<LifespanEstimate> {
    if samples.is_empty() {
        return Err(Error::invalid("lifespan assessment needs samples"));
    }
    if !(predicted_exponent.is_finite() && predicted_exponent < 0.0) {
        return Err(Error::invalid(format!(
            "predicted exponent must be negative, got {predicted_exponent}"
        )));
    }
    samples.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
    let done: Vec<(f64, f64)> = samples
        .iter()
        .filter_map(|s| s.time().map(|t| (s.epsilon, t)))
        .collect();
    let all_blew_up = done.len() == samples.len();
    let eps_min = samples[0].epsilon;
    let eps_max = samples[samples.len() - 1].epsilon;
    let span_decades = (eps_max / eps_min).log10();
    let fit = if done.len() >= 2 {
        let (e, t): (Vec<f64>, Vec<f64>) = done.iter().copied().unzip();
        fit_power_law(&e, &t).ok()
    } else {
        None
    };
    // increasing ε, so times must be nonincreasing
    let monotone = done.windows(2).all(|w| w[1].1 <= w[0].1);
    let ratios: Vec<f64> = done
        .iter()
        .map(|&(e, t)| t * e.powf(-predicted_exponent))
        .collect();
    let constant = ratios.iter().copied().reduce(f64::max);
    let tail_excess = match ratios.split_first() {
        Some((first, rest)) if !rest.is_empty() => {
            first / rest.iter().copied().fold(f64::MIN, f64::max) - 1.0
        }
        _ => 0.0,
    };
    let consistent = all_blew_up && monotone && tail_excess <= tail_tolerance;
    Ok(LifespanEstimate {
        samples,
        fit,
        predicted_exponent,
        constant,
        span_decades,
        partial: !all_blew_up,
        verdict: Verdict {
            consistent,
            all_blew_up,
            monotone,
            tail_excess,
            tail_tolerance,
        },
    })
}
