//! The weakly coupled ODI system taken with equality,
//!
//! ```text
//! F'' + F'   = B (R+t)^{-r} |G|^p,
//! G'' + b G' = B̃ (R+t)^{-ρ} |F|^q,
//! ```
//!
//! integrated by an embedded Dormand–Prince 5(4) pair with PI step control,
//! plus the integral-frame audit and ε-sweeps.

mod audit;
mod integrator;
mod sweep;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use audit::{frame_audit, frame_constant, FrameAudit};
pub use integrator::{IntegratorOptions, DEFAULT_THRESHOLD};
pub use sweep::{lifespan_sweep, AmplitudeRule, OdiSweep, Seed};

use crate::curves::Exponents;
use crate::damping::DampingSpec;
use crate::error::{Error, Result};
use crate::lifespan::BlowupEvent;

/// One instance of the ODI system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdiConfig {
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "B_tilde")]
    pub b_tilde: f64,
    pub r: f64,
    pub rho: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub damping: DampingSpec,
    #[serde(rename = "F0")]
    pub f0: f64,
    #[serde(rename = "F0p")]
    pub f0p: f64,
    #[serde(rename = "G0")]
    pub g0: f64,
    #[serde(rename = "G0p")]
    pub g0p: f64,
    pub exponents: Exponents,
}

impl OdiConfig {
    /// `B = B̃ = R = 1`, `r = ρ = 0`, `μ = 1`, `p = q = 2`, all initial values 0.1.
    pub fn demo() -> Self {
        OdiConfig {
            b: 1.0,
            b_tilde: 1.0,
            r: 0.0,
            rho: 0.0,
            radius: 1.0,
            damping: DampingSpec::ScaleInvariant { mu: 1.0 },
            f0: 0.1,
            f0p: 0.1,
            g0: 0.1,
            g0p: 0.1,
            exponents: Exponents::new(2.0, 2.0).expect("valid exponents"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("B", self.b), ("B_tilde", self.b_tilde), ("R", self.radius)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!(
                    "ODI parameter {name} must be positive, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("F0", self.f0),
            ("F0p", self.f0p),
            ("G0", self.g0),
            ("G0p", self.g0p),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!(
                    "initial value {name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if !(self.r.is_finite() && self.rho.is_finite()) {
            return Err(Error::invalid("r and rho must be finite"));
        }
        // Exponents are validated at construction; re-check in case of deserialized input.
        Exponents::new(self.exponents.p(), self.exponents.q())?;
        self.damping.validate()
    }

    pub fn initial_state(&self) -> [f64; 4] {
        [self.f0, self.f0p, self.g0, self.g0p]
    }

    /// Right-hand side of the first-order system for `y = (F, F', G, G')`.
    pub fn rhs(&self, t: f64, y: &[f64; 4]) -> [f64; 4] {
        let (p, q) = (self.exponents.p(), self.exponents.q());
        let rt = self.radius + t;
        let f2 = -y[1] + self.b * rt.powf(-self.r) * y[2].abs().powf(p);
        let g2 = -self.damping.b(t) * y[3] + self.b_tilde * rt.powf(-self.rho) * y[0].abs().powf(q);
        [y[1], f2, y[3], g2]
    }
}

/// Accepted steps of an integration, `y = (F, F', G, G')`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub y: Vec<[f64; 4]>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// CSV with header `t,F,Fp,G,Gp`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,F,Fp,G,Gp\n");
        for (t, y) in self.t.iter().zip(&self.y) {
            let _ = writeln!(out, "{t},{},{},{},{}", y[0], y[1], y[2], y[3]);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdiRun {
    pub trajectory: Trajectory,
    pub event: Option<BlowupEvent>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

/// Integrate with the default tolerances `1e-8/1e-8`.
pub fn integrate_system(config: &OdiConfig, t_max: f64, blowup_threshold: f64) -> Result<OdiRun> {
    integrate_system_with(
        config,
        t_max,
        blowup_threshold,
        &IntegratorOptions::default(),
    )
}

pub fn integrate_system_with(
    config: &OdiConfig,
    t_max: f64,
    blowup_threshold: f64,
    options: &IntegratorOptions,
) -> Result<OdiRun> {
    config.validate()?;
    options.validate()?;
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::invalid(format!(
            "t_max must be positive, got {t_max}"
        )));
    }
    let start = config.f0.max(config.g0);
    if !(blowup_threshold.is_finite() && blowup_threshold > start) {
        return Err(Error::invalid(format!(
            "blow-up threshold {blowup_threshold} must exceed the initial values (max {start})"
        )));
    }
    integrator::run(config, t_max, blowup_threshold, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifespan::Trigger;

    #[test]
    fn zero_data_stays_zero() {
        let cfg = OdiConfig {
            f0: 0.0,
            f0p: 0.0,
            g0: 0.0,
            g0p: 0.0,
            ..OdiConfig::demo()
        };
        let run = integrate_system(&cfg, 50.0, DEFAULT_THRESHOLD).unwrap();
        assert!(run.event.is_none());
        assert!(run.trajectory.y.iter().all(|y| y.iter().all(|&v| v == 0.0)));
        assert_eq!(*run.trajectory.t.last().unwrap(), 50.0);
    }

    #[test]
    fn demo_blows_up_and_is_threshold_insensitive() {
        let cfg = OdiConfig::demo();
        let a = integrate_system(&cfg, 200.0, 1e8).unwrap().event.unwrap();
        let b = integrate_system(&cfg, 200.0, 1e4).unwrap().event.unwrap();
        assert_eq!(a.trigger, Trigger::Threshold);
        assert!(
            ((a.time - b.time) / a.time).abs() < 0.02,
            "{} vs {}",
            a.time,
            b.time
        );
        let fine = IntegratorOptions {
            atol: 1e-10,
            rtol: 1e-10,
            ..IntegratorOptions::default()
        };
        let c = integrate_system_with(&cfg, 200.0, 1e8, &fine)
            .unwrap()
            .event
            .unwrap();
        assert!(((a.time - c.time) / c.time).abs() < 0.01);
    }

    #[test]
    fn nonnegative_along_trajectory() {
        let run = integrate_system(&OdiConfig::demo(), 200.0, 1e8).unwrap();
        assert!(run.trajectory.y.iter().all(|y| y[0] >= 0.0 && y[2] >= 0.0));
    }

    #[test]
    fn csv_header() {
        let run = integrate_system(&OdiConfig::demo(), 1.0, 1e8).unwrap();
        assert!(run
            .trajectory
            .to_csv()
            .starts_with("t,F,Fp,G,Gp\n0,0.1,0.1,0.1,0.1\n"));
    }

    #[test]
    fn rejects_bad_input() {
        let cfg = OdiConfig {
            f0: -1.0,
            ..OdiConfig::demo()
        };
        assert!(integrate_system(&cfg, 1.0, 1e8).is_err());
        assert!(integrate_system(&OdiConfig::demo(), 1.0, 0.05).is_err());
        assert!(integrate_system(&OdiConfig::demo(), -1.0, 1e8).is_err());
    }
}
