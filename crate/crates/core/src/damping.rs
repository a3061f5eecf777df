//! Damping coefficients `b(t)` of the second equation and the multiplier
//! `m(t) = exp(-∫_t^∞ b)` used for summable profiles.

use serde::{Deserialize, Serialize};

use crate::curves::DampingKind;
use crate::error::{Error, Result};

/// Summable nonnegative damping profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScatteringProfile {
    /// `b(t) = c (1+t)^{-β}`, `β > 1`.
    PolyDecay { c: f64, beta: f64 },
    /// `b(t) = c e^{-t}`.
    ExpDecay { c: f64 },
    /// Linear interpolation of `(times, values)` with `times[0] = 0`.
    ///
    /// Past the last sample the profile continues as `b_N e^{-κ(t - t_N)}`
    /// with `κ = b_N / tail`, so the declared `tail = ∫_{t_N}^∞ b` is exact.
    /// A zero last value requires a zero tail.
    Tabulated {
        times: Vec<f64>,
        values: Vec<f64>,
        tail: f64,
    },
}

/// The damping term `b(t) G'` of the second equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DampingSpec {
    /// `b(t) = μ/(1+t)`.
    ScaleInvariant {
        mu: f64,
    },
    Scattering {
        profile: ScatteringProfile,
    },
}

impl DampingSpec {
    pub fn scale_invariant(mu: f64) -> Result<Self> {
        let d = DampingSpec::ScaleInvariant { mu };
        d.validate()?;
        Ok(d)
    }

    pub fn poly_decay(c: f64, beta: f64) -> Result<Self> {
        let d = DampingSpec::Scattering {
            profile: ScatteringProfile::PolyDecay { c, beta },
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DampingSpec::ScaleInvariant { mu } => {
                if !(mu.is_finite() && *mu >= 0.0) {
                    return Err(Error::invalid(format!(
                        "mu must be finite and >= 0, got {mu}"
                    )));
                }
            }
            DampingSpec::Scattering { profile } => profile.validate()?,
        }
        Ok(())
    }

    pub fn kind(&self) -> DampingKind {
        match self {
            DampingSpec::ScaleInvariant { .. } => DampingKind::ScaleInvariant,
            DampingSpec::Scattering { .. } => DampingKind::Scattering,
        }
    }

    /// The `μ` entering the curve `Γ(n,p,q,μ)`: zero for summable profiles.
    pub fn curve_mu(&self) -> f64 {
        match self {
            DampingSpec::ScaleInvariant { mu } => *mu,
            DampingSpec::Scattering { .. } => 0.0,
        }
    }

    pub fn b(&self, t: f64) -> f64 {
        match self {
            DampingSpec::ScaleInvariant { mu } => mu / (1.0 + t),
            DampingSpec::Scattering { profile } => profile.b(t),
        }
    }
}

impl ScatteringProfile {
    pub fn validate(&self) -> Result<()> {
        match self {
            ScatteringProfile::PolyDecay { c, beta } => {
                if !(c.is_finite() && *c > 0.0) {
                    return Err(Error::invalid(format!("poly_decay needs c > 0, got {c}")));
                }
                if !(beta.is_finite() && *beta > 1.0) {
                    return Err(Error::invalid(format!(
                        "poly_decay needs beta > 1 for summability, got {beta}"
                    )));
                }
            }
            ScatteringProfile::ExpDecay { c } => {
                if !(c.is_finite() && *c > 0.0) {
                    return Err(Error::invalid(format!("exp_decay needs c > 0, got {c}")));
                }
            }
            ScatteringProfile::Tabulated {
                times,
                values,
                tail,
            } => {
                if times.len() < 2 || times.len() != values.len() {
                    return Err(Error::invalid(
                        "tabulated damping needs >= 2 samples with matching lengths",
                    ));
                }
                if times[0] != 0.0 {
                    return Err(Error::invalid("tabulated damping must start at t = 0"));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite())
                {
                    return Err(Error::invalid(
                        "tabulated times must be finite and strictly increasing",
                    ));
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::invalid(
                        "tabulated damping values must be finite and >= 0",
                    ));
                }
                if !(tail.is_finite() && *tail >= 0.0) {
                    return Err(Error::invalid(format!(
                        "declared tail integral must be finite and >= 0, got {tail}"
                    )));
                }
                let last = *values.last().expect("nonempty");
                if (last == 0.0) != (*tail == 0.0) {
                    return Err(Error::invalid(
                        "declared tail must be zero exactly when the last sample is zero",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn b(&self, t: f64) -> f64 {
        match self {
            ScatteringProfile::PolyDecay { c, beta } => c * (1.0 + t).powf(-beta),
            ScatteringProfile::ExpDecay { c } => c * (-t).exp(),
            ScatteringProfile::Tabulated {
                times,
                values,
                tail,
            } => {
                let n = times.len();
                let (t_last, b_last) = (times[n - 1], values[n - 1]);
                if t >= t_last {
                    if b_last == 0.0 {
                        return 0.0;
                    }
                    return b_last * (-(b_last / tail) * (t - t_last)).exp();
                }
                let k = times.partition_point(|&s| s <= t).saturating_sub(1);
                let w = (t - times[k]) / (times[k + 1] - times[k]);
                values[k] + w * (values[k + 1] - values[k])
            }
        }
    }

    /// `∫_t^∞ b(s) ds`.
    pub fn tail(&self, t: f64) -> f64 {
        match self {
            ScatteringProfile::PolyDecay { c, beta } => {
                c * (1.0 + t).powf(1.0 - beta) / (beta - 1.0)
            }
            ScatteringProfile::ExpDecay { c } => c * (-t).exp(),
            ScatteringProfile::Tabulated {
                times,
                values,
                tail,
            } => {
                let n = times.len();
                let (t_last, b_last) = (times[n - 1], values[n - 1]);
                if t >= t_last {
                    if b_last == 0.0 {
                        return 0.0;
                    }
                    return tail * (-(b_last / tail) * (t - t_last)).exp();
                }
                let k = times.partition_point(|&s| s <= t).saturating_sub(1);
                // exact integral of the linear pieces from t to t_last
                let mut acc = 0.5 * (self.b(t) + values[k + 1]) * (times[k + 1] - t);
                for i in k + 1..n - 1 {
                    acc += 0.5 * (values[i] + values[i + 1]) * (times[i + 1] - times[i]);
                }
                acc + tail
            }
        }
    }

    pub fn l1_norm(&self) -> f64 {
        self.tail(0.0)
    }
}

/// `m(t) = exp(-∫_t^∞ b(s) ds)` for summable damping.
pub fn m_multiplier(damping: &DampingSpec, t: f64) -> Result<f64> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::invalid(format!("m(t) needs t >= 0, got {t}")));
    }
    match damping {
        DampingSpec::ScaleInvariant { .. } => Err(Error::invalid(
            "m(t) is undefined for scale-invariant damping (mu/(1+t) is not summable)",
        )),
        DampingSpec::Scattering { profile } => {
            profile.validate()?;
            Ok((-profile.tail(t)).exp())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_decay_m_at_zero() {
        let d = DampingSpec::poly_decay(1.0, 2.0).unwrap();
        assert!((m_multiplier(&d, 0.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert!((m_multiplier(&d, 1e12).unwrap() - 1.0).abs() < 1e-11);
    }

    #[test]
    fn m_derivative_identity() {
        let profiles = [
            DampingSpec::poly_decay(1.0, 2.0).unwrap(),
            DampingSpec::Scattering {
                profile: ScatteringProfile::ExpDecay { c: 0.7 },
            },
            DampingSpec::Scattering {
                profile: ScatteringProfile::Tabulated {
                    times: vec![0.0, 1.0, 3.0],
                    values: vec![1.0, 0.5, 0.25],
                    tail: 0.5,
                },
            },
        ];
        let h = 1e-6;
        for d in &profiles {
            for t in [0.3, 1.7, 2.2, 5.0] {
                let fd =
                    (m_multiplier(d, t + h).unwrap() - m_multiplier(d, t - h).unwrap()) / (2.0 * h);
                let exact = d.b(t) * m_multiplier(d, t).unwrap();
                assert!(
                    (fd / exact - 1.0).abs() < 1e-6,
                    "{d:?} at {t}: {fd} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn tabulated_tail_matches_declaration() {
        let p = ScatteringProfile::Tabulated {
            times: vec![0.0, 2.0],
            values: vec![1.0, 1.0],
            tail: 4.0,
        };
        assert!((p.l1_norm() - 6.0).abs() < 1e-15);
        assert!((p.tail(2.0) - 4.0).abs() < 1e-15);
        assert!((p.b(2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_profiles() {
        assert!(DampingSpec::poly_decay(1.0, 1.0).is_err());
        assert!(DampingSpec::poly_decay(0.0, 2.0).is_err());
        assert!(DampingSpec::scale_invariant(-1.0).is_err());
        let bad_tail = ScatteringProfile::Tabulated {
            times: vec![0.0, 1.0],
            values: vec![1.0, 1.0],
            tail: 0.0,
        };
        assert!(bad_tail.validate().is_err());
        let unsorted = ScatteringProfile::Tabulated {
            times: vec![0.0, 1.0, 0.5],
            values: vec![1.0; 3],
            tail: 1.0,
        };
        assert!(unsorted.validate().is_err());
        assert!(m_multiplier(&DampingSpec::ScaleInvariant { mu: 1.0 }, 0.0).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let d = DampingSpec::poly_decay(1.0, 2.0).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(
            s,
            r#"{"kind":"scattering","profile":{"type":"poly_decay","c":1.0,"beta":2.0}}"#
        );
        assert_eq!(serde_json::from_str::<DampingSpec>(&s).unwrap(), d);
    }
}
