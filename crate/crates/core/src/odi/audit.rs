use serde::{Deserialize, Serialize};

use super::integrator::hermite;
use super::{OdiConfig, Trajectory};
use crate::damping::{m_multiplier, DampingSpec};
use crate::error::{Error, Result};

/// Relative slack allowed for quadrature error in the frame audit.
pub const FRAME_TOLERANCE: f64 = 1e-6;

/// Worst relative margins `(lhs - rhs)/max(|lhs|, |rhs|)` of the integral frame
/// `F ≥ B e^{-t}∫₀^t e^τ∫₀^τ (R+s)^{-r}|G|^p` and its G-counterpart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameAudit {
    pub f_worst_margin: f64,
    pub g_worst_margin: f64,
    pub f_worst_time: f64,
    pub g_worst_time: f64,
    /// The G-frame constant `K`.
    pub k_constant: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub passed: bool,
}

impl FrameAudit {
    pub fn worst_margin(&self) -> f64 {
        self.f_worst_margin.min(self.g_worst_margin)
    }
}

/// `K = B̃ min(1, R)^μ` for scale-invariant damping (from `(1+τ)^{-μ} ≥ min(1,R)^μ (R+τ)^{-μ}`
/// and `(1+s)^μ ≥ s^μ`), `K = B̃ m(0)` for summable damping.
pub fn frame_constant(config: &OdiConfig) -> Result<f64> {
    Ok(match &config.damping {
        DampingSpec::ScaleInvariant { mu } => config.b_tilde * config.radius.min(1.0).powf(*mu),
        d @ DampingSpec::Scattering { .. } => config.b_tilde * m_multiplier(d, 0.0)?,
    })
}

fn margin(lhs: f64, rhs: f64) -> f64 {
    let scale = lhs.abs().max(rhs.abs());
    if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs) / scale
    }
}

/// Evaluate both frames along the trajectory with nested composite Simpson
/// quadrature; values inside each step come from the cubic Hermite interpolant.
pub fn frame_audit(traj: &Trajectory, config: &OdiConfig) -> Result<FrameAudit> {
    config.validate()?;
    if traj.is_empty() || traj.t[0] != 0.0 {
        return Err(Error::invalid(
            "frame audit needs a trajectory starting at t = 0",
        ));
    }
    let k = frame_constant(config)?;
    let (p, q) = (config.exponents.p(), config.exponents.q());
    let (b, r, rho, rad) = (config.b, config.r, config.rho, config.radius);
    let scale_mu = match config.damping {
        DampingSpec::ScaleInvariant { mu } => Some(mu),
        DampingSpec::Scattering { .. } => None,
    };
    let w = |s: f64, y: &[f64; 4]| (rad + s).powf(-r) * y[2].abs().powf(p);
    let v = |s: f64, y: &[f64; 4]| {
        let base = (rad + s).powf(-rho) * y[0].abs().powf(q);
        match scale_mu {
            Some(mu) if mu != 0.0 => s.powf(mu) * base,
            _ => base,
        }
    };
    let outer_g = |tau: f64| match scale_mu {
        Some(mu) => (rad + tau).powf(-mu),
        None => 1.0,
    };

    // W = ∫w, X = e^{-t}∫e^τ W, Y = ∫v, Z = ∫ outer_g · Y
    let (mut wi, mut x, mut yi, mut z) = (0.0, 0.0, 0.0, 0.0);
    let mut report = FrameAudit {
        f_worst_margin: 0.0,
        g_worst_margin: 0.0,
        f_worst_time: 0.0,
        g_worst_time: 0.0,
        k_constant: k,
        tolerance: FRAME_TOLERANCE,
        samples: traj.len(),
        passed: true,
    };
    for idx in 0..traj.len() - 1 {
        let (t0, t1) = (traj.t[idx], traj.t[idx + 1]);
        let h = t1 - t0;
        if !(h > 0.0) {
            continue;
        }
        let (y0, y1) = (&traj.y[idx], &traj.y[idx + 1]);
        let (f0, f1) = (config.rhs(t0, y0), config.rhs(t1, y1));
        let nodes: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
        let ys: Vec<[f64; 4]> = nodes
            .iter()
            .map(|&s| {
                if s == 0.0 {
                    *y0
                } else if s == 1.0 {
                    *y1
                } else {
                    hermite(y0, &f0, y1, &f1, h, s)
                }
            })
            .collect();
        let ts: Vec<f64> = nodes.iter().map(|&s| t0 + s * h).collect();
        let wv: Vec<f64> = (0..5).map(|i| w(ts[i], &ys[i])).collect();
        let vv: Vec<f64> = (0..5).map(|i| v(ts[i], &ys[i])).collect();
        let half = |f: &[f64]| h / 12.0 * (f[0] + 4.0 * f[1] + f[2]);
        let whole = |f: &[f64]| h / 12.0 * (f[0] + 4.0 * f[1] + 2.0 * f[2] + 4.0 * f[3] + f[4]);
        let (w_mid, w_end) = (wi + half(&wv), wi + whole(&wv));
        let (y_mid, y_end) = (yi + half(&vv), yi + whole(&vv));
        x = (-h).exp() * x + h / 6.0 * ((-h).exp() * wi + 4.0 * (-0.5 * h).exp() * w_mid + w_end);
        z += h / 6.0 * (outer_g(t0) * yi + 4.0 * outer_g(ts[2]) * y_mid + outer_g(t1) * y_end);
        wi = w_end;
        yi = y_end;

        let mf = margin(y1[0], b * x);
        let mg = margin(y1[2], k * z);
        if mf < report.f_worst_margin {
            report.f_worst_margin = mf;
            report.f_worst_time = t1;
        }
        if mg < report.g_worst_margin {
            report.g_worst_margin = mg;
            report.g_worst_time = t1;
        }
    }
    report.passed = report.worst_margin() >= -FRAME_TOLERANCE;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::odi::{integrate_system, DEFAULT_THRESHOLD};

    #[test]
    fn zero_data_has_zero_margins() {
        let cfg = OdiConfig {
            f0: 0.0,
            f0p: 0.0,
            g0: 0.0,
            g0p: 0.0,
            ..OdiConfig::demo()
        };
        let run = integrate_system(&cfg, 10.0, DEFAULT_THRESHOLD).unwrap();
        let a = frame_audit(&run.trajectory, &cfg).unwrap();
        assert_eq!(a.worst_margin(), 0.0);
        assert!(a.passed);
    }

    #[test]
    fn demo_frames_hold() {
        let cfg = OdiConfig::demo();
        let run = integrate_system(&cfg, 200.0, DEFAULT_THRESHOLD).unwrap();
        let a = frame_audit(&run.trajectory, &cfg).unwrap();
        assert!(a.passed, "{a:?}");
        assert_eq!(a.k_constant, 1.0);
    }

    #[test]
    fn scattering_frame_uses_m0() {
        let cfg = OdiConfig {
            damping: DampingSpec::poly_decay(1.0, 2.0).unwrap(),
            ..OdiConfig::demo()
        };
        let run = integrate_system(&cfg, 200.0, DEFAULT_THRESHOLD).unwrap();
        let a = frame_audit(&run.trajectory, &cfg).unwrap();
        assert!((a.k_constant - (-1.0f64).exp()).abs() < 1e-15);
        assert!(a.passed, "{a:?}");
    }
}
