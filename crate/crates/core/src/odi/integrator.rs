use serde::{Deserialize, Serialize};

use super::{OdiConfig, OdiRun, Trajectory};
use crate::error::{Error, Result};
use crate::lifespan::{BlowupEvent, Component, Trigger};

pub const DEFAULT_THRESHOLD: f64 = 1e8;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const PI_BETA: f64 = 0.04;
const PI_ALPHA: f64 = 0.2 - 0.75 * PI_BETA;

/// Step-size control for the embedded pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub atol: f64,
    pub rtol: f64,
    pub initial_step: f64,
    /// A step below `step_floor · max(1, t)` counts as collapse.
    pub step_floor: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            atol: 1e-8,
            rtol: 1e-8,
            initial_step: 1e-3,
            step_floor: 1e-12,
            max_steps: 5_000_000,
        }
    }
}

impl IntegratorOptions {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("atol", self.atol),
            ("rtol", self.rtol),
            ("initial_step", self.initial_step),
            ("step_floor", self.step_floor),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!(
                    "integrator option {name} must be positive, got {v}"
                )));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("integrator needs max_steps >= 1"));
        }
        Ok(())
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights minus fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

type State = [f64; 4];

fn axpy(y: &State, h: f64, ks: &[State], coef: &[f64]) -> State {
    let mut out = *y;
    for (k, &c) in ks.iter().zip(coef) {
        if c != 0.0 {
            for i in 0..4 {
                out[i] += h * c * k[i];
            }
        }
    }
    out
}

/// Cubic Hermite interpolant on `[t0, t0+h]` at fraction `s`.
pub(crate) fn hermite(y0: &State, f0: &State, y1: &State, f1: &State, h: f64, s: f64) -> State {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
    }
    out
}

fn size(y: &State) -> f64 {
    y[0].abs().max(y[2].abs())
}

fn component_of(y: &State, threshold: f64) -> Component {
    let lim = threshold * (1.0 - 1e-12);
    match (y[0].abs() >= lim, y[2].abs() >= lim) {
        (true, true) => Component::Both,
        (false, true) => Component::G,
        _ => Component::F,
    }
}

pub(super) fn run(
    cfg: &OdiConfig,
    t_max: f64,
    threshold: f64,
    opt: &IntegratorOptions,
) -> Result<OdiRun> {
    let mut traj = Trajectory {
        t: vec![0.0],
        y: vec![cfg.initial_state()],
    };
    let mut t = 0.0;
    let mut y = cfg.initial_state();
    let mut k1 = cfg.rhs(t, &y);
    let mut h = opt.initial_step.min(t_max);
    let mut err_prev: f64 = 1e-4;
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let event = |time: f64, y: &State, trigger| {
        Some(BlowupEvent {
            time,
            component: component_of(y, threshold),
            trigger,
            threshold_used: threshold,
        })
    };

    while t < t_max {
        if accepted + rejected >= opt.max_steps {
            return Err(Error::StepBudget {
                steps: opt.max_steps,
                t,
            });
        }
        if h < opt.step_floor * t.max(1.0) {
            let ev = event(t, &y, Trigger::StepCollapse);
            return Ok(OdiRun {
                trajectory: traj,
                event: ev,
                accepted_steps: accepted,
                rejected_steps: rejected,
            });
        }
        let last = t + h >= t_max;
        let h_try = if last { t_max - t } else { h };
        let mut ks: [State; 7] = [
            k1, [0.0; 4], [0.0; 4], [0.0; 4], [0.0; 4], [0.0; 4], [0.0; 4],
        ];
        for s in 1..7 {
            let ys = axpy(&y, h_try, &ks[..s], &A[s][..s]);
            ks[s] = cfg.rhs(t + C[s] * h_try, &ys);
        }
        let y_new = axpy(&y, h_try, &ks[..6], &A[6][..6]);
        let mut acc = 0.0;
        for i in 0..4 {
            let e: f64 = (0..7).map(|s| E[s] * ks[s][i]).sum::<f64>() * h_try;
            let sc = opt.atol + opt.rtol * y[i].abs().max(y_new[i].abs());
            acc += (e / sc).powi(2);
        }
        let err = (acc / 4.0).sqrt();

        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            rejected += 1;
            h = h_try * FAC_MIN;
            if h < opt.step_floor * t.max(1.0) {
                let ev = event(t, &y, Trigger::Overflow);
                return Ok(OdiRun {
                    trajectory: traj,
                    event: ev,
                    accepted_steps: accepted,
                    rejected_steps: rejected,
                });
            }
            continue;
        }

        if err <= 1.0 {
            accepted += 1;
            let t_new = if last { t_max } else { t + h_try };
            let k_new = ks[6];
            if size(&y_new) > threshold {
                let (tc, yc) = locate_crossing(&y, &k1, &y_new, &k_new, t, h_try, threshold);
                traj.t.push(tc);
                traj.y.push(yc);
                let ev = event(tc, &yc, Trigger::Threshold);
                return Ok(OdiRun {
                    trajectory: traj,
                    event: ev,
                    accepted_steps: accepted,
                    rejected_steps: rejected,
                });
            }
            t = t_new;
            y = y_new;
            k1 = k_new;
            traj.t.push(t);
            traj.y.push(y);
            let fac = if err == 0.0 {
                FAC_MAX
            } else {
                (SAFETY * err.powf(-PI_ALPHA) * err_prev.powf(PI_BETA)).clamp(FAC_MIN, FAC_MAX)
            };
            err_prev = err.max(1e-4);
            h = h_try * fac;
        } else {
            rejected += 1;
            h = h_try * (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0);
        }
    }
    Ok(OdiRun {
        trajectory: traj,
        event: None,
        accepted_steps: accepted,
        rejected_steps: rejected,
    })
}

/// Bisect the Hermite interpolant for the first-found crossing of `threshold`.
fn locate_crossing(
    y0: &State,
    f0: &State,
    y1: &State,
    f1: &State,
    t0: f64,
    h: f64,
    threshold: f64,
) -> (f64, State) {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if size(&hermite(y0, f0, y1, f1, h, mid)) > threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (t0 + hi * h, hermite(y0, f0, y1, f1, h, hi))
}
