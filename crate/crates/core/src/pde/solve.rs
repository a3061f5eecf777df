use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::audit::residuals;
use super::grid::RadialGrid;
use super::snapshot::Snapshot;
use super::{InitialProfile, ModelConfig, ResolvedGrid};
use crate::error::{Error, Result};
use crate::lifespan::{BlowupEvent, Component, Trigger};
use crate::quad::Tolerance;
use crate::specialfn::{bessel_k_scaled, Multiplier};

/// One-step growth of the max-norm above which the step counts as collapsed.
const COLLAPSE_GROWTH: f64 = 10.0;

/// Functionals on the output time grid.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FunctionalSeries {
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// `λ(t) ∫ v φ`.
    pub v0: Vec<f64>,
    /// `e^{-t} ∫ v φ`.
    pub v1: Vec<f64>,
    pub res_u: Vec<f64>,
    pub res_v: Vec<f64>,
    /// `max |(u, v)|` on `r > R + t + 2h` relative to the max-norm.
    pub support_margin: Vec<f64>,
    pub max_norm: Vec<f64>,
    /// `∫ |v|^p`.
    pub source_u: Vec<f64>,
    /// `∫ |u|^q`.
    pub source_v: Vec<f64>,
    /// `U'(0) = ε ∫ u1`.
    pub du0: f64,
    /// `V'(0) = ε ∫ v1`.
    pub dv0: f64,
    /// Samples with `max_norm ≤ pre_blowup_level` form the audit window.
    pub pre_blowup_level: f64,
}

impl FunctionalSeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Number of leading samples inside the pre-blow-up window.
    pub fn window_len(&self) -> usize {
        self.max_norm
            .iter()
            .take_while(|&&m| m <= self.pre_blowup_level)
            .count()
    }

    /// Last time inside the pre-blow-up window.
    pub fn window_end(&self) -> f64 {
        match self.window_len() {
            0 => 0.0,
            k => self.t[k - 1],
        }
    }

    /// CSV with header `t,U,V,V0,V1,resU,resV,supp_margin`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,U,V,V0,V1,resU,resV,supp_margin\n");
        for k in 0..self.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                self.t[k],
                self.u[k],
                self.v[k],
                self.v0[k],
                self.v1[k],
                self.res_u[k],
                self.res_v[k],
                self.support_margin[k]
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeRun {
    pub series: FunctionalSeries,
    pub event: Option<BlowupEvent>,
    pub grid: ResolvedGrid,
    pub dt: f64,
    pub steps: usize,
    #[serde(skip)]
    pub snapshots: Vec<Snapshot>,
}

/// `λ(t) e^t = (1+t)^{(μ+1)/2} e^{-1} e^{1+t} K_ℓ(1+t)`.
fn lambda_exp(m: &Multiplier, t: f64) -> Result<f64> {
    let z = 1.0 + t;
    let scaled = bessel_k_scaled(m.order(), z, Tolerance::DEFAULT)?;
    Ok(((m.mu() + 1.0) / 2.0 * z.ln() - 1.0).exp() * scaled)
}

struct Sampler<'a> {
    grid: &'a RadialGrid,
    config: &'a ModelConfig,
    phi_dec: Vec<f64>,
    multiplier: Multiplier,
    tolerance: f64,
}

impl Sampler<'_> {
    fn record(
        &self,
        s: &mut FunctionalSeries,
        t: f64,
        u: &[f64],
        v: &[f64],
        upto: usize,
    ) -> Result<()> {
        let g = self.grid;
        let (p, q) = (self.config.exponents.p(), self.config.exponents.q());
        let (mut iu, mut iv, mut ivphi, mut su, mut sv, mut mx) =
            (0.0, 0.0, 0.0, 0.0, 0.0, 0.0_f64);
        for i in 0..=upto {
            let w = g.volume[i];
            iu += w * u[i];
            iv += w * v[i];
            ivphi += w * v[i] * self.phi_dec[i] * (g.r[i] - t).exp();
            su += w * v[i].abs().powf(p);
            sv += w * u[i].abs().powf(q);
            mx = mx.max(u[i].abs()).max(v[i].abs());
        }
        let area = g.sphere;
        let edge = self.config.radius + t + 2.0 * g.h;
        let first_out = g.r.partition_point(|&r| r <= edge);
        let mut leak = 0.0_f64;
        for i in first_out..=upto {
            leak = leak.max(u[i].abs()).max(v[i].abs());
        }
        let margin = if mx > 0.0 { leak / mx } else { 0.0 };
        if margin > self.tolerance {
            return Err(Error::SupportLeak {
                margin,
                tolerance: self.tolerance,
            });
        }
        s.t.push(t);
        s.u.push(area * iu);
        s.v.push(area * iv);
        s.v0.push(lambda_exp(&self.multiplier, t)? * area * ivphi);
        s.v1.push(area * ivphi);
        s.source_u.push(area * su);
        s.source_v.push(area * sv);
        s.max_norm.push(mx);
        s.support_margin.push(margin);
        Ok(())
    }
}

fn max_abs(a: &[f64], upto: usize) -> f64 {
    a[..=upto].iter().fold(
        0.0_f64,
        |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) },
    )
}

/// Advance both fields from `t = 0` to `t_max` or the first blow-up event.
///
/// Leapfrog in time with the damping term averaged over `t_{k±1}`, so each
/// cell update is explicit. Only cells inside the numerical domain of
/// dependence are updated; the outermost cell is a homogeneous Dirichlet
/// boundary that the solution never reaches.
pub fn solve(config: &ModelConfig) -> Result<PdeRun> {
    config.validate()?;
    let rg = config.resolved_grid();
    let grid = RadialGrid::new(config.n, rg.h, rg.cells);
    let dt = rg.cfl * 2.0 / grid.spectral_bound().sqrt();
    let steps = (config.t_max / dt - 1e-9).ceil() as usize;
    let n_cells = grid.len();
    let last_active = n_cells - 2;
    let i_r = (config.radius / rg.h - 1e-9).ceil() as usize;
    let active = |k: usize| (i_r + k + 2).min(last_active);

    let eps = config.epsilon;
    let prof = config.profile;
    let shape: Vec<f64> = grid
        .r
        .iter()
        .map(|&r| InitialProfile::shape(r, config.radius))
        .collect();
    let scaled = |a: f64| -> Vec<f64> { shape.iter().map(|s| eps * a * s).collect() };
    let (u0, u1, v0, v1) = (
        scaled(prof.u0),
        scaled(prof.u1),
        scaled(prof.v0),
        scaled(prof.v1),
    );

    let sampler = Sampler {
        grid: &grid,
        config,
        phi_dec: grid.scaled_phi()?,
        multiplier: Multiplier::new(config.damping.curve_mu())?,
        tolerance: config.support_tolerance(),
    };
    let mut series = FunctionalSeries {
        du0: grid.integrate(&u1),
        dv0: grid.integrate(&v1),
        ..FunctionalSeries::default()
    };
    let mut snapshots = Vec::new();
    let (p, q) = (config.exponents.p(), config.exponents.q());
    let src = |x: f64, e: f64| if config.sources { x.abs().powf(e) } else { 0.0 };

    sampler.record(&mut series, 0.0, &u0, &v0, active(0) + 1)?;
    series.pre_blowup_level = (10.0 * series.max_norm[0]).max(10.0);
    if config.snapshot_every.is_some() {
        snapshots.push(Snapshot {
            t: 0.0,
            u: u0.clone(),
            v: v0.clone(),
        });
    }

    // Taylor start: w¹ = w⁰ + Δt w₁ + Δt²/2 (Δw⁰ - a w₁ + f).
    let b0 = config.damping.b(0.0);
    let mut u_prev = u0;
    let mut v_prev = v0;
    let mut u_cur = u_prev.clone();
    let mut v_cur = v_prev.clone();
    for i in 0..=active(0) {
        let lu = grid.laplacian(&u_prev, i);
        let lv = grid.laplacian(&v_prev, i);
        u_cur[i] = u_prev[i] + dt * u1[i] + 0.5 * dt * dt * (lu - u1[i] + src(v_prev[i], p));
        v_cur[i] = v_prev[i] + dt * v1[i] + 0.5 * dt * dt * (lv - b0 * v1[i] + src(u_prev[i], q));
    }
    let mut u_next = vec![0.0; n_cells];
    let mut v_next = vec![0.0; n_cells];
    let mut event = None;
    let mut prev_max = series.max_norm[0];
    let mut taken = 0;

    for k in 1..=steps {
        // u_cur, v_cur hold level k
        let t = k as f64 * dt;
        let upto = active(k) + 1;
        let mx = max_abs(&u_cur, upto).max(max_abs(&v_cur, upto));
        if let Some(ev) = detect(config, &u_cur, &v_cur, upto, mx, prev_max, t, dt) {
            event = Some(ev);
            break;
        }
        taken = k;
        if k % config.record_every == 0 {
            sampler.record(&mut series, t, &u_cur, &v_cur, upto)?;
        }
        if let Some(every) = config.snapshot_every {
            if k % every == 0 {
                snapshots.push(Snapshot {
                    t,
                    u: u_cur.clone(),
                    v: v_cur.clone(),
                });
            }
        }
        prev_max = mx;
        if k == steps {
            break;
        }
        let bv = config.damping.b(t);
        let (cu_m, cu_p) = (1.0 - 0.5 * dt, 1.0 + 0.5 * dt);
        let (cv_m, cv_p) = (1.0 - 0.5 * bv * dt, 1.0 + 0.5 * bv * dt);
        let dt2 = dt * dt;
        for i in 0..=active(k) {
            let lu = grid.laplacian(&u_cur, i);
            let lv = grid.laplacian(&v_cur, i);
            u_next[i] = (2.0 * u_cur[i] - cu_m * u_prev[i] + dt2 * (lu + src(v_cur[i], p))) / cu_p;
            v_next[i] = (2.0 * v_cur[i] - cv_m * v_prev[i] + dt2 * (lv + src(u_cur[i], q))) / cv_p;
        }
        std::mem::swap(&mut u_prev, &mut u_cur);
        std::mem::swap(&mut u_cur, &mut u_next);
        std::mem::swap(&mut v_prev, &mut v_cur);
        std::mem::swap(&mut v_cur, &mut v_next);
    }

    let (res_u, res_v) = residuals(&series, &config.damping)?;
    series.res_u = res_u;
    series.res_v = res_v;
    Ok(PdeRun {
        series,
        event,
        grid: rg,
        dt,
        steps: taken,
        snapshots,
    })
}

#[allow(clippy::too_many_arguments)]
fn detect(
    config: &ModelConfig,
    u: &[f64],
    v: &[f64],
    upto: usize,
    mx: f64,
    prev_max: f64,
    t: f64,
    dt: f64,
) -> Option<BlowupEvent> {
    let threshold = config.blowup_threshold;
    let mu = max_abs(u, upto);
    let mv = max_abs(v, upto);
    let component = |lim: f64| match (!(mu <= lim), !(mv <= lim)) {
        (true, true) => Component::Both,
        (false, true) => Component::G,
        _ => Component::F,
    };
    if !mx.is_finite() {
        return Some(BlowupEvent {
            time: t,
            component: component(f64::MAX),
            trigger: Trigger::Overflow,
            threshold_used: threshold,
        });
    }
    if mx > threshold {
        // log-linear interpolation of the max-norm across the last step
        let time = if prev_max > 0.0 && prev_max < threshold {
            let s = (threshold.ln() - prev_max.ln()) / (mx.ln() - prev_max.ln());
            t - dt + s * dt
        } else {
            t
        };
        return Some(BlowupEvent {
            time,
            component: component(threshold),
            trigger: Trigger::Threshold,
            threshold_used: threshold,
        });
    }
    if mx > 1.0 && mx > COLLAPSE_GROWTH * prev_max {
        return Some(BlowupEvent {
            time: t,
            component: component(COLLAPSE_GROWTH * prev_max),
            trigger: Trigger::StepCollapse,
            threshold_used: threshold,
        });
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::damping::DampingSpec;
    use crate::pde::InitialProfile;

    #[test]
    fn zero_data_stays_zero() {
        let cfg = ModelConfig {
            profile: InitialProfile {
                u0: 0.0,
                u1: 0.0,
                v0: 0.0,
                v1: 0.0,
            },
            t_max: 5.0,
            ..ModelConfig::demo()
        };
        let run = solve(&cfg).unwrap();
        assert!(run.event.is_none());
        let s = &run.series;
        for col in [
            &s.u,
            &s.v,
            &s.v0,
            &s.v1,
            &s.res_u,
            &s.res_v,
            &s.support_margin,
        ] {
            assert!(col.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn demo_blows_up_before_forty() {
        let run = solve(&ModelConfig::demo()).unwrap();
        let ev = run.event.expect("blow-up");
        assert!(ev.time > 5.0 && ev.time < 40.0, "{ev:?}");
        assert_ne!(ev.trigger, Trigger::Overflow);
        assert_eq!(run.dt, 1.0 / 32.0);
        assert!(run.series.support_margin.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn mu_zero_matches_vanishing_scattering_profile() {
        let base = ModelConfig {
            damping: DampingSpec::ScaleInvariant { mu: 0.0 },
            t_max: 6.0,
            ..ModelConfig::demo()
        };
        let zero = DampingSpec::Scattering {
            profile: crate::damping::ScatteringProfile::Tabulated {
                times: vec![0.0, 1.0],
                values: vec![0.0, 0.0],
                tail: 0.0,
            },
        };
        let a = solve(&base).unwrap();
        let b = solve(&ModelConfig {
            damping: zero,
            ..base.clone()
        })
        .unwrap();
        assert_eq!(a.series.u, b.series.u);
        assert_eq!(a.series.v, b.series.v);
        assert_eq!(a.series.v0, b.series.v0);
        assert_eq!(a.series.max_norm, b.series.max_norm);
    }

    #[test]
    fn csv_header() {
        let run = solve(&ModelConfig {
            t_max: 0.1,
            ..ModelConfig::demo()
        })
        .unwrap();
        assert!(run
            .series
            .to_csv()
            .starts_with("t,U,V,V0,V1,resU,resV,supp_margin\n0,"));
    }
}
