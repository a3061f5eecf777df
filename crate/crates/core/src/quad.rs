//! Quadrature rules shared by the special functions, the ODI frame audit and
//! the PDE functionals.

use crate::error::{Error, Result};

/// Absolute/relative tolerance pair for adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const DEFAULT: Tolerance = Tolerance {
        abs: 1e-10,
        rel: 1e-10,
    };

    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance { abs, rel }
    }

    /// Same tolerance tightened by `factor` (> 1 means finer).
    pub fn refined(self, factor: f64) -> Self {
        Tolerance {
            abs: self.abs / factor,
            rel: self.rel / factor,
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::DEFAULT
    }
}

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson quadrature with Richardson correction.
///
/// Each leaf must satisfy `|S2 - S1| <= 15 eps` with `eps` halved per level;
/// the top-level budget is `max(tol.abs, tol.rel * |I|)` where `|I|` comes
/// from a 16-panel composite Simpson pilot. A leaf that reaches the depth
/// limit without meeting its budget makes the whole call fail.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid(format!(
            "non-finite quadrature bounds [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    let pilot = composite_simpson(&f, a, b, 16);
    if !pilot.is_finite() {
        return Err(Error::Quadrature {
            a,
            b,
            estimate: f64::INFINITY,
        });
    }
    let budget = (tol.rel * pilot.abs()).max(tol.abs).max(f64::MIN_POSITIVE);

    // Seed with 16 panels so narrow peaks are never skipped by the first test.
    let panels = 16;
    let width = (b - a) / panels as f64;
    let mut leaf = Leaf {
        total: 0.0,
        err: 0.0,
        failed: false,
    };
    for k in 0..panels {
        let lo = a + width * k as f64;
        let hi = if k + 1 == panels { b } else { lo + width };
        let (flo, fmid, fhi) = (f(lo), f(0.5 * (lo + hi)), f(hi));
        let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
        simpson_step(
            &f,
            lo,
            hi,
            [flo, fmid, fhi],
            whole,
            budget / panels as f64,
            MAX_DEPTH,
            &mut leaf,
        );
    }
    if leaf.failed || !leaf.total.is_finite() {
        return Err(Error::Quadrature {
            a,
            b,
            estimate: leaf.err,
        });
    }
    Ok(leaf.total)
}

struct Leaf {
    total: f64,
    err: f64,
    failed: bool,
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(
    f: &F,
    a: f64,
    b: f64,
    fv: [f64; 3],
    whole: f64,
    eps: f64,
    depth: u32,
    leaf: &mut Leaf,
) where
    F: Fn(f64) -> f64,
{
    let [fa, fm, fb] = fv;
    let m = 0.5 * (a + b);
    let flm = f(0.5 * (a + m));
    let frm = f(0.5 * (m + b));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    let converged = delta.abs() <= 15.0 * eps;
    if converged || depth == 0 || (b - a).abs() <= 4.0 * f64::EPSILON * a.abs().max(b.abs()) {
        leaf.total += left + right + delta / 15.0;
        leaf.err += delta.abs() / 15.0;
        leaf.failed |= !converged && depth == 0 || !delta.is_finite();
        return;
    }
    simpson_step(f, a, m, [fa, flm, fm], left, 0.5 * eps, depth - 1, leaf);
    simpson_step(f, m, b, [fm, frm, fb], right, 0.5 * eps, depth - 1, leaf);
}

/// Composite Simpson rule with `panels` panels (each panel has a midpoint).
pub fn composite_simpson<F>(f: &F, a: f64, b: f64, panels: usize) -> f64
where
    F: Fn(f64) -> f64,
{
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut sum = 0.0;
    for k in 0..panels {
        let lo = a + h * k as f64;
        let hi = lo + h;
        sum += f(lo) + 4.0 * f(0.5 * (lo + hi)) + f(hi);
    }
    sum * h / 6.0
}

/// Trapezoid rule on (possibly nonuniform) samples.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Running trapezoid integral; `out[0] == 0`.
pub fn cumulative_trapezoid(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    debug_assert_eq!(xs.len(), ys.len());
    let mut out = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    if !xs.is_empty() {
        out.push(0.0);
    }
    for k in 1..xs.len() {
        acc += 0.5 * (xs[k] - xs[k - 1]) * (ys[k] + ys[k - 1]);
        out.push(acc);
    }
    out
}

/// Surface area of the unit sphere `S^{n-1}` in `R^n`.
///
/// Uses `|S^{k}| = 2π/(k-1) |S^{k-2}|` from `|S^0| = 2`, `|S^1| = 2π`.
pub fn sphere_area(n: u32) -> f64 {
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        _ => 2.0 * std::f64::consts::PI / (n as f64 - 2.0) * sphere_area(n - 2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomial_exact() {
        let v = adaptive_simpson(|x| x * x * x - 2.0 * x, 0.0, 2.0, Tolerance::DEFAULT).unwrap();
        assert!((v - 0.0).abs() < 1e-13);
        let v = adaptive_simpson(|x| x.powi(4), 0.0, 1.0, Tolerance::DEFAULT).unwrap();
        assert!((v - 0.2).abs() < 1e-12);
    }

    #[test]
    fn simpson_narrow_peak() {
        let v = adaptive_simpson(|x| (-1e4 * x * x).exp(), -1.0, 1.0, Tolerance::DEFAULT).unwrap();
        let exact = (std::f64::consts::PI / 1e4).sqrt();
        assert!((v - exact).abs() / exact < 1e-9, "{v} vs {exact}");
    }

    #[test]
    fn simpson_rejects_nan_integrand() {
        assert!(adaptive_simpson(|_| f64::NAN, 0.0, 1.0, Tolerance::DEFAULT).is_err());
    }

    #[test]
    fn sphere_areas() {
        use std::f64::consts::PI;
        assert_eq!(sphere_area(1), 2.0);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn cumulative_matches_total() {
        let xs: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let c = cumulative_trapezoid(&xs, &ys);
        assert!((c[10] - trapezoid(&xs, &ys)).abs() < 1e-15);
        assert_eq!(c[0], 0.0);
    }
}
