//! Special functions behind the weighted functionals: the exponential weight
//! `φ` with `Δφ = φ`, the modified Bessel function `K_ℓ`, the multiplier
//! `λ(t; μ) = (1+t)^{(μ+1)/2} K_ℓ(1+t)` with `ℓ = |μ-1|/2`, and the mass bound
//! for `∫_{B_{R+t}} φ^r`.
//!
//! Everything here is a pure function of its arguments. Quadratures work on
//! exponentially scaled integrands (`e^{z} K_ℓ(z)`, `e^{-|x|} φ(x)`) so that
//! relative accuracy survives for large arguments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{adaptive_simpson, sphere_area, Tolerance};

/// Log-gap between the integrand peak and the truncation point of the
/// `K_ℓ` integral; `e^{-40}` is far below double-precision resolution.
const BESSEL_TAIL_LOG_GAP: f64 = 40.0;

/// Order `ℓ ≥ 0` of a modified Bessel function of the second kind.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct BesselOrder(f64);

impl BesselOrder {
    pub fn new(ell: f64) -> Result<Self> {
        if !ell.is_finite() || ell < 0.0 {
            return Err(Error::invalid(format!(
                "Bessel order must be finite and >= 0, got {ell}"
            )));
        }
        Ok(BesselOrder(ell))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// The order `ℓ + 1`, used by the derivative identity.
    pub fn succ(self) -> Self {
        BesselOrder(self.0 + 1.0)
    }
}

/// Yordanov–Zhang weight `φ`.
///
/// For `n = 1`, `x` is the signed coordinate and `φ(x) = e^x + e^{-x}`. For
/// `n ≥ 2`, `x` is the radius `|x|` (the value is rotation invariant) and the
/// sphere integral is reduced to a polar-angle quadrature,
/// `φ(ρ) = |S^{n-2}| ∫_0^π e^{ρ cos θ} sin^{n-2} θ dθ` (closed form for `n = 3`).
pub fn phi(n: u32, x: f64) -> Result<f64> {
    phi_with_tol(n, x, Tolerance::new(1e-14, 1e-12))
}

pub fn phi_with_tol(n: u32, x: f64, tol: Tolerance) -> Result<f64> {
    if n < 1 {
        return Err(Error::invalid("phi needs dimension n >= 1"));
    }
    if !x.is_finite() {
        return Err(Error::invalid(format!("phi needs a finite point, got {x}")));
    }
    if n == 1 {
        return Ok(x.exp() + (-x).exp());
    }
    Ok(phi_scaled(n, x.abs(), tol)? * x.abs().exp())
}

/// `e^{-|x|} φ(x)`, finite for every `x`.
pub fn phi_decayed(n: u32, x: f64) -> Result<f64> {
    if n < 1 || !x.is_finite() {
        return Err(Error::invalid(format!(
            "phi needs n >= 1 and a finite point, got n={n}, x={x}"
        )));
    }
    if n == 1 {
        return Ok(1.0 + (-2.0 * x.abs()).exp());
    }
    phi_scaled(n, x.abs(), Tolerance::new(1e-14, 1e-12))
}

/// `e^{-ρ} φ(ρ)` for `n ≥ 2`; `n = 3` uses `φ(ρ) = 4π sinh(ρ)/ρ`.
fn phi_scaled(n: u32, rho: f64, tol: Tolerance) -> Result<f64> {
    if n == 3 {
        let four_pi = 4.0 * std::f64::consts::PI;
        return Ok(if rho < 1e-8 {
            four_pi * (1.0 - rho)
        } else {
            four_pi * -(-2.0 * rho).exp_m1() / (2.0 * rho)
        });
    }
    let power = (n - 2) as i32;
    let integral = adaptive_simpson(
        |theta: f64| (rho * (theta.cos() - 1.0)).exp() * theta.sin().powi(power),
        0.0,
        std::f64::consts::PI,
        tol,
    )?;
    Ok(sphere_area(n - 1) * integral)
}

/// `K_ℓ(z)` from `∫_0^∞ e^{-z cosh y} cosh(ℓ y) dy`.
pub fn bessel_k(order: BesselOrder, z: f64) -> Result<f64> {
    Ok(bessel_k_scaled(order, z, Tolerance::DEFAULT)? * (-z).exp())
}

pub fn bessel_k_with_tol(order: BesselOrder, z: f64, tol: Tolerance) -> Result<f64> {
    Ok(bessel_k_scaled(order, z, tol)? * (-z).exp())
}

/// `e^{z} K_ℓ(z)`, computed on `[0, Y]` where `Y` lies past the integrand peak
/// and the integrand has dropped `e^{-40}` below it.
pub fn bessel_k_scaled(order: BesselOrder, z: f64, tol: Tolerance) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::invalid(format!("bessel_k needs z > 0, got {z}")));
    }
    let ell = order.value();
    // log of the (scaled) integrand, up to the bounded factor cosh/exp.
    let log_integrand = |y: f64| ell * y - z * (y.cosh() - 1.0);
    let y_peak = (ell / z).asinh();
    let peak = log_integrand(y_peak);
    let mut upper = y_peak.max(0.5);
    while log_integrand(upper) > peak - BESSEL_TAIL_LOG_GAP {
        upper += 0.25 * upper.max(1.0);
    }
    adaptive_simpson(
        |y: f64| (-z * (y.cosh() - 1.0)).exp() * (ell * y).cosh(),
        0.0,
        upper,
        tol,
    )
}

/// The multiplier `λ(·; μ)` together with its Bessel order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Multiplier {
    mu: f64,
    ell: BesselOrder,
}

impl Multiplier {
    pub fn new(mu: f64) -> Result<Self> {
        if !mu.is_finite() || mu < 0.0 {
            return Err(Error::invalid(format!(
                "damping strength mu must be >= 0, got {mu}"
            )));
        }
        Ok(Multiplier {
            mu,
            ell: BesselOrder::new((mu - 1.0).abs() / 2.0)?,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn order(&self) -> BesselOrder {
        self.ell
    }

    pub fn lambda(&self, t: f64) -> Result<f64> {
        self.lambda_with_tol(t, Tolerance::DEFAULT)
    }

    pub fn lambda_with_tol(&self, t: f64, tol: Tolerance) -> Result<f64> {
        check_time(t)?;
        let z = 1.0 + t;
        let scaled = bessel_k_scaled(self.ell, z, tol)?;
        Ok(((self.mu + 1.0) / 2.0 * z.ln() - z).exp() * scaled)
    }

    /// `λ'(t) = ((μ+1)/2 + ℓ)(1+t)^{(μ-1)/2} K_ℓ(1+t) - (1+t)^{(μ+1)/2} K_{ℓ+1}(1+t)`.
    pub fn lambda_prime(&self, t: f64) -> Result<f64> {
        self.lambda_prime_with_tol(t, Tolerance::DEFAULT)
    }

    pub fn lambda_prime_with_tol(&self, t: f64, tol: Tolerance) -> Result<f64> {
        check_time(t)?;
        let z = 1.0 + t;
        let k0 = bessel_k_scaled(self.ell, z, tol)?;
        let k1 = bessel_k_scaled(self.ell.succ(), z, tol)?;
        let k = (self.mu + 1.0) / 2.0;
        let common = (k * z.ln() - z).exp();
        Ok(common * ((k + self.ell.value()) * k0 / z - k1))
    }

    /// `λ(t) / ((1+t)^{μ/2} e^{-t})`, the quantity bounded above and below by `C₁`.
    pub fn bound_ratio(&self, t: f64, tol: Tolerance) -> Result<f64> {
        check_time(t)?;
        let z = 1.0 + t;
        Ok((0.5 * z.ln() - 1.0).exp() * bessel_k_scaled(self.ell, z, tol)?)
    }

    /// `λ'' - (μλ/(1+t))' - λ`, with `λ''` from a centred difference of `λ'`
    /// (one-sided at `t < step`).
    pub fn ode_residual(&self, t: f64, step: f64, tol: Tolerance) -> Result<f64> {
        check_time(t)?;
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::invalid(format!(
                "difference step must be positive, got {step}"
            )));
        }
        let d = |s: f64| self.lambda_prime_with_tol(s, tol);
        let second = if t >= step {
            (d(t + step)? - d(t - step)?) / (2.0 * step)
        } else {
            (-3.0 * d(t)? + 4.0 * d(t + step)? - d(t + 2.0 * step)?) / (2.0 * step)
        };
        let z = 1.0 + t;
        let lambda = self.lambda_with_tol(t, tol)?;
        let prime = d(t)?;
        Ok(second - self.mu * (prime / z - lambda / (z * z)) - lambda)
    }
}

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::invalid(format!(
            "time must be finite and >= 0, got {t}"
        )));
    }
    Ok(())
}

/// `λ(t; μ)`.
pub fn lambda_mu(t: f64, mu: f64) -> Result<f64> {
    Multiplier::new(mu)?.lambda(t)
}

/// `λ'(t; μ)`.
pub fn lambda_mu_prime(t: f64, mu: f64) -> Result<f64> {
    Multiplier::new(mu)?.lambda_prime(t)
}

/// Measured two-sided bound `C₁⁻¹ (1+t)^{μ/2} e^{-t} ≤ λ(t; μ) ≤ C₁ (1+t)^{μ/2} e^{-t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaBound {
    pub mu: f64,
    pub t_max: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub c1: f64,
}

impl LambdaBound {
    /// Scan the ratio on a uniform grid of `[0, t_max]` with spacing `dt`.
    pub fn calibrate(mu: f64, t_max: f64, dt: f64, tol: Tolerance) -> Result<Self> {
        if !(t_max > 0.0 && dt > 0.0) {
            return Err(Error::invalid("calibration needs t_max > 0 and dt > 0"));
        }
        let m = Multiplier::new(mu)?;
        let steps = (t_max / dt).ceil() as usize;
        let mut lo = f64::INFINITY;
        let mut hi = 0.0_f64;
        for k in 0..=steps {
            let t = (k as f64 * dt).min(t_max);
            let r = m.bound_ratio(t, tol)?;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        Ok(LambdaBound {
            mu,
            t_max,
            min_ratio: lo,
            max_ratio: hi,
            c1: hi.max(1.0 / lo),
        })
    }
}

/// `∫_{B_ρ} φ(x)^r dx` (radial reduction for `n ≥ 2`).
pub fn phi_ball_integral(n: u32, r: f64, radius: f64) -> Result<f64> {
    check_mass_args(n, r, radius)?;
    phi_shell_integral(n, r, 0.0, radius)
}

fn phi_shell_integral(n: u32, r: f64, inner: f64, outer: f64) -> Result<f64> {
    let tol = Tolerance::new(0.0, 1e-11);
    if n == 1 {
        // (e^x + e^{-x})^r = e^{rx} (1 + e^{-2x})^r, symmetric in x.
        let scale = r * outer;
        let v = adaptive_simpson(
            |x: f64| (r * x - scale).exp() * (1.0 + (-2.0 * x).exp()).powf(r),
            inner,
            outer,
            tol,
        )?;
        return Ok(2.0 * v * scale.exp());
    }
    let inner_tol = Tolerance::new(0.0, 1e-12);
    let scale = r * outer;
    // A failed inner quadrature turns into NaN, which fails the outer one.
    let v = adaptive_simpson(
        |rho: f64| match phi_scaled(n, rho, inner_tol) {
            Ok(s) => (r * (rho - outer)).exp() * s.powf(r) * rho.powi(n as i32 - 1),
            Err(_) => f64::NAN,
        },
        inner,
        outer,
        tol,
    );
    Ok(sphere_area(n) * v? * scale.exp())
}

fn check_mass_args(n: u32, r: f64, radius: f64) -> Result<()> {
    if n < 1 {
        return Err(Error::invalid("phi_mass needs n >= 1"));
    }
    if !(r > 1.0) || !r.is_finite() {
        return Err(Error::invalid(format!(
            "phi_mass needs exponent r > 1, got {r}"
        )));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::invalid(format!(
            "phi_mass needs radius > 0, got {radius}"
        )));
    }
    Ok(())
}

/// Calibrated constant `C₀` in `∫_{B_{R+t}} φ^r ≤ C₀ e^{rt} (R+t)^{(n-1)(1-r/2)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassBound {
    pub n: u32,
    pub r: f64,
    pub radius: f64,
    pub t_cal: f64,
    pub c0: f64,
    /// Time at which the calibration ratio peaks.
    pub t_peak: f64,
}

/// Result of [`MassBound::evaluate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiMass {
    pub integral: f64,
    pub bound: f64,
    /// False when `t` lies beyond the calibration window.
    pub calibrated: bool,
}

/// Relative slack added to `C₀` to absorb quadrature noise (`~1e-11` per value).
const MASS_BOUND_SLACK: f64 = 1e-8;

impl MassBound {
    pub const DEFAULT_T_CAL: f64 = 20.0;

    fn envelope(n: u32, r: f64, radius: f64, t: f64) -> f64 {
        (r * t).exp() * (radius + t).powf((n as f64 - 1.0) * (1.0 - r / 2.0))
    }

    /// Supremum of `integral / envelope` over `[0, t_cal]`: scanned on a grid
    /// of spacing 0.25, then refined around the grid maximum by golden section.
    pub fn calibrate(n: u32, r: f64, radius: f64, t_cal: f64) -> Result<Self> {
        check_mass_args(n, r, radius)?;
        if !(t_cal > 0.0) {
            return Err(Error::invalid("calibration window must be positive"));
        }
        let steps = (t_cal / 0.25).ceil().max(1.0) as usize;
        let grid: Vec<f64> = (0..=steps)
            .map(|k| t_cal * k as f64 / steps as f64)
            .collect();
        let mut running = phi_shell_integral(n, r, 0.0, radius)?;
        let mut ratios = vec![running / Self::envelope(n, r, radius, 0.0)];
        for w in grid.windows(2) {
            running += phi_shell_integral(n, r, radius + w[0], radius + w[1])?;
            ratios.push(running / Self::envelope(n, r, radius, w[1]));
        }
        let (k_best, &best) = ratios
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("grid is nonempty");
        let ratio_at = |t: f64| -> Result<f64> {
            Ok(phi_ball_integral(n, r, radius + t)? / Self::envelope(n, r, radius, t))
        };
        let lo = grid[k_best.saturating_sub(1)];
        let hi = grid[(k_best + 1).min(steps)];
        let (t_peak, refined) = golden_max(ratio_at, lo, hi, 40)?;
        let (t_peak, sup) = if refined > best {
            (t_peak, refined)
        } else {
            (grid[k_best], best)
        };
        Ok(MassBound {
            n,
            r,
            radius,
            t_cal,
            c0: sup * (1.0 + MASS_BOUND_SLACK),
            t_peak,
        })
    }

    pub fn bound(&self, t: f64) -> f64 {
        self.c0 * Self::envelope(self.n, self.r, self.radius, t)
    }

    pub fn evaluate(&self, t: f64) -> Result<PhiMass> {
        check_time(t)?;
        Ok(PhiMass {
            integral: phi_ball_integral(self.n, self.r, self.radius + t)?,
            bound: self.bound(t),
            calibrated: t <= self.t_cal,
        })
    }
}

/// `(∫_{B_{R+t}} φ^r, C₀ e^{rt}(R+t)^{(n-1)(1-r/2)})` with `C₀` calibrated on
/// `[0, max(20, t)]`.
pub fn phi_mass(n: u32, r: f64, radius: f64, t: f64) -> Result<PhiMass> {
    check_time(t)?;
    MassBound::calibrate(n, r, radius, MassBound::DEFAULT_T_CAL.max(t))?.evaluate(t)
}

fn golden_max<F>(f: F, mut a: f64, mut b: f64, iters: usize) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    let ends = [(a, f(a)?), (b, f(b)?), (c, fc), (d, fd)];
    Ok(ends
        .into_iter()
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .expect("four candidates"))
}
