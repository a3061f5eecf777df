//! Radially symmetric finite-volume solver for the full system
//!
//! ```text
//! u_tt - Δu + u_t     = |v|^p,
//! v_tt - Δv + b(t)v_t = |u|^q,
//! ```
//!
//! with data `ε(u0, u1, v0, v1)` supported in `B_R`, the functionals
//! `U, V, V0, V1`, their identity and lower-bound audits, and ε-sweeps.

mod audit;
mod grid;
mod snapshot;
mod solve;
mod sweep;

use serde::{Deserialize, Serialize};

pub use audit::{
    identity_audit, identity_audit_until, lower_bound_audit, BoundCheck, ConstantSource,
    IdentityAudit, IdentityForm, LowerBoundAudit, BOUND_TOLERANCE, IDENTITY_TOLERANCE,
};
pub use grid::RadialGrid;
pub use snapshot::SnapshotHeader;
pub use snapshot::{read_snapshots, write_snapshots, Snapshot, SNAPSHOT_MAGIC};
pub use solve::{solve, FunctionalSeries, PdeRun};
pub use sweep::{
    lifespan_sweep_pde, refinement_study, PdeSweep, PdeSweepOutcome, RefinementStudy,
    ROUNDOFF_FLOOR,
};

use crate::curves::Exponents;
use crate::damping::DampingSpec;
use crate::error::{Error, Result};

pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e6;
/// Minimum number of cells across the support radius.
pub const MIN_CELLS_PER_RADIUS: f64 = 32.0;

/// Amplitudes of the four bumps `a (1 - (r/R)²)²₊`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialProfile {
    pub u0: f64,
    pub u1: f64,
    pub v0: f64,
    pub v1: f64,
}

impl Default for InitialProfile {
    fn default() -> Self {
        InitialProfile {
            u0: 1.0,
            u1: 1.0,
            v0: 1.0,
            v1: 1.0,
        }
    }
}

impl InitialProfile {
    pub fn validate(&self) -> Result<()> {
        for (name, a) in [
            ("u0", self.u0),
            ("u1", self.u1),
            ("v0", self.v0),
            ("v1", self.v1),
        ] {
            if !(a.is_finite() && a >= 0.0) {
                return Err(Error::invalid(format!(
                    "profile amplitude {name} must be finite and >= 0, got {a}"
                )));
            }
        }
        Ok(())
    }

    pub fn is_trivial(&self) -> bool {
        self.u0 == 0.0 && self.u1 == 0.0 && self.v0 == 0.0 && self.v1 == 0.0
    }

    /// `(1 - (r/R)²)²₊`.
    pub fn shape(r: f64, radius: f64) -> f64 {
        let s = 1.0 - (r / radius).powi(2);
        if s > 0.0 {
            s * s
        } else {
            0.0
        }
    }
}

/// Grid controls; unset values are derived from the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Domain half-length `L_x`; defaults to `R + t_max + 4h` for `n = 1`
    /// and `R + t_max + 32h` otherwise.
    #[serde(default, rename = "L_x")]
    pub half_length: Option<f64>,
    /// Spacing; defaults to `R/32`.
    #[serde(default)]
    pub h: Option<f64>,
    /// `Δt` as a fraction of the stability limit `2/√ρ(Δ_h)`.
    #[serde(default = "default_cfl")]
    pub cfl: f64,
}

fn default_cfl() -> f64 {
    1.0
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            half_length: None,
            h: None,
            cfl: 1.0,
        }
    }
}

/// Grid after defaults are applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedGrid {
    pub h: f64,
    pub half_length: f64,
    pub cells: usize,
    pub cfl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n: u32,
    pub exponents: Exponents,
    pub damping: DampingSpec,
    #[serde(rename = "R")]
    pub radius: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub profile: InitialProfile,
    #[serde(default)]
    pub grid: GridSpec,
    pub t_max: f64,
    #[serde(default = "default_threshold")]
    pub blowup_threshold: f64,
    /// Switches the nonlinear right-hand sides off when false.
    #[serde(default = "default_true")]
    pub sources: bool,
    #[serde(default = "default_one")]
    pub record_every: usize,
    /// Containment tolerance on `support_margin`; defaults to `1e-10` for
    /// `n = 1` and `5e-2` for `n ≥ 2`, where the stability limit forces
    /// `Δt < h` and the stencil runs ahead of the light cone.
    #[serde(default)]
    pub support_tolerance: Option<f64>,
    /// Keep full fields every this many steps.
    #[serde(default)]
    pub snapshot_every: Option<usize>,
}

fn default_threshold() -> f64 {
    DEFAULT_BLOWUP_THRESHOLD
}

fn default_true() -> bool {
    true
}

fn default_one() -> usize {
    1
}

impl ModelConfig {
    /// `n = 1`, `p = q = 2`, `b = 1/(1+t)`, `R = 1`, `ε = 0.5`, `t_max = 40`.
    pub fn demo() -> Self {
        ModelConfig {
            n: 1,
            exponents: Exponents::new(2.0, 2.0).expect("valid exponents"),
            damping: DampingSpec::ScaleInvariant { mu: 1.0 },
            radius: 1.0,
            epsilon: 0.5,
            profile: InitialProfile::default(),
            grid: GridSpec::default(),
            t_max: 40.0,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
            sources: true,
            record_every: 1,
            support_tolerance: None,
            snapshot_every: None,
        }
    }

    pub fn resolved_grid(&self) -> ResolvedGrid {
        let h = self.grid.h.unwrap_or(self.radius / MIN_CELLS_PER_RADIUS);
        // n ≥ 2 runs with Δt < h, so its fringe ahead of the cone needs room
        // before the Dirichlet wall.
        let pad = if self.n == 1 { 4.0 } else { 32.0 };
        let half_length = self
            .grid
            .half_length
            .unwrap_or(self.radius + self.t_max + pad * h);
        let cells = (half_length / h - 1e-9).ceil() as usize + 1;
        ResolvedGrid {
            h,
            half_length,
            cells,
            cfl: self.grid.cfl,
        }
    }

    pub fn support_tolerance(&self) -> f64 {
        self.support_tolerance
            .unwrap_or(if self.n == 1 { 1e-10 } else { 5e-2 })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::invalid("dimension n must be >= 1"));
        }
        Exponents::new(self.exponents.p(), self.exponents.q())?;
        self.damping.validate()?;
        self.profile.validate()?;
        for (name, v) in [
            ("R", self.radius),
            ("epsilon", self.epsilon),
            ("t_max", self.t_max),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.blowup_threshold.is_finite() && self.blowup_threshold > 0.0) {
            return Err(Error::invalid(format!(
                "blowup_threshold must be positive, got {}",
                self.blowup_threshold
            )));
        }
        if self.record_every == 0 || self.snapshot_every == Some(0) {
            return Err(Error::invalid(
                "record_every and snapshot_every must be >= 1",
            ));
        }
        if let Some(tol) = self.support_tolerance {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(Error::invalid(format!(
                    "support_tolerance must be positive, got {tol}"
                )));
            }
        }
        let g = self.resolved_grid();
        if !(g.cfl.is_finite() && g.cfl > 0.0) {
            return Err(Error::invalid(format!(
                "CFL factor must be positive, got {}",
                g.cfl
            )));
        }
        if g.cfl > 1.0 {
            return Err(Error::Cfl { factor: g.cfl });
        }
        if !(g.h.is_finite() && g.h > 0.0) {
            return Err(Error::invalid(format!(
                "grid spacing must be positive, got {}",
                g.h
            )));
        }
        if self.radius / g.h < MIN_CELLS_PER_RADIUS * (1.0 - 1e-12) {
            return Err(Error::invalid(format!(
                "grid must resolve R with >= 32 cells, got R/h = {}",
                self.radius / g.h
            )));
        }
        if !(g.half_length >= self.radius + self.t_max + 2.0 * g.h) {
            return Err(Error::invalid(format!(
                "L_x = {} must be >= R + t_max + 2h = {}",
                g.half_length,
                self.radius + self.t_max + 2.0 * g.h
            )));
        }
        Ok(())
    }

    /// The same model at spacing `h`, keeping an explicit `L_x` if one was set.
    pub fn with_spacing(&self, h: f64) -> Self {
        ModelConfig {
            grid: GridSpec {
                h: Some(h),
                ..self.grid
            },
            ..self.clone()
        }
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        ModelConfig {
            epsilon,
            ..self.clone()
        }
    }
}
