use crate::error::Result;
use crate::quad::sphere_area;
use crate::specialfn;

/// Cell-centred radial grid `r_i = i h` with finite-volume geometry.
///
/// Cell `i` covers `[r_i - h/2, r_i + h/2] ∩ [0, ∞)`; `A_{i+1/2} = (r_i + h/2)^{n-1}`
/// is the face area and `V_i` the cell volume, both per unit solid angle. The
/// discrete Laplacian
/// `(A_{i+1/2}(u_{i+1}-u_i) - A_{i-1/2}(u_i-u_{i-1}))/(h V_i)`
/// telescopes, so `Σ V_i Lap_i = 0` for compactly supported fields. For `n = 1`
/// it is the even extension of the 1-D three-point stencil.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub n: u32,
    pub h: f64,
    pub r: Vec<f64>,
    /// `A_{i+1/2}`.
    pub face: Vec<f64>,
    pub volume: Vec<f64>,
    /// `|S^{n-1}|`.
    pub sphere: f64,
}

impl RadialGrid {
    pub fn new(n: u32, h: f64, cells: usize) -> Self {
        let nf = n as f64;
        let r: Vec<f64> = (0..cells).map(|i| i as f64 * h).collect();
        let face: Vec<f64> = r
            .iter()
            .map(|&ri| (ri + 0.5 * h).powi(n as i32 - 1))
            .collect();
        let volume: Vec<f64> = r
            .iter()
            .enumerate()
            .map(|(i, &ri)| {
                if i == 0 {
                    (0.5 * h).powi(n as i32) / nf
                } else {
                    ((ri + 0.5 * h).powi(n as i32) - (ri - 0.5 * h).powi(n as i32)) / nf
                }
            })
            .collect();
        RadialGrid {
            n,
            h,
            r,
            face,
            volume,
            sphere: sphere_area(n),
        }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Discrete Laplacian at interior cell `i` (`i + 1 < len`).
    #[inline]
    pub fn laplacian(&self, u: &[f64], i: usize) -> f64 {
        let right = self.face[i] * (u[i + 1] - u[i]);
        let left = if i == 0 {
            0.0
        } else {
            self.face[i - 1] * (u[i] - u[i - 1])
        };
        (right - left) / (self.h * self.volume[i])
    }

    /// Gershgorin bound on the spectral radius of the Laplacian.
    pub fn spectral_bound(&self) -> f64 {
        (0..self.len() - 1)
            .map(|i| {
                let left = if i == 0 { 0.0 } else { self.face[i - 1] };
                2.0 * (self.face[i] + left) / (self.h * self.volume[i])
            })
            .fold(0.0, f64::max)
    }

    /// `∫ f dx = |S^{n-1}| Σ V_i f_i`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.sphere * self.volume.iter().zip(f).map(|(v, x)| v * x).sum::<f64>()
    }

    /// `∫ f g dx`.
    pub fn integrate_product(&self, f: &[f64], g: &[f64]) -> f64 {
        self.sphere
            * self
                .volume
                .iter()
                .zip(f)
                .zip(g)
                .map(|((v, x), y)| v * x * y)
                .sum::<f64>()
    }

    /// `e^{-r_i} φ(r_i)` on the grid.
    pub fn scaled_phi(&self) -> Result<Vec<f64>> {
        self.r
            .iter()
            .map(|&ri| specialfn::phi_decayed(self.n, ri))
            .collect()
    }

    /// Conserved leapfrog energy between time levels `prev` and `cur`,
    /// `½ Σ V (Δu/dt)² + ½ Σ A (δu_cur)(δu_prev)/h`.
    pub fn energy(&self, prev: &[f64], cur: &[f64], dt: f64) -> f64 {
        let kinetic: f64 = (0..self.len())
            .map(|i| self.volume[i] * ((cur[i] - prev[i]) / dt).powi(2))
            .sum();
        let potential: f64 = (0..self.len() - 1)
            .map(|i| self.face[i] * (cur[i + 1] - cur[i]) * (prev[i + 1] - prev[i]) / self.h)
            .sum();
        0.5 * self.sphere * (kinetic + potential)
    }
}
