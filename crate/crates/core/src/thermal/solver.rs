//! Steady-state conduction on a voxel grid.
//!
//! Seven-point finite-volume stencil: face conductances use the harmonic mean
//! of the two cell conductivities (series resistance of the two half cells),
//! and the convective top/bottom faces add `1/h` in series with the boundary
//! half cell. Lateral faces are adiabatic. The resulting system in
//! `θ = T - T_ambient` is symmetric positive definite and solved with
//! Jacobi-preconditioned conjugate gradients.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::field::ScalarField;
use super::grid::VoxelGrid;

/// Convective boundary conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryConditions {
    /// Effective top (heat sink) coefficient, W/(m²·K).
    pub h_top: f64,
    /// Bottom (substrate) coefficient, W/(m²·K).
    pub h_bottom: f64,
    /// °C.
    pub ambient: f64,
}

impl BoundaryConditions {
    pub fn from_package(pkg: &crate::model::PackageConfig) -> Self {
        Self {
            h_top: pkg.effective_h_top(),
            h_bottom: pkg.h_bottom,
            ambient: pkg.ambient,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target for ‖r‖ / ‖q‖.
    pub rel_tolerance: f64,
    /// Iteration cap; `None` uses `50 · n^(1/3) · 100`.
    pub max_iterations: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rel_tolerance: 1e-10,
            max_iterations: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("convection coefficients must be > 0 (h_top {h_top}, h_bottom {h_bottom})")]
    BadBoundary { h_top: f64, h_bottom: f64 },
    #[error("conjugate gradients stalled after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
}

/// Convergence and energy-balance record of one solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub rel_residual: f64,
    /// Σ source power, W.
    pub injected_w: f64,
    /// Σ convective outflow through top and bottom faces, W.
    pub outflow_w: f64,
}

impl SolveStats {
    pub fn energy_imbalance(&self) -> f64 {
        if self.injected_w == 0.0 {
            self.outflow_w.abs()
        } else {
            ((self.outflow_w - self.injected_w) / self.injected_w).abs()
        }
    }
}

/// Assembled conductance network (W/K).
struct Stencil {
    nx: usize,
    ny: usize,
    nz: usize,
    /// Conductance to the +x, +y, +z neighbour (zero on the far face).
    gx: Vec<f64>,
    gy: Vec<f64>,
    gz: Vec<f64>,
    /// Convective conductance to ambient.
    gb: Vec<f64>,
    diag: Vec<f64>,
}

impl Stencil {
    fn assemble(grid: &VoxelGrid, bc: &BoundaryConditions) -> Self {
        let g = &grid.geometry;
        let (nx, ny, nz) = (g.nx, g.ny, g.nz());
        let n = g.n_cells();
        let dx = g.dx * 1e-3;
        let dy = g.dy * 1e-3;
        let k = |c: usize| grid.material_of(c).thermal_conductivity;
        let mut gx = vec![0.0; n];
        let mut gy = vec![0.0; n];
        let mut gz = vec![0.0; n];
        let mut gb = vec![0.0; n];
        for kz in 0..nz {
            let dz = g.z[kz].dz * 1e-3;
            for j in 0..ny {
                for i in 0..nx {
                    let c = g.index(i, j, kz);
                    if i + 1 < nx {
                        let e = c + 1;
                        gx[c] = dy * dz / (dx / (2.0 * k(c)) + dx / (2.0 * k(e)));
                    }
                    if j + 1 < ny {
                        let e = c + nx;
                        gy[c] = dx * dz / (dy / (2.0 * k(c)) + dy / (2.0 * k(e)));
                    }
                    if kz + 1 < nz {
                        let e = c + nx * ny;
                        let dz_up = g.z[kz + 1].dz * 1e-3;
                        gz[c] = dx * dy / (dz / (2.0 * k(c)) + dz_up / (2.0 * k(e)));
                    }
                    if kz == 0 {
                        gb[c] += dx * dy / (dz / (2.0 * k(c)) + 1.0 / bc.h_bottom);
                    }
                    if kz + 1 == nz {
                        gb[c] += dx * dy / (dz / (2.0 * k(c)) + 1.0 / bc.h_top);
                    }
                }
            }
        }
        let mut diag = gb.clone();
        let plane = nx * ny;
        for c in 0..n {
            if gx[c] != 0.0 {
                diag[c] += gx[c];
                diag[c + 1] += gx[c];
            }
            if gy[c] != 0.0 {
                diag[c] += gy[c];
                diag[c + nx] += gy[c];
            }
            if gz[c] != 0.0 {
                diag[c] += gz[c];
                diag[c + plane] += gz[c];
            }
        }
        Self {
            nx,
            ny,
            nz,
            gx,
            gy,
            gz,
            gb,
            diag,
        }
    }

    /// y = A·x
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (nx, plane) = (self.nx, self.nx * self.ny);
        for c in 0..x.len() {
            y[c] = self.diag[c] * x[c];
        }
        for c in 0..x.len() {
            let gx = self.gx[c];
            if gx != 0.0 {
                y[c] -= gx * x[c + 1];
                y[c + 1] -= gx * x[c];
            }
            let gy = self.gy[c];
            if gy != 0.0 {
                y[c] -= gy * x[c + nx];
                y[c + nx] -= gy * x[c];
            }
            let gz = self.gz[c];
            if gz != 0.0 {
                y[c] -= gz * x[c + plane];
                y[c + plane] -= gz * x[c];
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves for the steady temperature field (°C).
pub fn solve_steady_state(
    grid: &VoxelGrid,
    bc: &BoundaryConditions,
    opts: &SolverOptions,
) -> Result<(ScalarField, SolveStats), SolveError> {
    if !(bc.h_top > 0.0 && bc.h_bottom > 0.0) {
        return Err(SolveError::BadBoundary {
            h_top: bc.h_top,
            h_bottom: bc.h_bottom,
        });
    }
    let g = &grid.geometry;
    let n = g.n_cells();
    let plane = g.n_columns();
    let stencil = Stencil::assemble(grid, bc);
    debug_assert_eq!(stencil.nz, g.nz());

    let q: Vec<f64> = (0..n)
        .map(|c| grid.source[c] * grid.cell_volume_m3(c / plane))
        .collect();
    let injected: f64 = q.iter().sum();
    let q_norm = dot(&q, &q).sqrt();

    let mut theta = vec![0.0; n];
    let mut iterations = 0;
    let mut rel_residual = 0.0;
    if q_norm > 0.0 {
        let cap = opts
            .max_iterations
            .unwrap_or_else(|| (50.0 * (n as f64).cbrt() * 100.0).ceil() as usize);
        let inv_diag: Vec<f64> = stencil.diag.iter().map(|d| 1.0 / d).collect();
        let mut r = q.clone();
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
        let mut p = z.clone();
        let mut ap = vec![0.0; n];
        let mut rz = dot(&r, &z);
        rel_residual = 1.0;
        while rel_residual > opts.rel_tolerance {
            if iterations >= cap {
                return Err(SolveError::NotConverged {
                    iterations,
                    residual: rel_residual,
                });
            }
            stencil.apply(&p, &mut ap);
            let alpha = rz / dot(&p, &ap);
            for c in 0..n {
                theta[c] += alpha * p[c];
                r[c] -= alpha * ap[c];
            }
            iterations += 1;
            // Recompute the true residual periodically to stop drift.
            if iterations % 200 == 0 {
                stencil.apply(&theta, &mut ap);
                for c in 0..n {
                    r[c] = q[c] - ap[c];
                }
            }
            rel_residual = dot(&r, &r).sqrt() / q_norm;
            for c in 0..n {
                z[c] = r[c] * inv_diag[c];
            }
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for c in 0..n {
                p[c] = z[c] + beta * p[c];
            }
        }
        // Report the true residual of the returned iterate.
        stencil.apply(&theta, &mut ap);
        let r_true: f64 = q.iter().zip(&ap).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        rel_residual = r_true / q_norm;
    }

    let outflow: f64 = theta.iter().zip(&stencil.gb).map(|(t, gb)| t * gb).sum();
    let values = theta.iter().map(|t| bc.ambient + t).collect();
    let field = ScalarField {
        geometry: g.clone(),
        values,
    };
    Ok((
        field,
        SolveStats {
            iterations,
            rel_residual,
            injected_w: injected,
            outflow_w: outflow,
        },
    ))
}
