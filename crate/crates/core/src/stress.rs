//! Surrogate thermo-mechanical stress.
//!
//! Two load cases are superposed per cell: plane-stress CTE mismatch against
//! the interposer, and transverse shear in the interposer from the weight of
//! everything stacked on it. The result is reduced to von Mises stress.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ArchitectureSpec, LayerRole, StressReduction};
use crate::thermal::{GridGeometry, ScalarField, VoxelGrid};

/// Cauchy stress components in MPa.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StressTensor {
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub sigma_z: f64,
    pub tau_xy: f64,
    pub tau_yz: f64,
    pub tau_zx: f64,
}

impl StressTensor {
    pub const ZERO: StressTensor = StressTensor {
        sigma_x: 0.0,
        sigma_y: 0.0,
        sigma_z: 0.0,
        tau_xy: 0.0,
        tau_yz: 0.0,
        tau_zx: 0.0,
    };

    pub fn normal(sigma_x: f64, sigma_y: f64, sigma_z: f64) -> Self {
        Self {
            sigma_x,
            sigma_y,
            sigma_z,
            ..Self::ZERO
        }
    }

    pub fn shear(tau_xy: f64, tau_yz: f64, tau_zx: f64) -> Self {
        Self {
            tau_xy,
            tau_yz,
            tau_zx,
            ..Self::ZERO
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.sigma_x, self.sigma_y, self.sigma_z, self.tau_xy, self.tau_yz, self.tau_zx]
            .iter()
            .all(|v| v.is_finite())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            sigma_x: self.sigma_x * s,
            sigma_y: self.sigma_y * s,
            sigma_z: self.sigma_z * s,
            tau_xy: self.tau_xy * s,
            tau_yz: self.tau_yz * s,
            tau_zx: self.tau_zx * s,
        }
    }
}

impl std::ops::Add for StressTensor {
    type Output = StressTensor;

    fn add(self, o: StressTensor) -> StressTensor {
        StressTensor {
            sigma_x: self.sigma_x + o.sigma_x,
            sigma_y: self.sigma_y + o.sigma_y,
            sigma_z: self.sigma_z + o.sigma_z,
            tau_xy: self.tau_xy + o.tau_xy,
            tau_yz: self.tau_yz + o.tau_yz,
            tau_zx: self.tau_zx + o.tau_zx,
        }
    }
}

/// Von Mises equivalent stress in MPa.
pub fn von_mises(s: &StressTensor) -> f64 {
    let (dxy, dyz, dzx) = (s.sigma_x - s.sigma_y, s.sigma_y - s.sigma_z, s.sigma_z - s.sigma_x);
    let normal = 0.5 * (dxy * dxy + dyz * dyz + dzx * dzx);
    let shear = 3.0 * (s.tau_xy * s.tau_xy + s.tau_yz * s.tau_yz + s.tau_zx * s.tau_zx);
    (normal + shear).sqrt()
}

/// One stress tensor per grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub geometry: GridGeometry,
    pub values: Vec<StressTensor>,
}

impl TensorField {
    pub fn zeros(geometry: GridGeometry) -> Self {
        let n = geometry.n_cells();
        Self {
            geometry,
            values: vec![StressTensor::ZERO; n],
        }
    }

    /// Cell-wise sum of two fields on the same grid.
    pub fn add(&self, other: &TensorField) -> Result<TensorField, StressError> {
        if self.geometry != other.geometry {
            return Err(StressError::GridMismatch);
        }
        Ok(TensorField {
            geometry: self.geometry.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| *a + *b).collect(),
        })
    }

    pub fn von_mises(&self) -> ScalarField {
        ScalarField {
            geometry: self.geometry.clone(),
            values: self.values.iter().map(von_mises).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StressError {
    #[error("temperature field does not match the voxel grid")]
    GridMismatch,
    #[error("material `{0}` has no density; self-weight needs one for every material")]
    MissingDensity(String),
    #[error("grid has no interposer layer")]
    NoInterposer,
}

/// In-plane CTE-mismatch stress relative to the interposer.
///
/// σx = σy = E/(1−ν) · |α − α_interposer| · (T − ambient), σz = 0. Void
/// cells carry no stress.
pub fn thermo_elastic_stress(
    t: &ScalarField,
    g: &VoxelGrid,
    ambient: f64,
) -> Result<TensorField, StressError> {
    if t.geometry != g.geometry {
        return Err(StressError::GridMismatch);
    }
    let alpha_ref = g.materials[g.interposer_material as usize].cte;
    let values = t
        .values
        .iter()
        .enumerate()
        .map(|(c, &temp)| {
            let m = g.material_of(c);
            if m.is_void() {
                return StressTensor::ZERO;
            }
            let biaxial = m.youngs_modulus * 1e3 / (1.0 - m.poisson_ratio);
            let s = biaxial * (m.cte - alpha_ref).abs() * 1e-6 * (temp - ambient);
            StressTensor::normal(s, s, 0.0)
        })
        .collect();
    Ok(TensorField {
        geometry: g.geometry.clone(),
        values,
    })
}

/// Transverse shear in the interposer from gravity.
///
/// Each row and each column of interposer cells is a simply supported beam
/// spanning the interposer and carrying the weight of the cells stacked above
/// it as piecewise-uniform load. The beam shear at a cell center gives
/// τ = 3V/(2A), with A the strip width times the interposer thickness; x strips
/// give τ_zx and y strips give τ_yz.
pub fn self_weight_shear(g: &VoxelGrid, spec: &ArchitectureSpec) -> Result<TensorField, StressError> {
    let geo = &g.geometry;
    let interposer = geo.z_range(LayerRole::Interposer);
    if interposer.is_empty() {
        return Err(StressError::NoInterposer);
    }
    for m in &g.materials {
        if !m.is_void() && m.density.is_none() {
            return Err(StressError::MissingDensity(m.name.clone()));
        }
    }
    let mut field = TensorField::zeros(geo.clone());
    let gravity = spec.package.gravity;
    if gravity == 0.0 {
        return Ok(field);
    }

    let (nx, ny) = (geo.nx, geo.ny);
    // Point load of each column in N.
    let cell_area_m2 = geo.dx * geo.dy * 1e-6;
    let mut load = vec![0.0; nx * ny];
    for k in interposer.end..geo.nz() {
        let dz_m = geo.z[k].dz * 1e-3;
        for (col, w) in load.iter_mut().enumerate() {
            let m = g.material_of(col + nx * ny * k);
            if !m.is_void() {
                *w += gravity * m.density.unwrap_or(0.0) * dz_m * cell_area_m2;
            }
        }
    }
    let thickness_m: f64 = interposer.clone().map(|k| geo.z[k].dz).sum::<f64>() * 1e-3;

    let tau_x = strip_shear(nx, ny, geo.dx, |i, j| load[i + nx * j]);
    let area_x = geo.dy * 1e-3 * thickness_m;
    let tau_y = strip_shear(ny, nx, geo.dy, |j, i| load[i + nx * j]);
    let area_y = geo.dx * 1e-3 * thickness_m;

    for k in interposer {
        for j in 0..ny {
            for i in 0..nx {
                let vx = tau_x[i + nx * j];
                let vy = tau_y[j + ny * i];
                field.values[geo.index(i, j, k)] =
                    StressTensor::shear(0.0, 1.5 * vy / area_y * 1e-6, 1.5 * vx / area_x * 1e-6);
            }
        }
    }
    Ok(field)
}

/// Beam shear force (N) at each cell center for `strips` beams of `n` cells.
/// `load(pos, strip)` is the point load of a cell; the result is indexed
/// `pos + n * strip`.
fn strip_shear(n: usize, strips: usize, pitch: f64, load: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let span = n as f64 * pitch;
    let mut out = vec![0.0; n * strips];
    for s in 0..strips {
        let reaction: f64 = (0..n)
            .map(|p| load(p, s) * (span - (p as f64 + 0.5) * pitch) / span)
            .sum();
        let mut left = 0.0;
        for p in 0..n {
            let w = load(p, s);
            out[p + n * s] = reaction - left - 0.5 * w;
            left += w;
        }
    }
    out
}

/// Von Mises field plus its scalar reduction.
#[derive(Debug, Clone)]
pub struct StressEvaluation {
    pub tensors: TensorField,
    pub von_mises: ScalarField,
    /// Peak (or 99th percentile, per config) von Mises stress in MPa.
    pub peak: f64,
}

/// Superposes both load cases and reduces to von Mises.
pub fn evaluate_stress(
    t: &ScalarField,
    g: &VoxelGrid,
    spec: &ArchitectureSpec,
) -> Result<StressEvaluation, StressError> {
    let thermal = thermo_elastic_stress(t, g, spec.package.ambient)?;
    let weight = self_weight_shear(g, spec)?;
    let tensors = thermal.add(&weight)?;
    let vm = tensors.von_mises();
    let peak = match spec.package.stress_reduction {
        StressReduction::Peak => vm.max(),
        StressReduction::P99 => vm.quantile(0.99),
    };
    Ok(StressEvaluation {
        tensors,
        von_mises: vm,
        peak,
    })
}
