use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::grid::{GridGeometry, PlaneSelector};

/// One value per grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub geometry: GridGeometry,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("plane {0:?} does not exist in this grid")]
    NoSuchPlane(PlaneSelector),
    #[error("plane needs at least 3 cells per axis for central differences (got {nx}x{ny})")]
    PlaneTooSmall { nx: usize, ny: usize },
    #[error("field has {got} values but the grid has {expected} cells")]
    ShapeMismatch { expected: usize, got: usize },
}

impl ScalarField {
    pub fn new(geometry: GridGeometry, values: Vec<f64>) -> Result<Self, FieldError> {
        let expected = geometry.n_cells();
        if values.len() != expected {
            return Err(FieldError::ShapeMismatch {
                expected,
                got: values.len(),
            });
        }
        Ok(Self { geometry, values })
    }

    pub fn constant(geometry: GridGeometry, value: f64) -> Self {
        let n = geometry.n_cells();
        Self {
            geometry,
            values: vec![value; n],
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.geometry.index(i, j, k)]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Extracts one horizontal plane as a single-slab field.
    pub fn plane(&self, plane: PlaneSelector) -> Result<ScalarField, FieldError> {
        let k = self
            .geometry
            .plane_index(plane)
            .ok_or(FieldError::NoSuchPlane(plane))?;
        let n = self.geometry.n_columns();
        Ok(ScalarField {
            geometry: self.geometry.plane(k),
            values: self.values[k * n..(k + 1) * n].to_vec(),
        })
    }

    /// Value at the given quantile (0..=1) using nearest rank.
    pub fn quantile(&self, q: f64) -> f64 {
        let mut sorted = self.values.clone();
        sorted.sort_by(f64::total_cmp);
        let rank = ((q.clamp(0.0, 1.0) * sorted.len() as f64).ceil() as usize).max(1);
        sorted[rank - 1]
    }
}

/// Peak package temperature: the maximum over all cells.
pub fn peak_temperature(t: &ScalarField) -> f64 {
    t.max()
}

/// Lateral temperature-gradient statistics over one plane, °C/mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientStats {
    pub mean: f64,
    pub std: f64,
    pub max: f64,
}

/// Per-cell in-plane gradient magnitude of `t` on `plane`.
///
/// Interior cells use central differences; edge cells fall back to one-sided
/// differences, which are exact for linear fields as well. Statistics are
/// population moments over every plane cell.
pub fn surface_gradient_stats(
    t: &ScalarField,
    plane: PlaneSelector,
) -> Result<(GradientStats, ScalarField), FieldError> {
    let slab = t.plane(plane)?;
    let g = &slab.geometry;
    let (nx, ny) = (g.nx, g.ny);
    if nx < 3 || ny < 3 {
        return Err(FieldError::PlaneTooSmall { nx, ny });
    }
    let v = |i: usize, j: usize| slab.values[i + nx * j];
    let diff = |n: usize, idx: usize, h: f64, f: &dyn Fn(usize) -> f64| -> f64 {
        if idx == 0 {
            (f(1) - f(0)) / h
        } else if idx == n - 1 {
            (f(n - 1) - f(n - 2)) / h
        } else {
            (f(idx + 1) - f(idx - 1)) / (2.0 * h)
        }
    };
    let mut mags = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let gx = diff(nx, i, g.dx, &|a| v(a, j));
            let gy = diff(ny, j, g.dy, &|b| v(i, b));
            mags.push((gx * gx + gy * gy).sqrt());
        }
    }
    let n = mags.len() as f64;
    let mean = mags.iter().sum::<f64>() / n;
    let var = mags.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / n;
    let max = mags.iter().copied().fold(0.0, f64::max);
    let field = ScalarField {
        geometry: g.clone(),
        values: mags,
    };
    Ok((
        GradientStats {
            mean,
            std: var.sqrt(),
            max,
        },
        field,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LayerRole;
    use crate::thermal::grid::ZCell;
    use rand::{Rng, SeedableRng};

    fn flat(nx: usize, ny: usize, dx: f64) -> GridGeometry {
        GridGeometry {
            nx,
            ny,
            dx,
            dy: dx,
            z: vec![ZCell {
                layer: 0,
                role: LayerRole::Interposer,
                dz: 0.1,
                z_index: 0,
            }],
        }
    }

    #[test]
    fn constant_field_has_zero_gradient() {
        let f = ScalarField::constant(flat(5, 5, 1.0), 23.0);
        let (s, _) = surface_gradient_stats(&f, PlaneSelector::Index(0)).unwrap();
        assert_eq!((s.mean, s.std, s.max), (0.0, 0.0, 0.0));
    }

    #[test]
    fn linear_ramp_gradient_is_exact() {
        let g = flat(7, 4, 0.5);
        let values = (0..4)
            .flat_map(|_| (0..7).map(|i| 23.0 + 5.0 * (i as f64 + 0.5) * 0.5))
            .collect();
        let f = ScalarField::new(g, values).unwrap();
        let (s, grad) = surface_gradient_stats(&f, PlaneSelector::Index(0)).unwrap();
        assert!(grad.values.iter().all(|v| (v - 5.0).abs() < 1e-12));
        assert!((s.mean - 5.0).abs() < 1e-12 && s.std < 1e-12 && (s.max - 5.0).abs() < 1e-12);
    }

    #[test]
    fn peak_is_maximum() {
        let mut f = ScalarField::constant(flat(4, 4, 1.0), 23.0);
        assert_eq!(peak_temperature(&f), 23.0);
        f.values[5] = 81.06;
        f.values[6] = 80.0;
        assert_eq!(peak_temperature(&f), 81.06);
    }

    #[test]
    fn gradient_matches_brute_force_on_random_field() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let g = flat(8, 8, 0.75);
        let values: Vec<f64> = (0..64).map(|_| rng.random_range(20.0..100.0)).collect();
        let f = ScalarField::new(g, values.clone()).unwrap();
        let (s, grad) = surface_gradient_stats(&f, PlaneSelector::Index(0)).unwrap();

        // Independent oracle: explicit neighbor lookups per cell.
        let t = |i: i64, j: i64| values[(i + 8 * j) as usize];
        let mut oracle = Vec::new();
        for j in 0..8i64 {
            for i in 0..8i64 {
                let (il, ir) = ((i - 1).max(0), (i + 1).min(7));
                let (jl, jr) = ((j - 1).max(0), (j + 1).min(7));
                let gx = (t(ir, j) - t(il, j)) / ((ir - il) as f64 * 0.75);
                let gy = (t(i, jr) - t(i, jl)) / ((jr - jl) as f64 * 0.75);
                oracle.push((gx * gx + gy * gy).sqrt());
            }
        }
        for (a, b) in grad.values.iter().zip(&oracle) {
            assert_eq!(a, b);
        }
        let mean = oracle.iter().sum::<f64>() / 64.0;
        let std = (oracle.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 64.0).sqrt();
        let max = oracle.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(s.mean, mean);
        assert_eq!(s.std, std);
        assert_eq!(s.max, max);
    }

    #[test]
    fn small_plane_is_rejected() {
        let f = ScalarField::constant(flat(2, 5, 1.0), 23.0);
        assert!(matches!(
            surface_gradient_stats(&f, PlaneSelector::Index(0)),
            Err(FieldError::PlaneTooSmall { .. })
        ));
        assert!(matches!(
            surface_gradient_stats(&f, PlaneSelector::Index(3)),
            Err(FieldError::NoSuchPlane(_))
        ));
    }
}
