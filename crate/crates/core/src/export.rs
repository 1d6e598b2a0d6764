//! Field exports: CSV samples and 8-bit PGM images of horizontal planes.

use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::thermal::{FieldError, PlaneSelector, ScalarField};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("expected a single plane, field has {0} slabs")]
    NotAPlane(usize),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Serialize)]
struct Sample {
    x_mm: f64,
    y_mm: f64,
    z_layer: usize,
    value: f64,
}

/// One row per cell: center coordinates, global z index and value.
pub fn field_csv(f: &ScalarField) -> Result<String, ExportError> {
    let g = &f.geometry;
    let mut w = csv::Writer::from_writer(Vec::new());
    for (k, z) in g.z.iter().enumerate() {
        for j in 0..g.ny {
            for i in 0..g.nx {
                w.serialize(Sample {
                    x_mm: g.x_center(i),
                    y_mm: g.y_center(j),
                    z_layer: z.z_index,
                    value: f.at(i, j, k),
                })?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Binary PGM of a single plane, min–max scaled to 0..=255, first row at max y.
pub fn plane_pgm(f: &ScalarField) -> Result<Vec<u8>, ExportError> {
    let g = &f.geometry;
    if g.nz() != 1 {
        return Err(ExportError::NotAPlane(g.nz()));
    }
    let (lo, hi) = (f.min(), f.max());
    let span = hi - lo;
    let mut out = format!("P5\n{} {}\n255\n", g.nx, g.ny).into_bytes();
    for j in (0..g.ny).rev() {
        for i in 0..g.nx {
            let v = f.at(i, j, 0);
            let level = if span > 0.0 { ((v - lo) / span * 255.0).round() } else { 0.0 };
            out.push(level as u8);
        }
    }
    Ok(out)
}

/// Writes `<stem>_<name>.csv` and `<stem>_<name>.pgm` for each plane.
pub fn write_planes(
    dir: &Path,
    stem: &str,
    field: &ScalarField,
    planes: &[(&str, PlaneSelector)],
) -> Result<Vec<PathBuf>, ExportError> {
    let mut written = Vec::new();
    for (name, sel) in planes {
        let plane = field.plane(*sel)?;
        let csv_path = dir.join(format!("{stem}_{name}.csv"));
        std::fs::write(&csv_path, field_csv(&plane)?)?;
        let pgm_path = dir.join(format!("{stem}_{name}.pgm"));
        std::fs::write(&pgm_path, plane_pgm(&plane)?)?;
        written.extend([csv_path, pgm_path]);
    }
    Ok(written)
}
