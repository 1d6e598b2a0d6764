//! Loading, saving and validating architecture files.
//!
//! The on-disk format is TOML with four top-level sections: `package`,
//! `materials`, `chiplets` and `nets`. Unknown keys are rejected. Defaults
//! (Poisson ratio, class densities, bump fractions, voxel counts) are filled
//! in on load, so saving and reloading yields an identical spec.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::{ArchitectureSpec, LayerRole};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed architecture file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot serialize architecture: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid architecture: {0}")]
    Validation(String),
}

/// Default bump area fraction for homogenized bump layers.
pub const DEFAULT_BUMP_FRACTION: f64 = 0.2;

const POWER_MAP_REL_TOL: f64 = 1e-6;

pub fn load_architecture(path: impl AsRef<Path>) -> Result<ArchitectureSpec, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_architecture(&text)
}

pub fn parse_architecture(text: &str) -> Result<ArchitectureSpec, ConfigError> {
    let mut spec: ArchitectureSpec = toml::from_str(text)?;
    resolve_defaults(&mut spec);
    validate(&spec).map_err(ConfigError::Validation)?;
    Ok(spec)
}

pub fn save_architecture(spec: &ArchitectureSpec, path: impl AsRef<Path>) -> Result<(), ConfigError> {
    let path = path.as_ref();
    std::fs::write(path, to_toml_string(spec)?).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn to_toml_string(spec: &ArchitectureSpec) -> Result<String, ConfigError> {
    Ok(toml::to_string_pretty(spec)?)
}

fn resolve_defaults(spec: &mut ArchitectureSpec) {
    for (name, m) in spec.materials.iter_mut() {
        m.name = name.clone();
        if m.density.is_none() {
            m.density = m.class.map(|c| c.default_density());
        }
    }
    for layer in &mut spec.package.layers {
        if layer.z_cells.is_none() {
            layer.z_cells = Some(layer.z_cells());
        }
        if layer.role.is_bump() && layer.bump_fraction.is_none() {
            layer.bump_fraction = Some(DEFAULT_BUMP_FRACTION);
        }
    }
}

/// Checks every invariant of the architecture, reporting the first violation.
pub fn validate(spec: &ArchitectureSpec) -> Result<(), String> {
    let pkg = &spec.package;
    for m in spec.materials.values() {
        m.check()?;
    }
    let positive = [
        ("interposer_width", pkg.interposer_width),
        ("interposer_height", pkg.interposer_height),
        ("h_top", pkg.h_top),
        ("h_bottom", pkg.h_bottom),
        ("sigma_max", pkg.sigma_max),
        ("fin_area_ratio", pkg.fin_area_ratio),
    ];
    for (key, v) in positive {
        if !(v > 0.0 && v.is_finite()) {
            return Err(format!("package.{key} must be > 0 (got {v})"));
        }
    }
    if !(pkg.min_spacing >= 0.0) {
        return Err("package.min_spacing must be >= 0".into());
    }
    if !(pkg.gravity >= 0.0) {
        return Err("package.gravity must be >= 0".into());
    }
    if !pkg.ambient.is_finite() {
        return Err("package.ambient must be finite".into());
    }
    if let Some(fill) = &pkg.gap_fill {
        if !spec.materials.contains_key(fill) {
            return Err(format!("package.gap_fill references unknown material `{fill}`"));
        }
    }

    validate_layers(spec)?;

    let chiplet_layer = pkg
        .layer(LayerRole::Chiplet)
        .expect("checked by validate_layers");
    let mut names = BTreeSet::new();
    for c in &spec.chiplets {
        if !names.insert(c.name.as_str()) {
            return Err(format!("duplicate chiplet name `{}`", c.name));
        }
        if !(c.width > 0.0 && c.height > 0.0) {
            return Err(format!("chiplet `{}`: width and height must be > 0", c.name));
        }
        if !(c.power >= 0.0 && c.power.is_finite()) {
            return Err(format!("chiplet `{}`: power must be >= 0", c.name));
        }
        if (c.thickness - chiplet_layer.thickness).abs() > 1e-9 {
            return Err(format!(
                "chiplet `{}`: thickness {} µm differs from the chiplet layer thickness {} µm",
                c.name, c.thickness, chiplet_layer.thickness
            ));
        }
        if let Some(map) = &c.power_map {
            check_power_map(&c.name, c.power, map)?;
        }
    }
    if spec.chiplets.is_empty() {
        return Err("architecture has no chiplets".into());
    }
    for net in &spec.nets {
        for end in [&net.src, &net.dst] {
            if !names.contains(end.as_str()) {
                return Err(format!("net {} references unknown chiplet `{end}`", net.name()));
            }
        }
        if net.src == net.dst {
            return Err(format!("net {} connects a chiplet to itself", net.name()));
        }
        if net.wires < 1 {
            return Err(format!("net {} must carry at least one wire", net.name()));
        }
        if !(net.bandwidth >= 0.0) {
            return Err(format!("net {}: bandwidth must be >= 0", net.name()));
        }
    }
    Ok(())
}

fn validate_layers(spec: &ArchitectureSpec) -> Result<(), String> {
    let layers = &spec.package.layers;
    let mut prev: Option<LayerRole> = None;
    for layer in layers {
        if layer.role == LayerRole::Underfill {
            return Err(
                "underfill is not a standalone layer; set `underfill` on a bump layer".into(),
            );
        }
        if let Some(p) = prev {
            if layer.role <= p {
                return Err(format!(
                    "layer `{}` is out of order or repeated (stack runs substrate, c4, interposer, \
                     microbump, chiplet, tim, heatsink)",
                    layer.role
                ));
            }
        }
        prev = Some(layer.role);
        if !(layer.thickness > 0.0) {
            return Err(format!("layer `{}`: thickness must be > 0", layer.role));
        }
        if !spec.materials.contains_key(&layer.material) {
            return Err(format!(
                "layer `{}` references unknown material `{}`",
                layer.role, layer.material
            ));
        }
        if layer.z_cells() == 0 {
            return Err(format!("layer `{}`: z_cells must be >= 1", layer.role));
        }
        if layer.role.is_bump() {
            let f = layer.bump_fraction.unwrap_or(DEFAULT_BUMP_FRACTION);
            if !(f > 0.0 && f <= 1.0) {
                return Err(format!("layer `{}`: bump_fraction must lie in (0, 1]", layer.role));
            }
        } else if layer.underfill.is_some() || layer.bump_fraction.is_some() {
            return Err(format!(
                "layer `{}`: underfill/bump_fraction only apply to bump layers",
                layer.role
            ));
        }
        if let Some(u) = &layer.underfill {
            if !spec.materials.contains_key(u) {
                return Err(format!("layer `{}` references unknown underfill `{u}`", layer.role));
            }
        }
    }
    for required in [LayerRole::Interposer, LayerRole::Chiplet] {
        if !layers.iter().any(|l| l.role == required) {
            return Err(format!("stack must contain exactly one {required} layer"));
        }
    }
    Ok(())
}

fn check_power_map(name: &str, power: f64, map: &[Vec<f64>]) -> Result<(), String> {
    let cols = map.first().map_or(0, Vec::len);
    if map.is_empty() || cols == 0 || map.iter().any(|r| r.len() != cols) {
        return Err(format!("chiplet `{name}`: power_map must be a non-empty rectangular grid"));
    }
    if map.iter().flatten().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(format!("chiplet `{name}`: power_map cells must be >= 0"));
    }
    let sum: f64 = map.iter().flatten().sum();
    let err = (sum - power).abs();
    if err > POWER_MAP_REL_TOL * power.abs().max(f64::MIN_POSITIVE) && err > 1e-12 {
        return Err(format!(
            "chiplet `{name}`: power_map sums to {sum} W but power is {power} W"
        ));
    }
    Ok(())
}
