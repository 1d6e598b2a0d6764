//! Architecture description: materials, package stack, chiplets and nets.
//!
//! An [`ArchitectureSpec`] is the validated, immutable description of one
//! 2.5D package. It is produced by [`crate::config`] from a TOML file and is
//! shared read-only by every solver.

mod material;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use material::{Material, MaterialClass};

/// Position of a layer in the package stack.
///
/// Variants are declared bottom to top; the derived ordering is the stack
/// order. `Underfill` is never a standalone layer: it names the fill material
/// of a bump layer through [`LayerSpec::underfill`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerRole {
    Substrate,
    C4,
    Interposer,
    Microbump,
    Chiplet,
    Tim,
    Heatsink,
    Underfill,
}

impl LayerRole {
    pub fn is_bump(self) -> bool {
        matches!(self, LayerRole::C4 | LayerRole::Microbump)
    }

    /// Layers that only exist under (or as) chiplet footprints.
    pub fn is_footprint_only(self) -> bool {
        matches!(self, LayerRole::Microbump | LayerRole::Chiplet)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LayerRole::Substrate => "substrate",
            LayerRole::C4 => "c4",
            LayerRole::Interposer => "interposer",
            LayerRole::Microbump => "microbump",
            LayerRole::Chiplet => "chiplet",
            LayerRole::Tim => "tim",
            LayerRole::Heatsink => "heatsink",
            LayerRole::Underfill => "underfill",
        }
    }

    fn default_z_cells(self) -> u32 {
        match self {
            LayerRole::Chiplet | LayerRole::Heatsink => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for LayerRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One layer of the package stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub role: LayerRole,
    pub material: String,
    /// Thickness in µm.
    pub thickness: f64,
    /// Fill material between bumps (bump layers only). Absent means air.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub underfill: Option<String>,
    /// Bump area fraction used for homogenization (bump layers only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bump_fraction: Option<f64>,
    /// Number of voxel layers this layer is split into.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_cells: Option<u32>,
}

impl LayerSpec {
    pub fn thickness_mm(&self) -> f64 {
        self.thickness * 1e-3
    }

    pub fn z_cells(&self) -> u32 {
        self.z_cells.unwrap_or_else(|| self.role.default_z_cells())
    }
}

/// How the stress field is reduced to the scalar fed to the annealer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StressReduction {
    #[default]
    Peak,
    P99,
}

fn default_h_bottom() -> f64 {
    10.0
}
fn default_ambient() -> f64 {
    23.0
}
fn default_gravity() -> f64 {
    9.81
}
fn default_min_spacing() -> f64 {
    0.1
}
fn default_fin_area_ratio() -> f64 {
    1.0
}
fn is_default_reduction(r: &StressReduction) -> bool {
    *r == StressReduction::Peak
}

/// Package-level geometry, stack and boundary conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PackageConfig {
    pub name: String,
    /// Interposer extent in mm.
    pub interposer_width: f64,
    pub interposer_height: f64,
    /// Heat sink convection coefficient, W/(m²·K).
    pub h_top: f64,
    /// Substrate bottom convection coefficient, W/(m²·K).
    #[serde(default = "default_h_bottom")]
    pub h_bottom: f64,
    /// Ambient temperature in °C.
    #[serde(default = "default_ambient")]
    pub ambient: f64,
    /// Gravitational acceleration in m/s².
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    /// Allowable stress (MPa) normalizing the stress weight.
    pub sigma_max: f64,
    /// Minimum clearance between chiplet rectangles in mm.
    #[serde(default = "default_min_spacing")]
    pub min_spacing: f64,
    /// Ratio of finned heat sink surface to its footprint; multiplies `h_top`.
    #[serde(default = "default_fin_area_ratio")]
    pub fin_area_ratio: f64,
    /// Material filling chiplet-level and bump-level gaps. Absent means air.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_fill: Option<String>,
    #[serde(default, skip_serializing_if = "is_default_reduction")]
    pub stress_reduction: StressReduction,
    pub layers: Vec<LayerSpec>,
}

impl PackageConfig {
    /// Convective coefficient applied to the top face of the stack.
    pub fn effective_h_top(&self) -> f64 {
        self.h_top * self.fin_area_ratio
    }

    pub fn layer(&self, role: LayerRole) -> Option<&LayerSpec> {
        self.layers.iter().find(|l| l.role == role)
    }

    pub fn interposer(&self) -> &LayerSpec {
        self.layer(LayerRole::Interposer)
            .expect("validated package has an interposer layer")
    }

    pub fn interposer_area(&self) -> f64 {
        self.interposer_width * self.interposer_height
    }
}

fn default_chiplet_thickness() -> f64 {
    150.0
}
fn is_false(b: &bool) -> bool {
    !*b
}

/// A chiplet's footprint and power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChipletSpec {
    pub name: String,
    /// Unrotated extent in mm.
    pub width: f64,
    pub height: f64,
    /// Total power in W.
    pub power: f64,
    /// Optional R×C power map in W per cell. Row 0 is the chiplet's lower
    /// edge (minimum local y), column 0 its left edge.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_map: Option<Vec<Vec<f64>>>,
    /// Thickness in µm.
    #[serde(default = "default_chiplet_thickness")]
    pub thickness: f64,
    /// Set when values were transcribed approximately from a figure.
    #[serde(default, skip_serializing_if = "is_false")]
    pub approximate: bool,
}

impl ChipletSpec {
    pub fn area(&self) -> f64 {
        self.width * self.height
    }
}

/// A point-to-point bundle of wires between two chiplets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Net {
    pub src: String,
    pub dst: String,
    pub wires: u32,
    /// Bandwidth in GB/s.
    #[serde(default)]
    pub bandwidth: f64,
    #[serde(default, skip_serializing_if = "is_false")]
    pub approximate: bool,
}

impl Net {
    pub fn name(&self) -> String {
        format!("{}->{}", self.src, self.dst)
    }
}

/// Number of wires needed to carry `bandwidth_gbps` at `gbps_per_wire`.
pub fn wires_for_bandwidth(bandwidth_gbps: f64, gbps_per_wire: f64) -> u32 {
    if bandwidth_gbps <= 0.0 || gbps_per_wire <= 0.0 {
        return 1;
    }
    ((bandwidth_gbps / gbps_per_wire).ceil() as u32).max(1)
}

/// A complete, validated architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureSpec {
    pub package: PackageConfig,
    pub materials: BTreeMap<String, Material>,
    pub chiplets: Vec<ChipletSpec>,
    #[serde(default)]
    pub nets: Vec<Net>,
}

impl ArchitectureSpec {
    pub fn name(&self) -> &str {
        &self.package.name
    }

    pub fn chiplet(&self, name: &str) -> Option<&ChipletSpec> {
        self.chiplets.iter().find(|c| c.name == name)
    }

    pub fn chiplet_index(&self, name: &str) -> Option<usize> {
        self.chiplets.iter().position(|c| c.name == name)
    }

    pub fn material(&self, name: &str) -> Option<&Material> {
        self.materials.get(name)
    }

    pub fn total_power(&self) -> f64 {
        self.chiplets.iter().map(|c| c.power).sum()
    }

    pub fn total_chiplet_area(&self) -> f64 {
        self.chiplets.iter().map(ChipletSpec::area).sum()
    }

    /// Copy of this spec with every power map removed (uniform power).
    pub fn with_uniform_power(&self) -> Self {
        let mut spec = self.clone();
        for c in &mut spec.chiplets {
            c.power_map = None;
        }
        spec
    }
}
