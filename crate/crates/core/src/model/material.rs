use serde::{Deserialize, Serialize};

/// Broad material family, used to pick a default density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaterialClass {
    Silicon,
    CopperAlloy,
    Fr4,
    Solder,
    Indium,
    Sio2,
}

impl MaterialClass {
    /// Typical density in kg/m³.
    pub fn default_density(self) -> f64 {
        match self {
            MaterialClass::Silicon => 2330.0,
            MaterialClass::CopperAlloy => 8900.0,
            MaterialClass::Fr4 => 1850.0,
            MaterialClass::Solder => 8400.0,
            MaterialClass::Indium => 7310.0,
            MaterialClass::Sio2 => 2200.0,
        }
    }
}

fn default_poisson() -> f64 {
    0.25
}

/// Isotropic thermal and elastic properties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    /// Filled from the key of the `materials` table.
    #[serde(skip)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<MaterialClass>,
    /// W/(m·K).
    pub thermal_conductivity: f64,
    /// ppm/°C.
    pub cte: f64,
    /// GPa.
    pub youngs_modulus: f64,
    #[serde(default = "default_poisson")]
    pub poisson_ratio: f64,
    /// kg/m³. Filled from `class` when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
}

impl Material {
    pub fn new(name: &str, thermal_conductivity: f64, cte: f64, youngs_modulus: f64) -> Self {
        Self {
            name: name.to_string(),
            class: None,
            thermal_conductivity,
            cte,
            youngs_modulus,
            poisson_ratio: default_poisson(),
            density: None,
        }
    }

    pub fn with_density(mut self, density: f64) -> Self {
        self.density = Some(density);
        self
    }

    pub fn with_poisson(mut self, nu: f64) -> Self {
        self.poisson_ratio = nu;
        self
    }

    /// Still air; conducts weakly and carries no stress.
    pub fn air() -> Self {
        Self {
            name: "air".to_string(),
            class: None,
            thermal_conductivity: 0.026,
            cte: 0.0,
            youngs_modulus: 0.0,
            poisson_ratio: 0.0,
            density: Some(1.2),
        }
    }

    pub fn is_void(&self) -> bool {
        self.youngs_modulus == 0.0
    }

    /// Rule-of-mixtures blend of a bump material and its fill.
    pub fn homogenize(bump: &Material, fill: &Material, bump_fraction: f64) -> Material {
        let f = bump_fraction;
        let mix = |a: f64, b: f64| f * a + (1.0 - f) * b;
        let density = match (bump.density, fill.density) {
            (Some(a), Some(b)) => Some(mix(a, b)),
            _ => None,
        };
        Material {
            name: format!("{}+{}", bump.name, fill.name),
            class: None,
            thermal_conductivity: mix(bump.thermal_conductivity, fill.thermal_conductivity),
            cte: mix(bump.cte, fill.cte),
            youngs_modulus: mix(bump.youngs_modulus, fill.youngs_modulus),
            poisson_ratio: mix(bump.poisson_ratio, fill.poisson_ratio),
            density,
        }
    }

    pub(crate) fn check(&self) -> Result<(), String> {
        let n = &self.name;
        if !(self.thermal_conductivity > 0.0) {
            return Err(format!("material `{n}`: thermal_conductivity must be > 0"));
        }
        if !(self.youngs_modulus > 0.0) {
            return Err(format!("material `{n}`: youngs_modulus must be > 0"));
        }
        if !(0.0..0.5).contains(&self.poisson_ratio) {
            return Err(format!("material `{n}`: poisson_ratio must lie in [0, 0.5)"));
        }
        if !(self.cte >= 0.0) {
            return Err(format!("material `{n}`: cte must be >= 0"));
        }
        if let Some(d) = self.density {
            if !(d > 0.0) {
                return Err(format!("material `{n}`: density must be > 0"));
            }
        }
        Ok(())
    }
}
