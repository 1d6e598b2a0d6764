use thiserror::Error;

use crate::model::{ArchitectureSpec, LayerRole, Material};
use crate::placement::{validate_placement, Placement, PlacementError, Rect};

/// One voxel slab in the vertical direction.
#[derive(Debug, Clone, PartialEq)]
pub struct ZCell {
    /// Index of the owning layer in the package stack.
    pub layer: usize,
    pub role: LayerRole,
    /// Thickness in mm.
    pub dz: f64,
    /// Index of this slab in the full grid (kept when a plane is extracted).
    pub z_index: usize,
}

/// Grid layout shared by voxel grids and fields.
#[derive(Debug, Clone, PartialEq)]
pub struct GridGeometry {
    pub nx: usize,
    pub ny: usize,
    /// Lateral pitch in mm.
    pub dx: f64,
    pub dy: f64,
    pub z: Vec<ZCell>,
}

impl GridGeometry {
    pub fn nz(&self) -> usize {
        self.z.len()
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny * self.nz()
    }

    pub fn n_columns(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.nx * (j + self.ny * k)
    }

    /// Cell center in mm.
    pub fn x_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    pub fn y_center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dy
    }

    /// Resolves a plane selector to a local z index.
    pub fn plane_index(&self, plane: PlaneSelector) -> Option<usize> {
        match plane {
            PlaneSelector::Index(k) => (k < self.nz()).then_some(k),
            PlaneSelector::Top(role) => self.z.iter().rposition(|z| z.role == role),
            PlaneSelector::Bottom(role) => self.z.iter().position(|z| z.role == role),
        }
    }

    /// Geometry of a single horizontal plane.
    pub fn plane(&self, k: usize) -> GridGeometry {
        GridGeometry {
            nx: self.nx,
            ny: self.ny,
            dx: self.dx,
            dy: self.dy,
            z: vec![self.z[k].clone()],
        }
    }

    pub fn z_range(&self, role: LayerRole) -> std::ops::Range<usize> {
        let first = self.z.iter().position(|z| z.role == role);
        match first {
            Some(a) => {
                let b = self.z.iter().rposition(|z| z.role == role).unwrap() + 1;
                a..b
            }
            None => 0..0,
        }
    }
}

/// Selects a horizontal plane of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlaneSelector {
    /// Topmost voxel slab of a layer.
    Top(LayerRole),
    /// Bottommost voxel slab of a layer.
    Bottom(LayerRole),
    Index(usize),
}

impl PlaneSelector {
    pub const INTERPOSER_TOP: PlaneSelector = PlaneSelector::Top(LayerRole::Interposer);
}

#[derive(Debug, Error)]
pub enum GridError {
    #[error("resolution must be > 0 (got {0})")]
    BadResolution(f64),
    #[error(transparent)]
    Placement(#[from] PlacementError),
    #[error("placement is infeasible: {0}")]
    Infeasible(String),
    #[error("chiplet `{0}` covers no grid cell; resolution is too coarse")]
    ChipletTooSmall(String),
    #[error("malformed grid: {0}")]
    Malformed(String),
}

/// Palette index reserved for air.
pub const AIR: u16 = 0;

/// Voxelized package: per-cell material and volumetric heat source.
#[derive(Debug, Clone)]
pub struct VoxelGrid {
    pub geometry: GridGeometry,
    /// Material palette. Entry [`AIR`] is always air.
    pub materials: Vec<Material>,
    pub cell_material: Vec<u16>,
    /// Volumetric heat source in W/m³.
    pub source: Vec<f64>,
    /// Owning chiplet (spec index) of each lateral column, if any.
    pub column_chiplet: Vec<Option<usize>>,
    /// Material of the interposer layer, used as the CTE reference.
    pub interposer_material: u16,
}

impl VoxelGrid {
    /// Builds a grid from raw arrays, checking their shapes.
    pub fn from_parts(
        geometry: GridGeometry,
        materials: Vec<Material>,
        cell_material: Vec<u16>,
        source: Vec<f64>,
        interposer_material: u16,
    ) -> Result<Self, GridError> {
        let n = geometry.n_cells();
        if cell_material.len() != n || source.len() != n {
            return Err(GridError::Malformed(format!(
                "expected {n} cells, got {} materials and {} sources",
                cell_material.len(),
                source.len()
            )));
        }
        if materials.is_empty() || !materials[AIR as usize].is_void() {
            return Err(GridError::Malformed("palette entry 0 must be air".into()));
        }
        if cell_material.iter().any(|&m| m as usize >= materials.len()) {
            return Err(GridError::Malformed("cell references a missing material".into()));
        }
        if source.iter().any(|s| !s.is_finite()) {
            return Err(GridError::Malformed("non-finite heat source".into()));
        }
        let columns = geometry.n_columns();
        Ok(Self {
            geometry,
            materials,
            cell_material,
            source,
            column_chiplet: vec![None; columns],
            interposer_material,
        })
    }

    pub fn material_of(&self, cell: usize) -> &Material {
        &self.materials[self.cell_material[cell] as usize]
    }

    /// Cell volume in m³.
    pub fn cell_volume_m3(&self, k: usize) -> f64 {
        let g = &self.geometry;
        g.dx * g.dy * g.z[k].dz * 1e-9
    }

    /// Total injected power in W.
    pub fn total_power(&self) -> f64 {
        let g = &self.geometry;
        let per_plane = g.n_columns();
        self.source
            .iter()
            .enumerate()
            .map(|(c, s)| s * self.cell_volume_m3(c / per_plane))
            .sum()
    }
}

/// Voxelizes `spec` under placement `p` at `resolution` lateral cells per mm.
///
/// Footprint-only layers (microbumps, chiplets) take the layer material under
/// chiplets and the gap fill elsewhere. Bump layers are homogenized with their
/// underfill. A chiplet owns every column whose center lies in its footprint;
/// its power (or power map) is spread over those columns.
pub fn build_grid(spec: &ArchitectureSpec, p: &Placement, resolution: f64) -> Result<VoxelGrid, GridError> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(GridError::BadResolution(resolution));
    }
    let verdict = validate_placement(p, spec)?;
    if let Some(v) = verdict.violations.first() {
        return Err(GridError::Infeasible(v.to_string()));
    }
    let pkg = &spec.package;
    let nx = ((pkg.interposer_width * resolution).round() as usize).max(1);
    let ny = ((pkg.interposer_height * resolution).round() as usize).max(1);

    let mut materials = vec![Material::air()];
    let gap_fill = match &pkg.gap_fill {
        Some(name) => {
            materials.push(spec.materials[name].clone());
            (materials.len() - 1) as u16
        }
        None => AIR,
    };

    let mut z = Vec::new();
    let mut layer_material = Vec::with_capacity(pkg.layers.len());
    for (li, layer) in pkg.layers.iter().enumerate() {
        let base = &spec.materials[&layer.material];
        let m = if layer.role.is_bump() {
            let fill = match &layer.underfill {
                Some(u) => spec.materials[u].clone(),
                None => Material::air(),
            };
            Material::homogenize(base, &fill, layer.bump_fraction.unwrap_or(crate::config::DEFAULT_BUMP_FRACTION))
        } else {
            base.clone()
        };
        materials.push(m);
        layer_material.push((materials.len() - 1) as u16);
        let n = layer.z_cells() as usize;
        for _ in 0..n {
            let z_index = z.len();
            z.push(ZCell {
                layer: li,
                role: layer.role,
                dz: layer.thickness_mm() / n as f64,
                z_index,
            });
        }
    }
    let geometry = GridGeometry {
        nx,
        ny,
        dx: pkg.interposer_width / nx as f64,
        dy: pkg.interposer_height / ny as f64,
        z,
    };

    let rects = p.footprints(spec);
    let column_chiplet = assign_columns(&geometry, &rects);
    for (ci, c) in spec.chiplets.iter().enumerate() {
        if !column_chiplet.iter().any(|o| *o == Some(ci)) {
            return Err(GridError::ChipletTooSmall(c.name.clone()));
        }
    }

    let n_cells = geometry.n_cells();
    let per_plane = geometry.n_columns();
    let mut cell_material = vec![AIR; n_cells];
    for (k, zc) in geometry.z.iter().enumerate() {
        let lm = layer_material[zc.layer];
        for col in 0..per_plane {
            cell_material[k * per_plane + col] = if zc.role.is_footprint_only() {
                if column_chiplet[col].is_some() { lm } else { gap_fill }
            } else {
                lm
            };
        }
    }

    let column_power = distribute_power(spec, p, &geometry, &column_chiplet);
    let chiplet_layer = pkg
        .layers
        .iter()
        .position(|l| l.role == LayerRole::Chiplet)
        .expect("validated stack has a chiplet layer");
    let layer_thickness_m = pkg.layers[chiplet_layer].thickness_mm() * 1e-3;
    let column_area_m2 = geometry.dx * geometry.dy * 1e-6;
    let mut source = vec![0.0; n_cells];
    for (k, zc) in geometry.z.iter().enumerate() {
        if zc.layer != chiplet_layer {
            continue;
        }
        for col in 0..per_plane {
            if column_power[col] != 0.0 {
                source[k * per_plane + col] = column_power[col] / (column_area_m2 * layer_thickness_m);
            }
        }
    }

    let interposer_material = layer_material[pkg
        .layers
        .iter()
        .position(|l| l.role == LayerRole::Interposer)
        .expect("validated stack has an interposer")];
    let mut grid = VoxelGrid::from_parts(geometry, materials, cell_material, source, interposer_material)?;
    grid.column_chiplet = column_chiplet;
    Ok(grid)
}

fn assign_columns(g: &GridGeometry, rects: &[Rect]) -> Vec<Option<usize>> {
    let mut owner = vec![None; g.n_columns()];
    for j in 0..g.ny {
        let y = g.y_center(j);
        for i in 0..g.nx {
            let x = g.x_center(i);
            owner[i + g.nx * j] = rects.iter().position(|r| r.contains(x, y));
        }
    }
    owner
}

/// Power (W) injected into each lateral column.
fn distribute_power(
    spec: &ArchitectureSpec,
    p: &Placement,
    g: &GridGeometry,
    owner: &[Option<usize>],
) -> Vec<f64> {
    let mut power = vec![0.0; g.n_columns()];
    for (ci, chiplet) in spec.chiplets.iter().enumerate() {
        let cols: Vec<usize> = (0..owner.len()).filter(|&c| owner[c] == Some(ci)).collect();
        let Some(map) = &chiplet.power_map else {
            let share = chiplet.power / cols.len() as f64;
            for &c in &cols {
                power[c] = share;
            }
            continue;
        };
        let pose = p.entries[&chiplet.name];
        let (rows, ncols) = (map.len(), map[0].len());
        let (w, h) = (chiplet.width, chiplet.height);
        // Unrotated local coordinates of each column center, origin at the
        // chiplet's lower-left corner.
        let local = |c: usize| {
            let (i, j) = (c % g.nx, c / g.nx);
            let (u, v) = pose
                .rot_deg
                .unapply(g.x_center(i) - pose.x_mm, g.y_center(j) - pose.y_mm);
            (u + w / 2.0, v + h / 2.0)
        };
        let mut bins: Vec<Vec<usize>> = vec![Vec::new(); rows * ncols];
        for &c in &cols {
            let (u, v) = local(c);
            let mc = ((u / w * ncols as f64).floor() as isize).clamp(0, ncols as isize - 1) as usize;
            let mr = ((v / h * rows as f64).floor() as isize).clamp(0, rows as isize - 1) as usize;
            bins[mr * ncols + mc].push(c);
        }
        for r in 0..rows {
            for m in 0..ncols {
                let watts = map[r][m];
                if watts == 0.0 {
                    continue;
                }
                let bin = &bins[r * ncols + m];
                if bin.is_empty() {
                    // Map cell finer than the grid: hand its power to the
                    // nearest owned column.
                    let (mu, mv) = ((m as f64 + 0.5) * w / ncols as f64, (r as f64 + 0.5) * h / rows as f64);
                    let nearest = cols
                        .iter()
                        .copied()
                        .min_by(|&a, &b| {
                            let (ua, va) = local(a);
                            let (ub, vb) = local(b);
                            let da = (ua - mu).powi(2) + (va - mv).powi(2);
                            let db = (ub - mu).powi(2) + (vb - mv).powi(2);
                            da.total_cmp(&db)
                        })
                        .expect("chiplet owns at least one column");
                    power[nearest] += watts;
                } else {
                    let share = watts / bin.len() as f64;
                    for &c in bin {
                        power[c] += share;
                    }
                }
            }
        }
    }
    power
}
