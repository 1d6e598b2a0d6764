use thiserror::Error;

use crate::model::ArchitectureSpec;
use crate::placement::{Placement, PlacementError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RouteError {
    #[error("pitch must be > 0 (got {0})")]
    BadPitch(f64),
    #[error("edge capacity must be >= 1")]
    ZeroCapacity,
    #[error(transparent)]
    Placement(#[from] PlacementError),
    #[error("chiplet `{0}` covers no bump site; pitch is too coarse")]
    NoSites(String),
    #[error("net endpoint `{0}` is not a chiplet of this graph")]
    UnknownEndpoint(String),
}

/// Undirected link between two neighboring bump sites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub length_mm: f64,
}

/// Virtual node standing for a chiplet, wired to every site under it.
#[derive(Debug, Clone, PartialEq)]
pub struct Terminal {
    pub chiplet: String,
    pub x_mm: f64,
    pub y_mm: f64,
    /// (site, attachment length in mm).
    pub sites: Vec<(usize, f64)>,
}

/// Microbump site lattice with 4-neighbor links.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingGraph {
    pub pitch: f64,
    /// Sites per axis.
    pub nx: usize,
    pub ny: usize,
    /// Wires per edge.
    pub capacity: u32,
    pub edges: Vec<Edge>,
    /// Per site: (edge index, neighbor site).
    pub adjacency: Vec<Vec<(usize, usize)>>,
    /// One per chiplet, in spec order.
    pub terminals: Vec<Terminal>,
}

impl RoutingGraph {
    pub fn n_sites(&self) -> usize {
        self.nx * self.ny
    }

    pub fn site(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    /// Site position in mm.
    pub fn site_xy(&self, s: usize) -> (f64, f64) {
        ((s % self.nx) as f64 * self.pitch, (s / self.nx) as f64 * self.pitch)
    }

    pub fn terminal(&self, chiplet: &str) -> Option<usize> {
        self.terminals.iter().position(|t| t.chiplet == chiplet)
    }
}

/// Lays a site grid of `pitch` mm over the interposer, starting at its
/// origin corner, and attaches each chiplet to the sites under its footprint.
///
/// Attachment links cost the Manhattan distance from the chiplet center to the
/// site, so a routed net is never shorter than its center-to-center distance.
pub fn build_routing_graph(
    spec: &ArchitectureSpec,
    p: &Placement,
    pitch: f64,
    capacity: u32,
) -> Result<RoutingGraph, RouteError> {
    if !(pitch > 0.0 && pitch.is_finite()) {
        return Err(RouteError::BadPitch(pitch));
    }
    if capacity == 0 {
        return Err(RouteError::ZeroCapacity);
    }
    let pkg = &spec.package;
    let nx = (pkg.interposer_width / pitch + 1e-9).floor() as usize + 1;
    let ny = (pkg.interposer_height / pitch + 1e-9).floor() as usize + 1;

    let mut edges = Vec::with_capacity(2 * nx * ny);
    let mut adjacency = vec![Vec::new(); nx * ny];
    let mut link = |a: usize, b: usize, edges: &mut Vec<Edge>| {
        let e = edges.len();
        edges.push(Edge { a, b, length_mm: pitch });
        adjacency[a].push((e, b));
        adjacency[b].push((e, a));
    };
    for j in 0..ny {
        for i in 0..nx {
            let s = i + nx * j;
            if i + 1 < nx {
                link(s, s + 1, &mut edges);
            }
            if j + 1 < ny {
                link(s, s + nx, &mut edges);
            }
        }
    }

    let mut terminals = Vec::with_capacity(spec.chiplets.len());
    for c in &spec.chiplets {
        let pose = p
            .get(&c.name)
            .ok_or_else(|| PlacementError::MissingChiplet(c.name.clone()))?;
        let r = crate::placement::footprint(c, pose);
        let i0 = ((r.x0 / pitch) - 1e-9).ceil().max(0.0) as usize;
        let j0 = ((r.y0 / pitch) - 1e-9).ceil().max(0.0) as usize;
        let mut sites = Vec::new();
        for j in j0..ny {
            let y = j as f64 * pitch;
            if y > r.y1 + 1e-9 {
                break;
            }
            for i in i0..nx {
                let x = i as f64 * pitch;
                if x > r.x1 + 1e-9 {
                    break;
                }
                if r.contains(x, y) {
                    let attach = (x - pose.x_mm).abs() + (y - pose.y_mm).abs();
                    sites.push((i + nx * j, attach));
                }
            }
        }
        if sites.is_empty() {
            return Err(RouteError::NoSites(c.name.clone()));
        }
        terminals.push(Terminal {
            chiplet: c.name.clone(),
            x_mm: pose.x_mm,
            y_mm: pose.y_mm,
            sites,
        });
    }

    Ok(RoutingGraph {
        pitch,
        nx,
        ny,
        capacity,
        edges,
        adjacency,
        terminals,
    })
}
