//! Chiplet placements on the interposer and their legality checks.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ArchitectureSpec, ChipletSpec};

const GEOM_EPS: f64 = 1e-9;

/// Quarter-turn chiplet orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub enum Rotation {
    #[default]
    R0,
    R90,
    R180,
    R270,
}

impl Rotation {
    pub const ALL: [Rotation; 4] = [Rotation::R0, Rotation::R90, Rotation::R180, Rotation::R270];

    pub fn degrees(self) -> u32 {
        match self {
            Rotation::R0 => 0,
            Rotation::R90 => 90,
            Rotation::R180 => 180,
            Rotation::R270 => 270,
        }
    }

    pub fn from_degrees(deg: u32) -> Option<Self> {
        match deg % 360 {
            0 => Some(Rotation::R0),
            90 => Some(Rotation::R90),
            180 => Some(Rotation::R180),
            270 => Some(Rotation::R270),
            _ => None,
        }
    }

    pub fn quarter_turn(self) -> Self {
        Self::from_degrees(self.degrees() + 90).unwrap()
    }

    /// Odd quarter turns swap a chiplet's width and height.
    pub fn swaps_axes(self) -> bool {
        matches!(self, Rotation::R90 | Rotation::R270)
    }

    /// Rotates a local offset (counter-clockwise) into interposer axes.
    pub fn apply(self, u: f64, v: f64) -> (f64, f64) {
        match self {
            Rotation::R0 => (u, v),
            Rotation::R90 => (-v, u),
            Rotation::R180 => (-u, -v),
            Rotation::R270 => (v, -u),
        }
    }

    /// Inverse of [`Rotation::apply`].
    pub fn unapply(self, x: f64, y: f64) -> (f64, f64) {
        match self {
            Rotation::R0 => (x, y),
            Rotation::R90 => (y, -x),
            Rotation::R180 => (-x, -y),
            Rotation::R270 => (-y, x),
        }
    }
}

impl Serialize for Rotation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u32(self.degrees())
    }
}

impl<'de> Deserialize<'de> for Rotation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let deg = u32::deserialize(d)?;
        Rotation::from_degrees(deg)
            .ok_or_else(|| serde::de::Error::custom(format!("rotation {deg} is not a multiple of 90")))
    }
}

/// Axis-aligned rectangle in interposer coordinates (mm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn centered(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self {
            x0: cx - w / 2.0,
            y0: cy - h / 2.0,
            x1: cx + w / 2.0,
            y1: cy + h / 2.0,
        }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 - GEOM_EPS
            && x <= self.x1 + GEOM_EPS
            && y >= self.y0 - GEOM_EPS
            && y <= self.y1 + GEOM_EPS
    }

    /// Largest axis separation; negative when the interiors overlap.
    pub fn clearance(&self, other: &Rect) -> f64 {
        let gap_x = (other.x0 - self.x1).max(self.x0 - other.x1);
        let gap_y = (other.y0 - self.y1).max(self.y0 - other.y1);
        gap_x.max(gap_y)
    }
}

/// Center position (mm) and orientation of one chiplet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pose {
    pub x_mm: f64,
    pub y_mm: f64,
    pub rot_deg: Rotation,
}

impl Pose {
    pub fn new(x_mm: f64, y_mm: f64, rot_deg: Rotation) -> Self {
        Self { x_mm, y_mm, rot_deg }
    }

    pub fn at(x_mm: f64, y_mm: f64) -> Self {
        Self::new(x_mm, y_mm, Rotation::R0)
    }
}

/// Effective (rotated) width and height of a chiplet.
pub fn rotated_extent(chiplet: &ChipletSpec, rot: Rotation) -> (f64, f64) {
    if rot.swaps_axes() {
        (chiplet.height, chiplet.width)
    } else {
        (chiplet.width, chiplet.height)
    }
}

pub fn footprint(chiplet: &ChipletSpec, pose: &Pose) -> Rect {
    let (w, h) = rotated_extent(chiplet, pose.rot_deg);
    Rect::centered(pose.x_mm, pose.y_mm, w, h)
}

/// Map from chiplet name to pose. Serialized as a JSON object.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Placement {
    pub entries: BTreeMap<String, Pose>,
}

impl Placement {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, pose: Pose) {
        self.entries.insert(name.into(), pose);
    }

    pub fn get(&self, name: &str) -> Option<&Pose> {
        self.entries.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Pose> {
        self.entries.get_mut(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Footprints in the spec's chiplet order. Panics on a missing chiplet;
    /// call [`validate_placement`] first.
    pub fn footprints(&self, spec: &ArchitectureSpec) -> Vec<Rect> {
        spec.chiplets
            .iter()
            .map(|c| footprint(c, &self.entries[&c.name]))
            .collect()
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        let mut out = self.clone();
        for pose in out.entries.values_mut() {
            pose.x_mm += dx;
            pose.y_mm += dy;
        }
        out
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("placement serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlacementError {
    #[error("placement has no entry for chiplet `{0}`")]
    MissingChiplet(String),
    #[error("placement names unknown chiplet `{0}`")]
    UnknownChiplet(String),
}

/// One broken legality rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    /// Chiplet rectangle leaves the interposer.
    Boundary { chiplet: String, rect: [f64; 4] },
    /// Two rectangles overlap.
    Overlap { a: String, b: String },
    /// Two rectangles are closer than the minimum spacing.
    Spacing { a: String, b: String, clearance: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Boundary { chiplet, rect } => write!(
                f,
                "chiplet `{chiplet}` extends past the interposer boundary: [{:.3}, {:.3}] x [{:.3}, {:.3}] mm",
                rect[0], rect[2], rect[1], rect[3]
            ),
            Violation::Overlap { a, b } => write!(f, "chiplets `{a}` and `{b}` overlap"),
            Violation::Spacing { a, b, clearance } => {
                write!(f, "chiplets `{a}` and `{b}` are only {clearance:.3} mm apart")
            }
        }
    }
}

/// Feasibility verdict: empty violation list means legal.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Feasibility {
    pub violations: Vec<Violation>,
}

impl Feasibility {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks boundary containment, overlap and minimum spacing.
pub fn validate_placement(
    p: &Placement,
    spec: &ArchitectureSpec,
) -> Result<Feasibility, PlacementError> {
    for c in &spec.chiplets {
        if !p.entries.contains_key(&c.name) {
            return Err(PlacementError::MissingChiplet(c.name.clone()));
        }
    }
    if let Some(extra) = p.entries.keys().find(|k| spec.chiplet(k).is_none()) {
        return Err(PlacementError::UnknownChiplet(extra.clone()));
    }
    Ok(check_rects(spec, &p.footprints(spec)))
}

pub(crate) fn check_rects(spec: &ArchitectureSpec, rects: &[Rect]) -> Feasibility {
    let pkg = &spec.package;
    let mut violations = Vec::new();
    for (c, r) in spec.chiplets.iter().zip(rects) {
        if r.x0 < -GEOM_EPS
            || r.y0 < -GEOM_EPS
            || r.x1 > pkg.interposer_width + GEOM_EPS
            || r.y1 > pkg.interposer_height + GEOM_EPS
        {
            violations.push(Violation::Boundary {
                chiplet: c.name.clone(),
                rect: [r.x0, r.y0, r.x1, r.y1],
            });
        }
    }
    for i in 0..rects.len() {
        for j in i + 1..rects.len() {
            let gap = rects[i].clearance(&rects[j]);
            let (a, b) = (spec.chiplets[i].name.clone(), spec.chiplets[j].name.clone());
            if gap < -GEOM_EPS {
                violations.push(Violation::Overlap { a, b });
            } else if gap < pkg.min_spacing - GEOM_EPS {
                violations.push(Violation::Spacing { a, b, clearance: gap });
            }
        }
    }
    Feasibility { violations }
}
