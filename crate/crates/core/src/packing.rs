//! Initial placement generation.
//!
//! [`initial_placement`] is a shelf packer: chiplets are laid out in rows
//! separated by the minimum spacing and the packed block is centered on the
//! interposer. Two deterministic orderings are tried first, then a bounded
//! number of seeded random orderings and orientations.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::ArchitectureSpec;
use crate::placement::{check_rects, rotated_extent, Placement, Pose, Rect, Rotation};

const RANDOM_ORDER_ATTEMPTS: usize = 256;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PackingError {
    #[error(
        "chiplets do not fit on the interposer after {attempts} attempts \
         (area utilization {:.1}%)", utilization * 100.0
    )]
    Exhausted { attempts: usize, utilization: f64 },
}

fn utilization(spec: &ArchitectureSpec) -> f64 {
    spec.total_chiplet_area() / spec.package.interposer_area()
}

/// Deterministic feasible starting placement for `seed`.
pub fn initial_placement(spec: &ArchitectureSpec, seed: u64) -> Result<Placement, PackingError> {
    let util = utilization(spec);
    let n = spec.chiplets.len();
    if util > 1.0 {
        return Err(PackingError::Exhausted {
            attempts: 0,
            utilization: util,
        });
    }

    let mut by_height: Vec<usize> = (0..n).collect();
    by_height.sort_by(|&a, &b| {
        let (ca, cb) = (&spec.chiplets[a], &spec.chiplets[b]);
        cb.height
            .total_cmp(&ca.height)
            .then(cb.width.total_cmp(&ca.width))
            .then(ca.name.cmp(&cb.name))
    });
    let upright = vec![Rotation::R0; n];
    let landscape: Vec<Rotation> = spec
        .chiplets
        .iter()
        .map(|c| if c.height > c.width { Rotation::R90 } else { Rotation::R0 })
        .collect();

    let mut attempts = 0;
    for rots in [&upright, &landscape] {
        attempts += 1;
        if let Some(p) = shelf_pack(spec, &by_height, rots) {
            return Ok(p);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order = by_height.clone();
    for _ in 0..RANDOM_ORDER_ATTEMPTS {
        attempts += 1;
        order.shuffle(&mut rng);
        let rots: Vec<Rotation> = (0..n)
            .map(|_| if rng.random_bool(0.5) { Rotation::R90 } else { Rotation::R0 })
            .collect();
        if let Some(p) = shelf_pack(spec, &order, &rots) {
            return Ok(p);
        }
    }
    Err(PackingError::Exhausted {
        attempts,
        utilization: util,
    })
}

fn shelf_pack(spec: &ArchitectureSpec, order: &[usize], rots: &[Rotation]) -> Option<Placement> {
    let pkg = &spec.package;
    let (w_max, h_max) = (pkg.interposer_width, pkg.interposer_height);
    let s = pkg.min_spacing;

    let mut placed = vec![(0.0, 0.0); spec.chiplets.len()];
    let (mut x, mut row_y, mut row_h, mut block_w) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for &i in order {
        let (w, h) = rotated_extent(&spec.chiplets[i], rots[i]);
        if w > w_max {
            return None;
        }
        if x > 0.0 && x + w > w_max + 1e-9 {
            row_y += row_h + s;
            x = 0.0;
            row_h = 0.0;
        }
        placed[i] = (x + w / 2.0, row_y + h / 2.0);
        x += w;
        block_w = block_w.max(x);
        x += s;
        row_h = row_h.max(h);
    }
    let block_h = row_y + row_h;
    if block_h > h_max + 1e-9 {
        return None;
    }

    let (ox, oy) = ((w_max - block_w) / 2.0, (h_max - block_h) / 2.0);
    let mut p = Placement::new();
    for (i, c) in spec.chiplets.iter().enumerate() {
        p.insert(c.name.clone(), Pose::new(placed[i].0 + ox, placed[i].1 + oy, rots[i]));
    }
    let rects = p.footprints(spec);
    check_rects(spec, &rects).is_ok().then_some(p)
}

/// Uniformly scattered feasible placement, or `None` after `max_attempts`
/// restarts.
pub fn random_placement<R: Rng + ?Sized>(
    spec: &ArchitectureSpec,
    rng: &mut R,
    max_attempts: usize,
) -> Option<Placement> {
    const TRIES_PER_CHIPLET: usize = 200;
    let pkg = &spec.package;
    let n = spec.chiplets.len();
    let mut order: Vec<usize> = (0..n).collect();

    'attempt: for _ in 0..max_attempts {
        order.shuffle(rng);
        let mut rects: Vec<(usize, Rect, Pose)> = Vec::with_capacity(n);
        for &i in &order {
            let c = &spec.chiplets[i];
            let rot = Rotation::ALL[rng.random_range(0..4)];
            let (w, h) = rotated_extent(c, rot);
            if w > pkg.interposer_width || h > pkg.interposer_height {
                continue 'attempt;
            }
            let mut found = None;
            for _ in 0..TRIES_PER_CHIPLET {
                let x = w / 2.0 + rng.random::<f64>() * (pkg.interposer_width - w);
                let y = h / 2.0 + rng.random::<f64>() * (pkg.interposer_height - h);
                let r = Rect::centered(x, y, w, h);
                if rects
                    .iter()
                    .all(|(_, o, _)| r.clearance(o) >= pkg.min_spacing + 1e-9)
                {
                    found = Some((r, Pose::new(x, y, rot)));
                    break;
                }
            }
            match found {
                Some((r, pose)) => rects.push((i, r, pose)),
                None => continue 'attempt,
            }
        }
        let mut p = Placement::new();
        for (i, _, pose) in rects {
            p.insert(spec.chiplets[i].name.clone(), pose);
        }
        return Some(p);
    }
    None
}
