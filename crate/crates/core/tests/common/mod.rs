//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::collections::HashMap;

use chipstack_core::model::{ArchitectureSpec, ChipletSpec, Net};
use chipstack_core::{validate_placement, Placement, Pose};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A tiny routing instance on an integer site lattice of pitch 1 mm.
#[derive(Debug, Clone)]
pub struct TinyInstance {
    pub spec: ArchitectureSpec,
    pub placement: Placement,
    pub capacity: u32,
}

/// Random instance: `side` sites per axis, 2–4 small dies, 1–2 nets and at
/// most 3 wires in total. Dies are 0.5 mm squares on a site or 1 mm squares between sites.
pub fn tiny_instance(seed: u64, side: usize) -> TinyInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = chipstack_core::bundled::toy4();
    let span = (side - 1) as f64;
    spec.package.interposer_width = span;
    spec.package.interposer_height = span;
    let template = spec.chiplets[0].clone();
    loop {
        let n = rng.random_range(2..=4usize);
        let mut chiplets = Vec::new();
        let mut p = Placement::new();
        for i in 0..n {
            let big = rng.random_bool(0.4);
            let (size, x, y) = if big {
                let x = rng.random_range(0..side - 1) as f64 + 0.5;
                let y = rng.random_range(0..side - 1) as f64 + 0.5;
                (1.0, x, y)
            } else {
                let x = rng.random_range(1..side - 1) as f64;
                let y = rng.random_range(1..side - 1) as f64;
                (0.5, x, y)
            };
            chiplets.push(ChipletSpec {
                name: format!("d{i}"),
                width: size,
                height: size,
                power: 0.0,
                ..template.clone()
            });
            p.insert(format!("d{i}"), Pose::at(x, y));
        }
        spec.chiplets = chiplets;
        let n_nets = rng.random_range(1..=2usize);
        let mut taken_two = false;
        spec.nets = (0..n_nets)
            .map(|_| {
                let a = rng.random_range(0..n);
                let mut b = rng.random_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                let wires = rng.random_range(1..=2u32);
                let wires = if n_nets == 2 && taken_two { 1 } else { wires };
                taken_two |= wires == 2;
                Net {
                    src: format!("d{a}"),
                    dst: format!("d{b}"),
                    wires,
                    bandwidth: wires as f64,
                    approximate: false,
                }
            })
            .collect();
        if validate_placement(&p, &spec).unwrap().is_ok() {
            return TinyInstance {
                spec,
                placement: p,
                capacity: 1,
            };
        }
    }
}

type EdgeKey = (usize, usize);

struct Lattice {
    side: usize,
}

impl Lattice {
    fn neighbors(&self, s: usize) -> Vec<usize> {
        let (i, j) = (s % self.side, s / self.side);
        let mut out = Vec::new();
        if i > 0 {
            out.push(s - 1);
        }
        if i + 1 < self.side {
            out.push(s + 1);
        }
        if j > 0 {
            out.push(s - self.side);
        }
        if j + 1 < self.side {
            out.push(s + self.side);
        }
        out
    }
}

/// Sites under a die with their Manhattan distance to its center.
fn attachments(side: usize, c: &ChipletSpec, pose: &Pose) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for j in 0..side {
        for i in 0..side {
            let (x, y) = (i as f64, j as f64);
            if (x - pose.x_mm).abs() <= c.width / 2.0 + 1e-9 && (y - pose.y_mm).abs() <= c.height / 2.0 + 1e-9 {
                out.push((i + side * j, (x - pose.x_mm).abs() + (y - pose.y_mm).abs()));
            }
        }
    }
    out
}

/// One wire still to be routed: candidate start and end sites with their
/// attachment lengths.
struct Wire {
    from: Vec<(usize, f64)>,
    to: Vec<(usize, f64)>,
    /// Same terminals as the previous wire, so only non-decreasing lengths
    /// need exploring.
    twin_of_previous: bool,
    /// Multiplier on this wire's length in the objective.
    weight: f64,
}

fn manhattan(lat: &Lattice, a: usize, b: usize) -> f64 {
    let (ai, aj) = (a % lat.side, a / lat.side);
    let (bi, bj) = (b % lat.side, b / lat.side);
    (ai.abs_diff(bi) + aj.abs_diff(bj)) as f64
}

/// Depth-first branch and bound over one simple path per wire.
struct Search<'a> {
    lat: &'a Lattice,
    wires: &'a [Wire],
    /// Cheapest conceivable length of each wire, ignoring congestion.
    floor: Vec<f64>,
    capacity: u32,
    usage: HashMap<EdgeKey, u32>,
    /// Length of each routed wire on the current branch.
    wire_len: Vec<f64>,
    best: Option<f64>,
    best_len: Vec<f64>,
}

impl Search<'_> {
    fn bound_from(&self, w: usize, at: usize) -> f64 {
        self.wires[w]
            .to
            .iter()
            .map(|&(s, d)| manhattan(self.lat, at, s) + d)
            .fold(f64::INFINITY, f64::min)
    }

    fn weighted(&self, w: usize, len: f64) -> f64 {
        self.wires[w].weight * len
    }

    fn pruned(&self, estimate: f64) -> bool {
        self.best.is_some_and(|b| estimate >= b - 1e-9)
    }

    /// Routes wire `w` onwards; `base` is the length of wires already routed.
    fn wire(&mut self, w: usize, base: f64) {
        if w == self.wires.len() {
            if !self.pruned(base) {
                self.best = Some(base);
                self.best_len = self.wire_len.clone();
            }
            return;
        }
        for (s, d) in self.wires[w].from.clone() {
            let mut visited = vec![false; self.lat.side * self.lat.side];
            visited[s] = true;
            self.walk(w, s, base, d, &mut visited);
        }
    }

    /// Extends wire `w`, currently `len` long and ending at `at`.
    fn walk(&mut self, w: usize, at: usize, base: f64, len: f64, visited: &mut [bool]) {
        let min_len = if self.wires[w].twin_of_previous {
            self.wire_len[w - 1]
        } else {
            0.0
        };
        let rest: f64 = (w + 1..self.wires.len()).map(|k| self.weighted(k, self.floor[k])).sum();
        let ahead = (len + self.bound_from(w, at)).max(min_len);
        if self.pruned(base + self.weighted(w, ahead) + rest) {
            return;
        }
        if let Some(&(_, d)) = self.wires[w].to.iter().find(|(s, _)| *s == at) {
            if len + d >= min_len {
                self.wire_len[w] = len + d;
                self.wire(w + 1, base + self.weighted(w, len + d));
            }
        }
        // Most promising direction first so the bound tightens early.
        let mut next = self.lat.neighbors(at);
        next.sort_by(|&a, &b| self.bound_from(w, a).total_cmp(&self.bound_from(w, b)));
        for v in next {
            let key = (at.min(v), at.max(v));
            let used = self.usage.get(&key).copied().unwrap_or(0);
            if visited[v] || used >= self.capacity {
                continue;
            }
            visited[v] = true;
            self.usage.insert(key, used + 1);
            self.walk(w, v, base, len + 1.0, visited);
            self.usage.insert(key, used);
            visited[v] = false;
        }
    }
}

/// Jointly optimal total wirelength over every capacity-respecting choice of
/// one simple path per wire, or `None` when no choice routes every wire.
pub fn brute_force_optimum(inst: &TinyInstance) -> Option<f64> {
    optimum(inst, false).map(|v| v.iter().sum())
}

/// Optimum that first minimizes the widest net (ties by name), then the next,
/// and so on. Returns per-net lengths in that order.
pub fn lexicographic_optimum(inst: &TinyInstance) -> Option<Vec<f64>> {
    optimum(inst, true)
}

fn optimum(inst: &TinyInstance, lexicographic: bool) -> Option<Vec<f64>> {
    let side = inst.spec.package.interposer_width.round() as usize + 1;
    let lat = Lattice { side };
    let term = |name: &str| {
        let c = inst.spec.chiplet(name).unwrap();
        attachments(side, c, inst.placement.get(name).unwrap())
    };
    let mut nets: Vec<&Net> = inst.spec.nets.iter().collect();
    if lexicographic {
        nets.sort_by(|a, b| b.wires.cmp(&a.wires).then_with(|| a.name().cmp(&b.name())));
    }
    // Lengths are multiples of 0.5 mm below 100 mm, so base-1000 weights
    // make the weighted sum order like the tuple of per-net lengths.
    let mut wires = Vec::new();
    let mut owner = Vec::new();
    for (q, n) in nets.iter().enumerate() {
        let weight = if lexicographic {
            1000f64.powi((nets.len() - 1 - q) as i32)
        } else {
            1.0
        };
        for k in 0..n.wires {
            wires.push(Wire {
                from: term(&n.src),
                to: term(&n.dst),
                twin_of_previous: k > 0,
                weight,
            });
            owner.push(q);
        }
    }
    let floor = wires
        .iter()
        .map(|w| {
            let mut best = f64::INFINITY;
            for &(a, da) in &w.from {
                for &(b, db) in &w.to {
                    best = best.min(da + manhattan(&lat, a, b) + db);
                }
            }
            best
        })
        .collect();
    let mut search = Search {
        lat: &lat,
        wires: &wires,
        floor,
        capacity: inst.capacity,
        usage: HashMap::new(),
        wire_len: vec![0.0; wires.len()],
        best: None,
        best_len: Vec::new(),
    };
    search.wire(0, 0.0);
    search.best?;
    let mut per_net = vec![0.0; nets.len()];
    for (w, len) in search.best_len.iter().enumerate() {
        per_net[owner[w]] += len;
    }
    Some(per_net)
}

/// Textbook two-pass Pearson coefficient.
pub fn pearson_two_pass(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}
