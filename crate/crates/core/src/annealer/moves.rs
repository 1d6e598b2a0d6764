//! Perturbation moves.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::model::ArchitectureSpec;
use crate::placement::{validate_placement, Placement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveKind {
    Translate,
    Rotate,
    Swap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoveConfig {
    pub translate_prob: f64,
    pub rotate_prob: f64,
    pub swap_prob: f64,
    /// Translate step σ as a fraction of the interposer width, per unit annealing temperature.
    pub step_fraction: f64,
    /// Lower bound on the translate step σ, mm.
    pub min_step: f64,
    /// Candidate moves drawn before giving up.
    pub max_retries: usize,
}

impl Default for MoveConfig {
    fn default() -> Self {
        Self {
            translate_prob: 0.6,
            rotate_prob: 0.2,
            swap_prob: 0.2,
            step_fraction: 0.25,
            min_step: 0.5,
            max_retries: 100,
        }
    }
}

impl MoveConfig {
    pub fn translate_sigma(&self, interposer_width: f64, anneal_temp: f64) -> f64 {
        (self.step_fraction * interposer_width * anneal_temp).max(self.min_step)
    }

    fn draw_kind<R: Rng + ?Sized>(&self, n_chiplets: usize, rng: &mut R) -> MoveKind {
        let swap = if n_chiplets >= 2 { self.swap_prob } else { 0.0 };
        let u = rng.random::<f64>() * (self.translate_prob + self.rotate_prob + swap);
        if u < self.translate_prob {
            MoveKind::Translate
        } else if u < self.translate_prob + self.rotate_prob || swap == 0.0 {
            MoveKind::Rotate
        } else {
            MoveKind::Swap
        }
    }
}

/// Outcome of one call to [`perturb`].
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub placement: Placement,
    /// Kind of the move that produced `placement`; `None` when no feasible
    /// move was found and the input came back unchanged.
    pub kind: Option<MoveKind>,
    pub attempts: usize,
}

impl Perturbation {
    pub fn moved(&self) -> bool {
        self.kind.is_some()
    }
}

/// One random feasible neighbor of `p`. `p` must name every chiplet of `spec`.
pub fn perturb<R: Rng + ?Sized>(
    spec: &ArchitectureSpec,
    p: &Placement,
    anneal_temp: f64,
    cfg: &MoveConfig,
    rng: &mut R,
) -> Perturbation {
    let n = spec.chiplets.len();
    if n == 0 {
        return Perturbation { placement: p.clone(), kind: None, attempts: 0 };
    }
    let sigma = cfg.translate_sigma(spec.package.interposer_width, anneal_temp);
    let step = Normal::new(0.0, sigma).expect("positive step");
    for attempt in 1..=cfg.max_retries {
        let kind = cfg.draw_kind(n, rng);
        let mut q = p.clone();
        match kind {
            MoveKind::Translate => {
                let name = &spec.chiplets[rng.random_range(0..n)].name;
                let (dx, dy) = (step.sample(rng), step.sample(rng));
                let pose = q.get_mut(name).expect("placement covers the spec");
                pose.x_mm += dx;
                pose.y_mm += dy;
            }
            MoveKind::Rotate => {
                let name = &spec.chiplets[rng.random_range(0..n)].name;
                let pose = q.get_mut(name).expect("placement covers the spec");
                pose.rot_deg = pose.rot_deg.quarter_turn();
            }
            MoveKind::Swap => {
                let i = rng.random_range(0..n);
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                let (a, b) = (&spec.chiplets[i].name, &spec.chiplets[j].name);
                let (pa, pb) = (q.entries[a], q.entries[b]);
                for (name, to) in [(a, pb), (b, pa)] {
                    let pose = q.get_mut(name).expect("placement covers the spec");
                    pose.x_mm = to.x_mm;
                    pose.y_mm = to.y_mm;
                }
            }
        }
        if validate_placement(&q, spec).is_ok_and(|f| f.is_ok()) {
            return Perturbation { placement: q, kind: Some(kind), attempts: attempt };
        }
    }
    Perturbation { placement: p.clone(), kind: None, attempts: cfg.max_retries }
}
