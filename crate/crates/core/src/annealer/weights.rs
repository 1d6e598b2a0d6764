//! Adaptive cost weights, normalized cost and the acceptance rule.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Objective;
use crate::eval::CandidateEvaluation;

/// Below this peak temperature (°C) the temperature term is switched off.
pub const TEMP_GATE: f64 = 75.0;
const TEMP_CAP: f64 = 0.5;
const STRESS_FLOOR: f64 = 0.1;
const STRESS_CAP: f64 = 0.5;
/// Temperature scale (°C) of the fallback cost.
pub const FALLBACK_TEMP_SCALE: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeightError {
    #[error("sigma_max must be positive, got {0}")]
    NonPositiveSigmaMax(f64),
    #[error("stress must be finite and non-negative, got {0}")]
    InvalidStress(f64),
}

/// Temperature weight `a` from the previous and candidate peak temperatures.
pub fn temperature_weight(t_old: f64, t_new: f64) -> f64 {
    let m = t_old.max(t_new);
    if !(m >= TEMP_GATE) {
        return 0.0;
    }
    let ramp = (0.1 + 0.01 * (m - 23.0)).min(TEMP_CAP);
    (ramp * (m - 60.0) / 40.0).clamp(0.0, TEMP_CAP)
}

/// Stress weight `b`: a 0.1 floor rising with (σ/σ_max)^1.5, capped at 0.5.
pub fn stress_weight(s_old: f64, s_new: f64, s_max: f64) -> Result<f64, WeightError> {
    if !(s_max > 0.0) {
        return Err(WeightError::NonPositiveSigmaMax(s_max));
    }
    for s in [s_old, s_new] {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(WeightError::InvalidStress(s));
        }
    }
    let ratio = s_old.max(s_new) / s_max;
    Ok((STRESS_FLOOR + 0.5 * ratio.powf(1.5)).min(STRESS_CAP))
}

/// Length weight `c`: whatever the other two leave over.
pub fn length_weight(a: f64, b: f64) -> f64 {
    (1.0 - a - b).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl CostWeights {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b, c: length_weight(a, b) }
    }

    /// Weights for one step, with the term the objective leaves out set to 0.
    pub fn adaptive(
        objective: Objective,
        old: &CandidateEvaluation,
        new: &CandidateEvaluation,
        sigma_max: f64,
    ) -> Result<Self, WeightError> {
        let a = temperature_weight(old.peak_temp, new.peak_temp);
        let b = stress_weight(old.peak_stress, new.peak_stress, sigma_max)?;
        Ok(match objective {
            Objective::Wt => Self::new(a, 0.0),
            Objective::Ws => Self::new(0.0, b),
            Objective::Wst => Self::new(a, b),
        })
    }
}

/// Observed bounds of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    /// Position of `x` in the range, clamped to [0, 1]; 0 when degenerate.
    pub fn normalize(&self, x: f64) -> f64 {
        let span = self.max - self.min;
        if !(span > 0.0) {
            return 0.0;
        }
        ((x - self.min) / span).clamp(0.0, 1.0)
    }

    fn of(values: impl Iterator<Item = f64>) -> Self {
        values.fold(Range { min: f64::INFINITY, max: f64::NEG_INFINITY }, |r, v| Range {
            min: r.min.min(v),
            max: r.max.max(v),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationRanges {
    pub temp: Range,
    pub stress: Range,
    pub length: Range,
    /// False when fewer than two samples were available.
    pub available: bool,
}

impl NormalizationRanges {
    pub const UNAVAILABLE: NormalizationRanges = NormalizationRanges {
        temp: Range { min: 0.0, max: 0.0 },
        stress: Range { min: 0.0, max: 0.0 },
        length: Range { min: 0.0, max: 0.0 },
        available: false,
    };

    pub fn from_samples(samples: &[CandidateEvaluation]) -> Self {
        if samples.len() < 2 {
            return Self::UNAVAILABLE;
        }
        Self {
            temp: Range::of(samples.iter().map(|e| e.peak_temp)),
            stress: Range::of(samples.iter().map(|e| e.peak_stress)),
            length: Range::of(samples.iter().map(|e| e.wirelength)),
            available: true,
        }
    }
}

/// Scales of the linear cost used when no ranges are available.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FallbackScales {
    pub sigma_max: f64,
    /// Wirelength of the initial placement, mm.
    pub initial_length: f64,
}

fn ratio(x: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        x / scale
    } else {
        0.0
    }
}

/// Weighted sum of normalized temperature, stress and wirelength.
pub fn cost(e: &CandidateEvaluation, w: &CostWeights, r: &NormalizationRanges, fb: &FallbackScales) -> f64 {
    let (t, s, l) = if r.available {
        (
            r.temp.normalize(e.peak_temp),
            r.stress.normalize(e.peak_stress),
            r.length.normalize(e.wirelength),
        )
    } else {
        (
            e.peak_temp / FALLBACK_TEMP_SCALE,
            ratio(e.peak_stress, fb.sigma_max),
            ratio(e.wirelength, fb.initial_length),
        )
    };
    w.a * t + w.b * s + w.c * l
}

/// Probability of accepting a move from `old_cost` to `new_cost`.
pub fn acceptance_probability(old_cost: f64, new_cost: f64, anneal_temp: f64) -> f64 {
    let delta = -(new_cost - old_cost);
    if delta > 0.0 {
        1.0
    } else {
        (delta / anneal_temp).exp()
    }
}

/// Boltzmann acceptance with the uniform draw `u` in [0, 1).
pub fn accept(old_cost: f64, new_cost: f64, anneal_temp: f64, u: f64) -> bool {
    let delta = -(new_cost - old_cost);
    delta > 0.0 || u < (delta / anneal_temp).exp()
}
