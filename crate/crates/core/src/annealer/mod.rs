//! Adaptive-weight simulated annealing over chiplet placements.
//!
//! Each step perturbs the current placement, evaluates the candidate, picks
//! weights from the old and new peak temperature and stress, and accepts by
//! the Boltzmann rule on the normalized cost. Normalization ranges come from
//! a warm-up sample of random placements and stay frozen afterwards.

mod moves;
mod weights;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use moves::{perturb, MoveConfig, MoveKind, Perturbation};
pub use weights::{
    accept, acceptance_probability, cost, length_weight, stress_weight, temperature_weight, CostWeights,
    FallbackScales, NormalizationRanges, Range, WeightError, FALLBACK_TEMP_SCALE, TEMP_GATE,
};

use crate::eval::{CandidateEvaluation, EvalError, EvalOptions, Evaluator, FinalMetrics, Fidelity, FullEvaluation, SurrogateEvaluator};
use crate::model::ArchitectureSpec;
use crate::packing::{initial_placement, random_placement, PackingError};
use crate::placement::Placement;

/// Which terms of the cost are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Wirelength and temperature.
    Wt,
    /// Wirelength and stress.
    Ws,
    /// Wirelength, stress and temperature.
    Wst,
}

impl Objective {
    pub const ALL: [Objective; 3] = [Objective::Wt, Objective::Ws, Objective::Wst];

    pub fn as_str(self) -> &'static str {
        match self {
            Objective::Wt => "wt",
            Objective::Ws => "ws",
            Objective::Wst => "wst",
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "wt" => Ok(Objective::Wt),
            "ws" => Ok(Objective::Ws),
            "wst" => Ok(Objective::Wst),
            _ => Err(format!("unknown objective `{s}` (expected wt, ws or wst)")),
        }
    }
}

/// Geometric cooling schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnealSchedule {
    pub initial_temp: f64,
    pub cooling_rate: f64,
    pub iters_per_level: usize,
    /// Annealing stops once the temperature is at or below this value.
    pub stop_temp: f64,
    pub seed: u64,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self {
            initial_temp: 1.0,
            cooling_rate: 0.9,
            iters_per_level: 45,
            stop_temp: 0.01,
            seed: 0,
        }
    }
}

impl AnnealSchedule {
    /// Default schedule with the level length used for `spec`'s architecture.
    pub fn for_architecture(spec: &ArchitectureSpec, seed: u64) -> Self {
        let iters_per_level = if spec.name() == "ascend910" { 45 } else { 50 };
        Self { iters_per_level, seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), AnnealError> {
        let ok = self.initial_temp.is_finite()
            && self.stop_temp > 0.0
            && self.stop_temp < self.initial_temp
            && self.cooling_rate > 0.0
            && self.cooling_rate < 1.0;
        if ok {
            Ok(())
        } else {
            Err(AnnealError::BadSchedule(self.clone()))
        }
    }

    /// Annealing temperature of level `k`.
    pub fn level_temp(&self, k: usize) -> f64 {
        self.initial_temp * self.cooling_rate.powi(k as i32)
    }

    /// Number of levels whose temperature is above `stop_temp`.
    pub fn n_levels(&self) -> usize {
        let mut k = 0;
        while self.level_temp(k) > self.stop_temp {
            k += 1;
        }
        k
    }
}

/// Everything besides the schedule that shapes a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnealOptions {
    pub fidelity: Fidelity,
    pub moves: MoveConfig,
    /// Random placements evaluated to fix the normalization ranges.
    pub warmup_samples: usize,
}

impl Default for AnnealOptions {
    fn default() -> Self {
        Self {
            fidelity: Fidelity::FullRoute,
            moves: MoveConfig::default(),
            warmup_samples: 30,
        }
    }
}

#[derive(Debug, Error)]
pub enum AnnealError {
    #[error("invalid schedule {0:?}")]
    BadSchedule(AnnealSchedule),
    #[error("initial placement: {0}")]
    Packing(#[from] PackingError),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("cost weights: {0}")]
    Weights(#[from] WeightError),
}

impl AnnealError {
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, AnnealError::Eval(e) if e.is_solver_failure())
    }
}

/// An aborted run together with what it had produced so far.
#[derive(Debug, Error)]
#[error("{error}")]
pub struct AnnealFailure {
    #[source]
    pub error: AnnealError,
    /// `None` if the run failed before the initial placement was evaluated.
    pub partial: Option<Box<OptimizationReport>>,
}

impl From<AnnealError> for AnnealFailure {
    fn from(error: AnnealError) -> Self {
        Self { error, partial: None }
    }
}

/// One proposal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub level: usize,
    pub iteration: usize,
    pub anneal_temp: f64,
    /// `None` when no feasible move was found; the candidate is then the
    /// current placement.
    pub move_kind: Option<MoveKind>,
    pub candidate: CandidateEvaluation,
    pub weights: CostWeights,
    pub old_cost: f64,
    pub new_cost: f64,
    pub accept_prob: f64,
    pub u: f64,
    pub accepted: bool,
    /// Lowest cost recorded so far, this step included.
    pub best_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: usize,
    pub anneal_temp: f64,
    pub proposals: usize,
    pub accepted: usize,
    /// Current placement's evaluation at the end of the level.
    pub current: CandidateEvaluation,
    /// Routed wirelength of the current placement at the end of the level
    /// (differs from `current.wirelength` under the HPWL proxy).
    pub routed_wirelength: f64,
    pub best_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestEntry {
    pub placement: Placement,
    pub metrics: CandidateEvaluation,
    pub cost: f64,
    /// Trace index where it was accepted; `None` for the initial placement.
    pub step: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub proposals: usize,
    pub accepted: usize,
    /// Proposals where no feasible move was found.
    pub stalled: usize,
    /// Warm-up placements that were generated and evaluated.
    pub warmup_samples: usize,
    pub evaluations: usize,
}

/// Wall-clock seconds. Kept apart so reports can be compared without it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub warmup_s: f64,
    pub anneal_s: f64,
    pub final_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub architecture: String,
    pub objective: Objective,
    pub seed: u64,
    pub schedule: AnnealSchedule,
    pub options: AnnealOptions,
    /// Set when the surrogate solvers produced the metrics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_options: Option<EvalOptions>,
    pub ranges: NormalizationRanges,
    pub fallback: FallbackScales,
    pub initial_placement: Placement,
    pub initial: CandidateEvaluation,
    pub trace: Vec<TraceStep>,
    pub levels: Vec<LevelSummary>,
    pub best: BestEntry,
    /// Full-fidelity metrics of the best placement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_metrics: Option<FinalMetrics>,
    pub stats: RunStats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl OptimizationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// JSON with the wall-clock block removed.
    pub fn to_json_without_timing(&self) -> String {
        let mut r = self.clone();
        r.timing = None;
        r.to_json()
    }
}

const STREAM_WARMUP: u64 = 0;
const STREAM_MOVES: u64 = 1;
const STREAM_ACCEPT: u64 = 2;
const WARMUP_ATTEMPTS: usize = 20;

fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs the annealer from the seeded initial placement.
///
/// On an evaluation failure the returned error carries the report built up
/// to that point.
pub fn anneal(
    spec: &ArchitectureSpec,
    objective: Objective,
    schedule: &AnnealSchedule,
    options: &AnnealOptions,
    evaluator: &dyn Evaluator,
) -> Result<OptimizationReport, AnnealFailure> {
    schedule.validate()?;
    let sigma_max = spec.package.sigma_max;
    weights::stress_weight(0.0, 0.0, sigma_max).map_err(AnnealError::from)?;
    let fidelity = options.fidelity;
    let mut timing = Timing::default();
    let mut stats = RunStats::default();

    let start = Instant::now();
    let mut warm_rng = rng_stream(schedule.seed, STREAM_WARMUP);
    let mut samples = Vec::with_capacity(options.warmup_samples);
    for _ in 0..options.warmup_samples {
        if let Some(p) = random_placement(spec, &mut warm_rng, WARMUP_ATTEMPTS) {
            samples.push(evaluator.evaluate(&p, fidelity).map_err(AnnealError::from)?);
        }
    }
    stats.warmup_samples = samples.len();
    stats.evaluations += samples.len();
    let ranges = NormalizationRanges::from_samples(&samples);
    timing.warmup_s = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let initial_p = initial_placement(spec, schedule.seed).map_err(AnnealError::from)?;
    let initial = evaluator.evaluate(&initial_p, fidelity).map_err(AnnealError::from)?;
    stats.evaluations += 1;
    let fallback = FallbackScales { sigma_max, initial_length: initial.wirelength };
    let w0 = CostWeights::adaptive(objective, &initial, &initial, sigma_max).map_err(AnnealError::from)?;
    let mut report = OptimizationReport {
        architecture: spec.name().to_string(),
        objective,
        seed: schedule.seed,
        schedule: schedule.clone(),
        options: options.clone(),
        eval_options: None,
        ranges,
        fallback,
        initial_placement: initial_p.clone(),
        initial,
        trace: Vec::new(),
        levels: Vec::new(),
        best: BestEntry {
            placement: initial_p.clone(),
            metrics: initial,
            cost: cost(&initial, &w0, &ranges, &fallback),
            step: None,
        },
        final_metrics: None,
        stats,
        timing: None,
    };

    let mut move_rng = rng_stream(schedule.seed, STREAM_MOVES);
    let mut accept_rng = rng_stream(schedule.seed, STREAM_ACCEPT);
    let mut current = initial_p;
    let mut current_eval = initial;
    let mut routed_at: Option<(Placement, f64)> = None;

    let outcome = (|| -> Result<(), AnnealError> {
        if schedule.iters_per_level == 0 {
            return Ok(());
        }
        for level in 0..schedule.n_levels() {
            let anneal_temp = schedule.level_temp(level);
            let mut accepted_here = 0;
            for iteration in 0..schedule.iters_per_level {
                let moved = perturb(spec, &current, anneal_temp, &options.moves, &mut move_rng);
                let u: f64 = accept_rng.random();
                let candidate = if moved.moved() {
                    report.stats.evaluations += 1;
                    evaluator.evaluate(&moved.placement, fidelity)?
                } else {
                    report.stats.stalled += 1;
                    current_eval
                };
                let w = CostWeights::adaptive(objective, &current_eval, &candidate, sigma_max)?;
                let old_cost = cost(&current_eval, &w, &ranges, &fallback);
                let new_cost = cost(&candidate, &w, &ranges, &fallback);
                let accepted = accept(old_cost, new_cost, anneal_temp, u);
                report.stats.proposals += 1;
                if accepted {
                    report.stats.accepted += 1;
                    accepted_here += 1;
                    current = moved.placement;
                    current_eval = candidate;
                    if new_cost < report.best.cost {
                        report.best = BestEntry {
                            placement: current.clone(),
                            metrics: candidate,
                            cost: new_cost,
                            step: Some(report.trace.len()),
                        };
                    }
                }
                report.trace.push(TraceStep {
                    level,
                    iteration,
                    anneal_temp,
                    move_kind: moved.kind,
                    candidate,
                    weights: w,
                    old_cost,
                    new_cost,
                    accept_prob: acceptance_probability(old_cost, new_cost, anneal_temp),
                    u,
                    accepted,
                    best_cost: report.best.cost,
                });
            }
            let routed_wirelength = match (&routed_at, fidelity) {
                (_, Fidelity::FullRoute) => current_eval.wirelength,
                (Some((p, l)), _) if *p == current => *l,
                _ => {
                    let l = evaluator.routed_wirelength(&current)?;
                    routed_at = Some((current.clone(), l));
                    l
                }
            };
            report.levels.push(LevelSummary {
                level,
                anneal_temp,
                proposals: schedule.iters_per_level,
                accepted: accepted_here,
                current: current_eval,
                routed_wirelength,
                best_cost: report.best.cost,
            });
        }
        Ok(())
    })();
    timing.anneal_s = start.elapsed().as_secs_f64();
    report.timing = Some(timing);
    match outcome {
        Ok(()) => Ok(report),
        Err(error) => Err(AnnealFailure { error, partial: Some(Box::new(report)) }),
    }
}

/// [`anneal`] with the surrogate solvers, followed by a full evaluation of
/// the best placement.
pub fn run_optimization(
    spec: &ArchitectureSpec,
    objective: Objective,
    schedule: &AnnealSchedule,
    options: &AnnealOptions,
    eval_options: &EvalOptions,
) -> Result<(OptimizationReport, FullEvaluation), AnnealFailure> {
    let evaluator = SurrogateEvaluator::new(spec, eval_options.clone());
    let mut report = anneal(spec, objective, schedule, options, &evaluator).map_err(|mut f| {
        if let Some(r) = f.partial.as_mut() {
            r.eval_options = Some(eval_options.clone());
        }
        f
    })?;
    report.eval_options = Some(eval_options.clone());
    let start = Instant::now();
    let full = match evaluator.evaluate_full(&report.best.placement) {
        Ok(full) => full,
        Err(e) => {
            return Err(AnnealFailure {
                error: AnnealError::Eval(e),
                partial: Some(Box::new(report)),
            })
        }
    };
    report.final_metrics = Some(full.summary());
    if let Some(t) = report.timing.as_mut() {
        t.final_s = start.elapsed().as_secs_f64();
    }
    Ok((report, full))
}
