//! Thermal, stress and wirelength aware placement of chiplets on a 2.5D
//! interposer.
//!
//! The pipeline for one candidate placement is
//! [`thermal::build_grid`] → [`thermal::solve_steady_state`] →
//! [`stress::evaluate_stress`] → [`router::route_nets`] (or
//! [`router::hpwl_estimate`]). [`annealer::anneal`] drives that pipeline with
//! adaptive cost weights and a geometric cooling schedule.

pub mod annealer;
pub mod bundled;
pub mod config;
pub mod eval;
pub mod export;
pub mod metrics;
pub mod model;
pub mod packing;
pub mod placement;
pub mod router;
pub mod stress;
pub mod thermal;

pub use config::{load_architecture, parse_architecture, save_architecture, ConfigError};
pub use model::{ArchitectureSpec, ChipletSpec, LayerRole, LayerSpec, Material, Net, PackageConfig};
pub use packing::{initial_placement, PackingError};
pub use placement::{validate_placement, Feasibility, Placement, Pose, Rotation, Violation};
pub use annealer::{anneal, run_optimization, AnnealSchedule, Objective, OptimizationReport};
pub use eval::{CandidateEvaluation, EvalOptions, Evaluator, Fidelity, FinalMetrics, SurrogateEvaluator};
pub use metrics::{compare_runs, pearson, RunComparison, RunSummary};
