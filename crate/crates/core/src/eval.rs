//! Candidate evaluation: placement → temperature → stress → wirelength.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{Correlations, MetricsError};
use crate::model::ArchitectureSpec;
use crate::placement::Placement;
use crate::router::{build_routing_graph, hpwl_estimate, route_nets, RouteError, RouteResult, RoutingGraph};
use crate::stress::{evaluate_stress, StressError, StressEvaluation};
use crate::thermal::{
    build_grid, solve_steady_state, surface_gradient_stats, BoundaryConditions, FieldError, GradientStats,
    GridError, PlaneSelector, ScalarField, SolveError, SolveStats, SolverOptions, VoxelGrid,
};

/// The (T, σ, L) triple that feeds the cost function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateEvaluation {
    /// Peak temperature, °C.
    pub peak_temp: f64,
    /// Peak (or configured percentile) von Mises stress, MPa.
    pub peak_stress: f64,
    /// Total wirelength, mm.
    pub wirelength: f64,
}

/// How wirelength is measured during annealing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fidelity {
    /// Route every candidate.
    #[default]
    FullRoute,
    /// Use HPWL for candidates; route only at level boundaries.
    HpwlProxy,
}

impl std::str::FromStr for Fidelity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full-route" => Ok(Fidelity::FullRoute),
            "hpwl-proxy" => Ok(Fidelity::HpwlProxy),
            other => Err(format!("unknown fidelity `{other}` (expected full-route or hpwl-proxy)")),
        }
    }
}

/// Discretization and routing knobs shared by every evaluation of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalOptions {
    /// Lateral cells per mm.
    pub resolution: f64,
    /// Bump-site pitch, mm.
    pub pitch: f64,
    /// Wires per routing edge.
    pub capacity: u32,
    pub rel_tolerance: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            resolution: 1.0,
            pitch: 1.0,
            capacity: 128,
            rel_tolerance: SolverOptions::default().rel_tolerance,
        }
    }
}

impl EvalOptions {
    fn solver(&self) -> SolverOptions {
        SolverOptions {
            rel_tolerance: self.rel_tolerance,
            ..SolverOptions::default()
        }
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("grid: {0}")]
    Grid(#[from] GridError),
    #[error("thermal solve: {0}")]
    Solve(#[from] SolveError),
    #[error("stress: {0}")]
    Stress(#[from] StressError),
    #[error("routing: {0}")]
    Route(#[from] RouteError),
    #[error("field: {0}")]
    Field(#[from] FieldError),
    #[error("metrics: {0}")]
    Metrics(#[from] MetricsError),
}

impl EvalError {
    /// True for failures of the numerical solvers rather than of the inputs.
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, EvalError::Solve(_))
    }
}

/// Anything that can score a placement. The annealer only sees this.
pub trait Evaluator {
    fn evaluate(&self, p: &Placement, fidelity: Fidelity) -> Result<CandidateEvaluation, EvalError>;

    /// Fully routed wirelength alone.
    fn routed_wirelength(&self, p: &Placement) -> Result<f64, EvalError> {
        Ok(self.evaluate(p, Fidelity::FullRoute)?.wirelength)
    }
}

/// The in-repo solver chain.
#[derive(Debug, Clone)]
pub struct SurrogateEvaluator<'a> {
    pub spec: &'a ArchitectureSpec,
    pub options: EvalOptions,
}

impl<'a> SurrogateEvaluator<'a> {
    pub fn new(spec: &'a ArchitectureSpec, options: EvalOptions) -> Self {
        Self { spec, options }
    }

    fn thermal(&self, p: &Placement) -> Result<(VoxelGrid, ScalarField, SolveStats), EvalError> {
        let grid = build_grid(self.spec, p, self.options.resolution)?;
        let bc = BoundaryConditions::from_package(&self.spec.package);
        let (t, stats) = solve_steady_state(&grid, &bc, &self.options.solver())?;
        Ok((grid, t, stats))
    }

    fn route(&self, p: &Placement) -> Result<(RoutingGraph, RouteResult), EvalError> {
        let g = build_routing_graph(self.spec, p, self.options.pitch, self.options.capacity)?;
        let r = route_nets(&g, &self.spec.nets)?;
        Ok((g, r))
    }

    /// Every field and statistic for one placement, with full routing.
    pub fn evaluate_full(&self, p: &Placement) -> Result<FullEvaluation, EvalError> {
        let (grid, temperature, solve) = self.thermal(p)?;
        let stress = evaluate_stress(&temperature, &grid, self.spec)?;
        let plane = PlaneSelector::INTERPOSER_TOP;
        let (gradient_stats, gradient) = surface_gradient_stats(&temperature, plane)?;
        let correlations = Correlations::where_defined(
            &temperature.plane(plane)?,
            &stress.von_mises.plane(plane)?,
            &gradient,
        )?;
        let (graph, route) = self.route(p)?;
        let hpwl = hpwl_estimate(p, &self.spec.nets)?;
        Ok(FullEvaluation {
            metrics: CandidateEvaluation {
                peak_temp: temperature.max(),
                peak_stress: stress.peak,
                wirelength: route.total_wirelength,
            },
            hpwl,
            gradient_stats,
            correlations,
            grid,
            temperature,
            stress,
            gradient,
            graph,
            route,
            solve,
        })
    }
}

impl Evaluator for SurrogateEvaluator<'_> {
    fn evaluate(&self, p: &Placement, fidelity: Fidelity) -> Result<CandidateEvaluation, EvalError> {
        let (grid, t, _) = self.thermal(p)?;
        let stress = evaluate_stress(&t, &grid, self.spec)?;
        let wirelength = match fidelity {
            Fidelity::FullRoute => self.route(p)?.1.total_wirelength,
            Fidelity::HpwlProxy => hpwl_estimate(p, &self.spec.nets)?,
        };
        Ok(CandidateEvaluation {
            peak_temp: t.max(),
            peak_stress: stress.peak,
            wirelength,
        })
    }

    fn routed_wirelength(&self, p: &Placement) -> Result<f64, EvalError> {
        Ok(self.route(p)?.1.total_wirelength)
    }
}

/// Full result for one placement.
#[derive(Debug, Clone)]
pub struct FullEvaluation {
    /// Wirelength here is always the routed length.
    pub metrics: CandidateEvaluation,
    pub hpwl: f64,
    pub gradient_stats: GradientStats,
    pub correlations: Correlations,
    pub grid: VoxelGrid,
    pub temperature: ScalarField,
    pub stress: StressEvaluation,
    /// |∇T| on the interposer top plane, °C/mm.
    pub gradient: ScalarField,
    pub graph: RoutingGraph,
    pub route: RouteResult,
    pub solve: SolveStats,
}

impl FullEvaluation {
    pub fn summary(&self) -> FinalMetrics {
        FinalMetrics {
            peak_temp: self.metrics.peak_temp,
            peak_stress: self.metrics.peak_stress,
            wirelength: self.metrics.wirelength,
            routing_feasible: self.route.feasible,
            hpwl: self.hpwl,
            gradient: self.gradient_stats,
            correlations: self.correlations,
        }
    }
}

/// Serializable metric set reported for a final placement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalMetrics {
    pub peak_temp: f64,
    pub peak_stress: f64,
    /// Routed wirelength, mm.
    pub wirelength: f64,
    pub routing_feasible: bool,
    pub hpwl: f64,
    pub gradient: GradientStats,
    pub correlations: Correlations,
}
