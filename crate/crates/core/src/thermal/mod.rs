//! Voxelized steady-state heat conduction over the package stack.

mod field;
mod grid;
mod solver;

pub use field::{peak_temperature, surface_gradient_stats, FieldError, GradientStats, ScalarField};
pub use grid::{build_grid, GridError, GridGeometry, PlaneSelector, VoxelGrid, ZCell, AIR};
pub use solver::{solve_steady_state, BoundaryConditions, SolveError, SolveStats, SolverOptions};
