//! Problem definitions: built-in experiments and user scenario files.

mod builtin;
mod file;

use std::sync::Arc;

pub use builtin::{builtin_names, builtin_scenario, builtin_source, BUILTIN_NAMES};
pub use file::{load_scenario, parse_scenario};

use crate::error::{Error, Result};
use crate::grid::{field_from_fn, Field, Grid, Point};
use crate::operators::{BoundaryTrace, SpaceFn, SpaceTimeFn, TimeDerivative, VelocityField};

/// Reaction term `f(t, u, x)`.
pub type ReactionFn = Arc<dyn Fn(f64, f64, Point) -> f64 + Send + Sync>;

/// Largest tolerated mismatch between `u0` and `b(0)` on the boundary.
pub const COMPATIBILITY_TOL: f64 = 1e-12;

/// Half-width of the central difference used for `db/dt` when no closed
/// form is given.
pub const DB_DT_DELTA: f64 = 1e-6;

/// A convection-diffusion-reaction problem
/// `u_t = d Lap u + a . grad u + f(t, u, x)` on the unit interval or square
/// with Dirichlet data `b` and initial data `u0`.
#[derive(Clone)]
pub struct Scenario {
    pub id: String,
    pub grid: Grid,
    pub diffusion: f64,
    pub velocity: VelocityField,
    pub reaction: ReactionFn,
    pub boundary: BoundaryTrace,
    pub initial: SpaceFn,
    pub final_time: f64,
    pub exact: Option<SpaceTimeFn>,
    /// Absolute and relative tolerance of the reference solve.
    pub reference_tol: f64,
    /// Stable textual identity used to key cached reference solutions.
    pub fingerprint: String,
}

impl std::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scenario")
            .field("id", &self.id)
            .field("grid", &self.grid)
            .field("diffusion", &self.diffusion)
            .field("final_time", &self.final_time)
            .field(
                "time_dependent_boundary",
                &self.boundary.is_time_dependent(),
            )
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl Scenario {
    pub fn reaction(&self, t: f64, u: f64, p: Point) -> f64 {
        (self.reaction)(t, u, p)
    }

    pub fn initial_field(&self) -> Result<Field> {
        field_from_fn(self.grid, |p| (self.initial)(p))
    }

    /// Largest `|u0 - b(0)|` over all boundary nodes, corners included.
    pub fn boundary_mismatch(&self) -> f64 {
        self.grid
            .boundary_points()
            .into_iter()
            .map(|p| ((self.initial)(p) - self.boundary.value(0.0, p)).abs())
            .fold(0.0, f64::max)
    }

    /// Check the scenario invariants: positive `d`, non-negative `T`,
    /// compatible initial and boundary data.
    pub fn validate(&self) -> Result<()> {
        if !(self.diffusion > 0.0 && self.diffusion.is_finite()) {
            return Err(Error::config("d", "diffusion coefficient must be positive"));
        }
        if !(self.final_time >= 0.0 && self.final_time.is_finite()) {
            return Err(Error::config("T", "final time must be non-negative"));
        }
        if self.velocity.dim() != self.grid.dim() {
            return Err(Error::config(
                "a",
                "velocity dimension does not match the grid",
            ));
        }
        let mismatch = self.boundary_mismatch();
        if !(mismatch <= COMPATIBILITY_TOL) {
            return Err(Error::Compatibility { mismatch });
        }
        Ok(())
    }

    /// Same problem on a different grid.
    pub fn with_grid(mut self, grid: Grid) -> Self {
        self.fingerprint = format!("{}|grid={:?}", self.fingerprint, grid_counts(&grid));
        self.grid = grid;
        self
    }

    /// Same problem with a different final time.
    pub fn with_final_time(mut self, final_time: f64) -> Self {
        self.fingerprint = format!("{}|T={final_time:e}", self.fingerprint);
        self.final_time = final_time;
        self
    }

    pub fn derivative_description(&self) -> &'static str {
        if !self.boundary.is_time_dependent() {
            return "zero (time-invariant boundary data)";
        }
        match self.boundary.derivative_source() {
            TimeDerivative::Analytic(_) => "analytic",
            TimeDerivative::CentralDifference(_) => "central difference, delta = 1e-6",
            TimeDerivative::Unavailable => "unavailable",
        }
    }
}

fn grid_counts(grid: &Grid) -> Vec<usize> {
    (0..grid.dim()).map(|a| grid.n(a)).collect()
}

/// Closed-form solution sampled at time `t`, when the scenario has one.
pub fn exact_solution(s: &Scenario, t: f64) -> Result<Option<Field>> {
    match &s.exact {
        None => Ok(None),
        Some(exact) => field_from_fn(s.grid, |p| exact(t, p)).map(Some),
    }
}
