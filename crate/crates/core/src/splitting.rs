//! Strang splitting between diffusion-reaction and convection.
//!
//! One classical step is
//!
//! ```text
//! u_{n+1} = DR_{tau/2} o W_tau o DR_{tau/2} (u_n)
//! ```
//!
//! where `DR` solves `v' = D v + f(t, v)` with Dirichlet data `b(t)` and `W`
//! solves `w' = a . grad w` with inflow data `b` on the inflow boundary.
//!
//! The corrected schemes subtract a correction `z_n` (the step value itself,
//! or its first-order Taylor extension in time when `b` moves) and split the
//! transformed problem instead. The transformed unknown starts from exactly
//! zero and satisfies homogeneous Dirichlet and inflow conditions; the
//! spatial operators applied to `z_n` move into the modified nonlinearity
//!
//! ```text
//! invariant: h(t, w) = f(t, w + z_n) + (D + a . grad) z_n
//! linear:    h(t, w) = f(t, w + z_n(t)) - f(t_n, u_n) + (t - t_n) (D + a . grad) g_n
//! ```
//!
//! with `z_n(t) = u_n + (t - t_n) g_n` and `g_n = (D + a . grad) u_n + f(t_n, u_n)`.
//! Every sub-flow is integrated with the adaptive Dormand-Prince pair at
//! [`SUBFLOW_TOL`], far below the splitting error.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result, Stage};
use crate::grid::{Field, Grid};
use crate::ode::{rk45_adaptive, OdeProblem, StepStats, ToleranceSpec};
use crate::operators::{BoundaryValues, MethodOfLines};
use crate::scenario::Scenario;

/// Absolute and relative tolerance of every sub-flow solve.
pub const SUBFLOW_TOL: f64 = 1e-12;

/// Step budget of one sub-flow. Stable runs of the built-in scenarios stay
/// below 1500, so a solve that exhausts it has diverged.
pub const SUBFLOW_MAX_STEPS: usize = 50_000;

/// Slack allowed when a step overshoots the final time.
const TIME_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CorrectionMode {
    /// `z_n = u_n`, for time-invariant boundary data.
    Invariant,
    /// `z_n(t) = u_n + (t - t_n) g_n`, for time-dependent boundary data.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeKind {
    Classical,
    CorrectedInvariant,
    CorrectedLinear,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] = [
        SchemeKind::Classical,
        SchemeKind::CorrectedInvariant,
        SchemeKind::CorrectedLinear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Classical => "classical",
            SchemeKind::CorrectedInvariant => "corrected-invariant",
            SchemeKind::CorrectedLinear => "corrected-linear",
        }
    }

    pub fn correction_mode(self) -> Option<CorrectionMode> {
        match self {
            SchemeKind::Classical => None,
            SchemeKind::CorrectedInvariant => Some(CorrectionMode::Invariant),
            SchemeKind::CorrectedLinear => Some(CorrectionMode::Linear),
        }
    }

    pub fn is_corrected(self) -> bool {
        self != SchemeKind::Classical
    }

    /// The corrected scheme matching the boundary data: invariant when `b`
    /// does not depend on time, linear otherwise.
    pub fn corrected_for(s: &Scenario) -> Self {
        if s.boundary.is_time_dependent() {
            SchemeKind::CorrectedLinear
        } else {
            SchemeKind::CorrectedInvariant
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown scheme `{s}`; expected classical, corrected-invariant or corrected-linear"
                ))
            })
    }
}

/// Step data of the transformation `u = u_hat + z_n(t)`, including the
/// step constants of the modified nonlinearity.
#[derive(Debug, Clone)]
pub struct Correction {
    mode: CorrectionMode,
    t_n: f64,
    base: Vec<f64>,
    base_boundary: BoundaryValues,
    slope: Option<Vec<f64>>,
    slope_boundary: Option<BoundaryValues>,
    reaction_at_base: Option<Vec<f64>>,
    operator_term: Vec<f64>,
}

impl Correction {
    pub fn mode(&self) -> CorrectionMode {
        self.mode
    }

    pub fn t_n(&self) -> f64 {
        self.t_n
    }

    /// `z_n(t_n) = u_n`.
    pub fn base(&self) -> &[f64] {
        &self.base
    }

    /// `g_n` on the interior nodes (linear mode only).
    pub fn slope(&self) -> Option<&[f64]> {
        self.slope.as_deref()
    }

    /// Boundary values used for `g_n`, i.e. `db/dt(t_n)` (linear mode only).
    pub fn slope_boundary(&self) -> Option<&BoundaryValues> {
        self.slope_boundary.as_ref()
    }

    /// `(D + a . grad) z_n` in invariant mode, `(D + a . grad) g_n` in linear
    /// mode.
    pub fn operator_term(&self) -> &[f64] {
        &self.operator_term
    }

    /// `z_n(t)` on the interior nodes.
    pub fn value_at(&self, t: f64) -> Vec<f64> {
        match &self.slope {
            None => self.base.clone(),
            Some(g) => {
                let s = t - self.t_n;
                self.base.iter().zip(g).map(|(z, g)| z + s * g).collect()
            }
        }
    }

    /// Boundary trace of `z_n(t)`.
    pub fn boundary_at(&self, t: f64) -> BoundaryValues {
        match &self.slope_boundary {
            None => self.base_boundary.clone(),
            Some(db) => {
                let s = t - self.t_n;
                self.base_boundary.zip_with(db, |b, d| b + s * d)
            }
        }
    }
}

/// Bookkeeping of one splitting step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub t_n: f64,
    pub tau: f64,
    /// Integrator statistics of the three sub-flows, in execution order.
    pub stages: [StepStats; 3],
    /// Corrected steps only: whether `u_n - z_n(t_n)` was bitwise zero.
    pub transformed_start_zero: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub values: Vec<f64>,
    pub report: StepReport,
}

/// Result of stepping from `t = 0` to the final time.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub field: Field,
    pub steps: Vec<StepReport>,
    /// The final step was shortened to land on the final time.
    pub final_step_clipped: bool,
}

impl Trajectory {
    pub fn total_stats(&self) -> StepStats {
        let mut total = StepStats::default();
        for s in &self.steps {
            for st in s.stages {
                total += st;
            }
        }
        total
    }
}

/// Splitting integrator bound to one scenario.
pub struct Splitter<'s> {
    mol: MethodOfLines<'s>,
    tol: ToleranceSpec,
    zero_bc: BoundaryValues,
}

impl<'s> Splitter<'s> {
    pub fn new(scenario: &'s Scenario) -> Result<Self> {
        let mol = MethodOfLines::new(scenario)?;
        Ok(Splitter {
            zero_bc: BoundaryValues::zeros(&scenario.grid),
            mol,
            tol: ToleranceSpec {
                max_steps: SUBFLOW_MAX_STEPS,
                ..ToleranceSpec::uniform(SUBFLOW_TOL)
            },
        })
    }

    pub fn with_subflow_tolerance(mut self, tol: ToleranceSpec) -> Self {
        self.tol = tol;
        self
    }

    pub fn scenario(&self) -> &'s Scenario {
        self.mol.scenario()
    }

    fn grid(&self) -> &Grid {
        self.mol.ops().grid()
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.grid().len() {
            return Err(Error::InvalidArgument(format!(
                "state has {} values, grid has {} nodes",
                u.len(),
                self.grid().len()
            )));
        }
        Ok(())
    }

    pub fn build_correction(
        &self,
        u_n: &[f64],
        t_n: f64,
        mode: CorrectionMode,
    ) -> Result<Correction> {
        self.check_len(u_n)?;
        let ops = self.mol.ops();
        let n = u_n.len();
        let base_boundary = self.mol.boundary_at(t_n)?.into_owned();
        match mode {
            CorrectionMode::Invariant => {
                let mut operator_term = vec![0.0; n];
                ops.operator_into(u_n, &base_boundary, &mut operator_term)?;
                Ok(Correction {
                    mode,
                    t_n,
                    base: u_n.to_vec(),
                    base_boundary,
                    slope: None,
                    slope_boundary: None,
                    reaction_at_base: None,
                    operator_term,
                })
            }
            CorrectionMode::Linear => {
                let slope_boundary = self.scenario().boundary.derivative_at(self.grid(), t_n)?;
                let mut reaction = vec![0.0; n];
                self.mol.reaction_add(t_n, u_n, &mut reaction)?;
                let mut slope = vec![0.0; n];
                ops.operator_into(u_n, &base_boundary, &mut slope)?;
                for (g, f) in slope.iter_mut().zip(&reaction) {
                    *g += f;
                }
                let mut operator_term = vec![0.0; n];
                ops.operator_into(&slope, &slope_boundary, &mut operator_term)?;
                Ok(Correction {
                    mode,
                    t_n,
                    base: u_n.to_vec(),
                    base_boundary,
                    slope: Some(slope),
                    slope_boundary: Some(slope_boundary),
                    reaction_at_base: Some(reaction),
                    operator_term,
                })
            }
        }
    }

    /// `out = h(t, u_hat)`.
    pub fn nonlinearity_into(
        &self,
        t: f64,
        u_hat: &[f64],
        c: &Correction,
        out: &mut [f64],
    ) -> Result<()> {
        self.nonlinearity(t, u_hat, c, out, false)
    }

    fn nonlinearity(
        &self,
        t: f64,
        u_hat: &[f64],
        c: &Correction,
        out: &mut [f64],
        accumulate: bool,
    ) -> Result<()> {
        let scenario = self.scenario();
        let points = self.mol.ops().points();
        let s = t - c.t_n;
        for i in 0..out.len() {
            let p = points[i];
            let v = match (&c.slope, &c.reaction_at_base) {
                (Some(g), Some(fn_)) => {
                    let z = c.base[i] + s * g[i];
                    scenario.reaction(t, u_hat[i] + z, p) - fn_[i] + s * c.operator_term[i]
                }
                _ => scenario.reaction(t, u_hat[i] + c.base[i], p) + c.operator_term[i],
            };
            if !v.is_finite() {
                return Err(Error::Evaluation {
                    what: "modified nonlinearity",
                    t,
                    x: p[0],
                    y: p[1],
                });
            }
            if accumulate {
                out[i] += v;
            } else {
                out[i] = v;
            }
        }
        Ok(())
    }

    fn subflow<F>(
        &self,
        stage: Stage,
        y0: Vec<f64>,
        t0: f64,
        t1: f64,
        rhs: F,
    ) -> Result<(Vec<f64>, StepStats)>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        rk45_adaptive(OdeProblem { rhs, y0, t0, t1 }, &self.tol)
            .map(|sol| (sol.state, sol.stats))
            .map_err(|e| Error::SubFlow {
                stage,
                source: Box::new(e),
            })
    }

    fn transport(
        &self,
        y0: Vec<f64>,
        tau: f64,
        inflow: &BoundaryValues,
    ) -> Result<(Vec<f64>, StepStats)> {
        let ops = self.mol.ops();
        self.subflow(Stage::Transport, y0, 0.0, tau, |_t, w, out| {
            ops.convection_into(w, inflow, out)
        })
    }

    /// One classical Strang step from `(t_n, u_n)`.
    pub fn step_classical(&self, u_n: &[f64], t_n: f64, tau: f64) -> Result<StepOutcome> {
        self.check_len(u_n)?;
        let ops = self.mol.ops();
        let half = t_n + 0.5 * tau;
        let dr = |t: f64, v: &[f64], out: &mut [f64]| -> Result<()> {
            let bc = self.mol.boundary_at(t)?;
            ops.diffusion_into(v, &bc, out)?;
            self.mol.reaction_add(t, v, out)
        };
        let (v, s1) = self.subflow(Stage::FirstDiffusionReaction, u_n.to_vec(), t_n, half, dr)?;
        // inflow data frozen at the midpoint of the step
        let inflow = self.mol.boundary_at(half)?.restricted_to(ops.inflow());
        let (w, s2) = self.transport(v, tau, &inflow)?;
        let (u, s3) = self.subflow(Stage::SecondDiffusionReaction, w, half, t_n + tau, dr)?;
        Ok(StepOutcome {
            values: u,
            report: StepReport {
                t_n,
                tau,
                stages: [s1, s2, s3],
                transformed_start_zero: None,
            },
        })
    }

    /// One initial-corrected Strang step from `(t_n, u_n)`.
    pub fn step_corrected(
        &self,
        u_n: &[f64],
        t_n: f64,
        tau: f64,
        mode: CorrectionMode,
    ) -> Result<StepOutcome> {
        let c = self.build_correction(u_n, t_n, mode)?;
        let ops = self.mol.ops();

        let z_start = c.value_at(t_n);
        let v_hat: Vec<f64> = u_n.iter().zip(&z_start).map(|(u, z)| u - z).collect();
        let start_zero = v_hat.iter().all(|v| v.to_bits() == 0);

        let dr = |t: f64, v: &[f64], out: &mut [f64]| -> Result<()> {
            ops.diffusion_into(v, &self.zero_bc, out)?;
            self.nonlinearity(t, v, &c, out, true)
        };
        let half = t_n + 0.5 * tau;
        let (v, s1) = self.subflow(Stage::FirstDiffusionReaction, v_hat, t_n, half, dr)?;
        let inflow = self.zero_bc.restricted_to(ops.inflow());
        let (w, s2) = self.transport(v, tau, &inflow)?;
        let (u_hat, s3) = self.subflow(Stage::SecondDiffusionReaction, w, half, t_n + tau, dr)?;

        let z_end = c.value_at(t_n + tau);
        let values = u_hat.iter().zip(&z_end).map(|(u, z)| u + z).collect();
        Ok(StepOutcome {
            values,
            report: StepReport {
                t_n,
                tau,
                stages: [s1, s2, s3],
                transformed_start_zero: Some(start_zero),
            },
        })
    }

    pub fn step(&self, kind: SchemeKind, u_n: &[f64], t_n: f64, tau: f64) -> Result<StepOutcome> {
        match kind.correction_mode() {
            None => self.step_classical(u_n, t_n, tau),
            Some(mode) => self.step_corrected(u_n, t_n, tau, mode),
        }
    }

    /// Step from `u0` at `t = 0` to the final time. The last step is
    /// shortened when `tau` does not divide the final time.
    pub fn integrate(&self, kind: SchemeKind, tau: f64) -> Result<Trajectory> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "step size must be positive, got {tau}"
            )));
        }
        let s = self.scenario();
        let end = s.final_time;
        let mut u = s.initial_field()?.into_values();
        let n_steps = if end > 0.0 {
            ((end / tau) - 1e-9).ceil().max(1.0) as usize
        } else {
            0
        };
        let mut steps = Vec::with_capacity(n_steps);
        let mut clipped = false;
        for k in 0..n_steps {
            let t_n = k as f64 * tau;
            let mut step = tau;
            if k + 1 == n_steps {
                step = end - t_n;
                clipped = (step - tau).abs() > TIME_SLACK * tau.max(1.0);
            }
            let out = self
                .step(kind, &u, t_n, step)
                .map_err(|e| Error::Integration {
                    t: t_n,
                    source: Box::new(e),
                })?;
            u = out.values;
            steps.push(out.report);
        }
        Ok(Trajectory {
            field: Field::from_values(s.grid, u)?,
            steps,
            final_step_clipped: clipped,
        })
    }
}

fn check_step(u_n: &Field, t_n: f64, tau: f64, s: &Scenario) -> Result<()> {
    if u_n.grid() != &s.grid {
        return Err(Error::InvalidArgument(
            "field and scenario use different grids".into(),
        ));
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "step size must be positive, got {tau}"
        )));
    }
    if t_n + tau > s.final_time + TIME_SLACK {
        return Err(Error::InvalidArgument(format!(
            "step [{t_n}, {}] overshoots the final time {}",
            t_n + tau,
            s.final_time
        )));
    }
    Ok(())
}

/// Correction for a corrected step starting from `(t_n, u_n)`.
pub fn build_correction(
    u_n: &Field,
    t_n: f64,
    s: &Scenario,
    mode: CorrectionMode,
) -> Result<Correction> {
    if u_n.grid() != &s.grid {
        return Err(Error::InvalidArgument(
            "field and scenario use different grids".into(),
        ));
    }
    Splitter::new(s)?.build_correction(u_n.values(), t_n, mode)
}

/// The modified nonlinearity `h(t, u_hat)` of the transformed problem.
pub fn modified_nonlinearity(t: f64, u_hat: &Field, c: &Correction, s: &Scenario) -> Result<Field> {
    let splitter = Splitter::new(s)?;
    splitter.check_len(u_hat.values())?;
    let mut out = vec![0.0; u_hat.values().len()];
    splitter.nonlinearity_into(t, u_hat.values(), c, &mut out)?;
    Field::from_values(s.grid, out)
}

pub fn strang_step_classical(u_n: &Field, t_n: f64, tau: f64, s: &Scenario) -> Result<Field> {
    check_step(u_n, t_n, tau, s)?;
    let out = Splitter::new(s)?.step_classical(u_n.values(), t_n, tau)?;
    Field::from_values(s.grid, out.values)
}

pub fn strang_step_corrected(
    u_n: &Field,
    t_n: f64,
    tau: f64,
    s: &Scenario,
    mode: CorrectionMode,
) -> Result<Field> {
    check_step(u_n, t_n, tau, s)?;
    let out = Splitter::new(s)?.step_corrected(u_n.values(), t_n, tau, mode)?;
    Field::from_values(s.grid, out.values)
}

/// Integrate the scenario from `t = 0` to its final time with step `tau`.
pub fn integrate(s: &Scenario, kind: SchemeKind, tau: f64) -> Result<Trajectory> {
    Splitter::new(s)?.integrate(kind, tau)
}
