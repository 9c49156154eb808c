//! Explicit time integrators for semidiscrete systems.
//!
//! [`rk45_adaptive`] is the Dormand-Prince 5(4) embedded pair with FSAL and a
//! PI step-size controller; it drives every sub-flow and every reference
//! solve. [`rk4_fixed`] is the classical fourth-order method on a uniform
//! step, kept as a deterministic fallback.

use crate::error::{Error, Result};

/// Safety factor of the step-size controller.
pub const SAFETY: f64 = 0.9;
/// Smallest allowed step-size ratio.
pub const MIN_FACTOR: f64 = 0.2;
/// Largest allowed step-size ratio.
pub const MAX_FACTOR: f64 = 5.0;
/// PI stabilisation exponent (weight of the previous error).
pub const PI_BETA: f64 = 0.04;

/// Controller description recorded in run metadata.
pub fn controller_description() -> String {
    format!(
        "PI controller (alpha = {:.2}, beta = {PI_BETA}), safety {SAFETY}, ratio clamp [{MIN_FACTOR}, {MAX_FACTOR}]",
        0.2 - 0.75 * PI_BETA
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub initial_step: f64,
    pub max_steps: usize,
}

impl ToleranceSpec {
    /// Equal absolute and relative tolerance with default step settings.
    pub fn uniform(tol: f64) -> Self {
        ToleranceSpec {
            abs_tol: tol,
            rel_tol: tol,
            initial_step: 1e-4,
            max_steps: 500_000,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.abs_tol > 0.0
            && self.rel_tol > 0.0
            && self.initial_step > 0.0
            && self.max_steps >= 1
            && self.abs_tol.is_finite()
            && self.rel_tol.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "invalid tolerances {self:?}"
            )))
        }
    }
}

/// `y' = rhs(t, y)` on `[t0, t1]`. The right-hand side writes into its last
/// argument.
pub struct OdeProblem<F> {
    pub rhs: F,
    pub y0: Vec<f64>,
    pub t0: f64,
    pub t1: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

impl std::ops::AddAssign for StepStats {
    fn add_assign(&mut self, o: Self) {
        self.accepted += o.accepted;
        self.rejected += o.rejected;
        self.rhs_evals += o.rhs_evals;
    }
}

#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub state: Vec<f64>,
    pub stats: StepStats,
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn eval<F>(rhs: &mut F, t: f64, y: &[f64], out: &mut [f64]) -> Result<()>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    rhs(t, y, out)?;
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Evaluation {
            what: "ode right-hand side",
            t,
            x: f64::NAN,
            y: f64::NAN,
        });
    }
    Ok(())
}

struct DopriWork {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
}

impl DopriWork {
    fn new(n: usize) -> Self {
        DopriWork {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            y_new: vec![0.0; n],
        }
    }

    /// One trial step from `(t, y)` with `k[0] = f(t, y)` already filled.
    /// Leaves the fifth-order solution in `y_new`, `f(t + h, y_new)` in `k[6]`
    /// and returns the raw max-norm of the embedded error estimate.
    fn step<F>(&mut self, rhs: &mut F, t: f64, y: &[f64], h: f64) -> Result<f64>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let n = y.len();
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let tmp = &mut self.tmp;
        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        eval(rhs, t + C2 * h, tmp, k2)?;
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        eval(rhs, t + C3 * h, tmp, k3)?;
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        eval(rhs, t + C4 * h, tmp, k4)?;
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        eval(rhs, t + C5 * h, tmp, k5)?;
        for i in 0..n {
            tmp[i] =
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        eval(rhs, t + h, tmp, k6)?;
        let y_new = &mut self.y_new;
        for i in 0..n {
            y_new[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        eval(rhs, t + h, y_new, k7)?;
        let mut err = 0.0_f64;
        for i in 0..n {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            err = err.max(e.abs());
        }
        Ok(err)
    }
}

/// A single uncontrolled Dormand-Prince step. Returns the fifth-order
/// solution and the max-norm of the embedded error estimate.
pub fn dopri5_step<F>(mut rhs: F, t: f64, y: &[f64], h: f64) -> Result<(Vec<f64>, f64)>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let mut work = DopriWork::new(y.len());
    eval(&mut rhs, t, y, &mut work.k[0])?;
    let err = work.step(&mut rhs, t, y, h)?;
    Ok((work.y_new, err))
}

/// Integrate to `t1` with the adaptive Dormand-Prince pair. A step is
/// accepted when the embedded error estimate satisfies
/// `err <= abs_tol + rel_tol * max(|y|_inf, |y_new|_inf)`; the last step is
/// clipped to land on `t1` exactly.
pub fn rk45_adaptive<F>(problem: OdeProblem<F>, tol: &ToleranceSpec) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    tol.validate()?;
    let OdeProblem {
        mut rhs,
        y0,
        t0,
        t1,
    } = problem;
    if !(t1 >= t0) {
        return Err(Error::InvalidArgument(format!(
            "integration interval [{t0}, {t1}] is reversed"
        )));
    }
    let mut stats = StepStats::default();
    let mut y = y0;
    if t1 == t0 || y.is_empty() {
        return Ok(OdeSolution { state: y, stats });
    }

    let mut work = DopriWork::new(y.len());
    eval(&mut rhs, t0, &y, &mut work.k[0])?;
    stats.rhs_evals += 1;

    let alpha = 0.2 - 0.75 * PI_BETA;
    let span = t1 - t0;
    let mut t = t0;
    let mut h = tol.initial_step.min(span);
    let mut err_prev = 1e-4_f64;
    let mut rejected_last = false;

    while t < t1 {
        if stats.accepted + stats.rejected >= tol.max_steps {
            return Err(Error::NoConvergence(format!(
                "step limit {} reached at t = {t}",
                tol.max_steps
            )));
        }
        let remaining = t1 - t;
        let last = h >= remaining * (1.0 - 1e-12);
        if last {
            h = remaining;
        }
        let raw = work.step(&mut rhs, t, &y, h)?;
        stats.rhs_evals += 6;
        let scale = tol.abs_tol
            + tol.rel_tol * crate::grid::max_abs(&y).max(crate::grid::max_abs(&work.y_new));
        let err = raw / scale;

        if err <= 1.0 {
            stats.accepted += 1;
            t = if last { t1 } else { t + h };
            std::mem::swap(&mut y, &mut work.y_new);
            work.k.swap(0, 6);
            let err = err.max(1e-10);
            let mut factor = SAFETY * err.powf(-alpha) * err_prev.powf(PI_BETA);
            factor = factor.clamp(MIN_FACTOR, MAX_FACTOR);
            if rejected_last {
                factor = factor.min(1.0);
            }
            h *= factor;
            err_prev = err;
            rejected_last = false;
        } else {
            stats.rejected += 1;
            let factor = (SAFETY * err.powf(-alpha)).max(MIN_FACTOR);
            h *= factor;
            rejected_last = true;
            if h <= span * f64::EPSILON {
                return Err(Error::NoConvergence(format!(
                    "step size underflow at t = {t}"
                )));
            }
        }
    }
    Ok(OdeSolution { state: y, stats })
}

/// Classical fourth-order Runge-Kutta with `n_substeps` equal steps.
pub fn rk4_fixed<F>(problem: OdeProblem<F>, n_substeps: usize) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    if n_substeps == 0 {
        return Err(Error::InvalidArgument(
            "n_substeps must be at least 1".into(),
        ));
    }
    let OdeProblem {
        mut rhs,
        y0,
        t0,
        t1,
    } = problem;
    let n = y0.len();
    let h = (t1 - t0) / n_substeps as f64;
    let mut y = y0;
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    );
    for s in 0..n_substeps {
        let t = t0 + s as f64 * h;
        eval(&mut rhs, t, &y, &mut k1)?;
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        eval(&mut rhs, t + 0.5 * h, &tmp, &mut k2)?;
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        eval(&mut rhs, t + 0.5 * h, &tmp, &mut k3)?;
        for i in 0..n {
            tmp[i] = y[i] + h * k3[i];
        }
        eval(&mut rhs, t + h, &tmp, &mut k4)?;
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(y)
}
