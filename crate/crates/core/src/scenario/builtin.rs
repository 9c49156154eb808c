use std::f64::consts::PI;
use std::sync::Arc;

use super::Scenario;
use crate::error::{Error, Result};
use crate::grid::{make_grid, Point};
use crate::operators::{BoundaryTrace, SpaceFn, TimeDerivative, VelocityField};

pub const BUILTIN_NAMES: [&str; 4] = ["ex1", "ex2", "ex3", "ex2d"];

pub fn builtin_names() -> &'static [&'static str] {
    &BUILTIN_NAMES
}

fn x_squared() -> VelocityField {
    VelocityField::new(vec![Arc::new(|p: Point| p[0] * p[0])])
}

/// Source term that makes `x(1-x)e^t` solve
/// `u_t = 0.1 u_xx + x^2 u_x + u^2 + phi`.
pub(crate) fn ex1_source(t: f64, x: f64) -> f64 {
    let x2 = x * x;
    (0.2 + x - 2.0 * x2 + 2.0 * x2 * x) * t.exp() - (x2 - 2.0 * x2 * x + x2 * x2) * (2.0 * t).exp()
}

/// One of the built-in experiments: `ex1`, `ex2`, `ex3` (1D, 200 interior
/// nodes) or `ex2d` (50x50 interior nodes).
pub fn builtin_scenario(name: &str) -> Result<Scenario> {
    let one_d = make_grid(1, &[200])?;
    let s = match name {
        "ex1" => Scenario {
            id: "ex1".into(),
            grid: one_d,
            diffusion: 0.1,
            velocity: x_squared(),
            reaction: Arc::new(|t, u, p| u * u + ex1_source(t, p[0])),
            boundary: BoundaryTrace::zero(),
            initial: Arc::new(|p| p[0] * (1.0 - p[0])),
            final_time: 1.0,
            exact: Some(Arc::new(|t, p| p[0] * (1.0 - p[0]) * t.exp())),
            reference_tol: 1e-9,
            fingerprint: String::new(),
        },
        "ex2" => Scenario {
            id: "ex2".into(),
            grid: one_d,
            diffusion: 0.1,
            velocity: x_squared(),
            reaction: Arc::new(|_, u, _| u * u),
            // b1 = 1 at x = 0, b2 = 2 at x = 1
            boundary: BoundaryTrace::constant_in_time(|p| 1.0 + p[0]),
            initial: Arc::new(|p| 1.0 + (0.5 * PI * p[0]).sin()),
            final_time: 1.0,
            exact: None,
            reference_tol: 1e-9,
            fingerprint: String::new(),
        },
        "ex3" => {
            let value = Arc::new(|t: f64, p: Point| {
                (1.0 - p[0]) * (1.0 + (5.0 * t).sin()) + p[0] * (1.0 + (10.0 * PI * t).sin())
            });
            let derivative = Arc::new(|t: f64, p: Point| {
                (1.0 - p[0]) * 5.0 * (5.0 * t).cos() + p[0] * 10.0 * PI * (10.0 * PI * t).cos()
            });
            Scenario {
                id: "ex3".into(),
                grid: one_d,
                diffusion: 0.1,
                velocity: x_squared(),
                reaction: Arc::new(|t, _, p| {
                    let x = p[0];
                    let s = (PI * x).sin();
                    let c = (PI * x).cos();
                    t.exp()
                        * (1.0 + (1.0 + 0.2 * PI * PI) * s * s
                            - 0.2 * PI * PI * c * c
                            - x * x * PI * (2.0 * PI * x).sin())
                }),
                boundary: BoundaryTrace::time_dependent(
                    value,
                    TimeDerivative::Analytic(derivative),
                ),
                initial: Arc::new(|p| {
                    let s = (PI * p[0]).sin();
                    1.0 + s * s
                }),
                final_time: 1.0,
                exact: None,
                reference_tol: 1e-9,
                fingerprint: String::new(),
            }
        }
        "ex2d" => Scenario {
            id: "ex2d".into(),
            grid: make_grid(2, &[50, 50])?,
            diffusion: 0.1,
            velocity: VelocityField::new(vec![
                Arc::new(|p: Point| p[0] * p[0]) as SpaceFn,
                Arc::new(|p: Point| p[1] * p[1]),
            ]),
            reaction: Arc::new(|_, u, _| u.exp()),
            boundary: BoundaryTrace::zero(),
            initial: Arc::new(|p| {
                let (x, y) = (p[0], p[1]);
                (-100.0 * (x - 0.5).powi(2)).exp()
                    * (-100.0 * (y - 0.5).powi(2)).exp()
                    * (PI * x).sin()
                    * (PI * y).sin()
            }),
            final_time: 1.0,
            exact: None,
            reference_tol: 1e-7,
            fingerprint: String::new(),
        },
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown scenario `{other}`; valid names: {}",
                BUILTIN_NAMES.join(", ")
            )))
        }
    };
    Ok(Scenario {
        fingerprint: format!("builtin:{name}:v1"),
        ..s
    })
}

/// Scenario-file text describing the same problem as [`builtin_scenario`].
pub fn builtin_source(name: &str) -> Option<&'static str> {
    Some(match name {
        "ex1" => EX1,
        "ex2" => EX2,
        "ex3" => EX3,
        "ex2d" => EX2D,
        _ => return None,
    })
}

const EX1: &str = "\
# homogeneous Dirichlet data, manufactured exact solution x(1-x)e^t
[domain]
dim = 1
n_interior = 200

[equation]
d = 0.1
a_x = x^2
f = u^2 + (0.2 + x - 2*x^2 + 2*x^3)*exp(t) - (x^2 - 2*x^3 + x^4)*exp(2*t)

[boundary]
b = 0

[initial]
u0 = x*(1 - x)

[time]
T = 1
ref_tol = 1e-9

[solution]
exact = x*(1 - x)*exp(t)
";

const EX2: &str = "\
# constant inhomogeneous Dirichlet data b(0) = 1, b(1) = 2
[domain]
dim = 1
n_interior = 200

[equation]
d = 0.1
a_x = x^2
f = u^2

[boundary]
b = 1 + x

[initial]
u0 = 1 + sin(pi*x/2)

[time]
T = 1
ref_tol = 1e-9
";

const EX3: &str = "\
# time-dependent Dirichlet data
[domain]
dim = 1
n_interior = 200

[equation]
d = 0.1
a_x = x^2
f = exp(t)*(1 + (1 + 0.2*pi^2)*sin(pi*x)^2 - 0.2*pi^2*cos(pi*x)^2 - x^2*pi*sin(2*pi*x))

[boundary]
b = (1 - x)*(1 + sin(5*t)) + x*(1 + sin(10*pi*t))
db_dt = (1 - x)*5*cos(5*t) + x*10*pi*cos(10*pi*t)

[initial]
u0 = 1 + sin(pi*x)^2

[time]
T = 1
ref_tol = 1e-9
";

const EX2D: &str = "\
# two-dimensional problem with exponential reaction
[domain]
dim = 2
n_interior = 50, 50

[equation]
d = 0.1
a_x = x^2
a_y = y^2
f = exp(u)

[boundary]
b = 0

[initial]
u0 = exp(-100*(x - 0.5)^2)*exp(-100*(y - 0.5)^2)*sin(pi*x)*sin(pi*y)

[time]
T = 1
ref_tol = 1e-7
";
