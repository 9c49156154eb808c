//! Finite-difference operators for the semidiscrete problem: the centered
//! Laplacian, first-order upwind convection, inflow-boundary detection, and
//! the full method-of-lines right-hand side.
//!
//! Boundary data are never folded into an operator matrix. Stencils read
//! them on demand from a [`BoundaryValues`] snapshot, so a time-dependent
//! trace costs nothing but a fresh snapshot.
//!
//! Convection follows `du/dt = a . grad(u)`. With `a_k > 0` characteristics
//! travel towards decreasing `x_k`, so information enters through the
//! high-coordinate face and the forward difference is the upwind one.

use std::borrow::Cow;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Face, Field, Grid, Point};
use crate::scenario::Scenario;

pub type SpaceFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type SpaceTimeFn = Arc<dyn Fn(f64, Point) -> f64 + Send + Sync>;

/// Boundary values at one instant, one slot per stencil-reachable node of
/// each face. `None` marks a node without declared data.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryValues {
    faces: Vec<Vec<Option<f64>>>,
}

impl BoundaryValues {
    /// Sample `b` on every face node.
    pub fn sample(grid: &Grid, b: impl Fn(Point) -> f64) -> Self {
        let faces = grid
            .faces()
            .map(|face| {
                (0..grid.face_len(face))
                    .map(|j| Some(b(grid.face_point(face, j))))
                    .collect()
            })
            .collect();
        BoundaryValues { faces }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::sample(grid, |_| 0.0)
    }

    /// No declared values anywhere.
    pub fn empty(grid: &Grid) -> Self {
        BoundaryValues {
            faces: grid.faces().map(|f| vec![None; grid.face_len(f)]).collect(),
        }
    }

    /// Keep only the values on `inflow` nodes.
    pub fn restricted_to(&self, inflow: &InflowSet) -> Self {
        let faces = self
            .faces
            .iter()
            .zip(&inflow.faces)
            .map(|(vals, mask)| {
                vals.iter()
                    .zip(mask)
                    .map(|(v, &keep)| if keep { *v } else { None })
                    .collect()
            })
            .collect();
        BoundaryValues { faces }
    }

    pub fn set(&mut self, face: Face, node: usize, value: Option<f64>) {
        self.faces[face.index()][node] = value;
    }

    pub fn get(&self, face: Face, node: usize) -> Result<f64> {
        self.faces
            .get(face.index())
            .and_then(|f| f.get(node))
            .copied()
            .flatten()
            .ok_or_else(|| Error::Boundary {
                face: face.to_string(),
                node,
            })
    }

    /// Combine two snapshots slot by slot; undeclared slots stay undeclared.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let faces = self
            .faces
            .iter()
            .zip(&other.faces)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| match (x, y) {
                        (Some(x), Some(y)) => Some(f(*x, *y)),
                        _ => None,
                    })
                    .collect()
            })
            .collect();
        BoundaryValues { faces }
    }

    pub fn is_finite(&self) -> bool {
        self.faces.iter().flatten().flatten().all(|v| v.is_finite())
    }

    /// Largest declared value in magnitude.
    pub fn max_abs(&self) -> f64 {
        self.faces
            .iter()
            .flatten()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// How the time derivative of the boundary data is obtained.
#[derive(Clone)]
pub enum TimeDerivative {
    /// Closed-form expression.
    Analytic(SpaceTimeFn),
    /// Central difference in time with the given half-width.
    CentralDifference(f64),
    /// Not available; the linear correction cannot be built.
    Unavailable,
}

/// Dirichlet data `b(t, x)` on the boundary of the unit interval or square.
#[derive(Clone)]
pub struct BoundaryTrace {
    value: SpaceTimeFn,
    derivative: TimeDerivative,
    time_dependent: bool,
}

impl BoundaryTrace {
    /// Time-invariant data; the time derivative is identically zero.
    pub fn constant_in_time(b: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        let zero: SpaceTimeFn = Arc::new(|_, _| 0.0);
        BoundaryTrace {
            value: Arc::new(move |_, p| b(p)),
            derivative: TimeDerivative::Analytic(zero),
            time_dependent: false,
        }
    }

    pub fn time_dependent(value: SpaceTimeFn, derivative: TimeDerivative) -> Self {
        BoundaryTrace {
            value,
            derivative,
            time_dependent: true,
        }
    }

    pub fn zero() -> Self {
        Self::constant_in_time(|_| 0.0)
    }

    pub fn is_time_dependent(&self) -> bool {
        self.time_dependent
    }

    pub fn derivative_source(&self) -> &TimeDerivative {
        &self.derivative
    }

    pub fn value(&self, t: f64, p: Point) -> f64 {
        (self.value)(t, p)
    }

    /// `db/dt` at a point, or `None` when no derivative is available.
    pub fn time_derivative(&self, t: f64, p: Point) -> Option<f64> {
        match &self.derivative {
            TimeDerivative::Analytic(db) => Some(db(t, p)),
            TimeDerivative::CentralDifference(delta) => {
                Some((self.value(t + delta, p) - self.value(t - delta, p)) / (2.0 * delta))
            }
            TimeDerivative::Unavailable => None,
        }
    }

    /// Snapshot of `b(t)` on every face node.
    pub fn at(&self, grid: &Grid, t: f64) -> Result<BoundaryValues> {
        let values = BoundaryValues::sample(grid, |p| self.value(t, p));
        check_boundary_finite(grid, &values, t, "boundary data")?;
        Ok(values)
    }

    /// Snapshot of `db/dt` on every face node.
    pub fn derivative_at(&self, grid: &Grid, t: f64) -> Result<BoundaryValues> {
        if matches!(self.derivative, TimeDerivative::Unavailable) {
            return Err(Error::Capability(
                "time derivative of the boundary data is not available".into(),
            ));
        }
        let values =
            BoundaryValues::sample(grid, |p| self.time_derivative(t, p).unwrap_or(f64::NAN));
        check_boundary_finite(grid, &values, t, "boundary time derivative")?;
        Ok(values)
    }
}

fn check_boundary_finite(
    grid: &Grid,
    values: &BoundaryValues,
    t: f64,
    what: &'static str,
) -> Result<()> {
    for face in grid.faces() {
        for j in 0..grid.face_len(face) {
            if let Ok(v) = values.get(face, j) {
                if !v.is_finite() {
                    let p = grid.face_point(face, j);
                    return Err(Error::Evaluation {
                        what,
                        t,
                        x: p[0],
                        y: p[1],
                    });
                }
            }
        }
    }
    Ok(())
}

/// Convection velocity, one component evaluator per axis.
#[derive(Clone)]
pub struct VelocityField {
    components: Vec<SpaceFn>,
}

impl VelocityField {
    pub fn new(components: Vec<SpaceFn>) -> Self {
        VelocityField { components }
    }

    pub fn zero(dim: usize) -> Self {
        VelocityField {
            components: (0..dim).map(|_| Arc::new(|_| 0.0) as SpaceFn).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, axis: usize, p: Point) -> f64 {
        (self.components[axis])(p)
    }

    pub fn at(&self, p: Point) -> [f64; 2] {
        let mut a = [0.0; 2];
        for (k, c) in self.components.iter().enumerate() {
            a[k] = c(p);
        }
        a
    }
}

/// Inflow boundary nodes, as a mask over the face nodes of a grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InflowSet {
    faces: Vec<Vec<bool>>,
}

impl InflowSet {
    pub fn contains(&self, face: Face, node: usize) -> bool {
        self.faces[face.index()][node]
    }

    /// Faces with at least one inflow node.
    pub fn faces(&self) -> Vec<Face> {
        self.faces
            .iter()
            .enumerate()
            .filter(|(_, m)| m.iter().any(|&b| b))
            .map(|(i, _)| Face::from_index(i))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.faces.iter().flatten().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Boundary nodes where `a . n > 0`, `n` the outward normal.
pub fn inflow_boundary(a: &VelocityField, grid: &Grid) -> InflowSet {
    let faces = grid
        .faces()
        .map(|face| {
            (0..grid.face_len(face))
                .map(|j| {
                    let p = grid.face_point(face, j);
                    a.component(face.axis, p) * face.normal_sign() > 0.0
                })
                .collect()
        })
        .collect();
    InflowSet { faces }
}

/// Grid-bound operator data shared by every right-hand side evaluation.
#[derive(Clone)]
pub struct SpatialOps {
    grid: Grid,
    diffusion: f64,
    velocity: Vec<[f64; 2]>,
    inflow: InflowSet,
    points: Vec<Point>,
}

impl SpatialOps {
    pub fn new(grid: Grid, diffusion: f64, a: &VelocityField) -> Self {
        let points = grid.points();
        let velocity = points.iter().map(|&p| a.at(p)).collect();
        SpatialOps {
            inflow: inflow_boundary(a, &grid),
            grid,
            diffusion,
            velocity,
            points,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }

    pub fn inflow(&self) -> &InflowSet {
        &self.inflow
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Neighbour of `(ix, iy)` one step along `axis` in direction `dir`
    /// (`-1` or `+1`): either an interior value or a boundary value.
    #[inline]
    fn neighbour(
        &self,
        u: &[f64],
        bc: &BoundaryValues,
        ix: usize,
        iy: usize,
        axis: usize,
        forward: bool,
    ) -> Result<f64> {
        let g = &self.grid;
        let (i, j) = if axis == 0 { (ix, iy) } else { (iy, ix) };
        let n = g.n(axis);
        if forward {
            if i + 1 < n {
                Ok(u[self.shift(ix, iy, axis, 1)])
            } else {
                bc.get(Face { axis, high: true }, face_node(g, j))
            }
        } else if i > 0 {
            Ok(u[self.shift(ix, iy, axis, -1)])
        } else {
            bc.get(Face { axis, high: false }, face_node(g, j))
        }
    }

    #[inline]
    fn shift(&self, ix: usize, iy: usize, axis: usize, by: isize) -> usize {
        if axis == 0 {
            self.grid.index((ix as isize + by) as usize, iy)
        } else {
            self.grid.index(ix, (iy as isize + by) as usize)
        }
    }

    /// `out = d * Lap_h u` with boundary slots read from `bc`.
    pub fn diffusion_into(&self, u: &[f64], bc: &BoundaryValues, out: &mut [f64]) -> Result<()> {
        let g = &self.grid;
        let d = self.diffusion;
        let nx = g.n(0);
        if g.dim() == 1 {
            let inv_h2 = 1.0 / (g.spacing(0) * g.spacing(0));
            let left = || {
                bc.get(
                    Face {
                        axis: 0,
                        high: false,
                    },
                    0,
                )
            };
            let right = || {
                bc.get(
                    Face {
                        axis: 0,
                        high: true,
                    },
                    0,
                )
            };
            for i in 0..nx {
                let um = if i == 0 { left()? } else { u[i - 1] };
                let up = if i + 1 == nx { right()? } else { u[i + 1] };
                out[i] = d * (um - 2.0 * u[i] + up) * inv_h2;
            }
            return Ok(());
        }
        let ny = g.n(1);
        let inv_hx2 = 1.0 / (g.spacing(0) * g.spacing(0));
        let inv_hy2 = 1.0 / (g.spacing(1) * g.spacing(1));
        for iy in 0..ny {
            for ix in 0..nx {
                let k = g.index(ix, iy);
                let c = u[k];
                let w = self.neighbour(u, bc, ix, iy, 0, false)?;
                let e = self.neighbour(u, bc, ix, iy, 0, true)?;
                let s = self.neighbour(u, bc, ix, iy, 1, false)?;
                let n = self.neighbour(u, bc, ix, iy, 1, true)?;
                out[k] = d * ((w - 2.0 * c + e) * inv_hx2 + (s - 2.0 * c + n) * inv_hy2);
            }
        }
        Ok(())
    }

    /// `out += a . grad_h u` using first-order upwind differences.
    pub fn convection_add(&self, u: &[f64], bc: &BoundaryValues, out: &mut [f64]) -> Result<()> {
        let g = &self.grid;
        let (nx, ny) = (g.n(0), g.n(1));
        for iy in 0..ny {
            for ix in 0..nx {
                let k = g.index(ix, iy);
                for axis in 0..g.dim() {
                    let ak = self.velocity[k][axis];
                    if ak == 0.0 {
                        continue;
                    }
                    let inv_h = 1.0 / g.spacing(axis);
                    let diff = if ak > 0.0 {
                        self.neighbour(u, bc, ix, iy, axis, true)? - u[k]
                    } else {
                        u[k] - self.neighbour(u, bc, ix, iy, axis, false)?
                    };
                    out[k] += ak * diff * inv_h;
                }
            }
        }
        Ok(())
    }

    /// `out = a . grad_h u`.
    pub fn convection_into(&self, u: &[f64], bc: &BoundaryValues, out: &mut [f64]) -> Result<()> {
        out.fill(0.0);
        self.convection_add(u, bc, out)
    }

    /// `out = (D + a . grad) u` with Dirichlet data `bc` for diffusion and its
    /// inflow restriction for convection.
    pub fn operator_into(&self, u: &[f64], bc: &BoundaryValues, out: &mut [f64]) -> Result<()> {
        self.diffusion_into(u, bc, out)?;
        let inflow_bc = bc.restricted_to(&self.inflow);
        self.convection_add(u, &inflow_bc, out)
    }
}

#[inline]
fn face_node(g: &Grid, j: usize) -> usize {
    if g.dim() == 1 {
        0
    } else {
        j
    }
}

/// `d * Lap_h u` with boundary values from `bc`.
pub fn apply_laplacian(u: &Field, bc: &BoundaryValues, d: f64) -> Result<Field> {
    if d <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "diffusion coefficient must be positive, got {d}"
        )));
    }
    let ops = SpatialOps::new(*u.grid(), d, &VelocityField::zero(u.grid().dim()));
    let mut out = vec![0.0; u.grid().len()];
    ops.diffusion_into(u.values(), bc, &mut out)?;
    Field::from_values(*u.grid(), out)
}

/// First-order upwind `a . grad_h u` with inflow values from `inflow_bc`.
pub fn apply_upwind_convection(
    u: &Field,
    a: &VelocityField,
    inflow_bc: &BoundaryValues,
) -> Result<Field> {
    let ops = SpatialOps::new(*u.grid(), 1.0, a);
    let mut out = vec![0.0; u.grid().len()];
    ops.convection_into(u.values(), inflow_bc, &mut out)?;
    Field::from_values(*u.grid(), out)
}

/// The semidiscrete system of a scenario: `u' = D u + a . grad u + f`.
pub struct MethodOfLines<'s> {
    scenario: &'s Scenario,
    ops: SpatialOps,
    static_bc: Option<BoundaryValues>,
}

impl<'s> MethodOfLines<'s> {
    pub fn new(scenario: &'s Scenario) -> Result<Self> {
        let ops = SpatialOps::new(scenario.grid, scenario.diffusion, &scenario.velocity);
        let static_bc = if scenario.boundary.is_time_dependent() {
            None
        } else {
            Some(scenario.boundary.at(&scenario.grid, 0.0)?)
        };
        Ok(MethodOfLines {
            scenario,
            ops,
            static_bc,
        })
    }

    pub fn scenario(&self) -> &'s Scenario {
        self.scenario
    }

    pub fn ops(&self) -> &SpatialOps {
        &self.ops
    }

    /// Dirichlet data at time `t`.
    pub fn boundary_at(&self, t: f64) -> Result<Cow<'_, BoundaryValues>> {
        match &self.static_bc {
            Some(bc) => Ok(Cow::Borrowed(bc)),
            None => self.scenario.boundary.at(&self.ops.grid, t).map(Cow::Owned),
        }
    }

    /// `out[i] += f(t, u[i], x_i)`.
    pub fn reaction_add(&self, t: f64, u: &[f64], out: &mut [f64]) -> Result<()> {
        for ((o, &ui), &p) in out.iter_mut().zip(u).zip(&self.ops.points) {
            let v = self.scenario.reaction(t, ui, p);
            if !v.is_finite() {
                return Err(Error::Evaluation {
                    what: "reaction term",
                    t,
                    x: p[0],
                    y: p[1],
                });
            }
            *o += v;
        }
        Ok(())
    }

    /// Full right-hand side with boundary data `b(t)`.
    pub fn rhs_into(&self, t: f64, u: &[f64], out: &mut [f64]) -> Result<()> {
        let bc = self.boundary_at(t)?;
        self.ops.operator_into(u, &bc, out)?;
        self.reaction_add(t, u, out)
    }
}

/// `D u + a . grad u + f(t, u)` on the interior nodes, with Dirichlet data
/// `b(t)` and inflow data `b(t)` restricted to the inflow boundary.
pub fn full_rhs(t: f64, u: &Field, scenario: &Scenario) -> Result<Field> {
    if u.grid() != &scenario.grid {
        return Err(Error::InvalidArgument(
            "field and scenario use different grids".into(),
        ));
    }
    let mol = MethodOfLines::new(scenario)?;
    let mut out = vec![0.0; u.grid().len()];
    mol.rhs_into(t, u.values(), &mut out)?;
    Field::from_values(*u.grid(), out)
}
