//! Uniform grids on the unit interval and unit square, and fields of
//! interior-node values.
//!
//! Only interior nodes carry unknowns. Node `i` on an axis with `n`
//! interior nodes sits at `(i + 1) * h` with `h = 1 / (n + 1)`; the faces at
//! coordinate 0 and 1 are boundary and are never stored in a [`Field`].

use crate::error::{Error, Result};

/// Physical coordinates of a node. In 1D the second entry is always 0.
pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    n: [usize; 2],
    h: [f64; 2],
}

/// A boundary face: `axis` is the normal direction, `high` selects the
/// coordinate-1 side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Face {
    pub axis: usize,
    pub high: bool,
}

impl Face {
    /// Dense index in `0..2 * dim`.
    pub fn index(self) -> usize {
        2 * self.axis + usize::from(self.high)
    }

    pub fn from_index(index: usize) -> Self {
        Face {
            axis: index / 2,
            high: index % 2 == 1,
        }
    }

    /// Outward unit normal component along `axis`.
    pub fn normal_sign(self) -> f64 {
        if self.high {
            1.0
        } else {
            -1.0
        }
    }
}

impl std::fmt::Display for Face {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let axis = ["x", "y"][self.axis];
        write!(f, "{axis}={}", u8::from(self.high))
    }
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Interior node count along `axis` (1 for the unused axis in 1D).
    pub fn n(&self, axis: usize) -> usize {
        self.n[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.h[axis]
    }

    /// Total number of interior nodes.
    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinate of interior node `i` along `axis`.
    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        (i + 1) as f64 * self.h[axis]
    }

    /// Row-major flat index of `(ix, iy)`.
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.n[0] + ix
    }

    /// Inverse of [`Grid::index`].
    pub fn unravel(&self, index: usize) -> (usize, usize) {
        (index % self.n[0], index / self.n[0])
    }

    pub fn point(&self, index: usize) -> Point {
        let (ix, iy) = self.unravel(index);
        match self.dim {
            1 => [self.coordinate(0, ix), 0.0],
            _ => [self.coordinate(0, ix), self.coordinate(1, iy)],
        }
    }

    pub fn points(&self) -> Vec<Point> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    pub fn faces(&self) -> impl Iterator<Item = Face> {
        (0..2 * self.dim).map(Face::from_index)
    }

    /// Number of boundary nodes on a face that interior stencils can reach.
    /// Corners are never reached by axis-aligned stencils and are excluded.
    pub fn face_len(&self, face: Face) -> usize {
        match self.dim {
            1 => 1,
            _ => self.n[1 - face.axis],
        }
    }

    /// Coordinates of node `j` on `face`.
    pub fn face_point(&self, face: Face, j: usize) -> Point {
        let fixed = if face.high { 1.0 } else { 0.0 };
        match (self.dim, face.axis) {
            (1, _) => [fixed, 0.0],
            (_, 0) => [fixed, self.coordinate(1, j)],
            _ => [self.coordinate(0, j), fixed],
        }
    }

    /// Every boundary node of the closed domain, corners included.
    pub fn boundary_points(&self) -> Vec<Point> {
        let mut out: Vec<Point> = self
            .faces()
            .flat_map(|face| (0..self.face_len(face)).map(move |j| self.face_point(face, j)))
            .collect();
        if self.dim == 2 {
            out.extend([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        }
        out
    }

    /// Human-readable description of how the grid size is interpreted.
    pub fn reading(&self) -> String {
        match self.dim {
            1 => format!("{} interior unknowns, h = 1/{}", self.n[0], self.n[0] + 1),
            _ => format!(
                "{}x{} interior unknowns, h = 1/{} x 1/{}",
                self.n[0],
                self.n[1],
                self.n[0] + 1,
                self.n[1] + 1
            ),
        }
    }
}

/// Build a uniform grid on `[0,1]^dim` with `counts[axis]` interior nodes per
/// axis.
pub fn make_grid(dim: usize, counts: &[usize]) -> Result<Grid> {
    if dim != 1 && dim != 2 {
        return Err(Error::InvalidArgument(format!(
            "dimension must be 1 or 2, got {dim}"
        )));
    }
    if counts.len() != dim {
        return Err(Error::InvalidArgument(format!(
            "expected {dim} interior counts, got {}",
            counts.len()
        )));
    }
    if let Some(&bad) = counts.iter().find(|&&c| c == 0) {
        return Err(Error::InvalidArgument(format!(
            "interior node count must be positive, got {bad}"
        )));
    }
    let mut n = [1usize; 2];
    let mut h = [0.0; 2];
    for (axis, &count) in counts.iter().enumerate() {
        n[axis] = count;
        h[axis] = 1.0 / (count + 1) as f64;
    }
    Ok(Grid { dim, n, h })
}

/// Values over the interior nodes of a grid, row-major in 2D.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Field {
            values: vec![0.0; grid.len()],
            grid,
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values but grid has {} interior nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            let p = grid.point(i);
            return Err(Error::Evaluation {
                what: "field value",
                t: f64::NAN,
                x: p[0],
                y: p[1],
            });
        }
        Ok(Field { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at node `(ix, iy)`.
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.grid.index(ix, iy)]
    }

    /// Index of the node closest to `p` (ties resolve to the lower index).
    pub fn nearest_index(&self, p: Point) -> usize {
        let mut best = (f64::INFINITY, 0);
        for i in 0..self.grid.len() {
            let q = self.grid.point(i);
            let d = (q[0] - p[0]).hypot(q[1] - p[1]);
            // near-ties within rounding keep the earlier node
            if d < best.0 - 1e-12 {
                best = (d, i);
            }
        }
        best.1
    }
}

/// Sample `g` at every interior node.
pub fn field_from_fn(grid: Grid, g: impl Fn(Point) -> f64) -> Result<Field> {
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let p = grid.point(i);
        let v = g(p);
        if !v.is_finite() {
            return Err(Error::Evaluation {
                what: "sampled function",
                t: f64::NAN,
                x: p[0],
                y: p[1],
            });
        }
        values.push(v);
    }
    Ok(Field { grid, values })
}

/// Discrete maximum norm of `a - b` over interior nodes.
pub fn inf_norm_diff(a: &Field, b: &Field) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::InvalidArgument(
            "fields live on different grids".into(),
        ));
    }
    Ok(max_abs_diff(&a.values, &b.values))
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

pub(crate) fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}
