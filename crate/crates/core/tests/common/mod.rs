//! Dense matrix-exponential oracle for small affine semidiscrete systems.
#![allow(dead_code)]

use std::sync::Arc;

use splitlab::operators::TimeDerivative;
use splitlab::{make_grid, BoundaryTrace, Scenario, VelocityField};

pub type Mat = Vec<Vec<f64>>;

pub fn zeros(n: usize) -> Mat {
    vec![vec![0.0; n]; n]
}

pub fn identity(n: usize) -> Mat {
    let mut m = zeros(n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let mut c = zeros(n);
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            for j in 0..n {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

pub fn matvec(a: &Mat, x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum())
        .collect()
}

fn norm1(a: &Mat) -> f64 {
    (0..a.len())
        .map(|j| a.iter().map(|r| r[j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(A)` by scaling and squaring with a truncated Taylor series.
pub fn expm(a: &Mat) -> Mat {
    let n = a.len();
    let norm = norm1(a);
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scale = 0.5f64.powi(s);
    let a: Mat = a
        .iter()
        .map(|r| r.iter().map(|v| v * scale).collect())
        .collect();
    let mut sum = identity(n);
    let mut term = identity(n);
    for k in 1..=30 {
        term = matmul(&term, &a);
        for row in term.iter_mut() {
            for v in row.iter_mut() {
                *v /= k as f64;
            }
        }
        for i in 0..n {
            for j in 0..n {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..s {
        sum = matmul(&sum, &sum);
    }
    sum
}

/// Solution at `t0 + dt` of `v' = M v + p t + q`, `v(t0) = v0`, via the
/// exponential of the augmented matrix acting on `(v, t, 1)`.
pub fn affine_flow(m: &Mat, p: &[f64], q: &[f64], v0: &[f64], t0: f64, dt: f64) -> Vec<f64> {
    let n = m.len();
    let mut aug = zeros(n + 2);
    for i in 0..n {
        for j in 0..n {
            aug[i][j] = m[i][j] * dt;
        }
        aug[i][n] = p[i] * dt;
        aug[i][n + 1] = q[i] * dt;
    }
    aug[n][n + 1] = dt;
    let e = expm(&aug);
    let mut x = v0.to_vec();
    x.push(t0);
    x.push(1.0);
    matvec(&e, &x)[..n].to_vec()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scaled(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn mat_add(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect())
        .collect()
}

/// Five-node affine test problem `u_t = d u_xx + a u_x - k u + x` with
/// constant `a > 0` and Dirichlet data `b(t, x) = 1 + x + beta t`.
pub struct AffineProblem {
    pub n: usize,
    pub h: f64,
    pub d: f64,
    pub a: f64,
    pub k: f64,
    pub beta: f64,
}

impl AffineProblem {
    pub fn new(beta: f64) -> Self {
        AffineProblem {
            n: 5,
            h: 1.0 / 6.0,
            d: 0.1,
            a: 0.7,
            k: 0.5,
            beta,
        }
    }

    pub fn x(&self) -> Vec<f64> {
        (1..=self.n).map(|i| i as f64 * self.h).collect()
    }

    pub fn b(&self, t: f64, x: f64) -> f64 {
        1.0 + x + self.beta * t
    }

    pub fn scenario(&self) -> Scenario {
        let (d, a, k, beta) = (self.d, self.a, self.k, self.beta);
        let boundary = if beta == 0.0 {
            BoundaryTrace::constant_in_time(|p| 1.0 + p[0])
        } else {
            BoundaryTrace::time_dependent(
                Arc::new(move |t, p| 1.0 + p[0] + beta * t),
                TimeDerivative::Analytic(Arc::new(move |_, _| beta)),
            )
        };
        Scenario {
            id: "affine5".into(),
            grid: make_grid(1, &[self.n]).unwrap(),
            diffusion: d,
            velocity: VelocityField::new(vec![Arc::new(move |_| a)]),
            reaction: Arc::new(move |_, u, p| -k * u + p[0]),
            boundary,
            initial: Arc::new(|p| 1.0 + p[0] + 0.3 * (std::f64::consts::PI * p[0]).sin()),
            final_time: 1.0,
            exact: None,
            reference_tol: 1e-10,
            fingerprint: format!("affine5:{beta}"),
        }
    }

    /// Diffusion matrix and its boundary vector split as `c0 + c1 t`.
    pub fn diffusion(&self) -> (Mat, Vec<f64>, Vec<f64>) {
        let n = self.n;
        let c = self.d / (self.h * self.h);
        let mut m = zeros(n);
        for i in 0..n {
            m[i][i] = -2.0 * c;
            if i > 0 {
                m[i][i - 1] = c;
            }
            if i + 1 < n {
                m[i][i + 1] = c;
            }
        }
        let mut c0 = vec![0.0; n];
        let mut c1 = vec![0.0; n];
        c0[0] = c * self.b(0.0, 0.0);
        c0[n - 1] = c * self.b(0.0, 1.0);
        c1[0] = c * self.beta;
        c1[n - 1] = c * self.beta;
        (m, c0, c1)
    }

    /// Forward-difference upwind matrix and the inflow vector at `x = 1`
    /// for boundary value `bv`.
    pub fn convection(&self, bv: f64) -> (Mat, Vec<f64>) {
        let n = self.n;
        let c = self.a / self.h;
        let mut m = zeros(n);
        for i in 0..n {
            m[i][i] = -c;
            if i + 1 < n {
                m[i][i + 1] = c;
            }
        }
        let mut v = vec![0.0; n];
        v[n - 1] = c * bv;
        (m, v)
    }

    pub fn reaction_matrix(&self) -> Mat {
        let mut m = identity(self.n);
        for row in m.iter_mut() {
            for v in row.iter_mut() {
                *v *= -self.k;
            }
        }
        m
    }

    pub fn classical_step(&self, u: &[f64], t_n: f64, tau: f64) -> Vec<f64> {
        let (ad, c0, c1) = self.diffusion();
        let m = mat_add(&ad, &self.reaction_matrix());
        let q = add(&c0, &self.x());
        let half = t_n + 0.5 * tau;
        let v = affine_flow(&m, &c1, &q, u, t_n, 0.5 * tau);
        let (b, inflow) = self.convection(self.b(half, 1.0));
        let w = affine_flow(&b, &vec![0.0; self.n], &inflow, &v, 0.0, tau);
        affine_flow(&m, &c1, &q, &w, half, 0.5 * tau)
    }

    fn full_operator(&self, u: &[f64], bc0: f64, bc1: f64) -> Vec<f64> {
        let c = self.d / (self.h * self.h);
        let (ad, _, _) = self.diffusion();
        let (b, inflow) = self.convection(bc1);
        let mut out = add(&matvec(&ad, u), &matvec(&b, u));
        out[0] += c * bc0;
        out[self.n - 1] += c * bc1;
        add(&out, &inflow)
    }

    pub fn corrected_invariant_step(&self, u: &[f64], t_n: f64, tau: f64) -> Vec<f64> {
        let n = self.n;
        let (ad, _, _) = self.diffusion();
        let f = self.reaction_matrix();
        let m = mat_add(&ad, &f);
        let op = self.full_operator(u, self.b(t_n, 0.0), self.b(t_n, 1.0));
        let q = add(&add(&matvec(&f, u), &self.x()), &op);
        let zero = vec![0.0; n];
        let v = affine_flow(&m, &zero, &q, &zero, t_n, 0.5 * tau);
        let (b, _) = self.convection(0.0);
        let w = affine_flow(&b, &zero, &zero, &v, 0.0, tau);
        let uh = affine_flow(&m, &zero, &q, &w, t_n + 0.5 * tau, 0.5 * tau);
        add(&uh, u)
    }

    pub fn corrected_linear_step(&self, u: &[f64], t_n: f64, tau: f64) -> Vec<f64> {
        let n = self.n;
        let (ad, _, _) = self.diffusion();
        let f = self.reaction_matrix();
        let m = mat_add(&ad, &f);
        let g = add(
            &self.full_operator(u, self.b(t_n, 0.0), self.b(t_n, 1.0)),
            &add(&matvec(&f, u), &self.x()),
        );
        let op_g = self.full_operator(&g, self.beta, self.beta);
        // h(t, w) = F w + (t - t_n) (F g + op_g)
        let p = add(&matvec(&f, &g), &op_g);
        let q = scaled(&p, -t_n);
        let zero = vec![0.0; n];
        let v = affine_flow(&m, &p, &q, &zero, t_n, 0.5 * tau);
        let (b, _) = self.convection(0.0);
        let w = affine_flow(&b, &zero, &zero, &v, 0.0, tau);
        let uh = affine_flow(&m, &p, &q, &w, t_n + 0.5 * tau, 0.5 * tau);
        add(&uh, &add(u, &scaled(&g, tau)))
    }
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
