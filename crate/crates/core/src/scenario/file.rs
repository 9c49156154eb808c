//! Scenario files: `[section]` headers followed by `key = value` lines.
//! `#` starts a comment. Unknown sections and keys are rejected.
//!
//! ```text
//! [domain]    dim, n_interior          (n_interior = "200" or "50, 50")
//! [equation]  d, a_x, a_y, f           (a_y only in 2D)
//! [boundary]  b, db_dt (optional)
//! [initial]   u0
//! [time]      T, ref_tol (optional)
//! [solution]  exact (optional)
//! ```

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use super::{Scenario, DB_DT_DELTA};
use crate::error::{Error, Result};
use crate::expr::{parse_expr, Env, Expr, ExprError, Var};
use crate::grid::{make_grid, Point};
use crate::operators::{BoundaryTrace, SpaceFn, TimeDerivative, VelocityField};

const SCHEMA: &[(&str, &[&str])] = &[
    ("domain", &["dim", "n_interior"]),
    ("equation", &["d", "a_x", "a_y", "f"]),
    ("boundary", &["b", "db_dt"]),
    ("initial", &["u0"]),
    ("time", &["T", "ref_tol"]),
    ("solution", &["exact"]),
];

struct Entry {
    value: String,
    line: usize,
}

type Document = BTreeMap<String, Entry>;

fn parse_document(text: &str) -> Result<Document> {
    let mut doc = Document::new();
    let mut section: Option<&str> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| {
                Error::config(
                    format!("line {}", lineno + 1),
                    "unterminated section header",
                )
            })?;
            let name = name.trim();
            let known = SCHEMA
                .iter()
                .find(|(s, _)| *s == name)
                .ok_or_else(|| Error::config(format!("[{name}]"), "unknown section"))?;
            section = Some(known.0);
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::config(format!("line {}", lineno + 1), "expected `key = value`")
        })?;
        let key = key.trim();
        let sec =
            section.ok_or_else(|| Error::config(key, "key appears before any section header"))?;
        let keys = SCHEMA
            .iter()
            .find(|(s, _)| *s == sec)
            .map(|(_, k)| *k)
            .unwrap_or(&[]);
        if !keys.contains(&key) {
            return Err(Error::config(format!("{sec}.{key}"), "unknown key"));
        }
        let full = format!("{sec}.{key}");
        if doc.contains_key(&full) {
            return Err(Error::config(full, "duplicate key"));
        }
        doc.insert(
            full,
            Entry {
                value: value.trim().to_string(),
                line: lineno + 1,
            },
        );
    }
    Ok(doc)
}

struct Builder {
    doc: Document,
    canonical: Vec<String>,
}

impl Builder {
    fn raw(&self, field: &str) -> Option<&Entry> {
        self.doc.get(field)
    }

    fn required(&self, field: &str) -> Result<&Entry> {
        self.raw(field)
            .ok_or_else(|| Error::config(field, "missing required field"))
    }

    fn number(&mut self, field: &str, required: bool) -> Result<Option<f64>> {
        let entry = match (self.raw(field), required) {
            (Some(e), _) => e,
            (None, true) => return Err(Error::config(field, "missing required field")),
            (None, false) => return Ok(None),
        };
        let v = parse_number(&entry.value).ok_or_else(|| {
            Error::config(
                field,
                format!(
                    "line {}: `{}` is not a decimal number",
                    entry.line, entry.value
                ),
            )
        })?;
        self.canonical.push(format!("{field}={v:e}"));
        Ok(Some(v))
    }

    fn expr(&mut self, field: &str, scope: &[Var], required: bool) -> Result<Option<Expr>> {
        let entry = match (self.raw(field), required) {
            (Some(e), _) => e,
            (None, true) => return Err(Error::config(field, "missing required field")),
            (None, false) => return Ok(None),
        };
        let e = match parse_expr(&entry.value) {
            Ok(e) => e,
            Err(ExprError::Name(n)) => return Err(n.into()),
            Err(ExprError::Parse(p)) => {
                return Err(Error::config(field, format!("line {}: {p}", entry.line)))
            }
        };
        e.check_scope(scope, field)?;
        self.canonical.push(format!("{field}={e}"));
        Ok(Some(e))
    }
}

fn parse_number(s: &str) -> Option<f64> {
    let ok = !s.is_empty()
        && s.bytes()
            .all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'e' | b'E' | b'+' | b'-'));
    if !ok {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn env(t: f64, u: f64, p: Point) -> Env {
    Env {
        t,
        u,
        x: p[0],
        y: p[1],
    }
}

/// Build a scenario from scenario-file text.
pub fn parse_scenario(text: &str, id: &str) -> Result<Scenario> {
    let mut b = Builder {
        doc: parse_document(text)?,
        canonical: Vec::new(),
    };

    let dim_entry = b.required("domain.dim")?;
    let dim = match dim_entry.value.as_str() {
        "1" => 1,
        "2" => 2,
        other => {
            return Err(Error::config(
                "domain.dim",
                format!("must be 1 or 2, got `{other}`"),
            ))
        }
    };
    let counts_entry = b.required("domain.n_interior")?;
    let counts: Vec<usize> = counts_entry
        .value
        .split([',', ' '])
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| {
            Error::config(
                "domain.n_interior",
                format!(
                    "`{}` is not a list of positive integers",
                    counts_entry.value
                ),
            )
        })?;
    let grid =
        make_grid(dim, &counts).map_err(|e| Error::config("domain.n_interior", e.to_string()))?;
    b.canonical.push(format!("domain={dim}:{counts:?}"));

    let space: &[Var] = if dim == 1 {
        &[Var::X]
    } else {
        &[Var::X, Var::Y]
    };
    let space_time: Vec<Var> = [Var::T].iter().chain(space).copied().collect();
    let reaction_scope: Vec<Var> = [Var::T, Var::U].iter().chain(space).copied().collect();

    let d = b.number("equation.d", true)?.unwrap_or_default();
    let a_x = b
        .expr("equation.a_x", space, true)?
        .unwrap_or(Expr::Num(0.0));
    let a_y = if dim == 2 {
        b.expr("equation.a_y", space, true)?
    } else {
        if b.raw("equation.a_y").is_some() {
            return Err(Error::config("equation.a_y", "only allowed when dim = 2"));
        }
        None
    };
    let f = b
        .expr("equation.f", &reaction_scope, true)?
        .unwrap_or(Expr::Num(0.0));
    let bexpr = b
        .expr("boundary.b", &space_time, true)?
        .unwrap_or(Expr::Num(0.0));
    let db_dt = b.expr("boundary.db_dt", &space_time, false)?;
    let u0 = b.expr("initial.u0", space, true)?.unwrap_or(Expr::Num(0.0));
    let final_time = b.number("time.T", true)?.unwrap_or_default();
    let reference_tol = b.number("time.ref_tol", false)?.unwrap_or(1e-9);
    let exact = b.expr("solution.exact", &space_time, false)?;

    if !(d > 0.0) {
        return Err(Error::config(
            "equation.d",
            "diffusion coefficient must be positive",
        ));
    }
    if !(final_time >= 0.0) {
        return Err(Error::config("time.T", "final time must be non-negative"));
    }
    if !(reference_tol > 0.0) {
        return Err(Error::config("time.ref_tol", "tolerance must be positive"));
    }

    let component = |e: Expr| -> SpaceFn { Arc::new(move |p| e.eval_or_nan(&env(0.0, 0.0, p))) };
    let mut components = vec![component(a_x)];
    components.extend(a_y.map(component));

    let time_dependent = bexpr.variables().contains(&Var::T);
    let boundary = if time_dependent {
        let derivative = match db_dt {
            Some(db) => {
                TimeDerivative::Analytic(Arc::new(move |t, p| db.eval_or_nan(&env(t, 0.0, p))))
            }
            None => TimeDerivative::CentralDifference(DB_DT_DELTA),
        };
        BoundaryTrace::time_dependent(
            Arc::new(move |t, p| bexpr.eval_or_nan(&env(t, 0.0, p))),
            derivative,
        )
    } else {
        if db_dt.is_some() {
            return Err(Error::config(
                "boundary.db_dt",
                "given, but `b` does not depend on t",
            ));
        }
        BoundaryTrace::constant_in_time(move |p| bexpr.eval_or_nan(&env(0.0, 0.0, p)))
    };

    let scenario = Scenario {
        id: id.to_string(),
        grid,
        diffusion: d,
        velocity: VelocityField::new(components),
        reaction: Arc::new(move |t, u, p| f.eval_or_nan(&env(t, u, p))),
        boundary,
        initial: Arc::new(move |p| u0.eval_or_nan(&env(0.0, 0.0, p))),
        final_time,
        exact: exact.map(|e| Arc::new(move |t, p| e.eval_or_nan(&env(t, 0.0, p))) as _),
        reference_tol,
        fingerprint: format!("file:{}", b.canonical.join(";")),
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Read and validate a scenario file. The scenario id is the file stem.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into());
    parse_scenario(&text, &id)
}
