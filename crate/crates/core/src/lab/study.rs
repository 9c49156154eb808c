//! Step-size sweeps and observed orders of convergence.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::inf_norm_diff;
use crate::ode::{controller_description, StepStats};
use crate::scenario::Scenario;
use crate::splitting::{SchemeKind, Splitter, SUBFLOW_TOL};

use super::reference::{reference_solution, Reference, ReferenceOptions, ReferenceProvenance};

/// Relative change below which a pair of errors counts as sitting on the
/// error floor.
pub const FLOOR_THRESHOLD: f64 = 0.05;

/// `tau = 2^-k T` for `k = k_min..=k_max`, largest first.
pub fn dyadic_sweep(final_time: f64, k_min: u32, k_max: u32) -> Result<Vec<f64>> {
    if k_min > k_max {
        return Err(Error::InvalidArgument(format!(
            "empty sweep {k_min}:{k_max}"
        )));
    }
    if !(final_time > 0.0) {
        return Err(Error::InvalidArgument(
            "sweep needs a positive final time".into(),
        ));
    }
    Ok((k_min..=k_max)
        .map(|k| final_time * 0.5f64.powi(k as i32))
        .collect())
}

/// Empirical order between two (tau, error) samples.
pub fn eoc(e_coarse: f64, e_fine: f64, tau_coarse: f64, tau_fine: f64) -> f64 {
    if e_coarse == e_fine {
        return 0.0;
    }
    (e_coarse / e_fine).ln() / (tau_coarse / tau_fine).ln()
}

/// One (scheme, tau) run.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub tau: f64,
    /// Max-norm error at the final time, `None` if the run failed.
    pub error: Option<f64>,
    pub failure: Option<String>,
    pub stats: StepStats,
    pub final_step_clipped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSeries {
    pub scheme: SchemeKind,
    pub cells: Vec<Cell>,
    /// `eoc[k]` relates cells `k` and `k + 1`; `None` if either failed.
    pub eoc: Vec<Option<f64>>,
}

impl SchemeSeries {
    pub fn from_cells(scheme: SchemeKind, cells: Vec<Cell>) -> Self {
        let eoc = cells
            .windows(2)
            .map(|w| match (w[0].error, w[1].error) {
                (Some(a), Some(b)) => Some(eoc(a, b, w[0].tau, w[1].tau)),
                _ => None,
            })
            .collect();
        SchemeSeries { scheme, cells, eoc }
    }

    /// Successful (tau, error) samples in sweep order.
    pub fn samples(&self) -> Vec<(f64, f64)> {
        self.cells
            .iter()
            .filter_map(|c| c.error.map(|e| (c.tau, e)))
            .collect()
    }

    pub fn failed(&self) -> usize {
        self.cells.iter().filter(|c| c.error.is_none()).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub scenario_id: String,
    pub series: Vec<SchemeSeries>,
    /// `None` for an empty report.
    pub reference: Option<ReferenceProvenance>,
    /// Ordered key/value pairs describing the run.
    pub metadata: Vec<(String, String)>,
}

impl ConvergenceReport {
    pub fn is_empty(&self) -> bool {
        self.series.iter().all(|s| s.cells.is_empty())
    }

    pub fn series_for(&self, scheme: SchemeKind) -> Option<&SchemeSeries> {
        self.series.iter().find(|s| s.scheme == scheme)
    }
}

fn run_metadata(s: &Scenario) -> Vec<(String, String)> {
    vec![
        ("grid".into(), s.grid.reading()),
        ("controller".into(), controller_description()),
        ("subflow_tol".into(), format!("{SUBFLOW_TOL:e}")),
        (
            "boundary_derivative".into(),
            s.derivative_description().into(),
        ),
        ("final_time".into(), format!("{}", s.final_time)),
    ]
}

fn check_taus(s: &Scenario, taus: &[f64]) -> Result<()> {
    for (i, &tau) in taus.iter().enumerate() {
        if !(tau > 0.0 && tau <= s.final_time) {
            return Err(Error::InvalidArgument(format!(
                "step size {tau} outside (0, {}]",
                s.final_time
            )));
        }
        if i > 0 && !(tau < taus[i - 1]) {
            return Err(Error::InvalidArgument(
                "step sizes must be strictly decreasing".into(),
            ));
        }
    }
    Ok(())
}

fn run_cell(s: &Scenario, reference: &Reference, scheme: SchemeKind, tau: f64) -> Cell {
    let outcome = Splitter::new(s)
        .and_then(|sp| sp.integrate(scheme, tau))
        .and_then(|tr| {
            let e = inf_norm_diff(&tr.field, &reference.field)?;
            Ok((e, tr.total_stats(), tr.final_step_clipped))
        });
    match outcome {
        Ok((e, stats, clipped)) if e.is_finite() => Cell {
            tau,
            error: Some(e),
            failure: None,
            stats,
            final_step_clipped: clipped,
        },
        Ok((e, stats, clipped)) => Cell {
            tau,
            error: None,
            failure: Some(format!("non-finite error {e}")),
            stats,
            final_step_clipped: clipped,
        },
        Err(e) => {
            log::warn!("{} at tau = {tau}: {e}", scheme.name());
            Cell {
                tau,
                error: None,
                failure: Some(e.to_string()),
                stats: StepStats::default(),
                final_step_clipped: false,
            }
        }
    }
}

/// Run every scheme at every step size and measure the error at the final
/// time against the reference solution. Failed runs are recorded in their
/// cell; the remaining cells still run.
pub fn convergence_study(
    s: &Scenario,
    schemes: &[SchemeKind],
    taus: &[f64],
    opts: &ReferenceOptions,
) -> Result<ConvergenceReport> {
    check_taus(s, taus)?;
    let mut metadata = run_metadata(s);
    if schemes.is_empty() || taus.is_empty() {
        return Ok(ConvergenceReport {
            scenario_id: s.id.clone(),
            series: schemes
                .iter()
                .map(|&k| SchemeSeries::from_cells(k, Vec::new()))
                .collect(),
            reference: None,
            metadata,
        });
    }
    let reference = reference_solution(s, opts)?;

    let jobs: Vec<(SchemeKind, f64)> = schemes
        .iter()
        .flat_map(|&k| taus.iter().map(move |&t| (k, t)))
        .collect();
    let cells: Vec<Cell> = jobs
        .par_iter()
        .map(|&(k, tau)| run_cell(s, &reference, k, tau))
        .collect();

    let mut cells = cells.into_iter();
    let series: Vec<SchemeSeries> = schemes
        .iter()
        .map(|&k| SchemeSeries::from_cells(k, cells.by_ref().take(taus.len()).collect()))
        .collect();
    let clipped = series
        .iter()
        .flat_map(|s| &s.cells)
        .any(|c| c.final_step_clipped);
    metadata.push(("final_step_clipped".into(), clipped.to_string()));
    Ok(ConvergenceReport {
        scenario_id: s.id.clone(),
        series,
        reference: Some(reference.provenance),
        metadata,
    })
}

/// Observed orders of one scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedOrders {
    pub scheme: SchemeKind,
    /// Order between consecutive successful samples.
    pub pairs: Vec<f64>,
    /// Pairs whose error changed by less than [`FLOOR_THRESHOLD`].
    pub on_floor: Vec<bool>,
    /// Median over the pairs off the floor, or over all pairs when every
    /// pair sits on the floor.
    pub median: f64,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

pub fn orders_from_samples(scheme: SchemeKind, samples: &[(f64, f64)]) -> Result<ObservedOrders> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} has {} successful run(s), need at least 2",
            scheme.name(),
            samples.len()
        )));
    }
    let mut pairs = Vec::with_capacity(samples.len() - 1);
    let mut on_floor = Vec::with_capacity(samples.len() - 1);
    for w in samples.windows(2) {
        let ((t0, e0), (t1, e1)) = (w[0], w[1]);
        let floor = e0 == 0.0 || e1 == 0.0 || (e1 - e0).abs() < FLOOR_THRESHOLD * e0;
        let p = if e0 == 0.0 || e1 == 0.0 {
            0.0
        } else {
            eoc(e0, e1, t0, t1)
        };
        pairs.push(p);
        on_floor.push(floor);
    }
    let kept: Vec<f64> = pairs
        .iter()
        .zip(&on_floor)
        .filter(|(_, &f)| !f)
        .map(|(&p, _)| p)
        .collect();
    let median = median(if kept.is_empty() { &pairs } else { &kept }).expect("non-empty");
    Ok(ObservedOrders {
        scheme,
        pairs,
        on_floor,
        median,
    })
}

/// Per-scheme orders of a report.
pub fn observed_orders(r: &ConvergenceReport) -> Result<Vec<ObservedOrders>> {
    r.series
        .iter()
        .map(|s| orders_from_samples(s.scheme, &s.samples()))
        .collect()
}
