//! Convergence studies: reference solutions, step-size sweeps, observed
//! orders and report output.

pub mod output;
pub mod reference;
pub mod study;

pub use output::{csv_string, emit_csv, emit_plot, parse_csv, svg_string, CsvRow};
pub use reference::{
    reference_solution, CacheStatus, Reference, ReferenceOptions, ReferenceProvenance,
};
pub use study::{
    convergence_study, dyadic_sweep, eoc, observed_orders, Cell, ConvergenceReport, ObservedOrders,
    SchemeSeries,
};
