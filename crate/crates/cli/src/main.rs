//! `splitlab`: run Strang splitting schemes and convergence studies.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use splitlab::lab::{
    convergence_study, dyadic_sweep, emit_csv, emit_plot, observed_orders, ConvergenceReport,
    ReferenceOptions,
};
use splitlab::scenario::{builtin_source, BUILTIN_NAMES};
use splitlab::{
    builtin_scenario, exact_solution, inf_norm_diff, integrate, load_scenario, Scenario, SchemeKind,
};

#[derive(Parser)]
#[command(
    name = "splitlab",
    version,
    about = "Classical and corrected Strang splitting for convection-diffusion-reaction problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in scenarios.
    List,
    /// Integrate one scenario with a fixed step size.
    Run {
        /// Built-in name or path to a scenario file.
        #[arg(long)]
        scenario: String,
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        #[arg(long)]
        tau: f64,
        #[arg(long, value_enum, default_value_t = CorrectionArg::Auto)]
        correction: CorrectionArg,
        /// Directory for `solution.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure convergence over a dyadic step-size sweep.
    Study {
        #[arg(long)]
        scenario: String,
        /// Comma-separated schemes: classical, corrected, corrected-invariant, corrected-linear.
        #[arg(long, default_value = "classical,corrected")]
        schemes: String,
        /// Exponents `k_min:k_max` of the sweep `tau = T / 2^k`.
        #[arg(long, default_value = "4:9")]
        tau_sweep: String,
        /// Tolerance of the reference solve.
        #[arg(long)]
        ref_tol: Option<f64>,
        #[arg(long, value_enum, default_value_t = CorrectionArg::Auto)]
        correction: CorrectionArg,
        /// Directory for `convergence.csv`, `convergence.svg` and `metadata.txt`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Classical,
    Corrected,
}

#[derive(Clone, Copy, ValueEnum)]
enum CorrectionArg {
    /// Invariant for time-invariant boundary data, linear otherwise.
    Auto,
    Invariant,
    Linear,
}

impl CorrectionArg {
    fn scheme(self, s: &Scenario) -> SchemeKind {
        match self {
            CorrectionArg::Auto => SchemeKind::corrected_for(s),
            CorrectionArg::Invariant => SchemeKind::CorrectedInvariant,
            CorrectionArg::Linear => SchemeKind::CorrectedLinear,
        }
    }
}

fn resolve_scenario(arg: &str) -> anyhow::Result<Scenario> {
    if BUILTIN_NAMES.contains(&arg) {
        return Ok(builtin_scenario(arg)?);
    }
    let path = Path::new(arg);
    if !path.exists() {
        bail!(
            "`{arg}` is neither a built-in scenario ({}) nor an existing file",
            BUILTIN_NAMES.join(", ")
        );
    }
    Ok(load_scenario(path)?)
}

fn parse_schemes(
    list: &str,
    correction: CorrectionArg,
    s: &Scenario,
) -> anyhow::Result<Vec<SchemeKind>> {
    let mut out = Vec::new();
    for name in list.split(',').map(str::trim).filter(|n| !n.is_empty()) {
        let kind = match name {
            "corrected" => correction.scheme(s),
            other => other.parse::<SchemeKind>()?,
        };
        if !out.contains(&kind) {
            out.push(kind);
        }
    }
    if out.is_empty() {
        bail!("no schemes given");
    }
    Ok(out)
}

fn parse_sweep(text: &str) -> anyhow::Result<(u32, u32)> {
    let (lo, hi) = text
        .split_once(':')
        .with_context(|| format!("tau sweep `{text}` must look like k_min:k_max"))?;
    let lo: u32 = lo
        .trim()
        .parse()
        .with_context(|| format!("bad k_min in `{text}`"))?;
    let hi: u32 = hi
        .trim()
        .parse()
        .with_context(|| format!("bad k_max in `{text}`"))?;
    Ok((lo, hi))
}

fn cache_dir() -> PathBuf {
    std::env::var_os("SPLITLAB_CACHE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("splitlab-cache"))
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn list() {
    println!(
        "{:<6} {:>3}  {:<9}  {:>4}  boundary   description",
        "name", "dim", "grid", "T"
    );
    for name in BUILTIN_NAMES {
        let s = builtin_scenario(name).expect("built-in scenarios are valid");
        let note = builtin_source(name)
            .and_then(|src| src.lines().next())
            .map(|l| l.trim_start_matches('#').trim())
            .unwrap_or("");
        let grid = (0..s.grid.dim())
            .map(|a| s.grid.n(a).to_string())
            .collect::<Vec<_>>()
            .join("x");
        println!(
            "{name:<6} {:>3}  {grid:<9}  {:>4}  {:<9}  {note}",
            s.grid.dim(),
            s.final_time,
            if s.boundary.is_time_dependent() {
                "t-varying"
            } else {
                "constant"
            },
        );
    }
}

fn run(
    scenario: &str,
    scheme: SchemeArg,
    tau: f64,
    correction: CorrectionArg,
    out: Option<&Path>,
) -> anyhow::Result<()> {
    let s = resolve_scenario(scenario)?;
    let kind = match scheme {
        SchemeArg::Classical => SchemeKind::Classical,
        SchemeArg::Corrected => correction.scheme(&s),
    };
    let tr = integrate(&s, kind, tau)?;
    let stats = tr.total_stats();
    let max_abs = tr.field.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    println!("scenario      {}", s.id);
    println!("scheme        {kind}");
    println!("tau           {tau:e}");
    println!("steps         {}", tr.steps.len());
    println!("clipped       {}", tr.final_step_clipped);
    println!(
        "sub-flow work {} accepted, {} rejected, {} rhs evaluations",
        stats.accepted, stats.rejected, stats.rhs_evals
    );
    println!("max |u(T)|    {max_abs:.6e}");
    if let Some(exact) = exact_solution(&s, s.final_time)? {
        println!("error vs exact {:.6e}", inf_norm_diff(&tr.field, &exact)?);
    }
    if let Some(dir) = out {
        create_dir(dir)?;
        let mut text = if s.grid.dim() == 1 {
            String::from("x,u\n")
        } else {
            String::from("x,y,u\n")
        };
        for (i, v) in tr.field.values().iter().enumerate() {
            let p = s.grid.point(i);
            if s.grid.dim() == 1 {
                writeln!(text, "{:.15e},{v:.15e}", p[0])?;
            } else {
                writeln!(text, "{:.15e},{:.15e},{v:.15e}", p[0], p[1])?;
            }
        }
        let path = dir.join("solution.csv");
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        println!("wrote         {}", path.display());
    }
    Ok(())
}

fn metadata_text(r: &ConvergenceReport) -> String {
    let mut text = format!("scenario = {}\n", r.scenario_id);
    for (k, v) in &r.metadata {
        let _ = writeln!(text, "{k} = {v}");
    }
    if let Some(p) = &r.reference {
        let _ = writeln!(text, "reference_solver = {}", p.solver);
        let _ = writeln!(text, "reference_abs_tol = {:e}", p.abs_tol);
        let _ = writeln!(text, "reference_rel_tol = {:e}", p.rel_tol);
        let _ = writeln!(text, "reference_cache_key = {}", p.cache_key);
        let _ = writeln!(text, "reference_cache = {:?}", p.cache);
        let _ = writeln!(
            text,
            "reference_steps = {}",
            p.stats.accepted + p.stats.rejected
        );
    }
    text
}

/// Returns the number of failed cells.
fn study(
    scenario: &str,
    schemes: &str,
    sweep: &str,
    ref_tol: Option<f64>,
    correction: CorrectionArg,
    out: Option<&Path>,
) -> anyhow::Result<usize> {
    let s = resolve_scenario(scenario)?;
    let kinds = parse_schemes(schemes, correction, &s)?;
    let (k_min, k_max) = parse_sweep(sweep)?;
    let taus = dyadic_sweep(s.final_time, k_min, k_max)?;
    let opts = ReferenceOptions {
        tol: ref_tol,
        cache_dir: Some(cache_dir()),
    };
    let report = convergence_study(&s, &kinds, &taus, &opts)?;

    print!("{}", metadata_text(&report));
    println!();
    println!(
        "{:<20} {:>14} {:>14} {:>8}",
        "scheme", "tau", "error", "eoc"
    );
    let mut failed = 0;
    for series in &report.series {
        for (i, cell) in series.cells.iter().enumerate() {
            let eoc = i.checked_sub(1).and_then(|j| series.eoc[j]);
            let eoc = eoc.map(|p| format!("{p:.3}")).unwrap_or_else(|| "-".into());
            match cell.error {
                Some(e) => println!(
                    "{:<20} {:>14.6e} {e:>14.6e} {eoc:>8}",
                    series.scheme.name(),
                    cell.tau
                ),
                None => {
                    failed += 1;
                    println!(
                        "{:<20} {:>14.6e} {:>14} {:>8}  {}",
                        series.scheme.name(),
                        cell.tau,
                        "failed",
                        "-",
                        cell.failure.as_deref().unwrap_or("")
                    );
                }
            }
        }
    }
    match observed_orders(&report) {
        Ok(orders) => {
            println!();
            for o in orders {
                println!(
                    "observed order {:<20} median {:.4} over {} pairs ({} on the error floor)",
                    o.scheme.name(),
                    o.median,
                    o.pairs.len(),
                    o.on_floor.iter().filter(|f| **f).count()
                );
            }
        }
        Err(e) => eprintln!("warning: {e}"),
    }

    if let Some(dir) = out {
        create_dir(dir)?;
        emit_csv(&report, &dir.join("convergence.csv"))?;
        match emit_plot(&report, &dir.join("convergence.svg")) {
            Ok(()) => {}
            Err(splitlab::Error::InsufficientData(m)) => eprintln!("warning: no plot written: {m}"),
            Err(e) => return Err(e.into()),
        }
        let path = dir.join("metadata.txt");
        fs::write(&path, metadata_text(&report))
            .with_context(|| format!("cannot write {}", path.display()))?;
        println!("wrote {}", dir.display());
    }
    Ok(failed)
}

/// Messages of the chain down to the first library error, whose own
/// message already includes its sources.
fn render(err: &anyhow::Error) -> String {
    let mut parts = Vec::new();
    for e in err.chain() {
        parts.push(e.to_string());
        if e.downcast_ref::<splitlab::Error>().is_some() {
            break;
        }
    }
    parts.join(": ")
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err
        .chain()
        .filter_map(|e| e.downcast_ref::<splitlab::Error>())
        .any(splitlab::Error::is_numerical);
    if numerical {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::List => {
            list();
            Ok(0)
        }
        Command::Run {
            scenario,
            scheme,
            tau,
            correction,
            out,
        } => run(&scenario, scheme, tau, correction, out.as_deref()).map(|()| 0),
        Command::Study {
            scenario,
            schemes,
            tau_sweep,
            ref_tol,
            correction,
            out,
        } => study(
            &scenario,
            &schemes,
            &tau_sweep,
            ref_tol,
            correction,
            out.as_deref(),
        ),
    };
    match result {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failed) => {
            eprintln!("error: {failed} study cell(s) failed numerically");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {}", render(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
