//! Reference solutions of the unsplit semidiscrete system, cached on disk.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::ode::{rk45_adaptive, OdeProblem, StepStats, ToleranceSpec};
use crate::operators::MethodOfLines;
use crate::scenario::Scenario;

/// Part of every cache key; bump when the discretisation changes.
pub const CODE_VERSION_TAG: &str = concat!("splitlab-", env!("CARGO_PKG_VERSION"), "/ref-v1");

pub const SOLVER_NAME: &str = "Dormand-Prince 5(4), PI step control";

const MAGIC: &[u8; 8] = b"SPLITREF";

#[derive(Debug, Clone, Default)]
pub struct ReferenceOptions {
    /// Overrides the scenario's reference tolerance.
    pub tol: Option<f64>,
    /// Directory for cached references; `None` disables caching.
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CacheStatus {
    Disabled,
    Miss,
    Hit,
    /// The cached file was unreadable and the reference was recomputed.
    Recomputed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceProvenance {
    pub solver: String,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub cache_key: String,
    pub cache: CacheStatus,
    /// Integrator work; zero on a cache hit.
    pub stats: StepStats,
}

#[derive(Debug, Clone)]
pub struct Reference {
    pub field: Field,
    pub provenance: ReferenceProvenance,
}

/// Content hash of everything that determines a reference solution.
pub fn cache_key(s: &Scenario, tol: f64) -> String {
    let mut h = Sha256::new();
    for part in [
        CODE_VERSION_TAG.to_string(),
        s.fingerprint.clone(),
        format!("tol={tol:e}"),
        format!("T={:e}", s.final_time),
        format!("grid={}", s.grid.reading()),
    ] {
        h.update(part.as_bytes());
        h.update([0u8]);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn cache_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("{key}.ref"))
}

fn encode(values: &[f64]) -> Vec<u8> {
    let mut buf = Vec::with_capacity(16 + 8 * values.len() + 32);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(values.len() as u64).to_le_bytes());
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    buf
}

fn decode(bytes: &[u8], expected_len: usize) -> Result<Vec<f64>> {
    let body_len = 16 + 8 * expected_len;
    if bytes.len() != body_len + 32 {
        return Err(Error::Cache(format!(
            "expected {} bytes, found {}",
            body_len + 32,
            bytes.len()
        )));
    }
    let (body, digest) = bytes.split_at(body_len);
    if &body[..8] != MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::Cache("checksum mismatch".into()));
    }
    let n = u64::from_le_bytes(body[8..16].try_into().expect("8 bytes")) as usize;
    if n != expected_len {
        return Err(Error::Cache(format!(
            "holds {n} values, grid has {expected_len}"
        )));
    }
    Ok(body[16..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

fn read_cache(path: &Path, len: usize) -> Result<Option<Vec<f64>>> {
    match fs::read(path) {
        Ok(bytes) => decode(&bytes, len).map(Some),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(Error::Cache(e.to_string())),
    }
}

fn write_cache(dir: &Path, key: &str, values: &[f64]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = cache_path(dir, key);
    let tmp = dir.join(format!("{key}.tmp{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(&encode(values))
        .map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
}

// One lock per cache key so concurrent callers compute a reference once.
fn key_lock(key: &str) -> Arc<Mutex<()>> {
    static LOCKS: OnceLock<Mutex<HashMap<String, Arc<Mutex<()>>>>> = OnceLock::new();
    let mut map = LOCKS
        .get_or_init(Default::default)
        .lock()
        .unwrap_or_else(|e| e.into_inner());
    map.entry(key.to_string()).or_default().clone()
}

/// Solve the full semidiscrete system from `u0` to the final time with the
/// adaptive integrator.
pub fn solve_unsplit(s: &Scenario, tol: f64) -> Result<(Field, StepStats)> {
    let mol = MethodOfLines::new(s)?;
    let u0 = s.initial_field()?.into_values();
    let sol = rk45_adaptive(
        OdeProblem {
            rhs: |t, u: &[f64], out: &mut [f64]| mol.rhs_into(t, u, out),
            y0: u0,
            t0: 0.0,
            t1: s.final_time,
        },
        &ToleranceSpec::uniform(tol),
    )?;
    Ok((Field::from_values(s.grid, sol.state)?, sol.stats))
}

/// Reference solution at the final time. Cached results are returned
/// bit-for-bit; an unreadable cache entry is recomputed and overwritten.
pub fn reference_solution(s: &Scenario, opts: &ReferenceOptions) -> Result<Reference> {
    let tol = opts.tol.unwrap_or(s.reference_tol);
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "reference tolerance must be positive, got {tol}"
        )));
    }
    let key = cache_key(s, tol);
    let provenance = |cache, stats| ReferenceProvenance {
        solver: SOLVER_NAME.into(),
        abs_tol: tol,
        rel_tol: tol,
        cache_key: key.clone(),
        cache,
        stats,
    };

    let Some(dir) = &opts.cache_dir else {
        let (field, stats) = solve_unsplit(s, tol)?;
        return Ok(Reference {
            field,
            provenance: provenance(CacheStatus::Disabled, stats),
        });
    };

    let lock = key_lock(&key);
    let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
    let path = cache_path(dir, &key);
    let status = match read_cache(&path, s.grid.len()) {
        Ok(Some(values)) => {
            return Ok(Reference {
                field: Field::from_values(s.grid, values)?,
                provenance: provenance(CacheStatus::Hit, StepStats::default()),
            })
        }
        Ok(None) => CacheStatus::Miss,
        Err(e) => {
            log::warn!("discarding cached reference {}: {e}", path.display());
            CacheStatus::Recomputed(e.to_string())
        }
    };
    let (field, stats) = solve_unsplit(s, tol)?;
    if let Err(e) = write_cache(dir, &key, field.values()) {
        log::warn!("could not cache reference: {e}");
    }
    Ok(Reference {
        field,
        provenance: provenance(status, stats),
    })
}
