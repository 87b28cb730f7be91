//! Sweeps over (operator, alpha, k) and the CSV result table.

use std::path::Path;
use std::time::Instant;

use lod_core::interp::build_operator;
use lod_core::{InterpOperator, LodContext, OperatorKind};
use rayon::prelude::*;

use crate::cache::ReferenceCache;
use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

pub const CSV_HEADER: [&str; 9] = [
    "operator",
    "alpha",
    "k",
    "H",
    "h",
    "rel_energy_error",
    "wall_time_s",
    "seed",
    "status",
];

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub operator: OperatorKind,
    pub alpha: f64,
    pub k: usize,
    pub coarse_h: f64,
    pub fine_h: f64,
    /// NaN for failed cells.
    pub rel_energy_error: f64,
    pub wall_time_s: f64,
    pub seed: u64,
    /// `ok` or `failed:<kind>`.
    pub status: String,
}

impl ResultRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Short machine-readable label for a failure.
pub fn failure_status(err: &HarnessError) -> String {
    let kind = match err {
        HarnessError::Core(e) => match e {
            lod_core::Error::Parameter(_) => "parameter",
            lod_core::Error::DegenerateSigma { .. } => "degenerate_sigma",
            lod_core::Error::ConstraintDegeneracy { .. } => "constraint_degeneracy",
            lod_core::Error::Solver(_) => "solver",
            lod_core::Error::Dimension(_) => "dimension",
            lod_core::Error::Format(_) => "format",
            lod_core::Error::Io(_) => "io",
        },
        HarnessError::Config(_) => "config",
        HarnessError::Csv(_) => "csv",
        HarnessError::Io(_) => "io",
    };
    format!("failed:{kind}")
}

fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        a.operator
            .cmp(&b.operator)
            .then(a.alpha.total_cmp(&b.alpha))
            .then(a.k.cmp(&b.k))
    });
}

/// Runs the full sweep. Failures of individual cells become rows with a
/// `failed:*` status; only configuration-level problems abort the run.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let mesh = config.mesh()?;
    let cache = config.cache_dir.as_ref().map(ReferenceCache::new);
    let mut rows = Vec::with_capacity(config.operators.len() * config.alphas.len() * config.ks.len());
    // A failed cell carries its status string instead of an error value.
    let row = |op: OperatorKind, alpha: f64, k: usize, outcome: std::result::Result<(f64, f64), String>| {
        let (err, time, status) = match outcome {
            Ok((e, t)) => (e, t, "ok".to_string()),
            Err(status) => (f64::NAN, 0.0, status),
        };
        ResultRow {
            operator: op,
            alpha,
            k,
            coarse_h: mesh.coarse_h(),
            fine_h: mesh.fine_h(),
            rel_energy_error: err,
            wall_time_s: if config.record_wall_time { time } else { 0.0 },
            seed: config.seed,
            status,
        }
    };
    for &alpha in &config.alphas {
        let prepared = config.coefficient(&mesh, alpha).and_then(|coef| {
            let reference = reference_solution(config, &mesh, &coef, alpha, cache.as_ref())?;
            Ok((coef, reference))
        });
        let (coef, reference) = match prepared {
            Ok(p) => p,
            Err(e) => {
                let status = failure_status(&e);
                for &op in &config.operators {
                    for &k in &config.ks {
                        rows.push(row(op, alpha, k, Err(status.clone())));
                    }
                }
                continue;
            }
        };
        let ctx = LodContext::new(&mesh, &coef)?;
        let operators: Vec<std::result::Result<InterpOperator, String>> = config
            .operators
            .par_iter()
            .map(|&kind| {
                build_operator(kind, &mesh, &coef, &config.params).map_err(|e| failure_status(&e.into()))
            })
            .collect();
        let cells: Vec<(usize, usize)> = (0..config.operators.len())
            .flat_map(|o| config.ks.iter().map(move |&k| (o, k)))
            .collect();
        let outcomes: Vec<std::result::Result<(f64, f64), String>> = cells
            .par_iter()
            .map(|&(o, k)| {
                let op = operators[o].as_ref().map_err(Clone::clone)?;
                let start = Instant::now();
                let sol = ctx
                    .solve_multiscale(op, k, &config.rhs, config.rhs_correction)
                    .map_err(|e| failure_status(&e.into()))?;
                let err = ctx.relative_energy_error(&reference, &sol.u_total);
                Ok((err, start.elapsed().as_secs_f64()))
            })
            .collect();
        for (&(o, k), outcome) in cells.iter().zip(outcomes) {
            rows.push(row(config.operators[o], alpha, k, outcome));
        }
    }
    sort_rows(&mut rows);
    Ok(rows)
}

fn reference_solution(
    config: &ExperimentConfig,
    mesh: &lod_core::MeshHierarchy,
    coef: &lod_core::Coefficient,
    alpha: f64,
    cache: Option<&ReferenceCache>,
) -> Result<Vec<f64>> {
    let key = config.reference_key(alpha);
    if let Some(hit) = cache.and_then(|c| c.load(&key)) {
        if hit.len() == mesh.fine().node_count() {
            return Ok(hit);
        }
    }
    let ctx = LodContext::new(mesh, coef)?;
    let u = ctx.reference_solution(&config.rhs)?;
    if let Some(c) = cache {
        c.store(&key, &u)?;
    }
    Ok(u)
}

fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.operator.name().to_string(),
            fmt_float(r.alpha),
            r.k.to_string(),
            fmt_float(r.coarse_h),
            fmt_float(r.fine_h),
            fmt_float(r.rel_energy_error),
            fmt_float(r.wall_time_s),
            r.seed.to_string(),
            r.status.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(HarnessError::Config(format!("{}: unexpected CSV header", path.display())));
    }
    let bad = |what: &str, line: usize| HarnessError::Config(format!("{}:{line}: bad {what}", path.display()));
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let num = |idx: usize, what: &str| rec[idx].parse::<f64>().map_err(|_| bad(what, line));
        rows.push(ResultRow {
            operator: OperatorKind::parse(&rec[0]).ok_or_else(|| bad("operator", line))?,
            alpha: num(1, "alpha")?,
            k: rec[2].parse().map_err(|_| bad("k", line))?,
            coarse_h: num(3, "H")?,
            fine_h: num(4, "h")?,
            rel_energy_error: num(5, "rel_energy_error")?,
            wall_time_s: num(6, "wall_time_s")?,
            seed: rec[7].parse().map_err(|_| bad("seed", line))?,
            status: rec[8].to_string(),
        });
    }
    Ok(rows)
}
