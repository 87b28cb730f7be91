//! Bodies of the CLI subcommands, kept here so they can be tested directly.

use std::io::Write;
use std::path::{Path, PathBuf};

use lod_core::interp::{build_operator, coverage_report, write_node_table};
use lod_core::lod::decay_slope;
use lod_core::{LodContext, OperatorKind};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::experiment::{run_experiment, write_csv, ResultRow};
use crate::svg::write_svgs;

fn pick_alpha(cfg: &ExperimentConfig, alpha: Option<f64>) -> Result<f64> {
    match alpha {
        Some(a) if a > 0.0 && a <= 1.0 => Ok(a),
        Some(a) => Err(HarnessError::Config(format!("alpha {a} is outside (0, 1]"))),
        None => Ok(cfg.alphas[0]),
    }
}

/// Generates the configured coefficient and writes it as PGM.
pub fn coef(cfg: &ExperimentConfig, alpha: Option<f64>, out: &Path) -> Result<f64> {
    let mesh = cfg.mesh()?;
    let c = cfg.coefficient(&mesh, pick_alpha(cfg, alpha)?)?;
    c.save_pgm(mesh.fine(), out)?;
    Ok(c.one_fraction())
}

/// Per-node table of an operator's integration domains and κ values, plus a
/// one-line coverage summary on `summary`.
pub fn kappa(
    cfg: &ExperimentConfig,
    alpha: Option<f64>,
    operator: OperatorKind,
    table: impl Write,
    mut summary: impl Write,
) -> Result<()> {
    if operator == OperatorKind::Nodal {
        return Err(HarnessError::Config("nodal interpolation has no integration domains".into()));
    }
    let mesh = cfg.mesh()?;
    let c = cfg.coefficient(&mesh, pick_alpha(cfg, alpha)?)?;
    let op = build_operator(operator, &mesh, &c, &cfg.params)?;
    write_node_table(&mesh, op.node_variables(), table)?;
    let report = coverage_report(&mesh, &c, op.node_variables());
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
    writeln!(
        summary,
        "unit components: {}, uncovered: {}, covered fraction: {}, max kappa I: {}, max kappa II: {}",
        report.unit_components,
        report.uncovered_components,
        opt(report.covered_fraction),
        opt(report.max_kappa_class_i),
        opt(report.max_kappa_class_ii),
    )?;
    Ok(())
}

/// Outputs written by [`run`].
pub struct RunOutput {
    pub rows: Vec<ResultRow>,
    pub csv: Option<PathBuf>,
    pub svgs: Vec<PathBuf>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let rows = run_experiment(cfg)?;
    if let Some(path) = &cfg.output_csv {
        write_csv(&rows, path)?;
    }
    let svgs = match &cfg.plot_dir {
        Some(dir) => write_svgs(&rows, dir)?,
        None => Vec::new(),
    };
    Ok(RunOutput { rows, csv: cfg.output_csv.clone(), svgs })
}

pub fn plot(csv: &Path, dir: &Path) -> Result<Vec<PathBuf>> {
    let rows = crate::experiment::read_csv(csv)?;
    write_svgs(&rows, dir)
}

/// Energy of the unlocalized element corrector `Q_T φ_z` outside `U_k(T)`.
/// Returns the fitted log10 slope per layer, if there are enough points.
pub fn decay(
    cfg: &ExperimentConfig,
    alpha: Option<f64>,
    operator: OperatorKind,
    element: usize,
    node: Option<usize>,
    k_max: Option<usize>,
    mut out: impl Write,
) -> Result<Option<f64>> {
    let mesh = cfg.mesh()?;
    let c = cfg.coefficient(&mesh, pick_alpha(cfg, alpha)?)?;
    if element >= mesh.coarse().element_count() {
        return Err(HarnessError::Config(format!("element {element} out of range")));
    }
    let node = match node {
        Some(n) => n,
        None => mesh
            .coarse()
            .element_vertices(element)
            .into_iter()
            .find(|&v| mesh.free_coarse_row(v).is_some())
            .ok_or_else(|| HarnessError::Config(format!("element {element} has no free vertex")))?,
    };
    let op = build_operator(operator, &mesh, &c, &cfg.params)?;
    let ctx = LodContext::new(&mesh, &c)?;
    let saturation = mesh.saturation_layers();
    let corrector = ctx.element_corrector(&op, node, element, saturation)?;
    let profile = ctx.decay_profile(&corrector, element, k_max.unwrap_or(saturation))?;
    writeln!(out, "k,energy")?;
    for (k, e) in &profile {
        writeln!(out, "{k},{e:.16e}")?;
    }
    let total = ctx.energy_norm(&corrector);
    Ok(decay_slope(&profile, total))
}
