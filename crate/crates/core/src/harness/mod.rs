//! Experiment drivers behind the command line: single runs, cutoff sweeps
//! and small-scale diagnostics, each with an in-memory form and a form that
//! writes its results to a directory.

pub mod analysis;
pub mod config;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::Trajectory;
use crate::ladder::{run_ladder_with, LadderOptions, LadderResult};
use crate::persist::{write_json, write_ladder, LadderManifest};
use crate::reference::run_reference;

pub use analysis::{
    eoc_fit, eoc_summary, error_table, fit_loglog, smallscale_diagnostics, DiagRow, DiagSlopes, EocFit, ErrorMetric,
    ErrorRow, ErrorTable, LogLogFit, SmallScaleDiagnostics,
};
pub use config::{load_config, ExperimentConfig, FieldSource, ModeEntry};

/// Resolved run of the full equation at the configured reference cutoff.
pub fn compute_reference(cfg: &ExperimentConfig) -> Result<Trajectory> {
    let m_max = cfg.sweep_cutoffs().into_iter().chain(cfg.problem.m).max().unwrap_or(1);
    let spec = cfg.problem_spec(m_max)?;
    log::info!("reference: m_ref = {}, h_ref = {}", cfg.m_ref(), cfg.h_ref());
    run_reference(&spec, cfg.m_ref(), cfg.h_ref())
}

pub struct RunOutcome {
    pub ladder: LadderResult,
    pub table: ErrorTable,
}

pub fn run_single(cfg: &ExperimentConfig, opts: LadderOptions, reference: &Trajectory) -> Result<RunOutcome> {
    let spec = cfg.problem_spec(cfg.run_cutoff())?;
    let ladder = run_ladder_with(&spec, opts)?;
    let table = error_table(&ladder, reference, cfg.t_skip(), &cfg.analysis.norms)?;
    Ok(RunOutcome { ladder, table })
}

/// `run`: the ladder trajectories, `ladder.json` and `errors.csv`.
pub fn run_to_dir(cfg: &ExperimentConfig, opts: LadderOptions, out: &Path) -> Result<RunOutcome> {
    let reference = compute_reference(cfg)?;
    let outcome = run_single(cfg, opts, &reference)?;
    write_ladder(out, &outcome.ladder)?;
    write_text(&out.join("errors.csv"), &outcome.table.to_csv())?;
    Ok(outcome)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EocReport {
    pub fits: Vec<EocFit>,
}

pub struct ConvergeOutcome {
    pub table: ErrorTable,
    pub eoc: EocReport,
    pub manifests: Vec<LadderManifest>,
}

/// Ladders for every sweep cutoff against one reference. Cutoffs run in
/// parallel; results are ordered by cutoff regardless of completion order.
pub fn converge_with(cfg: &ExperimentConfig, reference: &Trajectory) -> Result<ConvergeOutcome> {
    let cutoffs = cfg.sweep_cutoffs();
    let runs = cutoffs
        .par_iter()
        .map(|&m| {
            let spec = cfg.problem_spec(m)?;
            let ladder = run_ladder_with(&spec, LadderOptions::default())?;
            let table = error_table(&ladder, reference, cfg.t_skip(), &cfg.analysis.norms)?;
            log::info!("m = {m} done");
            Ok((table, LadderManifest::of(&ladder)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = ErrorTable::default();
    let mut manifests = Vec::new();
    for (t, man) in runs {
        table.extend(t);
        manifests.push(man);
    }
    manifests.sort_by_key(|m| m.spec.m);
    let mut fits = eoc_summary(&table, ErrorMetric::AtEnd);
    fits.extend(eoc_summary(&table, ErrorMetric::Sup));
    Ok(ConvergeOutcome {
        table,
        eoc: EocReport { fits },
        manifests,
    })
}

/// `converge`: `errors.csv`, `eoc.json` and `runs/m<m>/ladder.json`.
pub fn converge_to_dir(cfg: &ExperimentConfig, out: &Path) -> Result<ConvergeOutcome> {
    let reference = compute_reference(cfg)?;
    let outcome = converge_with(cfg, &reference)?;
    write_converge(out, &outcome)?;
    Ok(outcome)
}

pub fn write_converge(out: &Path, outcome: &ConvergeOutcome) -> Result<()> {
    create_dir(out)?;
    write_text(&out.join("errors.csv"), &outcome.table.to_csv())?;
    write_json(&out.join("eoc.json"), &outcome.eoc)?;
    for man in &outcome.manifests {
        let dir = out.join("runs").join(format!("m{}", man.spec.m));
        create_dir(&dir)?;
        write_json(&dir.join("ladder.json"), man)?;
    }
    Ok(())
}

pub fn diag_with(cfg: &ExperimentConfig, reference: &Trajectory) -> Result<SmallScaleDiagnostics> {
    smallscale_diagnostics(
        reference,
        &cfg.sweep_cutoffs(),
        cfg.t_skip(),
        cfg.analysis.split_diagnostics,
    )
}

/// `diag`: `diag.csv` with one row per cutoff and `diag.json` with rows and slopes.
pub fn diag_to_dir(cfg: &ExperimentConfig, out: &Path) -> Result<SmallScaleDiagnostics> {
    let reference = compute_reference(cfg)?;
    let d = diag_with(cfg, &reference)?;
    create_dir(out)?;
    write_text(&out.join("diag.csv"), &d.to_csv())?;
    write_json(&out.join("diag.json"), &d)?;
    Ok(d)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
