use std::fs;
use std::path::Path;

use serde_json::json;

use torusflow::diagnostics::arnold_constant;
use torusflow::eigenmodes::make_eigenstate;
use torusflow::io::{write_snapshot, DiagnosticsWriter};
use torusflow::perturbation::perturbed_eigenstate;
use torusflow::solver::{DriftSummary, Solver};
use torusflow::GridField;

use crate::config::ExperimentConfig;
use crate::failure::Failure;
use crate::manifest::{drift_json, Manifest};

/// Headline numbers of one run, as aggregated by `sweep`.
#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub max_distance: Option<f64>,
    pub drift: DriftSummary,
    pub arnold_constant: Option<f64>,
}

/// `ω₀`, and the initial follower when one is tracked.
pub fn initial_fields(cfg: &ExperimentConfig) -> Result<(GridField, Option<GridField>), Failure> {
    let g = cfg.geometry()?;
    if let Some(values) = &cfg.initial.values {
        let w = GridField::new(g, values.clone())?;
        let zeta = cfg.solver.track_follower.then(|| w.clone());
        return Ok((w, zeta));
    }
    let orbit = cfg.orbit_spec()?;
    let base = make_eigenstate(&orbit);
    let w = if cfg.initial.epsilon > 0.0 {
        perturbed_eigenstate(&orbit, &cfg.perturbation())?.0
    } else {
        base.clone()
    };
    Ok((w, cfg.solver.track_follower.then_some(base)))
}

/// Geometry-dependent growth constant, when one exists (not on the square torus).
pub fn growth_constant(cfg: &ExperimentConfig) -> Option<f64> {
    let g = cfg.geometry().ok()?;
    if g.nu1() < g.nu2() {
        arnold_constant(&g).ok()
    } else if g.nu1() > g.nu2() {
        arnold_constant(&g.transposed()).ok()
    } else {
        None
    }
}

/// Runs one simulation into `dir`, which must not need validation any more.
/// The manifest is written whatever the outcome.
pub fn simulate_into(cfg: &ExperimentConfig, config_text: &str, dir: &Path) -> Result<RunSummary, Failure> {
    let mut manifest = Manifest::new("simulate", cfg, config_text);
    let outcome = run(cfg, dir, &mut manifest);
    if let Err(e) = &outcome {
        manifest.fail(e.status(), e);
    }
    manifest.write(dir)?;
    outcome
}

fn run(cfg: &ExperimentConfig, dir: &Path, manifest: &mut Manifest) -> Result<RunSummary, Failure> {
    let g = cfg.geometry()?;
    let (omega0, zeta0) = initial_fields(cfg)?;
    let mut solver_cfg = cfg.solver_config(g)?;
    solver_cfg.follower = zeta0;
    if cfg.metrics.orbit_distance && cfg.initial.values.is_none() {
        solver_cfg.orbit = Some(cfg.orbit_spec()?);
    }
    let solver = Solver::new(solver_cfg)?;

    let snap_dir = dir.join("snapshots");
    fs::create_dir_all(&snap_dir)?;
    let mut csv = DiagnosticsWriter::create(&dir.join("diagnostics.csv"))?;
    let every = cfg.output.snapshot_every;
    let mut k = 0usize;
    let result = solver.run_with(&omega0, |(state, sample)| {
        csv.push(sample)?;
        if k == 0 || (every > 0 && k.is_multiple_of(every)) {
            write_snapshot(&snap_dir.join(format!("omega_{k:06}.tfld")), &state.omega)?;
        }
        k += 1;
        Ok(())
    });
    // Abort mid-run: the CSV already holds every completed sample.
    let result = result?;
    write_snapshot(&dir.join("omega_final.tfld"), &result.final_state.omega)?;
    if let Some(z) = &result.final_state.zeta {
        write_snapshot(&dir.join("zeta_final.tfld"), z)?;
    }

    let drift = result.drift();
    let distances: Vec<_> = cfg
        .metrics
        .p
        .iter()
        .filter_map(|&p| {
            let series: Vec<f64> = result.samples.iter().filter_map(|s| s.distance(p)).collect();
            let first = *series.first()?;
            Some(json!({ "p": p, "initial": first, "max": series.iter().cloned().fold(0.0, f64::max) }))
        })
        .collect();
    let max_distance = cfg
        .metrics
        .p
        .first()
        .and_then(|&p| result.samples.iter().filter_map(|s| s.distance(p)).reduce(f64::max));
    let arnold = growth_constant(cfg);
    manifest.drift = drift_json(&drift);
    manifest.results = json!({
        "t_final": result.final_state.t,
        "steps": result.steps,
        "samples": result.samples.len(),
        "dissipative": result.dissipative,
        "initial_truncation": result.initial_truncation,
        "discarded_mean": result.final_state.discarded_mean,
        "orbit_distance": distances,
        "perp_ratio_max": drift.perp_ratio,
        "arnold_constant": arnold,
    });
    Ok(RunSummary {
        max_distance,
        drift,
        arnold_constant: arnold,
    })
}
