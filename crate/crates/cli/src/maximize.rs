use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde_json::json;

use torusflow::diagnostics::energy_with;
use torusflow::eigenmodes::{analyze, make_eigenstate, NearestOrbit};
use torusflow::io::{write_snapshot, write_trace};
use torusflow::rearrange::{burton_iterate_with, class_supremum, IterationReport, RearrangementClass};
use torusflow::spectral::SpectralOps;
use torusflow::GridField;

use crate::config::{ExperimentConfig, StartChoice};
use crate::failure::Failure;
use crate::manifest::Manifest;

/// Grids up to this many cells also get an exhaustive search over permutations.
const EXHAUSTIVE_CELLS: usize = 8;

pub fn maximize_into(cfg: &ExperimentConfig, config_text: &str, dir: &Path) -> Result<IterationReport, Failure> {
    let mut manifest = Manifest::new("maximize", cfg, config_text);
    let outcome = run(cfg, dir, &mut manifest);
    if let Err(e) = &outcome {
        manifest.fail(e.status(), e);
    }
    manifest.write(dir)?;
    outcome
}

fn run(cfg: &ExperimentConfig, dir: &Path, manifest: &mut Manifest) -> Result<IterationReport, Failure> {
    let g = cfg.geometry()?;
    let (class, generator) = match &cfg.initial.values {
        Some(v) => {
            let f = GridField::new(g, v.clone())?;
            (RearrangementClass::from_field(&f)?, f)
        }
        None => {
            let spec = cfg.orbit_spec()?;
            (RearrangementClass::from_eigenstate(&spec)?, make_eigenstate(&spec))
        }
    };
    let start = match cfg.maximize.start {
        StartChoice::Generator => generator,
        StartChoice::Random => class.random_member(cfg.initial.seed),
    };
    let ops = SpectralOps::new(g);
    write_snapshot(&dir.join("initial.tfld"), &start)?;
    let report = burton_iterate_with(&ops, &class, &start, cfg.maximize.max_iters, cfg.maximize.tol)?;
    write_trace(BufWriter::new(File::create(dir.join("trace.csv"))?), &report)?;
    write_snapshot(&dir.join("final.tfld"), &report.final_field)?;

    let supremum = class_supremum(&class, &analyze(&g)).ok();
    let e = report.final_energy();
    let exhaustive = if g.cells() <= EXHAUSTIVE_CELLS {
        Some(exhaustive_max(&ops, &class.random_member(0))?)
    } else {
        None
    };
    manifest.results = json!({
        "iterates": report.iterates,
        "converged": report.converged,
        "initial_energy": report.energies[0],
        "final_energy": e,
        "supremum": supremum,
        "energy_ratio": supremum.filter(|&m| m > 0.0).map(|m| e / m),
        "exhaustive_max": exhaustive,
        "final_orbit_distance": report.final_orbit_distance,
        "nearest": report.nearest.map(|n| match n {
            NearestOrbit::Direct => "direct",
            NearestOrbit::Swapped => "swapped",
        }),
        "worst_relative_descent": report.worst_relative_descent(),
        "max_distribution_deviation": report.max_distribution_deviation,
    });
    Ok(report)
}

/// Largest energy over every arrangement of the cell values of `f`.
fn exhaustive_max(ops: &SpectralOps, f: &GridField) -> Result<f64, Failure> {
    let mut values = f.values().to_vec();
    let mut best = f64::NEG_INFINITY;
    // Heap's algorithm.
    let n = values.len();
    let mut c = vec![0usize; n];
    let mut eval = |v: &[f64]| -> Result<(), Failure> {
        let e = energy_with(ops, &GridField::new(*f.geometry(), v.to_vec())?)?;
        best = best.max(e);
        Ok(())
    };
    eval(&values)?;
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                values.swap(0, i);
            } else {
                values.swap(c[i], i);
            }
            eval(&values)?;
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(best)
}
