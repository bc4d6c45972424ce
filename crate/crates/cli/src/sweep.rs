use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde_json::json;

use torusflow::io::fmt_f64;

use crate::config::ExperimentConfig;
use crate::failure::Failure;
use crate::manifest::Manifest;
use crate::simulate::{simulate_into, RunSummary};

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Runs every grid point concurrently into `dir/point_NNN` and writes
/// `aggregate.csv`. Returns the most severe point failure, if any.
pub fn sweep(cfg: &ExperimentConfig, config_text: &str, dir: &Path) -> Result<(), Failure> {
    let points = cfg.sweep_points();
    let outcomes: Vec<(ExperimentConfig, Result<RunSummary, Failure>)> = points
        .into_par_iter()
        .enumerate()
        .map(|(i, point)| {
            let sub = dir.join(format!("point_{i:03}"));
            let text = toml::to_string(&point).expect("configs always serialise");
            let r = fs::create_dir_all(&sub)
                .map_err(Failure::from)
                .and_then(|_| simulate_into(&point, &text, &sub));
            (point, r)
        })
        .collect();

    let mut csv = csv::Writer::from_path(dir.join("aggregate.csv")).map_err(|e| Failure::Config(e.to_string()))?;
    let header = [
        "point",
        "epsilon",
        "aspect",
        "p",
        "max_orbit_distance",
        "max_perp_ratio",
        "arnold_constant",
        "status",
    ];
    csv.write_record(header).map_err(|e| Failure::Config(e.to_string()))?;
    let mut rows = Vec::new();
    let mut worst: Option<Failure> = None;
    for (i, (point, r)) in outcomes.into_iter().enumerate() {
        let aspect = point.geometry.nu2 / point.geometry.nu1;
        let p = point.metrics.p.first().copied();
        let (dist, perp, arnold, status) = match r {
            Ok(s) => (
                s.max_distance,
                Some(s.drift.perp_ratio),
                s.arnold_constant,
                "ok".to_string(),
            ),
            Err(e) => {
                let status = e.status().to_string();
                if worst.as_ref().is_none_or(|w| e.exit_code() > w.exit_code()) {
                    worst = Some(e);
                }
                (None, None, None, status)
            }
        };
        csv.write_record([
            format!("{i:03}"),
            fmt_f64(point.initial.epsilon),
            fmt_f64(aspect),
            opt(p),
            opt(dist),
            opt(perp),
            opt(arnold),
            status.clone(),
        ])
        .map_err(|e| Failure::Config(e.to_string()))?;
        rows.push(json!({
            "point": i, "name": point.name, "epsilon": point.initial.epsilon, "aspect": aspect, "p": p,
            "max_orbit_distance": dist, "max_perp_ratio": perp, "arnold_constant": arnold, "status": status,
        }));
    }
    csv.flush()?;

    let mut manifest = Manifest::new("sweep", cfg, config_text);
    manifest.results = json!(rows);
    if let Some(e) = &worst {
        manifest.fail(e.status(), e);
    }
    manifest.write(dir)?;
    worst.map_or(Ok(()), Err)
}
