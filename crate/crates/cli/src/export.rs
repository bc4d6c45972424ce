use std::fs;
use std::io::Write;
use std::path::Path;

use torusflow::io::{fmt_f64, read_table};

use crate::failure::Failure;

/// Writes `<column>.dat` with one `t value` line per sample for each column
/// (every column but `t` when `columns` is empty). Returns the files written.
pub fn export_plot(run_dir: &Path, columns: &[String], out: &Path) -> Result<Vec<String>, Failure> {
    let csv = run_dir.join("diagnostics.csv");
    if !csv.is_file() {
        return Err(Failure::Config(format!("{} not found", csv.display())));
    }
    let table = read_table(&csv)?;
    let available: Vec<&str> = table.header.iter().map(String::as_str).filter(|h| *h != "t").collect();
    let wanted: Vec<&str> = if columns.is_empty() {
        available.clone()
    } else {
        columns.iter().map(String::as_str).collect()
    };
    if let Some(bad) = wanted.iter().find(|c| !available.contains(c)) {
        return Err(Failure::Config(format!(
            "unknown column {bad:?}; available: {}",
            available.join(", ")
        )));
    }
    let t = table
        .column("t")
        .ok_or_else(|| Failure::Config("diagnostics.csv has no t column".into()))?;
    fs::create_dir_all(out)?;
    let mut written = Vec::new();
    for name in wanted {
        let values = table.column(name).expect("checked above");
        let file = format!("{name}.dat");
        let mut w = std::io::BufWriter::new(fs::File::create(out.join(&file))?);
        writeln!(w, "# t {name}")?;
        for (t, v) in t.iter().zip(&values) {
            writeln!(w, "{} {}", fmt_f64(*t), fmt_f64(*v))?;
        }
        w.flush()?;
        written.push(file);
    }
    Ok(written)
}
