//! Report files: one CSV, a JSON sidecar and an optional gnuplot script.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;

/// Axes of the plot emitted for a report.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x: usize,
    pub ys: Vec<usize>,
    pub log_x: bool,
    pub log_y: bool,
}

pub trait Report {
    /// File stem.
    fn name(&self) -> String;
    fn columns(&self) -> Vec<&'static str>;
    fn rows(&self) -> Vec<Vec<String>>;
    /// Embedded configuration and fitted quantities.
    fn metadata(&self) -> serde_json::Value;
    fn plot(&self) -> Option<PlotSpec> {
        None
    }
}

pub(crate) fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn write_csv(report: &dyn Report, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(report.columns())?;
    for row in report.rows() {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn gnuplot(report: &dyn Report, spec: &PlotSpec, csv_name: &str) -> String {
    let cols = report.columns();
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set key autotitle columnhead\n");
    s.push_str(&format!("set title '{}'\n", spec.title.replace('\'', "")));
    s.push_str(&format!("set xlabel '{}'\n", cols[spec.x]));
    if spec.log_x {
        s.push_str("set logscale x\n");
    }
    if spec.log_y {
        s.push_str("set logscale y\n");
    }
    s.push_str(&format!("set terminal pngcairo size 900,600\nset output '{}.png'\n", report.name()));
    let series: Vec<String> =
        spec.ys.iter().map(|y| format!("'{csv_name}' using {}:{} with linespoints", spec.x + 1, y + 1)).collect();
    s.push_str(&format!("plot {}\n", series.join(", \\\n     ")));
    s
}

/// Writes `<name>.csv`, `<name>.json` and, when the report defines a plot,
/// `<name>.gp` into `dir`.
pub fn write_report(report: &dyn Report, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let name = report.name();
    let csv_path = dir.join(format!("{name}.csv"));
    write_csv(report, &csv_path)?;
    let json_path = dir.join(format!("{name}.json"));
    let text = serde_json::to_string_pretty(&report.metadata()).expect("report metadata serializes");
    fs::write(&json_path, text + "\n")?;
    let mut paths = vec![csv_path, json_path];
    if let Some(spec) = report.plot() {
        let gp = dir.join(format!("{name}.gp"));
        fs::write(&gp, gnuplot(report, &spec, &format!("{name}.csv")))?;
        paths.push(gp);
    }
    Ok(paths)
}
