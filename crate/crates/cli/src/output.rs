use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use zrp_core::verify::ExperimentReport;

use crate::config::ExperimentConfig;

/// `report.csv`, `summary.txt` and `manifest.txt` in `dir`.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(File::create(dir.join("report.csv"))?);
    report.write_csv(&mut w).map_err(std::io::Error::other)?;
    w.flush()?;
    std::fs::write(dir.join("summary.txt"), report.summary_text())
}

pub fn write_manifest(dir: &Path, c: &ExperimentConfig, seed: u64, threads: usize, files: &[String]) -> std::io::Result<()> {
    let mut s = String::new();
    s.push_str(&format!("tool: zrp-lab {}\n", env!("CARGO_PKG_VERSION")));
    s.push_str(&format!("experiment: {}\n", c.kind.name()));
    s.push_str(&format!("seed: {seed}\n"));
    s.push_str("replica seeds: seed xor replica index\n");
    s.push_str(&format!("threads: {threads}\n"));
    for (k, v) in c.entries() {
        s.push_str(&format!("param {k} = {v}\n"));
    }
    for f in ["report.csv", "summary.txt"].iter().map(|s| s.to_string()).chain(files.iter().cloned()) {
        s.push_str(&format!("file: {f}\n"));
    }
    std::fs::write(dir.join("manifest.txt"), s)
}
