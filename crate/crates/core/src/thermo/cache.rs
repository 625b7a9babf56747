//! On-disk cache of a [`ThermoTable`] grid.
//!
//! Plain CSV with a versioned header. A cache is reused only when the jump
//! rate tag, series tolerance and term cap all match.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{GridPoint, ThermoSettings, ThermoTable};
use crate::error::{Result, ZrpError};
use crate::rate::{FugacityRadius, LocalJumpRate};

const MAGIC: &str = "# zrp-thermo-cache v1";

fn key(g: &LocalJumpRate, s: &ThermoSettings) -> String {
    format!("# key: {}|tol={:e}|k_max={}", g.tag(), s.tol, s.k_max)
}

pub fn save(table: &ThermoTable, path: &Path) -> Result<()> {
    let mut out = fs::File::create(path)?;
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "{}", key(table.rate(), table.settings()))?;
    let est = table.phi_c_estimate();
    writeln!(
        out,
        "# phi_c_estimate={} heuristic={} z_critical={} rho_c={}",
        est.value,
        est.heuristic,
        table.z_critical(),
        table.rho_c()
    )?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["phi", "z", "dz", "rho", "extrapolated"])?;
    for p in table.grid() {
        w.write_record([
            p.phi.to_string(),
            p.z.to_string(),
            p.dz.to_string(),
            p.rho.to_string(),
            u8::from(p.extrapolated).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Load a cached table; `Ok(None)` when the file is for a different key.
pub fn load(g: &LocalJumpRate, settings: ThermoSettings, path: &Path) -> Result<Option<ThermoTable>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(MAGIC) {
        return Err(ZrpError::Parse(format!("{}: not a thermo cache", path.display())));
    }
    if lines.next() != Some(key(g, &settings).as_str()) {
        return Ok(None);
    }
    let meta = lines.next().ok_or_else(|| ZrpError::Parse("truncated cache".into()))?;
    let mut fields = std::collections::HashMap::new();
    for item in meta.trim_start_matches('#').split_whitespace() {
        if let Some((k, v)) = item.split_once('=') {
            fields.insert(k, v);
        }
    }
    let num = |k: &str| -> Result<f64> {
        fields
            .get(k)
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(|| ZrpError::Parse(format!("cache field {k} missing")))
    };
    let estimate = FugacityRadius {
        value: num("phi_c_estimate")?,
        heuristic: fields.get("heuristic") == Some(&"true"),
    };
    let z_critical = num("z_critical")?;
    let rho_c = num("rho_c")?;

    let body: String = lines.collect::<Vec<_>>().join("\n");
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let mut grid = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let f = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| ZrpError::Parse(format!("bad cache row: {rec:?}")))
        };
        grid.push(GridPoint { phi: f(0)?, z: f(1)?, dz: f(2)?, rho: f(3)?, extrapolated: f(4)? != 0.0 });
    }
    if grid.is_empty() {
        return Err(ZrpError::Parse("empty cache grid".into()));
    }
    Ok(Some(ThermoTable::from_parts(g.clone(), settings, estimate, z_critical, rho_c, grid)))
}

/// Load from `path` if it holds a matching table, otherwise build and save.
pub fn load_or_build(g: &LocalJumpRate, settings: ThermoSettings, path: &Path) -> Result<ThermoTable> {
    if path.exists() {
        if let Some(t) = load(g, settings, path)? {
            return Ok(t);
        }
    }
    let t = ThermoTable::new(g.clone(), settings)?;
    save(&t, path)?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_grid() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("thermo.csv");
        let g = LocalJumpRate::evans(3.0).unwrap();
        let t = ThermoTable::new(g.clone(), ThermoSettings::default()).unwrap();
        save(&t, &path).unwrap();
        let back = load(&g, ThermoSettings::default(), &path).unwrap().unwrap();
        assert_eq!(back.grid(), t.grid());
        assert_eq!(back.rho_c(), t.rho_c());
        assert_eq!(back.z_critical(), t.z_critical());
        assert_eq!(back.mean_jump_rate(0.3).unwrap(), t.mean_jump_rate(0.3).unwrap());
    }

    #[test]
    fn mismatched_key_is_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("thermo.csv");
        let g = LocalJumpRate::evans(0.0).unwrap();
        let t = ThermoTable::new(g.clone(), ThermoSettings::default()).unwrap();
        save(&t, &path).unwrap();
        let other = LocalJumpRate::evans(3.0).unwrap();
        assert!(load(&other, ThermoSettings::default(), &path).unwrap().is_none());
        let rebuilt = load_or_build(&other, ThermoSettings::default(), &path).unwrap();
        assert!((rebuilt.rho_c() - 1.0).abs() < 1e-4);
        assert!(load(&other, ThermoSettings::default(), &path).unwrap().is_some());
    }

    #[test]
    fn rejects_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        fs::write(&path, "a,b\n1,2\n").unwrap();
        let g = LocalJumpRate::evans(0.0).unwrap();
        assert!(load(&g, ThermoSettings::default(), &path).is_err());
    }
}
