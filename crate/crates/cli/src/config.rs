//! `key=value` experiment configuration.
//!
//! A config file holds one `key = value` per line, `#` starts a comment.
//! Command line pairs override the file. Comma lists expand into sweeps.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Thermo,
    Sample,
    Simulate,
    Pde,
    VerifyEoe,
    VerifyOneBlock,
    VerifyHydro,
    ScanRatio,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Thermo => "thermo",
            Kind::Sample => "sample",
            Kind::Simulate => "simulate",
            Kind::Pde => "pde",
            Kind::VerifyEoe => "verify-eoe",
            Kind::VerifyOneBlock => "verify-one-block",
            Kind::VerifyHydro => "verify-hydro",
            Kind::ScanRatio => "scan-ratio",
        }
    }

    /// Keys accepted by this experiment, with defaults.
    fn keys(self) -> Vec<(&'static str, &'static str)> {
        let mut k = vec![("family", "evans"), ("b", "3"), ("rates", ""), ("tol", "1e-14"), ("k_max", "1000000")];
        let profile = [("profile", "sin"), ("rho", "0.5"), ("amp", "0.3"), ("margin", "0.1"), ("values", "")];
        match self {
            Kind::Thermo => k.extend([("phi", ""), ("rho", "")]),
            Kind::Sample => {
                k.extend(profile);
                k.extend([("N", "64"), ("d", "1")]);
            }
            Kind::Simulate => {
                k.extend(profile);
                k.extend([("N", "64"), ("d", "1"), ("walk", "nn"), ("t", "0.01")]);
            }
            Kind::Pde => {
                k.extend(profile);
                k.extend([("m", "128"), ("d", "1"), ("walk", "nn"), ("t", "0.05"), ("eps", "0.1"), ("order", "2"), ("sigma_scale", "0.5")]);
            }
            Kind::VerifyEoe => k.extend([("rho", "0.5"), ("N", "8,16,32,64"), ("L", "1")]),
            Kind::VerifyOneBlock => k.extend([
                ("rho", "0.5"),
                ("margin", "0.1"),
                ("N", "128"),
                ("d", "1"),
                ("walk", "nn"),
                ("t", "0.05"),
                ("snapshots", "21"),
                ("ell", "1,8"),
                ("replicas", "100"),
            ]),
            Kind::VerifyHydro => {
                k.extend(profile);
                k.extend([
                    ("N", "64,256"),
                    ("d", "1"),
                    ("walk", "nn"),
                    ("t", "0.05"),
                    ("t_early", "0.01"),
                    ("replicas", "100"),
                    ("mesh", "64"),
                    ("pde_mesh", "256"),
                    ("eps", "0.1"),
                    ("order", "2"),
                    ("sigma_scale", "0.5"),
                    ("bootstrap", "200"),
                    ("deviation_max", "0.05"),
                ]);
            }
            Kind::ScanRatio => k.extend([("eps", "0.2"), ("lambda_max", "10"), ("n", "40"), ("delta", "1e-3")]),
        }
        k
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    values: BTreeMap<String, String>,
}

impl ExperimentConfig {
    /// Defaults, then the file, then command line pairs. Unknown keys are rejected.
    pub fn parse(kind: Kind, file: Option<&Path>, pairs: &[String]) -> Result<Self, ConfigError> {
        let defaults = kind.keys();
        let mut values: BTreeMap<String, String> =
            defaults.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        let mut set = |key: &str, value: &str, origin: &str| -> Result<(), ConfigError> {
            if !values.contains_key(key) {
                let known: Vec<&str> = defaults.iter().map(|(k, _)| *k).collect();
                return Err(err(format!("{origin}: unknown key {key:?} for {}; known keys: {}", kind.name(), known.join(", "))));
            }
            values.insert(key.to_string(), value.to_string());
            Ok(())
        };
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| err(format!("cannot read config {}: {e}", path.display())))?;
            for (no, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| err(format!("{}:{}: expected key = value, got {line:?}", path.display(), no + 1)))?;
                set(k.trim(), v.trim(), &format!("{}:{}", path.display(), no + 1))?;
            }
        }
        for p in pairs {
            let (k, v) = p.split_once('=').ok_or_else(|| err(format!("argument {p:?} is not key=value")))?;
            set(k.trim(), v.trim(), "command line")?;
        }
        Ok(Self { kind, values })
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        let v = self.raw(key);
        v.parse().map_err(|_| err(format!("{key}={v:?} is not a valid {}", std::any::type_name::<T>())))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, ConfigError> {
        let v = self.raw(key);
        if v.is_empty() {
            return Ok(Vec::new());
        }
        v.split(',')
            .map(|s| s.trim().parse().map_err(|_| err(format!("{key}: bad list entry {s:?} in {v:?}"))))
            .collect()
    }
}
