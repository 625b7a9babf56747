use std::io::{BufRead, Write};

use crate::error::{Result, ZrpError};

#[derive(Debug, Clone, PartialEq)]
pub struct Statistic {
    pub name: String,
    pub value: f64,
    pub std_err: Option<f64>,
    pub replicas: usize,
    pub unit: String,
}

impl Statistic {
    pub fn exact(name: impl Into<String>, value: f64, unit: impl Into<String>) -> Self {
        Self { name: name.into(), value, std_err: None, replicas: 1, unit: unit.into() }
    }

    pub fn sampled(name: impl Into<String>, value: f64, std_err: f64, replicas: usize, unit: impl Into<String>) -> Self {
        Self { name: name.into(), value, std_err: Some(std_err), replicas, unit: unit.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Criterion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Parameters, statistics and pass/fail outcomes of one experiment.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentReport {
    pub id: String,
    pub parameters: Vec<(String, String)>,
    pub statistics: Vec<Statistic>,
    pub criteria: Vec<Criterion>,
    pub runtime_s: f64,
}

impl ExperimentReport {
    pub fn new(id: impl Into<String>) -> Self {
        Self { id: id.into(), ..Self::default() }
    }

    pub fn param(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.parameters.push((key.into(), value.to_string()));
        self
    }

    pub fn push(&mut self, s: Statistic) -> &mut Self {
        self.statistics.push(s);
        self
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) -> &mut Self {
        self.criteria.push(Criterion { name: name.into(), passed, detail: detail.into() });
        self
    }

    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    pub fn statistic(&self, name: &str) -> Option<&Statistic> {
        self.statistics.iter().find(|s| s.name == name)
    }

    /// `#`-prefixed parameter lines, then `name,value,std_err,replicas,unit`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# experiment: {}", self.id)?;
        for (k, v) in &self.parameters {
            writeln!(out, "# {k}: {v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["name", "value", "std_err", "replicas", "unit"])?;
        for s in &self.statistics {
            w.write_record([
                s.name.clone(),
                format!("{:e}", s.value),
                s.std_err.map(|e| format!("{e:e}")).unwrap_or_default(),
                s.replicas.to_string(),
                s.unit.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read back what [`write_csv`](Self::write_csv) produced.
    pub fn read_csv<R: BufRead>(input: R) -> Result<ExperimentReport> {
        let mut report = ExperimentReport::default();
        let mut body = String::new();
        for line in input.lines() {
            let line = line?;
            if let Some(rest) = line.strip_prefix("# ") {
                if let Some((k, v)) = rest.split_once(": ") {
                    if k == "experiment" {
                        report.id = v.to_string();
                    } else {
                        report.parameters.push((k.to_string(), v.to_string()));
                    }
                }
            } else {
                body.push_str(&line);
                body.push('\n');
            }
        }
        let mut r = csv::Reader::from_reader(body.as_bytes());
        for rec in r.records() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).unwrap_or("").to_string();
            let num = |s: String| s.parse::<f64>().map_err(|_| ZrpError::Parse(format!("bad number {s:?}")));
            let std_err = match field(2).as_str() {
                "" => None,
                s => Some(num(s.to_string())?),
            };
            report.statistics.push(Statistic {
                name: field(0),
                value: num(field(1))?,
                std_err,
                replicas: field(3).parse().map_err(|_| ZrpError::Parse("bad replica count".into()))?,
                unit: field(4),
            });
        }
        Ok(report)
    }

    pub fn summary_text(&self) -> String {
        let mut s = format!("experiment {}\n", self.id);
        for (k, v) in &self.parameters {
            s.push_str(&format!("  {k} = {v}\n"));
        }
        for st in &self.statistics {
            match st.std_err {
                Some(e) => s.push_str(&format!("  {} = {:.6e} +- {:.2e} ({} replicas) {}\n", st.name, st.value, e, st.replicas, st.unit)),
                None => s.push_str(&format!("  {} = {:.10e} {}\n", st.name, st.value, st.unit)),
            }
        }
        for c in &self.criteria {
            s.push_str(&format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
        }
        s.push_str(&format!("runtime {:.2} s\n", self.runtime_s));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let mut r = ExperimentReport::new("demo");
        r.param("b", 3).param("rho", 0.5);
        r.push(Statistic::exact("H[N=8]", 0.0123, "nats"));
        r.push(Statistic::sampled("L1[N=64]", 0.05, 0.002, 100, "density"));
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let back = ExperimentReport::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.id, "demo");
        assert_eq!(back.parameters, r.parameters);
        assert_eq!(back.statistics, r.statistics);
    }

    #[test]
    fn empty_report_is_header_only() {
        let r = ExperimentReport::new("empty");
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().last().unwrap(), "name,value,std_err,replicas,unit");
        assert!(r.passed());
    }
}
