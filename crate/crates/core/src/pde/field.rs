use crate::error::{invalid, Result, ZrpError};
use crate::measures::ProfileSpec;

/// Grid function on the torus `T^d` with mesh `h = 1/m` per axis.
///
/// Node `i` sits at `u = (i + 1)/m`, so node `m - 1` is the point `u = 1 ≡ 0`.
/// Refining `m -> 2m` keeps every coarse node: coarse `i` is fine `2i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    d: usize,
    m: usize,
    values: Vec<f64>,
    t: f64,
}

impl DensityField {
    pub fn new(d: usize, m: usize, values: Vec<f64>, t: f64) -> Result<Self> {
        if !(d == 1 || d == 2) {
            return Err(ZrpError::Dimension(format!("d must be 1 or 2, got {d}")));
        }
        if values.len() != m.pow(d as u32) {
            return Err(ZrpError::Dimension(format!(
                "field with m={m}, d={d} needs {} values, got {}",
                m.pow(d as u32),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ZrpError::NonFinite { step: 0 });
        }
        Ok(Self { d, m, values, t })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub(crate) fn set_t(&mut self, t: f64) {
        self.t = t;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut Vec<f64> {
        &mut self.values
    }

    /// Coordinates of node `i` (row-major in `d = 2`).
    pub fn node(&self, i: usize) -> [f64; 2] {
        let h = self.h();
        if self.d == 1 {
            [(i + 1) as f64 * h, 0.0]
        } else {
            [((i % self.m) + 1) as f64 * h, ((i / self.m) + 1) as f64 * h]
        }
    }

    /// `h^d sum rho`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.h().powi(self.d as i32)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Periodic trapezoid rule for `int f(u, rho(u)) du`.
    pub fn integrate(&self, f: impl Fn([f64; 2], f64) -> f64) -> f64 {
        let w = self.h().powi(self.d as i32);
        self.values.iter().enumerate().map(|(i, &v)| f(self.node(i), v)).sum::<f64>() * w
    }

    /// `h^d sum |a - b|`.
    pub fn l1_distance(&self, other: &DensityField) -> Result<f64> {
        self.same_mesh(other)?;
        let w = self.h().powi(self.d as i32);
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).sum::<f64>() * w)
    }

    /// `sqrt(h^d sum |a - b|^2)`.
    pub fn l2_distance(&self, other: &DensityField) -> Result<f64> {
        self.same_mesh(other)?;
        let w = self.h().powi(self.d as i32);
        Ok((self.values.iter().zip(&other.values).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() * w).sqrt())
    }

    fn same_mesh(&self, other: &DensityField) -> Result<()> {
        if self.d != other.d || self.m != other.m {
            return Err(ZrpError::Dimension(format!(
                "mesh mismatch: (d={}, m={}) vs (d={}, m={})",
                self.d, self.m, other.d, other.m
            )));
        }
        Ok(())
    }

    /// Restrict to the coarse mesh `m / factor` by taking the shared nodes.
    pub fn restrict(&self, factor: usize) -> Result<DensityField> {
        if factor == 0 || !self.m.is_multiple_of(factor) {
            return Err(invalid(format!("factor {factor} must divide m={}", self.m)));
        }
        let mc = self.m / factor;
        let pick = |i: usize| (i + 1) * factor - 1;
        let values = if self.d == 1 {
            (0..mc).map(|i| self.values[pick(i)]).collect()
        } else {
            let mut v = Vec::with_capacity(mc * mc);
            for j in 0..mc {
                for i in 0..mc {
                    v.push(self.values[pick(i) + self.m * pick(j)]);
                }
            }
            v
        };
        DensityField::new(self.d, mc, values, self.t)
    }

    /// Elementwise mean of fields on the same mesh.
    pub fn average(fields: &[DensityField]) -> Result<DensityField> {
        let first = fields.first().ok_or_else(|| invalid("cannot average zero fields"))?;
        let mut acc = vec![0.0; first.values.len()];
        for f in fields {
            first.same_mesh(f)?;
            for (a, v) in acc.iter_mut().zip(&f.values) {
                *a += v;
            }
        }
        let n = fields.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        DensityField::new(first.d, first.m, acc, first.t)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W, header: &[String]) -> Result<()> {
        let mut out = out;
        for line in header {
            writeln!(out, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "u0", "u1", "value", "t"])?;
        for (i, v) in self.values.iter().enumerate() {
            let u = self.node(i);
            w.write_record([i.to_string(), u[0].to_string(), u[1].to_string(), v.to_string(), self.t.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evaluate a profile at the mesh nodes, rejecting super-critical data.
pub fn discretize_profile(profile: &ProfileSpec, m: usize, d: usize, rho_c: f64) -> Result<DensityField> {
    if m < 8 {
        return Err(invalid(format!("mesh must have m >= 8, got {m}")));
    }
    profile.validate(rho_c)?;
    let probe = DensityField::new(d, m, vec![0.0; m.pow(d as u32)], 0.0)?;
    let values = (0..probe.values.len()).map(|i| profile.eval(probe.node(i), d)).collect();
    DensityField::new(d, m, values, 0.0)
}
