use std::f64::consts::TAU;

use crate::error::{invalid, Result, ZrpError};

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileShape {
    Constant(f64),
    /// `base + (amp/d) sum_i sin(2 pi u_i)`
    Sinusoidal { base: f64, amp: f64 },
    /// Periodic piecewise-linear interpolation of `values[i]` at `u = i/n`,
    /// averaged over the axes in `d = 2`.
    Table(Vec<f64>),
}

/// Macroscopic density profile `rho_0: T^d -> [0, rho_c)` with a sub-criticality margin.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSpec {
    pub shape: ProfileShape,
    pub margin: f64,
}

impl ProfileSpec {
    pub fn new(shape: ProfileShape, margin: f64) -> Result<Self> {
        if !(margin > 0.0) {
            return Err(invalid(format!("sub-criticality margin must be > 0, got {margin}")));
        }
        let p = Self { shape, margin };
        if !(p.min() >= 0.0) || !p.max().is_finite() {
            return Err(invalid("profile values must be finite and >= 0"));
        }
        Ok(p)
    }

    pub fn constant(c: f64, margin: f64) -> Result<Self> {
        Self::new(ProfileShape::Constant(c), margin)
    }

    pub fn sinusoidal(base: f64, amp: f64, margin: f64) -> Result<Self> {
        Self::new(ProfileShape::Sinusoidal { base, amp }, margin)
    }

    pub fn table(values: Vec<f64>, margin: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("profile table must not be empty"));
        }
        Self::new(ProfileShape::Table(values), margin)
    }

    pub fn eval(&self, u: [f64; 2], d: usize) -> f64 {
        match &self.shape {
            ProfileShape::Constant(c) => *c,
            ProfileShape::Sinusoidal { base, amp } => {
                base + amp / d as f64 * (0..d).map(|i| (TAU * u[i]).sin()).sum::<f64>()
            }
            ProfileShape::Table(v) => (0..d).map(|i| interp(v, u[i])).sum::<f64>() / d as f64,
        }
    }

    pub fn max(&self) -> f64 {
        match &self.shape {
            ProfileShape::Constant(c) => *c,
            ProfileShape::Sinusoidal { base, amp } => base + amp.abs(),
            ProfileShape::Table(v) => v.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn min(&self) -> f64 {
        match &self.shape {
            ProfileShape::Constant(c) => *c,
            ProfileShape::Sinusoidal { base, amp } => base - amp.abs(),
            ProfileShape::Table(v) => v.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.max() == self.min()
    }

    /// Require `max rho_0 <= rho_c - margin`.
    pub fn validate(&self, rho_c: f64) -> Result<()> {
        let bound = rho_c - self.margin;
        if self.max() > bound {
            return Err(ZrpError::Supercritical { max: self.max(), bound });
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        match &self.shape {
            ProfileShape::Constant(c) => format!("const({c})"),
            ProfileShape::Sinusoidal { base, amp } => format!("sin(base={base},amp={amp})"),
            ProfileShape::Table(v) => {
                let s: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                format!("table({})", s.join(";"))
            }
        }
    }
}

fn interp(v: &[f64], u: f64) -> f64 {
    let n = v.len();
    let x = u.rem_euclid(1.0) * n as f64;
    let i = (x.floor() as usize).min(n - 1);
    let t = x - i as f64;
    v[i] * (1.0 - t) + v[(i + 1) % n] * t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_evaluate() {
        let s = ProfileSpec::sinusoidal(0.5, 0.3, 0.1).unwrap();
        assert!((s.eval([0.25, 0.0], 1) - 0.8).abs() < 1e-15);
        assert!((s.eval([0.25, 0.75], 2) - 0.5).abs() < 1e-15);
        let t = ProfileSpec::table(vec![0.0, 1.0], 0.1).unwrap();
        assert_eq!(t.eval([0.25, 0.0], 1), 0.5);
        assert_eq!(t.eval([0.75, 0.0], 1), 0.5);
        assert_eq!(t.eval([1.0, 0.0], 1), 0.0);
    }

    #[test]
    fn sub_criticality_is_enforced() {
        let s = ProfileSpec::sinusoidal(0.5, 0.3, 0.1).unwrap();
        assert!(s.validate(1.0).is_ok());
        assert!(s.validate(0.85).is_err());
        assert!(s.validate(f64::INFINITY).is_ok());
        assert!(ProfileSpec::constant(0.5, 0.0).is_err());
        assert!(ProfileSpec::sinusoidal(0.1, 0.3, 0.1).is_err());
    }
}
