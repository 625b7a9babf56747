//! Local jump rates `g: Z+ -> R+` of a zero range process.
//!
//! A jump rate must vanish exactly at zero, have bounded increments and a
//! positive fugacity radius `liminf g!(k)^(1/k)`. Two families are
//! supported: the Evans rates `g(k) = 1 + b/k` and explicit tables whose
//! last entry is repeated forever.

use crate::error::{invalid, Result, ZrpError};

#[derive(Debug, Clone, PartialEq)]
pub enum RateFamily {
    /// `g(k) = 1{k >= 1} (1 + b/k)`, `b >= 0`.
    Evans { b: f64 },
    /// `g(k) = values[k - 1]` for `1 <= k <= n` and `g(k) = values[n - 1]` beyond.
    Table { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalJumpRate {
    family: RateFamily,
    lipschitz_bound: f64,
    sup_bound: f64,
}

/// Fugacity radius estimate together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FugacityRadius {
    pub value: f64,
    /// `true` when the value comes from the finite tail window rather than a closed form.
    pub heuristic: bool,
}

impl LocalJumpRate {
    pub fn evans(b: f64) -> Result<Self> {
        if !(b.is_finite() && b >= 0.0) {
            return Err(invalid(format!("Evans parameter b must be finite and >= 0, got {b}")));
        }
        Ok(Self {
            family: RateFamily::Evans { b },
            // the largest increment is the jump g(1) - g(0)
            lipschitz_bound: 1.0 + b,
            sup_bound: 1.0 + b,
        })
    }

    pub fn table(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("jump rate table must have at least one entry"));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(invalid(format!("jump rate table entries must be finite and > 0, got {v}")));
        }
        let mut lipschitz = values[0];
        for w in values.windows(2) {
            lipschitz = lipschitz.max((w[1] - w[0]).abs());
        }
        let sup = values.iter().cloned().fold(0.0, f64::max);
        Ok(Self {
            family: RateFamily::Table { values },
            lipschitz_bound: lipschitz,
            sup_bound: sup,
        })
    }

    pub fn family(&self) -> &RateFamily {
        &self.family
    }

    /// `||g'||_inf = sup_k |g(k+1) - g(k)|`.
    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz_bound
    }

    /// `||g||_inf`.
    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    /// Both supported families are bounded.
    pub fn is_bounded(&self) -> bool {
        self.sup_bound.is_finite()
    }

    /// Short tag used in cache keys and report headers.
    pub fn tag(&self) -> String {
        match &self.family {
            RateFamily::Evans { b } => format!("evans(b={b})"),
            RateFamily::Table { values } => {
                let body: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                format!("table({})", body.join(";"))
            }
        }
    }

    #[inline]
    pub fn eval(&self, k: u64) -> f64 {
        if k == 0 {
            return 0.0;
        }
        match &self.family {
            RateFamily::Evans { b } => 1.0 + b / k as f64,
            RateFamily::Table { values } => {
                let i = (k as usize).min(values.len()) - 1;
                values[i]
            }
        }
    }

    /// `ln g!(k) = sum_{j=1..k} ln g(j)`.
    pub fn ln_factorial_rate(&self, k: u64) -> f64 {
        match &self.family {
            RateFamily::Table { values } => {
                let n = values.len() as u64;
                let head: f64 = values.iter().take(k.min(n) as usize).map(|v| v.ln()).sum();
                let tail = k.saturating_sub(n) as f64 * values[values.len() - 1].ln();
                head + tail
            }
            RateFamily::Evans { .. } => {
                let mut acc = 0.0;
                let mut comp = 0.0;
                for j in 1..=k {
                    // Kahan: ~1e5 small positive terms
                    let y = self.eval(j).ln() - comp;
                    let t = acc + y;
                    comp = (t - acc) - y;
                    acc = t;
                }
                acc
            }
        }
    }

    /// `g!(k) = g(1) g(2) ... g(k)`, with `g!(0) = 1`.
    pub fn factorial_rate(&self, k: u64) -> f64 {
        if k <= 64 {
            (1..=k).map(|j| self.eval(j)).product()
        } else {
            self.ln_factorial_rate(k).exp()
        }
    }

    /// `inf_{j > k} g(j)`, the quantity that bounds the ratio of consecutive
    /// series terms `phi / g(j)` beyond index `k`.
    pub fn tail_infimum(&self, k: u64) -> f64 {
        match &self.family {
            // 1 + b/j decreases to 1
            RateFamily::Evans { .. } => 1.0,
            RateFamily::Table { values } => {
                let start = (k as usize).min(values.len() - 1);
                values[start..].iter().cloned().fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Exact radius of convergence of the partition function, when known.
    pub fn exact_fugacity_radius(&self) -> f64 {
        match &self.family {
            RateFamily::Evans { .. } => 1.0,
            RateFamily::Table { values } => values[values.len() - 1],
        }
    }

    /// Whether `Z(phi_c)` is finite. Evans: iff `b > 1`. Tables: never, since
    /// the terms of the series at `phi_c` are eventually constant.
    pub fn partition_finite_at_radius(&self) -> bool {
        self.derivative_finite_at_radius(0)
    }

    /// Whether `Z'(phi_c)` is finite, i.e. whether the critical density is finite.
    pub fn critical_density_finite(&self) -> bool {
        self.derivative_finite_at_radius(1)
    }

    /// Whether `Z^(j)(phi_c)` is finite. At `phi_c = 1` the Evans terms
    /// `C(k, j) / g!(k)` decay like `k^(j - b)`.
    pub fn derivative_finite_at_radius(&self, j: usize) -> bool {
        match &self.family {
            RateFamily::Evans { b } => *b > j as f64 + 1.0,
            RateFamily::Table { .. } => false,
        }
    }
}

/// Estimate `phi_c = liminf_k g!(k)^(1/k)`.
///
/// Evans rates return the closed form `phi_c = 1`. Other families return the
/// minimum of `g!(k)^(1/k)` over the window `[k_probe / 2, k_probe]`, which is
/// only a heuristic for the liminf.
pub fn fugacity_radius(g: &LocalJumpRate, k_probe: u64) -> Result<FugacityRadius> {
    if k_probe < 100 {
        return Err(invalid(format!("k_probe must be >= 100, got {k_probe}")));
    }
    if let RateFamily::Evans { .. } = g.family() {
        return Ok(FugacityRadius { value: 1.0, heuristic: false });
    }
    let lo = k_probe / 2;
    let mut ln_fact = g.ln_factorial_rate(lo - 1);
    let mut best = f64::INFINITY;
    for k in lo..=k_probe {
        ln_fact += g.eval(k).ln();
        best = best.min(ln_fact / k as f64);
    }
    let value = best.exp();
    if !(value > 0.0) {
        return Err(ZrpError::InvalidParameter(format!(
            "fugacity radius estimate {value} violates positivity"
        )));
    }
    Ok(FugacityRadius { value, heuristic: true })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorial_rate_examples() {
        let g0 = LocalJumpRate::evans(0.0).unwrap();
        assert_eq!(g0.factorial_rate(5), 1.0);
        assert_eq!(g0.factorial_rate(0), 1.0);
        let g3 = LocalJumpRate::evans(3.0).unwrap();
        assert!((g3.factorial_rate(2) - 10.0).abs() < 1e-12);
        // g!(k) = (k+1)(k+2)(k+3)/6 for b = 3
        for k in [10u64, 100, 1000] {
            let kf = k as f64;
            let exact = (kf + 1.0) * (kf + 2.0) * (kf + 3.0) / 6.0;
            assert!((g3.factorial_rate(k) / exact - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn large_k_does_not_overflow() {
        let g = LocalJumpRate::table(vec![3.0]).unwrap();
        let ln = g.ln_factorial_rate(100_000);
        assert!((ln - 100_000.0 * 3f64.ln()).abs() < 1e-6);
        assert!(g.factorial_rate(100_000).is_infinite());
    }

    #[test]
    fn axioms_hold_on_grid() {
        for g in [
            LocalJumpRate::evans(0.0).unwrap(),
            LocalJumpRate::evans(3.0).unwrap(),
            LocalJumpRate::table(vec![0.5, 2.0, 1.5]).unwrap(),
        ] {
            assert_eq!(g.eval(0), 0.0);
            for k in 0..2000u64 {
                if k > 0 {
                    assert!(g.eval(k) > 0.0);
                }
                assert!((g.eval(k + 1) - g.eval(k)).abs() <= g.lipschitz_bound() + 1e-15);
                assert!(g.eval(k) <= g.sup_bound());
            }
        }
    }

    #[test]
    fn fugacity_radius_examples() {
        for b in [0.0, 3.0] {
            let r = fugacity_radius(&LocalJumpRate::evans(b).unwrap(), 200).unwrap();
            assert_eq!(r.value, 1.0);
            assert!(!r.heuristic);
        }
        let r = fugacity_radius(&LocalJumpRate::table(vec![2.0]).unwrap(), 200).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
        assert!(r.heuristic);
        assert!(fugacity_radius(&LocalJumpRate::evans(1.0).unwrap(), 50).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(LocalJumpRate::evans(-1.0).is_err());
        assert!(LocalJumpRate::table(vec![]).is_err());
        assert!(LocalJumpRate::table(vec![1.0, 0.0]).is_err());
    }
}
