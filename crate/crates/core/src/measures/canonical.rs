//! The canonical ensemble `nu_{n,K}` by dynamic programming.
//!
//! `W_L(j) = sum_{k_1+..+k_L = j} prod 1/g!(k_i)` satisfies
//! `W_L(j) = sum_k w(k) W_{L-1}(j-k)`. Rows are stored as logarithms.

use rand::Rng;

use crate::error::{invalid, Result, ZrpError};
use crate::rate::LocalJumpRate;

const CELL_CAP: usize = 100_000_000;

#[derive(Debug, Clone)]
pub struct CanonicalTable {
    n: usize,
    k: usize,
    /// `ln w(k) = -ln g!(k)`
    ln_w: Vec<f64>,
    /// `ln_rows[L][j] = ln W_L(j)`, `L = 0..=n`; row 0 is `ln delta_{j0}`.
    ln_rows: Vec<Vec<f64>>,
}

fn log_convolve(ln_w: &[f64], prev: &[f64]) -> Vec<f64> {
    let k = prev.len();
    let mw = ln_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mp = prev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let a: Vec<f64> = ln_w.iter().map(|v| (v - mw).exp()).collect();
    let b: Vec<f64> = prev.iter().map(|v| (v - mp).exp()).collect();
    let mut out = vec![f64::NEG_INFINITY; k];
    for (j, o) in out.iter_mut().enumerate() {
        let s: f64 = (0..=j).map(|i| a[i] * b[j - i]).sum();
        *o = if s > 0.0 {
            s.ln() + mw + mp
        } else {
            // underflow in the shifted sum; fall back to a log-sum-exp
            let terms: Vec<f64> = (0..=j).map(|i| ln_w[i] + prev[j - i]).collect();
            let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
        };
    }
    out
}

/// DP table for `n` sites and `K` particles.
pub fn canonical_table(g: &LocalJumpRate, n: usize, k: usize) -> Result<CanonicalTable> {
    if n == 0 {
        return Err(invalid("canonical ensemble needs n >= 1"));
    }
    if n.saturating_mul(k + 1) > CELL_CAP {
        return Err(ZrpError::ResourceCap(format!("n*(K+1) = {} cells exceeds {CELL_CAP}", n * (k + 1))));
    }
    let mut ln_w = Vec::with_capacity(k + 1);
    let mut acc = 0.0;
    for j in 0..=k {
        if j > 0 {
            acc -= g.eval(j as u64).ln();
        }
        ln_w.push(acc);
    }
    let mut row0 = vec![f64::NEG_INFINITY; k + 1];
    row0[0] = 0.0;
    let mut ln_rows = Vec::with_capacity(n + 1);
    ln_rows.push(row0);
    ln_rows.push(ln_w.clone());
    for l in 2..=n {
        let next = log_convolve(&ln_w, &ln_rows[l - 1]);
        ln_rows.push(next);
    }
    Ok(CanonicalTable { n, k, ln_w, ln_rows })
}

/// Exact joint law of the first `L` sites; `probs[k1 + (K+1) k2]` for `L = 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    pub sites: usize,
    pub k: usize,
    pub probs: Vec<f64>,
}

impl Marginal {
    pub fn mean_per_site(&self) -> f64 {
        let s = self.k + 1;
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            let total = if self.sites == 1 { i } else { i % s + i / s };
            acc += total as f64 * p;
        }
        acc / self.sites as f64
    }

    /// Product `q(k1) [q(k2)]` laid out like `probs`.
    pub fn product_reference(&self, q: impl Fn(usize) -> f64) -> Vec<f64> {
        let s = self.k + 1;
        if self.sites == 1 {
            (0..s).map(&q).collect()
        } else {
            (0..s * s).map(|i| q(i % s) * q(i / s)).collect()
        }
    }
}

impl CanonicalTable {
    pub fn sites(&self) -> usize {
        self.n
    }

    pub fn particles(&self) -> usize {
        self.k
    }

    /// `ln W_L(j)`.
    pub fn ln_weight(&self, l: usize, j: usize) -> f64 {
        self.ln_rows[l][j]
    }

    /// `W_L(j)`.
    pub fn weight(&self, l: usize, j: usize) -> f64 {
        self.ln_rows[l][j].exp()
    }

    /// Sequential conditional draw: site `i` gets `k` with probability
    /// `w(k) W_r(j-k) / W_{r+1}(j)`, `r` sites still to fill.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.n);
        let mut j = self.k;
        for i in 0..self.n {
            let r = self.n - i - 1;
            if r == 0 {
                out.push(j as u32);
                break;
            }
            let norm = self.ln_rows[r + 1][j];
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut pick = j;
            for kk in 0..=j {
                acc += (self.ln_w[kk] + self.ln_rows[r][j - kk] - norm).exp();
                if u < acc {
                    pick = kk;
                    break;
                }
            }
            out.push(pick as u32);
            j -= pick;
        }
        out
    }

    pub fn marginal(&self, l: usize) -> Result<Marginal> {
        if l == 0 || l > 2 {
            return Err(invalid(format!("exact marginals need L in {{1, 2}}, got {l}")));
        }
        if l > self.n {
            return Err(invalid(format!("L = {l} exceeds the number of sites {}", self.n)));
        }
        let k = self.k;
        let norm = self.ln_rows[self.n][k];
        let rest = &self.ln_rows[self.n - l];
        let probs = if l == 1 {
            (0..=k).map(|a| (self.ln_w[a] + rest[k - a] - norm).exp()).collect()
        } else {
            let s = k + 1;
            let mut p = vec![0.0; s * s];
            for b in 0..=k {
                for a in 0..=(k - b) {
                    p[a + s * b] = (self.ln_w[a] + self.ln_w[b] + rest[k - a - b] - norm).exp();
                }
            }
            p
        };
        Ok(Marginal { sites: l, k, probs })
    }
}

pub fn sample_canonical<R: Rng + ?Sized>(table: &CanonicalTable, rng: &mut R) -> Vec<u32> {
    table.sample(rng)
}

pub fn canonical_marginal(table: &CanonicalTable, l: usize) -> Result<Marginal> {
    table.marginal(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn small_tables() {
        let g0 = LocalJumpRate::evans(0.0).unwrap();
        assert!((canonical_table(&g0, 2, 2).unwrap().weight(2, 2) - 3.0).abs() < 1e-14);
        let g3 = LocalJumpRate::evans(3.0).unwrap();
        let t = canonical_table(&g3, 2, 2).unwrap();
        assert!((t.weight(2, 2) - 0.2625).abs() < 1e-15);
        for k in 0..6 {
            let t1 = canonical_table(&g3, 1, k).unwrap();
            assert!((t1.weight(1, k) - 1.0 / g3.factorial_rate(k as u64)).abs() < 1e-15);
        }
        let m = t.marginal(1).unwrap();
        assert!((m.probs[1] - 0.0625 / 0.2625).abs() < 1e-14);
    }

    #[test]
    fn marginals_sum_to_one_with_the_right_mean() {
        let g = LocalJumpRate::evans(3.0).unwrap();
        let t = canonical_table(&g, 10, 17).unwrap();
        for l in [1, 2] {
            let m = t.marginal(l).unwrap();
            assert!((m.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((m.mean_per_site() - 1.7).abs() < 1e-12);
        }
        assert!(t.marginal(3).is_err());
    }

    #[test]
    fn matches_direct_enumeration() {
        // n = L = 3, K <= 6, against conditioning the product law
        let g = LocalJumpRate::evans(3.0).unwrap();
        let w = |k: usize| 1.0 / g.factorial_rate(k as u64);
        for k in 0..=6 {
            let t = canonical_table(&g, 3, k).unwrap();
            let mut z = 0.0;
            for a in 0..=k {
                for b in 0..=(k - a) {
                    z += w(a) * w(b) * w(k - a - b);
                }
            }
            assert!((t.weight(3, k) / z - 1.0).abs() < 1e-12);
            let m = t.marginal(2).unwrap();
            for a in 0..=k {
                for b in 0..=(k - a) {
                    let exact = w(a) * w(b) * w(k - a - b) / z;
                    assert!((m.probs[a + (k + 1) * b] - exact).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn sampler_frequencies() {
        let g0 = LocalJumpRate::evans(0.0).unwrap();
        let t = canonical_table(&g0, 2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            let s = t.sample(&mut rng);
            assert_eq!(s.iter().sum::<u32>(), 2);
            counts[s[0] as usize] += 1;
        }
        let se = (n as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 / 3.0).abs() < 5.0 * se);
        }
        let zero = canonical_table(&g0, 5, 0).unwrap();
        assert_eq!(zero.sample(&mut rng), vec![0; 5]);
        let one = canonical_table(&g0, 1, 7).unwrap();
        assert_eq!(one.sample(&mut rng), vec![7]);
    }

    #[test]
    fn large_tables_stay_finite() {
        let g = LocalJumpRate::evans(0.0).unwrap();
        let t = canonical_table(&g, 400, 2000).unwrap();
        assert!(t.ln_rows[400].iter().all(|v| v.is_finite()));
        assert!(canonical_table(&g, 1_000_000, 1_000).is_err());
    }
}
