//! Elementary step distributions: finitely supported, mean zero, with
//! support generating `Z^d`.

use crate::error::{invalid, Result, ZrpError};
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct StepDistribution {
    d: usize,
    steps: Vec<[i64; 2]>,
    /// Integer weights; `p(z_i) = weights[i] / denominator`.
    weights: Vec<u64>,
    denominator: u64,
    probs: Vec<f64>,
    cdf: Vec<f64>,
    sigma: [[f64; 2]; 2],
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl StepDistribution {
    /// Build from support vectors and positive integer weights.
    pub fn from_weights(d: usize, steps: Vec<[i64; 2]>, weights: Vec<u64>) -> Result<Self> {
        if !(d == 1 || d == 2) {
            return Err(ZrpError::Dimension(format!("d must be 1 or 2, got {d}")));
        }
        if steps.is_empty() || steps.len() != weights.len() {
            return Err(invalid("step support and weights must be non-empty and of equal length"));
        }
        if weights.iter().any(|&w| w == 0) {
            return Err(invalid("step probabilities must be positive"));
        }
        if d == 1 && steps.iter().any(|z| z[1] != 0) {
            return Err(ZrpError::Dimension("second component must be 0 when d = 1".into()));
        }
        if steps.iter().any(|z| z[0] == 0 && z[1] == 0) {
            return Err(invalid("the zero step is not allowed"));
        }
        // exact mean-zero check
        for axis in 0..d {
            let m: i128 = steps.iter().zip(&weights).map(|(z, &w)| z[axis] as i128 * w as i128).sum();
            if m != 0 {
                return Err(invalid(format!("step distribution is not mean zero along axis {axis}")));
            }
        }
        // lattice generated by the support must be all of Z^d
        let generated = if d == 1 {
            steps.iter().fold(0, |acc, z| gcd(acc, z[0].unsigned_abs())) == 1
        } else {
            let mut g = 0;
            for (i, a) in steps.iter().enumerate() {
                for b in &steps[i + 1..] {
                    g = gcd(g, (a[0] * b[1] - a[1] * b[0]).unsigned_abs());
                }
            }
            g == 1
        };
        if !generated {
            return Err(invalid("support does not generate Z^d"));
        }

        let denominator: u64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|&w| w as f64 / denominator as f64).collect();
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0;
        for &w in &weights {
            acc += w;
            cdf.push(acc as f64 / denominator as f64);
        }
        let mut sigma = [[0.0; 2]; 2];
        for (z, p) in steps.iter().zip(&probs) {
            for i in 0..d {
                for j in 0..d {
                    sigma[i][j] += p * (z[i] * z[j]) as f64;
                }
            }
        }
        let pd = if d == 1 {
            sigma[0][0] > 0.0
        } else {
            sigma[0][0] > 0.0 && sigma[0][0] * sigma[1][1] - sigma[0][1] * sigma[1][0] > 0.0
        };
        if !pd {
            return Err(invalid("covariance is not positive definite"));
        }
        Ok(Self { d, steps, weights, denominator, probs, cdf, sigma })
    }

    /// `p(+-e_i) = 1/(2d)`.
    pub fn nearest_neighbor(d: usize) -> Result<Self> {
        match d {
            1 => Self::from_weights(1, vec![[1, 0], [-1, 0]], vec![1, 1]),
            2 => Self::from_weights(2, vec![[1, 0], [-1, 0], [0, 1], [0, -1]], vec![1, 1, 1, 1]),
            _ => Err(ZrpError::Dimension(format!("d must be 1 or 2, got {d}"))),
        }
    }

    /// The asymmetric mean-zero walk `p(2) = 1/3`, `p(-1) = 2/3` in `d = 1`.
    pub fn asymmetric() -> Self {
        Self::from_weights(1, vec![[2, 0], [-1, 0]], vec![1, 2]).expect("valid step law")
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn steps(&self) -> &[[i64; 2]] {
        &self.steps
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// `(weights, denominator)` of the exact rational probabilities.
    pub fn rational(&self) -> (&[u64], u64) {
        (&self.weights, self.denominator)
    }

    /// Covariance `sigma_ij = sum_z p(z) z_i z_j`.
    pub fn covariance(&self) -> [[f64; 2]; 2] {
        self.sigma
    }

    pub fn trace(&self) -> f64 {
        (0..self.d).map(|i| self.sigma[i][i]).sum()
    }

    pub fn max_range(&self) -> i64 {
        self.steps.iter().map(|z| z[0].abs().max(z[1].abs())).max().unwrap_or(0)
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [i64; 2] {
        if self.steps.len() == 2 {
            let u: f64 = rng.gen();
            return if u < self.cdf[0] { self.steps[0] } else { self.steps[1] };
        }
        let u: f64 = rng.gen();
        let i = self.cdf.iter().position(|&c| u < c).unwrap_or(self.steps.len() - 1);
        self.steps[i]
    }

    pub fn tag(&self) -> String {
        let parts: Vec<String> = self
            .steps
            .iter()
            .zip(&self.weights)
            .map(|(z, w)| {
                if self.d == 1 {
                    format!("{}:{}/{}", z[0], w, self.denominator)
                } else {
                    format!("({},{}):{}/{}", z[0], z[1], w, self.denominator)
                }
            })
            .collect();
        parts.join(" ")
    }
}
