//! Summation of the partition function and its derivatives.
//!
//! For a fugacity `phi` we accumulate the Taylor coefficients
//! `c_j = Z^(j)(phi) / j! = sum_k C(k, j) phi^(k - j) / g!(k)`, `j < W`. All
//! terms are positive, so there is no cancellation. Terms are carried with a
//! running scale so that `phi^k / g!(k)` never overflows.

use crate::error::{Result, ZrpError};
use crate::rate::LocalJumpRate;

/// How often (in terms) the tail certificate is re-evaluated.
const CHECK_EVERY: usize = 16;
const RESCALE_ABOVE: f64 = 1e200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumStatus {
    /// Geometric tail bound below tolerance.
    Certified,
    /// Evaluated at the radius itself; the tail was estimated by Aitken
    /// extrapolation of partial sums at `K/4`, `K/2`, `K`.
    Extrapolated,
}

#[derive(Debug, Clone)]
pub struct Coefficients {
    /// `c_j * exp(-ln_scale)`; `+inf` for coefficients that diverge.
    scaled: Vec<f64>,
    ln_scale: f64,
    pub terms: usize,
    /// Bound (certified) or estimate (extrapolated) of the neglected tail, relative to `c_j`.
    pub rel_tail: Vec<f64>,
    pub status: SumStatus,
}

impl Coefficients {
    /// `Z^(j)(phi) / j!`.
    pub fn value(&self, j: usize) -> f64 {
        if self.scaled[j].is_infinite() {
            return f64::INFINITY;
        }
        (self.scaled[j].ln() + self.ln_scale).exp()
    }

    /// `ln(Z^(j)(phi) / j!)`.
    pub fn ln_value(&self, j: usize) -> f64 {
        self.scaled[j].ln() + self.ln_scale
    }

    /// `c_i / c_j`, immune to the common scale.
    pub fn ratio(&self, i: usize, j: usize) -> f64 {
        self.scaled[i] / self.scaled[j]
    }

    pub fn len(&self) -> usize {
        self.scaled.len()
    }

    pub fn is_finite(&self, j: usize) -> bool {
        self.scaled[j].is_finite()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SeriesOptions {
    pub tol: f64,
    pub k_max: usize,
}

/// Sum the first `order` Taylor coefficients of `Z` at `phi`.
///
/// `phi_c` is the radius of convergence. `phi > phi_c` is an error; at
/// `phi = phi_c` coefficients known to diverge are returned as `+inf`.
pub fn taylor_coefficients(
    g: &LocalJumpRate,
    phi: f64,
    phi_c: f64,
    order: usize,
    opts: SeriesOptions,
) -> Result<Coefficients> {
    assert!(order >= 1);
    if !(phi >= 0.0) {
        return Err(ZrpError::InvalidParameter(format!("fugacity must be >= 0, got {phi}")));
    }
    if phi > phi_c * (1.0 + 1e-14) {
        return Err(ZrpError::Divergent { phi, phi_c });
    }
    if phi == 0.0 {
        // c_j = 1 / g!(j)
        let scaled: Vec<f64> = (0..order).map(|j| 1.0 / g.factorial_rate(j as u64)).collect();
        return Ok(Coefficients {
            scaled,
            ln_scale: 0.0,
            terms: order,
            rel_tail: vec![0.0; order],
            status: SumStatus::Certified,
        });
    }
    let critical = phi >= phi_c;
    let diverges: Vec<bool> = (0..order)
        .map(|j| critical && !g.derivative_finite_at_radius(j))
        .collect();
    if diverges[0] {
        return Ok(Coefficients {
            scaled: vec![f64::INFINITY; order],
            ln_scale: 0.0,
            terms: 0,
            rel_tail: vec![f64::INFINITY; order],
            status: SumStatus::Extrapolated,
        });
    }

    let inv_phi = 1.0 / phi;
    // term_j(k) = C(k, j) phi^(k - j) / g!(k) = C(k, j) phi^-j t_k
    let mut t = 1.0; // t_k * exp(-ln_scale)
    let mut ln_scale = 0.0;
    let mut sums = vec![0.0; order];
    let mut last_terms = vec![0.0; order];
    let checkpoints = [opts.k_max / 4, opts.k_max / 2];
    let mut saved: Vec<Vec<f64>> = Vec::with_capacity(2);
    let mut k: usize = 0;
    loop {
        // binomial C(k, j) phi^-j built up incrementally
        let mut w = 1.0;
        for j in 0..order {
            if j > k {
                last_terms[j] = 0.0;
                continue;
            }
            let term = w * t;
            sums[j] += term;
            last_terms[j] = term;
            w *= (k - j) as f64 / (j + 1) as f64 * inv_phi;
        }
        if checkpoints.contains(&k) && saved.len() < 2 {
            saved.push(sums.clone());
        }
        if !critical && k >= order && k % CHECK_EVERY == 0 {
            if let Some(rel) = geometric_tail(g, phi, k, &sums, &last_terms) {
                if rel.iter().all(|r| *r <= opts.tol) {
                    return Ok(Coefficients {
                        scaled: sums,
                        ln_scale,
                        terms: k + 1,
                        rel_tail: rel,
                        status: SumStatus::Certified,
                    });
                }
            }
        }
        if k >= opts.k_max {
            break;
        }
        k += 1;
        t *= phi / g.eval(k as u64);
        if t > RESCALE_ABOVE {
            let s = t.ln();
            t = 1.0;
            ln_scale += s;
            let f = (-s).exp();
            for v in sums.iter_mut() {
                *v *= f;
            }
            for sv in saved.iter_mut() {
                for v in sv.iter_mut() {
                    *v *= f;
                }
            }
        }
    }

    // Term cap reached.
    if !critical {
        if let Some(rel) = geometric_tail(g, phi, k, &sums, &last_terms) {
            if rel.iter().all(|r| *r <= opts.tol) {
                return Ok(Coefficients {
                    scaled: sums,
                    ln_scale,
                    terms: k + 1,
                    rel_tail: rel,
                    status: SumStatus::Certified,
                });
            }
        }
    }
    if !critical || saved.len() < 2 {
        let tail_bound = geometric_tail(g, phi, k, &sums, &last_terms)
            .map_or(f64::INFINITY, |r| r.into_iter().fold(0.0, f64::max));
        return Err(ZrpError::NotCertified { phi, terms: k + 1, tail_bound });
    }
    let mut scaled = sums.clone();
    let mut rel_tail = vec![0.0; order];
    for j in 0..order {
        if diverges[j] {
            scaled[j] = f64::INFINITY;
            rel_tail[j] = f64::INFINITY;
            continue;
        }
        let (s1, s2, s3) = (saved[0][j], saved[1][j], sums[j]);
        let d1 = s2 - s1;
        let d2 = s3 - s2;
        let correction = if d1 > d2 && d2 > 0.0 { d2 * d2 / (d1 - d2) } else { 0.0 };
        scaled[j] = s3 + correction;
        rel_tail[j] = correction / scaled[j];
    }
    Ok(Coefficients { scaled, ln_scale, terms: k + 1, rel_tail, status: SumStatus::Extrapolated })
}

/// Relative tail bounds after term `k`, or `None` if the ratio bound is not < 1.
fn geometric_tail(
    g: &LocalJumpRate,
    phi: f64,
    k: usize,
    sums: &[f64],
    last_terms: &[f64],
) -> Option<Vec<f64>> {
    let q = phi / g.tail_infimum(k as u64);
    let mut out = Vec::with_capacity(sums.len());
    for j in 0..sums.len() {
        if k < j + 1 || sums[j] <= 0.0 {
            return None;
        }
        // C(i+1, j) / C(i, j) = (i+1)/(i+1-j) is decreasing in i
        let qj = q * (k as f64 + 1.0) / (k as f64 + 1.0 - j as f64);
        if qj >= 1.0 {
            return None;
        }
        out.push(last_terms[j] * qj / (1.0 - qj) / sums[j]);
    }
    Some(out)
}
