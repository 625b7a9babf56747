use std::collections::HashMap;

use rand::Rng;

use super::profile::ProfileSpec;
use crate::error::{invalid, Result, ZrpError};
use crate::process::Configuration;
use crate::rate::LocalJumpRate;
use crate::thermo::ThermoTable;

const PMF_CAP: usize = 1_000_000;

/// One-site grand canonical law `phi^k / (Z(phi) g!(k))`, truncated where the
/// remaining mass is below a certified bound.
#[derive(Debug, Clone)]
pub struct SitePmf {
    rho: f64,
    phi: f64,
    ln_z: f64,
    g: LocalJumpRate,
    probs: Vec<f64>,
    cdf: Vec<f64>,
    tail_bound: f64,
}

/// Grand canonical one-site law at density `rho`, `0 <= rho <= rho_c`.
pub fn site_pmf(t: &ThermoTable, rho: f64, tol: f64) -> Result<SitePmf> {
    if !(rho >= 0.0 && rho <= t.rho_c()) {
        return Err(invalid(format!("density must lie in [0, rho_c] = [0, {}], got {rho}", t.rho_c())));
    }
    let g = t.rate().clone();
    if rho == 0.0 {
        return Ok(SitePmf { rho, phi: 0.0, ln_z: 0.0, g, probs: vec![1.0], cdf: vec![1.0], tail_bound: 0.0 });
    }
    let state = t.state(rho)?;
    let (phi, ln_z) = (state.phi, state.ln_z);
    let critical = phi >= t.phi_c();
    let mut probs = Vec::new();
    let mut p = (-ln_z).exp();
    let mut sum = 0.0;
    let mut k = 0usize;
    let tail_bound = loop {
        probs.push(p);
        sum += p;
        if k >= 1 && !critical {
            let q = phi / g.tail_infimum(k as u64);
            if q < 1.0 {
                let bound = p * q / (1.0 - q);
                if bound <= tol {
                    break bound;
                }
            }
        }
        if critical && 1.0 - sum <= tol {
            break (1.0 - sum).max(0.0);
        }
        if k + 1 >= PMF_CAP {
            if critical {
                break (1.0 - sum).max(0.0);
            }
            return Err(ZrpError::NotCertified { phi, terms: k + 1, tail_bound: f64::INFINITY });
        }
        k += 1;
        p *= phi / g.eval(k as u64);
    };
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for &q in &probs {
        acc += q;
        cdf.push(acc);
    }
    Ok(SitePmf { rho, phi, ln_z, g, probs, cdf, tail_bound })
}

impl SitePmf {
    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Stored probabilities for `k = 0..len`.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// Exact `P(k)`, also beyond the stored range.
    pub fn prob(&self, k: usize) -> f64 {
        if let Some(&p) = self.probs.get(k) {
            return p;
        }
        if self.phi == 0.0 {
            return 0.0;
        }
        (k as f64 * self.phi.ln() - self.g.ln_factorial_rate(k as u64) - self.ln_z).exp()
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.probs.iter().enumerate().map(|(k, p)| (k as f64 - m).powi(2) * p).sum()
    }

    /// `E[f(eta)]` over the stored range.
    pub fn expect(&self, f: impl Fn(u32) -> f64) -> f64 {
        self.probs.iter().enumerate().map(|(k, p)| p * f(k as u32)).sum()
    }

    /// Inverse-CDF draw. The tail beyond the stored range maps to its first index.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.gen();
        self.cdf.partition_point(|&c| c <= u) as u32
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W, header: &[String]) -> Result<()> {
        let mut out = out;
        for line in header {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "# rho={} phi={} tail_bound={:e}", self.rho, self.phi, self.tail_bound)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "probability"])?;
        for (k, p) in self.probs.iter().enumerate() {
            w.write_record([k.to_string(), format!("{p:e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Product measure with slowly varying parameter: site `x` has law
/// `nu^1_{rho0(x/N)}`. One pmf is built per distinct profile value.
#[derive(Debug, Clone)]
pub struct ProductSampler {
    d: usize,
    side: usize,
    site_law: Vec<usize>,
    pmfs: Vec<SitePmf>,
}

impl ProductSampler {
    pub fn new(t: &ThermoTable, profile: &ProfileSpec, side: usize, d: usize, tol: f64) -> Result<Self> {
        if side < 2 {
            return Err(invalid(format!("N must be >= 2, got {side}")));
        }
        profile.validate(t.rho_c())?;
        let probe = Configuration::zeros(d, side)?;
        let mut index: HashMap<u64, usize> = HashMap::new();
        let mut pmfs = Vec::new();
        let mut site_law = Vec::with_capacity(probe.volume());
        for x in 0..probe.volume() {
            let rho = profile.eval(probe.position(x), d);
            let key = rho.to_bits();
            let i = match index.get(&key) {
                Some(&i) => i,
                None => {
                    pmfs.push(site_pmf(t, rho, tol)?);
                    index.insert(key, pmfs.len() - 1);
                    pmfs.len() - 1
                }
            };
            site_law.push(i);
        }
        Ok(Self { d, side, site_law, pmfs })
    }

    pub fn distinct_laws(&self) -> usize {
        self.pmfs.len()
    }

    pub fn law_at(&self, x: usize) -> &SitePmf {
        &self.pmfs[self.site_law[x]]
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Configuration {
        let eta = self.site_law.iter().map(|&i| self.pmfs[i].sample(rng)).collect();
        Configuration::new(self.d, self.side, eta).expect("shape fixed at construction")
    }
}

pub fn sample_product<R: Rng + ?Sized>(
    t: &ThermoTable,
    profile: &ProfileSpec,
    side: usize,
    d: usize,
    rng: &mut R,
) -> Result<Configuration> {
    Ok(ProductSampler::new(t, profile, side, d, 1e-12)?.sample(rng))
}
