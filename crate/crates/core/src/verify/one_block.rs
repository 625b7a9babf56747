use std::collections::HashMap;

use rayon::prelude::*;

use super::{mean_std_err, replica_rng};
use crate::error::{invalid, Result};
use crate::measures::{ProductSampler, ProfileSpec};
use crate::process::{block_sums, Configuration, Simulator, StepDistribution};
use crate::thermo::ThermoTable;

/// `Phi(sum / w ∧ rho_c)` memoised on the window sum.
#[derive(Debug)]
pub struct PhiCache<'a> {
    t: &'a ThermoTable,
    values: HashMap<(u64, u64), f64>,
}

impl<'a> PhiCache<'a> {
    pub fn new(t: &'a ThermoTable) -> Self {
        Self { t, values: HashMap::new() }
    }

    pub fn get(&mut self, window: u64, sum: u64) -> Result<f64> {
        if let Some(&v) = self.values.get(&(window, sum)) {
            return Ok(v);
        }
        let rho = (sum as f64 / window as f64).min(self.t.rho_c());
        let v = self.t.mean_jump_rate(rho)?;
        self.values.insert((window, sum), v);
        Ok(v)
    }
}

/// `int_0^T (1/N^d) sum_x H(s, x/N) [g(eta_s(x)) - Phi(eta_s^l(x) ∧ rho_c)] ds`
/// by the trapezoid rule over the snapshot times.
pub fn one_block_statistic(
    snapshots: &[(f64, Configuration)],
    ell: usize,
    h: &dyn Fn(f64, [f64; 2]) -> f64,
    cache: &mut PhiCache<'_>,
) -> Result<f64> {
    if snapshots.len() < 2 {
        return Err(invalid("need at least two snapshots"));
    }
    let g = cache.t.rate().clone();
    let mut integrand = Vec::with_capacity(snapshots.len());
    for (s, config) in snapshots {
        let d = config.d();
        let window = (2 * ell as u64 + 1).pow(d as u32);
        let sums = block_sums(config, ell)?;
        let mut acc = 0.0;
        for (x, &sum) in sums.iter().enumerate() {
            let w = h(*s, config.position(x));
            if w != 0.0 {
                acc += w * (g.eval(config.get(x) as u64) - cache.get(window, sum)?);
            }
        }
        integrand.push(acc / config.volume() as f64);
    }
    Ok(snapshots
        .windows(2)
        .zip(integrand.windows(2))
        .map(|(s, f)| 0.5 * (s[1].0 - s[0].0) * (f[0] + f[1]))
        .sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneBlockSettings {
    pub n: usize,
    pub d: usize,
    pub t_final: f64,
    pub snapshots: usize,
    pub radii: Vec<usize>,
    pub replicas: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneBlockPoint {
    pub ell: usize,
    /// Replica mean of the absolute statistic.
    pub value: f64,
    pub std_err: f64,
}

/// Replica average of `|one_block_statistic|` with `H ≡ 1`, starting from the
/// product measure with the given profile.
pub fn one_block_experiment(
    t: &ThermoTable,
    p: &StepDistribution,
    profile: &ProfileSpec,
    s: &OneBlockSettings,
) -> Result<Vec<OneBlockPoint>> {
    if s.snapshots < 21 {
        return Err(invalid(format!("one-block needs >= 21 snapshots, got {}", s.snapshots)));
    }
    if s.replicas < 2 || !(s.t_final > 0.0) {
        return Err(invalid("one-block needs >= 2 replicas and a positive horizon"));
    }
    if s.d != p.d() {
        return Err(invalid(format!("step distribution has d={}, lattice d={}", p.d(), s.d)));
    }
    let sampler = ProductSampler::new(t, profile, s.n, s.d, 1e-12)?;
    let times: Vec<f64> = (0..s.snapshots).map(|k| s.t_final * k as f64 / (s.snapshots - 1) as f64).collect();
    let h = |_: f64, _: [f64; 2]| 1.0;
    let per_replica: Vec<Vec<f64>> = (0..s.replicas)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(s.seed, i);
            let mut sim = Simulator::new(t.rate().clone(), p.clone(), sampler.sample(&mut rng))?;
            let mut snaps = Vec::with_capacity(times.len());
            for &tk in &times {
                sim.run_diffusive(tk, &mut rng)?;
                snaps.push((tk, sim.config().clone()));
            }
            let mut cache = PhiCache::new(t);
            s.radii.iter().map(|&ell| one_block_statistic(&snaps, ell, &h, &mut cache).map(f64::abs)).collect()
        })
        .collect::<Result<_>>()?;
    Ok(s
        .radii
        .iter()
        .enumerate()
        .map(|(j, &ell)| {
            let xs: Vec<f64> = per_replica.iter().map(|r| r[j]).collect();
            let (value, std_err) = mean_std_err(&xs);
            OneBlockPoint { ell, value, std_err }
        })
        .collect())
}
