//! Statistical checks comparing the simulator, the measures and the PDE.
//!
//! Replica `i` of an experiment with base seed `s` uses `ChaCha8(s ^ i)`.

mod eoe;
mod hydro;
mod one_block;
mod ratio;
mod report;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use eoe::{eoe_scan, EoePoint};
pub use hydro::{hydro_deviation, pde_vs_simulation, HydroOutcome, HydroPoint, HydroReference, HydroSettings};
pub use one_block::{one_block_experiment, one_block_statistic, OneBlockPoint, OneBlockSettings, PhiCache};
pub use ratio::{ratio_grid, taylor_gap_ratio_scan, RatioScan};
pub use report::{Criterion, ExperimentReport, Statistic};

pub fn replica_rng(base: u64, i: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(base ^ i as u64)
}

/// Sample mean and standard error of the mean.
pub fn mean_std_err(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Bootstrap standard error of a statistic of `n` replicas.
///
/// `stat` receives resampled replica indices (with repetition).
pub fn bootstrap_std_err(n: usize, resamples: usize, seed: u64, mut stat: impl FnMut(&[usize]) -> f64) -> f64 {
    if n < 2 || resamples < 2 {
        return f64::INFINITY;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all: Vec<usize> = (0..n).collect();
    let mut idx = vec![0usize; n];
    let vals: Vec<f64> = (0..resamples)
        .map(|_| {
            for slot in idx.iter_mut() {
                *slot = *all.choose(&mut rng).unwrap_or(&0);
            }
            stat(&idx)
        })
        .collect();
    let (_, se) = mean_std_err(&vals);
    se * (resamples as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn mean_and_error() {
        let (m, se) = mean_std_err(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bootstrap_matches_analytic_error_of_mean() {
        let xs: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64).collect();
        let (_, se) = mean_std_err(&xs);
        let bs = bootstrap_std_err(xs.len(), 2000, 7, |idx| idx.iter().map(|&i| xs[i]).sum::<f64>() / idx.len() as f64);
        assert!((bs / se - 1.0).abs() < 0.1, "{bs} vs {se}");
    }

    #[test]
    fn replica_seeds_differ() {
        let a: u64 = replica_rng(5, 0).gen();
        let b: u64 = replica_rng(5, 1).gen();
        let c: u64 = replica_rng(5, 0).gen();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }
}
