use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use zrp_core::measures::{canonical_table, relative_entropy_discrete};
use zrp_core::pde::{DensityField, Solver, SolverSettings};
use zrp_core::process::{block_averages, Configuration, Simulator, StepDistribution, SumTree};
use zrp_core::thermo::LinearNonlinearity;
use zrp_core::LocalJumpRate;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn simulation_conserves_particles(
        eta in prop::collection::vec(0u32..6, 16),
        b in 0.0f64..4.0,
        asym in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let p = if asym { StepDistribution::asymmetric() } else { StepDistribution::nearest_neighbor(1).unwrap() };
        let c = Configuration::new(1, 16, eta).unwrap();
        let total = c.total();
        let mut sim = Simulator::new(LocalJumpRate::evans(b).unwrap(), p, c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..500 {
            if sim.step_event(&mut rng).unwrap().is_none() {
                break;
            }
        }
        prop_assert_eq!(sim.config().total(), total);
        let rel = (sim.total_rate() - sim.exact_total_rate()).abs() / sim.exact_total_rate().max(1.0);
        prop_assert!(rel < 1e-9);
    }

    #[test]
    fn sum_tree_tracks_updates(
        init in prop::collection::vec(0.0f64..10.0, 1..40),
        updates in prop::collection::vec((0usize..40, 0.0f64..10.0), 0..60),
    ) {
        let mut w = init.clone();
        let mut tree = SumTree::new(&init);
        for (i, v) in updates {
            let i = i % w.len();
            w[i] = v;
            tree.set(i, v);
        }
        let exact: f64 = w.iter().sum();
        prop_assert!((tree.total() - exact).abs() <= 1e-9 * exact.max(1.0));
        for (i, v) in w.iter().enumerate() {
            prop_assert_eq!(tree.weight(i), *v);
        }
    }

    #[test]
    fn block_averages_preserve_mass(eta in prop::collection::vec(0u32..9, 64), ell in 0usize..10) {
        let c = Configuration::new(2, 8, eta).unwrap();
        prop_assume!(2 * ell < 8);
        let avg = block_averages(&c, ell).unwrap();
        let mass: f64 = avg.iter().sum();
        prop_assert!((mass - c.total() as f64).abs() < 1e-9);
    }

    #[test]
    fn canonical_marginal_is_a_distribution(n in 2usize..12, k in 0usize..24, b in 0.0f64..5.0) {
        let g = LocalJumpRate::evans(b).unwrap();
        let m = canonical_table(&g, n, k).unwrap().marginal(1).unwrap();
        let s: f64 = m.probs.iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
        prop_assert!((m.mean_per_site() - k as f64 / n as f64).abs() < 1e-12);
        let h = relative_entropy_discrete(&m.probs, &m.probs).unwrap();
        prop_assert!(h.value.abs() < 1e-12);
    }

    #[test]
    fn heat_step_keeps_mass_and_bounds(values in prop::collection::vec(0.0f64..2.0, 16), s in 0.5f64..2.0) {
        let id = LinearNonlinearity { slope: 1.0 };
        let f = DensityField::new(1, 16, values, 0.0).unwrap();
        let mut solver = Solver::new(&id, SolverSettings::scalar(s)).unwrap();
        let (out, report) = solver.solve_to_time(&f, 0.002).unwrap();
        prop_assert!((out.mass() - f.mass()).abs() < 1e-12);
        prop_assert!(report.accepted());
        prop_assert!(out.max() <= f.max() + 1e-12 && out.min() >= f.min() - 1e-12);
    }
}
