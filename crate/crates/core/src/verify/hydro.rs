use rayon::prelude::*;

use super::{bootstrap_std_err, mean_std_err, replica_rng};
use crate::error::{invalid, Result, ZrpError};
use crate::measures::{site_pmf, ProductSampler, ProfileSpec};
use crate::pde::{discretize_profile, DensityField, MonitorReport, Solver, SolverSettings};
use crate::process::{
    cylinder_average, default_cylinders, empirical_density_field, Configuration, Cylinder, Simulator, StepDistribution,
    TestFunction,
};
use crate::thermo::ThermoTable;

/// `int G(u) Psi~(rho_t(u)) du` for every pair of cylinder and test function,
/// with `Psi~(rho) = E_{nu_{rho ∧ rho_c}}[Psi]`.
#[derive(Debug, Clone)]
pub struct HydroReference {
    cylinders: Vec<Cylinder>,
    tests: Vec<TestFunction>,
    d: usize,
    reference: Vec<f64>,
}

impl HydroReference {
    pub fn new(t: &ThermoTable, field: &DensityField, cylinders: Vec<Cylinder>, tests: Vec<TestFunction>) -> Result<Self> {
        if let Some(c) = cylinders.iter().find(|c| !c.is_single_site()) {
            return Err(invalid(format!("cylinder {} depends on more than one site; only single-site cylinders are supported", c.name())));
        }
        let pmfs = field
            .values()
            .iter()
            .map(|&v| site_pmf(t, v.clamp(0.0, t.rho_c()), 1e-12))
            .collect::<Result<Vec<_>>>()?;
        let mut reference = Vec::with_capacity(cylinders.len() * tests.len());
        for c in &cylinders {
            let tilde: Vec<f64> = pmfs.iter().map(|q| q.expect(|k| c.eval(&[k]))).collect();
            for g in &tests {
                let w = field.h().powi(field.d() as i32);
                let integral: f64 = tilde.iter().enumerate().map(|(i, v)| g.eval(field.node(i)) * v).sum::<f64>() * w;
                reference.push(integral);
            }
        }
        Ok(Self { cylinders, tests, d: field.d(), reference })
    }

    pub fn pairs(&self) -> usize {
        self.reference.len()
    }

    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    pub fn labels(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.pairs());
        for c in &self.cylinders {
            for g in &self.tests {
                out.push(format!("{} x {}", c.name(), g.name()));
            }
        }
        out
    }

    /// Empirical `(1/N^d) sum_x G(x/N) tau_x Psi` in the order of [`reference`](Self::reference).
    pub fn empirical(&self, config: &Configuration) -> Result<Vec<f64>> {
        if config.d() != self.d {
            return Err(ZrpError::Dimension(format!("configuration has d={}, PDE mesh has d={}", config.d(), self.d)));
        }
        let mut out = Vec::with_capacity(self.pairs());
        for c in &self.cylinders {
            for g in &self.tests {
                out.push(cylinder_average(config, c, |u| g.eval(u)));
            }
        }
        Ok(out)
    }

    /// `max |empirical - reference|` over all pairs.
    pub fn deviation(&self, empirical: &[f64]) -> f64 {
        empirical.iter().zip(&self.reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Deviation of one configuration from the hydrodynamic prediction.
pub fn hydro_deviation(
    t: &ThermoTable,
    field: &DensityField,
    config: &Configuration,
    cylinders: Vec<Cylinder>,
    tests: Vec<TestFunction>,
) -> Result<f64> {
    let r = HydroReference::new(t, field, cylinders, tests)?;
    Ok(r.deviation(&r.empirical(config)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HydroSettings {
    pub sizes: Vec<usize>,
    pub d: usize,
    pub t_final: f64,
    /// Time at which the strict rise of the PDE minimum is checked.
    pub t_early: f64,
    pub replicas: usize,
    /// Mesh on which simulation and PDE are compared in L1.
    pub compare_mesh: usize,
    pub pde_mesh: usize,
    pub eps: f64,
    pub extension_order: usize,
    pub bootstrap: usize,
    pub seed: u64,
    /// Multiplier on the step covariance in the PDE. Under the generator
    /// `sum g(eta_x) p(y - x)` run for time `t N^2` the mean density obeys
    /// `d_t rho = (1/2) Delta_Sigma Phi(rho)`, hence the default `0.5`.
    pub sigma_scale: f64,
}

impl HydroSettings {
    pub fn new(sizes: Vec<usize>, t_final: f64, replicas: usize, seed: u64) -> Self {
        Self {
            sizes,
            d: 1,
            t_final,
            t_early: 0.01,
            replicas,
            compare_mesh: 64,
            pde_mesh: 256,
            eps: 0.1,
            extension_order: 2,
            bootstrap: 200,
            seed,
            sigma_scale: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HydroPoint {
    pub n: usize,
    /// L1 distance between the replica-averaged empirical density and the PDE.
    pub l1: f64,
    /// Standard error of `l1` as a mean over the comparison nodes.
    pub l1_std_err: f64,
    /// Hydrodynamic deviation of the replica-averaged cylinder averages.
    pub deviation: f64,
    pub deviation_std_err: f64,
    pub mean_events: f64,
}

#[derive(Debug, Clone)]
pub struct HydroOutcome {
    pub points: Vec<HydroPoint>,
    pub pde: DensityField,
    pub monitor: MonitorReport,
    pub min_initial: f64,
    pub min_early: f64,
}

impl HydroOutcome {
    pub fn monitor_accepted(&self) -> bool {
        self.monitor.accepted()
    }
}

/// Simulate from the local equilibrium of `profile` and compare with the
/// solution of `d_t rho = Delta_Sigma Phi~(rho)`.
pub fn pde_vs_simulation(
    t: &ThermoTable,
    p: &StepDistribution,
    profile: &ProfileSpec,
    s: &HydroSettings,
) -> Result<HydroOutcome> {
    if s.d != p.d() {
        return Err(invalid(format!("step distribution has d={}, lattice d={}", p.d(), s.d)));
    }
    if s.replicas < 2 {
        return Err(invalid("need at least two replicas"));
    }
    if !(s.t_early > 0.0 && s.t_early <= s.t_final) {
        return Err(invalid(format!("need 0 < t_early <= t_final, got {} and {}", s.t_early, s.t_final)));
    }
    if !s.pde_mesh.is_multiple_of(s.compare_mesh) {
        return Err(invalid(format!("compare mesh {} must divide PDE mesh {}", s.compare_mesh, s.pde_mesh)));
    }
    let ext = t.parabolic_extension(s.eps, s.extension_order)?;
    if !(s.sigma_scale > 0.0) {
        return Err(invalid(format!("sigma scale must be > 0, got {}", s.sigma_scale)));
    }
    let sigma = p.covariance().map(|row| row.map(|v| v * s.sigma_scale));
    let mut solver = Solver::new(&ext, SolverSettings::new(sigma))?;
    let initial = discretize_profile(profile, s.pde_mesh, s.d, t.rho_c())?;
    let (early, mut monitor) = solver.solve_to_time(&initial, s.t_early)?;
    let (pde, rest) = solver.solve_to_time(&early, s.t_final)?;
    monitor.steps += rest.steps;
    monitor.max.extend_from_slice(&rest.max[1..]);
    monitor.min.extend_from_slice(&rest.min[1..]);
    monitor.violations.extend(rest.violations.iter().map(|v| v + monitor.steps - rest.steps));
    monitor.guard_hits += rest.guard_hits;
    if monitor.guard_hits > 0 {
        return Err(invalid(format!("PDE left the core interval at {} node evaluations", monitor.guard_hits)));
    }
    let coarse_pde = pde.restrict(s.pde_mesh / s.compare_mesh)?;
    let reference = HydroReference::new(t, &pde, default_cylinders(t.rate()), TestFunction::defaults(s.d))?;

    let mut points = Vec::with_capacity(s.sizes.len());
    for &n in &s.sizes {
        if !n.is_multiple_of(s.compare_mesh) {
            return Err(invalid(format!("compare mesh {} must divide N={n}", s.compare_mesh)));
        }
        let sampler = ProductSampler::new(t, profile, n, s.d, 1e-12)?;
        let runs: Vec<(DensityField, Vec<f64>, u64)> = (0..s.replicas)
            .into_par_iter()
            .map(|i| {
                let mut rng = replica_rng(s.seed, i);
                let mut sim = Simulator::new(t.rate().clone(), p.clone(), sampler.sample(&mut rng))?;
                let summary = sim.run_diffusive(s.t_final, &mut rng)?;
                let field = empirical_density_field(sim.config(), s.compare_mesh)?;
                Ok((field, reference.empirical(sim.config())?, summary.events))
            })
            .collect::<Result<_>>()?;

        let fields: Vec<DensityField> = runs.iter().map(|r| r.0.clone()).collect();
        let avg = DensityField::average(&fields)?;
        let node_err: Vec<f64> = avg.values().iter().zip(coarse_pde.values()).map(|(a, b)| (a - b).abs()).collect();
        // node errors are independent under local equilibrium; the bootstrap
        // overstates the spread of |.| near zero
        let (l1, l1_std_err) = mean_std_err(&node_err);
        let dev_of = |idx: &[usize]| -> f64 {
            let mut mean = vec![0.0; reference.pairs()];
            for &i in idx {
                for (m, v) in mean.iter_mut().zip(&runs[i].1) {
                    *m += v;
                }
            }
            mean.iter_mut().for_each(|m| *m /= idx.len() as f64);
            reference.deviation(&mean)
        };
        let all: Vec<usize> = (0..s.replicas).collect();
        let boot_seed = s.seed ^ 0x5eed_b007 ^ n as u64;
        points.push(HydroPoint {
            n,
            l1,
            l1_std_err,
            deviation: dev_of(&all),
            deviation_std_err: bootstrap_std_err(s.replicas, s.bootstrap, boot_seed, dev_of),
            mean_events: runs.iter().map(|r| r.2 as f64).sum::<f64>() / s.replicas as f64,
        });
    }
    Ok(HydroOutcome { points, pde, monitor, min_initial: initial.min(), min_early: early.min() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rate::LocalJumpRate;
    use crate::thermo::ThermoSettings;

    fn t0() -> ThermoTable {
        ThermoTable::new(LocalJumpRate::evans(0.0).unwrap(), ThermoSettings::default()).unwrap()
    }

    #[test]
    fn reference_for_constant_profile() {
        let t = t0();
        let field = DensityField::new(1, 16, vec![1.0; 16], 0.0).unwrap();
        let r = HydroReference::new(&t, &field, default_cylinders(t.rate()), TestFunction::defaults(1)).unwrap();
        // geometric law with phi = 1/2: P(eta = 0) = 1/2, E g = Phi = 1/2
        assert!((r.reference()[0] - 0.5).abs() < 1e-9);
        assert!(r.reference()[1].abs() < 1e-12);
        assert!((r.reference()[r.pairs() - 3] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn mismatched_dimension_is_rejected() {
        let t = t0();
        let field = DensityField::new(2, 8, vec![0.5; 64], 0.0).unwrap();
        let c = Configuration::constant(1, 8, 1).unwrap();
        let err = hydro_deviation(&t, &field, &c, default_cylinders(t.rate()), TestFunction::defaults(2));
        assert!(matches!(err, Err(ZrpError::Dimension(_))));
    }

    #[test]
    fn multi_site_cylinder_is_rejected() {
        let t = t0();
        let field = DensityField::new(1, 8, vec![0.5; 8], 0.0).unwrap();
        let pair = Cylinder::new("eta(0) eta(1)", vec![[0, 0], [1, 0]], 1.0, |v| (v[0] * v[1]).min(1) as f64);
        assert!(HydroReference::new(&t, &field, vec![pair], vec![TestFunction::One]).is_err());
    }

    #[test]
    fn small_run_is_consistent() {
        let t = ThermoTable::new(LocalJumpRate::evans(3.0).unwrap(), ThermoSettings::default()).unwrap();
        let p = StepDistribution::nearest_neighbor(1).unwrap();
        let profile = ProfileSpec::sinusoidal(0.5, 0.3, 0.1).unwrap();
        let mut s = HydroSettings::new(vec![32], 0.02, 8, 3);
        s.compare_mesh = 16;
        s.pde_mesh = 64;
        s.t_early = 0.01;
        s.bootstrap = 50;
        let out = pde_vs_simulation(&t, &p, &profile, &s).unwrap();
        assert!(out.monitor_accepted());
        assert!(out.min_early > out.min_initial);
        let pt = out.points[0];
        assert!(pt.l1.is_finite() && pt.l1_std_err > 0.0);
        assert!(pt.mean_events > 0.0);
    }
}
