//! Explicit finite differences for `d_t rho = Delta_Sigma F(rho)` on the torus.

use super::field::DensityField;
use crate::error::{invalid, Result, ZrpError};
use crate::thermo::Nonlinearity;

const EXTREMA_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub sigma: [[f64; 2]; 2],
    pub cfl_safety: f64,
    /// Fixed time step; defaults to the CFL bound.
    pub dt: Option<f64>,
    pub monitor_extrema: bool,
    /// Reject steps above the CFL bound. Off only for harness self-tests.
    pub enforce_cfl: bool,
}

impl SolverSettings {
    pub fn new(sigma: [[f64; 2]; 2]) -> Self {
        Self { sigma, cfl_safety: 0.9, dt: None, monitor_extrema: true, enforce_cfl: true }
    }

    /// `sigma = s * I` in one dimension.
    pub fn scalar(s: f64) -> Self {
        Self::new([[s, 0.0], [0.0, 0.0]])
    }
}

/// Per-step extrema record of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MonitorReport {
    pub steps: usize,
    pub max: Vec<f64>,
    pub min: Vec<f64>,
    /// Steps where the max grew or the min fell by more than the tolerance.
    pub violations: Vec<usize>,
    /// First step with a strict increase of the minimum.
    pub first_min_increase: Option<usize>,
    /// Node evaluations outside the core interval of the nonlinearity.
    pub guard_hits: u64,
}

impl MonitorReport {
    fn start(field: &DensityField) -> Self {
        Self { max: vec![field.max()], min: vec![field.min()], ..Self::default() }
    }

    fn record(&mut self, field: &DensityField) {
        let (mx, mn) = (field.max(), field.min());
        let (pmx, pmn) = (*self.max.last().unwrap(), *self.min.last().unwrap());
        self.steps += 1;
        if mx > pmx + EXTREMA_TOL || mn < pmn - EXTREMA_TOL {
            self.violations.push(self.steps);
        }
        if self.first_min_increase.is_none() && mn > pmn {
            self.first_min_increase = Some(self.steps);
        }
        self.max.push(mx);
        self.min.push(mn);
    }

    pub fn accepted(&self) -> bool {
        self.violations.is_empty()
    }

    /// Error on the first violation.
    pub fn check(&self) -> Result<()> {
        match self.violations.first() {
            None => Ok(()),
            Some(&step) => Err(invalid(format!("maximum principle violated at step {step}"))),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "steps {}\nmax {:.15e} -> {:.15e}\nmin {:.15e} -> {:.15e}\nviolations {}\nguard_hits {}\n",
            self.steps,
            self.max.first().unwrap_or(&f64::NAN),
            self.max.last().unwrap_or(&f64::NAN),
            self.min.first().unwrap_or(&f64::NAN),
            self.min.last().unwrap_or(&f64::NAN),
            self.violations.len(),
            self.guard_hits
        );
        if let Some(step) = self.first_min_increase {
            s.push_str(&format!("first_min_increase {step}\n"));
        }
        if let Some(step) = self.violations.first() {
            s.push_str(&format!("first_violation {step}\n"));
        }
        s
    }
}

/// Check a stored trajectory for the discrete maximum principle.
pub fn extrema_monitor(trajectory: &[DensityField]) -> Result<MonitorReport> {
    if trajectory.len() < 2 {
        return Err(invalid("extrema monitor needs at least two snapshots"));
    }
    let mut r = MonitorReport::start(&trajectory[0]);
    for f in &trajectory[1..] {
        r.record(f);
    }
    Ok(r)
}

pub struct Solver<'a> {
    f: &'a dyn Nonlinearity,
    settings: SolverSettings,
    scratch: Vec<f64>,
}

impl<'a> Solver<'a> {
    pub fn new(f: &'a dyn Nonlinearity, settings: SolverSettings) -> Result<Self> {
        let s = settings.sigma;
        let pd1 = s[0][0] > 0.0;
        if !pd1 || (s[0][1] - s[1][0]).abs() > 0.0 {
            return Err(invalid("covariance must be symmetric positive definite"));
        }
        if !(settings.cfl_safety > 0.0 && settings.cfl_safety <= 1.0) {
            return Err(invalid("CFL safety factor must lie in (0, 1]"));
        }
        Ok(Self { f, settings, scratch: Vec::new() })
    }

    fn trace(&self, d: usize) -> f64 {
        (0..d).map(|i| self.settings.sigma[i][i]).sum()
    }

    /// `h^2 / (2 tr(Sigma) sup F')`, without the safety factor.
    pub fn stability_limit(&self, field: &DensityField) -> f64 {
        let h = field.h();
        h * h / (2.0 * self.trace(field.d()) * self.f.slope_bound())
    }

    pub fn time_step_for(&self, field: &DensityField) -> f64 {
        self.settings.dt.unwrap_or(self.settings.cfl_safety * self.stability_limit(field))
    }

    fn check_dims(&self, field: &DensityField) -> Result<()> {
        let s = self.settings.sigma;
        if field.d() == 2 && !(s[1][1] > 0.0 && s[0][0] * s[1][1] - s[0][1] * s[1][0] > 0.0) {
            return Err(invalid("covariance must be positive definite in d = 2"));
        }
        if field.d() == 1 && (s[0][1] != 0.0 || s[1][1] != 0.0) {
            return Err(ZrpError::Dimension("covariance is 2x2 but the field has d = 1".into()));
        }
        Ok(())
    }

    /// `rho <- rho + dt Delta_Sigma^h F(rho)`. Returns the number of guard hits.
    pub fn time_step(&mut self, field: &mut DensityField, dt: f64) -> Result<u64> {
        self.check_dims(field)?;
        let limit = self.stability_limit(field);
        if self.settings.enforce_cfl && dt > self.settings.cfl_safety * limit * (1.0 + 1e-12) {
            return Err(ZrpError::Cfl { dt, bound: self.settings.cfl_safety * limit });
        }
        let m = field.m();
        let h2 = field.h() * field.h();
        let mut hits = 0;
        self.scratch.clear();
        for &v in field.values() {
            if !self.f.in_core(v) {
                hits += 1;
            }
            self.scratch.push(self.f.eval(v));
        }
        let w = &self.scratch;
        let s = self.settings.sigma;
        let vals = field.values_mut();
        if vals.len() == m {
            let c = dt * s[0][0] / h2;
            for i in 0..m {
                let (l, r) = ((i + m - 1) % m, (i + 1) % m);
                vals[i] += c * (w[r] - 2.0 * w[i] + w[l]);
            }
        } else {
            let (cxx, cyy, cxy) = (dt * s[0][0] / h2, dt * s[1][1] / h2, dt * 2.0 * s[0][1] / (4.0 * h2));
            for j in 0..m {
                let (jd, ju) = ((j + m - 1) % m, (j + 1) % m);
                for i in 0..m {
                    let (il, ir) = ((i + m - 1) % m, (i + 1) % m);
                    let at = |a: usize, b: usize| w[a + m * b];
                    let mut delta = cxx * (at(ir, j) - 2.0 * at(i, j) + at(il, j))
                        + cyy * (at(i, ju) - 2.0 * at(i, j) + at(i, jd));
                    if cxy != 0.0 {
                        delta += cxy * (at(ir, ju) - at(ir, jd) - at(il, ju) + at(il, jd));
                    }
                    vals[i + m * j] += delta;
                }
            }
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(ZrpError::NonFinite { step: 0 });
        }
        let t = field.t() + dt;
        field.set_t(t);
        Ok(hits)
    }

    /// Step to `t_target`, shortening the last step to land on it exactly.
    pub fn solve_to_time(&mut self, field: &DensityField, t_target: f64) -> Result<(DensityField, MonitorReport)> {
        if !(t_target >= field.t()) {
            return Err(invalid(format!("target time {t_target} is before the field time {}", field.t())));
        }
        let dt = self.time_step_for(field);
        let mut cur = field.clone();
        let mut report = MonitorReport::start(&cur);
        let start = cur.t();
        let n_steps = ((t_target - start) / dt - 1e-9).ceil().max(0.0) as usize;
        for k in 0..n_steps {
            let this_dt = if k + 1 == n_steps { t_target - (start + dt * k as f64) } else { dt };
            report.guard_hits += self.time_step(&mut cur, this_dt).map_err(|e| match e {
                ZrpError::NonFinite { .. } => ZrpError::NonFinite { step: k + 1 },
                other => other,
            })?;
            if self.settings.monitor_extrema {
                report.record(&cur);
            } else {
                report.steps += 1;
            }
        }
        cur.set_t(t_target);
        Ok((cur, report))
    }
}

/// `log2(|u_m - u_2m| / |u_2m - u_4m|)` on the coarse nodes, L2 norm.
pub fn self_convergence_order(coarse: &DensityField, mid: &DensityField, fine: &DensityField) -> Result<f64> {
    let mid_c = mid.restrict(mid.m() / coarse.m())?;
    let fine_c = fine.restrict(fine.m() / coarse.m())?;
    let e1 = coarse.l2_distance(&mid_c)?;
    let e2 = mid_c.l2_distance(&fine_c)?;
    Ok((e1 / e2).log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::LinearNonlinearity;
    use std::f64::consts::PI;

    fn cosine(m: usize, c: f64, a: f64) -> DensityField {
        let probe = DensityField::new(1, m, vec![0.0; m], 0.0).unwrap();
        let v = (0..m).map(|i| c + a * (2.0 * PI * probe.node(i)[0]).cos()).collect();
        DensityField::new(1, m, v, 0.0).unwrap()
    }

    fn amplitude(f: &DensityField) -> f64 {
        let m = f.m() as f64;
        let mean = f.values().iter().sum::<f64>() / m;
        2.0 / m * f.values().iter().enumerate().map(|(i, v)| (v - mean) * (2.0 * PI * f.node(i)[0]).cos()).sum::<f64>()
    }

    #[test]
    fn constant_field_is_steady() {
        let id = LinearNonlinearity { slope: 1.0 };
        let mut s = Solver::new(&id, SolverSettings::scalar(1.0)).unwrap();
        let f = DensityField::new(1, 32, vec![0.3; 32], 0.0).unwrap();
        let (out, rep) = s.solve_to_time(&f, 0.01).unwrap();
        assert!(out.values().iter().all(|&v| (v - 0.3).abs() < 1e-15));
        assert!(rep.accepted());
        assert!(rep.max.iter().all(|&m| (m - 0.3).abs() < 1e-15));
    }

    #[test]
    fn heat_mode_decays_at_the_spectral_rate() {
        let id = LinearNonlinearity { slope: 1.0 };
        let mut s = Solver::new(&id, SolverSettings::scalar(1.0)).unwrap();
        let f = cosine(128, 1.0, 0.5);
        let (out, rep) = s.solve_to_time(&f, 0.01).unwrap();
        let ratio = amplitude(&out) / amplitude(&f);
        let exact = (-4.0 * PI * PI * 0.01f64).exp();
        assert!((ratio / exact - 1.0).abs() < 0.01, "{ratio} vs {exact}");
        assert!(rep.accepted());
        assert_eq!(rep.guard_hits, 0);
        assert!((out.t() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn mass_is_conserved() {
        let id = LinearNonlinearity { slope: 1.0 };
        let mut s = Solver::new(&id, SolverSettings::scalar(1.0)).unwrap();
        let f = cosine(32, 1.0, 0.5);
        let dt = s.time_step_for(&f);
        let mut cur = f.clone();
        for _ in 0..10_000 {
            s.time_step(&mut cur, dt).unwrap();
        }
        assert!((cur.mass() / f.mass() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn two_dimensional_cross_stencil_conserves_mass() {
        let id = LinearNonlinearity { slope: 1.0 };
        let mut s = Solver::new(&id, SolverSettings::new([[1.0, 0.3], [0.3, 0.8]])).unwrap();
        let m = 16;
        let v: Vec<f64> = (0..m * m).map(|i| 1.0 + 0.3 * ((i * 7 % 11) as f64 / 11.0)).collect();
        let f = DensityField::new(2, m, v, 0.0).unwrap();
        let (out, _) = s.solve_to_time(&f, 0.01).unwrap();
        assert!((out.mass() / f.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cfl_is_enforced_and_violations_are_caught() {
        let id = LinearNonlinearity { slope: 1.0 };
        let f = cosine(32, 1.0, 0.5);
        let mut strict = SolverSettings::scalar(1.0);
        strict.dt = Some(1e-3);
        let mut s = Solver::new(&id, strict).unwrap();
        assert!(matches!(s.solve_to_time(&f, 0.01), Err(ZrpError::Cfl { .. })));
        let mut loose = strict;
        loose.enforce_cfl = false;
        let mut s = Solver::new(&id, loose).unwrap();
        let mut spike = vec![0.5; 32];
        spike[10] = 1.0;
        let spike = DensityField::new(1, 32, spike, 0.0).unwrap();
        let (_, rep) = s.solve_to_time(&spike, 0.005).unwrap();
        assert!(!rep.accepted());
        assert_eq!(rep.violations[0], 1);
    }

    #[test]
    fn sinusoid_minimum_rises_early() {
        let id = LinearNonlinearity { slope: 1.0 };
        let mut s = Solver::new(&id, SolverSettings::scalar(1.0)).unwrap();
        let f = cosine(64, 0.5, 0.3);
        let (_, rep) = s.solve_to_time(&f, 0.01).unwrap();
        assert!(rep.accepted());
        assert!(rep.first_min_increase.unwrap() <= 10);
    }

    #[test]
    fn second_order_self_convergence() {
        let id = LinearNonlinearity { slope: 1.0 };
        let run = |m: usize| {
            let mut s = Solver::new(&id, SolverSettings::scalar(1.0)).unwrap();
            s.solve_to_time(&cosine(m, 1.0, 0.5), 0.01).unwrap().0
        };
        let order = self_convergence_order(&run(32), &run(64), &run(128)).unwrap();
        assert!((order - 2.0).abs() < 0.2, "order {order}");
    }

    #[test]
    fn monitor_on_trajectories() {
        let a = DensityField::new(1, 8, vec![0.5; 8], 0.0).unwrap();
        assert!(extrema_monitor(&[a.clone()]).is_err());
        let mut v = vec![0.5; 8];
        v[3] = 0.6;
        let b = DensityField::new(1, 8, v, 0.1).unwrap();
        let r = extrema_monitor(&[a, b]).unwrap();
        assert_eq!(r.violations, vec![1]);
        assert!(r.check().is_err());
    }
}
