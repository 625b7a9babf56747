//! Exact single-site thermodynamics of a zero range process.
//!
//! [`ThermoTable`] holds the partition function `Z(phi) = sum_k phi^k / g!(k)`
//! on a fugacity grid together with the radius `phi_c` and the critical
//! density `rho_c = R(phi_c)`. The mean density `R(phi) = phi Z'(phi) / Z(phi)`
//! is inverted by bisection to give the mean jump rate `Phi = R^-1`, which is
//! extended by `Phi(rho) = Phi(rho ∧ rho_c)` above the critical density.

pub mod cache;
mod extension;
mod jet;
mod series;

pub use extension::{ExtendedNonlinearity, HermiteTable, LinearNonlinearity, Nonlinearity};
pub use series::{Coefficients, SeriesOptions, SumStatus};

use crate::error::{invalid, Result, ZrpError};
use crate::rate::{fugacity_radius, FugacityRadius, LocalJumpRate, RateFamily};
use jet::Jet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermoSettings {
    /// Relative tail tolerance for series truncation.
    pub tol: f64,
    /// Hard cap on the number of series terms.
    pub k_max: usize,
    /// Relative bracket width at which bisection for `Phi` stops.
    pub bisection_tol: f64,
    /// Densities closer than this to a finite `rho_c` count as critical for derivatives.
    pub near_critical_tol: f64,
}

impl Default for ThermoSettings {
    fn default() -> Self {
        Self { tol: 1e-14, k_max: 1_000_000, bisection_tol: 1e-15, near_critical_tol: 1e-6 }
    }
}

impl ThermoSettings {
    fn series(&self) -> SeriesOptions {
        SeriesOptions { tol: self.tol, k_max: self.k_max }
    }
}

/// One row of the tabulated fugacity grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub phi: f64,
    pub z: f64,
    pub dz: f64,
    pub rho: f64,
    /// Whether the row needed tail extrapolation rather than a certified bound.
    pub extrapolated: bool,
}

/// Density together with its fugacity and log partition function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityState {
    pub rho: f64,
    pub phi: f64,
    pub ln_z: f64,
}

#[derive(Debug, Clone)]
pub struct ThermoTable {
    g: LocalJumpRate,
    settings: ThermoSettings,
    phi_c: f64,
    phi_c_estimate: FugacityRadius,
    z_critical: f64,
    z_critical_closed_form: Option<f64>,
    rho_c: f64,
    rho_c_closed_form: Option<f64>,
    grid: Vec<GridPoint>,
}

const UNIFORM_POINTS: usize = 128;
const UNIFORM_TOP: f64 = 0.9;
const NEAR_CRITICAL_POINTS: usize = 21;

impl ThermoTable {
    pub fn new(g: LocalJumpRate, settings: ThermoSettings) -> Result<Self> {
        let phi_c = g.exact_fugacity_radius();
        let phi_c_estimate = fugacity_radius(&g, 1000)?;
        let opts = settings.series();

        let critical = series::taylor_coefficients(&g, phi_c, phi_c, 2, opts)?;
        let z_critical = critical.value(0);
        let rho_c = if critical.is_finite(1) { phi_c * critical.ratio(1, 0) } else { f64::INFINITY };
        let (z_critical_closed_form, rho_c_closed_form) = match g.family() {
            RateFamily::Evans { b } => (
                Some(if *b > 1.0 { b / (b - 1.0) } else { f64::INFINITY }),
                Some(if *b > 2.0 { 1.0 / (b - 2.0) } else { f64::INFINITY }),
            ),
            RateFamily::Table { .. } => (None, None),
        };

        let mut phis: Vec<f64> = (0..=UNIFORM_POINTS)
            .map(|i| phi_c * UNIFORM_TOP * i as f64 / UNIFORM_POINTS as f64)
            .collect();
        for i in 1..=NEAR_CRITICAL_POINTS {
            phis.push(phi_c * (1.0 - 0.1 * 10f64.powf(-(i as f64) / 4.0)));
        }
        let mut grid = Vec::with_capacity(phis.len());
        for phi in phis {
            let c = match series::taylor_coefficients(&g, phi, phi_c, 2, opts) {
                Ok(c) => c,
                // near-critical rows past the term cap are simply left out
                Err(ZrpError::NotCertified { .. }) if phi > UNIFORM_TOP * phi_c => break,
                Err(e) => return Err(e),
            };
            grid.push(GridPoint {
                phi,
                z: c.value(0),
                dz: c.value(1),
                rho: phi * c.ratio(1, 0),
                extrapolated: c.status == SumStatus::Extrapolated,
            });
        }
        Ok(Self {
            g,
            settings,
            phi_c,
            phi_c_estimate,
            z_critical,
            z_critical_closed_form,
            rho_c,
            rho_c_closed_form,
            grid,
        })
    }

    pub fn rate(&self) -> &LocalJumpRate {
        &self.g
    }

    pub fn settings(&self) -> &ThermoSettings {
        &self.settings
    }

    /// Radius of convergence `phi_c` of `Z`.
    pub fn phi_c(&self) -> f64 {
        self.phi_c
    }

    /// Tail-window estimate of `phi_c`, kept as a cross-check.
    pub fn phi_c_estimate(&self) -> FugacityRadius {
        self.phi_c_estimate
    }

    /// `Z(phi_c)`, `+inf` when the series diverges at the radius.
    pub fn z_critical(&self) -> f64 {
        self.z_critical
    }

    pub fn z_critical_closed_form(&self) -> Option<f64> {
        self.z_critical_closed_form
    }

    /// Critical density `rho_c = R(phi_c)`, possibly `+inf`.
    pub fn rho_c(&self) -> f64 {
        self.rho_c
    }

    pub fn rho_c_closed_form(&self) -> Option<f64> {
        self.rho_c_closed_form
    }

    pub fn grid(&self) -> &[GridPoint] {
        &self.grid
    }

    pub(crate) fn from_parts(
        g: LocalJumpRate,
        settings: ThermoSettings,
        phi_c_estimate: FugacityRadius,
        z_critical: f64,
        rho_c: f64,
        grid: Vec<GridPoint>,
    ) -> Self {
        let fresh_closed = match g.family() {
            RateFamily::Evans { b } => (
                Some(if *b > 1.0 { b / (b - 1.0) } else { f64::INFINITY }),
                Some(if *b > 2.0 { 1.0 / (b - 2.0) } else { f64::INFINITY }),
            ),
            RateFamily::Table { .. } => (None, None),
        };
        Self {
            phi_c: g.exact_fugacity_radius(),
            g,
            settings,
            phi_c_estimate,
            z_critical,
            z_critical_closed_form: fresh_closed.0,
            rho_c,
            rho_c_closed_form: fresh_closed.1,
            grid,
        }
    }

    /// Taylor coefficients `Z^(j)(phi)/j!`, `j < order`.
    pub fn coefficients(&self, phi: f64, order: usize) -> Result<Coefficients> {
        series::taylor_coefficients(&self.g, phi, self.phi_c, order, self.settings.series())
    }

    /// `Z(phi)`; `+inf` at `phi = phi_c` when the series diverges there.
    pub fn partition_function(&self, phi: f64) -> Result<f64> {
        if phi == self.phi_c {
            return Ok(self.z_critical);
        }
        Ok(self.coefficients(phi, 1)?.value(0))
    }

    /// `ln Z(phi)`, safe for very large `Z`.
    pub fn ln_partition_function(&self, phi: f64) -> Result<f64> {
        if phi == self.phi_c {
            return Ok(self.z_critical.ln());
        }
        Ok(self.coefficients(phi, 1)?.ln_value(0))
    }

    /// `R(phi) = phi Z'(phi) / Z(phi)`.
    pub fn mean_density(&self, phi: f64) -> Result<f64> {
        if phi == 0.0 {
            return Ok(0.0);
        }
        if phi == self.phi_c {
            return Ok(self.rho_c);
        }
        let c = self.coefficients(phi, 2)?;
        Ok(phi * c.ratio(1, 0))
    }

    /// `Phi(rho)`: inverse of `R` below `rho_c`, `phi_c` at and above it.
    ///
    /// Densities within `near_critical_tol` of `rho_c` count as critical.
    /// Between the last certified grid row and that band the series cannot be
    /// summed within `k_max` and `NearCritical` is returned.
    pub fn mean_jump_rate(&self, rho: f64) -> Result<f64> {
        if !(rho >= 0.0) {
            return Err(invalid(format!("density must be >= 0, got {rho}")));
        }
        if rho == 0.0 {
            return Ok(0.0);
        }
        if rho >= self.rho_c - self.settings.near_critical_tol {
            return Ok(self.phi_c);
        }
        // bracket from the tabulated, strictly increasing R
        let i = self.grid.partition_point(|p| p.rho <= rho);
        let mut lo = self.grid[i - 1].phi;
        let mut hi = if i < self.grid.len() { self.grid[i].phi } else { self.phi_c };
        for _ in 0..200 {
            if hi - lo <= self.settings.bisection_tol * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let r = self.mean_density(mid).map_err(|e| match e {
                ZrpError::NotCertified { .. } => ZrpError::NearCritical { rho, rho_c: self.rho_c },
                other => other,
            })?;
            if r <= rho {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn check_subcritical(&self, rho: f64) -> Result<()> {
        if !(rho >= 0.0) {
            return Err(invalid(format!("density must be >= 0, got {rho}")));
        }
        if rho >= self.rho_c - self.settings.near_critical_tol {
            return Err(ZrpError::NearCritical { rho, rho_c: self.rho_c });
        }
        Ok(())
    }

    /// `Phi'(rho) = 1 / R'(Phi(rho))`, for `0 <= rho < rho_c`.
    pub fn jump_rate_derivative(&self, rho: f64) -> Result<f64> {
        Ok(self.jump_rate_with_derivative(rho)?.1)
    }

    /// `(Phi(rho), Phi'(rho))` with a single inversion.
    pub fn jump_rate_with_derivative(&self, rho: f64) -> Result<(f64, f64)> {
        self.check_subcritical(rho)?;
        let phi = self.mean_jump_rate(rho)?;
        if phi == 0.0 {
            // R(phi) = phi / g(1) + O(phi^2)
            return Ok((0.0, self.g.eval(1)));
        }
        let c = self.coefficients(phi, 3)?;
        if !c.is_finite(2) {
            return Err(ZrpError::NearCritical { rho, rho_c: self.rho_c });
        }
        // Var = phi^2 Z''/Z + phi Z'/Z - (phi Z'/Z)^2, R' = Var / phi
        let m1 = phi * c.ratio(1, 0);
        let ff = 2.0 * phi * phi * c.ratio(2, 0);
        let var = ff + m1 - m1 * m1;
        Ok((phi, phi / var))
    }

    /// `[Phi(rho), Phi'(rho), ..., Phi^(order)(rho)]` from series reversion of `R`.
    pub fn jump_rate_jet(&self, rho: f64, order: usize) -> Result<Vec<f64>> {
        self.check_subcritical(rho)?;
        let phi0 = self.mean_jump_rate(rho)?;
        let n = order + 1;
        let c = self.coefficients(phi0, n + 1)?;
        if !c.is_finite(n) {
            return Err(ZrpError::NearCritical { rho, rho_c: self.rho_c });
        }
        let z = Jet((0..=n).map(|j| c.ratio(j, 0)).collect());
        let dz = z.derivative();
        let mut lin = vec![0.0; n];
        lin[0] = phi0;
        if n > 1 {
            lin[1] = 1.0;
        }
        let mut r = Jet(lin).mul(&dz).div(&Jet(z.0[..n].to_vec()));
        r.0[0] = 0.0;
        let inv = r.revert();
        let mut out = Vec::with_capacity(n);
        out.push(phi0);
        let mut fact = 1.0;
        for m in 1..n {
            fact *= m as f64;
            out.push(fact * inv.0[m]);
        }
        Ok(out)
    }

    /// Density with its fugacity `Phi(rho ∧ rho_c)` and `ln Z` at that fugacity.
    pub fn state(&self, rho: f64) -> Result<DensityState> {
        let phi = self.mean_jump_rate(rho)?;
        let ln_z = if phi == self.phi_c { self.z_critical.ln() } else { self.ln_partition_function(phi)? };
        Ok(DensityState { rho, phi, ln_z })
    }

    fn check_open_interval(&self, rho: f64) -> Result<()> {
        if !(rho > 0.0 && rho < self.rho_c) {
            return Err(invalid(format!(
                "density must lie in (0, rho_c) = (0, {}), got {rho}",
                self.rho_c
            )));
        }
        Ok(())
    }

    /// `Lambda_rho(r) = ln Z(e^r Phi(rho)) - ln Z(Phi(rho))`; `+inf` past `phi_c`.
    pub fn log_mgf(&self, rho: f64, r: f64) -> Result<f64> {
        self.check_open_interval(rho)?;
        let base = self.state(rho)?;
        let arg = base.phi * r.exp();
        if arg > self.phi_c * (1.0 + 1e-14) {
            return Ok(f64::INFINITY);
        }
        let ln_z = if arg >= self.phi_c { self.z_critical.ln() } else { self.ln_partition_function(arg)? };
        Ok(ln_z - base.ln_z)
    }

    /// Cramér rate function `Lambda*_rho(lambda)`.
    pub fn rate_function(&self, rho: f64, lambda: f64) -> Result<f64> {
        self.check_open_interval(rho)?;
        if lambda < 0.0 {
            return Ok(f64::INFINITY);
        }
        let base = self.state(rho)?;
        let at = self.state(lambda)?;
        Ok(rate_function_from_states(&base, &at))
    }

    /// `M(lambda, rho) = Phi(lambda) - Phi(rho) - Phi'(rho)(lambda - rho)`.
    pub fn taylor_gap(&self, lambda: f64, rho: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return Err(invalid(format!("lambda must be >= 0, got {lambda}")));
        }
        self.check_open_interval(rho)?;
        let d = self.jump_rate_derivative(rho)?;
        Ok(self.mean_jump_rate(lambda)? - self.mean_jump_rate(rho)? - d * (lambda - rho))
    }

    /// Build the uniformly parabolic extension of `Phi` cut at `rho_c - eps`.
    pub fn parabolic_extension(&self, eps: f64, order: usize) -> Result<ExtendedNonlinearity> {
        ExtendedNonlinearity::new(self, eps, order)
    }
}

/// `Lambda*_a(lambda)` for `lambda >= 0` from precomputed states.
pub fn rate_function_from_states(base: &DensityState, at: &DensityState) -> f64 {
    if at.rho == 0.0 {
        // 0 log 0 = 0 and Z(0) = 1
        return base.ln_z;
    }
    at.rho * (at.phi / base.phi).ln() - (at.ln_z - base.ln_z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(b: f64) -> ThermoTable {
        ThermoTable::new(LocalJumpRate::evans(b).unwrap(), ThermoSettings::default()).unwrap()
    }

    #[test]
    fn partition_function_examples() {
        let t0 = table(0.0);
        assert!((t0.partition_function(0.5).unwrap() - 2.0).abs() < 1e-10);
        assert_eq!(t0.partition_function(0.0).unwrap(), 1.0);
        assert!(t0.partition_function(1.0).unwrap().is_infinite());
        assert!(matches!(t0.partition_function(1.2), Err(ZrpError::Divergent { .. })));
        let t3 = table(3.0);
        assert!((t3.partition_function(1.0).unwrap() - 1.5).abs() < 1e-6);
        assert_eq!(t3.partition_function(0.0).unwrap(), 1.0);
    }

    #[test]
    fn mean_density_examples() {
        let t0 = table(0.0);
        assert!((t0.mean_density(0.5).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(t0.mean_density(0.0).unwrap(), 0.0);
        assert!(t0.rho_c().is_infinite());
        let t3 = table(3.0);
        assert!((t3.mean_density(1.0).unwrap() - 1.0).abs() < 1e-4);
        assert!((t3.rho_c() - 1.0).abs() < 1e-6);
        assert_eq!(t3.phi_c(), 1.0);
    }

    #[test]
    fn mean_jump_rate_examples() {
        let t0 = table(0.0);
        assert_eq!(t0.mean_jump_rate(0.0).unwrap(), 0.0);
        assert!((t0.mean_jump_rate(1.0).unwrap() - 0.5).abs() < 1e-8);
        let t3 = table(3.0);
        assert_eq!(t3.mean_jump_rate(2.5).unwrap(), 1.0);
        assert_eq!(t3.mean_jump_rate(1.0 + 1e-9).unwrap(), 1.0);
        assert_eq!(t3.mean_jump_rate(1.0).unwrap(), 1.0);
        assert!(matches!(t3.mean_jump_rate(0.99995), Err(ZrpError::NearCritical { .. })));
        assert!(t3.mean_jump_rate(-0.1).is_err());
    }

    #[test]
    fn jump_rate_derivative_examples() {
        let t0 = table(0.0);
        assert!((t0.jump_rate_derivative(1.0).unwrap() - 0.25).abs() < 1e-10);
        assert!((t0.jump_rate_derivative(0.0).unwrap() - 1.0).abs() < 1e-12);
        let t3 = table(3.0);
        assert!(matches!(t3.jump_rate_derivative(1.0), Err(ZrpError::NearCritical { .. })));
        for i in 0..40 {
            let rho = 0.95 * i as f64 / 40.0;
            let d = t3.jump_rate_derivative(rho).unwrap();
            assert!(d > 0.0 && d <= t3.rate().lipschitz_bound() + 1e-9, "rho={rho} d={d}");
        }
    }

    #[test]
    fn jet_matches_closed_form_geometric() {
        let t0 = table(0.0);
        for rho in [0.0, 0.3, 1.0, 2.5] {
            let jet = t0.jump_rate_jet(rho, 4).unwrap();
            let a = 1.0 + rho;
            // Phi = rho/(1+rho): derivatives (-1)^(m+1) m! / (1+rho)^(m+1)
            let expected = [rho / a, 1.0 / a.powi(2), -2.0 / a.powi(3), 6.0 / a.powi(4), -24.0 / a.powi(5)];
            for (m, (x, y)) in jet.iter().zip(expected.iter()).enumerate() {
                assert!((x - y).abs() < 1e-8 * y.abs().max(1.0), "rho={rho} m={m}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn log_mgf_examples() {
        let t0 = table(0.0);
        assert!(t0.log_mgf(1.0, 0.0).unwrap().abs() < 1e-14);
        let v = t0.log_mgf(1.0, (4.0f64 / 3.0).ln()).unwrap();
        assert!((v - 1.5f64.ln()).abs() < 1e-10);
        assert!(t0.log_mgf(1.0, 1.0).unwrap().is_infinite());
        // derivative at zero is the mean
        let h = 1e-5;
        let d = (t0.log_mgf(1.0, h).unwrap() - t0.log_mgf(1.0, -h).unwrap()) / (2.0 * h);
        assert!((d - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rate_function_examples() {
        let t0 = table(0.0);
        assert!(t0.rate_function(1.0, 1.0).unwrap().abs() < 1e-12);
        let v = t0.rate_function(1.0, 2.0).unwrap();
        let expected = 2.0 * (4.0f64 / 3.0).ln() - 1.5f64.ln();
        assert!((v - expected).abs() < 1e-9);
        assert!((v - 0.169899).abs() < 1e-6);
        assert!(t0.rate_function(1.0, -0.5).unwrap().is_infinite());
        assert!(t0.rate_function(0.0, 1.0).is_err());
    }

    #[test]
    fn taylor_gap_examples() {
        let t0 = table(0.0);
        assert!(t0.taylor_gap(1.0, 1.0).unwrap().abs() < 1e-12);
        let v = t0.taylor_gap(2.0, 1.0).unwrap();
        assert!((v - (2.0 / 3.0 - 0.5 - 0.25)).abs() < 1e-8);
        let t3 = table(3.0);
        let bound = 2.0 * t3.rate().lipschitz_bound();
        for lambda in [1.5, 3.0, 10.0] {
            for rho in [0.1, 0.5, 0.8] {
                assert!(t3.taylor_gap(lambda, rho).unwrap().abs() <= bound * lambda);
            }
        }
    }

    #[test]
    fn grid_is_strictly_increasing() {
        for b in [0.0, 3.0] {
            let t = table(b);
            assert_eq!(t.grid()[0].z, 1.0);
            for w in t.grid().windows(2) {
                assert!(w[1].phi > w[0].phi);
                assert!(w[1].z > w[0].z);
                assert!(w[1].rho > w[0].rho);
            }
        }
    }

    #[test]
    fn table_family_constant_rate() {
        // g = 2 on all occupied sites: geometric with ratio phi/2
        let t = ThermoTable::new(LocalJumpRate::table(vec![2.0]).unwrap(), ThermoSettings::default()).unwrap();
        assert_eq!(t.phi_c(), 2.0);
        assert!(t.rho_c().is_infinite());
        assert!((t.partition_function(1.0).unwrap() - 2.0).abs() < 1e-12);
        // rho = x/(1-x) with x = phi/2
        assert!((t.mean_jump_rate(1.0).unwrap() - 1.0).abs() < 1e-10);
    }
}
