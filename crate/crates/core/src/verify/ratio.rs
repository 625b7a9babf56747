use crate::error::{invalid, Result, ZrpError};
use crate::thermo::{rate_function_from_states, DensityState, ThermoTable};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioScan {
    pub sup: f64,
    pub argmax: (f64, f64),
    pub cells: usize,
    /// Cells within `delta` of the diagonal, evaluated by the second-order limit.
    pub diagonal_cells: usize,
    /// Values of `lambda` dropped because `Phi` is not computable there.
    pub skipped_lambdas: usize,
}

/// `(1..=n) * upper / n`.
pub fn ratio_grid(upper: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| upper * i as f64 / n as f64).collect()
}

/// `sup |M(lambda, rho)| / Lambda*_rho(lambda)` over the grid.
///
/// Near the diagonal both quantities vanish to second order and the ratio is
/// replaced by its limit `|Phi''(rho)| Phi(rho) / Phi'(rho)`. Values of
/// `lambda` in the uncertifiable band just below `rho_c` are skipped.
pub fn taylor_gap_ratio_scan(t: &ThermoTable, eps: f64, lambdas: &[f64], rhos: &[f64], delta: f64) -> Result<RatioScan> {
    let top = t.rho_c() - eps;
    if let Some(r) = rhos.iter().find(|&&r| !(r > 0.0 && r <= top + 1e-12)) {
        return Err(invalid(format!("scan density {r} outside (0, rho_c - eps] = (0, {top}]")));
    }
    if let Some(l) = lambdas.iter().find(|&&l| !(l > 0.0)) {
        return Err(invalid(format!("scan value lambda = {l} must be > 0")));
    }
    let mut lam_states: Vec<(f64, DensityState)> = Vec::with_capacity(lambdas.len());
    let mut skipped = 0;
    for &l in lambdas {
        match t.state(l) {
            Ok(s) => lam_states.push((l, s)),
            Err(ZrpError::NearCritical { .. }) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    let mut best = RatioScan {
        sup: f64::NEG_INFINITY,
        argmax: (f64::NAN, f64::NAN),
        cells: 0,
        diagonal_cells: 0,
        skipped_lambdas: skipped,
    };
    for &rho in rhos {
        let base = t.state(rho)?;
        let jet = t.jump_rate_jet(rho, 2)?;
        let (phi, d1, d2) = (jet[0], jet[1], jet[2]);
        let diag = d2.abs() * phi / d1;
        for &(lam, ref at) in &lam_states {
            let ratio = if (lam - rho).abs() < delta {
                best.diagonal_cells += 1;
                diag
            } else {
                let m = at.phi - base.phi - d1 * (lam - rho);
                let lstar = rate_function_from_states(&base, at);
                if !(lstar > 0.0) {
                    return Err(invalid(format!(
                        "rate function vanishes off the diagonal at (lambda={lam}, rho={rho}); table is inconsistent"
                    )));
                }
                m.abs() / lstar
            };
            best.cells += 1;
            if ratio > best.sup {
                best.sup = ratio;
                best.argmax = (lam, rho);
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rate::LocalJumpRate;
    use crate::thermo::ThermoSettings;

    #[test]
    fn geometric_single_cell() {
        let t = ThermoTable::new(LocalJumpRate::evans(0.0).unwrap(), ThermoSettings::default()).unwrap();
        let s = taylor_gap_ratio_scan(&t, 1.0, &[2.0], &[1.0], 1e-3).unwrap();
        // M = 1/12, Lambda* = 2 ln(4/3) - ln(3/2)
        let lstar = 2.0 * (4.0f64 / 3.0).ln() - 1.5f64.ln();
        assert!((s.sup - (1.0 / 12.0) / lstar).abs() < 1e-9);
        assert!((s.sup - 0.4905).abs() < 1e-3);
    }

    #[test]
    fn diagonal_limit_is_continuous() {
        let t = ThermoTable::new(LocalJumpRate::evans(3.0).unwrap(), ThermoSettings::default()).unwrap();
        let rho = 0.4;
        let on = taylor_gap_ratio_scan(&t, 0.2, &[rho], &[rho], 1e-3).unwrap().sup;
        let near = taylor_gap_ratio_scan(&t, 0.2, &[rho + 2e-3], &[rho], 1e-3).unwrap().sup;
        assert!((on - near).abs() / on < 1e-2, "{on} vs {near}");
    }

    #[test]
    fn uncertifiable_band_is_skipped() {
        let t = ThermoTable::new(LocalJumpRate::evans(3.0).unwrap(), ThermoSettings::default()).unwrap();
        let s = taylor_gap_ratio_scan(&t, 0.2, &[0.5, 0.99995, 1.0, 2.0], &[0.4], 1e-3).unwrap();
        assert_eq!(s.skipped_lambdas, 1);
        assert_eq!(s.cells, 3);
        assert!(s.sup.is_finite());
    }

    #[test]
    fn rejects_out_of_range_grids() {
        let t = ThermoTable::new(LocalJumpRate::evans(3.0).unwrap(), ThermoSettings::default()).unwrap();
        assert!(taylor_gap_ratio_scan(&t, 0.2, &[1.0], &[0.9], 1e-3).is_err());
        assert!(taylor_gap_ratio_scan(&t, 0.2, &[0.0], &[0.5], 1e-3).is_err());
    }
}
