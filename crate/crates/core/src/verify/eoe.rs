use crate::error::{invalid, Result};
use crate::measures::{canonical_table, relative_entropy_discrete, site_pmf};
use crate::thermo::ThermoTable;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EoePoint {
    pub n: usize,
    pub k: usize,
    /// `H(nu^L_{N,K} | nu^L_{rho ∧ rho_c})`
    pub entropy: f64,
    pub tail_error: f64,
    pub canonical_mean: f64,
}

/// Exact relative entropies of canonical marginals against the grand
/// canonical law at `rho ∧ rho_c`, with `K = floor(rho N)`.
pub fn eoe_scan(t: &ThermoTable, rho: f64, sizes: &[usize], l: usize) -> Result<Vec<EoePoint>> {
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(invalid(format!("density must be finite and >= 0, got {rho}")));
    }
    let reference = site_pmf(t, rho.min(t.rho_c()), 1e-14)?;
    let mut out = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let k = (rho * n as f64).floor() as usize;
        let table = canonical_table(t.rate(), n, k)?;
        let m = table.marginal(l)?;
        let q = m.product_reference(|j| reference.prob(j));
        let h = relative_entropy_discrete(&m.probs, &q)?;
        out.push(EoePoint { n, k, entropy: h.value, tail_error: h.tail_error, canonical_mean: m.mean_per_site() });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rate::LocalJumpRate;
    use crate::thermo::ThermoSettings;

    fn t3() -> ThermoTable {
        ThermoTable::new(LocalJumpRate::evans(3.0).unwrap(), ThermoSettings::default()).unwrap()
    }

    #[test]
    fn empty_system_has_zero_entropy() {
        let pts = eoe_scan(&t3(), 0.0, &[8, 16], 1).unwrap();
        assert!(pts.iter().all(|p| p.entropy == 0.0 && p.k == 0));
    }

    #[test]
    fn subcritical_entropy_decreases() {
        let pts = eoe_scan(&t3(), 0.5, &[8, 16, 32, 64], 1).unwrap();
        for w in pts.windows(2) {
            assert!(w[1].entropy < w[0].entropy);
        }
        assert!(pts[3].entropy < 1e-2);
        let two = eoe_scan(&t3(), 0.5, &[8, 16, 32], 2).unwrap();
        for w in two.windows(2) {
            assert!(w[1].entropy < w[0].entropy);
        }
    }

    #[test]
    fn deterministic() {
        let a = eoe_scan(&t3(), 2.0, &[8, 16], 1).unwrap();
        let b = eoe_scan(&t3(), 2.0, &[8, 16], 1).unwrap();
        assert_eq!(a, b);
    }
}
