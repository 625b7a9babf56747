//! Truncated power series, used to push Taylor coefficients of `Z` through
//! `R = phi Z'/Z` and its inverse.

#[derive(Debug, Clone, PartialEq)]
pub struct Jet(pub Vec<f64>);

impl Jet {
    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        let n = self.order().min(other.order());
        let mut out = vec![0.0; n];
        for (i, a) in self.0.iter().take(n).enumerate() {
            for (j, b) in other.0.iter().take(n - i).enumerate() {
                out[i + j] += a * b;
            }
        }
        Jet(out)
    }

    /// `self / other`; `other` must have a nonzero constant term.
    pub fn div(&self, other: &Jet) -> Jet {
        let n = self.order().min(other.order());
        let b0 = other.0[0];
        let mut out = vec![0.0; n];
        for k in 0..n {
            let mut acc = self.0[k];
            for j in 1..=k {
                acc -= other.0[j] * out[k - j];
            }
            out[k] = acc / b0;
        }
        Jet(out)
    }

    pub fn derivative(&self) -> Jet {
        Jet(self.0.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect())
    }

    /// `self(inner(y))` where `inner` has zero constant term.
    pub fn compose(&self, inner: &Jet) -> Jet {
        let n = inner.order();
        let mut out = Jet(vec![0.0; n]);
        for c in self.0.iter().rev() {
            out = out.mul(inner);
            out.0[0] += c;
        }
        out
    }

    /// Compositional inverse of a series `a_1 s + a_2 s^2 + ...` with `a_1 != 0`.
    pub fn revert(&self) -> Jet {
        let n = self.order();
        let a1 = self.0[1];
        let mut b = vec![0.0; n];
        if n > 1 {
            b[1] = 1.0 / a1;
        }
        let mut inv = Jet(b);
        // each fixed-point pass fixes one more coefficient
        for _ in 0..n {
            let composed = self.compose(&inv);
            let mut next = inv.0.clone();
            for k in 1..n {
                let target = if k == 1 { 1.0 } else { 0.0 };
                next[k] += (target - composed.0[k]) / a1;
            }
            inv = Jet(next);
        }
        inv
    }
}
