//! Uniformly parabolic extension of the mean jump rate.
//!
//! `Phi` is kept on `[0, b]`, `b = rho_c - eps`. Its derivative is continued
//! past both ends of that interval by the Taylor polynomial of `Phi'` plus
//! `M |x|^(k+1) / (k+1)!`, capped smoothly at `B + 1` where `B = max Phi'` on
//! `[0, b]`, and integrated back. The result is `C^(k+1)`, agrees with `Phi`
//! on `[0, b]` and has `c <= Phi~' <= B + 1` on the whole line.

use super::ThermoTable;
use crate::error::{invalid, Result, ZrpError};

/// A scalar nonlinearity `F` for `d_t rho = Delta_Sigma F(rho)`.
pub trait Nonlinearity: Send + Sync {
    fn eval(&self, rho: f64) -> f64;

    /// Upper bound on `F'` over the whole real line.
    fn slope_bound(&self) -> f64;

    /// Whether `rho` lies in the region where `F` is the physical `Phi`.
    fn in_core(&self, _rho: f64) -> bool {
        true
    }
}

/// `F(rho) = slope * rho`, the heat equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearNonlinearity {
    pub slope: f64,
}

impl Nonlinearity for LinearNonlinearity {
    fn eval(&self, rho: f64) -> f64 {
        self.slope * rho
    }

    fn slope_bound(&self) -> f64 {
        self.slope
    }
}

/// Cubic Hermite interpolant on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteTable {
    start: f64,
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl HermiteTable {
    pub fn new(start: f64, step: f64, values: Vec<f64>, slopes: Vec<f64>) -> Self {
        assert!(values.len() >= 2 && values.len() == slopes.len());
        Self { start, step, values, slopes }
    }

    pub fn end(&self) -> f64 {
        self.start + self.step * (self.values.len() - 1) as f64
    }

    #[inline]
    fn locate(&self, x: f64) -> (usize, f64) {
        let pos = (x - self.start) / self.step;
        let i = (pos.floor().max(0.0) as usize).min(self.values.len() - 2);
        (i, pos - i as f64)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let (i, t) = self.locate(x);
        let h = self.step;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let (i, t) = self.locate(x);
        let h = self.step;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1)
            / h
    }
}

// 8-point Gauss-Legendre on [-1, 1]
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

fn gauss_legendre(a: f64, b: f64, pieces: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / pieces as f64;
    let mut acc = 0.0;
    for p in 0..pieces {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
            acc += w * f(mid + 0.5 * h * x);
        }
    }
    acc * 0.5 * h
}

/// C-infinity step from 0 (x <= 0) to 1 (x >= 1), symmetric about 1/2.
fn smooth_step(x: f64) -> f64 {
    let f = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = f(x);
        a / (a + f(1.0 - x))
    }
}

/// Smooth cap: identity up to `B`, constant `B + 1` from `B + 2` on.
#[derive(Debug, Clone, Copy)]
struct Cap {
    b: f64,
}

impl Cap {
    fn apply(&self, y: f64) -> f64 {
        let d = y - self.b;
        if d <= 0.0 {
            y
        } else if d >= 2.0 {
            self.b + 1.0
        } else {
            // chi' = 1 - S(u/2) integrates to exactly 1 over [0, 2]
            self.b + gauss_legendre(0.0, d, 32, |u| 1.0 - smooth_step(0.5 * u)).min(1.0)
        }
    }
}

/// Continuation of `Phi~` beyond one end of the core interval.
#[derive(Debug, Clone)]
struct Branch {
    /// `P(s) = sum poly[m] s^m + lead s^(k+1)`, the extended `Phi'` at distance `s`.
    poly: Vec<f64>,
    lead: f64,
    /// `chi(P) = P` on `[0, poly_until]`.
    poly_until: f64,
    table: Option<HermiteTable>,
    far: f64,
    value_at_far: f64,
    cap: Cap,
}

impl Branch {
    fn derivative(&self, s: f64) -> f64 {
        poly_eval(&self.poly, self.lead, s)
    }

    fn integral_poly(&self, s: f64) -> f64 {
        let k1 = self.poly.len();
        let mut acc = self.lead * s.powi(k1 as i32 + 1) / (k1 as f64 + 1.0);
        for (m, c) in self.poly.iter().enumerate() {
            acc += c * s.powi(m as i32 + 1) / (m as f64 + 1.0);
        }
        acc
    }

    /// `int_0^s chi(P(u)) du`.
    fn integral(&self, s: f64) -> f64 {
        if s <= self.poly_until {
            self.integral_poly(s)
        } else if s <= self.far {
            match &self.table {
                Some(t) => t.eval(s),
                None => self.integral_poly(s),
            }
        } else {
            self.value_at_far + (self.cap.b + 1.0) * (s - self.far)
        }
    }

    fn slope(&self, s: f64) -> f64 {
        if s <= self.poly_until {
            self.derivative(s)
        } else {
            self.cap.apply(self.derivative(s))
        }
    }
}

/// `Phi~`: equal to `Phi` on `[0, rho_c - eps]`, with `c <= Phi~' <= B + 1` on all of R.
#[derive(Debug, Clone)]
pub struct ExtendedNonlinearity {
    cut: f64,
    order: usize,
    m_const: f64,
    lower: f64,
    b_max: f64,
    core: HermiteTable,
    right: Branch,
    left: Branch,
}

const CORE_STEP: f64 = 0.002;
const VERIFY_POINTS: usize = 20_000;
const BRANCH_NODES: usize = 4_000;

impl ExtendedNonlinearity {
    pub fn new(table: &ThermoTable, eps: f64, order: usize) -> Result<Self> {
        if order < 1 {
            return Err(invalid("extension order must be >= 1"));
        }
        let rho_c = table.rho_c();
        let cut = if rho_c.is_finite() {
            if !(eps > 0.0 && eps < rho_c) {
                return Err(invalid(format!("eps must lie in (0, rho_c) = (0, {rho_c}), got {eps}")));
            }
            rho_c - eps
        } else {
            if !(eps > 0.0) {
                return Err(invalid(format!("eps must be > 0, got {eps}")));
            }
            1.0 / eps
        };

        let nodes = ((cut / CORE_STEP).ceil() as usize).clamp(64, 20_000);
        let step = cut / nodes as f64;
        let mut values = Vec::with_capacity(nodes + 1);
        let mut slopes = Vec::with_capacity(nodes + 1);
        for i in 0..=nodes {
            let rho = step * i as f64;
            let (phi, d) = table.jump_rate_with_derivative(rho)?;
            values.push(phi);
            slopes.push(d);
        }
        let core = HermiteTable::new(0.0, step, values, slopes);
        let b_max = core.slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let core_min = core.slopes.iter().cloned().fold(f64::INFINITY, f64::min);

        let right_jet = table.jump_rate_jet(cut, order + 1)?;
        if !(right_jet[1] > 0.0) {
            return Err(ZrpError::NearCritical { rho: cut, rho_c });
        }
        let left_jet = table.jump_rate_jet(0.0, order + 1)?;
        // Taylor coefficients of Phi' in the distance s from each anchor
        let taylor = |jet: &[f64], dir: f64| -> Vec<f64> {
            let mut out = Vec::with_capacity(order + 1);
            let mut fact = 1.0;
            for m in 0..=order {
                if m > 0 {
                    fact *= m as f64;
                }
                out.push(jet[m + 1] / fact * dir.powi(m as i32));
            }
            out
        };
        let right_poly = taylor(&right_jet, 1.0);
        let left_poly = taylor(&left_jet, -1.0);
        let cap = Cap { b: b_max };
        let fact_k1: f64 = (1..=order + 1).map(|i| i as f64).product();

        let mut m_const = 1.0;
        loop {
            let lead = m_const / fact_k1;
            let r = verify_branch(&right_poly, lead, b_max);
            let l = verify_branch(&left_poly, lead, b_max);
            if r.min > 0.0 && l.min > 0.0 {
                let right = build_branch(right_poly, lead, r.far, cap);
                let left = build_branch(left_poly, lead, l.far, cap);
                let lower = core_min.min(r.min).min(l.min).min(b_max);
                return Ok(Self { cut, order, m_const, lower, b_max, core, right, left });
            }
            m_const *= 2.0;
            if m_const > 1e18 {
                return Err(invalid("no extension constant M makes the extension positive"));
            }
        }
    }

    /// `rho_c - eps` (or `1/eps` when `rho_c` is infinite).
    pub fn cut(&self) -> f64 {
        self.cut
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// The constant `M` of the polynomial junction.
    pub fn junction_constant(&self) -> f64 {
        self.m_const
    }

    /// `c = inf Phi~'` (grid value).
    pub fn lower_slope(&self) -> f64 {
        self.lower
    }

    /// `B = max Phi'` on the core interval.
    pub fn core_max_slope(&self) -> f64 {
        self.b_max
    }

    pub fn eval(&self, rho: f64) -> f64 {
        if rho < 0.0 {
            -self.left.integral(-rho)
        } else if rho <= self.cut {
            self.core.eval(rho)
        } else {
            self.core.values[self.core.values.len() - 1] + self.right.integral(rho - self.cut)
        }
    }

    pub fn derivative(&self, rho: f64) -> f64 {
        if rho < 0.0 {
            self.left.slope(-rho)
        } else if rho <= self.cut {
            self.core.derivative(rho)
        } else {
            self.right.slope(rho - self.cut)
        }
    }
}

impl Nonlinearity for ExtendedNonlinearity {
    fn eval(&self, rho: f64) -> f64 {
        ExtendedNonlinearity::eval(self, rho)
    }

    fn slope_bound(&self) -> f64 {
        self.b_max + 1.0
    }

    fn in_core(&self, rho: f64) -> bool {
        (0.0..=self.cut).contains(&rho)
    }
}

struct BranchCheck {
    min: f64,
    far: f64,
}

fn poly_eval(poly: &[f64], lead: f64, s: f64) -> f64 {
    let mut p = 0.0;
    for c in poly.iter().rev() {
        p = p * s + c;
    }
    p + lead * s.powi(poly.len() as i32)
}

/// Minimum of `P` on a grid over `[0, S]`, where for `s >= S` the leading
/// term alone guarantees `P >= B + 2`; also the point past which `P >= B + 2`
/// on the grid.
fn verify_branch(poly: &[f64], lead: f64, b_max: f64) -> BranchCheck {
    let abs_sum: f64 = poly.iter().map(|c| c.abs()).sum();
    let bound = ((abs_sum + b_max + 2.0) / lead).max(1.0);
    let h = bound / VERIFY_POINTS as f64;
    let mut min = f64::INFINITY;
    let mut far = 0.0;
    for i in 0..=VERIFY_POINTS {
        let s = h * i as f64;
        let p = poly_eval(poly, lead, s);
        min = min.min(p);
        if p < b_max + 2.0 {
            far = s + h;
        }
    }
    BranchCheck { min, far: far.min(bound).max(h) }
}

fn build_branch(poly: Vec<f64>, lead: f64, far: f64, cap: Cap) -> Branch {
    let p = |s: f64| poly_eval(&poly, lead, s);
    // first crossing of B
    let n = VERIFY_POINTS;
    let h = far / n as f64;
    let mut poly_until = far;
    for i in 1..=n {
        let s = h * i as f64;
        if p(s) > cap.b {
            let (mut lo, mut hi) = (s - h, s);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if p(mid) > cap.b {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            poly_until = lo;
            break;
        }
    }
    let mut branch = Branch {
        poly: poly.clone(),
        lead,
        poly_until,
        table: None,
        far,
        value_at_far: 0.0,
        cap,
    };
    if poly_until < far {
        let step = (far - poly_until) / BRANCH_NODES as f64;
        let mut values = Vec::with_capacity(BRANCH_NODES + 1);
        let mut slopes = Vec::with_capacity(BRANCH_NODES + 1);
        let mut acc = branch.integral_poly(poly_until);
        for i in 0..=BRANCH_NODES {
            let s = poly_until + step * i as f64;
            if i > 0 {
                acc += gauss_legendre(s - step, s, 1, |u| cap.apply(p(u)));
            }
            values.push(acc);
            slopes.push(cap.apply(p(s)));
        }
        branch.value_at_far = acc;
        branch.table = Some(HermiteTable::new(poly_until, step, values, slopes));
    } else {
        branch.value_at_far = branch.integral_poly(far);
    }
    branch
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rate::LocalJumpRate;
    use crate::thermo::ThermoSettings;

    fn ext(b: f64, eps: f64, k: usize) -> (ThermoTable, ExtendedNonlinearity) {
        let t = ThermoTable::new(LocalJumpRate::evans(b).unwrap(), ThermoSettings::default()).unwrap();
        let e = t.parabolic_extension(eps, k).unwrap();
        (t, e)
    }

    #[test]
    fn smooth_cap_reaches_b_plus_one() {
        let cap = Cap { b: 3.0 };
        assert_eq!(cap.apply(2.5), 2.5);
        assert!((cap.apply(5.0 - 1e-12) - 4.0).abs() < 1e-9);
        assert_eq!(cap.apply(7.0), 4.0);
        let mut prev = cap.apply(3.0);
        for i in 1..=200 {
            let v = cap.apply(3.0 + i as f64 * 0.01);
            assert!(v >= prev - 1e-12 && v <= 4.0);
            prev = v;
        }
    }

    #[test]
    fn agrees_with_phi_on_core() {
        let (t, e) = ext(3.0, 0.2, 2);
        for i in 0..=80 {
            let rho = 0.8 * i as f64 / 80.0;
            let exact = t.mean_jump_rate(rho).unwrap();
            assert!((e.eval(rho) - exact).abs() < 1e-10, "rho={rho}");
        }
    }

    #[test]
    fn derivative_bounds_hold_everywhere() {
        let (_, e) = ext(3.0, 0.2, 2);
        let c = e.lower_slope();
        let upper = e.slope_bound();
        assert!(c > 0.0);
        let h = 1e-4;
        let mut rho = -20.0;
        while rho < 30.0 {
            let fd = (e.eval(rho + h) - e.eval(rho - h)) / (2.0 * h);
            assert!(fd >= c - 1e-6 && fd <= upper + 1e-6, "rho={rho}: {fd} not in [{c}, {upper}]");
            rho += 0.0137;
        }
    }

    #[test]
    fn second_differences_match_at_junction() {
        let (_, e) = ext(3.0, 0.2, 2);
        let b = e.cut();
        let h = 2e-3;
        let f = |x: f64| e.eval(x);
        // second-order one-sided second differences
        let left = (2.0 * f(b) - 5.0 * f(b - h) + 4.0 * f(b - 2.0 * h) - f(b - 3.0 * h)) / (h * h);
        let right = (2.0 * f(b) - 5.0 * f(b + h) + 4.0 * f(b + 2.0 * h) - f(b + 3.0 * h)) / (h * h);
        assert!((left - right).abs() < 1e-4, "left={left} right={right}");
    }

    #[test]
    fn infinite_critical_density_uses_reciprocal_cut() {
        let (t, e) = ext(0.0, 0.25, 1);
        assert_eq!(e.cut(), 4.0);
        assert!((e.eval(3.0) - t.mean_jump_rate(3.0).unwrap()).abs() < 1e-10);
        assert!(e.lower_slope() > 0.0);
    }

    #[test]
    fn rejects_bad_margins() {
        let t = ThermoTable::new(LocalJumpRate::evans(3.0).unwrap(), ThermoSettings::default()).unwrap();
        assert!(t.parabolic_extension(0.0, 2).is_err());
        assert!(t.parabolic_extension(1.5, 2).is_err());
        assert!(t.parabolic_extension(0.2, 0).is_err());
    }
}
