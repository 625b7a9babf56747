//! Observables computed on configuration snapshots.

use std::fmt;
use std::sync::Arc;

use super::lattice::Configuration;
use crate::error::{invalid, Result};
use crate::pde::DensityField;
use crate::rate::LocalJumpRate;

/// `eta^l(x)`: mean occupancy over the periodic window `|y - x|_inf <= l`.
pub fn block_average(config: &Configuration, x: usize, ell: usize) -> Result<f64> {
    check_radius(config, ell)?;
    let l = ell as i64;
    let mut sum: u64 = 0;
    if config.d() == 1 {
        for o in -l..=l {
            sum += config.get(config.shift(x, [o, 0])) as u64;
        }
    } else {
        for o1 in -l..=l {
            for o0 in -l..=l {
                sum += config.get(config.shift(x, [o0, o1])) as u64;
            }
        }
    }
    Ok(sum as f64 / window_size(config.d(), ell))
}

/// `eta^l(x)` at every site, by a separable periodic box sum.
pub fn block_averages(config: &Configuration, ell: usize) -> Result<Vec<f64>> {
    let w = window_size(config.d(), ell);
    Ok(block_sums(config, ell)?.into_iter().map(|s| s as f64 / w).collect())
}

/// Particle counts in the box of radius `ell` around every site.
pub fn block_sums(config: &Configuration, ell: usize) -> Result<Vec<u64>> {
    check_radius(config, ell)?;
    let n = config.side();
    let eta: Vec<u64> = config.eta().iter().map(|&k| k as u64).collect();
    let along = |input: &[u64], stride: usize, lines: usize, line_step: usize| -> Vec<u64> {
        let mut out = vec![0u64; input.len()];
        for line in 0..lines {
            let base = line * line_step;
            let at = |i: usize| input[base + (i % n) * stride];
            let mut s: u64 = (0..=2 * ell).map(|o| at(o + n - ell)).sum();
            for i in 0..n {
                out[base + i * stride] = s;
                s = s + at(i + ell + 1) - at(i + n - ell);
            }
        }
        out
    };
    let sums = if config.d() == 1 {
        along(&eta, 1, 1, 0)
    } else {
        let rows = along(&eta, 1, n, n);
        along(&rows, n, n, 1)
    };
    Ok(sums)
}

fn window_size(d: usize, ell: usize) -> f64 {
    ((2 * ell + 1) as f64).powi(d as i32)
}

fn check_radius(config: &Configuration, ell: usize) -> Result<()> {
    if 2 * ell >= config.side() {
        return Err(invalid(format!("block radius {ell} must be < N/2 = {}", config.side() as f64 / 2.0)));
    }
    Ok(())
}

type CylinderFn = dyn Fn(&[u32]) -> f64 + Send + Sync;

/// Bounded function of the occupancies in a finite window around the origin.
#[derive(Clone)]
pub struct Cylinder {
    name: String,
    offsets: Vec<[i64; 2]>,
    f: Arc<CylinderFn>,
    sup_norm: f64,
}

impl fmt::Debug for Cylinder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Cylinder").field("name", &self.name).field("offsets", &self.offsets).finish()
    }
}

impl Cylinder {
    pub fn new(
        name: impl Into<String>,
        offsets: Vec<[i64; 2]>,
        sup_norm: f64,
        f: impl Fn(&[u32]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), offsets, f: Arc::new(f), sup_norm }
    }

    /// `1{eta(0) = k}`.
    pub fn indicator(k: u32) -> Self {
        Self::new(format!("1{{eta(0)={k}}}"), vec![[0, 0]], 1.0, move |v| f64::from(u8::from(v[0] == k)))
    }

    /// `eta(0) ∧ c`.
    pub fn truncated(c: u32) -> Self {
        Self::new(format!("eta(0)^{c}"), vec![[0, 0]], c as f64, move |v| v[0].min(c) as f64)
    }

    /// `g(eta(0))`.
    pub fn jump_rate(g: &LocalJumpRate) -> Self {
        let g = g.clone();
        let sup = g.sup_bound();
        Self::new("g(eta(0))", vec![[0, 0]], sup, move |v| g.eval(v[0] as u64))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn offsets(&self) -> &[[i64; 2]] {
        &self.offsets
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn is_single_site(&self) -> bool {
        self.offsets == [[0, 0]]
    }

    pub fn eval(&self, values: &[u32]) -> f64 {
        (self.f)(values)
    }

    /// `(tau_x Psi)(eta)`.
    pub fn eval_at(&self, config: &Configuration, x: usize, scratch: &mut Vec<u32>) -> f64 {
        scratch.clear();
        scratch.extend(self.offsets.iter().map(|&o| config.get(config.shift(x, o))));
        self.eval(scratch)
    }
}

/// Default cylinder family: `1{eta(0)=k}` for `k = 0..4`, `eta(0) ∧ 5`, `g(eta(0))`.
pub fn default_cylinders(g: &LocalJumpRate) -> Vec<Cylinder> {
    let mut out: Vec<Cylinder> = (0..=4).map(Cylinder::indicator).collect();
    out.push(Cylinder::truncated(5));
    out.push(Cylinder::jump_rate(g));
    out
}

/// `(1/N^d) sum_x G(x/N) (tau_x Psi)(eta)`.
pub fn cylinder_average(config: &Configuration, psi: &Cylinder, test: impl Fn([f64; 2]) -> f64) -> f64 {
    let mut scratch = Vec::with_capacity(psi.offsets.len());
    let mut acc = 0.0;
    for x in 0..config.volume() {
        let w = test(config.position(x));
        if w != 0.0 {
            acc += w * psi.eval_at(config, x, &mut scratch);
        }
    }
    acc / config.volume() as f64
}

/// Times, block radii, cylinder functions and test functions for one run.
#[derive(Debug, Clone)]
pub struct ObservationPlan {
    pub times: Vec<f64>,
    pub radii: Vec<usize>,
    pub cylinders: Vec<Cylinder>,
    pub tests: Vec<TestFunction>,
}

impl ObservationPlan {
    pub fn new(times: Vec<f64>, radii: Vec<usize>, cylinders: Vec<Cylinder>, tests: Vec<TestFunction>) -> Result<Self> {
        if times.iter().any(|t| !(*t >= 0.0)) {
            return Err(invalid("observation times must be >= 0"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("observation times must be strictly increasing"));
        }
        Ok(Self { times, radii, cylinders, tests })
    }
}

/// Test functions on the torus used against cylinder averages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFunction {
    One,
    /// `sin(2 pi u_axis)`
    Sin(usize),
    /// `cos(2 pi u_axis)`
    Cos(usize),
    Zero,
}

impl TestFunction {
    pub fn eval(&self, u: [f64; 2]) -> f64 {
        let tau = std::f64::consts::TAU;
        match *self {
            TestFunction::One => 1.0,
            TestFunction::Sin(a) => (tau * u[a]).sin(),
            TestFunction::Cos(a) => (tau * u[a]).cos(),
            TestFunction::Zero => 0.0,
        }
    }

    pub fn name(&self) -> String {
        match self {
            TestFunction::One => "1".into(),
            TestFunction::Sin(a) => format!("sin(2pi u{a})"),
            TestFunction::Cos(a) => format!("cos(2pi u{a})"),
            TestFunction::Zero => "0".into(),
        }
    }

    /// `{1, sin 2pi u, cos 2pi u}` along each axis.
    pub fn defaults(d: usize) -> Vec<TestFunction> {
        let mut out = vec![TestFunction::One];
        for a in 0..d {
            out.push(TestFunction::Sin(a));
            out.push(TestFunction::Cos(a));
        }
        out
    }
}

/// Coarse-grain onto the `m`-point mesh of the PDE solver.
///
/// Node `j` sits at `u = (j+1)/m`, i.e. on site `(j+1)s` with `s = N/m`, and
/// carries the mean of the `s` sites (per axis) in the cell around it.
pub fn empirical_density_field(config: &Configuration, m: usize) -> Result<DensityField> {
    let n = config.side();
    if m == 0 || !n.is_multiple_of(m) {
        return Err(invalid(format!("mesh m={m} must divide N={n}")));
    }
    let s = n / m;
    let lo = (s / 2) as i64;
    let d = config.d();
    let mut values = vec![0.0; m.pow(d as u32)];
    let cell = (s as f64).powi(d as i32);
    let centre = |j: usize| ((j + 1) * s) % n;
    if d == 1 {
        for (j, v) in values.iter_mut().enumerate() {
            let c = centre(j);
            let sum: u64 = (0..s as i64).map(|o| config.get(config.shift(c, [o - lo, 0])) as u64).sum();
            *v = sum as f64 / cell;
        }
    } else {
        for j1 in 0..m {
            for j0 in 0..m {
                let c = config.index([centre(j0), centre(j1)]);
                let mut sum: u64 = 0;
                for o1 in 0..s as i64 {
                    for o0 in 0..s as i64 {
                        sum += config.get(config.shift(c, [o0 - lo, o1 - lo])) as u64;
                    }
                }
                values[j0 + m * j1] = sum as f64 / cell;
            }
        }
    }
    DensityField::new(d, m, values, 0.0)
}
