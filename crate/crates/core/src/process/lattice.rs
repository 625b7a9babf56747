use crate::error::{Result, ZrpError};

/// Occupation numbers on the discrete torus `T_N^d`, `d` in {1, 2}.
///
/// Sites are stored row-major: `x = x0 + N * x1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    d: usize,
    side: usize,
    eta: Vec<u32>,
    total: u64,
}

impl Configuration {
    pub fn new(d: usize, side: usize, eta: Vec<u32>) -> Result<Self> {
        if !(d == 1 || d == 2) {
            return Err(ZrpError::Dimension(format!("d must be 1 or 2, got {d}")));
        }
        if side < 2 {
            return Err(ZrpError::Dimension(format!("side must be >= 2, got {side}")));
        }
        let volume = side.pow(d as u32);
        if eta.len() != volume {
            return Err(ZrpError::Dimension(format!(
                "expected {volume} occupancies for N={side}, d={d}, got {}",
                eta.len()
            )));
        }
        let total = eta.iter().map(|&k| k as u64).sum();
        Ok(Self { d, side, eta, total })
    }

    pub fn zeros(d: usize, side: usize) -> Result<Self> {
        Self::constant(d, side, 0)
    }

    pub fn constant(d: usize, side: usize, k: u32) -> Result<Self> {
        if !(d == 1 || d == 2) {
            return Err(ZrpError::Dimension(format!("d must be 1 or 2, got {d}")));
        }
        Self::new(d, side, vec![k; side.pow(d as u32)])
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn volume(&self) -> usize {
        self.eta.len()
    }

    pub fn eta(&self) -> &[u32] {
        &self.eta
    }

    #[inline]
    pub fn get(&self, x: usize) -> u32 {
        self.eta[x]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Move one particle from `from` to `to`. Caller guarantees `eta[from] > 0`.
    #[inline]
    pub(crate) fn move_particle(&mut self, from: usize, to: usize) {
        self.eta[from] -= 1;
        self.eta[to] += 1;
    }

    pub fn coords(&self, x: usize) -> [usize; 2] {
        if self.d == 1 {
            [x, 0]
        } else {
            [x % self.side, x / self.side]
        }
    }

    pub fn index(&self, c: [usize; 2]) -> usize {
        if self.d == 1 {
            c[0]
        } else {
            c[0] + self.side * c[1]
        }
    }

    /// `x + z` with periodic wrap.
    #[inline]
    pub fn shift(&self, x: usize, z: [i64; 2]) -> usize {
        let n = self.side as i64;
        if self.d == 1 {
            (x as i64 + z[0]).rem_euclid(n) as usize
        } else {
            let c0 = (x % self.side) as i64;
            let c1 = (x / self.side) as i64;
            ((c0 + z[0]).rem_euclid(n) + n * (c1 + z[1]).rem_euclid(n)) as usize
        }
    }

    /// Macroscopic position `x / N` of site `x`.
    pub fn position(&self, x: usize) -> [f64; 2] {
        let c = self.coords(x);
        let n = self.side as f64;
        [c[0] as f64 / n, c[1] as f64 / n]
    }

    /// Hash of the occupancies, for determinism checks.
    pub fn fingerprint(&self) -> u64 {
        // FNV-1a
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for &k in &self.eta {
            for b in k.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }

    /// CSV with one `(site, occupancy)` row per site.
    pub fn write_csv<W: std::io::Write>(&self, out: W, header: &[String]) -> Result<()> {
        let mut out = out;
        for line in header {
            writeln!(out, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["site", "occupancy"])?;
        for (x, k) in self.eta.iter().enumerate() {
            w.write_record([x.to_string(), k.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}
