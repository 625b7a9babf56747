//! Event-driven simulation of the zero range generator.
//!
//! A particle leaves site `x` at rate `g(eta_x)` and lands at `x + z`,
//! `z ~ p`. The next origin is drawn from a sum-tree over the site rates.

use std::io::{Read, Write};

use rand::Rng;

use super::lattice::Configuration;
use super::step::StepDistribution;
use super::tree::SumTree;
use crate::error::{Result, ZrpError};
use crate::rate::LocalJumpRate;

const REBUILD_EVERY: u64 = 10_000_000;
const RATE_LUT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpRecord {
    pub origin: usize,
    pub target: usize,
    pub displacement: [i64; 2],
    /// Microscopic waiting time before the jump.
    pub wait: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub events: u64,
    /// Remaining microscopic time when the run stopped in an absorbing state.
    pub halted_with_remaining: Option<f64>,
}

/// Binary stream of `(origin: u32, z: [i32; 2], wait: f64)` records, little endian.
pub struct EventLog {
    out: Box<dyn Write + Send>,
}

impl EventLog {
    pub const RECORD_BYTES: usize = 20;

    pub fn new(out: Box<dyn Write + Send>) -> Self {
        Self { out }
    }

    fn write(&mut self, r: &JumpRecord) -> Result<()> {
        let mut buf = [0u8; Self::RECORD_BYTES];
        buf[0..4].copy_from_slice(&(r.origin as u32).to_le_bytes());
        buf[4..8].copy_from_slice(&(r.displacement[0] as i32).to_le_bytes());
        buf[8..12].copy_from_slice(&(r.displacement[1] as i32).to_le_bytes());
        buf[12..20].copy_from_slice(&r.wait.to_le_bytes());
        self.out.write_all(&buf)?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Decode a stream written by [`EventLog`] into `(origin, z, wait)` triplets.
pub fn read_event_log<R: Read>(mut input: R) -> Result<Vec<(u32, [i32; 2], f64)>> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() % EventLog::RECORD_BYTES != 0 {
        return Err(ZrpError::Parse("truncated event log".into()));
    }
    Ok(bytes
        .chunks_exact(EventLog::RECORD_BYTES)
        .map(|c| {
            let o = u32::from_le_bytes(c[0..4].try_into().unwrap());
            let z0 = i32::from_le_bytes(c[4..8].try_into().unwrap());
            let z1 = i32::from_le_bytes(c[8..12].try_into().unwrap());
            let w = f64::from_le_bytes(c[12..20].try_into().unwrap());
            (o, [z0, z1], w)
        })
        .collect())
}

pub struct Simulator {
    g: LocalJumpRate,
    p: StepDistribution,
    config: Configuration,
    tree: SumTree,
    lut: Vec<f64>,
    clock: f64,
    clock_comp: f64,
    events: u64,
    since_rebuild: u64,
    log: Option<EventLog>,
}

impl Simulator {
    pub fn new(g: LocalJumpRate, p: StepDistribution, initial: Configuration) -> Result<Self> {
        if p.d() != initial.d() {
            return Err(ZrpError::Dimension(format!(
                "step distribution has d={} but configuration has d={}",
                p.d(),
                initial.d()
            )));
        }
        if p.max_range() as usize >= initial.side() {
            return Err(ZrpError::Dimension("step range must be smaller than the torus side".into()));
        }
        let lut: Vec<f64> = (0..RATE_LUT as u64).map(|k| g.eval(k)).collect();
        let weights: Vec<f64> = initial.eta().iter().map(|&k| rate(&g, &lut, k)).collect();
        let tree = SumTree::new(&weights);
        Ok(Self {
            g,
            p,
            config: initial,
            tree,
            lut,
            clock: 0.0,
            clock_comp: 0.0,
            events: 0,
            since_rebuild: 0,
            log: None,
        })
    }

    pub fn with_log(mut self, log: EventLog) -> Self {
        self.log = Some(log);
        self
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn into_config(self) -> Configuration {
        self.config
    }

    pub fn step_distribution(&self) -> &StepDistribution {
        &self.p
    }

    /// Microscopic time.
    pub fn clock(&self) -> f64 {
        self.clock
    }

    /// Macroscopic time `clock / N^2`.
    pub fn macro_time(&self) -> f64 {
        self.clock / (self.config.side() * self.config.side()) as f64
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    /// `sum_x g(eta_x)` as carried by the sum-tree.
    pub fn total_rate(&self) -> f64 {
        self.tree.total()
    }

    /// `sum_x g(eta_x)` recomputed from scratch.
    pub fn exact_total_rate(&self) -> f64 {
        self.config.eta().iter().map(|&k| rate(&self.g, &self.lut, k)).sum()
    }

    pub fn rebuild(&mut self) {
        self.tree.rebuild();
        self.since_rebuild = 0;
    }

    fn advance_clock(&mut self, dt: f64) {
        let y = dt - self.clock_comp;
        let t = self.clock + y;
        self.clock_comp = (t - self.clock) - y;
        self.clock = t;
    }

    #[inline]
    fn draw_wait<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<f64> {
        let total = self.tree.total();
        if !(total > 0.0) {
            return None;
        }
        let u: f64 = rng.gen();
        Some(-(1.0 - u).ln() / total)
    }

    #[inline]
    fn jump<R: Rng + ?Sized>(&mut self, rng: &mut R, wait: f64) -> Result<JumpRecord> {
        let x = self.tree.sample(rng);
        let z = self.p.sample(rng);
        let y = self.config.shift(x, z);
        self.config.move_particle(x, y);
        let (kx, ky) = (self.config.get(x), self.config.get(y));
        self.tree.set(x, rate(&self.g, &self.lut, kx));
        self.tree.set(y, rate(&self.g, &self.lut, ky));
        self.advance_clock(wait);
        self.events += 1;
        self.since_rebuild += 1;
        if self.since_rebuild >= REBUILD_EVERY {
            self.rebuild();
        }
        let rec = JumpRecord { origin: x, target: y, displacement: z, wait };
        if let Some(log) = self.log.as_mut() {
            log.write(&rec)?;
        }
        Ok(rec)
    }

    /// One event, or `None` in an absorbing state.
    pub fn step_event<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Option<JumpRecord>> {
        match self.draw_wait(rng) {
            None => Ok(None),
            Some(w) => self.jump(rng, w).map(Some),
        }
    }

    /// Run until the microscopic clock reaches `target`. The event that
    /// would overshoot is discarded; by memorylessness this is exact.
    pub fn run_until<R: Rng + ?Sized>(&mut self, target: f64, rng: &mut R) -> Result<RunSummary> {
        let start = self.events;
        loop {
            let Some(w) = self.draw_wait(rng) else {
                let remaining = (target - self.clock).max(0.0);
                return Ok(RunSummary {
                    events: self.events - start,
                    halted_with_remaining: (remaining > 0.0).then_some(remaining),
                });
            };
            if self.clock + w > target {
                self.clock = target.max(self.clock);
                self.clock_comp = 0.0;
                break;
            }
            self.jump(rng, w)?;
        }
        if let Some(log) = self.log.as_mut() {
            log.flush()?;
        }
        Ok(RunSummary { events: self.events - start, halted_with_remaining: None })
    }

    /// Run to macroscopic time `t_macro`, i.e. microscopic time `t_macro N^2`.
    pub fn run_diffusive<R: Rng + ?Sized>(&mut self, t_macro: f64, rng: &mut R) -> Result<RunSummary> {
        if !(t_macro >= 0.0) {
            return Err(crate::error::invalid(format!("t_macro must be >= 0, got {t_macro}")));
        }
        let n = self.config.side() as f64;
        self.run_until(t_macro * n * n, rng)
    }
}

#[inline]
fn rate(g: &LocalJumpRate, lut: &[f64], k: u32) -> f64 {
    match lut.get(k as usize) {
        Some(&r) => r,
        None => g.eval(k as u64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn nn() -> StepDistribution {
        StepDistribution::nearest_neighbor(1).unwrap()
    }

    #[test]
    fn absorbing_and_constant_rates() {
        let g0 = LocalJumpRate::evans(0.0).unwrap();
        let s = Simulator::new(g0.clone(), nn(), Configuration::zeros(1, 10).unwrap()).unwrap();
        assert_eq!(s.total_rate(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut s = s;
        assert!(s.step_event(&mut rng).unwrap().is_none());
        let r = s.run_diffusive(0.1, &mut rng).unwrap();
        assert!(r.halted_with_remaining.is_some());
        let s1 = Simulator::new(g0, nn(), Configuration::constant(1, 10, 1).unwrap()).unwrap();
        assert_eq!(s1.total_rate(), 10.0);
    }

    #[test]
    fn single_particle_moves_to_a_neighbour() {
        let g0 = LocalJumpRate::evans(0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20_000;
        let mut right = 0;
        for _ in 0..n {
            let mut eta = vec![0; 8];
            eta[0] = 1;
            let mut s = Simulator::new(g0.clone(), nn(), Configuration::new(1, 8, eta).unwrap()).unwrap();
            let rec = s.step_event(&mut rng).unwrap().unwrap();
            assert_eq!(rec.origin, 0);
            assert!(rec.target == 1 || rec.target == 7);
            assert_eq!(s.config().get(rec.target), 1);
            right += usize::from(rec.target == 1);
        }
        let se = (n as f64 * 0.25).sqrt();
        assert!((right as f64 - n as f64 / 2.0).abs() < 5.0 * se);
    }

    #[test]
    fn conservation_and_tree_consistency() {
        let g = LocalJumpRate::evans(3.0).unwrap();
        let eta: Vec<u32> = (0..64).map(|i| (i * 7 % 5) as u32).collect();
        let init = Configuration::new(1, 64, eta).unwrap();
        let total = init.total();
        let mut s = Simulator::new(g, StepDistribution::asymmetric(), init).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1_000_000 {
            s.step_event(&mut rng).unwrap();
        }
        assert_eq!(s.config().total(), total);
        assert_eq!(s.config().eta().iter().map(|&k| k as u64).sum::<u64>(), total);
        let exact = s.exact_total_rate();
        assert!((s.total_rate() - exact).abs() <= 1e-9 * exact);
    }

    #[test]
    fn origin_frequencies_match_rates() {
        let g = LocalJumpRate::evans(3.0).unwrap();
        let eta = vec![1, 0, 3, 2, 0, 5];
        let init = Configuration::new(1, 6, eta.clone()).unwrap();
        let s = Simulator::new(g.clone(), nn(), init).unwrap();
        // frozen snapshot: draw origins without applying jumps
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let mut counts = [0usize; 6];
        for _ in 0..n {
            counts[s.tree.sample(&mut rng)] += 1;
        }
        let total: f64 = eta.iter().map(|&k| g.eval(k as u64)).sum();
        for (x, &k) in eta.iter().enumerate() {
            let p = g.eval(k as u64) / total;
            let se = (n as f64 * p * (1.0 - p)).sqrt().max(1.0);
            assert!((counts[x] as f64 - n as f64 * p).abs() < 5.0 * se, "site {x}");
        }
    }

    #[test]
    fn zero_time_is_identity_and_seeds_are_deterministic() {
        let g = LocalJumpRate::evans(3.0).unwrap();
        let init = Configuration::new(1, 16, vec![1; 16]).unwrap();
        let run = |seed: u64, t: f64| {
            let mut s = Simulator::new(g.clone(), nn(), init.clone()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            s.run_diffusive(t, &mut rng).unwrap();
            s.into_config()
        };
        assert_eq!(run(1, 0.0), init);
        assert_eq!(run(9, 0.2).fingerprint(), run(9, 0.2).fingerprint());
        assert_ne!(run(9, 0.2).fingerprint(), run(10, 0.2).fingerprint());
    }

    #[test]
    fn event_log_round_trip() {
        use std::sync::{Arc, Mutex};
        #[derive(Clone)]
        struct Shared(Arc<Mutex<Vec<u8>>>);
        impl Write for Shared {
            fn write(&mut self, b: &[u8]) -> std::io::Result<usize> {
                self.0.lock().unwrap().extend_from_slice(b);
                Ok(b.len())
            }
            fn flush(&mut self) -> std::io::Result<()> {
                Ok(())
            }
        }
        let buf = Shared(Arc::new(Mutex::new(Vec::new())));
        let g = LocalJumpRate::evans(0.0).unwrap();
        let mut s = Simulator::new(g, nn(), Configuration::constant(1, 8, 2).unwrap())
            .unwrap()
            .with_log(EventLog::new(Box::new(buf.clone())));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut recs = Vec::new();
        for _ in 0..50 {
            recs.push(s.step_event(&mut rng).unwrap().unwrap());
        }
        let bytes = buf.0.lock().unwrap().clone();
        let back = read_event_log(bytes.as_slice()).unwrap();
        assert_eq!(back.len(), 50);
        for (r, b) in recs.iter().zip(&back) {
            assert_eq!(b.0 as usize, r.origin);
            assert_eq!(b.1[0] as i64, r.displacement[0]);
            assert_eq!(b.2, r.wait);
        }
    }
}
