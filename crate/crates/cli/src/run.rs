use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use zrp_core::measures::{ProductSampler, ProfileSpec};
use zrp_core::pde::{discretize_profile, Solver, SolverSettings};
use zrp_core::process::{EventLog, Simulator, StepDistribution};
use zrp_core::thermo::cache;
use zrp_core::verify::{
    eoe_scan, one_block_experiment, pde_vs_simulation, ratio_grid, taylor_gap_ratio_scan, ExperimentReport,
    HydroSettings, OneBlockSettings, Statistic,
};
use zrp_core::{LocalJumpRate, RateFamily, ThermoSettings, ThermoTable};

use crate::config::{ConfigError, ExperimentConfig, Kind};

#[derive(Debug, Clone)]
pub struct Context {
    pub seed: u64,
    pub out: PathBuf,
    pub thermo_cache: Option<PathBuf>,
    pub log_events: bool,
}

pub type AnyError = Box<dyn std::error::Error + Send + Sync>;

fn bad(msg: impl Into<String>) -> AnyError {
    Box::new(ConfigError(msg.into()))
}

/// Everything that can be checked without numerical work.
pub struct Validated {
    pub rate: LocalJumpRate,
    pub settings: ThermoSettings,
    pub profile: Option<ProfileSpec>,
    pub walk: Option<StepDistribution>,
}

fn closed_form_rho_c(g: &LocalJumpRate) -> f64 {
    match g.family() {
        RateFamily::Evans { b } if *b > 2.0 => 1.0 / (b - 2.0),
        _ => f64::INFINITY,
    }
}

pub fn validate(c: &ExperimentConfig) -> Result<Validated, AnyError> {
    let rate = match c.raw("family") {
        "evans" => {
            let b: f64 = c.get("b")?;
            if !(b >= 0.0) {
                return Err(bad(format!("b={b}: the Evans rate 1 + b/k needs b >= 0")));
            }
            LocalJumpRate::evans(b)?
        }
        "table" => {
            let v: Vec<f64> = c.list("rates")?;
            if v.is_empty() {
                return Err(bad("family=table needs rates=g(1),g(2),..."));
            }
            LocalJumpRate::table(v)?
        }
        other => return Err(bad(format!("family={other:?}: expected evans or table"))),
    };
    let settings = ThermoSettings { tol: c.get("tol")?, k_max: c.get("k_max")?, ..ThermoSettings::default() };
    let rho_c = closed_form_rho_c(&rate);
    let needs_profile = matches!(c.kind, Kind::Sample | Kind::Simulate | Kind::Pde | Kind::VerifyHydro | Kind::VerifyOneBlock);
    let profile = if needs_profile {
        let margin: f64 = c.get("margin")?;
        let p = match c.kind {
            Kind::VerifyOneBlock => ProfileSpec::constant(c.get("rho")?, margin)?,
            _ => match c.raw("profile") {
                "const" => ProfileSpec::constant(c.get("rho")?, margin)?,
                "sin" => ProfileSpec::sinusoidal(c.get("rho")?, c.get("amp")?, margin)?,
                "table" => ProfileSpec::table(c.list("values")?, margin)?,
                other => return Err(bad(format!("profile={other:?}: expected const, sin or table"))),
            },
        };
        if p.max() > rho_c - margin {
            return Err(bad(format!(
                "profile maximum {} is not sub-critical: it must stay below rho_c - margin = {} - {margin}",
                p.max(),
                rho_c
            )));
        }
        Some(p)
    } else {
        None
    };
    let walk = match c.raw("walk") {
        "" => None,
        "nn" => Some(StepDistribution::nearest_neighbor(c.get("d")?)?),
        "asym" => {
            if c.get::<usize>("d")? != 1 {
                return Err(bad("walk=asym is one-dimensional; use d=1"));
            }
            Some(StepDistribution::asymmetric())
        }
        other => return Err(bad(format!("walk={other:?}: expected nn or asym"))),
    };
    match c.kind {
        Kind::VerifyEoe => {
            let l: usize = c.get("L")?;
            if !(l == 1 || l == 2) {
                return Err(bad(format!("L={l}: marginals of one or two sites only")));
            }
            if c.list::<usize>("N")?.is_empty() {
                return Err(bad("N list is empty"));
            }
        }
        Kind::ScanRatio => {
            let eps: f64 = c.get("eps")?;
            if !(rho_c.is_finite() && eps > 0.0 && eps < rho_c) {
                return Err(bad(format!("scan-ratio needs a finite rho_c and 0 < eps < rho_c (rho_c = {rho_c}, eps = {eps})")));
            }
        }
        _ => {}
    }
    Ok(Validated { rate, settings, profile, walk })
}

fn thermo_table(v: &Validated, ctx: &Context) -> Result<ThermoTable, AnyError> {
    Ok(match &ctx.thermo_cache {
        Some(p) => cache::load_or_build(&v.rate, v.settings, p)?,
        None => ThermoTable::new(v.rate.clone(), v.settings)?,
    })
}

fn header(c: &ExperimentConfig, ctx: &Context) -> Vec<String> {
    let mut h = vec![format!("experiment: {}", c.kind.name()), format!("seed: {}", ctx.seed)];
    h.extend(c.entries().map(|(k, v)| format!("{k}: {v}")));
    h
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, AnyError> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

pub fn run(c: &ExperimentConfig, v: &Validated, ctx: &Context) -> Result<(ExperimentReport, Vec<String>), AnyError> {
    let start = Instant::now();
    std::fs::create_dir_all(&ctx.out)?;
    let mut report = ExperimentReport::new(c.kind.name());
    report.param("seed", ctx.seed);
    for (k, val) in c.entries() {
        report.param(k, val);
    }
    let t = thermo_table(v, ctx)?;
    let mut files = Vec::new();
    let dir = ctx.out.as_path();
    let hdr = header(c, ctx);
    match c.kind {
        Kind::Thermo => {
            report.push(Statistic::exact("phi_c", t.phi_c(), "fugacity"));
            report.push(Statistic::exact("Z(phi_c)", t.z_critical(), ""));
            report.push(Statistic::exact("rho_c", t.rho_c(), "density"));
            for phi in c.list::<f64>("phi")? {
                report.push(Statistic::exact(format!("Z[phi={phi}]"), t.partition_function(phi)?, ""));
                report.push(Statistic::exact(format!("R[phi={phi}]"), t.mean_density(phi)?, "density"));
            }
            for rho in c.list::<f64>("rho")? {
                report.push(Statistic::exact(format!("Phi[rho={rho}]"), t.mean_jump_rate(rho)?, "fugacity"));
            }
            cache::save(&t, &dir.join("thermo_grid.csv"))?;
            files.push("thermo_grid.csv".into());
        }
        Kind::Sample => {
            let (n, d): (usize, usize) = (c.get("N")?, c.get("d")?);
            let profile = v.profile.as_ref().expect("validated");
            let sampler = ProductSampler::new(&t, profile, n, d, 1e-12)?;
            let config = sampler.sample(&mut ChaCha8Rng::seed_from_u64(ctx.seed));
            report.push(Statistic::exact("particles", config.total() as f64, "count"));
            report.push(Statistic::exact("density", config.total() as f64 / config.volume() as f64, "density"));
            report.push(Statistic::exact("distinct_laws", sampler.distinct_laws() as f64, "count"));
            config.write_csv(create(dir, "configuration.csv")?, &hdr)?;
            sampler.law_at(0).write_csv(create(dir, "site0_pmf.csv")?, &hdr)?;
            files.extend(["configuration.csv".into(), "site0_pmf.csv".into()]);
        }
        Kind::Simulate => {
            let (n, d, tm): (usize, usize, f64) = (c.get("N")?, c.get("d")?, c.get("t")?);
            let profile = v.profile.as_ref().expect("validated");
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
            let initial = ProductSampler::new(&t, profile, n, d, 1e-12)?.sample(&mut rng);
            let before = initial.total();
            initial.write_csv(create(dir, "initial.csv")?, &hdr)?;
            let mut sim = Simulator::new(t.rate().clone(), v.walk.clone().expect("validated"), initial)?;
            if ctx.log_events {
                sim = sim.with_log(EventLog::new(Box::new(create(dir, "events.bin")?)));
                files.push("events.bin".into());
            }
            let summary = sim.run_diffusive(tm, &mut rng)?;
            let fin = sim.into_config();
            fin.write_csv(create(dir, "final.csv")?, &hdr)?;
            files.extend(["initial.csv".into(), "final.csv".into()]);
            report.param("fingerprint", format!("{:016x}", fin.fingerprint()));
            report.push(Statistic::exact("events", summary.events as f64, "count"));
            report.push(Statistic::exact("particles", fin.total() as f64, "count"));
            report.check("particle count conserved", fin.total() == before, format!("{before} -> {}", fin.total()));
        }
        Kind::Pde => {
            let (m, d, tm): (usize, usize, f64) = (c.get("m")?, c.get("d")?, c.get("t")?);
            let ext = t.parabolic_extension(c.get("eps")?, c.get("order")?)?;
            let scale: f64 = c.get("sigma_scale")?;
            let sigma = v.walk.as_ref().expect("validated").covariance().map(|r| r.map(|x| x * scale));
            let mut solver = Solver::new(&ext, SolverSettings::new(sigma))?;
            let initial = discretize_profile(v.profile.as_ref().expect("validated"), m, d, t.rho_c())?;
            let (fin, monitor) = solver.solve_to_time(&initial, tm)?;
            initial.write_csv(create(dir, "initial_field.csv")?, &hdr)?;
            fin.write_csv(create(dir, "field.csv")?, &hdr)?;
            files.extend(["initial_field.csv".into(), "field.csv".into()]);
            let drift = (fin.mass() / initial.mass() - 1.0).abs();
            report.push(Statistic::exact("steps", monitor.steps as f64, "count"));
            report.push(Statistic::exact("max", fin.max(), "density"));
            report.push(Statistic::exact("min", fin.min(), "density"));
            report.push(Statistic::exact("mass_drift", drift, "relative"));
            report.check("extrema monitor", monitor.accepted(), format!("{} violations, {} guard hits", monitor.violations.len(), monitor.guard_hits));
            report.check("mass conserved", drift < 1e-10, format!("relative drift {drift:.2e}"));
        }
        Kind::VerifyEoe => {
            let rho: f64 = c.get("rho")?;
            let pts = eoe_scan(&t, rho, &c.list::<usize>("N")?, c.get("L")?)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["N", "K", "entropy", "tail_error", "canonical_mean"])?;
            for p in &pts {
                report.push(Statistic::exact(format!("H[N={}]", p.n), p.entropy, "nats"));
                w.write_record([p.n.to_string(), p.k.to_string(), format!("{:e}", p.entropy), format!("{:e}", p.tail_error), format!("{:e}", p.canonical_mean)])?;
            }
            std::fs::write(dir.join("eoe.csv"), w.into_inner().map_err(|e| bad(e.to_string()))?)?;
            files.push("eoe.csv".into());
            let dec = pts.windows(2).all(|w| w[1].entropy < w[0].entropy);
            report.check("H strictly decreasing in N", dec, String::new());
            if rho < t.rho_c() {
                let last = pts.last().expect("non-empty");
                report.check("H at largest N below 1e-2", last.entropy < 1e-2, format!("H = {:.3e}", last.entropy));
            }
            let mean_ok = pts.iter().all(|p| (p.canonical_mean - p.k as f64 / p.n as f64).abs() < 1e-12);
            report.check("canonical mean equals K/N", mean_ok, String::new());
        }
        Kind::VerifyOneBlock => {
            let s = OneBlockSettings {
                n: c.get("N")?,
                d: c.get("d")?,
                t_final: c.get("t")?,
                snapshots: c.get("snapshots")?,
                radii: c.list("ell")?,
                replicas: c.get("replicas")?,
                seed: ctx.seed,
            };
            if s.radii.len() < 2 {
                return Err(bad("ell needs at least two radii to compare"));
            }
            let pts = one_block_experiment(&t, v.walk.as_ref().expect("validated"), v.profile.as_ref().expect("validated"), &s)?;
            for p in &pts {
                report.push(Statistic::sampled(format!("V[l={}]", p.ell), p.value, p.std_err, s.replicas, "rate"));
            }
            let (a, b) = (pts[0], pts[pts.len() - 1]);
            let se = a.std_err.hypot(b.std_err);
            report.check(
                format!("V[l={}] below V[l={}] by 3 se", b.ell, a.ell),
                a.value - b.value > 3.0 * se,
                format!("separation {:.2} se", (a.value - b.value) / se),
            );
        }
        Kind::VerifyHydro => {
            let mut s = HydroSettings::new(c.list("N")?, c.get("t")?, c.get("replicas")?, ctx.seed);
            s.d = c.get("d")?;
            s.t_early = c.get("t_early")?;
            s.compare_mesh = c.get("mesh")?;
            s.pde_mesh = c.get("pde_mesh")?;
            s.eps = c.get("eps")?;
            s.extension_order = c.get("order")?;
            s.sigma_scale = c.get("sigma_scale")?;
            s.bootstrap = c.get("bootstrap")?;
            if s.sizes.len() < 2 {
                return Err(bad("N needs at least two sizes to compare"));
            }
            let out = pde_vs_simulation(&t, v.walk.as_ref().expect("validated"), v.profile.as_ref().expect("validated"), &s)?;
            for p in &out.points {
                report.push(Statistic::sampled(format!("L1[N={}]", p.n), p.l1, p.l1_std_err, s.replicas, "density"));
                report.push(Statistic::sampled(format!("deviation[N={}]", p.n), p.deviation, p.deviation_std_err, s.replicas, ""));
                report.push(Statistic::exact(format!("events[N={}]", p.n), p.mean_events, "count"));
            }
            out.pde.write_csv(create(dir, "pde_field.csv")?, &hdr)?;
            files.push("pde_field.csv".into());
            let (lo, hi) = (out.points[0], out.points[out.points.len() - 1]);
            let se = lo.l1_std_err.hypot(hi.l1_std_err);
            let dmax: f64 = c.get("deviation_max")?;
            report.check(
                format!("L1[N={}] below L1[N={}] by 3 se", hi.n, lo.n),
                lo.l1 - hi.l1 > 3.0 * se,
                format!("separation {:.2} se", (lo.l1 - hi.l1) / se),
            );
            report.check(format!("deviation[N={}] below {dmax}", hi.n), hi.deviation < dmax, format!("{:.4}", hi.deviation));
            report.check("PDE extrema monitor", out.monitor_accepted(), format!("{} steps", out.monitor.steps));
            report.check(
                format!("PDE minimum rises by t = {}", s.t_early),
                out.min_early > out.min_initial,
                format!("{:.6} -> {:.6}", out.min_initial, out.min_early),
            );
        }
        Kind::ScanRatio => {
            let eps: f64 = c.get("eps")?;
            let (lmax, n, delta): (f64, usize, f64) = (c.get("lambda_max")?, c.get("n")?, c.get("delta")?);
            let top = t.rho_c() - eps;
            let scan = |k: usize| taylor_gap_ratio_scan(&t, eps, &ratio_grid(lmax, 4 * k), &ratio_grid(top, k), delta);
            let (a, b) = (scan(n)?, scan(2 * n)?);
            report.push(Statistic::exact(format!("sup[n={n}]"), a.sup, ""));
            report.push(Statistic::exact(format!("sup[n={}]", 2 * n), b.sup, ""));
            report.param("argmax", format!("lambda={} rho={}", b.argmax.0, b.argmax.1));
            report.param("skipped_lambdas", b.skipped_lambdas);
            let change = (b.sup - a.sup).abs() / a.sup;
            report.check("sup finite", a.sup.is_finite() && b.sup.is_finite(), String::new());
            report.check("sup stable under refinement", change < 0.05, format!("relative change {change:.2e}"));
        }
    }
    report.runtime_s = start.elapsed().as_secs_f64();
    Ok((report, files))
}
