//! `zrp-lab`: run one experiment per invocation and write its report.

// `!(x > 0.0)` style checks also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{ExperimentConfig, Kind};

#[derive(Debug, Parser)]
#[command(name = "zrp-lab", version, about = "Experiments on condensing zero range processes")]
struct Cli {
    #[arg(value_enum)]
    kind: Kind,
    /// Parameters as key=value; comma lists sweep.
    params: Vec<String>,
    /// File of `key = value` lines, overridden by PARAMS.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads for replicas; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long, default_value = "zrp-out")]
    out: PathBuf,
    /// Read or write the thermodynamic table at this path.
    #[arg(long)]
    thermo_cache: Option<PathBuf>,
    /// Write the binary jump log (simulate only).
    #[arg(long)]
    log_events: bool,
    /// Validate the configuration and stop.
    #[arg(long)]
    dry_run: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match ExperimentConfig::parse(cli.kind, cli.config.as_deref(), &cli.params) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let validated = match run::validate(&cfg) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {} rejected: {e}", cfg.kind.name());
            return ExitCode::from(2);
        }
    };
    if cli.dry_run {
        println!("{}: configuration ok", cfg.kind.name());
        for (k, v) in cfg.entries() {
            println!("  {k} = {v}");
        }
        return ExitCode::SUCCESS;
    }
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let ctx = run::Context { seed: cli.seed, out: cli.out.clone(), thermo_cache: cli.thermo_cache, log_events: cli.log_events };
    let (report, files) = match run::run(&cfg, &validated, &ctx) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {} failed: {e}", cfg.kind.name());
            return ExitCode::from(3);
        }
    };
    let written = output::write_report(&report, &cli.out)
        .and_then(|_| output::write_manifest(&cli.out, &cfg, cli.seed, rayon::current_num_threads(), &files));
    if let Err(e) = written {
        eprintln!("error: writing {}: {e}", cli.out.display());
        return ExitCode::from(3);
    }
    print!("{}", report.summary_text());
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
