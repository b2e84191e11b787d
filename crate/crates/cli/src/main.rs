use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use cbs_cli::config::{parse_config_as, Mode};
use cbs_cli::presets::{self, Job};
use cbs_cli::run::{plot_columns, validity_warnings};
use cbs_cli::{run_to_dir, ConfigErrors};

/// Coherent backscattering sweeps: quadrature, Monte Carlo and coupled dipoles.
#[derive(Parser, Debug)]
#[command(name = "cbs", version)]
struct Args {
    /// scalar, vectorial, classical or spectrum (with --config), or a preset
    /// fig9, fig10, fig11, fig12, fig13.
    target: String,
    /// Configuration file. Required for modes, rejected for presets.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for the stochastic modes; overrides the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Monte-Carlo samples per point (realizations in classical mode).
    #[arg(long)]
    samples: Option<u64>,
    /// Worker threads. Results do not depend on this.
    #[arg(long)]
    workers: Option<usize>,
}

const CONFIG_ERROR: u8 = 1;
const RUN_ERROR: u8 = 2;

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(CONFIG_ERROR)
}

fn jobs(args: &Args) -> Result<Vec<Job>, ExitCode> {
    if let Some(mode) = Mode::parse(&args.target) {
        let Some(path) = &args.config else {
            return Err(fail(format!("mode `{}` needs --config <file>", args.target)));
        };
        let text = std::fs::read_to_string(path).map_err(|e| fail(format!("{}: {e}", path.display())))?;
        let config = parse_config_as(&text, Some(mode)).map_err(|e| report(path, &e))?;
        let plot = plot_columns(&config);
        return Ok(vec![Job { config, plot }]);
    }
    match presets::preset(&args.target) {
        Some(p) if args.config.is_some() => Err(fail(format!("preset `{}` takes no --config", p.name))),
        Some(p) => {
            eprintln!("{}: {}", p.name, p.description);
            Ok(p.jobs)
        }
        None => Err(fail(format!(
            "unknown mode or preset `{}` (modes: {}; presets: {})",
            args.target,
            Mode::ALL.join(", "),
            presets::NAMES.join(", ")
        ))),
    }
}

fn report(path: &std::path::Path, errs: &ConfigErrors) -> ExitCode {
    for e in &errs.0 {
        eprintln!("error: {}: {e}", path.display());
    }
    ExitCode::from(CONFIG_ERROR)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { CONFIG_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut jobs = match jobs(&args) {
        Ok(j) => j,
        Err(code) => return code,
    };
    for job in &mut jobs {
        let c = &mut job.config;
        if let Some(seed) = args.seed {
            c.seed = Some(seed);
        }
        if let Some(n) = args.samples {
            if c.mode == Mode::Classical {
                c.realizations = n as usize;
            } else {
                c.samples = n;
            }
        }
        if let Err(e) = c.check() {
            return fail(format!("{}: {e}", c.label));
        }
    }
    for job in &jobs {
        let c = &job.config;
        let dir = args.out.clone().or_else(|| c.out.clone()).unwrap_or_else(|| PathBuf::from("cbs-out"));
        for w in validity_warnings(c) {
            eprintln!("warning: {}: {w}", c.label);
        }
        eprintln!("{}: {} points", c.label, c.values.len());
        match run_to_dir(c, &job.plot, &dir, args.workers) {
            Ok((_, files)) => eprintln!("{}: wrote {}", c.label, files.csv.display()),
            Err(e) => {
                eprintln!("error: {}: {e}", c.label);
                return ExitCode::from(RUN_ERROR);
            }
        }
    }
    ExitCode::SUCCESS
}
