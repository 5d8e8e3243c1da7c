//! `xyent`: CSV and JSON reports for open XY chains.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use xyent::{parse_chain_spec, ChainSpec};

use crate::args::{Grid, Kind};
use crate::commands::Output;

#[derive(Parser, Debug)]
#[command(name = "xyent", version, about = "Entropic fluctuations of open XY chains")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Serialize)]
struct Common {
    /// Chain description (JSON). Defaults to the homogeneous chain with beta = (1, 2).
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    /// Output file; a `<out>.manifest.json` is written next to it. Stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Quadrature tolerance, also the oracle deviation threshold.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    /// Exit nonzero when any warning is raised.
    #[arg(long, global = true)]
    strict: bool,
    /// Worker threads; 0 lets rayon decide.
    #[arg(long, global = true, env = "XYENT_THREADS", default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// Finite-volume entropic functionals: kind,p,s,t,alpha,value.
    Finite {
        #[arg(long, short = 'm')]
        m: usize,
        /// Times, as a grid or comma list.
        #[arg(long, short = 't', allow_hyphen_values = true)]
        t: Grid,
        #[arg(long, default_value = "0:1:11", allow_hyphen_values = true)]
        alpha: Grid,
        /// Comma list of pressure:P, pressure:inf, es, gc:S.
        #[arg(long, value_delimiter = ',', default_value = "pressure:2")]
        kinds: Vec<Kind>,
    },
    /// Scaled functionals against their large-time limit: M,t,value_over_t,error.
    Converge {
        #[arg(long, short = 'm', value_delimiter = ',')]
        m: Vec<usize>,
        #[arg(long, short = 't', allow_hyphen_values = true)]
        t: Grid,
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value = "es")]
        kind: Kind,
    },
    /// Scattering matrix on an energy grid.
    Scatter {
        #[arg(long, short = 'e', allow_hyphen_values = true)]
        energies: Grid,
    },
    /// Steady-state heat fluxes and entropy production (JSON).
    Ness,
    /// Rate functions on a theta grid: theta,I_plus,I_fcs,symmetry_residual.
    Ldp {
        #[arg(long, allow_hyphen_values = true)]
        theta: Grid,
    },
    /// Cross-checks of the determinant formulas against exact diagonalization (JSON).
    Oracle {
        #[arg(long, short = 'm', default_value_t = 2)]
        m: usize,
        #[arg(long, short = 't', default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value = "-0.5,0.25,0.5,0.75,1.5", allow_hyphen_values = true)]
        alpha: Grid,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Finite { .. } => "finite",
            Command::Converge { .. } => "converge",
            Command::Scatter { .. } => "scatter",
            Command::Ness => "ness",
            Command::Ldp { .. } => "ldp",
            Command::Oracle { .. } => "oracle",
        }
    }

    fn run(&self, spec: &ChainSpec, tol: f64) -> anyhow::Result<Output> {
        match self {
            Command::Finite { m, t, alpha, kinds } => commands::finite(spec, *m, &t.0, &alpha.0, kinds),
            Command::Converge { m, t, alpha, kind } => commands::converge(spec, m, &t.0, *alpha, *kind, tol),
            Command::Scatter { energies } => commands::scatter(spec, &energies.0),
            Command::Ness => commands::ness(spec, tol),
            Command::Ldp { theta } => commands::ldp(spec, &theta.0, tol),
            Command::Oracle { m, t, alpha } => commands::oracle(spec, *m, *t, &alpha.0, tol),
        }
    }
}

#[derive(Serialize)]
struct RunManifest<'a> {
    subcommand: &'a str,
    params: serde_json::Value,
    spec: &'a ChainSpec,
    version: &'a str,
    duration_seconds: f64,
    warnings: &'a [String],
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    let c = &cli.common;
    if !(c.tol > 0.0) {
        anyhow::bail!("--tol must be positive, got {}", c.tol);
    }
    if c.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(c.threads).build_global()?;
    }
    let spec = match &c.spec {
        Some(path) => parse_chain_spec(path)?,
        None => ChainSpec::free(1.0, 2.0),
    };
    let start = Instant::now();
    let output = cli.command.run(&spec, c.tol)?;
    let manifest = RunManifest {
        subcommand: cli.command.name(),
        params: serde_json::json!({ "common": c, "command": &cli.command }),
        spec: &spec,
        version: env!("CARGO_PKG_VERSION"),
        duration_seconds: start.elapsed().as_secs_f64(),
        warnings: &output.warnings,
    };
    let manifest = commands::json(&manifest)?;
    match &c.out {
        Some(path) => {
            std::fs::write(path, &output.body).with_context(|| format!("writing {}", path.display()))?;
            let mpath = manifest_path(path);
            std::fs::write(&mpath, manifest).with_context(|| format!("writing {}", mpath.display()))?;
        }
        None => {
            print!("{}", output.body);
            eprint!("{manifest}");
        }
    }
    for w in &output.warnings {
        eprintln!("warning: {w}");
    }
    Ok(c.strict && !output.warnings.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("error: warnings raised under --strict");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
