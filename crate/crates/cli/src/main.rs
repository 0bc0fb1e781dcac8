//! `qortho` command-line driver.

mod commands;
mod config;
mod output;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use qortho::geometry::Domain;

use config::{parse_pair, Overrides, RunFile, WeightKind};
use output::{render_checks, unix_now, Check, RunDir, RunManifest};

#[derive(Parser, Debug)]
#[command(name = "qortho", version, about = "Boundary quasi-orthogonality of Laplace eigenfunctions")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run file with a [domain] table and optional [params].
    #[arg(long, global = true, env = "QORTHO_CONFIG")]
    config: Option<PathBuf>,

    /// Run directory; `qortho-runs/<command>` by default.
    #[arg(long, global = true, env = "QORTHO_OUT_DIR")]
    out_dir: Option<PathBuf>,

    #[arg(long, global = true, env = "QORTHO_SEED")]
    seed: Option<u64>,

    /// Worker threads; all cores by default.
    #[arg(long, global = true, env = "QORTHO_THREADS")]
    threads: Option<usize>,

    /// Largest energy of closed-form spectra.
    #[arg(long, global = true, env = "QORTHO_EMAX")]
    emax: Option<f64>,

    /// Number of lowest closed-form modes (instead of --emax).
    #[arg(long, global = true, env = "QORTHO_MODES")]
    modes: Option<usize>,

    /// Wavenumber range `lo,hi` of scaling sweeps.
    #[arg(long, global = true, env = "QORTHO_KRANGE", value_parser = parse_pair)]
    krange: Option<[f64; 2]>,

    /// Window exponent in `|E_i - E| <= c E^beta`.
    #[arg(long, global = true, env = "QORTHO_BETA")]
    beta: Option<f64>,

    /// Origin offset `x,y`.
    #[arg(long, global = true, env = "QORTHO_ORIGIN", value_parser = parse_pair, allow_hyphen_values = true)]
    origin: Option<[f64; 2]>,

    /// Boundary weight of the Gram matrix written as the image.
    #[arg(long, global = true, env = "QORTHO_WEIGHT", value_enum)]
    weight: Option<WeightKind>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Boundary mesh and geometric diagnostics.
    Mesh,
    /// Closed-form spectrum (disk, rectangle), or a scaling sweep with --krange.
    Modes,
    /// Q matrix, its checks and the window decay table.
    Qmatrix,
    /// Scaling-method sweep over --krange.
    Scaling,
    /// Numeric residuals of the derived identities.
    Verify,
    /// Symbolic divergence system and boundary identities.
    Derive {
        /// Print the identity from row N of M^-1 (1-based).
        #[arg(long)]
        row: Option<usize>,
        /// Print the equal-energy identity for scalar N (1-based).
        #[arg(long)]
        equal: Option<usize>,
    },
    /// Classical spectrum and band profile of <r^2>.
    Bandprofile,
    /// Escribed circle and the bound constant at candidate origins.
    Origin,
    /// Level counts against the two-term Weyl estimate.
    Weyl,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Mesh => "mesh",
            Command::Modes => "modes",
            Command::Qmatrix => "qmatrix",
            Command::Scaling => "scaling",
            Command::Verify => "verify",
            Command::Derive { .. } => "derive",
            Command::Bandprofile => "bandprofile",
            Command::Origin => "origin",
            Command::Weyl => "weyl",
        }
    }
}

/// State shared by one command invocation.
pub struct Ctx {
    pub run: RunFile,
    pub out: RunDir,
    pub checks: Vec<Check>,
    pub report: String,
    pub seeds: serde_json::Map<String, serde_json::Value>,
}

impl Ctx {
    pub fn domain(&self) -> Result<Domain> {
        self.run.domain()
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    /// Append a report line and echo it.
    pub fn say(&mut self, line: impl AsRef<str>) {
        println!("{}", line.as_ref());
        let _ = writeln!(self.report, "{}", line.as_ref());
    }

    pub fn seed(&mut self, name: &str, v: u64) {
        self.seeds.insert(name.into(), v.into());
    }
}

fn run(cli: Cli) -> Result<bool> {
    let started = unix_now();
    let command = cli.command;
    let mut file = match &cli.config {
        Some(p) => RunFile::load(p)?,
        None => RunFile::default(),
    };
    Overrides {
        seed: cli.seed,
        emax: cli.emax,
        modes: cli.modes,
        krange: cli.krange,
        beta: cli.beta,
        origin: cli.origin,
        weight: cli.weight,
    }
    .apply(&mut file);
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("cannot configure threads")?;
    }
    let root = cli.out_dir.unwrap_or_else(|| PathBuf::from("qortho-runs").join(command.name()));
    let mut ctx = Ctx { run: file, out: RunDir::create(&root)?, checks: Vec::new(), report: String::new(), seeds: Default::default() };

    match command {
        Command::Mesh => commands::geometry::mesh(&mut ctx)?,
        Command::Origin => commands::geometry::origin(&mut ctx)?,
        Command::Modes => commands::spectral::modes(&mut ctx)?,
        Command::Qmatrix => commands::spectral::qmatrix(&mut ctx)?,
        Command::Scaling => commands::spectral::scaling(&mut ctx)?,
        Command::Weyl => commands::spectral::weyl(&mut ctx)?,
        Command::Derive { row, equal } => commands::symbolic::derive(&mut ctx, row, equal)?,
        Command::Verify => commands::symbolic::verify(&mut ctx)?,
        Command::Bandprofile => commands::dynamics::bandprofile(&mut ctx)?,
    }

    let passed = ctx.checks.iter().all(|c| c.pass);
    if !ctx.checks.is_empty() {
        let block = render_checks(&ctx.checks);
        print!("{block}");
        ctx.report.push_str(&block);
    }
    let report = std::mem::take(&mut ctx.report);
    ctx.out.text("report.txt", &report)?;
    let manifest = RunManifest {
        command: command.name(),
        version: format!("qortho {}", env!("CARGO_PKG_VERSION")),
        argv: std::env::args().collect(),
        config: &ctx.run,
        seeds: serde_json::Value::Object(ctx.seeds.clone()),
        started_unix: started,
        finished_unix: unix_now(),
        checks: &ctx.checks,
        passed,
        outputs: &ctx.out.outputs,
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(ctx.out.root.join("manifest.json"), json).context("cannot write manifest")?;
    println!("wrote {} files to {}", ctx.out.outputs.len() + 1, ctx.out.root.display());
    Ok(passed)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
