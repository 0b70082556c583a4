//! `kdmc` command-line driver.

mod config;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use kdmc::harness::{
    self, default_dt_values, default_eps_values, estimate_order, Mode, RunConfig, DEFAULT_PARTICLES,
};
use kdmc::tally::{folded_profile, format_float, l2_diff, Histogram2D};
use kdmc::Domain;

use config::{ConfigError, ConfigFile};

#[derive(Debug, Parser)]
#[command(name = "kdmc", version, about = "Kinetic and kinetic-diffusion Monte Carlo particle transport")]
struct Cli {
    /// Run configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = "output")]
    out: PathBuf,
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[arg(long, global = true, value_name = "N")]
    particles: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate once and write the histogram and a run summary.
    Run {
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Convergence and runtime sweep toward one of the two limits.
    Sweep {
        #[arg(value_enum)]
        kind: SweepKind,
        /// Runs per point; the fastest wall time is reported.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        repetitions: u64,
    },
    /// Pointwise difference `a - b` of two histogram files.
    Compare { a: PathBuf, b: PathBuf },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Kinetic,
    Kdmc,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Kinetic => Mode::Kinetic,
            ModeArg::Kdmc => Mode::Kdmc,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SweepKind {
    Kinetic,
    Diffusive,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<kdmc::Error> for CliError {
    fn from(e: kdmc::Error) -> CliError {
        use kdmc::Error as E;
        match e {
            E::InvalidParameter(_) | E::ShapeMismatch(_) | E::Format(_) => CliError::Input(e.to_string()),
            E::EmptyTally | E::Consistency(_) | E::Io(_) => CliError::Runtime(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

/// Preset, then config file, then command-line flags.
fn resolve(cli: &Cli, base: RunConfig) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ConfigFile::load(path)?
            .apply(&base)
            .map_err(|(line, message)| ConfigError {
                path: path.clone(),
                line,
                message,
            })?,
        None => base,
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = cli.threads {
        cfg.workers = threads;
    }
    if let Some(particles) = cli.particles {
        cfg.particles = particles;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn write_file(
    dir: &Path,
    name: &str,
    body: impl FnOnce(&mut BufWriter<File>) -> kdmc::Result<()>,
) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let mut w = create(&path)?;
    body(&mut w).map_err(|e| match e {
        kdmc::Error::Io(e) => io_err(&path, e),
        other => other.into(),
    })?;
    w.flush().map_err(|e| io_err(&path, e))?;
    Ok(path)
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn cmd_run(cli: &Cli, mode: Option<ModeArg>) -> Result<(), CliError> {
    let base = RunConfig::kinetic_limit(DEFAULT_PARTICLES, 2f64.powi(-4))?;
    let mut cfg = resolve(cli, base)?;
    if let Some(m) = mode {
        cfg.mode = m.into();
    }
    prepare_out(&cli.out)?;
    let out = harness::run_simulation(&cfg)?;
    write_file(&cli.out, "histogram.csv", |w| out.histogram.write_csv(w))?;
    let summary = format!(
        "mode = {}\nparticles = {}\nseed = {}\nabsorbed_fraction = {}\nwall_time_s = {:.6}\ncollisions = {}\nsteps = {}\n",
        cfg.mode,
        cfg.particles,
        cfg.seed,
        format_float(out.absorbed_fraction()),
        out.wall_time,
        out.collisions,
        out.steps,
    );
    write_file(&cli.out, "summary.txt", |w| Ok(w.write_all(summary.as_bytes())?))?;
    print!("{summary}");
    Ok(())
}

fn print_row(name: &str, row: &harness::SweepRow) {
    println!(
        "{name} = {:<12.6e} error = {:.4e}  kinetic {:.3} s  kdmc {:.3} s",
        row.parameter, row.error, row.time_kinetic, row.time_kdmc
    );
}

fn cmd_sweep(cli: &Cli, kind: SweepKind, repetitions: usize) -> Result<(), CliError> {
    match kind {
        SweepKind::Kinetic => {
            let dts = default_dt_values();
            let base = resolve(cli, RunConfig::kinetic_limit(DEFAULT_PARTICLES, dts[0])?)?;
            prepare_out(&cli.out)?;
            let sweep = harness::sweep_kinetic_limit(&base, &dts, repetitions, |r| print_row("dt", r))?;
            write_file(&cli.out, "kinetic_convergence.csv", |w| {
                harness::write_convergence_csv(w, "delta_t", &sweep.rows)
            })?;
            write_file(&cli.out, "kinetic_runtime.csv", |w| {
                harness::write_runtime_csv(w, "delta_t", &sweep.rows)
            })?;
            let coarse = &sweep.rows[..sweep.rows.len().min(3)];
            let xs: Vec<f64> = coarse.iter().map(|r| r.parameter).collect();
            let es: Vec<f64> = coarse.iter().map(|r| r.error).collect();
            match estimate_order(&xs, &es) {
                Ok(p) => println!("fitted order in dt (three coarsest steps): {p:.3}"),
                Err(e) => println!("fitted order unavailable: {e}"),
            }
        }
        SweepKind::Diffusive => {
            let base = resolve(cli, RunConfig::diffusive_limit(DEFAULT_PARTICLES, 1.0)?)?;
            prepare_out(&cli.out)?;
            let eps = default_eps_values();
            let sweep = harness::sweep_diffusive_limit(&base, &eps, repetitions, |r| print_row("Rcx", r))?;
            let rates: Vec<f64> = sweep.rows.iter().map(|r| r.parameter).collect();
            write_file(&cli.out, "diffusive_convergence.csv", |w| {
                harness::write_convergence_csv(w, "Rcx", &sweep.rows)
            })?;
            write_file(&cli.out, "diffusive_runtime.csv", |w| {
                harness::write_runtime_csv(w, "Rcx", &sweep.rows)
            })?;
            write_file(&cli.out, "diffusive_profiles.csv", |w| {
                harness::write_profiles_csv(w, &rates, &sweep.profiles)
            })?;
            match harness::order_in_range(&sweep.rows, 16.0, 256.0) {
                Ok(p) => println!("fitted order in Rcx over [16, 256]: {p:.3}"),
                Err(e) => println!("fitted order unavailable: {e}"),
            }
        }
    }
    Ok(())
}

fn read_histogram(path: &Path, domain: &Domain) -> Result<Histogram2D, CliError> {
    let file = File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Histogram2D::read_csv(BufReader::new(file), domain)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn cmd_compare(cli: &Cli, a: &Path, b: &Path) -> Result<(), CliError> {
    // Only the extent matters here; a config file may supply it.
    let domain = match &cli.config {
        Some(_) => resolve(cli, RunConfig::kinetic_limit(1, 1.0)?)?.domain,
        None => Domain::unit(),
    };
    let ha = read_histogram(a, &domain)?;
    let hb = read_histogram(b, &domain)?;
    let diff = ha.pointwise_diff(&hb)?;
    let pa = folded_profile(&ha)?;
    let pb = folded_profile(&hb)?;
    let norm = l2_diff(&pa, &pb)?;
    prepare_out(&cli.out)?;
    write_file(&cli.out, "difference.csv", |w| diff.write_csv(w))?;
    write_file(&cli.out, "difference_profile.csv", |w| pa.pointwise_diff(&pb)?.write_csv(w))?;
    println!("folded profile 2-norm: {}", format_float(norm));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { mode } => cmd_run(&cli, *mode),
        Command::Sweep { kind, repetitions } => cmd_sweep(&cli, *kind, *repetitions as usize),
        Command::Compare { a, b } => cmd_compare(&cli, a, b),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
