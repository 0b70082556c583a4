//! Parallel simulation driver, the kinetic-limit and diffusive-limit sweeps,
//! and convergence-order fits.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::model::{Background, Domain, Maxwellian};
use crate::rng::derive_stream;
use crate::sampling::{sample_source, SourceSpec};
use crate::tally::{folded_profile, format_float, l2_diff, CountTally, Histogram2D, Profile1D};
use crate::transport::{simulate_kdmc, simulate_kinetic, StepConfig};

pub const DEFAULT_BLOCK_SIZE: u64 = 1 << 16;
pub const DEFAULT_PARTICLES: u64 = 10_000_000;
pub const DEFAULT_SEED: u64 = 1;

/// Kinetic-limit setup: source mean speed, collision rate and
/// post-collisional mean speed.
pub const KINETIC_SOURCE_SPEED: f64 = 0.15625;
pub const KINETIC_RATE: f64 = 0.78125;
pub const KINETIC_COLLISION_SPEED: f64 = 0.013847;
pub const KINETIC_T_END: f64 = 1.0;

/// Diffusive-limit setup.
pub const DIFFUSIVE_SOURCE_SPEED: f64 = 0.0625;
pub const DIFFUSIVE_DT: f64 = 1.0;
pub const DIFFUSIVE_T_END: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Kinetic,
    Kdmc,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Kinetic => "kinetic",
            Mode::Kdmc => "kdmc",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "kinetic" => Ok(Mode::Kinetic),
            "kdmc" => Ok(Mode::Kdmc),
            other => Err(invalid(format!("unknown mode '{other}' (expected kinetic or kdmc)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub particles: u64,
    pub seed: u64,
    pub workers: usize,
    /// Particles per work unit claimed by a worker.
    pub block_size: u64,
    pub step: StepConfig,
    pub source: SourceSpec,
    pub background: Background,
    pub domain: Domain,
    pub nx: usize,
    pub ny: usize,
}

/// Worker count used when none is configured.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Post-collisional mean speed `(1/eps) sqrt(pi/10) / 512` of the
/// diffusive-limit family.
pub fn diffusive_collision_speed(eps: f64) -> f64 {
    (std::f64::consts::PI / 10.0).sqrt() / 512.0 / eps
}

/// Collision rate `1 / (128 eps^2)` of the diffusive-limit family.
pub fn diffusive_rate(eps: f64) -> f64 {
    1.0 / (128.0 * eps * eps)
}

/// Homogeneous background of the diffusive-limit family at scaling `eps`.
pub fn diffusive_background(eps: f64) -> Result<Background> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    Background::homogeneous(
        diffusive_rate(eps),
        Maxwellian::from_mean_speed(diffusive_collision_speed(eps))?,
    )
}

impl RunConfig {
    /// Kinetic-regime test case on the unit square with a centered source.
    pub fn kinetic_limit(particles: u64, dt: f64) -> Result<Self> {
        let domain = Domain::unit();
        Ok(RunConfig {
            mode: Mode::Kdmc,
            particles,
            seed: DEFAULT_SEED,
            workers: default_workers(),
            block_size: DEFAULT_BLOCK_SIZE,
            step: StepConfig::new(dt, KINETIC_T_END)?,
            source: SourceSpec::centered(&domain, KINETIC_SOURCE_SPEED)?,
            background: Background::homogeneous(
                KINETIC_RATE,
                Maxwellian::from_mean_speed(KINETIC_COLLISION_SPEED)?,
            )?,
            domain,
            nx: 128,
            ny: 128,
        })
    }

    /// Diffusive-regime test case at scaling `eps`.
    pub fn diffusive_limit(particles: u64, eps: f64) -> Result<Self> {
        let domain = Domain::unit();
        Ok(RunConfig {
            mode: Mode::Kdmc,
            particles,
            seed: DEFAULT_SEED,
            workers: default_workers(),
            block_size: DEFAULT_BLOCK_SIZE,
            step: StepConfig::new(DIFFUSIVE_DT, DIFFUSIVE_T_END)?,
            source: SourceSpec::centered(&domain, DIFFUSIVE_SOURCE_SPEED)?,
            background: diffusive_background(eps)?,
            domain,
            nx: 128,
            ny: 128,
        })
    }

    pub fn with_mode(&self, mode: Mode) -> Self {
        RunConfig { mode, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.particles == 0 {
            return Err(invalid("particle count must be at least 1"));
        }
        if self.workers == 0 {
            return Err(invalid("worker count must be at least 1"));
        }
        if self.block_size == 0 {
            return Err(invalid("block size must be at least 1"));
        }
        if self.nx == 0 || self.ny == 0 {
            return Err(invalid("tally grid needs at least one cell per axis"));
        }
        if !self.domain.contains(self.source.position) {
            return Err(invalid("source must lie strictly inside the domain"));
        }
        Ok(())
    }
}

/// Everything a run produces. `histogram` is normalized by the number of
/// injected particles; `tally` keeps the exact integer counts.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub tally: CountTally,
    pub histogram: Histogram2D,
    /// Seconds spent in the transport and tally loop.
    pub wall_time: f64,
    pub collisions: u64,
    pub steps: u64,
}

impl RunOutput {
    pub fn absorbed_fraction(&self) -> f64 {
        self.histogram.absorbed_fraction()
    }

    pub fn folded_profile(&self) -> Result<Profile1D> {
        folded_profile(&self.histogram)
    }
}

struct Partial {
    tally: CountTally,
    collisions: u64,
    steps: u64,
}

impl Partial {
    fn merge(mut self, other: Partial) -> Result<Partial> {
        self.tally.merge(&other.tally)?;
        self.collisions += other.collisions;
        self.steps += other.steps;
        Ok(self)
    }
}

fn simulate_block(cfg: &RunConfig, block: u64, mut acc: Partial) -> Result<Partial> {
    let start = block * cfg.block_size;
    let end = (start + cfg.block_size).min(cfg.particles);
    for index in start..end {
        let mut rng = derive_stream(cfg.seed, index);
        let p = sample_source(&mut rng, &cfg.source);
        let outcome = match cfg.mode {
            Mode::Kinetic => simulate_kinetic(&p, &cfg.background, &cfg.domain, &cfg.step, &mut rng),
            Mode::Kdmc => simulate_kdmc(&p, &cfg.background, &cfg.domain, &cfg.step, &mut rng)?,
        };
        acc.tally.record(&outcome);
        acc.collisions += outcome.collision_count;
        acc.steps += outcome.step_count;
    }
    Ok(acc)
}

/// Simulates `cfg.particles` trajectories, particle `i` on stream
/// `(cfg.seed, i)`. The result does not depend on `cfg.workers`.
pub fn run_simulation(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| invalid(format!("cannot start {} workers: {e}", cfg.workers)))?;
    let template = CountTally::new(&cfg.domain, cfg.nx, cfg.ny)?;
    let empty = || Partial {
        tally: template.clone(),
        collisions: 0,
        steps: 0,
    };
    let blocks = usize::try_from(cfg.particles.div_ceil(cfg.block_size))
        .map_err(|_| invalid("too many particle blocks for this platform"))?;

    let clock = Instant::now();
    let merged = pool.install(|| {
        (0..blocks)
            .into_par_iter()
            .with_max_len(1)
            .try_fold(empty, |acc, block| simulate_block(cfg, block as u64, acc))
            .try_reduce(empty, Partial::merge)
    })?;
    let wall_time = clock.elapsed().as_secs_f64();

    let histogram = merged.tally.to_histogram().normalize()?;
    Ok(RunOutput {
        tally: merged.tally,
        histogram,
        wall_time,
        collisions: merged.collisions,
        steps: merged.steps,
    })
}

/// Runs `repetitions` times and keeps the fastest wall time; the physics
/// output is identical across repetitions.
pub fn run_timed(cfg: &RunConfig, repetitions: usize) -> Result<RunOutput> {
    let mut best = run_simulation(cfg)?;
    for _ in 1..repetitions {
        let again = run_simulation(cfg)?;
        best.wall_time = best.wall_time.min(again.wall_time);
    }
    Ok(best)
}

/// One point of a convergence sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    /// Time step (kinetic-limit sweep) or collision rate (diffusive-limit).
    pub parameter: f64,
    /// 2-norm of the folded-profile difference, kinetic vs KDMC.
    pub error: f64,
    pub time_kinetic: f64,
    pub time_kdmc: f64,
}

#[derive(Debug, Clone)]
pub struct KineticSweep {
    pub rows: Vec<SweepRow>,
    /// The single kinetic reference shared by every time step.
    pub reference: RunOutput,
    pub kdmc: Vec<RunOutput>,
}

/// Time steps `1, 1/2, ..., 1/16`.
pub fn default_dt_values() -> Vec<f64> {
    (0..5).map(|k| 2f64.powi(-k)).collect()
}

/// KDMC against one kinetic reference for each time step in `dt_values`.
/// `on_row` is called as each point completes.
pub fn sweep_kinetic_limit(
    base: &RunConfig,
    dt_values: &[f64],
    repetitions: usize,
    mut on_row: impl FnMut(&SweepRow),
) -> Result<KineticSweep> {
    if dt_values.is_empty() {
        return Err(invalid("kinetic sweep needs at least one time step"));
    }
    if dt_values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("time steps must be strictly descending"));
    }
    let reference = run_timed(&base.with_mode(Mode::Kinetic), repetitions)?;
    let ref_profile = reference.folded_profile()?;
    let mut rows = Vec::with_capacity(dt_values.len());
    let mut kdmc = Vec::with_capacity(dt_values.len());
    for &dt in dt_values {
        let cfg = RunConfig {
            mode: Mode::Kdmc,
            step: StepConfig::new(dt, base.step.t_end)?,
            ..base.clone()
        };
        let out = run_timed(&cfg, repetitions)?;
        let row = SweepRow {
            parameter: dt,
            error: l2_diff(&ref_profile, &out.folded_profile()?)?,
            time_kinetic: reference.wall_time,
            time_kdmc: out.wall_time,
        };
        on_row(&row);
        rows.push(row);
        kdmc.push(out);
    }
    Ok(KineticSweep {
        rows,
        reference,
        kdmc,
    })
}

#[derive(Debug, Clone)]
pub struct DiffusiveSweep {
    pub rows: Vec<SweepRow>,
    pub kinetic: Vec<RunOutput>,
    pub kdmc: Vec<RunOutput>,
    /// Folded pointwise differences, kinetic minus KDMC, one per row.
    pub profiles: Vec<Profile1D>,
}

/// `eps = 2^{-k/4}` for `k = 0..=30`: rates `2^{k/2} / 128` from 1/128 to
/// 256, so both powers of two and the intermediate values such as
/// `8 sqrt 2 = 11.314` are present.
pub fn default_eps_values() -> Vec<f64> {
    (0..31).map(|k| 2f64.powf(-(k as f64) / 4.0)).collect()
}

/// Kinetic and KDMC pairs along the diffusive scaling: for each `eps` the
/// background of `base` is replaced by [`diffusive_background`]; step,
/// source and tally come from `base`.
pub fn sweep_diffusive_limit(
    base: &RunConfig,
    eps_values: &[f64],
    repetitions: usize,
    mut on_row: impl FnMut(&SweepRow),
) -> Result<DiffusiveSweep> {
    if eps_values.is_empty() {
        return Err(invalid("diffusive sweep needs at least one eps value"));
    }
    if let Some(e) = eps_values.iter().find(|&&e| !(e > 0.0 && e <= 1.0)) {
        return Err(invalid(format!("eps must lie in (0, 1], got {e}")));
    }
    let mut sweep = DiffusiveSweep {
        rows: Vec::new(),
        kinetic: Vec::new(),
        kdmc: Vec::new(),
        profiles: Vec::new(),
    };
    for &eps in eps_values {
        let cfg = RunConfig {
            background: diffusive_background(eps)?,
            ..base.clone()
        };
        let kin = run_timed(&cfg.with_mode(Mode::Kinetic), repetitions)?;
        let kd = run_timed(&cfg.with_mode(Mode::Kdmc), repetitions)?;
        let pk = kin.folded_profile()?;
        let pd = kd.folded_profile()?;
        let row = SweepRow {
            parameter: diffusive_rate(eps),
            error: l2_diff(&pk, &pd)?,
            time_kinetic: kin.wall_time,
            time_kdmc: kd.wall_time,
        };
        on_row(&row);
        sweep.rows.push(row);
        sweep.profiles.push(pk.pointwise_diff(&pd)?);
        sweep.kinetic.push(kin);
        sweep.kdmc.push(kd);
    }
    Ok(sweep)
}

/// Least-squares slope of `ln(error)` against `ln(x)`.
pub fn estimate_order(xs: &[f64], errors: &[f64]) -> Result<f64> {
    if xs.len() != errors.len() {
        return Err(invalid(format!(
            "{} abscissae but {} errors",
            xs.len(),
            errors.len()
        )));
    }
    if xs.len() < 2 {
        return Err(invalid("order fit needs at least two points"));
    }
    if xs.iter().chain(errors).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(invalid("order fit needs positive, finite values"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(invalid("order fit needs at least two distinct abscissae"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// [`estimate_order`] over the rows whose parameter lies in `[lo, hi]`, with a
/// relative slack of 1e-9 so that rates such as `255.99999999999994` count
/// as 256.
pub fn order_in_range(rows: &[SweepRow], lo: f64, hi: f64) -> Result<f64> {
    let slack = 1e-9;
    let (xs, errors): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.parameter >= lo * (1.0 - slack) && r.parameter <= hi * (1.0 + slack))
        .map(|r| (r.parameter, r.error))
        .unzip();
    estimate_order(&xs, &errors)
}

/// `<name>,error` rows.
pub fn write_convergence_csv<W: Write>(mut w: W, parameter: &str, rows: &[SweepRow]) -> Result<()> {
    writeln!(w, "{parameter},error")?;
    for r in rows {
        writeln!(w, "{},{}", format_float(r.parameter), format_float(r.error))?;
    }
    Ok(())
}

/// `<name>,time_kinetic,time_kdmc` rows.
pub fn write_runtime_csv<W: Write>(mut w: W, parameter: &str, rows: &[SweepRow]) -> Result<()> {
    writeln!(w, "{parameter},time_kinetic,time_kdmc")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{}",
            format_float(r.parameter),
            format_float(r.time_kinetic),
            format_float(r.time_kdmc)
        )?;
    }
    Ok(())
}

/// Shortest decimal form of `r` rounded to 12 significant digits, so that
/// `15.999999999999996` is labelled `16`.
fn rate_label(r: f64) -> String {
    let rounded: f64 = format!("{r:.11e}").parse().unwrap_or(r);
    rounded.to_string()
}

/// Folded pointwise-difference profiles side by side: header
/// `x,<rate_1>,<rate_2>,...`, `x` the distance from the center.
pub fn write_profiles_csv<W: Write>(mut w: W, rates: &[f64], profiles: &[Profile1D]) -> Result<()> {
    if rates.len() != profiles.len() {
        return Err(invalid("one profile per rate expected"));
    }
    let Some(first) = profiles.first() else {
        writeln!(w, "x")?;
        return Ok(());
    };
    if profiles.iter().any(|p| p.len() != first.len()) {
        return Err(Error::ShapeMismatch("profiles differ in length".into()));
    }
    let mut header = String::from("x");
    for r in rates {
        header.push(',');
        header.push_str(&rate_label(*r));
    }
    writeln!(w, "{header}")?;
    for i in 0..first.len() {
        let mut line = format_float(first.coordinate(i));
        for p in profiles {
            line.push(',');
            line.push_str(&format_float(p.values[i]));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}
