//! Sectioned `key = value` run configuration.
//!
//! ```text
//! # kinetic-regime test case
//! [simulation]
//! mode = kdmc          # kinetic | kdmc
//! particles = 10000000
//! seed = 1
//! workers = 8
//! dt = 0.0625
//! t_end = 1
//!
//! [source]
//! position = 0.5, 0.5
//! mean_speed = 0.15625
//!
//! [background]
//! rate = 0.78125
//! mean_speed = 0.013847
//! drift = 0, 0
//!
//! [tally]
//! nx = 128
//! ny = 128
//!
//! [domain]
//! lx = 1
//! ly = 1
//! ```
//!
//! A dotted key (`domain.lx = 1`) names its section explicitly and may appear
//! anywhere. Mean speeds are converted to Maxwellian temperatures. Keys left
//! out keep the values of the preset the command starts from.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use kdmc::harness::{Mode, RunConfig};
use kdmc::model::{temperature_from_mean_speed, Background, Domain, Maxwellian, Vec2};
use kdmc::sampling::SourceSpec;
use kdmc::transport::StepConfig;

#[derive(Debug, thiserror::Error)]
#[error("{}:{line}: {message}", path.display())]
pub struct ConfigError {
    pub path: PathBuf,
    /// 1-based; 0 when the problem is not tied to one line.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry<T> {
    value: T,
    line: usize,
}

/// Parsed file contents; every field is optional.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct ConfigFile {
    mode: Option<Entry<Mode>>,
    particles: Option<Entry<u64>>,
    seed: Option<Entry<u64>>,
    workers: Option<Entry<usize>>,
    dt: Option<Entry<f64>>,
    t_end: Option<Entry<f64>>,
    source_position: Option<Entry<Vec2>>,
    source_mean_speed: Option<Entry<f64>>,
    background_rate: Option<Entry<f64>>,
    background_mean_speed: Option<Entry<f64>>,
    background_drift: Option<Entry<Vec2>>,
    nx: Option<Entry<usize>>,
    ny: Option<Entry<usize>>,
    lx: Option<Entry<f64>>,
    ly: Option<Entry<f64>>,
}

fn at<T>(e: &Option<Entry<T>>) -> usize {
    e.as_ref().map_or(0, |e| e.line)
}

const SECTIONS: [&str; 5] = ["simulation", "source", "background", "tally", "domain"];

fn parse_scalar<T: FromStr>(raw: &str) -> Result<T, String> {
    raw.parse::<T>().map_err(|_| format!("cannot parse '{raw}'"))
}

fn parse_f64(raw: &str) -> Result<f64, String> {
    let v: f64 = parse_scalar(raw)?;
    if !v.is_finite() {
        return Err(format!("'{raw}' is not a finite number"));
    }
    Ok(v)
}

fn parse_vec2(raw: &str) -> Result<Vec2, String> {
    let parts: Vec<&str> = raw
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect();
    match parts.as_slice() {
        [x, y] => Ok(Vec2::new(parse_f64(x)?, parse_f64(y)?)),
        _ => Err(format!("expected two numbers 'x, y', got '{raw}'")),
    }
}

fn set<T>(slot: &mut Option<Entry<T>>, value: T, line: usize, key: &str) -> Result<(), String> {
    if let Some(prev) = slot {
        return Err(format!("duplicate key '{key}' (first set on line {})", prev.line));
    }
    *slot = Some(Entry { value, line });
    Ok(())
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            path: path.to_path_buf(),
            line: 0,
            message: format!("cannot read config: {e}"),
        })?;
        ConfigFile::parse(&text).map_err(|(line, message)| ConfigError {
            path: path.to_path_buf(),
            line,
            message,
        })
    }

    /// Parses file text; errors carry the 1-based line number.
    pub fn parse(text: &str) -> Result<ConfigFile, (usize, String)> {
        let mut cfg = ConfigFile::default();
        let mut section: Option<&str> = None;
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| (line, format!("malformed section header '{content}'")))?
                    .trim();
                let known = SECTIONS
                    .iter()
                    .find(|s| **s == name)
                    .ok_or_else(|| (line, format!("unknown section [{name}]")))?;
                section = Some(known);
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| (line, format!("expected 'key = value', got '{content}'")))?;
            let key = key.trim();
            let value = value.trim();
            let full = match key.split_once('.') {
                Some(_) => key.to_string(),
                None => match section {
                    Some(s) => format!("{s}.{key}"),
                    None => return Err((line, format!("key '{key}' outside of any section"))),
                },
            };
            cfg.assign(&full, value, line).map_err(|m| (line, m))?;
        }
        Ok(cfg)
    }

    fn assign(&mut self, key: &str, value: &str, line: usize) -> Result<(), String> {
        match key {
            "simulation.mode" => {
                let m = value.parse::<Mode>().map_err(|e| e.to_string())?;
                set(&mut self.mode, m, line, key)
            }
            "simulation.particles" => set(&mut self.particles, parse_scalar(value)?, line, key),
            "simulation.seed" => set(&mut self.seed, parse_scalar(value)?, line, key),
            "simulation.workers" => set(&mut self.workers, parse_scalar(value)?, line, key),
            "simulation.dt" => set(&mut self.dt, parse_f64(value)?, line, key),
            "simulation.t_end" => set(&mut self.t_end, parse_f64(value)?, line, key),
            "source.position" => set(&mut self.source_position, parse_vec2(value)?, line, key),
            "source.mean_speed" => set(&mut self.source_mean_speed, parse_f64(value)?, line, key),
            "background.rate" => set(&mut self.background_rate, parse_f64(value)?, line, key),
            "background.mean_speed" => {
                set(&mut self.background_mean_speed, parse_f64(value)?, line, key)
            }
            "background.drift" => set(&mut self.background_drift, parse_vec2(value)?, line, key),
            "tally.nx" => set(&mut self.nx, parse_scalar(value)?, line, key),
            "tally.ny" => set(&mut self.ny, parse_scalar(value)?, line, key),
            "domain.lx" => set(&mut self.lx, parse_f64(value)?, line, key),
            "domain.ly" => set(&mut self.ly, parse_f64(value)?, line, key),
            other => Err(format!("unknown key '{other}'")),
        }
    }

    /// Overlays the file on `base` and validates the result.
    pub fn apply(&self, base: &RunConfig) -> Result<RunConfig, (usize, String)> {
        let msg = |line: usize| move |e: kdmc::Error| (line, e.to_string());

        let domain = match (self.lx, self.ly) {
            (None, None) => base.domain,
            _ => {
                let lx = self.lx.map_or(base.domain.lx(), |e| e.value);
                let ly = self.ly.map_or(base.domain.ly(), |e| e.value);
                Domain::new(lx, ly).map_err(msg(at(&self.lx).max(at(&self.ly))))?
            }
        };

        let emission = match self.source_mean_speed {
            Some(e) => Maxwellian::from_mean_speed(e.value).map_err(msg(e.line))?,
            None => base.source.emission,
        };
        let position = match self.source_position {
            Some(e) => e.value,
            None if domain != base.domain => domain.center(),
            None => base.source.position,
        };
        let source = SourceSpec::new(position, emission, &domain)
            .map_err(msg(at(&self.source_position).max(at(&self.lx)).max(at(&self.ly))))?;

        let background = if self.background_rate.is_some()
            || self.background_mean_speed.is_some()
            || self.background_drift.is_some()
        {
            let current = base.background.lookup(domain.center());
            let rate = self.background_rate.map_or(current.rate, |e| e.value);
            let temperature = match self.background_mean_speed {
                Some(e) => temperature_from_mean_speed(e.value).map_err(msg(e.line))?,
                None => current.maxwellian.temperature,
            };
            let drift = self.background_drift.map_or(current.maxwellian.drift, |e| e.value);
            let line = at(&self.background_rate)
                .max(at(&self.background_mean_speed))
                .max(at(&self.background_drift));
            Background::homogeneous(rate, Maxwellian::new(temperature, drift).map_err(msg(line))?)
                .map_err(msg(line))?
        } else {
            base.background.clone()
        };

        let step = StepConfig::new(
            self.dt.map_or(base.step.dt, |e| e.value),
            self.t_end.map_or(base.step.t_end, |e| e.value),
        )
        .map_err(msg(at(&self.dt).max(at(&self.t_end))))?;

        let cfg = RunConfig {
            mode: self.mode.map_or(base.mode, |e| e.value),
            particles: self.particles.map_or(base.particles, |e| e.value),
            seed: self.seed.map_or(base.seed, |e| e.value),
            workers: self.workers.map_or(base.workers, |e| e.value),
            block_size: base.block_size,
            step,
            source,
            background,
            domain,
            nx: self.nx.map_or(base.nx, |e| e.value),
            ny: self.ny.map_or(base.ny, |e| e.value),
        };
        if cfg.particles == 0 {
            return Err((at(&self.particles), "particles must be at least 1".into()));
        }
        if cfg.workers == 0 {
            return Err((at(&self.workers), "workers must be at least 1".into()));
        }
        if cfg.nx == 0 || cfg.ny == 0 {
            return Err((at(&self.nx).max(at(&self.ny)), "tally cells must be at least 1".into()));
        }
        if !cfg.ny.is_multiple_of(2) {
            return Err((at(&self.ny), "tally.ny must be even so profiles can be folded".into()));
        }
        cfg.validate().map_err(msg(0))?;
        Ok(cfg)
    }
}
