//! Final-position tallies and the 1D reduction used to compare runs:
//! average over x, fold about the center, then take differences and
//! 2-norms of the folded profiles.
//!
//! File formats (values written with 17 significant digits):
//!
//! - histogram: first line `nx,ny,absorbed_fraction`, then `ny` rows of `nx`
//!   comma-separated normalized cell values, row `j` on line `j + 2`.
//! - profile: header `x,value`, then one `coordinate,value` row per cell.

use std::io::{BufRead, Write};

use crate::error::{invalid, Error, Result};
use crate::model::Domain;
use crate::transport::{Status, TrajectoryOutcome};

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

#[inline]
fn bin(coord: f64, extent: f64, n: usize) -> usize {
    let k = (coord / extent * n as f64).floor();
    if k <= 0.0 {
        0
    } else {
        (k as usize).min(n - 1)
    }
}

/// Unit-weight tally with integer counts; merges are exact and
/// order-independent.
#[derive(Debug, Clone, PartialEq)]
pub struct CountTally {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    counts: Vec<u64>,
    absorbed: u64,
    total: u64,
}

impl CountTally {
    pub fn new(domain: &Domain, nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(invalid("tally grid needs at least one cell per axis"));
        }
        Ok(CountTally {
            nx,
            ny,
            lx: domain.lx(),
            ly: domain.ly(),
            counts: vec![0; nx * ny],
            absorbed: 0,
            total: 0,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    #[inline]
    pub fn record(&mut self, outcome: &TrajectoryOutcome) {
        match outcome.status {
            Status::Survived => {
                let p = outcome.final_position;
                let i = bin(p.x, self.lx, self.nx);
                let j = bin(p.y, self.ly, self.ny);
                self.counts[j * self.nx + i] += 1;
            }
            Status::Absorbed => self.absorbed += 1,
        }
        self.total += 1;
    }

    pub fn merge(&mut self, other: &CountTally) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!(
                "cannot merge {:?} tally into {:?}",
                other.shape(),
                self.shape()
            )));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.absorbed += other.absorbed;
        self.total += other.total;
        Ok(())
    }

    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[j * self.nx + i]
    }

    pub fn deposited(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn absorbed(&self) -> u64 {
        self.absorbed
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Raw (unnormalized) histogram with unit weight per particle.
    pub fn to_histogram(&self) -> Histogram2D {
        Histogram2D {
            nx: self.nx,
            ny: self.ny,
            lx: self.lx,
            ly: self.ly,
            mass: self.counts.iter().map(|&c| c as f64).collect(),
            absorbed_mass: self.absorbed as f64,
            total_mass: self.total as f64,
        }
    }
}

/// Weighted final-position histogram on a uniform `nx x ny` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram2D {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    /// Row-major: cell `(i, j)` at `j * nx + i`.
    mass: Vec<f64>,
    absorbed_mass: f64,
    total_mass: f64,
}

impl Histogram2D {
    pub fn new(domain: &Domain, nx: usize, ny: usize) -> Result<Self> {
        Ok(CountTally::new(domain, nx, ny)?.to_histogram())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mass[j * self.nx + i]
    }

    pub fn values(&self) -> &[f64] {
        &self.mass
    }

    pub fn absorbed_mass(&self) -> f64 {
        self.absorbed_mass
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn absorbed_fraction(&self) -> f64 {
        if self.total_mass > 0.0 {
            self.absorbed_mass / self.total_mass
        } else {
            0.0
        }
    }

    pub fn deposit(&mut self, outcome: &TrajectoryOutcome, weight: f64) -> Result<()> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(invalid(format!("deposit weight must be positive, got {weight}")));
        }
        match outcome.status {
            Status::Survived => {
                let p = outcome.final_position;
                let i = bin(p.x, self.lx, self.nx);
                let j = bin(p.y, self.ly, self.ny);
                self.mass[j * self.nx + i] += weight;
            }
            Status::Absorbed => self.absorbed_mass += weight,
        }
        self.total_mass += weight;
        Ok(())
    }

    /// Divides every cell and the absorbed mass by the total injected mass.
    pub fn normalize(&self) -> Result<Histogram2D> {
        if !(self.total_mass > 0.0) {
            return Err(Error::EmptyTally);
        }
        let s = 1.0 / self.total_mass;
        Ok(Histogram2D {
            mass: self.mass.iter().map(|m| m * s).collect(),
            absorbed_mass: self.absorbed_mass * s,
            total_mass: 1.0,
            ..self.clone()
        })
    }

    /// `profile[j] = (1/nx) sum_i mass[i][j]`.
    pub fn reduce_x_average(&self) -> Profile1D {
        let scale = 1.0 / self.nx as f64;
        let values = self
            .mass
            .chunks_exact(self.nx)
            .map(|row| row.iter().sum::<f64>() * scale)
            .collect();
        Profile1D {
            values,
            cell_width: self.ly / self.ny as f64,
        }
    }

    /// Cell-wise `self - other` (kinetic minus KDMC by convention). Meant
    /// for normalized inputs: the result keeps `self`'s total mass, so its
    /// absorbed fraction is the difference of the two absorbed fractions.
    pub fn pointwise_diff(&self, other: &Histogram2D) -> Result<Histogram2D> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!(
                "histograms {:?} and {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(Histogram2D {
            mass: self.mass.iter().zip(&other.mass).map(|(a, b)| a - b).collect(),
            absorbed_mass: self.absorbed_mass - other.absorbed_mass,
            ..self.clone()
        })
    }

    /// Writes the histogram file format. Values are written as stored, so
    /// normalize first for the usual probability-per-cell output.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{},{},{}", self.nx, self.ny, format_float(self.absorbed_fraction()))?;
        let mut line = String::new();
        for row in self.mass.chunks_exact(self.nx) {
            line.clear();
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&format_float(*v));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Reads a histogram file. The file carries no extent, so cells are laid
    /// over the given domain; the result is normalized (total mass 1).
    pub fn read_csv<R: BufRead>(r: R, domain: &Domain) -> Result<Histogram2D> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty histogram file".into()))??;
        let fields: Vec<&str> = header.trim().split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Format(format!("line 1: expected nx,ny,absorbed_fraction, got '{header}'")));
        }
        let parse_usize = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::Format(format!("line 1: bad grid size '{s}'")))
        };
        let nx = parse_usize(fields[0])?;
        let ny = parse_usize(fields[1])?;
        let absorbed: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("line 1: bad absorbed fraction '{}'", fields[2])))?;
        if nx == 0 || ny == 0 {
            return Err(Error::Format("line 1: grid size must be positive".into()));
        }
        let mut mass = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            let lineno = j + 2;
            let line = lines
                .next()
                .ok_or_else(|| Error::Format(format!("line {lineno}: missing row {j}")))??;
            let before = mass.len();
            for tok in line.trim().split(',') {
                let v: f64 = tok
                    .trim()
                    .parse()
                    .map_err(|_| Error::Format(format!("line {lineno}: bad value '{tok}'")))?;
                mass.push(v);
            }
            if mass.len() - before != nx {
                return Err(Error::Format(format!(
                    "line {lineno}: expected {nx} values, got {}",
                    mass.len() - before
                )));
            }
        }
        if let Some(extra) = lines.next() {
            if !extra?.trim().is_empty() {
                return Err(Error::Format(format!("line {}: unexpected trailing data", ny + 2)));
            }
        }
        Ok(Histogram2D {
            nx,
            ny,
            lx: domain.lx(),
            ly: domain.ly(),
            mass,
            absorbed_mass: absorbed,
            total_mass: 1.0,
        })
    }
}

/// A profile over uniform cells of width `cell_width` starting at 0;
/// coordinate `i` is the cell center `(i + 0.5) * cell_width`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile1D {
    pub values: Vec<f64>,
    pub cell_width: f64,
}

impl Profile1D {
    pub fn new(values: Vec<f64>, cell_width: f64) -> Self {
        Profile1D { values, cell_width }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.cell_width
    }

    /// Mirrors about the center and averages the halves:
    /// `folded[i] = (p[n/2 - 1 - i] + p[n/2 + i]) / 2`. Coordinates become
    /// distances from the center.
    pub fn fold_about_center(&self) -> Result<Profile1D> {
        let n = self.values.len();
        if !n.is_multiple_of(2) {
            return Err(invalid(format!("cannot fold a profile of odd length {n}")));
        }
        let h = n / 2;
        let values = (0..h)
            .map(|i| 0.5 * (self.values[h - 1 - i] + self.values[h + i]))
            .collect();
        Ok(Profile1D {
            values,
            cell_width: self.cell_width,
        })
    }

    pub fn pointwise_diff(&self, other: &Profile1D) -> Result<Profile1D> {
        check_len(self, other)?;
        Ok(Profile1D {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
            cell_width: self.cell_width,
        })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", format_float(self.coordinate(i)), format_float(*v))?;
        }
        Ok(())
    }
}

fn check_len(a: &Profile1D, b: &Profile1D) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!(
            "profiles of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Euclidean norm of `a - b`.
pub fn l2_diff(a: &Profile1D, b: &Profile1D) -> Result<f64> {
    check_len(a, b)?;
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// x-average then fold: the profile all run comparisons are made on.
pub fn folded_profile(h: &Histogram2D) -> Result<Profile1D> {
    h.reduce_x_average().fold_about_center()
}
