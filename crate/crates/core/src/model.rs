//! Domain types shared by the samplers, integrators and tallies.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::error::{invalid, Result};

/// A 2D vector, used for both positions (m) and velocities (m/s).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    #[inline]
    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    #[inline]
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Simulation particle. `time` is the particle clock in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub position: Vec2,
    pub velocity: Vec2,
    pub time: f64,
    pub weight: f64,
    pub alive: bool,
}

impl Particle {
    pub fn new(position: Vec2, velocity: Vec2) -> Self {
        Particle {
            position,
            velocity,
            time: 0.0,
            weight: 1.0,
            alive: true,
        }
    }
}

/// Drifting isotropic Maxwellian in 2D. `temperature` is the variance of each
/// velocity component (m²/s²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maxwellian {
    pub temperature: f64,
    pub drift: Vec2,
}

impl Maxwellian {
    pub fn new(temperature: f64, drift: Vec2) -> Result<Self> {
        if !(temperature >= 0.0 && temperature.is_finite()) {
            return Err(invalid(format!("temperature must be finite and >= 0, got {temperature}")));
        }
        if !drift.is_finite() {
            return Err(invalid("drift velocity must be finite"));
        }
        Ok(Maxwellian { temperature, drift })
    }

    /// Zero-drift Maxwellian whose speed has the given mean.
    pub fn from_mean_speed(mean_speed: f64) -> Result<Self> {
        Maxwellian::new(temperature_from_mean_speed(mean_speed)?, Vec2::ZERO)
    }

    /// Mean speed of a zero-drift sample, `sqrt(pi T / 2)` (Rayleigh mean).
    pub fn mean_speed(&self) -> f64 {
        (PI * self.temperature / 2.0).sqrt()
    }
}

/// Temperature of the zero-drift 2D Maxwellian with the given mean speed:
/// `T = (2/pi) s^2`.
pub fn temperature_from_mean_speed(mean_speed: f64) -> Result<f64> {
    if !(mean_speed >= 0.0 && mean_speed.is_finite()) {
        return Err(invalid(format!("mean speed must be finite and >= 0, got {mean_speed}")));
    }
    Ok(2.0 / PI * mean_speed * mean_speed)
}

/// The rectangle `[0, lx] x [0, ly]`, absorbing on all four edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    lx: f64,
    ly: f64,
}

impl Domain {
    pub fn new(lx: f64, ly: f64) -> Result<Self> {
        if !(lx > 0.0 && lx.is_finite() && ly > 0.0 && ly.is_finite()) {
            return Err(invalid(format!("domain extent must be positive, got ({lx}, {ly})")));
        }
        Ok(Domain { lx, ly })
    }

    pub fn unit() -> Self {
        Domain { lx: 1.0, ly: 1.0 }
    }

    #[inline]
    pub fn lx(&self) -> f64 {
        self.lx
    }

    #[inline]
    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(0.5 * self.lx, 0.5 * self.ly)
    }

    /// Strict interior test; points on an edge count as outside.
    #[inline]
    pub fn contains(&self, p: Vec2) -> bool {
        p.x > 0.0 && p.x < self.lx && p.y > 0.0 && p.y < self.ly
    }
}

/// Background fields at a point: charge-exchange rate (1/s) and the
/// post-collisional Maxwellian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFields {
    pub rate: f64,
    pub maxwellian: Maxwellian,
}

impl LocalFields {
    pub fn new(rate: f64, maxwellian: Maxwellian) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(invalid(format!("collision rate must be finite and >= 0, got {rate}")));
        }
        Ok(LocalFields { rate, maxwellian })
    }
}

/// Piecewise-constant background on a uniform `nx x ny` cell grid covering
/// `[0, lx] x [0, ly]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridBackground {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    /// Row-major: cell `(i, j)` at `j * nx + i`.
    cells: Vec<LocalFields>,
}

impl GridBackground {
    pub fn new(domain: &Domain, nx: usize, ny: usize, cells: Vec<LocalFields>) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(invalid("grid background needs at least one cell per axis"));
        }
        if cells.len() != nx * ny {
            return Err(invalid(format!(
                "grid background expects {} cells, got {}",
                nx * ny,
                cells.len()
            )));
        }
        Ok(GridBackground {
            nx,
            ny,
            lx: domain.lx(),
            ly: domain.ly(),
            cells,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    /// Cell index along one axis. A coordinate on an interior cell face
    /// belongs to the lower cell; out-of-range coordinates clamp.
    #[inline]
    fn axis_index(coord: f64, extent: f64, n: usize) -> usize {
        let scaled = (coord / extent * n as f64).ceil() - 1.0;
        if scaled <= 0.0 {
            0
        } else {
            (scaled as usize).min(n - 1)
        }
    }

    #[inline]
    pub fn cell_of(&self, p: Vec2) -> (usize, usize) {
        (
            Self::axis_index(p.x, self.lx, self.nx),
            Self::axis_index(p.y, self.ly, self.ny),
        )
    }

    #[inline]
    pub fn lookup(&self, p: Vec2) -> LocalFields {
        let (i, j) = self.cell_of(p);
        self.cells[j * self.nx + i]
    }
}

/// Spatial field of collision rate and Maxwellian.
#[derive(Debug, Clone, PartialEq)]
pub enum Background {
    Homogeneous(LocalFields),
    Grid(GridBackground),
}

impl Background {
    pub fn homogeneous(rate: f64, maxwellian: Maxwellian) -> Result<Self> {
        Ok(Background::Homogeneous(LocalFields::new(rate, maxwellian)?))
    }

    #[inline]
    pub fn lookup(&self, p: Vec2) -> LocalFields {
        match self {
            Background::Homogeneous(f) => *f,
            Background::Grid(g) => g.lookup(p),
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        matches!(self, Background::Homogeneous(_))
    }
}
