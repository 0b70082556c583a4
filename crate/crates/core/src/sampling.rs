//! Stochastic kernels: flight times, Maxwellian velocities, source emission
//! and the KDMC diffusive increment.
//!
//! The diffusive increment over a flight time `theta`, following a collision
//! that produced velocity `v`, is normal with
//!
//! ```text
//! mu    = u theta + w (1 - e^{-x})
//! Sigma = a I + b w (x) w
//! a     = 2T / R^2 * (2 e^{-x} + x (1 + e^{-x}) - 2)
//! b     = 1 - 2 x e^{-x} - e^{-2x}
//! ```
//!
//! with `R` the collision rate, `x = theta R` and `w = (v - u) / R`. The
//! covariance is only ever used in this factored form. `a` is the variance
//! of the time-integrated velocity per axis: `2 T theta / R` for large `x`,
//! `T R theta^3 / 3` for small `x`.

use crate::error::{invalid, Error, Result};
use crate::model::{Domain, Maxwellian, Particle, Vec2};
use crate::rng::RngStream;

/// Below this value of `theta * rate` the coefficient brackets are evaluated
/// by their Taylor series; the closed forms cancel O(1) terms down to O(x^3).
pub const SERIES_THRESHOLD: f64 = 0.25;

const SERIES_TERMS: usize = 14;

/// Taylor coefficients of the brackets divided by x^3, for x^3, x^4, ...:
/// isotropic `(-1)^n (2 - n) / n!`, rank-one `(-1)^n (2n - 2^n) / n!`.
const ISOTROPIC_SERIES: [f64; SERIES_TERMS] = series_coefficients(false);
const RANK_ONE_SERIES: [f64; SERIES_TERMS] = series_coefficients(true);

const fn series_coefficients(rank_one: bool) -> [f64; SERIES_TERMS] {
    let mut c = [0.0; SERIES_TERMS];
    let mut factorial = 2.0; // 2!
    let mut pow2 = 4.0; // 2^2
    let mut k = 0;
    while k < SERIES_TERMS {
        let n = (k + 3) as f64;
        factorial *= n;
        pow2 *= 2.0;
        let sign = if (k + 3) % 2 == 0 { 1.0 } else { -1.0 };
        let numer = if rank_one { 2.0 * n - pow2 } else { 2.0 - n };
        c[k] = sign * numer / factorial;
        k += 1;
    }
    c
}

/// Relative size (w.r.t. the largest term of a bracket) up to which a
/// negative bracket is attributed to roundoff and clamped to zero.
pub const CLAMP_TOLERANCE: f64 = 1e-14;

/// `-ln(u) / rate`; `+inf` for a zero rate.
#[inline]
pub fn exponential_from_uniform(u: f64, rate: f64) -> f64 {
    if rate == 0.0 {
        f64::INFINITY
    } else {
        -u.ln() / rate
    }
}

/// Flight time to the next collision for a nonnegative rate.
#[inline]
pub(crate) fn flight_time(rng: &mut RngStream, rate: f64) -> f64 {
    debug_assert!(rate >= 0.0);
    exponential_from_uniform(rng.uniform(), rate)
}

/// Exponentially distributed time with the given rate (1/s).
pub fn sample_exponential(rng: &mut RngStream, rate: f64) -> Result<f64> {
    if !(rate >= 0.0) {
        return Err(invalid(format!("exponential rate must be >= 0, got {rate}")));
    }
    Ok(flight_time(rng, rate))
}

#[inline]
pub fn sample_maxwellian(rng: &mut RngStream, m: &Maxwellian) -> Vec2 {
    let s = m.temperature.sqrt();
    let xi1 = rng.normal();
    let xi2 = rng.normal();
    Vec2::new(m.drift.x + s * xi1, m.drift.y + s * xi2)
}

/// Point source emitting particles with Maxwellian velocities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec {
    pub position: Vec2,
    pub emission: Maxwellian,
}

impl SourceSpec {
    pub fn new(position: Vec2, emission: Maxwellian, domain: &Domain) -> Result<Self> {
        if !domain.contains(position) {
            return Err(invalid(format!(
                "source position ({}, {}) is not strictly inside the domain",
                position.x, position.y
            )));
        }
        Ok(SourceSpec { position, emission })
    }

    /// Isotropic source at the domain center.
    pub fn centered(domain: &Domain, mean_speed: f64) -> Result<Self> {
        SourceSpec::new(domain.center(), Maxwellian::from_mean_speed(mean_speed)?, domain)
    }
}

pub fn sample_source(rng: &mut RngStream, src: &SourceSpec) -> Particle {
    Particle::new(src.position, sample_maxwellian(rng, &src.emission))
}

/// Factored normal law of a diffusive increment: mean `mu`, covariance
/// `a I + b w w^T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusiveMoments {
    pub mu: Vec2,
    pub a: f64,
    pub b: f64,
    pub w: Vec2,
}

impl DiffusiveMoments {
    pub const ZERO: DiffusiveMoments = DiffusiveMoments {
        mu: Vec2::ZERO,
        a: 0.0,
        b: 0.0,
        w: Vec2::ZERO,
    };

    /// Covariance entries `(xx, xy, yy)`.
    pub fn covariance(&self) -> (f64, f64, f64) {
        let w = self.w;
        (
            self.a + self.b * w.x * w.x,
            self.b * w.x * w.y,
            self.a + self.b * w.y * w.y,
        )
    }
}

/// `2 e^{-x} + x (1 + e^{-x}) - 2`, nonnegative for `x >= 0`.
pub fn isotropic_bracket(x: f64) -> Result<f64> {
    Ok(brackets(x, (-x).exp())?.0)
}

/// `1 - 2 x e^{-x} - e^{-2x}`, nonnegative for `x >= 0`.
pub fn rank_one_bracket(x: f64) -> Result<f64> {
    Ok(brackets(x, (-x).exp())?.1)
}

/// Both brackets, given `e = e^{-x}` (only used above the series threshold).
#[inline]
fn brackets(x: f64, e: f64) -> Result<(f64, f64)> {
    if x < SERIES_THRESHOLD {
        let (mut iso, mut rank) = (0.0, 0.0);
        for k in (0..SERIES_TERMS).rev() {
            iso = iso * x + ISOTROPIC_SERIES[k];
            rank = rank * x + RANK_ONE_SERIES[k];
        }
        let x3 = x * x * x;
        return Ok((x3 * iso, x3 * rank));
    }
    let lead = x * (1.0 + e);
    let iso = clamp_roundoff(2.0 * e + lead - 2.0, lead.max(2.0), "isotropic bracket", x)?;
    let rank = clamp_roundoff(1.0 - 2.0 * x * e - e * e, 1.0, "rank-one bracket", x)?;
    Ok((iso, rank))
}

fn clamp_roundoff(value: f64, scale: f64, what: &str, x: f64) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if -value <= CLAMP_TOLERANCE * scale {
        Ok(0.0)
    } else {
        Err(Error::Consistency(format!("{what} is {value:e} at x = {x:e}")))
    }
}

/// Mean displacement over `theta` after a collision producing `v_next`.
/// A zero rate gives the ballistic limit `v_next * theta`.
#[inline]
pub fn diffusive_mean(v_next: Vec2, m: &Maxwellian, rate: f64, theta: f64) -> Vec2 {
    if rate == 0.0 {
        return v_next * theta;
    }
    let w = (v_next - m.drift) * (1.0 / rate);
    m.drift * theta + w * -(-theta * rate).exp_m1()
}

pub fn diffusive_moments(
    v_next: Vec2,
    m: &Maxwellian,
    rate: f64,
    theta: f64,
) -> Result<DiffusiveMoments> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(invalid(format!("diffusive moments need a positive rate, got {rate}")));
    }
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(invalid(format!("diffusive flight time must be >= 0, got {theta}")));
    }
    if !(m.temperature >= 0.0) {
        return Err(invalid("temperature must be >= 0"));
    }
    if theta == 0.0 {
        return Ok(DiffusiveMoments {
            w: (v_next - m.drift) * (1.0 / rate),
            ..DiffusiveMoments::ZERO
        });
    }
    let x = theta * rate;
    let w = (v_next - m.drift) * (1.0 / rate);
    let (decay, e) = if x < SERIES_THRESHOLD {
        (-(-x).exp_m1(), 0.0)
    } else {
        let e = (-x).exp();
        (1.0 - e, e)
    };
    let mu = m.drift * theta + w * decay;
    let (iso, b) = brackets(x, e)?;
    let a = 2.0 * m.temperature / (rate * rate) * iso;
    Ok(DiffusiveMoments { mu, a, b, w })
}

/// Draws `mu + sqrt(a) (xi1, xi2) + sqrt(b) eta w`.
#[inline]
pub fn sample_diffusive_increment(rng: &mut RngStream, dm: &DiffusiveMoments) -> Vec2 {
    let sa = dm.a.sqrt();
    let sb = dm.b.sqrt();
    let xi1 = rng.aux_normal();
    let xi2 = rng.aux_normal();
    let eta = rng.aux_normal();
    Vec2::new(
        dm.mu.x + sa * xi1 + sb * eta * dm.w.x,
        dm.mu.y + sa * xi2 + sb * eta * dm.w.y,
    )
}
