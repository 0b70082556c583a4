//! Trajectory integrators: fully resolved kinetic Monte Carlo and KDMC.

use crate::error::{invalid, Result};
use crate::model::{Background, Domain, LocalFields, Particle, Vec2};
use crate::rng::RngStream;
use crate::sampling::{
    diffusive_mean, diffusive_moments, flight_time, sample_diffusive_increment, sample_maxwellian,
};

/// Time stepping: `dt` is the KDMC step (unused by the kinetic integrator),
/// `t_end` the observation time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig {
    pub dt: f64,
    pub t_end: f64,
}

impl StepConfig {
    pub fn new(dt: f64, t_end: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("time step must be positive, got {dt}")));
        }
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(invalid(format!("end time must be positive, got {t_end}")));
        }
        Ok(StepConfig { dt, t_end })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Survived,
    Absorbed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryOutcome {
    /// Position at `t_end` for survivors; the absorption point otherwise.
    pub final_position: Vec2,
    pub status: Status,
    pub collision_count: u64,
    pub step_count: u64,
}

impl TrajectoryOutcome {
    pub fn survived(&self) -> bool {
        self.status == Status::Survived
    }
}

/// Result of a straight flight inside the absorbing rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Flight {
    Inside(Vec2),
    /// First intersection of the segment with the boundary.
    Absorbed(Vec2),
}

/// Flies from `start` (inside the domain) with velocity `v` for `dtau`
/// seconds, clipping the segment at the first boundary crossing. A corner
/// hit resolves to the x-face.
#[inline]
pub fn kinetic_flight(start: Vec2, v: Vec2, dtau: f64, domain: &Domain) -> Flight {
    let end = start + v * dtau;
    if domain.contains(end) {
        return Flight::Inside(end);
    }
    let (tx, fx) = face_crossing(start.x, v.x, domain.lx());
    let (ty, fy) = face_crossing(start.y, v.y, domain.ly());
    if tx <= ty {
        Flight::Absorbed(Vec2::new(fx, start.y + tx * v.y))
    } else {
        Flight::Absorbed(Vec2::new(start.x + ty * v.x, fy))
    }
}

/// Time to reach the face `0` or `extent` along one axis, and that face.
#[inline]
fn face_crossing(pos: f64, vel: f64, extent: f64) -> (f64, f64) {
    if vel > 0.0 {
        ((extent - pos) / vel, extent)
    } else if vel < 0.0 {
        (-pos / vel, 0.0)
    } else {
        (f64::INFINITY, pos)
    }
}

#[inline]
fn finish(flight: Flight, collisions: u64, steps: u64) -> TrajectoryOutcome {
    let (final_position, status) = match flight {
        Flight::Inside(p) => (p, Status::Survived),
        Flight::Absorbed(p) => (p, Status::Absorbed),
    };
    TrajectoryOutcome {
        final_position,
        status,
        collision_count: collisions,
        step_count: steps,
    }
}

/// Kinetic Monte Carlo: every collision is resolved until `cfg.t_end`.
///
/// The flight time is drawn with the rate at the flight's starting point;
/// the post-collisional velocity uses the Maxwellian at the collision point.
/// A flight that would pass `t_end` is cut at `t_end` without a collision.
pub fn simulate_kinetic(
    p: &Particle,
    bg: &Background,
    domain: &Domain,
    cfg: &StepConfig,
    rng: &mut RngStream,
) -> TrajectoryOutcome {
    let mut pos = p.position;
    let mut vel = p.velocity;
    let mut time = p.time;
    let mut collisions = 0;
    let mut steps = 0;
    loop {
        let tau = flight_time(rng, bg.lookup(pos).rate);
        steps += 1;
        if time + tau > cfg.t_end {
            return finish(kinetic_flight(pos, vel, cfg.t_end - time, domain), collisions, steps);
        }
        match kinetic_flight(pos, vel, tau, domain) {
            Flight::Inside(x) => pos = x,
            absorbed => return finish(absorbed, collisions, steps),
        }
        time += tau;
        vel = sample_maxwellian(rng, &bg.lookup(pos).maxwellian);
        collisions += 1;
        if time >= cfg.t_end {
            return finish(Flight::Inside(pos), collisions, steps);
        }
    }
}

/// Duration of the diffusive part of a KDMC step, `dt - (tau mod dt)`, so
/// that `tau + theta` lands on the next multiple of `dt`.
#[inline]
pub fn diffusive_flight_time(tau: f64, dt: f64) -> f64 {
    // skip the remainder call for the common case; the result is identical
    if tau < dt {
        dt - tau
    } else {
        dt - tau % dt
    }
}

/// Background fields for a diffusive sub-step.
///
/// For a heterogeneous background, the mean displacement is estimated with
/// the fields at the step's starting point `x_prev` (zero covariance), the
/// endpoint is estimated as `x_kin + mean`, and the fields are read at the
/// midpoint between `x_kin` and that endpoint.
pub fn midpoint_fields(
    bg: &Background,
    x_prev: Vec2,
    x_kin: Vec2,
    v_next: Vec2,
    theta: f64,
) -> LocalFields {
    match bg {
        Background::Homogeneous(f) => *f,
        Background::Grid(g) => {
            let start = g.lookup(x_prev);
            let mean = diffusive_mean(v_next, &start.maxwellian, start.rate, theta);
            g.lookup(x_kin + mean * 0.5)
        }
    }
}

/// KDMC: per step, one kinetic flight to the next collision followed by a
/// normally distributed increment that fills the rest of the `dt` grid cell.
///
/// Time advances by `tau + theta` per step. When the kinetic flight alone
/// reaches `t_end`, the step is a truncated ballistic flight; when only the
/// diffusive part would overshoot, `theta` is clamped to end at `t_end`.
/// The kinetic part clips at the boundary; the diffusive part absorbs iff
/// its endpoint lies outside the domain.
pub fn simulate_kdmc(
    p: &Particle,
    bg: &Background,
    domain: &Domain,
    cfg: &StepConfig,
    rng: &mut RngStream,
) -> Result<TrajectoryOutcome> {
    let mut pos = p.position;
    let mut vel = p.velocity;
    let mut time = p.time;
    let mut collisions = 0;
    let mut steps = 0;
    loop {
        let tau = flight_time(rng, bg.lookup(pos).rate);
        steps += 1;
        if time + tau >= cfg.t_end {
            let flight = kinetic_flight(pos, vel, cfg.t_end - time, domain);
            return Ok(finish(flight, collisions, steps));
        }
        let x_kin = match kinetic_flight(pos, vel, tau, domain) {
            Flight::Inside(x) => x,
            absorbed => return Ok(finish(absorbed, collisions, steps)),
        };
        let v_next = sample_maxwellian(rng, &bg.lookup(x_kin).maxwellian);
        collisions += 1;

        let remaining = cfg.t_end - time - tau;
        let mut theta = diffusive_flight_time(tau, cfg.dt);
        let last = theta >= remaining;
        if last {
            theta = remaining;
        }

        let fields = midpoint_fields(bg, pos, x_kin, v_next, theta);
        let next = if fields.rate > 0.0 {
            let dm = diffusive_moments(v_next, &fields.maxwellian, fields.rate, theta)?;
            let x = x_kin + sample_diffusive_increment(rng, &dm);
            if !domain.contains(x) {
                return Ok(finish(Flight::Absorbed(x), collisions, steps));
            }
            x
        } else {
            // collisionless region: the increment degenerates to free flight
            match kinetic_flight(x_kin, v_next, theta, domain) {
                Flight::Inside(x) => x,
                absorbed => return Ok(finish(absorbed, collisions, steps)),
            }
        };

        pos = next;
        vel = v_next;
        time += tau + theta;
        if last {
            return Ok(finish(Flight::Inside(pos), collisions, steps));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GridBackground, Maxwellian};
    use crate::rng::derive_stream;
    use crate::sampling::{sample_source, SourceSpec};

    fn unit() -> Domain {
        Domain::unit()
    }

    fn maxw(t: f64) -> Maxwellian {
        Maxwellian::new(t, Vec2::ZERO).unwrap()
    }

    #[test]
    fn interior_flight() {
        let f = kinetic_flight(Vec2::new(0.5, 0.5), Vec2::new(1.0, 0.0), 0.2, &unit());
        match f {
            Flight::Inside(p) => assert!((p.x - 0.7).abs() < 1e-15 && p.y == 0.5),
            _ => panic!("{f:?}"),
        }
    }

    #[test]
    fn axis_aligned_exit() {
        let f = kinetic_flight(Vec2::new(0.9, 0.5), Vec2::new(1.0, 0.0), 0.2, &unit());
        assert_eq!(f, Flight::Absorbed(Vec2::new(1.0, 0.5)));
        let f = kinetic_flight(Vec2::new(0.1, 0.5), Vec2::new(-1.0, 0.0), 0.2, &unit());
        assert_eq!(f, Flight::Absorbed(Vec2::new(0.0, 0.5)));
    }

    #[test]
    fn first_crossing_wins() {
        // t_y = 0.05 < t_x = 0.1
        let f = kinetic_flight(Vec2::new(0.9, 0.9), Vec2::new(1.0, 2.0), 1.0, &unit());
        match f {
            Flight::Absorbed(p) => {
                assert!((p.x - 0.95).abs() < 1e-15);
                assert_eq!(p.y, 1.0);
            }
            _ => panic!("{f:?}"),
        }
    }

    #[test]
    fn corner_hit_goes_to_x_face() {
        let f = kinetic_flight(Vec2::new(0.5, 0.5), Vec2::new(1.0, 1.0), 1.0, &unit());
        assert_eq!(f, Flight::Absorbed(Vec2::new(1.0, 1.0)));
    }

    #[test]
    fn landing_on_edge_is_absorbed() {
        let f = kinetic_flight(Vec2::new(0.5, 0.5), Vec2::new(0.0, -1.0), 0.5, &unit());
        assert_eq!(f, Flight::Absorbed(Vec2::new(0.5, 0.0)));
    }

    #[test]
    fn diffusive_flight_time_fills_grid_cell() {
        let theta = diffusive_flight_time(2.3, 1.0);
        assert!((theta - 0.7).abs() < 1e-12);
        assert!((2.3 + theta - 3.0).abs() < 1e-12);
        assert_eq!(diffusive_flight_time(0.0, 0.5), 0.5);
    }

    #[test]
    fn zero_rate_is_single_ballistic_flight() {
        let bg = Background::homogeneous(0.0, maxw(1.0)).unwrap();
        let cfg = StepConfig::new(0.1, 2.0).unwrap();
        let p = Particle::new(Vec2::new(0.5, 0.5), Vec2::new(0.1, -0.05));
        let out = simulate_kinetic(&p, &bg, &unit(), &cfg, &mut derive_stream(1, 0));
        assert_eq!(out.collision_count, 0);
        assert_eq!(out.step_count, 1);
        assert!(out.survived());
        assert!((out.final_position - Vec2::new(0.7, 0.4)).norm() < 1e-15);

        // fast particle leaves through the right face
        let p = Particle::new(Vec2::new(0.5, 0.5), Vec2::new(1.0, 0.0));
        let out = simulate_kinetic(&p, &bg, &unit(), &cfg, &mut derive_stream(1, 0));
        assert_eq!(out.status, Status::Absorbed);
        assert_eq!(out.final_position, Vec2::new(1.0, 0.5));
    }

    #[test]
    fn kdmc_matches_kinetic_without_collisions() {
        let bg = Background::homogeneous(0.0, maxw(0.01)).unwrap();
        let cfg = StepConfig::new(0.25, 1.0).unwrap();
        let src = SourceSpec::centered(&unit(), 0.3).unwrap();
        for i in 0..200 {
            let mut r1 = derive_stream(9, i);
            let mut r2 = derive_stream(9, i);
            let p1 = sample_source(&mut r1, &src);
            let p2 = sample_source(&mut r2, &src);
            let a = simulate_kinetic(&p1, &bg, &unit(), &cfg, &mut r1);
            let b = simulate_kdmc(&p2, &bg, &unit(), &cfg, &mut r2).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn kinetic_collision_count_is_poisson_mean() {
        let rate = 256.0;
        let t_end = 4.0;
        let bg = Background::homogeneous(rate, maxw(1e-12)).unwrap();
        let cfg = StepConfig::new(1.0, t_end).unwrap();
        let src = SourceSpec::centered(&unit(), 1e-6).unwrap();
        let n = 10_000;
        let mut total = 0u64;
        for i in 0..n {
            let mut rng = derive_stream(42, i);
            let p = sample_source(&mut rng, &src);
            let out = simulate_kinetic(&p, &bg, &unit(), &cfg, &mut rng);
            assert!(out.survived());
            assert_eq!(out.step_count, out.collision_count + 1);
            total += out.collision_count;
        }
        let mean = total as f64 / n as f64;
        // Poisson(1024): SE of the mean is 32 / sqrt(1e4)
        assert!((mean - 1024.0).abs() < 4.0 * 32.0 / 100.0, "{mean}");
    }

    #[test]
    fn kdmc_steps_in_diffusive_regime() {
        let bg = Background::homogeneous(256.0, maxw(0.025)).unwrap();
        let cfg = StepConfig::new(1.0, 4.0).unwrap();
        let src = SourceSpec::centered(&unit(), 0.0625).unwrap();
        let n = 2_000;
        let mut steps = 0;
        for i in 0..n {
            let mut rng = derive_stream(3, i);
            let p = sample_source(&mut rng, &src);
            let out = simulate_kdmc(&p, &bg, &unit(), &cfg, &mut rng).unwrap();
            assert!(out.step_count <= 4);
            steps += out.step_count;
        }
        let mean = steps as f64 / n as f64;
        assert!((mean - 4.0).abs() < 0.1, "{mean}");
    }

    #[test]
    fn survivors_inside_absorbed_outside() {
        let d = unit();
        let bg = Background::homogeneous(2.0, maxw(0.05)).unwrap();
        let cfg = StepConfig::new(0.5, 3.0).unwrap();
        let src = SourceSpec::centered(&d, 0.3).unwrap();
        let mut absorbed = 0;
        for i in 0..5_000 {
            let mut rng = derive_stream(77, i);
            let p = sample_source(&mut rng, &src);
            for out in [
                simulate_kinetic(&p, &bg, &d, &cfg, &mut rng.clone()),
                simulate_kdmc(&p, &bg, &d, &cfg, &mut rng).unwrap(),
            ] {
                match out.status {
                    Status::Survived => assert!(d.contains(out.final_position)),
                    Status::Absorbed => {
                        absorbed += 1;
                        assert!(!d.contains(out.final_position));
                    }
                }
            }
        }
        assert!(absorbed > 0);
    }

    #[test]
    fn midpoint_homogeneous_and_zero_theta() {
        let hom = Background::homogeneous(3.5, maxw(0.2)).unwrap();
        let f = midpoint_fields(&hom, Vec2::new(0.1, 0.1), Vec2::new(0.9, 0.9), Vec2::new(5.0, 5.0), 1.0);
        assert_eq!(f.rate, 3.5);

        let cells = vec![
            LocalFields::new(1.0, maxw(0.0)).unwrap(),
            LocalFields::new(3.0, maxw(0.0)).unwrap(),
        ];
        let grid = Background::Grid(GridBackground::new(&unit(), 2, 1, cells).unwrap());
        let f = midpoint_fields(&grid, Vec2::new(0.1, 0.5), Vec2::new(0.7, 0.5), Vec2::new(-9.0, 0.0), 0.0);
        assert_eq!(f.rate, 3.0);
    }

    #[test]
    fn midpoint_on_two_cell_grid() {
        let cells = vec![
            LocalFields::new(1.0, maxw(0.0)).unwrap(),
            LocalFields::new(3.0, maxw(0.0)).unwrap(),
        ];
        let grid = Background::Grid(GridBackground::new(&unit(), 2, 1, cells).unwrap());
        // with rate 1 at x_prev and theta = 50, the estimated mean is v_next (1 - e^-50) = (0.2, 0)
        let x_prev = Vec2::new(0.3, 0.5);
        let x_kin = Vec2::new(0.45, 0.5);
        let f = midpoint_fields(&grid, x_prev, x_kin, Vec2::new(0.2, 0.0), 50.0);
        assert_eq!(f.rate, 3.0);
        // a shorter step keeps the midpoint (0.468, 0.5) in the left cell
        let f = midpoint_fields(&grid, x_prev, x_kin, Vec2::new(0.2, 0.0), 0.2);
        assert_eq!(f.rate, 1.0);
    }

    #[test]
    fn kdmc_handles_collisionless_cells() {
        let d = unit();
        let cells = vec![
            LocalFields::new(50.0, maxw(0.01)).unwrap(),
            LocalFields::new(0.0, maxw(0.01)).unwrap(),
        ];
        let bg = Background::Grid(GridBackground::new(&d, 2, 1, cells).unwrap());
        let cfg = StepConfig::new(0.5, 2.0).unwrap();
        let src = SourceSpec::new(Vec2::new(0.45, 0.5), maxw(0.01), &d).unwrap();
        for i in 0..2_000 {
            let mut rng = derive_stream(5, i);
            let p = sample_source(&mut rng, &src);
            let out = simulate_kdmc(&p, &bg, &d, &cfg, &mut rng).unwrap();
            assert!(out.final_position.is_finite());
            if out.survived() {
                assert!(d.contains(out.final_position));
            }
        }
    }

    #[test]
    fn step_config_validation() {
        assert!(StepConfig::new(0.0, 1.0).is_err());
        assert!(StepConfig::new(1.0, -1.0).is_err());
        assert!(StepConfig::new(f64::NAN, 1.0).is_err());
    }
}
