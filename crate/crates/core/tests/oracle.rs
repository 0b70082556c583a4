mod common;

use kdmc::derive_stream;
use kdmc::model::{Maxwellian, Vec2};
use kdmc::sampling::{diffusive_moments, isotropic_bracket, rank_one_bracket, sample_diffusive_increment};

// The naive double-double brackets cancel O(1) terms, leaving an absolute
// error of roughly 1e-32.
const ORACLE_ABS_ERROR: f64 = 1e-31;

fn rel_tol(base: f64, value: f64) -> f64 {
    base + ORACLE_ABS_ERROR / value.abs()
}

#[test]
fn double_double_oracle_matches_reference_digits() {
    for (x, iso, r1) in common::BRACKET_REFERENCE {
        let a = common::isotropic_bracket(x);
        let b = common::rank_one_bracket(x);
        assert!((a / iso - 1.0).abs() < rel_tol(1e-15, iso), "iso x={x}: {a:e} vs {iso:e}");
        assert!((b / r1 - 1.0).abs() < rel_tol(1e-15, r1), "r1 x={x}: {b:e} vs {r1:e}");
    }
}

#[test]
fn crate_brackets_track_the_oracle() {
    // log grid from 1e-7 to 1e3, crossing the series threshold
    for k in 0..=200 {
        let x = 10f64.powf(-7.0 + k as f64 * 0.05);
        let (a, b) = (isotropic_bracket(x).unwrap(), rank_one_bracket(x).unwrap());
        let (ea, eb) = (common::isotropic_bracket(x), common::rank_one_bracket(x));
        assert!((a / ea - 1.0).abs() < rel_tol(1e-11, ea), "iso x={x:e}: {a:e} vs {ea:e}");
        assert!((b / eb - 1.0).abs() < rel_tol(1e-11, eb), "r1 x={x:e}: {b:e} vs {eb:e}");
    }
}

#[test]
fn moments_agree_with_oracle() {
    let cases = [
        ([0.3, -0.2], [0.05, 0.01], 0.2, 3.0, 0.7),
        ([1.0, 0.0], [0.0, 0.0], 0.0, 2.0, 0.5),
        ([-0.01, 0.02], [0.0, 0.001], 1e-4, 800.0, 0.99),
        ([0.2, 0.2], [-0.1, 0.0], 0.5, 0.01, 1e-3),
    ];
    for (v, u, t, rate, theta) in cases {
        let dm = diffusive_moments(
            Vec2::new(v[0], v[1]),
            &Maxwellian::new(t, Vec2::new(u[0], u[1])).unwrap(),
            rate,
            theta,
        )
        .unwrap();
        let (mu, cov) = common::increment_moments(v, u, t, rate, theta);
        let (cxx, cxy, cyy) = dm.covariance();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1e-300);
        assert!(close(dm.mu.x, mu[0]) && close(dm.mu.y, mu[1]), "{:?} vs {mu:?}", dm.mu);
        assert!(close(cxx, cov[0][0]) && close(cyy, cov[1][1]), "{cxx} {cyy} vs {cov:?}");
        assert!((cxy - cov[0][1]).abs() <= 1e-12 * (cov[0][0] * cov[1][1]).sqrt(), "{cxy} vs {cov:?}");
    }
}

#[test]
fn sampled_increments_follow_the_oracle_law() {
    let n = 200_000;
    let cases = [
        ([0.3, -0.2], [0.05, 0.01], 0.2, 3.0, 0.7),
        ([0.02, 0.01], [0.0, 0.0], 1e-3, 1e-2, 5.0),
        ([-0.5, 0.4], [0.1, -0.1], 0.7, 200.0, 0.05),
    ];
    for (case, (v, u, t, rate, theta)) in cases.into_iter().enumerate() {
        let dm = diffusive_moments(
            Vec2::new(v[0], v[1]),
            &Maxwellian::new(t, Vec2::new(u[0], u[1])).unwrap(),
            rate,
            theta,
        )
        .unwrap();
        let mut rng = derive_stream(11, case as u64);
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|_| {
                let d = sample_diffusive_increment(&mut rng, &dm);
                [d.x, d.y]
            })
            .collect();
        let dev = common::moment_deviation(
            n,
            common::sample_moments(&pts),
            common::increment_moments(v, u, t, rate, theta),
        );
        assert!(dev < 4.0, "case {case}: {dev} standard errors");
    }
}
