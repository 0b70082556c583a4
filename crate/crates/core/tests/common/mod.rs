//! Independent reference evaluations used by the integration and acceptance
//! tests. Nothing here calls into the series or closed forms of the crate.

#![allow(dead_code)]

use twofloat::TwoFloat;

/// `e^{-x}` in double-double arithmetic. Below 2 the Taylor sum is built
/// from exact-ish double-double operations (about 32 digits); above that
/// plain `f64` suffices because nothing cancels.
pub fn exp_neg(x: f64) -> TwoFloat {
    if x > 2.0 {
        return TwoFloat::from((-x).exp());
    }
    let mx = TwoFloat::from(-x);
    let mut term = TwoFloat::from(1.0);
    let mut sum = TwoFloat::from(1.0);
    for n in 1..80 {
        term = term * mx / (n as f64);
        sum += term;
        if term.hi().abs() < 1e-36 {
            break;
        }
    }
    sum
}

/// `2 e^{-x} + x (1 + e^{-x}) - 2`, evaluated naively in double-double.
pub fn isotropic_bracket(x: f64) -> f64 {
    let e = exp_neg(x);
    let xt = TwoFloat::from(x);
    let v = e * 2.0 + xt * (e + 1.0) - 2.0;
    v.hi() + v.lo()
}

/// `1 - 2 x e^{-x} - e^{-2x}`, evaluated naively in double-double.
pub fn rank_one_bracket(x: f64) -> f64 {
    let e = exp_neg(x);
    let xt = TwoFloat::from(x);
    let v = TwoFloat::from(1.0) - xt * e * 2.0 - e * e;
    v.hi() + v.lo()
}

/// Mean and covariance of the diffusive increment:
/// `mu = u theta + w (1 - e^{-x})`,
/// `Sigma = 2T/R^2 (2e^{-x} + x(1 + e^{-x}) - 2) I + (1 - 2x e^{-x} - e^{-2x}) w w^T`
/// with `x = theta R` and `w = (v - u) / R`.
pub fn increment_moments(
    v: [f64; 2],
    u: [f64; 2],
    temperature: f64,
    rate: f64,
    theta: f64,
) -> ([f64; 2], [[f64; 2]; 2]) {
    let x = theta * rate;
    let decay = {
        let d = TwoFloat::from(1.0) - exp_neg(x);
        d.hi() + d.lo()
    };
    let w = [(v[0] - u[0]) / rate, (v[1] - u[1]) / rate];
    let mu = [u[0] * theta + w[0] * decay, u[1] * theta + w[1] * decay];
    let a = 2.0 * temperature / (rate * rate) * isotropic_bracket(x);
    let b = rank_one_bracket(x);
    let cov = [
        [a + b * w[0] * w[0], b * w[0] * w[1]],
        [b * w[1] * w[0], a + b * w[1] * w[1]],
    ];
    (mu, cov)
}

/// Per-axis variance of the displacement at time `t` of a particle whose
/// velocity starts from an isotropic Maxwellian of temperature `t0` and is
/// redrawn from one of temperature `t1` at the events of a Poisson process
/// of the given rate.
pub fn displacement_variance(t0: f64, t1: f64, rate: f64, t: f64) -> f64 {
    if rate == 0.0 {
        return t0 * t * t;
    }
    let e = (-rate * t).exp();
    let relax = (1.0 - e) / rate;
    2.0 / rate * (t1 * (t - relax) + (t0 - t1) * (relax - t * e))
}

/// Reference values of both brackets at 50 significant digits (mpmath):
/// `(x, isotropic, rank_one)`.
#[allow(clippy::excessive_precision)]
pub const BRACKET_REFERENCE: [(f64, f64, f64); 9] = [
    (1e-6, 1.666_665_833_333_583_3e-19, 3.333_330_000_001_833_3e-19),
    (1e-5, 1.666_658_333_358_333_3e-16, 3.333_300_000_183_332_6e-16),
    (1e-4, 1.666_583_335_833_277_8e-13, 3.333_000_018_332_611_1e-13),
    (1e-3, 1.665_833_583_277_787_7e-10, 3.330_001_832_611_337_2e-10),
    (0.05, 2.032_022_646_371_863_7e-5, 3.963_951_396_902_592_7e-5),
    (0.0999, 1.581_104_437_820_354_4e-4, 3.008_887_165_359_941_6e-4),
    (0.1, 1.585_778_755_151_036_4e-4, 3.017_633_148_262_267e-4),
    (0.5, 0.016_326_649_281_583_559, 0.025_589_899_115_924_255),
    (3.0, 1.248_935_341_839_319_7, 0.698_798_837_616_149_98),
];

/// Sample mean and (population-normalized) covariance of 2D points.
pub fn sample_moments(points: &[[f64; 2]]) -> ([f64; 2], [[f64; 2]; 2]) {
    let n = points.len() as f64;
    let mut m = [0.0; 2];
    for p in points {
        m[0] += p[0];
        m[1] += p[1];
    }
    m[0] /= n;
    m[1] /= n;
    let mut c = [[0.0; 2]; 2];
    for p in points {
        let d = [p[0] - m[0], p[1] - m[1]];
        for i in 0..2 {
            for j in 0..2 {
                c[i][j] += d[i] * d[j];
            }
        }
    }
    for row in &mut c {
        for v in row.iter_mut() {
            *v /= n - 1.0;
        }
    }
    (m, c)
}

/// Largest deviation, in standard errors, of the sample mean and covariance
/// of `n` normal draws from the given law.
pub fn moment_deviation(
    n: usize,
    sample: ([f64; 2], [[f64; 2]; 2]),
    law: ([f64; 2], [[f64; 2]; 2]),
) -> f64 {
    let (sm, sc) = sample;
    let (m, c) = law;
    let n = n as f64;
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        let se = (c[i][i] / n).sqrt();
        worst = worst.max(z(sm[i] - m[i], se));
    }
    for (i, j) in [(0, 0), (0, 1), (1, 1)] {
        // variance of a sample covariance entry under normality
        let se = ((c[i][i] * c[j][j] + c[i][j] * c[i][j]) / n).sqrt();
        worst = worst.max(z(sc[i][j] - c[i][j], se));
    }
    worst
}

fn z(diff: f64, se: f64) -> f64 {
    if se == 0.0 {
        if diff.abs() <= 1e-300 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        diff.abs() / se
    }
}
