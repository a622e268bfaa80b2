//! Minimal statistics support: Student-t CDF through the regularized
//! incomplete beta function, and the paired t-test used for policy
//! comparisons.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("paired t-test needs at least two observations, got {0}")]
    TooFewObservations(usize),
    #[error("all {n} differences are identical ({value}); the t statistic is undefined")]
    ZeroVariance { n: usize, value: f64 },
}

/// ln Gamma via the Lanczos approximation (g = 7, n = 9), accurate to ~1e-13
/// over the positive reals.
fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEFFS[0];
    for (i, &c) in COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Continued fraction for the incomplete beta (modified Lentz method).
fn betacf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta I_x(a, b).
fn inc_beta(a: f64, b: f64, x: f64) -> f64 {
    assert!((0.0..=1.0).contains(&x));
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 1.0;
    }
    let front =
        (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln()).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * betacf(a, b, x) / a
    } else {
        1.0 - front * betacf(b, a, 1.0 - x) / b
    }
}

/// Student-t CDF: P(T <= t) with df degrees of freedom.
pub fn t_cdf(t: f64, df: usize) -> f64 {
    assert!(df >= 1);
    let v = df as f64;
    let x = v / (v + t * t);
    let tail = 0.5 * inc_beta(0.5 * v, 0.5, x);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Two-sided p-value for a t statistic.
pub fn two_sided_p(t: f64, df: usize) -> f64 {
    (2.0 * (1.0 - t_cdf(t.abs(), df))).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy)]
pub struct PairedT {
    pub mean_diff: f64,
    pub sd: f64,
    pub t_statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Paired t-test on a slice of per-pair differences:
/// t = mean / (sd / sqrt(n)), df = n - 1, two-sided p.
pub fn paired_t(diffs: &[f64]) -> Result<PairedT, StatsError> {
    let n = diffs.len();
    if n < 2 {
        return Err(StatsError::TooFewObservations(n));
    }
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n as f64 - 1.0);
    if var == 0.0 {
        if mean == 0.0 {
            // all-zero differences: identical runs; report t = 0, p = 1
            return Ok(PairedT { mean_diff: 0.0, sd: 0.0, t_statistic: 0.0, df: n - 1, p_value: 1.0 });
        }
        return Err(StatsError::ZeroVariance { n, value: diffs[0] });
    }
    let sd = var.sqrt();
    let t = mean / (sd / (n as f64).sqrt());
    Ok(PairedT { mean_diff: mean, sd, t_statistic: t, df: n - 1, p_value: two_sided_p(t, n - 1) })
}
