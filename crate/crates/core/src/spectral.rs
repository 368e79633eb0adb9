//! Chebyshev-Lobatto transforms and closed-form logarithmic moments.

use std::f64::consts::PI;

/// Angles `pi*j/m`, `j = 0..=m`, of the Chebyshev-Lobatto grid.
pub fn lobatto_angles(m: usize) -> Vec<f64> {
    (0..=m).map(|j| PI * j as f64 / m as f64).collect()
}

/// Cosine coefficients `c_k` with `f(theta_j) = sum_k c_k cos(k theta_j)` on
/// the Lobatto grid (exact interpolation, degree `m`).
pub fn dct_lobatto(values: &[f64]) -> Vec<f64> {
    let m = values.len() - 1;
    assert!(m >= 1, "need at least two samples");
    // cos(pi*j*k/m) depends only on (j*k) mod 2m
    let table: Vec<f64> = (0..2 * m).map(|r| (PI * r as f64 / m as f64).cos()).collect();
    let mut out = vec![0.0; m + 1];
    for (k, slot) in out.iter_mut().enumerate() {
        let mut s = 0.5 * (values[0] + values[m] * if k % 2 == 0 { 1.0 } else { -1.0 });
        for (j, v) in values.iter().enumerate().take(m).skip(1) {
            s += v * table[(j * k) % (2 * m)];
        }
        let mut c = 2.0 * s / m as f64;
        if k == 0 || k == m {
            c *= 0.5;
        }
        *slot = c;
    }
    out
}

/// Cosine coefficients of `phi -> f(phi)` on `[0, pi]`, degree `m`.
pub fn cosine_series(m: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let vals: Vec<f64> = lobatto_angles(m).into_iter().map(f).collect();
    dct_lobatto(&vals)
}

/// Chebyshev coefficients of `f` on `[c-d, c+d]`, degree `m`.
pub fn chebyshev_coeffs(c: f64, d: f64, m: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
    cosine_series(m, |phi| f(c + d * phi.cos()))
}

/// Largest magnitude among the last `tail` coefficients relative to the largest overall.
pub fn tail_ratio(c: &[f64], tail: usize) -> f64 {
    let max = c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if max == 0.0 {
        return 0.0;
    }
    let start = c.len().saturating_sub(tail.max(1));
    c[start..].iter().fold(0.0f64, |a, v| a.max(v.abs())) / max
}

/// Inverse Joukowski map with `|zeta| <= 1` for real `z`: `z - sign(z) sqrt(z^2 - 1)`.
pub fn joukowski_inner(z: f64) -> f64 {
    if z.abs() <= 1.0 {
        return z.signum();
    }
    let s = (z * z - 1.0).sqrt();
    if z > 0.0 {
        // z - s computed without cancellation
        1.0 / (z + s)
    } else {
        1.0 / (z - s)
    }
}

/// `int_0^pi log|x - c - d cos(phi)| cos(k phi) dphi` for real `x`.
///
/// Inside the interval the moments are `pi log(d/2)` and `-(pi/k) cos(k theta)`
/// with `x = c + d cos(theta)`; outside they are `pi log(d/(2|zeta|))` and
/// `-pi zeta^k / k` with the inner Joukowski root `zeta`.
pub fn log_moment(k: usize, x: f64, c: f64, d: f64) -> f64 {
    let z = (x - c) / d;
    if z.abs() <= 1.0 {
        if k == 0 {
            PI * (0.5 * d).ln()
        } else {
            -PI / k as f64 * (k as f64 * z.acos()).cos()
        }
    } else {
        let zeta = joukowski_inner(z);
        if k == 0 {
            PI * (0.5 * d / zeta.abs()).ln()
        } else {
            -PI * zeta.powi(k as i32) / k as f64
        }
    }
}

/// All moments `k = 0..=m` at once.
pub fn log_moments(m: usize, x: f64, c: f64, d: f64) -> Vec<f64> {
    let z = (x - c) / d;
    let mut out = Vec::with_capacity(m + 1);
    out.push(log_moment(0, x, c, d));
    if z.abs() <= 1.0 {
        let th = z.acos();
        for k in 1..=m {
            out.push(-PI / k as f64 * (k as f64 * th).cos());
        }
    } else {
        let zeta = joukowski_inner(z);
        let mut p = 1.0;
        for k in 1..=m {
            p *= zeta;
            out.push(-PI * p / k as f64);
        }
    }
    out
}

/// Cosine coefficients of `log(sin(phi))`: `-log 2` and `-1/j` at `k = 2j`.
pub fn log_sin_coeffs(m: usize) -> Vec<f64> {
    (0..=m)
        .map(|k| {
            if k == 0 {
                -std::f64::consts::LN_2
            } else if k % 2 == 0 {
                -2.0 / k as f64
            } else {
                0.0
            }
        })
        .collect()
}
