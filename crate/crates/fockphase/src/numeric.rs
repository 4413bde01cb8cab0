//! Small numeric helpers: angle canonicalization, phase grids, and log-space
//! combinatorics (factorials, half-integer gamma values, falling factorials).
//!
//! Everything here is an exact accumulation loop — no asymptotic expansions —
//! because the sizes involved (counts up to a few hundred, populations up to
//! ~1e9) stay well inside plain f64 log-space accuracy.

pub use std::f64::consts::PI;
pub use std::f64::consts::TAU;

/// Map an angle into the half-open interval [0, 2π); ties at 2π map to 0.
pub fn canonical_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs.
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Evenly spaced phase grid Φ_j = 2πj/m over [0, 2π).
pub fn phase_grid(m: usize) -> Vec<f64> {
    (0..m).map(|j| TAU * j as f64 / m as f64).collect()
}

/// ln n!, by direct accumulation.
pub fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// ln Γ(k + 1/2) for integer k ≥ 0, via Γ(k+1/2) = √π · Π_{j=1..k} (j − 1/2).
pub fn ln_gamma_half(k: u64) -> f64 {
    0.5 * PI.ln() + (1..=k).map(|j| (j as f64 - 0.5).ln()).sum::<f64>()
}

/// ln of the falling factorial (n)_m = n(n−1)···(n−m+1).
///
/// Returns `None` when the product vanishes (m > n), so callers can treat the
/// weight as exactly zero instead of −∞.
pub fn ln_falling(n: u64, m: usize) -> Option<f64> {
    if (m as u64) > n {
        return None;
    }
    Some((0..m as u64).map(|j| ((n - j) as f64).ln()).sum())
}

/// ln of n^m with the convention 0^0 = 1.
///
/// Returns `None` when the power is exactly zero (n = 0, m > 0).
pub fn ln_power(n: u64, m: usize) -> Option<f64> {
    if n == 0 {
        return if m == 0 { Some(0.0) } else { None };
    }
    Some(m as f64 * (n as f64).ln())
}
