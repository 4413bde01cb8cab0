//! Circular summary statistics and a Rayleigh uniformity test.

use num_complex::Complex64;
use serde::Serialize;

use crate::numeric::canonical_angle;

/// Resultant length below which the circular mean is reported as undefined.
pub const MEAN_UNDEFINED_RESULTANT: f64 = 1e-12;

/// First-trigonometric-moment summary of a distribution (or sample) on the circle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CircularStats {
    /// Circular mean in [0, 2π); `None` when the resultant is too short to define one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    /// Resultant length in [0, 1]: 1 for a point mass, 0 for a uniform distribution.
    pub resultant: f64,
    /// Circular standard deviation √(−2 ln L); infinite for a uniform distribution.
    pub circ_std: f64,
}

impl CircularStats {
    /// Build from the first trigonometric moment ⟨e^{iΦ}⟩.
    pub fn from_moment(m1: Complex64) -> Self {
        let resultant = m1.norm().min(1.0);
        let mean = if resultant < MEAN_UNDEFINED_RESULTANT {
            None
        } else {
            Some(canonical_angle(m1.arg()))
        };
        CircularStats {
            mean,
            resultant,
            circ_std: (-2.0 * resultant.ln()).sqrt(),
        }
    }
}

/// Circular statistics of a plain sample of angles (equal weights).
pub fn sample_circular_stats(angles: &[f64]) -> CircularStats {
    if angles.is_empty() {
        return CircularStats::from_moment(Complex64::new(0.0, 0.0));
    }
    let sum: Complex64 = angles
        .iter()
        .map(|&a| Complex64::from_polar(1.0, a))
        .sum();
    CircularStats::from_moment(sum / angles.len() as f64)
}

/// Rayleigh test against uniformity on the circle.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RayleighTest {
    pub n: usize,
    /// Test statistic Z = n·R̄².
    pub z: f64,
    /// Approximate p-value (small p rejects uniformity).
    pub p_value: f64,
}

/// Rayleigh uniformity test for a sample of angles.
///
/// Uses the standard finite-n corrected approximation
/// p ≈ e^{−Z}·[1 + (2Z − Z²)/(4n) − (24Z − 132Z² + 76Z³ − 9Z⁴)/(288n²)],
/// clamped into [0, 1]. Accurate to a few 1e-3 for n ≥ 10, ample for the
/// pass/fail thresholds used here.
pub fn rayleigh_test(angles: &[f64]) -> RayleighTest {
    let n = angles.len();
    if n == 0 {
        return RayleighTest {
            n,
            z: 0.0,
            p_value: 1.0,
        };
    }
    let stats = sample_circular_stats(angles);
    let nf = n as f64;
    let z = nf * stats.resultant * stats.resultant;
    let correction = 1.0 + (2.0 * z - z * z) / (4.0 * nf)
        - (24.0 * z - 132.0 * z * z + 76.0 * z.powi(3) - 9.0 * z.powi(4)) / (288.0 * nf * nf);
    let p = ((-z).exp() * correction).clamp(0.0, 1.0);
    RayleighTest { n, z, p_value: p }
}
