//! Phase distributions on a uniform grid, and prior constructions from
//! initial quantum states.
//!
//! A pure double Fock state carries no phase information, so its prior is
//! uniform. Superpositions over population differences interfere in the phase
//! variable: the prior becomes G(Φ) ∝ |Σ_Q x_Q e^{−iQΦ}|². Coherent-state
//! amplitudes give the familiar narrow distribution around the coherent phase,
//! and mixtures over total particle number add their contributions
//! incoherently.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{canonical_angle, phase_grid, TAU};
use crate::stats::CircularStats;

/// Minimum grid size per phase dimension.
pub const MIN_GRID: usize = 16;
/// Default 1-D grid size for priors and posteriors.
pub const DEFAULT_GRID: usize = 4096;
/// Default per-dimension grid size for two-phase posteriors.
pub const DEFAULT_GRID_2D: usize = 256;
/// Normalization tolerance for grid densities.
pub const DENSITY_NORM_TOL: f64 = 1e-12;
/// Squared-coefficient normalization tolerance for superposition tables.
pub const COEFF_NORM_TOL: f64 = 1e-9;
/// Maximum admissible truncation tail Σ_{Q>Q_max}|x_Q|² for coherent tables.
pub const COHERENT_TAIL_TOL: f64 = 1e-12;
/// Total mass below which a posterior is declared impossible.
pub const MASS_UNDERFLOW: f64 = 1e-300;

/// Nonnegative normalized density on a uniform grid over [0,2π) or [0,2π)².
///
/// Two-phase densities are stored row-major: index j·M + k holds the density
/// at (Φ_j, Φ′_k).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseDistribution {
    m: usize,
    dims: usize,
    density: Vec<f64>,
}

impl PhaseDistribution {
    /// Uniform distribution over one phase.
    pub fn uniform(m: usize) -> Result<Self> {
        Self::check_grid(m)?;
        Ok(PhaseDistribution {
            m,
            dims: 1,
            density: vec![1.0 / TAU; m],
        })
    }

    /// Uniform distribution over two phases.
    pub fn uniform2(m: usize) -> Result<Self> {
        Self::check_grid(m)?;
        Ok(PhaseDistribution {
            m,
            dims: 2,
            density: vec![1.0 / (TAU * TAU); m * m],
        })
    }

    /// Build from raw density values (length m^dims); normalizes on entry.
    pub fn from_density(m: usize, dims: usize, mut density: Vec<f64>) -> Result<Self> {
        Self::check_grid(m)?;
        if !(dims == 1 || dims == 2) {
            return Err(Error::InvalidInput(format!(
                "phase distributions support 1 or 2 dimensions, got {dims}"
            )));
        }
        let expected = m.pow(dims as u32);
        if density.len() != expected {
            return Err(Error::InvalidInput(format!(
                "density length {} does not match grid size {expected}",
                density.len()
            )));
        }
        for g in density.iter_mut() {
            if !g.is_finite() {
                return Err(Error::InvalidInput("density contains non-finite values".into()));
            }
            if *g < 0.0 {
                if *g < -1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "density contains negative value {g:e}"
                    )));
                }
                *g = 0.0; // forgive rounding-level negatives
            }
        }
        let mut dist = PhaseDistribution { m, dims, density };
        dist.normalize()?;
        Ok(dist)
    }

    /// All mass in the single grid cell nearest Φ₀ (useful in tests and as a
    /// delta-limit check).
    pub fn point_mass(m: usize, phi0: f64) -> Result<Self> {
        Self::check_grid(m)?;
        let step = TAU / m as f64;
        let j = ((canonical_angle(phi0) / step).round() as usize) % m;
        let mut density = vec![0.0; m];
        density[j] = 1.0 / step;
        Ok(PhaseDistribution { m, dims: 1, density })
    }

    fn check_grid(m: usize) -> Result<()> {
        if m < MIN_GRID {
            return Err(Error::InvalidInput(format!(
                "grid size {m} below the minimum of {MIN_GRID}"
            )));
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub(crate) fn density_mut(&mut self) -> &mut [f64] {
        &mut self.density
    }

    /// Grid spacing 2π/M.
    pub fn grid_step(&self) -> f64 {
        TAU / self.m as f64
    }

    /// Grid node Φ_j = 2πj/M.
    pub fn phi(&self, j: usize) -> f64 {
        TAU * j as f64 / self.m as f64
    }

    /// Quadrature weight (2π/M)^dims of one grid cell.
    pub fn cell_weight(&self) -> f64 {
        self.grid_step().powi(self.dims as i32)
    }

    /// Total mass under the grid quadrature (1 after normalization).
    pub fn total_mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.cell_weight()
    }

    /// Rescale to unit mass; an underflowed (or non-finite) total is reported
    /// as a zero-probability record.
    pub fn normalize(&mut self) -> Result<()> {
        let mass = self.total_mass();
        if !(mass.is_finite() && mass > MASS_UNDERFLOW) {
            return Err(Error::ZeroProbabilityRecord);
        }
        let inv = 1.0 / mass;
        for g in &mut self.density {
            *g *= inv;
        }
        Ok(())
    }

    /// Trigonometric moment ⟨e^{ipΦ}⟩ of a one-phase distribution.
    pub fn trig_moment(&self, p: i64) -> Complex64 {
        debug_assert_eq!(self.dims, 1);
        let step = self.grid_step();
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &g) in self.density.iter().enumerate() {
            acc += g * Complex64::from_polar(1.0, p as f64 * self.phi(j));
        }
        acc * step
    }

    /// Trigonometric moment ⟨e^{i(pΦ + qΦ′)}⟩ of a two-phase distribution.
    pub fn trig_moment2(&self, p: i64, q: i64) -> Complex64 {
        debug_assert_eq!(self.dims, 2);
        let m = self.m;
        let col: Vec<Complex64> = (0..m)
            .map(|k| Complex64::from_polar(1.0, q as f64 * self.phi(k)))
            .collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..m {
            let row_sum: Complex64 = self.density[j * m..(j + 1) * m]
                .iter()
                .zip(&col)
                .map(|(&g, w)| g * w)
                .sum();
            acc += row_sum * Complex64::from_polar(1.0, p as f64 * self.phi(j));
        }
        acc * self.cell_weight()
    }

    /// Circular statistics of a one-phase distribution.
    pub fn stats(&self) -> CircularStats {
        CircularStats::from_moment(self.trig_moment(1))
    }

    /// Circular statistics per coordinate; two-phase distributions append the
    /// (Φ+Φ′) sum marginal as a third entry.
    pub fn marginal_stats(&self) -> Vec<CircularStats> {
        if self.dims == 1 {
            vec![self.stats()]
        } else {
            vec![
                CircularStats::from_moment(self.trig_moment2(1, 0)),
                CircularStats::from_moment(self.trig_moment2(0, 1)),
                CircularStats::from_moment(self.trig_moment2(1, 1)),
            ]
        }
    }
}

/// G(Φ) = c·|Σ_Q x_Q e^{−iQΦ}|² from a fixed-N amplitude table, normalized on
/// the grid.
pub fn g_from_coefficients(coeffs: &[Complex64], m: usize) -> Result<PhaseDistribution> {
    let density = unnormalized_g(coeffs, m)?;
    PhaseDistribution::from_density(m, 1, density)
}

fn unnormalized_g(coeffs: &[Complex64], m: usize) -> Result<Vec<f64>> {
    if coeffs.is_empty() || coeffs.iter().all(|x| x.norm_sqr() == 0.0) {
        return Err(Error::InvalidInput(
            "coefficient table is empty or all-zero".into(),
        ));
    }
    if coeffs
        .iter()
        .any(|x| !(x.re.is_finite() && x.im.is_finite()))
    {
        return Err(Error::InvalidInput("coefficient table contains non-finite values".into()));
    }
    let grid = phase_grid(m);
    Ok(grid
        .iter()
        .map(|&phi| {
            // Horner evaluation of Σ x_Q w^Q at w = e^{−iΦ}.
            let w = Complex64::from_polar(1.0, -phi);
            let mut s = Complex64::new(0.0, 0.0);
            for &x in coeffs.iter().rev() {
                s = s * w + x;
            }
            s.norm_sqr()
        })
        .collect())
}

/// A coherent Fock-space amplitude profile α over the population index.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CoherentSpec {
    /// |α| ≥ 0.
    pub modulus: f64,
    /// Phase Θ of α, in [0, 2π).
    pub theta: f64,
    /// Amplitudes are kept for Q ∈ [0, q_max].
    pub q_max: usize,
}

impl CoherentSpec {
    pub fn new(modulus: f64, theta: f64, q_max: usize) -> Result<Self> {
        if !(modulus.is_finite() && modulus >= 0.0) {
            return Err(Error::InvalidSpec(format!(
                "coherent modulus must be finite and nonnegative, got {modulus}"
            )));
        }
        if !theta.is_finite() {
            return Err(Error::InvalidSpec("coherent phase must be finite".into()));
        }
        Ok(CoherentSpec {
            modulus,
            theta: canonical_angle(theta),
            q_max,
        })
    }

    /// Choose a truncation comfortably beyond the Poisson bulk |α|² + spread.
    pub fn auto(modulus: f64, theta: f64) -> Result<Self> {
        let lambda = modulus * modulus;
        let q_max = (lambda + 12.0 * lambda.max(1.0).sqrt() + 32.0).ceil() as usize;
        Self::new(modulus, theta, q_max)
    }
}

/// Amplitudes x_Q = e^{−|α|²/2} α^Q/√(Q!) for Q ∈ [0, q_max], magnitudes
/// computed in log space.
pub fn coherent_coefficients(spec: &CoherentSpec) -> Result<Vec<Complex64>> {
    let CoherentSpec {
        modulus,
        theta,
        q_max,
    } = *spec;
    if modulus == 0.0 {
        let mut out = vec![Complex64::new(0.0, 0.0); q_max + 1];
        out[0] = Complex64::new(1.0, 0.0);
        return Ok(out);
    }
    let lambda = modulus * modulus;
    let ln_mod = modulus.ln();
    let mut out = Vec::with_capacity(q_max + 1);
    let mut captured = 0.0;
    let mut ln_fac = 0.0;
    for q in 0..=q_max {
        if q > 0 {
            ln_fac += (q as f64).ln();
        }
        let ln_mag = -lambda / 2.0 + q as f64 * ln_mod - 0.5 * ln_fac;
        let x = Complex64::from_polar(ln_mag.exp(), q as f64 * theta);
        captured += x.norm_sqr();
        out.push(x);
    }
    let tail = 1.0 - captured;
    if tail > COHERENT_TAIL_TOL {
        return Err(Error::Truncation(format!(
            "coherent tail beyond q_max={q_max} holds {tail:.3e} of the squared norm \
             (tolerance {COHERENT_TAIL_TOL:e}); increase q_max"
        )));
    }
    Ok(out)
}

/// G(Φ) from a number superposition spread over several totals N: each slice
/// contributes |Σ_Q x_Q e^{−iQΦ}|² incoherently, then the sum is normalized.
pub fn g_general(slices: &[Vec<Complex64>], m: usize) -> Result<PhaseDistribution> {
    if slices.is_empty() {
        return Err(Error::InvalidInput("superposition table is empty".into()));
    }
    let mut total = vec![0.0; m];
    let mut any = false;
    for slice in slices {
        if slice.is_empty() || slice.iter().all(|x| x.norm_sqr() == 0.0) {
            continue;
        }
        any = true;
        for (t, g) in total.iter_mut().zip(unnormalized_g(slice, m)?) {
            *t += g;
        }
    }
    if !any {
        return Err(Error::InvalidInput(
            "superposition table is all-zero".into(),
        ));
    }
    PhaseDistribution::from_density(m, 1, total)
}

/// Amplitude tables over the population-difference index, either at fixed
/// total N or spread over several totals.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum NumberSuperposition {
    /// Fixed total N: amplitudes x_Q for Q ∈ [0, len).
    Single(Vec<Complex64>),
    /// One amplitude table per total-N slice; slices add incoherently.
    General(Vec<Vec<Complex64>>),
}

impl NumberSuperposition {
    pub fn norm_sq(&self) -> f64 {
        match self {
            NumberSuperposition::Single(v) => v.iter().map(|x| x.norm_sqr()).sum(),
            NumberSuperposition::General(s) => s
                .iter()
                .flat_map(|v| v.iter())
                .map(|x| x.norm_sqr())
                .sum(),
        }
    }

    /// Largest population-difference index carried by the table.
    pub fn q_max(&self) -> usize {
        match self {
            NumberSuperposition::Single(v) => v.len().saturating_sub(1),
            NumberSuperposition::General(s) => {
                s.iter().map(|v| v.len()).max().unwrap_or(0).saturating_sub(1)
            }
        }
    }

    /// Rescale so Σ|x|² = 1; an all-zero table is invalid.
    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm_sq();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidInput(
                "superposition table is all-zero or non-finite".into(),
            ));
        }
        let scale = 1.0 / n.sqrt();
        let rescale = |v: &mut Vec<Complex64>| {
            for x in v.iter_mut() {
                *x *= scale;
            }
        };
        match &mut self {
            NumberSuperposition::Single(v) => rescale(v),
            NumberSuperposition::General(s) => s.iter_mut().for_each(rescale),
        }
        Ok(self)
    }

    /// Build the prior G(Φ). The table must be normalized (Σ|x|² = 1 within
    /// [`COEFF_NORM_TOL`]); use [`NumberSuperposition::normalized`] first when
    /// loading raw amplitudes.
    pub fn to_prior(&self, m: usize) -> Result<PhaseDistribution> {
        let n = self.norm_sq();
        if (n - 1.0).abs() > COEFF_NORM_TOL {
            return Err(Error::InvalidSpec(format!(
                "superposition table is not normalized: Σ|x|² = {n:.12}"
            )));
        }
        match self {
            NumberSuperposition::Single(v) => g_from_coefficients(v, m),
            NumberSuperposition::General(s) => g_general(s, m),
        }
    }
}

/// Load a sparse amplitude table from CSV columns (Q, re, im); a header row is
/// required, missing Q's are zero, and the result is normalized on load.
pub fn coefficients_from_csv(path: &Path) -> Result<NumberSuperposition> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut entries: Vec<(usize, Complex64)> = Vec::new();
    for row in reader.records() {
        let row = row?;
        if row.len() < 3 {
            return Err(Error::InvalidInput(format!(
                "coefficient CSV rows need 3 columns (Q, re, im), got {}",
                row.len()
            )));
        }
        let parse = |i: usize, what: &str| -> Result<f64> {
            row.get(i)
                .unwrap_or("")
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidInput(format!("bad {what} in coefficient CSV: {e}")))
        };
        let q_raw = parse(0, "Q")?;
        if q_raw < 0.0 || q_raw.fract() != 0.0 {
            return Err(Error::InvalidInput(format!(
                "Q must be a nonnegative integer, got {q_raw}"
            )));
        }
        let q = q_raw as usize;
        if entries.iter().any(|(seen, _)| *seen == q) {
            return Err(Error::InvalidInput(format!("duplicate Q={q} in coefficient CSV")));
        }
        entries.push((q, Complex64::new(parse(1, "re")?, parse(2, "im")?)));
    }
    if entries.is_empty() {
        return Err(Error::InvalidInput("coefficient CSV has no data rows".into()));
    }
    let q_max = entries.iter().map(|(q, _)| *q).max().unwrap();
    let mut dense = vec![Complex64::new(0.0, 0.0); q_max + 1];
    for (q, x) in entries {
        dense[q] = x;
    }
    NumberSuperposition::Single(dense).normalized()
}
