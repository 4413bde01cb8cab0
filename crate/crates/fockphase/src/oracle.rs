//! Exact sequence probabilities on the finite number-state Hilbert space.
//!
//! Each detection contributes one quadratic form Σ_{μν} W[ν][μ]·(create ν)(annih μ)
//! over the condensate modes. The normal-ordered expectation of a product of
//! such forms on |N_a, N_b⟩ only keeps mode-conserving pairings, so a transfer
//! dynamic program over (annihilated, created) per-mode counts computes it in
//! polynomial time. A path moving m particles through mode a is weighted by
//! the falling factorials (N_a)_m (N_b)_{P−m} — the exact value — or by the
//! plain powers N_a^m N_b^{P−m}, which reproduces the phase-integral engine's
//! value times N^P as an algebraic identity.
//!
//! Two further implementations cross-check the DP: a generating-function
//! quadrature that reads the same per-count amplitudes off a unit-circle grid,
//! and a literal enumeration of all mode choices for tiny records.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{CondensateSpec, DetectionEvent, EventKind, EventPlace, ModeGeometry};
use crate::numeric::{ln_falling, ln_power, TAU};

/// Record-length cap for the two-mode programs (O(P³) work and memory O(P²)).
pub const TWO_MODE_P_CAP: usize = 512;
/// Record-length cap for the three-mode program (O(P⁵) work).
pub const THREE_MODE_P_CAP: usize = 15;
/// Record-length cap for literal enumeration (4^P / 9^P terms).
pub const BRUTE_TWO_MODE_CAP: usize = 10;
pub const BRUTE_THREE_MODE_CAP: usize = 6;

/// Population weighting applied to transfer counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightMode {
    /// Falling factorials (N)_m: the exact finite-N expectation.
    Falling,
    /// Plain powers N^m: the large-N limit the phase engine integrates.
    Power,
}

impl WeightMode {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightMode::Falling => "falling",
            WeightMode::Power => "power",
        }
    }
}

/// An exact sequence value and the inputs that produced it.
#[derive(Clone, Copy, Debug)]
pub struct OracleResult {
    pub value: f64,
    pub mode: WeightMode,
    pub p: usize,
    pub n_a: u64,
    pub n_b: u64,
    pub n_c: Option<u64>,
}

/// Elementary symmetric polynomial coefficients e_0..e_n of Π_i (1 + z_i t),
/// by the stable forward recurrence.
pub fn elementary_symmetric(z: &[Complex64]) -> Vec<Complex64> {
    let mut e = vec![Complex64::new(0.0, 0.0); z.len() + 1];
    e[0] = Complex64::new(1.0, 0.0);
    for (i, &zi) in z.iter().enumerate() {
        for m in (1..=i + 1).rev() {
            let prev = e[m - 1];
            e[m] += zi * prev;
        }
    }
    e
}

/// 2×2 event kernel W[create][annih] over modes (a, b) = (0, 1).
type Kernel2 = [[Complex64; 2]; 2];
/// 3×3 event kernel over modes (a, b, c) = (0, 1, 2).
type Kernel3 = [[Complex64; 3]; 3];

fn kernel2(e: &DetectionEvent, spec: &CondensateSpec) -> Result<Kernel2> {
    let one = Complex64::new(1.0, 0.0);
    match (&spec.geometry, e.place) {
        (ModeGeometry::PlaneWave2 { .. }, EventPlace::Reduced(u)) => match e.kind {
            EventKind::Position => {
                let t = Complex64::from_polar(1.0, u);
                Ok([[one, t.conj()], [t, one]])
            }
            EventKind::Spin => {
                let z = Complex64::from_polar(e.eta.value(), u + e.theta);
                Ok([[0.5 * one, 0.5 * z.conj()], [0.5 * z, 0.5 * one]])
            }
        },
        (ModeGeometry::Tabulated(modes), EventPlace::Cell(c)) => {
            if c >= modes.len() {
                return Err(Error::InvalidInput(format!(
                    "cell index {c} outside the {}-cell mode grid",
                    modes.len()
                )));
            }
            let (pa, pb) = (modes.phi_a(c), modes.phi_b(c));
            let up = pb.conj() * pa; // mode transfer a → b at this cell
            match e.kind {
                EventKind::Position => Ok([
                    [Complex64::new(pa.norm_sqr(), 0.0), pa.conj() * pb],
                    [up, Complex64::new(pb.norm_sqr(), 0.0)],
                ]),
                EventKind::Spin => {
                    let z = Complex64::from_polar(e.eta.value(), e.theta) * up;
                    Ok([
                        [Complex64::new(0.5 * pa.norm_sqr(), 0.0), 0.5 * z.conj()],
                        [0.5 * z, Complex64::new(0.5 * pb.norm_sqr(), 0.0)],
                    ])
                }
            }
        }
        _ => Err(Error::InvalidInput(
            "event coordinates do not match the specification geometry".into(),
        )),
    }
}

fn kernel3(e: &DetectionEvent) -> Result<Kernel3> {
    if e.kind != EventKind::Position {
        return Err(Error::InvalidInput(
            "three-mode detections are position measurements".into(),
        ));
    }
    let (u_ab, u_bc) = match e.place {
        EventPlace::Reduced3 { u_ab, u_bc, .. } => (u_ab, u_bc),
        _ => {
            return Err(Error::InvalidInput(
                "event does not carry three-mode reduced coordinates".into(),
            ));
        }
    };
    // Per-mode virtual phases t_m reproduce all pairwise coordinates:
    // t_a − t_b = u_ab, t_b − t_c = u_bc (and u_ca follows from closure).
    let t = [0.0, -u_ab, -u_ab - u_bc];
    let mut w = [[Complex64::new(0.0, 0.0); 3]; 3];
    for (nu, row) in w.iter_mut().enumerate() {
        for (mu, entry) in row.iter_mut().enumerate() {
            *entry = Complex64::from_polar(1.0, t[mu] - t[nu]);
        }
    }
    Ok(w)
}

/// Diagonal transfer amplitudes D_m (m = particles moved through mode a) of a
/// normal-ordered kernel product.
fn transfer_dp2(kernels: &[Kernel2]) -> Vec<Complex64> {
    let p = kernels.len();
    let n = p + 1;
    let zero = Complex64::new(0.0, 0.0);
    let mut t = vec![zero; n * n];
    let mut next = vec![zero; n * n];
    t[0] = Complex64::new(1.0, 0.0);
    for (i, w) in kernels.iter().enumerate() {
        next[..(i + 2) * n].fill(zero);
        for c in 0..=i {
            for cp in 0..=i {
                let amp = t[c * n + cp];
                if amp == zero {
                    continue;
                }
                for annih in 0..2 {
                    for create in 0..2 {
                        let k = w[create][annih];
                        if k == zero {
                            continue;
                        }
                        let nc = c + (annih == 0) as usize;
                        let ncp = cp + (create == 0) as usize;
                        next[nc * n + ncp] += k * amp;
                    }
                }
            }
        }
        std::mem::swap(&mut t, &mut next);
    }
    (0..n).map(|m| t[m * n + m]).collect()
}

/// A number in scaled form mant·e^{ln_scale}, so ratios of astronomically
/// large weighted sums stay inside f64 range.
#[derive(Clone, Copy, Debug)]
struct Scaled {
    mant: Complex64,
    ln_scale: f64,
}

impl Scaled {
    fn zero() -> Self {
        Scaled {
            mant: Complex64::new(0.0, 0.0),
            ln_scale: 0.0,
        }
    }

    fn real_value(self) -> f64 {
        self.mant.re * self.ln_scale.exp()
    }
}

/// Contract per-count amplitudes against log-space weights, extracting the
/// largest weight to keep the mantissa Σ d_m·e^{ln w_m − max} well scaled.
fn contract(terms: &[(Complex64, Option<f64>)]) -> Scaled {
    let lmax = terms
        .iter()
        .filter_map(|&(_, lw)| lw)
        .fold(f64::NEG_INFINITY, f64::max);
    if lmax == f64::NEG_INFINITY {
        return Scaled::zero();
    }
    let mant = terms
        .iter()
        .filter_map(|&(d, lw)| lw.map(|l| d * (l - lmax).exp()))
        .sum();
    Scaled {
        mant,
        ln_scale: lmax,
    }
}

fn ln_weight(n: u64, m: usize, mode: WeightMode) -> Option<f64> {
    match mode {
        WeightMode::Falling => ln_falling(n, m),
        WeightMode::Power => ln_power(n, m),
    }
}

fn contract2(d: &[Complex64], n_a: u64, n_b: u64, mode: WeightMode) -> Scaled {
    let p = d.len() - 1;
    let terms: Vec<(Complex64, Option<f64>)> = d
        .iter()
        .enumerate()
        .map(|(m, &amp)| {
            let lw = match (ln_weight(n_a, m, mode), ln_weight(n_b, p - m, mode)) {
                (Some(x), Some(y)) => Some(x + y),
                _ => None,
            };
            (amp, lw)
        })
        .collect();
    contract(&terms)
}

fn two_mode_scaled(
    events: &[DetectionEvent],
    spec: &CondensateSpec,
    mode: WeightMode,
    extra: Option<Kernel2>,
) -> Result<Scaled> {
    let total = events.len() + extra.is_some() as usize;
    if total > TWO_MODE_P_CAP {
        return Err(Error::OracleCap(format!(
            "two-mode oracle limited to {TWO_MODE_P_CAP} detections, got {total}"
        )));
    }
    let mut kernels: Vec<Kernel2> = events
        .iter()
        .map(|e| kernel2(e, spec))
        .collect::<Result<_>>()?;
    if let Some(k) = extra {
        kernels.push(k);
    }
    let d = transfer_dp2(&kernels);
    Ok(contract2(&d, spec.n_a, spec.n_b, mode))
}

/// Exact probability (unit-density convention, unnormalized by any detector
/// efficiency) of an ordered detection sequence on a number-state condensate.
///
/// Falling-factorial weights vanish legally when the record demands more
/// transfers than a mode holds, so P > N simply yields 0.
pub fn exact_sequence_probability(
    events: &[DetectionEvent],
    spec: &CondensateSpec,
    mode: WeightMode,
) -> Result<OracleResult> {
    spec.validate()?;
    let value = if spec.is_three_mode() {
        three_mode_value(events, spec, mode)?
    } else {
        two_mode_scaled(events, spec, mode, None)?.real_value()
    };
    Ok(OracleResult {
        value,
        mode,
        p: events.len(),
        n_a: spec.n_a,
        n_b: spec.n_b,
        n_c: spec.n_c,
    })
}

fn three_mode_value(
    events: &[DetectionEvent],
    spec: &CondensateSpec,
    mode: WeightMode,
) -> Result<f64> {
    let p = events.len();
    if p > THREE_MODE_P_CAP {
        return Err(Error::OracleCap(format!(
            "three-mode oracle limited to {THREE_MODE_P_CAP} detections, got {p}"
        )));
    }
    let n_c = spec.n_c.expect("validated three-mode spec");
    let kernels: Vec<Kernel3> = events.iter().map(kernel3).collect::<Result<_>>()?;

    // State: annihilation counts (ca, cb) and creation counts (ca', cb') for
    // modes a and b; mode c's counts follow from the step index.
    let n = p + 1;
    let idx = |ca: usize, cb: usize, cap: usize, cbp: usize| ((ca * n + cb) * n + cap) * n + cbp;
    let zero = Complex64::new(0.0, 0.0);
    let mut t = vec![zero; n * n * n * n];
    let mut next = vec![zero; n * n * n * n];
    t[0] = Complex64::new(1.0, 0.0);
    for (i, w) in kernels.iter().enumerate() {
        next.fill(zero);
        for ca in 0..=i {
            for cb in 0..=i - ca {
                for cap in 0..=i {
                    for cbp in 0..=i - cap {
                        let amp = t[idx(ca, cb, cap, cbp)];
                        if amp == zero {
                            continue;
                        }
                        for annih in 0..3 {
                            for create in 0..3 {
                                let k = w[create][annih];
                                let nca = ca + (annih == 0) as usize;
                                let ncb = cb + (annih == 1) as usize;
                                let ncap = cap + (create == 0) as usize;
                                let ncbp = cbp + (create == 1) as usize;
                                next[idx(nca, ncb, ncap, ncbp)] += k * amp;
                            }
                        }
                    }
                }
            }
        }
        std::mem::swap(&mut t, &mut next);
    }

    let mut terms = Vec::new();
    for ca in 0..=p {
        for cb in 0..=p - ca {
            let cc = p - ca - cb;
            let amp = t[idx(ca, cb, ca, cb)];
            let lw = match (
                ln_weight(spec.n_a, ca, mode),
                ln_weight(spec.n_b, cb, mode),
                ln_weight(n_c, cc, mode),
            ) {
                (Some(x), Some(y), Some(z)) => Some(x + y + z),
                _ => None,
            };
            terms.push((amp, lw));
        }
    }
    Ok(contract(&terms).real_value())
}

/// Independent two-mode cross-check via generating-function quadrature.
///
/// Evaluates G(λ, Φ) = Π_i [W_aa·s·t + W_ab·t + W_ba·s + W_bb] with
/// s = λe^{−iΦ}, t = e^{iΦ} over λ on the (P+1) roots of unity and Φ on a
/// (2P+2)-point grid, then reads the per-count amplitudes D_m off by discrete
/// Fourier inversion — the same numbers the transfer DP accumulates, computed
/// by a completely different route. Exact for trigonometric degree reasons,
/// not approximate.
pub fn twomode_spin_oracle(
    events: &[DetectionEvent],
    spec: &CondensateSpec,
    mode: WeightMode,
) -> Result<OracleResult> {
    spec.validate()?;
    if spec.is_three_mode() {
        return Err(Error::InvalidInput(
            "the generating-function oracle is two-mode only".into(),
        ));
    }
    let p = events.len();
    if p > TWO_MODE_P_CAP {
        return Err(Error::OracleCap(format!(
            "two-mode oracle limited to {TWO_MODE_P_CAP} detections, got {p}"
        )));
    }
    let kernels: Vec<Kernel2> = events
        .iter()
        .map(|e| kernel2(e, spec))
        .collect::<Result<_>>()?;

    let n_lambda = p + 1;
    let n_phi = 2 * p + 2;
    let mut d = vec![Complex64::new(0.0, 0.0); p + 1];
    for k in 0..n_lambda {
        let lambda = Complex64::from_polar(1.0, TAU * k as f64 / n_lambda as f64);
        let mut avg = Complex64::new(0.0, 0.0);
        for j in 0..n_phi {
            let t = Complex64::from_polar(1.0, TAU * j as f64 / n_phi as f64);
            let s = lambda * t.conj();
            let st = s * t;
            let mut g = Complex64::new(1.0, 0.0);
            for w in &kernels {
                g *= w[0][0] * st + w[0][1] * t + w[1][0] * s + w[1][1];
            }
            avg += g;
        }
        avg /= n_phi as f64;
        for (m, dm) in d.iter_mut().enumerate() {
            *dm += avg * Complex64::from_polar(1.0, -TAU * (k * m) as f64 / n_lambda as f64);
        }
    }
    for dm in &mut d {
        *dm /= n_lambda as f64;
    }
    Ok(OracleResult {
        value: contract2(&d, spec.n_a, spec.n_b, mode).real_value(),
        mode,
        p,
        n_a: spec.n_a,
        n_b: spec.n_b,
        n_c: None,
    })
}

fn falling_f64(n: u64, m: usize) -> f64 {
    if (m as u64) > n {
        return 0.0;
    }
    (0..m as u64).map(|j| (n - j) as f64).product()
}

fn power_f64(n: u64, m: usize) -> f64 {
    (n as f64).powi(m as i32)
}

fn weight_f64(n: u64, m: usize, mode: WeightMode) -> f64 {
    match mode {
        WeightMode::Falling => falling_f64(n, m),
        WeightMode::Power => power_f64(n, m),
    }
}

/// Literal enumeration over every per-event mode choice. Exponential cost; the
/// caps keep it to a few million terms.
pub fn brute_force_oracle(
    events: &[DetectionEvent],
    spec: &CondensateSpec,
    mode: WeightMode,
) -> Result<OracleResult> {
    spec.validate()?;
    let p = events.len();
    let value = if spec.is_three_mode() {
        if p > BRUTE_THREE_MODE_CAP {
            return Err(Error::OracleCap(format!(
                "three-mode enumeration limited to {BRUTE_THREE_MODE_CAP} detections, got {p}"
            )));
        }
        let kernels: Vec<Kernel3> = events.iter().map(kernel3).collect::<Result<_>>()?;
        let n_c = spec.n_c.expect("validated three-mode spec");
        let mut total = Complex64::new(0.0, 0.0);
        let combos = 9usize.pow(p as u32);
        for mask in 0..combos {
            let mut rest = mask;
            let mut annih = [0usize; 3];
            let mut create = [0usize; 3];
            let mut amp = Complex64::new(1.0, 0.0);
            for w in &kernels {
                let choice = rest % 9;
                rest /= 9;
                let (mu, nu) = (choice % 3, choice / 3);
                annih[mu] += 1;
                create[nu] += 1;
                amp *= w[nu][mu];
            }
            if annih == create {
                let weight = weight_f64(spec.n_a, annih[0], mode)
                    * weight_f64(spec.n_b, annih[1], mode)
                    * weight_f64(n_c, annih[2], mode);
                total += amp * weight;
            }
        }
        total.re
    } else {
        if p > BRUTE_TWO_MODE_CAP {
            return Err(Error::OracleCap(format!(
                "two-mode enumeration limited to {BRUTE_TWO_MODE_CAP} detections, got {p}"
            )));
        }
        let kernels: Vec<Kernel2> = events
            .iter()
            .map(|e| kernel2(e, spec))
            .collect::<Result<_>>()?;
        let mut total = Complex64::new(0.0, 0.0);
        let combos = 4usize.pow(p as u32);
        for mask in 0..combos {
            let mut rest = mask;
            let mut annih_a = 0usize;
            let mut create_a = 0usize;
            let mut amp = Complex64::new(1.0, 0.0);
            for w in &kernels {
                let choice = rest % 4;
                rest /= 4;
                let (mu, nu) = (choice % 2, choice / 2);
                annih_a += (mu == 0) as usize;
                create_a += (nu == 0) as usize;
                amp *= w[nu][mu];
            }
            if annih_a == create_a {
                let weight = weight_f64(spec.n_a, annih_a, mode)
                    * weight_f64(spec.n_b, p - annih_a, mode);
                total += amp * weight;
            }
        }
        total.re
    };
    Ok(OracleResult {
        value,
        mode,
        p,
        n_a: spec.n_a,
        n_b: spec.n_b,
        n_c: spec.n_c,
    })
}

fn pure_transfer_up(spec: &CondensateSpec, target: EventPlace) -> Result<Complex64> {
    match (&spec.geometry, target) {
        (ModeGeometry::PlaneWave2 { .. }, EventPlace::Reduced(u)) => {
            Ok(Complex64::from_polar(1.0, u))
        }
        (ModeGeometry::Tabulated(modes), EventPlace::Cell(c)) => {
            if c >= modes.len() {
                return Err(Error::InvalidInput(format!(
                    "cell index {c} outside the {}-cell mode grid",
                    modes.len()
                )));
            }
            Ok(modes.phi_b(c).conj() * modes.phi_a(c))
        }
        _ => Err(Error::InvalidInput(
            "target coordinates do not match the specification geometry".into(),
        )),
    }
}

/// Exact conditional transverse-spin expectation ⟨σ_θ(r*)⟩ given a detection
/// record, by inserting one pure mode-transfer term at the target into the
/// transfer DP and dividing by the record's own probability.
pub fn remote_orientation_exact(
    events: &[DetectionEvent],
    spec: &CondensateSpec,
    target: EventPlace,
    theta: f64,
    mode: WeightMode,
) -> Result<f64> {
    Ok(remote_orientation_profile_exact(events, spec, target, &[theta], mode)?[0])
}

/// Axis profile of [`remote_orientation_exact`]: one DP evaluation serves all
/// axes, because ⟨σ_θ⟩ = 2·Re{A·e^{iθ}} for a single record-dependent complex
/// amplitude A.
pub fn remote_orientation_profile_exact(
    events: &[DetectionEvent],
    spec: &CondensateSpec,
    target: EventPlace,
    thetas: &[f64],
    mode: WeightMode,
) -> Result<Vec<f64>> {
    spec.validate()?;
    if spec.is_three_mode() {
        return Err(Error::InvalidInput(
            "remote orientation is a two-mode construction".into(),
        ));
    }
    if let EventPlace::Cell(c) = target {
        if events.iter().any(|e| e.place == EventPlace::Cell(c)) {
            return Err(Error::InvalidInput(format!(
                "target cell {c} is part of the measured record"
            )));
        }
    }

    let den = two_mode_scaled(events, spec, mode, None)?;
    if !(den.mant.re > 0.0) {
        return Err(Error::ImpossibleRecord);
    }

    let up = pure_transfer_up(spec, target)?;
    let zero = Complex64::new(0.0, 0.0);
    let probe: Kernel2 = [[zero, zero], [up, zero]];
    let num = two_mode_scaled(events, spec, mode, Some(probe))?;

    // A in scaled form relative to the denominator.
    let scale = (num.ln_scale - den.ln_scale).exp();
    let a = num.mant * scale / den.mant.re;
    Ok(thetas
        .iter()
        .map(|&theta| 2.0 * (a * Complex64::from_polar(1.0, theta)).re)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GeneralModePair, Sign, Vec3};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn plane_spec(n_a: u64, n_b: u64) -> CondensateSpec {
        let k = Vec3::new(1.0, 0.0, 0.0);
        let k0 = Vec3::new(0.0, 0.0, 0.0);
        CondensateSpec::two_mode(n_a, n_b, k, k0, true).unwrap()
    }

    fn three_spec(n_a: u64, n_b: u64, n_c: u64) -> CondensateSpec {
        let k = Vec3::new(0.0, 0.0, 0.0);
        CondensateSpec::three_mode(n_a, n_b, n_c, k, k, k).unwrap()
    }

    fn random_two_mode_record(rng: &mut ChaCha8Rng, p: usize) -> Vec<DetectionEvent> {
        (0..p)
            .map(|_| {
                let u = rng.gen::<f64>() * TAU;
                if rng.gen::<bool>() {
                    DetectionEvent::position(u)
                } else {
                    let theta = rng.gen::<f64>() * TAU;
                    let eta = if rng.gen::<bool>() { Sign::Plus } else { Sign::Minus };
                    DetectionEvent::spin(u, theta, eta)
                }
            })
            .collect()
    }

    #[test]
    fn elementary_symmetric_examples() {
        let one = Complex64::new(1.0, 0.0);
        assert_eq!(elementary_symmetric(&[]), vec![one]);
        let e = elementary_symmetric(&[one, one]);
        assert_eq!(e, vec![one, 2.0 * one, one]);
        let e = elementary_symmetric(&[one, Complex64::new(0.0, 0.0), -one]);
        assert_abs_diff_eq!(e[1].norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((e[2] + one).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e[3].norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn single_detection_counts_particles() {
        let spec = plane_spec(7, 9);
        let e = [DetectionEvent::position(1.234)];
        for mode in [WeightMode::Falling, WeightMode::Power] {
            let r = exact_sequence_probability(&e, &spec, mode).unwrap();
            assert_relative_eq!(r.value, 16.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn falling_vs_power_pair() {
        let spec = plane_spec(10, 10);
        let events = [DetectionEvent::position(0.0), DetectionEvent::position(0.0)];
        let falling = exact_sequence_probability(&events, &spec, WeightMode::Falling).unwrap();
        assert_relative_eq!(falling.value, 580.0, max_relative = 1e-12);
        let power = exact_sequence_probability(&events, &spec, WeightMode::Power).unwrap();
        assert_relative_eq!(power.value, 600.0, max_relative = 1e-12);
    }

    #[test]
    fn smallest_spin_system_from_first_principles() {
        // One particle per mode, measured twice along one axis at full mode
        // overlap (u = 0 encodes coincident wavevectors).
        let spec_same_k = plane_spec(1, 1);
        let at = |eta: Sign| DetectionEvent::spin(0.0, 0.7, eta);

        let single =
            exact_sequence_probability(&[at(Sign::Plus)], &spec_same_k, WeightMode::Falling)
                .unwrap();
        assert_relative_eq!(single.value, 1.0, max_relative = 1e-12);

        let same = exact_sequence_probability(
            &[at(Sign::Plus), at(Sign::Plus)],
            &spec_same_k,
            WeightMode::Falling,
        )
        .unwrap();
        assert_relative_eq!(same.value, 1.0, max_relative = 1e-12);

        let opposite = exact_sequence_probability(
            &[at(Sign::Plus), at(Sign::Minus)],
            &spec_same_k,
            WeightMode::Falling,
        )
        .unwrap();
        assert_abs_diff_eq!(opposite.value, 0.0, epsilon = 1e-12);

        // The four patterns exhaust ⟨N(N−1)⟩ = 2, so P(same sign twice) = 1/2.
        let mut total = 0.0;
        for first in [Sign::Plus, Sign::Minus] {
            for second in [Sign::Plus, Sign::Minus] {
                total += exact_sequence_probability(
                    &[at(first), at(second)],
                    &spec_same_k,
                    WeightMode::Falling,
                )
                .unwrap()
                .value;
            }
        }
        assert_relative_eq!(total, 2.0, max_relative = 1e-12);
        assert_relative_eq!(same.value / total, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn spin_pattern_sum_is_vandermonde() {
        // Σ over all sign patterns of ⟨Π P_η⟩ = ⟨Π n⟩ = (N_a + N_b)_P for
        // spinful plane waves (total density carries no cross-mode term).
        let spec = plane_spec(5, 7);
        let p = 3;
        let thetas = [0.3, 1.1, 4.9];
        let mut total = 0.0;
        for mask in 0..1usize << p {
            let events: Vec<DetectionEvent> = (0..p)
                .map(|i| {
                    let eta = if mask >> i & 1 == 1 { Sign::Plus } else { Sign::Minus };
                    DetectionEvent::spin(0.0, thetas[i], eta)
                })
                .collect();
            total += exact_sequence_probability(&events, &spec, WeightMode::Falling)
                .unwrap()
                .value;
        }
        assert_relative_eq!(total, 1320.0, max_relative = 1e-11); // (12)_3

        let mut total_power = 0.0;
        for mask in 0..1usize << p {
            let events: Vec<DetectionEvent> = (0..p)
                .map(|i| {
                    let eta = if mask >> i & 1 == 1 { Sign::Plus } else { Sign::Minus };
                    DetectionEvent::spin(0.0, thetas[i], eta)
                })
                .collect();
            total_power += exact_sequence_probability(&events, &spec, WeightMode::Power)
                .unwrap()
                .value;
        }
        assert_relative_eq!(total_power, 1728.0, max_relative = 1e-11); // 12³
    }

    #[test]
    fn rank_one_kernels_reduce_to_elementary_symmetric() {
        // For plane-wave events the DP amplitudes collapse to
        // D_m = (Πκ_i)·|e_m(a)|² with a_i = η_i·e^{i(u_i+θ_i)} and κ = ½ for
        // spin detections.
        let spec = plane_spec(3, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let p = 1 + rng.gen_range(0..6);
            let events = random_two_mode_record(&mut rng, p);
            let kernels: Vec<Kernel2> = events.iter().map(|e| kernel2(e, &spec).unwrap()).collect();
            let d = transfer_dp2(&kernels);

            let mut kappa = 1.0;
            let a: Vec<Complex64> = events
                .iter()
                .map(|e| {
                    if e.is_spin() {
                        kappa *= 0.5;
                    }
                    let u = match e.place {
                        EventPlace::Reduced(u) => u,
                        _ => unreachable!(),
                    };
                    Complex64::from_polar(e.eta.value(), u + e.theta)
                })
                .collect();
            let e_sym = elementary_symmetric(&a);
            for (m, &dm) in d.iter().enumerate() {
                assert_abs_diff_eq!(dm.im, 0.0, epsilon = 1e-10);
                assert_relative_eq!(
                    dm.re,
                    kappa * e_sym[m].norm_sqr(),
                    max_relative = 1e-10,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn three_oracles_agree_on_random_records() {
        let spec = plane_spec(6, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..25 {
            let p = 1 + rng.gen_range(0..7);
            let events = random_two_mode_record(&mut rng, p);
            for mode in [WeightMode::Falling, WeightMode::Power] {
                let dp = exact_sequence_probability(&events, &spec, mode).unwrap().value;
                let gf = twomode_spin_oracle(&events, &spec, mode).unwrap().value;
                let brute = brute_force_oracle(&events, &spec, mode).unwrap().value;
                assert_relative_eq!(dp, gf, max_relative = 1e-11, epsilon = 1e-12);
                assert_relative_eq!(dp, brute, max_relative = 1e-11, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn tabulated_kernels_agree_with_enumeration() {
        // A 4-cell grid with unequal, complex mode amplitudes.
        let volume = 0.25;
        let phi_a = vec![
            Complex64::from_polar(1.2, 0.3),
            Complex64::from_polar(0.9, 2.0),
            Complex64::from_polar(0.8, 4.4),
            Complex64::from_polar(0.93059, 5.9),
        ];
        let phi_b = vec![
            Complex64::from_polar(0.7, 1.0),
            Complex64::from_polar(1.1, 0.0),
            Complex64::from_polar(1.25, 3.3),
            Complex64::from_polar(0.79570, 2.2),
        ];
        // Rescale to unit norm exactly.
        let norm = |v: &[Complex64]| (v.iter().map(|z| z.norm_sqr()).sum::<f64>() * volume).sqrt();
        let na = norm(&phi_a);
        let nb = norm(&phi_b);
        let phi_a: Vec<Complex64> = phi_a.into_iter().map(|z| z / na).collect();
        let phi_b: Vec<Complex64> = phi_b.into_iter().map(|z| z / nb).collect();
        let modes = GeneralModePair::new(phi_a, phi_b, volume).unwrap();
        let spec = CondensateSpec::tabulated(5, 6, modes, true).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..15 {
            let p = 1 + rng.gen_range(0..5);
            let events: Vec<DetectionEvent> = (0..p)
                .map(|_| {
                    let cell = rng.gen_range(0..4);
                    if rng.gen::<bool>() {
                        DetectionEvent::position_cell(cell)
                    } else {
                        let eta = if rng.gen::<bool>() { Sign::Plus } else { Sign::Minus };
                        DetectionEvent::spin_cell(cell, rng.gen::<f64>() * TAU, eta)
                    }
                })
                .collect();
            for mode in [WeightMode::Falling, WeightMode::Power] {
                let dp = exact_sequence_probability(&events, &spec, mode).unwrap().value;
                let gf = twomode_spin_oracle(&events, &spec, mode).unwrap().value;
                let brute = brute_force_oracle(&events, &spec, mode).unwrap().value;
                assert_relative_eq!(dp, gf, max_relative = 1e-11, epsilon = 1e-14);
                assert_relative_eq!(dp, brute, max_relative = 1e-11, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn extinction_beyond_population() {
        // All particles sit in mode a: three detections cannot all transfer.
        let spec = plane_spec(2, 0);
        let e = |theta: f64| DetectionEvent::spin(0.0, theta, Sign::Plus);
        let three = exact_sequence_probability(
            &[e(0.1), e(0.5), e(0.9)],
            &spec,
            WeightMode::Falling,
        )
        .unwrap();
        assert_abs_diff_eq!(three.value, 0.0, epsilon = 1e-12);

        let two =
            exact_sequence_probability(&[e(0.1), e(0.5)], &spec, WeightMode::Falling).unwrap();
        assert_relative_eq!(two.value, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn huge_populations_stay_finite() {
        let spec = plane_spec(1_000_000, 999_983);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let events = random_two_mode_record(&mut rng, 12);
        for mode in [WeightMode::Falling, WeightMode::Power] {
            let v = exact_sequence_probability(&events, &spec, mode).unwrap().value;
            assert!(v.is_finite());
            assert!(v >= 0.0, "sequence value must be nonnegative, got {v}");
        }
    }

    #[test]
    fn three_mode_single_detection_counts_particles() {
        let spec = three_spec(4, 5, 6);
        let e = [DetectionEvent::position3(0.4, 1.1, TAU - 1.5).unwrap()];
        let r = exact_sequence_probability(&e, &spec, WeightMode::Falling).unwrap();
        assert_relative_eq!(r.value, 15.0, max_relative = 1e-12);
    }

    #[test]
    fn three_mode_dp_matches_enumeration() {
        let spec = three_spec(3, 5, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let p = 1 + rng.gen_range(0..4);
            let events: Vec<DetectionEvent> = (0..p)
                .map(|_| {
                    let u_ab = rng.gen::<f64>() * TAU;
                    let u_bc = rng.gen::<f64>() * TAU;
                    DetectionEvent::position3(u_ab, u_bc, -u_ab - u_bc).unwrap()
                })
                .collect();
            for mode in [WeightMode::Falling, WeightMode::Power] {
                let dp = exact_sequence_probability(&events, &spec, mode).unwrap().value;
                let brute = brute_force_oracle(&events, &spec, mode).unwrap().value;
                assert_relative_eq!(dp, brute, max_relative = 1e-11, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn empty_third_mode_reduces_to_two_modes() {
        // With N_c = 0 the falling weights kill every path through c, and the
        // surviving amplitudes match the two-mode DP regardless of u_bc.
        let spec3 = three_spec(4, 6, 0);
        let spec2 = plane_spec(4, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let p = 1 + rng.gen_range(0..4);
            let mut events3 = Vec::new();
            let mut events2 = Vec::new();
            for _ in 0..p {
                let u_ab = rng.gen::<f64>() * TAU;
                let u_bc = rng.gen::<f64>() * TAU;
                events3.push(DetectionEvent::position3(u_ab, u_bc, -u_ab - u_bc).unwrap());
                events2.push(DetectionEvent::position(u_ab));
            }
            let v3 = exact_sequence_probability(&events3, &spec3, WeightMode::Falling)
                .unwrap()
                .value;
            let v2 = exact_sequence_probability(&events2, &spec2, WeightMode::Falling)
                .unwrap()
                .value;
            assert_relative_eq!(v3, v2, max_relative = 1e-11, epsilon = 1e-12);
        }
    }

    #[test]
    fn three_mode_cap_enforced() {
        let spec = three_spec(100, 100, 100);
        let events: Vec<DetectionEvent> = (0..16)
            .map(|i| {
                let u = 0.1 * i as f64;
                DetectionEvent::position3(u, u, -2.0 * u).unwrap()
            })
            .collect();
        assert!(matches!(
            exact_sequence_probability(&events, &spec, WeightMode::Falling),
            Err(Error::OracleCap(_))
        ));
    }

    #[test]
    fn remote_orientation_basics() {
        let n = 50;
        let spec = plane_spec(n, n);

        // No record: no transverse orientation anywhere.
        for theta in [0.0, 1.0, 2.5] {
            let v = remote_orientation_exact(
                &[],
                &spec,
                EventPlace::Reduced(0.0),
                theta,
                WeightMode::Falling,
            )
            .unwrap();
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
        }

        // One + result along θ₀ orients the whole gas: ⟨σ_θ⟩ = N·cos(θ − θ₀)
        // at equal populations (identical for falling and power weights).
        let theta0 = 1.1;
        let record = [DetectionEvent::spin(0.0, theta0, Sign::Plus)];
        for mode in [WeightMode::Falling, WeightMode::Power] {
            for theta in [theta0, theta0 + 1.0, theta0 + TAU / 2.0] {
                let v = remote_orientation_exact(
                    &record,
                    &spec,
                    EventPlace::Reduced(0.0),
                    theta,
                    mode,
                )
                .unwrap();
                assert_relative_eq!(
                    v,
                    n as f64 * (theta - theta0).cos(),
                    max_relative = 1e-11,
                    epsilon = 1e-10
                );
            }
        }

        // The profile API matches pointwise evaluation.
        let thetas = [0.0, 0.9, 2.2, 5.1];
        let prof = remote_orientation_profile_exact(
            &record,
            &spec,
            EventPlace::Reduced(0.0),
            &thetas,
            WeightMode::Falling,
        )
        .unwrap();
        for (i, &theta) in thetas.iter().enumerate() {
            let single = remote_orientation_exact(
                &record,
                &spec,
                EventPlace::Reduced(0.0),
                theta,
                WeightMode::Falling,
            )
            .unwrap();
            assert_abs_diff_eq!(prof[i], single, epsilon = 1e-12);
        }
    }

    #[test]
    fn remote_target_must_not_be_measured() {
        let volume = 0.5;
        let amp = Complex64::new(1.0, 0.0);
        let modes = GeneralModePair::new(vec![amp, amp], vec![amp, amp], volume).unwrap();
        let spec = CondensateSpec::tabulated(3, 3, modes, true).unwrap();
        let record = [DetectionEvent::spin_cell(0, 0.0, Sign::Plus)];
        assert!(remote_orientation_exact(
            &record,
            &spec,
            EventPlace::Cell(0),
            0.0,
            WeightMode::Falling
        )
        .is_err());
        assert!(remote_orientation_exact(
            &record,
            &spec,
            EventPlace::Cell(1),
            0.0,
            WeightMode::Falling
        )
        .is_ok());
    }
}
