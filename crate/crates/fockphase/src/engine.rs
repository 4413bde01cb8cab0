//! The large-N phase-integral engine.
//!
//! Conditioned on a relative phase Φ, every detection contributes one fringe
//! factor; the unconditional sequence probability integrates the product of
//! factors against the phase prior, and the posterior over Φ multiplies the
//! prior by one factor per recorded event. Because each factor is a
//! trigonometric polynomial of degree 1 per phase, an M-point uniform grid
//! integrates a P-event product exactly whenever M ≥ P + 1.
//!
//! Sign convention (global across the crate): two-mode factors oscillate as
//! cos(u + θ − Φ); three-mode factors as cos(u_ab + Φ), cos(u_bc + Φ′),
//! cos(u_ca − Φ − Φ′).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{
    CondensateSpec, DetectionEvent, EventKind, EventPlace, GeneralModePair, MeasurementRecord,
    ModeGeometry, Sign, Snapshot,
};
use crate::prior::PhaseDistribution;
use crate::spin::AnglePolicy;
use crate::stats::CircularStats;

/// Default number of candidate positions on the sampling grid.
pub const DEFAULT_CANDIDATES: usize = 1024;
/// Record length beyond which replay accumulates log-densities.
pub const LOG_SPACE_THRESHOLD: usize = 1000;

const TWO_THIRDS: f64 = 2.0 / 3.0;

/// Fringe-factor model: mode count, contrasts, and the source of spatial
/// dependence.
#[derive(Clone, Debug)]
pub enum EventFactorModel {
    /// Two plane-wave modes with contrast x; events carry reduced coordinates.
    TwoMode { x: f64 },
    /// Three plane-wave modes with pairwise contrasts 3√(N_iN_j)/N.
    ThreeMode { x_ab: f64, x_bc: f64, x_ca: f64 },
    /// Two tabulated modes; events carry cell indices.
    Tabulated { x: f64, modes: GeneralModePair },
}

impl EventFactorModel {
    pub fn from_spec(spec: &CondensateSpec) -> Result<Self> {
        spec.validate()?;
        match &spec.geometry {
            ModeGeometry::PlaneWave2 { .. } => Ok(EventFactorModel::TwoMode {
                x: spec.contrast()?,
            }),
            ModeGeometry::PlaneWave3 { .. } => {
                let [x_ab, x_bc, x_ca] = spec.contrast3()?;
                Ok(EventFactorModel::ThreeMode { x_ab, x_bc, x_ca })
            }
            ModeGeometry::Tabulated(modes) => Ok(EventFactorModel::Tabulated {
                x: spec.contrast()?,
                modes: modes.clone(),
            }),
        }
    }

    /// Number of phase variables the model integrates over.
    pub fn dims(&self) -> usize {
        match self {
            EventFactorModel::ThreeMode { .. } => 2,
            _ => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, x: f64, hi: f64| -> Result<()> {
            if !(x.is_finite() && (0.0..=hi).contains(&x)) {
                return Err(Error::InvalidSpec(format!(
                    "contrast {name} = {x} outside [0, {hi}]"
                )));
            }
            Ok(())
        };
        match self {
            EventFactorModel::TwoMode { x } => check("x", *x, 1.0),
            EventFactorModel::Tabulated { x, .. } => check("x", *x, 1.0),
            // Pairwise three-mode contrasts reach 3·(N/2)/N = 1.5 when one
            // mode empties; the factor stays nonnegative because the three
            // cosine arguments sum to a constant.
            EventFactorModel::ThreeMode { x_ab, x_bc, x_ca } => {
                check("x_ab", *x_ab, 1.5)?;
                check("x_bc", *x_bc, 1.5)?;
                check("x_ca", *x_ca, 1.5)
            }
        }
    }
}

/// One fringe factor reduced to base + amp·cos(angle − Φ).
struct LinFactor {
    base: f64,
    amp: f64,
    angle: f64,
}

impl LinFactor {
    fn eval(&self, phi: f64) -> f64 {
        (self.base + self.amp * (self.angle - phi).cos()).max(0.0)
    }
}

fn reduced_u(e: &DetectionEvent) -> Result<f64> {
    match e.place {
        EventPlace::Reduced(u) => Ok(u),
        _ => Err(Error::InvalidInput(
            "event does not carry a two-mode reduced coordinate".into(),
        )),
    }
}

fn reduced3(e: &DetectionEvent) -> Result<(f64, f64, f64)> {
    match e.place {
        EventPlace::Reduced3 { u_ab, u_bc, u_ca } => Ok((u_ab, u_bc, u_ca)),
        _ => Err(Error::InvalidInput(
            "event does not carry three-mode reduced coordinates".into(),
        )),
    }
}

fn linearize(e: &DetectionEvent, model: &EventFactorModel) -> Result<LinFactor> {
    match model {
        EventFactorModel::TwoMode { x } => {
            let u = reduced_u(e)?;
            Ok(LinFactor {
                base: 1.0,
                amp: x * e.eta.value(),
                angle: u + e.theta,
            })
        }
        EventFactorModel::Tabulated { x, modes } => {
            let cell = match e.place {
                EventPlace::Cell(c) if c < modes.len() => c,
                EventPlace::Cell(c) => {
                    return Err(Error::InvalidInput(format!(
                        "cell index {c} outside the {}-cell mode grid",
                        modes.len()
                    )));
                }
                _ => {
                    return Err(Error::InvalidInput(
                        "tabulated models take cell-indexed events".into(),
                    ));
                }
            };
            let base = modes.density_a(cell) + modes.density_b(cell);
            let overlap = modes.overlap(cell);
            // Dead cells (both modes vanish) give a legal zero factor.
            let angle = modes.xi(cell).unwrap_or(0.0) + e.theta;
            Ok(LinFactor {
                base,
                amp: 2.0 * x * e.eta.value() * overlap,
                angle,
            })
        }
        EventFactorModel::ThreeMode { .. } => Err(Error::InvalidInput(
            "three-mode factors depend on two phases; use event_factor3".into(),
        )),
    }
}

/// Single-event fringe factor at phase Φ.
///
/// Plane waves: 1 + x·η·cos(u + θ − Φ). Tabulated modes:
/// |φ_a|² + |φ_b|² + 2x·η·|φ_aφ_b|·cos(ξ + θ − Φ). Position detections carry
/// η = +1, θ = 0.
pub fn event_factor(e: &DetectionEvent, phi: f64, model: &EventFactorModel) -> Result<f64> {
    model.validate()?;
    Ok(linearize(e, model)?.eval(phi))
}

/// Three-mode fringe factor at phases (Φ, Φ′), normalized to unit uniform
/// average: 1 + (2/3)[x_ab·cos(u_ab+Φ) + x_bc·cos(u_bc+Φ′) + x_ca·cos(u_ca−Φ−Φ′)].
pub fn event_factor3(
    e: &DetectionEvent,
    phi: f64,
    phi_prime: f64,
    model: &EventFactorModel,
) -> Result<f64> {
    model.validate()?;
    let (x_ab, x_bc, x_ca) = match model {
        EventFactorModel::ThreeMode { x_ab, x_bc, x_ca } => (*x_ab, *x_bc, *x_ca),
        _ => {
            return Err(Error::InvalidInput(
                "event_factor3 requires a three-mode model".into(),
            ));
        }
    };
    if e.kind != EventKind::Position {
        return Err(Error::InvalidInput(
            "three-mode detections are position measurements".into(),
        ));
    }
    let (u_ab, u_bc, u_ca) = reduced3(e)?;
    let f = 1.0
        + TWO_THIRDS
            * (x_ab * (u_ab + phi).cos()
                + x_bc * (u_bc + phi_prime).cos()
                + x_ca * (u_ca - phi - phi_prime).cos());
    Ok(f.max(0.0))
}

fn check_degree(m: usize, p: usize) -> Result<()> {
    if m < p + 1 {
        return Err(Error::QuadratureDegree { m, needed: p + 1 });
    }
    Ok(())
}

fn check_dims(prior: &PhaseDistribution, model: &EventFactorModel) -> Result<()> {
    if prior.dims() != model.dims() {
        return Err(Error::InvalidInput(format!(
            "prior has {} phase dimension(s) but the model needs {}",
            prior.dims(),
            model.dims()
        )));
    }
    Ok(())
}

/// Probability of an ordered detection sequence under a phase prior, by exact
/// grid quadrature (unit-density convention: the empty sequence returns 1).
///
/// Each spin detection contributes its projector normalization ½ here, so that
/// summing over all 2^P spin-result patterns yields exactly 1.
pub fn sequence_probability(
    events: &[DetectionEvent],
    prior: &PhaseDistribution,
    model: &EventFactorModel,
) -> Result<f64> {
    model.validate()?;
    check_dims(prior, model)?;
    let p = events.len();
    check_degree(prior.m(), p)?;
    let spins = events.iter().filter(|e| e.is_spin()).count();
    let halving = 0.5f64.powi(spins as i32);

    let m = prior.m();
    let acc = match model.dims() {
        1 => {
            let factors: Vec<LinFactor> = events
                .iter()
                .map(|e| linearize(e, model))
                .collect::<Result<_>>()?;
            let mut acc = 0.0;
            for (j, &g) in prior.density().iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                let phi = prior.phi(j);
                let mut prod = g;
                for f in &factors {
                    prod *= f.eval(phi);
                }
                acc += prod;
            }
            acc
        }
        _ => {
            let coords: Vec<(f64, f64, f64)> =
                events.iter().map(reduced3).collect::<Result<_>>()?;
            for e in events {
                if e.kind != EventKind::Position {
                    return Err(Error::InvalidInput(
                        "three-mode detections are position measurements".into(),
                    ));
                }
            }
            let (x_ab, x_bc, x_ca) = match model {
                EventFactorModel::ThreeMode { x_ab, x_bc, x_ca } => (*x_ab, *x_bc, *x_ca),
                _ => unreachable!(),
            };
            let mut acc = 0.0;
            for j in 0..m {
                let phi = prior.phi(j);
                for k in 0..m {
                    let g = prior.density()[j * m + k];
                    if g == 0.0 {
                        continue;
                    }
                    let phi_p = prior.phi(k);
                    let mut prod = g;
                    for &(u_ab, u_bc, u_ca) in &coords {
                        let f = 1.0
                            + TWO_THIRDS
                                * (x_ab * (u_ab + phi).cos()
                                    + x_bc * (u_bc + phi_p).cos()
                                    + x_ca * (u_ca - phi - phi_p).cos());
                        prod *= f.max(0.0);
                    }
                    acc += prod;
                }
            }
            acc
        }
    };
    Ok(acc * prior.cell_weight() * halving)
}

fn apply_event_in_place(
    dist: &mut PhaseDistribution,
    e: &DetectionEvent,
    model: &EventFactorModel,
) -> Result<()> {
    match model.dims() {
        1 => {
            let f = linearize(e, model)?;
            let m = dist.m();
            for j in 0..m {
                let phi = dist.phi(j);
                dist.density_mut()[j] *= f.eval(phi);
            }
            Ok(())
        }
        _ => {
            let (x_ab, x_bc, x_ca) = match model {
                EventFactorModel::ThreeMode { x_ab, x_bc, x_ca } => (*x_ab, *x_bc, *x_ca),
                _ => unreachable!(),
            };
            if e.kind != EventKind::Position {
                return Err(Error::InvalidInput(
                    "three-mode detections are position measurements".into(),
                ));
            }
            let (u_ab, u_bc, u_ca) = reduced3(e)?;
            let m = dist.m();
            // Tabulate the three cosine terms; the third depends on the
            // diagonal index (j + k) mod M only.
            let a: Vec<f64> = (0..m).map(|j| x_ab * (u_ab + dist.phi(j)).cos()).collect();
            let b: Vec<f64> = (0..m).map(|k| x_bc * (u_bc + dist.phi(k)).cos()).collect();
            let c: Vec<f64> = (0..m).map(|s| x_ca * (u_ca - dist.phi(s)).cos()).collect();
            let dens = dist.density_mut();
            for j in 0..m {
                let row = &mut dens[j * m..(j + 1) * m];
                let mut s = j;
                for (k, g) in row.iter_mut().enumerate() {
                    let f = 1.0 + TWO_THIRDS * (a[j] + b[k] + c[s]);
                    *g *= f.max(0.0);
                    s += 1;
                    if s == m {
                        s = 0;
                    }
                }
            }
            Ok(())
        }
    }
}

/// Bayesian update: multiply the distribution pointwise by the event's fringe
/// factor and renormalize. (Constant projector prefactors cancel here.)
pub fn posterior_update(
    dist: &PhaseDistribution,
    e: &DetectionEvent,
    model: &EventFactorModel,
) -> Result<PhaseDistribution> {
    model.validate()?;
    check_dims(dist, model)?;
    let mut out = dist.clone();
    apply_event_in_place(&mut out, e, model)?;
    out.normalize()?;
    Ok(out)
}

/// First trigonometric moments (⟨e^{iΦ}⟩, ⟨e^{iΦ′}⟩, ⟨e^{i(Φ+Φ′)}⟩) of a
/// two-phase distribution via row, column, and wrapped-diagonal sums.
fn three_mode_moments(dist: &PhaseDistribution) -> (Complex64, Complex64, Complex64) {
    let m = dist.m();
    let mut rows = vec![0.0; m];
    let mut cols = vec![0.0; m];
    let mut diags = vec![0.0; m];
    let dens = dist.density();
    for j in 0..m {
        let row = &dens[j * m..(j + 1) * m];
        let mut s = j;
        let mut row_sum = 0.0;
        for (k, &g) in row.iter().enumerate() {
            row_sum += g;
            cols[k] += g;
            diags[s] += g;
            s += 1;
            if s == m {
                s = 0;
            }
        }
        rows[j] += row_sum;
    }
    let w = dist.cell_weight();
    let contract = |v: &[f64]| -> Complex64 {
        v.iter()
            .enumerate()
            .map(|(j, &g)| g * Complex64::from_polar(1.0, dist.phi(j)))
            .sum::<Complex64>()
            * w
    };
    (contract(&rows), contract(&cols), contract(&diags))
}

/// Predictive weights p(c) = ∫ dist(Φ)·event_factor(c, Φ) dΦ for a batch of
/// hypothetical events (grid quadrature, evaluated through first moments).
///
/// Weights are bare factor integrals: the spin-projector ½ is a common
/// constant across candidates and cancels on sampling.
pub fn predictive_density(
    dist: &PhaseDistribution,
    candidates: &[DetectionEvent],
    model: &EventFactorModel,
) -> Result<Vec<f64>> {
    model.validate()?;
    check_dims(dist, model)?;
    if candidates.is_empty() {
        return Err(Error::InvalidInput("empty candidate list".into()));
    }
    match model.dims() {
        1 => {
            let m0 = dist.total_mass();
            let m1c = dist.trig_moment(1).conj();
            candidates
                .iter()
                .map(|e| {
                    let f = linearize(e, model)?;
                    let osc = (Complex64::from_polar(1.0, f.angle) * m1c).re;
                    Ok((f.base * m0 + f.amp * osc).max(0.0))
                })
                .collect()
        }
        _ => {
            let (x_ab, x_bc, x_ca) = match model {
                EventFactorModel::ThreeMode { x_ab, x_bc, x_ca } => (*x_ab, *x_bc, *x_ca),
                _ => unreachable!(),
            };
            let m0 = dist.total_mass();
            let (m10, m01, m11) = three_mode_moments(dist);
            // cos(u_ca − Φ − Φ′) pairs with the conjugate sum moment.
            let m11c = m11.conj();
            candidates
                .iter()
                .map(|e| {
                    let (u_ab, u_bc, u_ca) = reduced3(e)?;
                    let term = |u: f64, x: f64, m: Complex64| {
                        x * (Complex64::from_polar(1.0, u) * m).re
                    };
                    let p = m0
                        + TWO_THIRDS
                            * (term(u_ab, x_ab, m10)
                                + term(u_bc, x_bc, m01)
                                + term(u_ca, x_ca, m11c));
                    Ok(p.max(0.0))
                })
                .collect()
        }
    }
}

/// Circular statistics of a one-phase distribution (marginals cover two-phase
/// posteriors).
pub fn circular_stats(dist: &PhaseDistribution) -> CircularStats {
    dist.stats()
}

/// How candidate events are generated while sampling a record.
#[derive(Clone, Debug)]
pub enum SamplePlan {
    /// Position detections drawn from a uniform grid over u ∈ [0, 2π).
    PositionGrid { candidates: usize },
    /// Three-mode position detections on a (u_ab, u_bc) candidate torus
    /// (`candidates` points per dimension); u_ca closes the triple.
    ThreeModeGrid { candidates: usize },
    /// Spin detections at full mode overlap (u = 0); the axis follows the
    /// policy, the result η is sampled.
    SpinShared { policy: AnglePolicy },
    /// Spin detections across tabulated cells; both the cell and η are
    /// sampled, the axis follows the policy.
    RegionSpin { policy: AnglePolicy, cells: Vec<usize> },
}

impl SamplePlan {
    pub fn describe(&self) -> String {
        match self {
            SamplePlan::PositionGrid { candidates } => format!("position-grid({candidates})"),
            SamplePlan::ThreeModeGrid { candidates } => {
                format!("three-mode-grid({candidates}x{candidates})")
            }
            SamplePlan::SpinShared { policy } => format!("spin-shared({})", policy.describe()),
            SamplePlan::RegionSpin { policy, cells } => {
                format!("region-spin({}, {} cells)", policy.describe(), cells.len())
            }
        }
    }
}

/// Inverse-CDF draw over unnormalized weights.
fn inverse_cdf(weights: &[f64], v: f64) -> Result<usize> {
    let total: f64 = weights.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::ZeroProbabilityRecord);
    }
    let target = v * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if acc > target {
            return Ok(i);
        }
    }
    // Rounding pushed the cumulative just below the target: take the last
    // candidate that carries any weight.
    weights
        .iter()
        .rposition(|&w| w > 0.0)
        .ok_or(Error::ZeroProbabilityRecord)
}

fn snapshot_of(dist: &PhaseDistribution, store_density: bool) -> Snapshot {
    Snapshot {
        stats: dist.marginal_stats(),
        density: store_density.then(|| dist.density().to_vec()),
    }
}

/// Sample a P-event record: each event is drawn from the predictive density
/// over the plan's candidates (inverse-CDF on the grid), then folded into
/// the posterior. Fully deterministic per seed.
pub fn sample_record(
    seed: u64,
    p: usize,
    plan: &SamplePlan,
    prior: &PhaseDistribution,
    model: &EventFactorModel,
    store_densities: bool,
) -> Result<MeasurementRecord> {
    let (record, _) = sample_record_with_posterior(seed, p, plan, prior, model, store_densities)?;
    Ok(record)
}

/// [`sample_record`], also returning the final posterior.
pub fn sample_record_with_posterior(
    seed: u64,
    p: usize,
    plan: &SamplePlan,
    prior: &PhaseDistribution,
    model: &EventFactorModel,
    store_densities: bool,
) -> Result<(MeasurementRecord, PhaseDistribution)> {
    model.validate()?;
    check_dims(prior, model)?;
    check_degree(prior.m(), p)?;
    plan_model_compatible(plan, model)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut post = prior.clone();
    let mut events = Vec::with_capacity(p);
    let mut snapshots = Vec::with_capacity(p);

    // Fixed candidate sets can be built once.
    let fixed_candidates: Option<Vec<DetectionEvent>> = match plan {
        SamplePlan::PositionGrid { candidates } => {
            require_candidates(*candidates)?;
            Some(
                crate::numeric::phase_grid(*candidates)
                    .into_iter()
                    .map(DetectionEvent::position)
                    .collect(),
            )
        }
        SamplePlan::ThreeModeGrid { candidates } => {
            require_candidates(*candidates)?;
            let grid = crate::numeric::phase_grid(*candidates);
            let mut cands = Vec::with_capacity(candidates * candidates);
            for &u_ab in &grid {
                for &u_bc in &grid {
                    let u_ca = crate::numeric::canonical_angle(-u_ab - u_bc);
                    cands.push(DetectionEvent {
                        kind: EventKind::Position,
                        place: EventPlace::Reduced3 { u_ab, u_bc, u_ca },
                        theta: 0.0,
                        eta: Sign::Plus,
                    });
                }
            }
            Some(cands)
        }
        _ => None,
    };

    for step in 0..p {
        let spin_candidates: Option<Vec<DetectionEvent>> = match plan {
            SamplePlan::SpinShared { policy } => {
                let theta = policy.next_angle(step, &post);
                Some(vec![
                    DetectionEvent::spin(0.0, theta, Sign::Plus),
                    DetectionEvent::spin(0.0, theta, Sign::Minus),
                ])
            }
            SamplePlan::RegionSpin { policy, cells } => {
                let theta = policy.next_angle(step, &post);
                let mut cands = Vec::with_capacity(2 * cells.len());
                for &cell in cells {
                    cands.push(DetectionEvent::spin_cell(cell, theta, Sign::Plus));
                    cands.push(DetectionEvent::spin_cell(cell, theta, Sign::Minus));
                }
                Some(cands)
            }
            _ => None,
        };
        let candidates = spin_candidates
            .as_deref()
            .or(fixed_candidates.as_deref())
            .expect("plan provides candidates");

        let weights = predictive_density(&post, candidates, model)?;
        let pick = inverse_cdf(&weights, rng.gen::<f64>())?;
        let event = candidates[pick];

        apply_event_in_place(&mut post, &event, model)?;
        post.normalize()?;
        snapshots.push(snapshot_of(&post, store_densities));
        events.push(event);
    }

    Ok((
        MeasurementRecord {
            events,
            snapshots,
            seed,
            policy: plan.describe(),
        },
        post,
    ))
}

fn require_candidates(c: usize) -> Result<()> {
    if c < 2 {
        return Err(Error::InvalidInput(format!(
            "candidate grids need at least 2 points, got {c}"
        )));
    }
    Ok(())
}

fn plan_model_compatible(plan: &SamplePlan, model: &EventFactorModel) -> Result<()> {
    let ok = matches!(
        (plan, model),
        (SamplePlan::PositionGrid { .. }, EventFactorModel::TwoMode { .. })
            | (SamplePlan::SpinShared { .. }, EventFactorModel::TwoMode { .. })
            | (SamplePlan::ThreeModeGrid { .. }, EventFactorModel::ThreeMode { .. })
            | (SamplePlan::RegionSpin { .. }, EventFactorModel::Tabulated { .. })
    );
    if !ok {
        return Err(Error::InvalidInput(format!(
            "sampling plan {} does not match the factor model",
            plan.describe()
        )));
    }
    if let (SamplePlan::RegionSpin { cells, .. }, EventFactorModel::Tabulated { modes, .. }) =
        (plan, model)
    {
        if cells.is_empty() {
            return Err(Error::InvalidInput("region has no cells to sample".into()));
        }
        if let Some(&bad) = cells.iter().find(|&&c| c >= modes.len()) {
            return Err(Error::InvalidInput(format!(
                "region cell {bad} outside the {}-cell mode grid",
                modes.len()
            )));
        }
    }
    Ok(())
}

/// Posterior replay of an externally supplied record.
#[derive(Clone, Debug)]
pub struct ReplayResult {
    pub posterior: PhaseDistribution,
    pub snapshots: Vec<Snapshot>,
}

/// Fold a fixed event sequence into the prior, snapshotting after each event.
///
/// Impossible records (posterior mass underflow) error out. Long records
/// (P > [`LOG_SPACE_THRESHOLD`]) accumulate log-densities instead of repeated
/// linear renormalization.
pub fn replay_record(
    events: &[DetectionEvent],
    prior: &PhaseDistribution,
    model: &EventFactorModel,
    store_densities: bool,
) -> Result<ReplayResult> {
    model.validate()?;
    check_dims(prior, model)?;
    check_degree(prior.m(), events.len())?;

    if events.len() > LOG_SPACE_THRESHOLD {
        return replay_log_space(events, prior, model, store_densities);
    }

    let mut post = prior.clone();
    let mut snapshots = Vec::with_capacity(events.len());
    for e in events {
        apply_event_in_place(&mut post, e, model)?;
        post.normalize()?;
        snapshots.push(snapshot_of(&post, store_densities));
    }
    Ok(ReplayResult {
        posterior: post,
        snapshots,
    })
}

fn replay_log_space(
    events: &[DetectionEvent],
    prior: &PhaseDistribution,
    model: &EventFactorModel,
    store_densities: bool,
) -> Result<ReplayResult> {
    if prior.dims() != 1 {
        // Long-record replay is a one-phase workflow; two-phase records stay
        // within the linear path's length regime.
        return Err(Error::InvalidInput(
            "log-space replay supports one-phase records only".into(),
        ));
    }
    let mut ln_g: Vec<f64> = prior.density().iter().map(|&g| g.ln()).collect();
    let mut snapshots = Vec::with_capacity(events.len());
    let mut scratch = PhaseDistribution::uniform(prior.m())?;
    for e in events {
        let f = linearize(e, model)?;
        for (j, lg) in ln_g.iter_mut().enumerate() {
            *lg += f.eval(prior.phi(j)).ln();
        }
        let max = ln_g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::ZeroProbabilityRecord);
        }
        for (j, g) in scratch.density_mut().iter_mut().enumerate() {
            *g = (ln_g[j] - max).exp();
        }
        scratch.normalize()?;
        snapshots.push(snapshot_of(&scratch, store_densities));
    }
    Ok(ReplayResult {
        posterior: scratch,
        snapshots,
    })
}
