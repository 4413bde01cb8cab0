//! Transverse-spin measurements: closed-form equal-angle references, axis
//! policies, remote-orientation predictions, and region experiments.
//!
//! Repeated spin detections along one axis pin the relative phase the same way
//! interference positions do; once the posterior carries a direction, the
//! whole cloud — including regions never measured — acquires a predictable
//! transverse orientation θ* at every point where both modes overlap.

use crate::engine::{sample_record_with_posterior, EventFactorModel, SamplePlan};
use crate::error::{Error, Result};
use crate::model::{
    CondensateSpec, GeneralModePair, MeasurementRecord, RegionLayout, RegionRole,
};
use crate::numeric::{canonical_angle, ln_factorial, ln_gamma_half, PI};
use crate::prior::PhaseDistribution;

/// Posterior resultant below which feedback policies fall back to a preset
/// axis instead of trusting a numerically meaningless mean direction.
pub const POLICY_RESULTANT_FLOOR: f64 = 1e-6;

/// Closed-form probability of an equal-angle spin sequence with P₊ plus and
/// P₋ minus results at full contrast:
/// Γ(P₊+½)·Γ(P₋+½) / (π·(P₊+P₋)!).
pub fn wallis_reference(p_plus: usize, p_minus: usize) -> f64 {
    (ln_gamma_half(p_plus as u64) + ln_gamma_half(p_minus as u64)
        - PI.ln()
        - ln_factorial((p_plus + p_minus) as u64))
    .exp()
}

/// How the measurement axis evolves over a spin record.
#[derive(Clone, Debug, PartialEq)]
pub enum PolicyKind {
    /// Every detection along one fixed axis.
    Fixed { theta0: f64 },
    /// Axis advances by a fixed increment per detection.
    Alternating { theta0: f64, delta: f64 },
    /// Axis perpendicular to the current posterior mean — the most phase-
    /// informative choice once a direction exists.
    PerpendicularFeedback,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnglePolicy {
    pub kind: PolicyKind,
    /// Axis used while the posterior is still directionless.
    pub fallback: f64,
}

impl AnglePolicy {
    pub fn fixed(theta0: f64) -> Self {
        let theta0 = canonical_angle(theta0);
        AnglePolicy {
            kind: PolicyKind::Fixed { theta0 },
            fallback: theta0,
        }
    }

    pub fn alternating(theta0: f64, delta: f64) -> Self {
        let theta0 = canonical_angle(theta0);
        AnglePolicy {
            kind: PolicyKind::Alternating { theta0, delta },
            fallback: theta0,
        }
    }

    pub fn perpendicular(fallback: f64) -> Self {
        AnglePolicy {
            kind: PolicyKind::PerpendicularFeedback,
            fallback: canonical_angle(fallback),
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            PolicyKind::Fixed { theta0 } => format!("fixed({theta0:.4})"),
            PolicyKind::Alternating { theta0, delta } => {
                format!("alternating({theta0:.4}, {delta:+.4})")
            }
            PolicyKind::PerpendicularFeedback => {
                format!("perpendicular(fallback={:.4})", self.fallback)
            }
        }
    }

    /// Measurement axis for the next detection, given the posterior so far.
    pub fn next_angle(&self, step: usize, posterior: &PhaseDistribution) -> f64 {
        match &self.kind {
            PolicyKind::Fixed { theta0 } => *theta0,
            PolicyKind::Alternating { theta0, delta } => {
                canonical_angle(theta0 + step as f64 * delta)
            }
            PolicyKind::PerpendicularFeedback => {
                let stats = posterior.stats();
                if stats.resultant < POLICY_RESULTANT_FLOOR {
                    self.fallback
                } else {
                    canonical_angle(stats.mean.expect("mean defined above the floor") + PI / 2.0)
                }
            }
        }
    }
}

/// Free-function form of [`AnglePolicy::next_angle`].
pub fn next_angle(policy: &AnglePolicy, step: usize, posterior: &PhaseDistribution) -> f64 {
    policy.next_angle(step, posterior)
}

/// Predicted transverse orientation at an unmeasured point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RemotePrediction {
    /// Axis of maximal expected transverse spin, absent while the posterior
    /// carries no direction.
    pub theta_star: Option<f64>,
    /// Posterior resultant length L ∈ [0, 1]: how committed the phase is.
    pub confidence: f64,
    /// Full-confidence spin-density amplitude 2√(N_aN_b)·|φ_a φ_b| at the
    /// target point.
    pub magnitude: f64,
}

impl RemotePrediction {
    /// Predicted ⟨σ_θ⟩ at the target as a function of the measurement axis.
    pub fn expected_sigma(&self, theta: f64) -> f64 {
        match self.theta_star {
            Some(ts) => self.magnitude * self.confidence * (theta - ts).cos(),
            None => 0.0,
        }
    }
}

/// Predict the transverse orientation at one cell of a tabulated mode pair
/// from the current phase posterior: θ* = mean(Φ) − ξ(r*), with confidence
/// given by the posterior resultant.
pub fn predict_remote_orientation_at(
    posterior: &PhaseDistribution,
    modes: &GeneralModePair,
    cell: usize,
    n_a: u64,
    n_b: u64,
) -> Result<RemotePrediction> {
    if cell >= modes.len() {
        return Err(Error::InvalidInput(format!(
            "cell index {cell} outside the {}-cell mode grid",
            modes.len()
        )));
    }
    let xi = modes.xi(cell).ok_or_else(|| {
        Error::NoOrientation(format!(
            "modes do not overlap at cell {cell}; no transverse spin exists there"
        ))
    })?;
    let stats = posterior.stats();
    let magnitude = 2.0 * ((n_a as f64) * (n_b as f64)).sqrt() * modes.overlap(cell);
    Ok(RemotePrediction {
        theta_star: stats.mean.map(|mu| canonical_angle(mu - xi)),
        confidence: stats.resultant,
        magnitude,
    })
}

/// [`predict_remote_orientation_at`] addressed by region name.
pub fn predict_remote_orientation(
    posterior: &PhaseDistribution,
    layout: &RegionLayout,
    region: &str,
    spec: &CondensateSpec,
) -> Result<RemotePrediction> {
    let modes = layout.to_mode_pair()?;
    let cell = layout.representative_cell(region)?;
    predict_remote_orientation_at(posterior, &modes, cell, spec.n_a, spec.n_b)
}

/// A sampled region record together with the final posterior and the
/// orientation predictions it implies for every remote region.
#[derive(Clone, Debug)]
pub struct RegionExperiment {
    pub record: MeasurementRecord,
    pub posterior: PhaseDistribution,
    /// (region name, prediction) in layout declaration order.
    pub predictions: Vec<(String, RemotePrediction)>,
}

/// Sample P spin detections inside the measured region(s) of a layout, then
/// predict the transverse orientation in every remote region.
///
/// The layout supplies the spatial mode structure; the specification supplies
/// the populations (and must be spinful and two-mode).
pub fn run_region_experiment(
    seed: u64,
    p: usize,
    policy: &AnglePolicy,
    layout: &RegionLayout,
    spec: &CondensateSpec,
    prior: &PhaseDistribution,
    store_densities: bool,
) -> Result<RegionExperiment> {
    layout.validate()?;
    spec.validate()?;
    if spec.is_three_mode() {
        return Err(Error::InvalidInput(
            "region experiments are a two-mode construction".into(),
        ));
    }
    if !spec.spinful {
        return Err(Error::InvalidSpec(
            "spin detections require a spinful specification".into(),
        ));
    }
    let modes = layout.to_mode_pair()?;
    let model = EventFactorModel::Tabulated {
        x: spec.contrast()?,
        modes: modes.clone(),
    };
    let mut cells = Vec::new();
    for region in &layout.regions {
        if region.role == RegionRole::Measured {
            cells.extend(layout.cell_range(&region.name)?);
        }
    }
    let plan = SamplePlan::RegionSpin {
        policy: policy.clone(),
        cells,
    };
    let (record, posterior) =
        sample_record_with_posterior(seed, p, &plan, prior, &model, store_densities)?;

    let mut predictions = Vec::new();
    for name in layout.region_names(RegionRole::Remote) {
        let cell = layout.representative_cell(&name)?;
        let prediction =
            predict_remote_orientation_at(&posterior, &modes, cell, spec.n_a, spec.n_b)?;
        predictions.push((name, prediction));
    }
    Ok(RegionExperiment {
        record,
        posterior,
        predictions,
    })
}
