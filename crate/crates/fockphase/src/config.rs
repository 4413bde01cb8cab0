//! TOML experiment configurations: schema, validation, and builders that turn
//! a parsed config into specifications, priors, models, and sampling plans.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Deserialize;

use crate::engine::{EventFactorModel, SamplePlan, DEFAULT_CANDIDATES};
use crate::error::{Error, Result};
use crate::model::{CondensateSpec, Region, RegionLayout, RegionRole, Vec3};
use crate::prior::{
    coefficients_from_csv, coherent_coefficients, g_from_coefficients, CoherentSpec,
    PhaseDistribution, DEFAULT_GRID, DEFAULT_GRID_2D, MIN_GRID,
};
use crate::spin::AnglePolicy;

/// Largest record length relative to the total population before the large-N
/// factor model is considered out of its domain.
pub const LARGE_P_FRACTION: f64 = 0.1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub condensate: CondensateSection,
    #[serde(default)]
    pub prior: PriorSection,
    pub events: EventsSection,
    #[serde(default)]
    pub grids: GridsSection,
    #[serde(default)]
    pub validation: ValidationSection,
    #[serde(default)]
    pub regions: Option<RegionsSection>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub oracle: Option<OracleSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Default output directory; command-line flags take precedence.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CondensateSection {
    pub n_a: u64,
    pub n_b: u64,
    pub n_c: Option<u64>,
    #[serde(default)]
    pub spinful: bool,
    #[serde(default = "zero_k")]
    pub k_a: [f64; 3],
    #[serde(default = "zero_k")]
    pub k_b: [f64; 3],
    pub k_c: Option<[f64; 3]>,
}

fn zero_k() -> [f64; 3] {
    [0.0; 3]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PriorSection {
    /// Pure number states: no phase information before the first detection.
    Uniform,
    /// Coherent amplitude profile of modulus |α| and phase Θ.
    Coherent {
        modulus: f64,
        #[serde(default)]
        theta: f64,
        q_max: Option<usize>,
    },
    /// Amplitude table loaded from CSV columns (Q, re, im).
    Coefficients { path: PathBuf },
}

impl Default for PriorSection {
    fn default() -> Self {
        PriorSection::Uniform
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventPlanKind {
    /// Position detections on a two-mode interference pattern.
    Position,
    /// Spin detections at full mode overlap.
    Spin,
    /// Position detections on a three-mode pattern.
    ThreeMode,
    /// Spin detections sampled across a region layout.
    RegionSpin,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PolicySection {
    Fixed {
        #[serde(default)]
        theta0: f64,
    },
    Alternating {
        #[serde(default)]
        theta0: f64,
        delta: f64,
    },
    Perpendicular {
        #[serde(default)]
        fallback: f64,
    },
}

impl Default for PolicySection {
    fn default() -> Self {
        PolicySection::Fixed { theta0: 0.0 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventsSection {
    pub kind: EventPlanKind,
    pub p: usize,
    #[serde(default)]
    pub policy: PolicySection,
    /// Candidate grid size for position sampling (per dimension for
    /// three-mode plans).
    #[serde(default = "default_candidates")]
    pub candidates: usize,
    /// Whether per-step posterior densities are kept on the record (circular
    /// statistics are always kept).
    #[serde(default = "default_true")]
    pub store_densities: bool,
}

fn default_candidates() -> usize {
    DEFAULT_CANDIDATES
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridsSection {
    /// Phase-grid size for one-phase posteriors.
    #[serde(default = "default_grid")]
    pub m: usize,
    /// Per-dimension grid size for two-phase posteriors.
    #[serde(default = "default_grid_2d")]
    pub m2: usize,
}

fn default_grid() -> usize {
    DEFAULT_GRID
}

fn default_grid_2d() -> usize {
    DEFAULT_GRID_2D
}

impl Default for GridsSection {
    fn default() -> Self {
        GridsSection {
            m: DEFAULT_GRID,
            m2: DEFAULT_GRID_2D,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationSection {
    /// Permit records longer than N/10 despite the large-N approximation.
    #[serde(default)]
    pub allow_large_p: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoleConfig {
    Measured,
    Remote,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub name: String,
    pub cells: usize,
    pub role: RoleConfig,
    /// Complex amplitude as [re, im].
    pub phi_a: [f64; 2],
    pub phi_b: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionsSection {
    pub cell_volume: f64,
    pub region: Vec<RegionConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default)]
    pub p_values: Vec<usize>,
    #[serde(default)]
    pub alpha_values: Vec<f64>,
    #[serde(default = "default_sweep_seeds")]
    pub seeds: u64,
}

fn default_sweep_seeds() -> u64 {
    100
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    /// Population values (per mode, equal split) for the oracle comparison.
    #[serde(default)]
    pub n_values: Vec<u64>,
    /// Record length for the comparison; defaults to events.p capped at 12.
    pub p: Option<usize>,
}

impl ExperimentConfig {
    /// Parse and validate a TOML configuration string.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load and validate a configuration file.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Structural validation with field-path messages; all problems are
    /// collected before reporting.
    pub fn validate(&self) -> Result<()> {
        let mut issues: Vec<String> = Vec::new();
        let events = &self.events;
        let cond = &self.condensate;
        let total = cond.n_a + cond.n_b + cond.n_c.unwrap_or(0);

        if self.experiment.name.trim().is_empty() {
            issues.push("experiment.name: must not be empty".into());
        }
        if total == 0 {
            issues.push("condensate: total population is zero".into());
        }

        let finite_k = |k: &[f64; 3]| k.iter().all(|v| v.is_finite());
        if !finite_k(&cond.k_a) {
            issues.push("condensate.k_a: must be finite".into());
        }
        if !finite_k(&cond.k_b) {
            issues.push("condensate.k_b: must be finite".into());
        }
        if let Some(k_c) = &cond.k_c {
            if !finite_k(k_c) {
                issues.push("condensate.k_c: must be finite".into());
            }
        }

        let is_three = events.kind == EventPlanKind::ThreeMode;
        if is_three {
            if cond.n_c.is_none() {
                issues.push("condensate.n_c: required for three-mode events".into());
            }
            if cond.k_c.is_none() {
                issues.push("condensate.k_c: required for three-mode events".into());
            }
            if cond.spinful {
                issues.push("condensate.spinful: three-mode condensates are spinless".into());
            }
        } else if cond.n_c.is_some() || cond.k_c.is_some() {
            issues.push(
                "condensate.n_c/k_c: only meaningful with events.kind = \"three-mode\"".into(),
            );
        }

        let is_spin = matches!(events.kind, EventPlanKind::Spin | EventPlanKind::RegionSpin);
        if is_spin && !cond.spinful {
            issues.push(
                "condensate.spinful: spin detections require internal mode labels; set spinful = true"
                    .into(),
            );
        }

        if events.kind == EventPlanKind::RegionSpin {
            match &self.regions {
                None => issues.push("regions: required for region-spin events".into()),
                Some(_) => {
                    if let Err(e) = self.build_layout() {
                        issues.push(format!("regions: {e}"));
                    }
                }
            }
        } else if self.regions.is_some() {
            issues.push("regions: only meaningful with events.kind = \"region-spin\"".into());
        }

        let needs_candidates =
            matches!(events.kind, EventPlanKind::Position | EventPlanKind::ThreeMode);
        if needs_candidates && events.candidates < 2 {
            issues.push(format!(
                "events.candidates: need at least 2 grid points, got {}",
                events.candidates
            ));
        }

        let grid = if is_three { self.grids.m2 } else { self.grids.m };
        let grid_name = if is_three { "grids.m2" } else { "grids.m" };
        if grid < MIN_GRID {
            issues.push(format!(
                "{grid_name}: {grid} is below the minimum of {MIN_GRID}"
            ));
        }
        if grid < events.p + 1 {
            issues.push(format!(
                "{grid_name}: {grid} points cannot integrate a {}-event record exactly; need at least P+1 = {}",
                events.p,
                events.p + 1
            ));
        }

        let p_cap = (total as f64 * LARGE_P_FRACTION).floor() as usize;
        if total > 0 && events.p > p_cap && !self.validation.allow_large_p {
            issues.push(format!(
                "events.p: {} detections exceed N/10 = {p_cap}, outside the large-N factor \
                 model's domain (set validation.allow_large_p = true to override)",
                events.p
            ));
        }

        match &self.prior {
            PriorSection::Uniform => {}
            PriorSection::Coherent {
                modulus,
                theta,
                q_max,
            } => {
                if !(modulus.is_finite() && *modulus >= 0.0) {
                    issues.push(format!(
                        "prior.modulus: must be finite and nonnegative, got {modulus}"
                    ));
                }
                if !theta.is_finite() {
                    issues.push("prior.theta: must be finite".into());
                }
                if is_three {
                    issues.push("prior: three-mode runs take a uniform prior".into());
                }
                if modulus.is_finite() && *modulus >= 0.0 {
                    let q_eff = match q_max {
                        Some(q) => *q,
                        None => CoherentSpec::auto(*modulus, 0.0).map(|c| c.q_max).unwrap_or(0),
                    };
                    if let Some(msg) = superposition_reach_issue(q_eff, cond.n_a, cond.n_b) {
                        issues.push(format!("prior.q_max: {msg}"));
                    }
                }
            }
            PriorSection::Coefficients { path } => {
                if path.as_os_str().is_empty() {
                    issues.push("prior.path: must not be empty".into());
                }
                if is_three {
                    issues.push("prior: three-mode runs take a uniform prior".into());
                }
            }
        }

        if let PolicySection::Alternating { theta0, delta } = &events.policy {
            if !theta0.is_finite() || !delta.is_finite() {
                issues.push("events.policy: angles must be finite".into());
            }
        }

        if let Some(sweep) = &self.sweep {
            if sweep.seeds == 0 {
                issues.push("sweep.seeds: need at least one seed".into());
            }
            if sweep.p_values.is_empty() && sweep.alpha_values.is_empty() {
                issues.push("sweep: provide p_values and/or alpha_values".into());
            }
            if sweep.alpha_values.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
                issues.push("sweep.alpha_values: must be finite and nonnegative".into());
            }
        }

        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(issues.join("; ")))
        }
    }

    /// Condensate specification implied by the config.
    pub fn build_spec(&self) -> Result<CondensateSpec> {
        let c = &self.condensate;
        let v = |k: [f64; 3]| Vec3::new(k[0], k[1], k[2]);
        match self.events.kind {
            EventPlanKind::ThreeMode => {
                let n_c = c
                    .n_c
                    .ok_or_else(|| Error::Config("condensate.n_c: required".into()))?;
                let k_c = c
                    .k_c
                    .ok_or_else(|| Error::Config("condensate.k_c: required".into()))?;
                CondensateSpec::three_mode(c.n_a, c.n_b, n_c, v(c.k_a), v(c.k_b), v(k_c))
            }
            EventPlanKind::RegionSpin => {
                let layout = self.build_layout()?;
                CondensateSpec::tabulated(c.n_a, c.n_b, layout.to_mode_pair()?, c.spinful)
            }
            _ => CondensateSpec::two_mode(c.n_a, c.n_b, v(c.k_a), v(c.k_b), c.spinful),
        }
    }

    /// Region layout, for region-spin configurations.
    pub fn build_layout(&self) -> Result<RegionLayout> {
        let section = self
            .regions
            .as_ref()
            .ok_or_else(|| Error::Config("regions: section missing".into()))?;
        let layout = RegionLayout {
            regions: section
                .region
                .iter()
                .map(|r| Region {
                    name: r.name.clone(),
                    cells: r.cells,
                    phi_a: Complex64::new(r.phi_a[0], r.phi_a[1]),
                    phi_b: Complex64::new(r.phi_b[0], r.phi_b[1]),
                    role: match r.role {
                        RoleConfig::Measured => RegionRole::Measured,
                        RoleConfig::Remote => RegionRole::Remote,
                    },
                })
                .collect(),
            cell_volume: section.cell_volume,
        };
        layout.validate()?;
        Ok(layout)
    }

    /// Grid size appropriate for the configured event kind.
    pub fn grid(&self) -> usize {
        if self.events.kind == EventPlanKind::ThreeMode {
            self.grids.m2
        } else {
            self.grids.m
        }
    }

    /// Initial phase distribution implied by the prior section.
    pub fn build_prior(&self) -> Result<PhaseDistribution> {
        if self.events.kind == EventPlanKind::ThreeMode {
            return PhaseDistribution::uniform2(self.grids.m2);
        }
        let m = self.grids.m;
        match &self.prior {
            PriorSection::Uniform => PhaseDistribution::uniform(m),
            PriorSection::Coherent {
                modulus,
                theta,
                q_max,
            } => {
                let spec = match q_max {
                    Some(q) => CoherentSpec::new(*modulus, *theta, *q)?,
                    None => CoherentSpec::auto(*modulus, *theta)?,
                };
                g_from_coefficients(&coherent_coefficients(&spec)?, m)
            }
            PriorSection::Coefficients { path } => {
                let table = coefficients_from_csv(path)?;
                if let Some(msg) = superposition_reach_issue(
                    table.q_max(),
                    self.condensate.n_a,
                    self.condensate.n_b,
                ) {
                    return Err(Error::Config(format!("prior.path: {msg}")));
                }
                table.to_prior(m)
            }
        }
    }

    pub fn build_model(&self) -> Result<EventFactorModel> {
        EventFactorModel::from_spec(&self.build_spec()?)
    }

    pub fn build_policy(&self) -> AnglePolicy {
        match &self.events.policy {
            PolicySection::Fixed { theta0 } => AnglePolicy::fixed(*theta0),
            PolicySection::Alternating { theta0, delta } => {
                AnglePolicy::alternating(*theta0, *delta)
            }
            PolicySection::Perpendicular { fallback } => AnglePolicy::perpendicular(*fallback),
        }
    }

    pub fn build_plan(&self) -> Result<SamplePlan> {
        Ok(match self.events.kind {
            EventPlanKind::Position => SamplePlan::PositionGrid {
                candidates: self.events.candidates,
            },
            EventPlanKind::ThreeMode => SamplePlan::ThreeModeGrid {
                candidates: self.events.candidates,
            },
            EventPlanKind::Spin => SamplePlan::SpinShared {
                policy: self.build_policy(),
            },
            EventPlanKind::RegionSpin => {
                let layout = self.build_layout()?;
                let mut cells = Vec::new();
                for region in &layout.regions {
                    if region.role == RegionRole::Measured {
                        cells.extend(layout.cell_range(&region.name)?);
                    }
                }
                SamplePlan::RegionSpin {
                    policy: self.build_policy(),
                    cells,
                }
            }
        })
    }
}

/// A number superposition reaching a sizable fraction of the populations
/// breaks the fixed-population factor model.
fn superposition_reach_issue(q_max: usize, n_a: u64, n_b: u64) -> Option<String> {
    let cap = (n_a.min(n_b) as f64 * LARGE_P_FRACTION).floor() as u64;
    if q_max as u64 > cap {
        Some(format!(
            "superposition reaches Q = {q_max}, beyond min(N_a, N_b)/10 = {cap}; \
             increase the populations or narrow the superposition"
        ))
    } else {
        None
    }
}
