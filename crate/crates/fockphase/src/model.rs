//! Domain types: condensate specifications, mode geometry, detection events,
//! region layouts, and measurement records.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{canonical_angle, TAU};
use crate::stats::CircularStats;

/// Tolerance for unit-norm checks on tabulated mode functions.
pub const NORM_TOL: f64 = 1e-9;

/// Tolerance on the closure u_ab + u_bc + u_ca ≡ 0 (mod 2π) of three-mode
/// reduced coordinates.
pub const CLOSURE_TOL: f64 = 1e-9;

/// Cartesian 3-vector used for wavevectors and positions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Outcome of a spin detection: ±1 along the chosen axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn to_i8(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn from_i8(v: i8) -> Result<Self> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(Error::InvalidInput(format!(
                "spin result must be +1 or -1, got {other}"
            ))),
        }
    }
}

/// Fringe contrast x = 2√(N_a N_b)/(N_a + N_b) of two-mode interference.
///
/// Equals 1 exactly when the populations are equal and nonzero, and 0 when
/// either mode is empty.
pub fn contrast_ratio(n_a: u64, n_b: u64) -> Result<f64> {
    if n_a == 0 && n_b == 0 {
        return Err(Error::InvalidSpec(
            "empty condensate: both populations are zero".into(),
        ));
    }
    let (na, nb) = (n_a as f64, n_b as f64);
    Ok((2.0 * (na * nb).sqrt() / (na + nb)).min(1.0))
}

/// Reduce a position to the two-mode interference coordinate
/// u = ((k_a − k_b)·r) mod 2π.
pub fn reduce_position(r: Vec3, k_a: Vec3, k_b: Vec3) -> f64 {
    canonical_angle(k_a.sub(k_b).dot(r))
}

/// Two complex mode functions tabulated on a shared position grid.
///
/// Cells are abstract: only values and a common cell volume enter; each mode
/// is unit-normalized (Σ|φ|²·volume = 1 within [`NORM_TOL`]).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralModePair {
    phi_a: Vec<Complex64>,
    phi_b: Vec<Complex64>,
    cell_volume: f64,
}

impl GeneralModePair {
    pub fn new(phi_a: Vec<Complex64>, phi_b: Vec<Complex64>, cell_volume: f64) -> Result<Self> {
        if phi_a.is_empty() || phi_a.len() != phi_b.len() {
            return Err(Error::InvalidSpec(format!(
                "mode tables must be nonempty and share one grid (got {} and {} cells)",
                phi_a.len(),
                phi_b.len()
            )));
        }
        if !(cell_volume.is_finite() && cell_volume > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "cell volume must be positive and finite, got {cell_volume}"
            )));
        }
        for (name, tab) in [("phi_a", &phi_a), ("phi_b", &phi_b)] {
            if tab.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::InvalidSpec(format!("{name} contains non-finite values")));
            }
            let norm: f64 = tab.iter().map(|z| z.norm_sqr()).sum::<f64>() * cell_volume;
            if (norm - 1.0).abs() > NORM_TOL {
                return Err(Error::InvalidSpec(format!(
                    "{name} is not unit-normalized: Σ|φ|²·cell = {norm:.12} (tolerance {NORM_TOL:e})"
                )));
            }
        }
        Ok(GeneralModePair {
            phi_a,
            phi_b,
            cell_volume,
        })
    }

    pub fn len(&self) -> usize {
        self.phi_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi_a.is_empty()
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    pub fn phi_a(&self, cell: usize) -> Complex64 {
        self.phi_a[cell]
    }

    pub fn phi_b(&self, cell: usize) -> Complex64 {
        self.phi_b[cell]
    }

    pub fn density_a(&self, cell: usize) -> f64 {
        self.phi_a[cell].norm_sqr()
    }

    pub fn density_b(&self, cell: usize) -> f64 {
        self.phi_b[cell].norm_sqr()
    }

    /// Overlap modulus |φ_a(r) φ_b(r)|.
    pub fn overlap(&self, cell: usize) -> f64 {
        self.phi_a[cell].norm() * self.phi_b[cell].norm()
    }

    /// Relative mode phase ξ(r) = arg(φ_a/φ_b) ∈ [0, 2π), defined only where
    /// both mode functions are nonzero.
    pub fn xi(&self, cell: usize) -> Option<f64> {
        if self.overlap(cell) > 0.0 {
            Some(canonical_angle(self.phi_a[cell].arg() - self.phi_b[cell].arg()))
        } else {
            None
        }
    }
}

/// Spatial structure of the condensate modes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum ModeGeometry {
    /// Two plane-wave modes; positions reduce to u = (k_a − k_b)·r mod 2π.
    PlaneWave2 { k_a: Vec3, k_b: Vec3 },
    /// Three plane-wave modes; positions reduce to the coordinate triple
    /// (u_ab, u_bc, u_ca) summing to 0 mod 2π.
    PlaneWave3 { k_a: Vec3, k_b: Vec3, k_c: Vec3 },
    /// Two tabulated (not necessarily plane-wave) modes on a shared grid.
    Tabulated(GeneralModePair),
}

/// A juxtaposition of condensates with exactly known populations.
///
/// Two modes a/b (optionally carrying internal pseudo-spin labels α/β), or
/// three spinless plane-wave modes a/b/c.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CondensateSpec {
    pub n_a: u64,
    pub n_b: u64,
    /// Populated only for three-mode specifications.
    pub n_c: Option<u64>,
    pub geometry: ModeGeometry,
    /// Whether modes a/b carry internal (pseudo-spin) labels, enabling spin
    /// detections.
    pub spinful: bool,
}

impl CondensateSpec {
    pub fn two_mode(n_a: u64, n_b: u64, k_a: Vec3, k_b: Vec3, spinful: bool) -> Result<Self> {
        let spec = CondensateSpec {
            n_a,
            n_b,
            n_c: None,
            geometry: ModeGeometry::PlaneWave2 { k_a, k_b },
            spinful,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn three_mode(n_a: u64, n_b: u64, n_c: u64, k_a: Vec3, k_b: Vec3, k_c: Vec3) -> Result<Self> {
        let spec = CondensateSpec {
            n_a,
            n_b,
            n_c: Some(n_c),
            geometry: ModeGeometry::PlaneWave3 { k_a, k_b, k_c },
            spinful: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn tabulated(n_a: u64, n_b: u64, modes: GeneralModePair, spinful: bool) -> Result<Self> {
        let spec = CondensateSpec {
            n_a,
            n_b,
            n_c: None,
            geometry: ModeGeometry::Tabulated(modes),
            spinful,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn total(&self) -> u64 {
        self.n_a + self.n_b + self.n_c.unwrap_or(0)
    }

    pub fn is_three_mode(&self) -> bool {
        matches!(self.geometry, ModeGeometry::PlaneWave3 { .. })
    }

    /// Two-mode fringe contrast x = 2√(N_a N_b)/N.
    pub fn contrast(&self) -> Result<f64> {
        if self.is_three_mode() {
            return Err(Error::InvalidInput(
                "two-mode contrast requested on a three-mode specification".into(),
            ));
        }
        contrast_ratio(self.n_a, self.n_b)
    }

    /// Three-mode pairwise contrasts (x_ab, x_bc, x_ca) = 3√(N_i N_j)/N.
    pub fn contrast3(&self) -> Result<[f64; 3]> {
        let n_c = self.n_c.ok_or_else(|| {
            Error::InvalidInput("three-mode contrasts requested on a two-mode specification".into())
        })?;
        let n = self.total();
        if n == 0 {
            return Err(Error::InvalidSpec(
                "empty condensate: all populations are zero".into(),
            ));
        }
        let nf = n as f64;
        let (na, nb, nc) = (self.n_a as f64, self.n_b as f64, n_c as f64);
        Ok([
            3.0 * (na * nb).sqrt() / nf,
            3.0 * (nb * nc).sqrt() / nf,
            3.0 * (nc * na).sqrt() / nf,
        ])
    }

    pub fn validate(&self) -> Result<()> {
        if self.total() == 0 {
            return Err(Error::InvalidSpec(
                "empty condensate: total population is zero".into(),
            ));
        }
        match (&self.geometry, self.n_c) {
            (ModeGeometry::PlaneWave3 { .. }, None) => {
                return Err(Error::InvalidSpec(
                    "three-mode geometry requires population n_c".into(),
                ));
            }
            (ModeGeometry::PlaneWave3 { .. }, Some(_)) if self.spinful => {
                return Err(Error::InvalidSpec(
                    "spin detections are defined for two-mode specifications only".into(),
                ));
            }
            (ModeGeometry::PlaneWave2 { .. } | ModeGeometry::Tabulated(_), Some(_)) => {
                return Err(Error::InvalidSpec(
                    "population n_c given without three-mode geometry".into(),
                ));
            }
            _ => {}
        }
        match &self.geometry {
            ModeGeometry::PlaneWave2 { k_a, k_b } => {
                if !(k_a.is_finite() && k_b.is_finite()) {
                    return Err(Error::InvalidSpec("wavevectors must be finite".into()));
                }
            }
            ModeGeometry::PlaneWave3 { k_a, k_b, k_c } => {
                if !(k_a.is_finite() && k_b.is_finite() && k_c.is_finite()) {
                    return Err(Error::InvalidSpec("wavevectors must be finite".into()));
                }
            }
            // Tabulated mode pairs validate their own norms on construction.
            ModeGeometry::Tabulated(_) => {}
        }
        Ok(())
    }
}

/// Whether a detection is a plain position measurement or a spin measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Position,
    Spin,
}

/// Where a detection happened, in reduced coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum EventPlace {
    /// Two-mode reduced coordinate u ∈ [0, 2π).
    Reduced(f64),
    /// Three-mode reduced coordinates, closing to 0 mod 2π.
    Reduced3 { u_ab: f64, u_bc: f64, u_ca: f64 },
    /// Cell index into tabulated mode functions.
    Cell(usize),
}

/// One measurement: a place, and for spin detections an axis θ and result η.
///
/// Position detections fix θ = 0 and η = +1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub kind: EventKind,
    pub place: EventPlace,
    pub theta: f64,
    pub eta: Sign,
}

impl DetectionEvent {
    /// Position detection at a reduced coordinate.
    pub fn position(u: f64) -> Self {
        DetectionEvent {
            kind: EventKind::Position,
            place: EventPlace::Reduced(canonical_angle(u)),
            theta: 0.0,
            eta: Sign::Plus,
        }
    }

    /// Position detection at a 3-D position for plane-wave modes.
    pub fn position_at(r: Vec3, k_a: Vec3, k_b: Vec3) -> Self {
        Self::position(reduce_position(r, k_a, k_b))
    }

    /// Three-mode position detection from reduced coordinates.
    ///
    /// The coordinates must close: u_ab + u_bc + u_ca ≡ 0 (mod 2π) within
    /// [`CLOSURE_TOL`], since all three derive from one physical position.
    pub fn position3(u_ab: f64, u_bc: f64, u_ca: f64) -> Result<Self> {
        let s = canonical_angle(u_ab + u_bc + u_ca);
        if s.min(TAU - s) > CLOSURE_TOL {
            return Err(Error::InvalidInput(format!(
                "inconsistent three-mode coordinates: u_ab+u_bc+u_ca = {s:.3e} mod 2π"
            )));
        }
        Ok(DetectionEvent {
            kind: EventKind::Position,
            place: EventPlace::Reduced3 {
                u_ab: canonical_angle(u_ab),
                u_bc: canonical_angle(u_bc),
                u_ca: canonical_angle(u_ca),
            },
            theta: 0.0,
            eta: Sign::Plus,
        })
    }

    /// Three-mode position detection at a 3-D position.
    pub fn position3_at(r: Vec3, k_a: Vec3, k_b: Vec3, k_c: Vec3) -> Self {
        DetectionEvent {
            kind: EventKind::Position,
            place: EventPlace::Reduced3 {
                u_ab: reduce_position(r, k_a, k_b),
                u_bc: reduce_position(r, k_b, k_c),
                u_ca: reduce_position(r, k_c, k_a),
            },
            theta: 0.0,
            eta: Sign::Plus,
        }
    }

    /// Position detection in a tabulated-mode cell.
    pub fn position_cell(cell: usize) -> Self {
        DetectionEvent {
            kind: EventKind::Position,
            place: EventPlace::Cell(cell),
            theta: 0.0,
            eta: Sign::Plus,
        }
    }

    /// Spin detection at reduced coordinate u, along axis θ, with result η.
    pub fn spin(u: f64, theta: f64, eta: Sign) -> Self {
        DetectionEvent {
            kind: EventKind::Spin,
            place: EventPlace::Reduced(canonical_angle(u)),
            theta: canonical_angle(theta),
            eta,
        }
    }

    /// Spin detection in a tabulated-mode cell.
    pub fn spin_cell(cell: usize, theta: f64, eta: Sign) -> Self {
        DetectionEvent {
            kind: EventKind::Spin,
            place: EventPlace::Cell(cell),
            theta: canonical_angle(theta),
            eta,
        }
    }

    pub fn is_spin(&self) -> bool {
        self.kind == EventKind::Spin
    }
}

/// Role of a region in a distant-detection layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionRole {
    /// Detections are sampled here.
    Measured,
    /// Orientation predictions are evaluated here.
    Remote,
}

/// A named block of grid cells over which both mode functions are constant.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Region {
    pub name: String,
    /// Number of grid cells the region occupies.
    pub cells: usize,
    pub phi_a: Complex64,
    pub phi_b: Complex64,
    pub role: RegionRole,
}

/// Disjoint named regions with piecewise-constant mode functions.
///
/// The global grid is the concatenation of the regions' cells in declaration
/// order, which makes the regions disjoint by construction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegionLayout {
    pub regions: Vec<Region>,
    pub cell_volume: f64,
}

impl RegionLayout {
    pub fn validate(&self) -> Result<()> {
        if self.regions.is_empty() {
            return Err(Error::InvalidSpec("region layout has no regions".into()));
        }
        if !(self.cell_volume.is_finite() && self.cell_volume > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "cell volume must be positive and finite, got {}",
                self.cell_volume
            )));
        }
        for (i, r) in self.regions.iter().enumerate() {
            if r.cells == 0 {
                return Err(Error::InvalidSpec(format!("region `{}` has zero cells", r.name)));
            }
            if self.regions[..i].iter().any(|o| o.name == r.name) {
                return Err(Error::InvalidSpec(format!("duplicate region name `{}`", r.name)));
            }
        }
        if !self.regions.iter().any(|r| r.role == RegionRole::Measured) {
            return Err(Error::InvalidSpec("no region is marked as measured".into()));
        }
        // Norm checks are delegated to the mode-pair constructor.
        self.to_mode_pair().map(|_| ())
    }

    /// Expand the piecewise-constant regions into tabulated mode functions.
    pub fn to_mode_pair(&self) -> Result<GeneralModePair> {
        let total: usize = self.regions.iter().map(|r| r.cells).sum();
        let mut phi_a = Vec::with_capacity(total);
        let mut phi_b = Vec::with_capacity(total);
        for r in &self.regions {
            phi_a.extend(std::iter::repeat(r.phi_a).take(r.cells));
            phi_b.extend(std::iter::repeat(r.phi_b).take(r.cells));
        }
        GeneralModePair::new(phi_a, phi_b, self.cell_volume)
    }

    /// Range of global cell indices covered by a named region.
    pub fn cell_range(&self, name: &str) -> Result<std::ops::Range<usize>> {
        let mut start = 0usize;
        for r in &self.regions {
            if r.name == name {
                return Ok(start..start + r.cells);
            }
            start += r.cells;
        }
        Err(Error::InvalidInput(format!("no region named `{name}`")))
    }

    /// Representative cell (the first one) of a named region.
    pub fn representative_cell(&self, name: &str) -> Result<usize> {
        Ok(self.cell_range(name)?.start)
    }

    /// Names of all regions with the given role, in declaration order.
    pub fn region_names(&self, role: RegionRole) -> Vec<String> {
        self.regions
            .iter()
            .filter(|r| r.role == role)
            .map(|r| r.name.clone())
            .collect()
    }
}

/// Posterior summary captured after each detection.
#[derive(Clone, Debug, Serialize)]
pub struct Snapshot {
    /// Circular statistics per phase coordinate; two-phase posteriors append
    /// the (Φ+Φ′) sum marginal as a third entry.
    pub stats: Vec<CircularStats>,
    /// Full posterior density (flattened row-major for two phases); omitted in
    /// ensemble runs to bound memory.
    pub density: Option<Vec<f64>>,
}

/// An ordered detection sequence with per-step posterior snapshots.
#[derive(Clone, Debug, Serialize)]
pub struct MeasurementRecord {
    pub events: Vec<DetectionEvent>,
    pub snapshots: Vec<Snapshot>,
    pub seed: u64,
    pub policy: String,
}

impl MeasurementRecord {
    pub fn validate(&self) -> Result<()> {
        if self.snapshots.len() != self.events.len() {
            return Err(Error::InvalidSpec(format!(
                "snapshot count {} does not match event count {}",
                self.snapshots.len(),
                self.events.len()
            )));
        }
        Ok(())
    }

    /// Snapshot after the final event, if any.
    pub fn final_snapshot(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::PI;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn contrast_examples() {
        assert_eq!(contrast_ratio(500, 500).unwrap(), 1.0);
        assert_eq!(contrast_ratio(7, 0).unwrap(), 0.0);
        assert_relative_eq!(
            contrast_ratio(3, 1).unwrap(),
            3f64.sqrt() / 2.0,
            max_relative = 1e-14
        );
        assert!(contrast_ratio(0, 0).is_err());
    }

    #[test]
    fn contrast_symmetry_and_extremes() {
        for &(a, b) in &[(1u64, 5u64), (10, 1000), (123456, 7)] {
            assert_eq!(contrast_ratio(a, b).unwrap(), contrast_ratio(b, a).unwrap());
            assert!(contrast_ratio(a, b).unwrap() < 1.0);
        }
        // Exactly 1 only for equal nonzero populations, even at large sizes.
        assert_eq!(contrast_ratio(1_000_000_000, 1_000_000_000).unwrap(), 1.0);
    }

    #[test]
    fn reduce_position_examples() {
        let ka = Vec3::new(1.0, 0.0, 0.0);
        let kb = Vec3::new(0.0, 0.0, 0.0);
        assert_eq!(reduce_position(Vec3::new(0.0, 0.0, 0.0), ka, kb), 0.0);
        assert_relative_eq!(
            reduce_position(Vec3::new(PI, 0.0, 0.0), ka, kb),
            PI,
            max_relative = 1e-15
        );
        assert_abs_diff_eq!(
            reduce_position(Vec3::new(TAU + 0.5, 0.0, 0.0), ka, kb),
            0.5,
            epsilon = 1e-12
        );
        // Constant orthogonally to k_a − k_b.
        assert_eq!(reduce_position(Vec3::new(0.0, 3.7, -2.2), ka, kb), 0.0);
    }

    #[test]
    fn three_mode_contrasts() {
        let k = Vec3::new(0.0, 0.0, 0.0);
        let spec = CondensateSpec::three_mode(100, 100, 100, k, k, k).unwrap();
        let x = spec.contrast3().unwrap();
        assert_relative_eq!(x[0], 1.0, max_relative = 1e-14);
        assert_relative_eq!(x[1], 1.0, max_relative = 1e-14);
        assert_relative_eq!(x[2], 1.0, max_relative = 1e-14);

        // An empty third mode kills the two contrasts that involve it.
        let spec = CondensateSpec::three_mode(10, 10, 0, k, k, k).unwrap();
        let x = spec.contrast3().unwrap();
        assert_relative_eq!(x[0], 1.5, max_relative = 1e-14);
        assert_eq!(x[1], 0.0);
        assert_eq!(x[2], 0.0);
    }

    #[test]
    fn spec_validation() {
        let k = Vec3::new(1.0, 0.0, 0.0);
        assert!(CondensateSpec::two_mode(0, 0, k, k, false).is_err());
        assert!(CondensateSpec::two_mode(1, 0, k, k, false).is_ok());
        let mut bad = CondensateSpec::two_mode(5, 5, k, k, false).unwrap();
        bad.n_c = Some(3);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn event_constructors_canonicalize() {
        let e = DetectionEvent::spin(-0.5, TAU + 1.0, Sign::Minus);
        match e.place {
            EventPlace::Reduced(u) => assert_relative_eq!(u, TAU - 0.5, max_relative = 1e-15),
            _ => panic!("wrong place"),
        }
        assert_abs_diff_eq!(e.theta, 1.0, epsilon = 1e-12);
        assert_eq!(e.eta, Sign::Minus);

        let p = DetectionEvent::position(7.0);
        assert_eq!(p.kind, EventKind::Position);
        assert_eq!(p.eta, Sign::Plus);
        assert_eq!(p.theta, 0.0);
    }

    #[test]
    fn three_mode_coordinates_must_close() {
        assert!(DetectionEvent::position3(1.0, 2.0, TAU - 3.0).is_ok());
        assert!(DetectionEvent::position3(1.0, 2.0, 1.0).is_err());
        // Closure may land on either side of the circle.
        assert!(DetectionEvent::position3(0.0, 0.0, -1e-12).is_ok());

        let r = Vec3::new(0.3, -1.2, 2.0);
        let (ka, kb, kc) = (
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        );
        let e = DetectionEvent::position3_at(r, ka, kb, kc);
        if let EventPlace::Reduced3 { u_ab, u_bc, u_ca } = e.place {
            let s = canonical_angle(u_ab + u_bc + u_ca);
            assert!(s.min(TAU - s) < 1e-9);
        } else {
            panic!("wrong place");
        }
    }

    #[test]
    fn mode_pair_norm_validation() {
        let n = 8;
        let v = 1.0 / n as f64;
        let flat = vec![Complex64::new(1.0, 0.0); n];
        let pair = GeneralModePair::new(flat.clone(), flat.clone(), v).unwrap();
        assert_eq!(pair.len(), n);
        assert_relative_eq!(pair.overlap(0), 1.0, max_relative = 1e-14);
        assert_eq!(pair.xi(0), Some(0.0));

        let bad = vec![Complex64::new(2.0, 0.0); n];
        assert!(GeneralModePair::new(bad, flat, v).is_err());
    }

    #[test]
    fn xi_tracks_relative_phase() {
        let v = 0.5;
        let a = vec![
            Complex64::from_polar(1.0, 1.0),
            Complex64::from_polar(1.0, 2.5),
        ];
        let b = vec![
            Complex64::from_polar(1.0, 0.25),
            Complex64::new(0.0, 0.0),
        ];
        // Renormalize b: only the first cell carries weight.
        let b = vec![b[0] * 2f64.sqrt(), b[1]];
        let pair = GeneralModePair::new(a, b, v).unwrap();
        assert_abs_diff_eq!(pair.xi(0).unwrap(), 0.75, epsilon = 1e-12);
        assert_eq!(pair.xi(1), None);
    }

    #[test]
    fn region_layout_roundtrip() {
        let amp = Complex64::new(0.25, 0.0);
        let layout = RegionLayout {
            regions: vec![
                Region {
                    name: "D".into(),
                    cells: 8,
                    phi_a: amp,
                    phi_b: amp,
                    role: RegionRole::Measured,
                },
                Region {
                    name: "Dp".into(),
                    cells: 4,
                    phi_a: amp,
                    phi_b: amp,
                    role: RegionRole::Remote,
                },
                Region {
                    name: "Dpp".into(),
                    cells: 4,
                    phi_a: amp,
                    phi_b: amp,
                    role: RegionRole::Remote,
                },
            ],
            cell_volume: 1.0,
        };
        layout.validate().unwrap();
        assert_eq!(layout.cell_range("D").unwrap(), 0..8);
        assert_eq!(layout.cell_range("Dpp").unwrap(), 12..16);
        assert_eq!(layout.representative_cell("Dp").unwrap(), 8);
        let pair = layout.to_mode_pair().unwrap();
        assert_eq!(pair.len(), 16);
        assert!(layout.cell_range("missing").is_err());
        assert_eq!(
            layout.region_names(RegionRole::Remote),
            vec!["Dp".to_string(), "Dpp".to_string()]
        );
    }

    #[test]
    fn record_snapshot_count_checked() {
        let rec = MeasurementRecord {
            events: vec![DetectionEvent::position(0.0)],
            snapshots: vec![],
            seed: 1,
            policy: "test".into(),
        };
        assert!(rec.validate().is_err());
    }
}
