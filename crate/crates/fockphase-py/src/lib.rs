//! Python bindings for the `fockphase` core: detection events, phase
//! posteriors, and the exact finite-population cross-checks.
//!
//! The module mirrors the Rust API at smoke-test granularity — enough to
//! sample factors, run posterior updates, and verify the engine against the
//! exact oracles from a notebook.

use fockphase::engine::{self, EventFactorModel};
use fockphase::model::{contrast_ratio, CondensateSpec, DetectionEvent, Sign, Vec3};
use fockphase::oracle::{exact_sequence_probability, WeightMode};
use fockphase::prior::{coherent_coefficients, g_from_coefficients, CoherentSpec, PhaseDistribution};
use fockphase::spin::wallis_reference;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn to_py(err: fockphase::Error) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn parse_mode(mode: &str) -> PyResult<WeightMode> {
    match mode {
        "falling" => Ok(WeightMode::Falling),
        "power" => Ok(WeightMode::Power),
        other => Err(PyValueError::new_err(format!(
            "mode must be \"falling\" or \"power\", got {other:?}"
        ))),
    }
}

/// A single detection: a position fringe sample or a transverse spin result.
#[pyclass(frozen)]
#[derive(Clone)]
struct Event {
    inner: DetectionEvent,
}

#[pymethods]
impl Event {
    /// Position detection at reduced coordinate u = (k_a − k_b)·r.
    #[staticmethod]
    fn position(u: f64) -> Self {
        Event {
            inner: DetectionEvent::position(u),
        }
    }

    /// Spin detection along analyzer angle theta with outcome eta = ±1.
    #[staticmethod]
    fn spin(u: f64, theta: f64, eta: i8) -> PyResult<Self> {
        let eta = Sign::from_i8(eta).map_err(to_py)?;
        Ok(Event {
            inner: DetectionEvent::spin(u, theta, eta),
        })
    }

    #[getter]
    fn is_spin(&self) -> bool {
        self.inner.is_spin()
    }

    fn __repr__(&self) -> String {
        match self.inner.place {
            fockphase::model::EventPlace::Reduced(u) if self.inner.is_spin() => format!(
                "Event.spin(u={u:.6}, theta={:.6}, eta={})",
                self.inner.theta,
                self.inner.eta.to_i8()
            ),
            fockphase::model::EventPlace::Reduced(u) => format!("Event.position(u={u:.6})"),
            _ => "Event(<cell/three-mode>)".into(),
        }
    }
}

/// A phase distribution on the M-point circle grid: prior or posterior.
#[pyclass]
struct Phase {
    inner: PhaseDistribution,
}

#[pymethods]
impl Phase {
    /// Flat prior — the ignorance state before any detection.
    #[staticmethod]
    #[pyo3(signature = (m = 4096))]
    fn uniform(m: usize) -> PyResult<Self> {
        Ok(Phase {
            inner: PhaseDistribution::uniform(m).map_err(to_py)?,
        })
    }

    /// Prior for a coherent-difference superposition of relative number Q,
    /// G(phi) = c·|Σ_Q x_Q e^{−iQφ}|² with x_Q the Poisson amplitudes of
    /// modulus `alpha` and phase `theta`.
    #[staticmethod]
    #[pyo3(signature = (alpha, theta = 0.0, m = 4096))]
    fn coherent(alpha: f64, theta: f64, m: usize) -> PyResult<Self> {
        let spec = CoherentSpec::auto(alpha, theta).map_err(to_py)?;
        let coeffs = coherent_coefficients(&spec).map_err(to_py)?;
        Ok(Phase {
            inner: g_from_coefficients(&coeffs, m).map_err(to_py)?,
        })
    }

    /// Bayesian update by one detection under two-mode contrast x; returns the
    /// new distribution, leaving this one untouched.
    fn update(&self, event: &Event, x: f64) -> PyResult<Self> {
        let model = EventFactorModel::TwoMode { x };
        Ok(Phase {
            inner: engine::posterior_update(&self.inner, &event.inner, &model).map_err(to_py)?,
        })
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    /// Circular mean in [0, 2π), or None while no direction is defined.
    #[getter]
    fn mean(&self) -> Option<f64> {
        self.inner.stats().mean
    }

    /// Resultant length in [0, 1]; 1 = point mass, 0 = uniform.
    #[getter]
    fn resultant(&self) -> f64 {
        self.inner.stats().resultant
    }

    /// Circular standard deviation √(−2 ln L), infinite for a flat state.
    #[getter]
    fn circ_std(&self) -> f64 {
        self.inner.stats().circ_std
    }

    /// Density values at the grid nodes.
    fn density(&self) -> Vec<f64> {
        self.inner.density().to_vec()
    }

    /// Grid nodes φ_j = 2πj/M.
    fn grid(&self) -> Vec<f64> {
        (0..self.inner.m()).map(|j| self.inner.phi(j)).collect()
    }

    fn __repr__(&self) -> String {
        let s = self.inner.stats();
        format!(
            "Phase(m={}, resultant={:.4}, circ_std={:.4})",
            self.inner.m(),
            s.resultant,
            s.circ_std
        )
    }
}

/// Two-mode fringe contrast x = 2√(N_a N_b)/(N_a + N_b).
#[pyfunction]
fn contrast(n_a: u64, n_b: u64) -> PyResult<f64> {
    contrast_ratio(n_a, n_b).map_err(to_py)
}

/// Closed-form probability of a (p_plus, p_minus) transverse spin count at a
/// shared analyzer angle.
#[pyfunction]
fn wallis(p_plus: usize, p_minus: usize) -> f64 {
    wallis_reference(p_plus, p_minus)
}

/// Fringe factor of one detection at relative phase phi, contrast x.
#[pyfunction]
fn event_factor(event: &Event, phi: f64, x: f64) -> PyResult<f64> {
    engine::event_factor(&event.inner, phi, &EventFactorModel::TwoMode { x }).map_err(to_py)
}

/// Phase-averaged probability of a detection sequence under a uniform prior
/// and two-mode contrast x (per-event normalization: spin events carry 1/2).
#[pyfunction]
#[pyo3(signature = (events, x, m = 4096))]
fn sequence_probability(events: Vec<Event>, x: f64, m: usize) -> PyResult<f64> {
    let events: Vec<DetectionEvent> = events.into_iter().map(|e| e.inner).collect();
    let prior = PhaseDistribution::uniform(m).map_err(to_py)?;
    engine::sequence_probability(&events, &prior, &EventFactorModel::TwoMode { x }).map_err(to_py)
}

/// Exact finite-population probability of a detection sequence from the
/// pattern-sum oracle; `mode` selects falling-factorial weights (the exact
/// physics) or power weights (the large-N surrogate the engine matches after
/// scaling by N^P).
#[pyfunction]
#[pyo3(signature = (events, n_a, n_b, mode = "falling"))]
fn exact_probability(events: Vec<Event>, n_a: u64, n_b: u64, mode: &str) -> PyResult<f64> {
    let mode = parse_mode(mode)?;
    let events: Vec<DetectionEvent> = events.into_iter().map(|e| e.inner).collect();
    let spec = CondensateSpec::two_mode(
        n_a,
        n_b,
        Vec3 {
            x: 1.0,
            y: 0.0,
            z: 0.0,
        },
        Vec3 {
            x: 0.0,
            y: 0.0,
            z: 0.0,
        },
        true,
    )
    .map_err(to_py)?;
    Ok(exact_sequence_probability(&events, &spec, mode)
        .map_err(to_py)?
        .value)
}

#[pymodule]
fn fockphase_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Event>()?;
    m.add_class::<Phase>()?;
    m.add_function(wrap_pyfunction!(contrast, m)?)?;
    m.add_function(wrap_pyfunction!(wallis, m)?)?;
    m.add_function(wrap_pyfunction!(event_factor, m)?)?;
    m.add_function(wrap_pyfunction!(sequence_probability, m)?)?;
    m.add_function(wrap_pyfunction!(exact_probability, m)?)?;
    Ok(())
}
