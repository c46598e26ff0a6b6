//! Python bindings: parameter resolution, modulation profiles, the exact
//! modulated soliton, constant-control matching, and the config-driven run
//! pipeline, importable as the `slowlight` module.

use std::path::Path;

use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use slowlight_core::config::{parse_config, ParamsSection};
use slowlight_core::model::SimulationGrid;
use slowlight_core::modulation::{
    control_field, profile_from_control, riccati_match_constant, ConstantControlRoots,
    ControlWaveform, ModulationProfile,
};
use slowlight_core::soliton::SolitonSolution;
use slowlight_core::Error;

/// Input and physics errors become `ValueError`; solver and consistency
/// failures `RuntimeError`; filesystem trouble `IOError`.
fn pyerr(e: Error) -> PyErr {
    let message = e.to_string();
    match e.exit_code() {
        4 | 6 => PyRuntimeError::new_err(message),
        7 => PyIOError::new_err(message),
        _ => PyValueError::new_err(message),
    }
}

/// Physical parameters with the coupling-tied k, or an explicit override.
#[pyclass(frozen)]
struct Params {
    inner: slowlight_core::model::PhysicalParams,
}

#[pymethods]
impl Params {
    /// `nu0` and `omega0` are two spellings of the coupling (ν₀ = Ω₀²/2);
    /// give at most one, or both in agreement. Omitting `k` ties it to the
    /// probe amplitude and detuning.
    #[new]
    #[pyo3(signature = (nu0=None, omega0=None, eps0=3.0, gamma=0.0, delta=0.0, k=None))]
    fn new(
        nu0: Option<f64>,
        omega0: Option<f64>,
        eps0: f64,
        gamma: f64,
        delta: f64,
        k: Option<f64>,
    ) -> PyResult<Self> {
        let section = ParamsSection { nu0, omega0, eps0, gamma, delta, k };
        Ok(Params { inner: section.resolve().map_err(pyerr)? })
    }

    #[getter]
    fn nu0(&self) -> f64 {
        self.inner.nu0
    }

    #[getter]
    fn omega0(&self) -> f64 {
        self.inner.omega0()
    }

    #[getter]
    fn eps0(&self) -> f64 {
        self.inner.eps0
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta
    }

    #[getter]
    fn k(&self) -> f64 {
        self.inner.k
    }

    /// False when k was overridden away from the coupling-tied value.
    #[getter]
    fn k_constrained(&self) -> bool {
        self.inner.k_constrained
    }

    fn __repr__(&self) -> String {
        format!(
            "Params(nu0={}, eps0={}, gamma={}, delta={}, k={})",
            self.inner.nu0, self.inner.eps0, self.inner.gamma, self.inner.delta, self.inner.k,
        )
    }
}

/// Modulation profile m(τ).
#[pyclass(frozen)]
struct Profile {
    inner: ModulationProfile,
}

#[pymethods]
impl Profile {
    /// m(τ) = m₀.
    #[staticmethod]
    fn constant(m0: f64) -> PyResult<Self> {
        Ok(Profile { inner: ModulationProfile::constant(m0).map_err(pyerr)? })
    }

    /// m(τ) = e^{ατ}, the switch-off ramp.
    #[staticmethod]
    fn exponential(alpha: f64) -> PyResult<Self> {
        Ok(Profile { inner: ModulationProfile::exponential(alpha).map_err(pyerr)? })
    }

    /// Constant m matched to a constant control amplitude; `branch` picks
    /// the slow transparency root (`"eit"`) or the fast one (`"fast"`).
    #[staticmethod]
    #[pyo3(signature = (control, eps0, branch="eit"))]
    fn constant_control(control: f64, eps0: f64, branch: &str) -> PyResult<Self> {
        let roots = riccati_match_constant(control, eps0).map_err(pyerr)?;
        let m0 = match (roots, branch) {
            (_, other) if other != "eit" && other != "fast" => {
                return Err(PyValueError::new_err(format!(
                    "branch must be 'eit' or 'fast', got '{other}'"
                )));
            }
            (ConstantControlRoots::ZeroControl, _) => 0.0,
            (ConstantControlRoots::Double(root), _) => root,
            (ConstantControlRoots::Pair { eit, .. }, "eit") => eit,
            (ConstantControlRoots::Pair { other, .. }, _) => other,
        };
        Ok(Profile { inner: ModulationProfile::constant(m0).map_err(pyerr)? })
    }

    /// m(τ) reconstructed from control samples Ω(τ₀ + i·h), seeded at
    /// m(τ₀) = m_initial.
    #[staticmethod]
    fn from_control_samples(
        tau0: f64,
        spacing: f64,
        omega: Vec<f64>,
        m_initial: f64,
        eps0: f64,
    ) -> PyResult<Self> {
        let waveform = ControlWaveform::new(tau0, spacing, omega).map_err(pyerr)?;
        Ok(Profile { inner: profile_from_control(&waveform, m_initial, eps0).map_err(pyerr)? })
    }

    fn m(&self, tau: f64) -> PyResult<f64> {
        Ok(self.inner.eval(tau).map_err(pyerr)?.0)
    }

    fn slope(&self, tau: f64) -> PyResult<f64> {
        Ok(self.inner.eval(tau).map_err(pyerr)?.1)
    }

    /// Control field Ω(τ) that drives this profile at amplitude ε₀.
    fn control(&self, eps0: f64, tau: f64) -> PyResult<f64> {
        control_field(&self.inner, eps0, tau).map_err(pyerr)
    }

    /// F(τ) = ∫₀^τ ds/(m² + 1).
    fn phase_integral(&self, tau: f64) -> PyResult<f64> {
        self.inner.phase_integral(tau).map_err(pyerr)
    }

    fn domain(&self) -> (f64, f64) {
        self.inner.domain()
    }

    fn __repr__(&self) -> String {
        format!("Profile({})", self.inner.describe())
    }
}

/// The exact modulated soliton under the adjudicated sign convention.
#[pyclass(frozen)]
struct Soliton {
    inner: SolitonSolution,
}

#[pymethods]
impl Soliton {
    #[new]
    #[pyo3(signature = (params, profile, phi0=0.75))]
    fn new(params: &Params, profile: &Profile, phi0: f64) -> PyResult<Self> {
        let inner =
            SolitonSolution::new(params.inner, profile.inner.clone(), phi0).map_err(pyerr)?;
        Ok(Soliton { inner })
    }

    /// Co-moving phase φ(ζ, τ).
    fn phase(&self, zeta: f64, tau: f64) -> PyResult<f64> {
        self.inner.phase(zeta, tau).map_err(pyerr)
    }

    /// Probe and control envelopes (Ω_a, Ω_b) at a point.
    fn fields(&self, zeta: f64, tau: f64) -> PyResult<(Complex64, Complex64)> {
        let pair = self.inner.fields(zeta, tau).map_err(pyerr)?;
        Ok((pair.omega_a, pair.omega_b))
    }

    /// Atomic amplitudes (ψ₁, ψ₂, ψ₃) at a point.
    fn atoms(&self, zeta: f64, tau: f64) -> PyResult<(Complex64, Complex64, Complex64)> {
        let phi = self.inner.phase(zeta, tau).map_err(pyerr)?;
        let (m, _) = self.inner.profile().eval(tau).map_err(pyerr)?;
        let state = self.inner.atoms_from_phase(phi, m);
        Ok((state.psi1, state.psi2, state.psi3))
    }

    /// |Ω_a| sampled on a uniform lattice, as n_zeta rows of n_tau values.
    fn probe_amplitude_grid(
        &self,
        tau_min: f64,
        tau_max: f64,
        n_tau: usize,
        zeta_max: f64,
        n_zeta: usize,
    ) -> PyResult<Vec<Vec<f64>>> {
        let grid = SimulationGrid::new(tau_min, tau_max, n_tau, zeta_max, n_zeta).map_err(pyerr)?;
        let (omega_a, _) = self.inner.fields_grid(&grid).map_err(pyerr)?;
        Ok(omega_a.outer_iter().map(|row| row.iter().map(|z| z.norm()).collect()).collect())
    }

    /// Co-moving group velocity of the envelope center at τ.
    fn group_velocity(&self, tau: f64) -> PyResult<f64> {
        self.inner.group_velocity(tau).map_err(pyerr)
    }

    /// Laboratory-frame group velocity in units of c.
    fn lab_group_velocity(&self, tau: f64) -> PyResult<f64> {
        self.inner.lab_group_velocity(tau).map_err(pyerr)
    }

    /// Total ζ-distance the envelope travels before freezing, as a dict
    /// with `zeta_stop`, `truncated`, and `integrand_end`.
    fn stopping_distance<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let report = self.inner.stopping_distance().map_err(pyerr)?;
        let dict = PyDict::new(py);
        dict.set_item("zeta_stop", report.zeta_stop)?;
        dict.set_item("truncated", report.truncated)?;
        dict.set_item("integrand_end", report.integrand_end)?;
        Ok(dict)
    }

    /// Sign-convention label the solution is built under.
    #[getter]
    fn convention(&self) -> String {
        self.inner.convention().label()
    }

    fn __repr__(&self) -> String {
        format!(
            "Soliton(eps0={}, profile={}, convention={})",
            self.inner.params().eps0,
            self.inner.profile().describe(),
            self.inner.convention().label(),
        )
    }
}

/// Roots of the constant-control matching equation Ω₀m² + 2ε₀m + Ω₀ = 0,
/// as a dict with `kind` one of `zero-control`, `double`, `pair`.
#[pyfunction]
fn match_constant_control(py: Python<'_>, omega0: f64, eps0: f64) -> PyResult<Bound<'_, PyDict>> {
    let dict = PyDict::new(py);
    match riccati_match_constant(omega0, eps0).map_err(pyerr)? {
        ConstantControlRoots::ZeroControl => {
            dict.set_item("kind", "zero-control")?;
            dict.set_item("root", 0.0)?;
        }
        ConstantControlRoots::Double(root) => {
            dict.set_item("kind", "double")?;
            dict.set_item("root", root)?;
        }
        ConstantControlRoots::Pair { eit, other } => {
            dict.set_item("kind", "pair")?;
            dict.set_item("eit", eit)?;
            dict.set_item("other", other)?;
        }
    }
    Ok(dict)
}

/// Validate a TOML config and re-emit it with every default spelled out.
#[pyfunction]
fn canonical_config(config_text: &str) -> PyResult<String> {
    Ok(parse_config(config_text).map_err(pyerr)?.canonical_toml())
}

/// Execute a TOML config end to end, writing the artifact family into
/// `out_dir`; returns the run summary. `config_dir` anchors relative paths
/// referenced by the config (waveform CSVs).
#[pyfunction]
#[pyo3(signature = (config_text, out_dir, config_dir=None))]
fn run<'py>(
    py: Python<'py>,
    config_text: &str,
    out_dir: &str,
    config_dir: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let config = parse_config(config_text).map_err(pyerr)?;
    let summary = slowlight_core::run::run(
        &config,
        Path::new(out_dir),
        config_text,
        Path::new(config_dir.unwrap_or(".")),
    )
    .map_err(pyerr)?;

    let dict = PyDict::new(py);
    dict.set_item("mode", &summary.mode)?;
    dict.set_item("label", &summary.label)?;
    dict.set_item("convention", &summary.convention)?;
    let metrics = PyDict::new(py);
    for metric in &summary.metrics {
        metrics.set_item(metric.name, metric.value)?;
    }
    dict.set_item("metrics", metrics)?;
    dict.set_item("notes", &summary.notes)?;
    dict.set_item("files", &summary.files)?;
    dict.set_item("out_dir", summary.out_dir.to_string_lossy().into_owned())?;
    Ok(dict)
}

#[pymodule]
fn slowlight(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Params>()?;
    m.add_class::<Profile>()?;
    m.add_class::<Soliton>()?;
    m.add_function(wrap_pyfunction!(match_constant_control, m)?)?;
    m.add_function(wrap_pyfunction!(canonical_config, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
