//! Python extension module `gatom`: the main types and operations of the
//! scattering library, with plain floats/lists/dicts at the boundary.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use gatom_core::experiments::{self, BlockKind};
use gatom_core::model::{self, SystemParams as CoreParams};
use gatom_core::solver;
use gatom_core::sweff;
use gatom_core::wavepacket::{self, WavepacketConfig};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// System parameters in units of the hopping strength `xi`.
#[pyclass(module = "gatom", from_py_object)]
#[derive(Clone)]
struct SystemParams {
    inner: CoreParams,
}

#[pymethods]
impl SystemParams {
    #[new]
    #[pyo3(signature = (omega_c=20.0, xi=1.0, omega_0=20.0, omega_a=20.0, lam=0.2, g=0.5, n=4))]
    fn new(
        omega_c: f64,
        xi: f64,
        omega_0: f64,
        omega_a: f64,
        lam: f64,
        g: f64,
        n: usize,
    ) -> PyResult<Self> {
        CoreParams::new(omega_c, xi, omega_0, omega_a, lam, g, n)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    #[getter]
    fn omega_c(&self) -> f64 {
        self.inner.omega_c
    }

    #[getter]
    fn xi(&self) -> f64 {
        self.inner.xi
    }

    #[getter]
    fn omega_0(&self) -> f64 {
        self.inner.omega_0
    }

    #[getter]
    fn omega_a(&self) -> f64 {
        self.inner.omega_a
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.inner.lambda
    }

    #[getter]
    fn g(&self) -> f64 {
        self.inner.g
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    /// Band edges (low, high) of the cosine dispersion.
    fn band(&self) -> (f64, f64) {
        self.inner.band()
    }

    /// Detunings where Q vanishes, ordered (minus, plus).
    fn q_zero_detunings(&self) -> (f64, f64) {
        self.inner.q_zero_detunings()
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "SystemParams(omega_c={}, xi={}, omega_0={}, omega_a={}, lam={}, g={}, n={})",
            p.omega_c, p.xi, p.omega_0, p.omega_a, p.lambda, p.g, p.n
        )
    }
}

/// Photon energy at wave vector `k`.
#[pyfunction]
fn dispersion(params: &SystemParams, k: f64) -> PyResult<f64> {
    model::dispersion(&params.inner, k).map_err(value_err)
}

/// Wave vector in (0, pi) at energy `e`.
#[pyfunction]
fn wavevector_of_energy(params: &SystemParams, e: f64) -> PyResult<f64> {
    model::wavevector_of_energy(&params.inner, e).map_err(value_err)
}

fn k_of_delta(params: &CoreParams, delta: f64) -> PyResult<f64> {
    model::wavevector_of_energy(params, params.omega_a + delta).map_err(value_err)
}

/// Closed-form reflection rate at photon-atom detuning `delta`.
#[pyfunction]
fn reflection_analytic(params: &SystemParams, delta: f64) -> PyResult<f64> {
    let k = k_of_delta(&params.inner, delta)?;
    gatom_core::reflection_analytic(&params.inner, k)
        .map(|r| r.r_rate)
        .map_err(value_err)
}

/// Solver-based reflection rate (exact block) at detuning `delta`.
#[pyfunction]
fn reflection_exact(params: &SystemParams, delta: f64) -> PyResult<f64> {
    let k = k_of_delta(&params.inner, delta)?;
    let block = model::exact_emitter_block(&params.inner);
    solver::solve_scattering(&block, &params.inner, k)
        .map(|s| s.reflection())
        .map_err(value_err)
}

/// Dispersive-effective reflection rate R' at detuning `delta`.
#[pyfunction]
fn reflection_effective(params: &SystemParams, delta: f64) -> PyResult<f64> {
    let k = k_of_delta(&params.inner, delta)?;
    sweff::reflection_effective(&params.inner, k)
        .map(|r| r.r_rate)
        .map_err(value_err)
}

/// Full complex scattering amplitudes at detuning `delta`:
/// dict with r, t, a, b (re/im pairs), reflection, transmission and the
/// unitarity residual.
#[pyfunction]
fn scattering_amplitudes<'py>(
    py: Python<'py>,
    params: &SystemParams,
    delta: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let k = k_of_delta(&params.inner, delta)?;
    let block = model::exact_emitter_block(&params.inner);
    let s = solver::solve_scattering(&block, &params.inner, k).map_err(value_err)?;
    let out = PyDict::new(py);
    out.set_item("r", (s.r.re, s.r.im))?;
    out.set_item("t", (s.t.re, s.t.im))?;
    out.set_item("a", (s.a_amp.re, s.a_amp.im))?;
    out.set_item("b", (s.b_amp.re, s.b_amp.im))?;
    out.set_item("reflection", s.reflection())?;
    out.set_item("transmission", s.transmission())?;
    out.set_item("unitarity_residual", s.unitarity_residual)?;
    Ok(out)
}

fn block_kind(kind: &str) -> PyResult<BlockKind> {
    match kind {
        "exact" => Ok(BlockKind::Exact),
        "sw" => Ok(BlockKind::SchriefferWolff),
        other => Err(PyValueError::new_err(format!(
            "block kind must be 'exact' or 'sw', got '{other}'"
        ))),
    }
}

/// (deltas, values, skipped-point list) of one spectrum.
type SweepResult = (Vec<f64>, Vec<f64>, Vec<(usize, String)>);

/// Reflection spectrum over a uniform detuning grid; returns
/// (deltas, values, skipped) where skipped is a list of (index, reason).
#[pyfunction]
#[pyo3(signature = (params, kind="exact", delta_min=-1.0, delta_max=1.0, n_points=2001))]
fn sweep(
    params: &SystemParams,
    kind: &str,
    delta_min: f64,
    delta_max: f64,
    n_points: usize,
) -> PyResult<SweepResult> {
    let s = experiments::sweep(
        &params.inner,
        block_kind(kind)?,
        delta_min,
        delta_max,
        n_points,
    )
    .map_err(value_err)?;
    Ok((s.deltas, s.values, s.skipped))
}

/// Peak/width features of a spectrum produced by `sweep`.
#[pyfunction]
#[pyo3(signature = (params, kind="exact", delta_min=-1.0, delta_max=1.0, n_points=2001, floor=0.5))]
fn spectrum_features<'py>(
    py: Python<'py>,
    params: &SystemParams,
    kind: &str,
    delta_min: f64,
    delta_max: f64,
    n_points: usize,
    floor: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let s = experiments::sweep(
        &params.inner,
        block_kind(kind)?,
        delta_min,
        delta_max,
        n_points,
    )
    .map_err(value_err)?;
    let f = experiments::analyze(&s, floor);
    let out = PyDict::new(py);
    out.set_item("maxima", f.maxima)?;
    out.set_item("central_dip_fwhm", f.central_dip_fwhm)?;
    out.set_item("window_width", f.window_width)?;
    out.set_item("n_peaks", f.n_peaks)?;
    Ok(out)
}

/// Dispersive-model coefficients as a dict.
#[pyfunction]
fn sw_model<'py>(py: Python<'py>, params: &SystemParams) -> PyResult<Bound<'py, PyDict>> {
    let sw = sweff::sw_model(&params.inner).map_err(value_err)?;
    let out = PyDict::new(py);
    out.set_item("delta_c", sw.delta_c)?;
    out.set_item("atom_shift", sw.atom_shift)?;
    out.set_item("phonon_shift", sw.phonon_shift)?;
    out.set_item("atom_wg_coupling", sw.atom_wg_coupling)?;
    out.set_item("phonon_wg_coupling", sw.phonon_wg_coupling)?;
    out.set_item("small_parameter", sw.small_parameter)?;
    Ok(out)
}

/// Sup-norm gap between exact and effective spectra on a detuning grid.
#[pyfunction]
#[pyo3(signature = (params, delta_min=-1.5, delta_max=1.5, n_points=2001))]
fn sw_compare(
    params: &SystemParams,
    delta_min: f64,
    delta_max: f64,
    n_points: usize,
) -> PyResult<f64> {
    let exact = experiments::sweep(
        &params.inner,
        BlockKind::Exact,
        delta_min,
        delta_max,
        n_points,
    )
    .map_err(value_err)?;
    let eff = experiments::sweep(
        &params.inner,
        BlockKind::SchriefferWolff,
        delta_min,
        delta_max,
        n_points,
    )
    .map_err(value_err)?;
    Ok(exact
        .values
        .iter()
        .zip(eff.values.iter())
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Brute-force operator check of the single-excitation SW projection.
#[pyfunction]
#[pyo3(signature = (params, n_phonon_cut=3, n_test_sites=None))]
fn verify_sw_projection(
    params: &SystemParams,
    n_phonon_cut: usize,
    n_test_sites: Option<usize>,
) -> PyResult<f64> {
    let sites = n_test_sites.unwrap_or(params.inner.n + 5);
    sweff::verify_sw_projection(&params.inner, n_phonon_cut, sites).map_err(value_err)
}

/// Time-domain wavepacket run; returns a dict with R_wp, T_wp, leak and the
/// run diagnostics.
#[pyfunction]
#[pyo3(signature = (params, delta=0.5, kind="exact", chain_length=4000, sigma_x=40.0, x0=-220, time_step=0.05, max_time=3000.0, absorb_guard=50))]
#[allow(clippy::too_many_arguments)]
fn propagate_wavepacket<'py>(
    py: Python<'py>,
    params: &SystemParams,
    delta: f64,
    kind: &str,
    chain_length: usize,
    sigma_x: f64,
    x0: i64,
    time_step: f64,
    max_time: f64,
    absorb_guard: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let k0 = k_of_delta(&params.inner, delta)?;
    let cfg = WavepacketConfig {
        chain_length,
        k0,
        sigma_x,
        x0,
        time_step,
        max_time,
        absorb_guard,
    };
    let block = match block_kind(kind)? {
        BlockKind::Exact => model::exact_emitter_block(&params.inner),
        BlockKind::SchriefferWolff => sweff::sw_emitter_block(&params.inner).map_err(value_err)?,
    };
    let out = wavepacket::propagate(&block, &params.inner, &cfg)
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let dict = PyDict::new(py);
    dict.set_item("R_wp", out.r_wp)?;
    dict.set_item("T_wp", out.t_wp)?;
    dict.set_item("leak", out.leak)?;
    dict.set_item("elapsed", out.elapsed)?;
    dict.set_item("steps", out.steps)?;
    dict.set_item("norm_drift", out.norm_drift)?;
    dict.set_item("energy_drift", out.energy_drift)?;
    dict.set_item("k0", cfg.k0)?;
    Ok(dict)
}

#[pymodule]
fn gatom(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<SystemParams>()?;
    m.add_function(wrap_pyfunction!(dispersion, m)?)?;
    m.add_function(wrap_pyfunction!(wavevector_of_energy, m)?)?;
    m.add_function(wrap_pyfunction!(reflection_analytic, m)?)?;
    m.add_function(wrap_pyfunction!(reflection_exact, m)?)?;
    m.add_function(wrap_pyfunction!(reflection_effective, m)?)?;
    m.add_function(wrap_pyfunction!(scattering_amplitudes, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum_features, m)?)?;
    m.add_function(wrap_pyfunction!(sw_model, m)?)?;
    m.add_function(wrap_pyfunction!(sw_compare, m)?)?;
    m.add_function(wrap_pyfunction!(verify_sw_projection, m)?)?;
    m.add_function(wrap_pyfunction!(propagate_wavepacket, m)?)?;
    Ok(())
}
