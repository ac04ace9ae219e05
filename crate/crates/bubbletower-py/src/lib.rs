//! Python bindings: the validated parameter object plus the main operations
//! of the phase-plane laboratory (closed-form constants, orbit integration,
//! flux integrals, and profile classification).

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use bubbletower::classifier::{self, ClassifyTolerances, TraceSource, WTrace};
use bubbletower::dynamics::{
    self, ClosedFormProfile, Conservation, IntegrationSettings, PhaseState,
};
use bubbletower::params::ProblemParams;
use bubbletower::pohozaev::{self, AsymptoticOptions};
use bubbletower::Error;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Domain { .. } | Error::Regime(_) => PyValueError::new_err(e.to_string()),
        Error::Io(_) | Error::Malformed(_) => PyIOError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

trait IntoPy2<T> {
    fn py_res(self) -> PyResult<T>;
}

impl<T> IntoPy2<T> for Result<T, Error> {
    fn py_res(self) -> PyResult<T> {
        self.map_err(to_py_err)
    }
}

/// The validated parameter quadruple (n, s, q, mu).
#[pyclass(name = "ProblemParams", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyProblemParams {
    inner: ProblemParams,
}

#[pymethods]
impl PyProblemParams {
    #[new]
    fn new(n: u32, s: f64, q: f64, mu: f64) -> PyResult<Self> {
        Ok(PyProblemParams { inner: ProblemParams::new(n, s, q, mu).py_res()? })
    }

    #[getter]
    fn n(&self) -> u32 {
        self.inner.n()
    }

    #[getter]
    fn s(&self) -> f64 {
        self.inner.s()
    }

    #[getter]
    fn q(&self) -> f64 {
        self.inner.q()
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu()
    }

    fn __repr__(&self) -> String {
        format!(
            "ProblemParams(n={}, s={}, q={}, mu={})",
            self.inner.n(),
            self.inner.s(),
            self.inner.q(),
            self.inner.mu()
        )
    }

    /// All derived exponents and constants as a dict.
    fn exponents<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let ex = self.inner.exponents();
        let d = PyDict::new(py);
        d.set_item("two_star_s", ex.two_star_s)?;
        d.set_item("two_star", ex.two_star)?;
        d.set_item("p", ex.p)?;
        d.set_item("c_ns", ex.c_ns)?;
        d.set_item("k_ns", ex.k_ns)?;
        d.set_item("gamma", ex.gamma)?;
        d.set_item("omega", ex.omega)?;
        d.set_item("v_bar", ex.v_bar)?;
        Ok(d)
    }

    /// Regime tag and admissibility flags.
    fn regime<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = self.inner.regime();
        let d = PyDict::new(py);
        d.set_item("tag", format!("{:?}", r.tag))?;
        d.set_item("mb_admissible", r.mb_admissible)?;
        d.set_item("nd_admissible", r.nd_admissible)?;
        Ok(d)
    }

    fn mu_zero(&self) -> f64 {
        self.inner.mu_zero()
    }

    /// Both forms of mu1 with the saddle position and consistency flag.
    fn mu_one<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let m = self.inner.mu_one().py_res()?;
        let d = PyDict::new(py);
        d.set_item("printed", m.printed)?;
        d.set_item("operational", m.operational)?;
        d.set_item("saddle_v", m.saddle_v)?;
        d.set_item("consistent", m.consistent)?;
        Ok(d)
    }

    fn critical_thresholds<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let t = self.inner.critical_thresholds().py_res()?;
        let d = PyDict::new(py);
        d.set_item("mu0", t.mu0)?;
        d.set_item("mu1_printed", t.mu1_printed)?;
        d.set_item("mu1_operational", t.mu1_operational)?;
        d.set_item("mu1_consistent", t.mu1_consistent)?;
        d.set_item("v_minus", t.v_minus)?;
        d.set_item("v_plus", t.v_plus)?;
        d.set_item("degenerate", t.degenerate)?;
        d.set_item("v_bar_limit", t.v_bar_limit)?;
        d.set_item("u_const_coeff", t.u_const_coeff)?;
        Ok(d)
    }

    /// Multi-bump recurrence constant and exponent.
    fn mb_recurrence_constant<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let rec = self.inner.mb_recurrence_constant().py_res()?;
        let d = PyDict::new(py);
        d.set_item("k", rec.k)?;
        d.set_item("beta", rec.beta)?;
        d.set_item("k_weight_form", rec.k_weight_form)?;
        d.set_item("radial_integral", rec.radial_integral)?;
        Ok(d)
    }

    /// Exact power solution of the zero-nonlinearity balance.
    fn nd_profile<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let nd = self.inner.nd_profile().py_res()?;
        let d = PyDict::new(py);
        d.set_item("p_nd", nd.p_nd)?;
        d.set_item("coeff", nd.coeff)?;
        Ok(d)
    }

    fn blowup_exponent(&self) -> f64 {
        self.inner.blowup_exponent()
    }

    fn convexity_threshold(&self) -> f64 {
        classifier::convexity_threshold(&self.inner)
    }
}

#[pyfunction]
fn ef_transform(params: &PyProblemParams, r: f64, u: f64, du: f64) -> PyResult<(f64, f64, f64)> {
    let st = dynamics::ef_transform(&params.inner, r, u, du).py_res()?;
    Ok((st.t, st.v, st.dv))
}

#[pyfunction]
fn ef_untransform(params: &PyProblemParams, t: f64, v: f64, dv: f64) -> (f64, f64, f64) {
    dynamics::ef_untransform(&params.inner, &PhaseState::new(t, v, dv))
}

#[pyfunction]
fn vector_field(params: &PyProblemParams, t: f64, v: f64, dv: f64) -> (f64, f64) {
    dynamics::vector_field(&params.inner, &PhaseState::new(t, v, dv))
}

#[pyfunction]
fn hamiltonian(params: &PyProblemParams, v: f64, dv: f64) -> f64 {
    dynamics::hamiltonian(&params.inner, &PhaseState::new(0.0, v, dv))
}

#[pyfunction]
fn crit_energy(params: &PyProblemParams, v: f64, dv: f64) -> PyResult<f64> {
    dynamics::crit_energy(&params.inner, &PhaseState::new(0.0, v, dv)).py_res()
}

/// Integrates the phase flow; returns sample arrays plus halt/drift data.
#[pyfunction]
#[pyo3(signature = (params, t0, v0, dv0, t_end, tol=1e-10, stride=0.01, conserve=true))]
#[allow(clippy::too_many_arguments)]
fn integrate<'py>(
    py: Python<'py>,
    params: &PyProblemParams,
    t0: f64,
    v0: f64,
    dv0: f64,
    t_end: f64,
    tol: f64,
    stride: f64,
    conserve: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let settings = IntegrationSettings {
        tol,
        stride,
        v_ceiling: 1e8,
        conserve: if conserve { Conservation::Auto } else { Conservation::Off },
    };
    let traj =
        dynamics::integrate(&params.inner, &PhaseState::new(t0, v0, dv0), t_end, &settings)
            .py_res()?;
    let d = PyDict::new(py);
    d.set_item("t", traj.samples.iter().map(|s| s.t).collect::<Vec<_>>())?;
    d.set_item("v", traj.samples.iter().map(|s| s.v).collect::<Vec<_>>())?;
    d.set_item("dv", traj.samples.iter().map(|s| s.dv).collect::<Vec<_>>())?;
    d.set_item("halt", format!("{:?}", traj.halt))?;
    d.set_item("drift", traj.drift)?;
    Ok(d)
}

#[pyfunction]
fn bubble_profile(params: &PyProblemParams, lam: f64, r: f64) -> f64 {
    dynamics::bubble_profile(&params.inner, lam, r)
}

#[pyfunction]
fn homoclinic_profile(params: &PyProblemParams, t: f64) -> f64 {
    dynamics::homoclinic_profile(&params.inner, t)
}

#[pyfunction]
fn turning_points(params: &PyProblemParams, k: f64) -> PyResult<(f64, f64)> {
    dynamics::turning_points(&params.inner, k).py_res()
}

#[pyfunction]
fn period(params: &PyProblemParams, k: f64) -> PyResult<f64> {
    dynamics::period(&params.inner, k).py_res()
}

#[pyfunction]
fn periodic_profile(params: &PyProblemParams, k: f64, t: f64) -> PyResult<f64> {
    dynamics::periodic_profile(&params.inner, k, t).py_res()
}

#[pyfunction]
fn crit_potential(params: &PyProblemParams, v: f64) -> PyResult<(f64, f64, f64)> {
    dynamics::crit_potential(&params.inner, v).py_res()
}

#[pyfunction]
fn crit_equilibria<'py>(py: Python<'py>, params: &PyProblemParams) -> PyResult<Bound<'py, PyDict>> {
    let eq = dynamics::crit_equilibria(&params.inner).py_res()?;
    let d = PyDict::new(py);
    d.set_item("v_minus", eq.v_minus)?;
    d.set_item("v_plus", eq.v_plus)?;
    d.set_item("degenerate", eq.degenerate)?;
    Ok(d)
}

#[pyfunction]
fn crit_classify_orbit<'py>(
    py: Python<'py>,
    params: &PyProblemParams,
    v: f64,
    dv: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let class =
        dynamics::crit_classify_orbit(&params.inner, &PhaseState::new(0.0, v, dv)).py_res()?;
    let d = PyDict::new(py);
    d.set_item("tag", format!("{:?}", class.tag))?;
    d.set_item("energy", class.energy)?;
    d.set_item("band", class.band)?;
    Ok(d)
}

/// Flux integral from a phase state (the time fixes the radius r = e^{-t}).
#[pyfunction]
fn pohozaev_at_state(params: &PyProblemParams, t: f64, v: f64, dv: f64) -> f64 {
    pohozaev::pohozaev_ef(&params.inner, &PhaseState::new(t, v, dv))
}

/// Flux integral of a named closed-form orbit at radius r.
/// Profiles: "bubble" (needs lambda), "homoclinic", "constant", "vk"
/// (needs k), "nd", "crit_constant".
#[pyfunction]
#[pyo3(signature = (params, profile, r, lam=1.0, k=0.0))]
fn pohozaev_at_profile(
    params: &PyProblemParams,
    profile: &str,
    r: f64,
    lam: f64,
    k: f64,
) -> PyResult<f64> {
    let orbit = parse_profile(profile, lam, k)?;
    pohozaev::pohozaev_at(&params.inner, &orbit, r).py_res()
}

fn parse_profile(name: &str, lambda: f64, k: f64) -> PyResult<ClosedFormProfile> {
    Ok(match name {
        "bubble" => ClosedFormProfile::Bubble { lambda },
        "homoclinic" => ClosedFormProfile::Homoclinic,
        "constant" => ClosedFormProfile::LimitConstant,
        "vk" => ClosedFormProfile::PeriodicVk { k, phase: 0.0 },
        "nd" => ClosedFormProfile::NdPower,
        "crit_constant" => ClosedFormProfile::CritConstant,
        other => {
            return Err(PyValueError::new_err(format!("unknown profile '{other}'")));
        }
    })
}

/// Asymptotic flux limit of a closed-form orbit on a halving radius ladder.
#[pyfunction]
#[pyo3(signature = (params, profile, lam=1.0, k=0.0, r0=0.25, abs_tol=1e-8))]
fn asymptotic_pohozaev<'py>(
    py: Python<'py>,
    params: &PyProblemParams,
    profile: &str,
    lam: f64,
    k: f64,
    r0: f64,
    abs_tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let orbit = parse_profile(profile, lam, k)?;
    let opts = AsymptoticOptions { r0, abs_tol, max_rungs: 60 };
    let est = pohozaev::asymptotic_pohozaev(&params.inner, &orbit, &opts).py_res()?;
    let d = PyDict::new(py);
    d.set_item("value", est.value)?;
    d.set_item("observed_rate", est.observed_rate)?;
    d.set_item("expected_rate", est.expected_rate)?;
    d.set_item("rungs", est.ladder.len())?;
    Ok(d)
}

#[pyfunction]
fn mb_generate(params: &PyProblemParams, r0: f64, count: usize) -> PyResult<Vec<f64>> {
    classifier::mb_generate(&params.inner, r0, count).py_res()
}

#[pyfunction]
#[pyo3(signature = (params, radii, minima=None))]
fn mb_fit<'py>(
    py: Python<'py>,
    params: &PyProblemParams,
    radii: Vec<f64>,
    minima: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let fit = classifier::mb_fit(&params.inner, &radii, minima.as_deref()).py_res()?;
    let d = PyDict::new(py);
    d.set_item("beta_hat", fit.beta_hat)?;
    d.set_item("k_hat", fit.k_hat)?;
    d.set_item("beta_expected", fit.beta_expected)?;
    d.set_item("k_expected", fit.k_expected)?;
    d.set_item("tau_check", fit.tau_check)?;
    Ok(d)
}

#[pyfunction]
fn bubble_sum<'py>(
    py: Python<'py>,
    params: &PyProblemParams,
    radii: Vec<f64>,
    r: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let v = classifier::bubble_sum(&params.inner, &radii, r).py_res()?;
    let d = PyDict::new(py);
    d.set_item("total", v.total)?;
    d.set_item("two_bubble", v.two_bubble)?;
    d.set_item("window", v.window)?;
    Ok(d)
}

/// Classifies an external radial trace given as parallel (r, u) lists with
/// r strictly decreasing. Returns the verdict with its evidence.
#[pyfunction]
#[pyo3(signature = (params, r, u, r_tail=1e-6, min_windows=5))]
fn classify_radial<'py>(
    py: Python<'py>,
    params: &PyProblemParams,
    r: Vec<f64>,
    u: Vec<f64>,
    r_tail: f64,
    min_windows: usize,
) -> PyResult<Bound<'py, PyDict>> {
    if r.len() != u.len() {
        return Err(PyValueError::new_err("r and u must have equal length"));
    }
    let kappa = params.inner.kappa();
    let samples: Vec<(f64, f64)> = r
        .iter()
        .zip(&u)
        .map(|(&ri, &ui)| (ri, ri.powf(kappa) * ui))
        .collect();
    let trace = WTrace::new(params.inner, samples, TraceSource::External).py_res()?;
    let tol = ClassifyTolerances { r_tail, min_windows, ..Default::default() };
    let verdict = classifier::classify(&params.inner, &trace, &tol).py_res()?;
    let radii = classifier::critical_radii(&trace, classifier::convexity_threshold(&params.inner))
        .py_res()?;
    let d = PyDict::new(py);
    d.set_item(
        "tag",
        match verdict.tag {
            classifier::ProfileTag::Removable => "Removable",
            classifier::ProfileTag::Cgs => "CGS",
            classifier::ProfileTag::Mb => "MB",
            classifier::ProfileTag::Nd => "ND",
            classifier::ProfileTag::Undetermined => "Undetermined",
        },
    )?;
    d.set_item("liminf_est", verdict.liminf_est)?;
    d.set_item("limsup_est", verdict.limsup_est)?;
    d.set_item("nd_limit_est", verdict.nd_limit_est)?;
    d.set_item("maxima", radii.maxima)?;
    d.set_item("minima", radii.minima)?;
    Ok(d)
}

#[pymodule]
fn bubbletower_py(_py: Python<'_>, m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProblemParams>()?;
    m.add_function(wrap_pyfunction!(ef_transform, m)?)?;
    m.add_function(wrap_pyfunction!(ef_untransform, m)?)?;
    m.add_function(wrap_pyfunction!(vector_field, m)?)?;
    m.add_function(wrap_pyfunction!(hamiltonian, m)?)?;
    m.add_function(wrap_pyfunction!(crit_energy, m)?)?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(bubble_profile, m)?)?;
    m.add_function(wrap_pyfunction!(homoclinic_profile, m)?)?;
    m.add_function(wrap_pyfunction!(turning_points, m)?)?;
    m.add_function(wrap_pyfunction!(period, m)?)?;
    m.add_function(wrap_pyfunction!(periodic_profile, m)?)?;
    m.add_function(wrap_pyfunction!(crit_potential, m)?)?;
    m.add_function(wrap_pyfunction!(crit_equilibria, m)?)?;
    m.add_function(wrap_pyfunction!(crit_classify_orbit, m)?)?;
    m.add_function(wrap_pyfunction!(pohozaev_at_state, m)?)?;
    m.add_function(wrap_pyfunction!(pohozaev_at_profile, m)?)?;
    m.add_function(wrap_pyfunction!(asymptotic_pohozaev, m)?)?;
    m.add_function(wrap_pyfunction!(mb_generate, m)?)?;
    m.add_function(wrap_pyfunction!(mb_fit, m)?)?;
    m.add_function(wrap_pyfunction!(bubble_sum, m)?)?;
    m.add_function(wrap_pyfunction!(classify_radial, m)?)?;
    Ok(())
}
