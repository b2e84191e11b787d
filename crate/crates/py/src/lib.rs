//! Python module `cbs`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cbs_core::bistatic::{self, BistaticBreakdown, BistaticOptions};
use cbs_core::dipole::{self, ClassicalParams};
use cbs_core::mc::{self, McOptions};
use cbs_core::slab::{solve_intensity as solve_profile, SlabGrid};
use cbs_core::{Channel, Detuning, McEstimate};

fn to_py(e: cbs_core::Error) -> PyErr {
    match e {
        cbs_core::Error::Param(p) => PyValueError::new_err(p.to_string()),
        cbs_core::Error::Solve(s) => PyRuntimeError::new_err(s.to_string()),
    }
}

fn param_err(e: cbs_core::ParamError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Slab medium: detuning, optical thickness, saturation and channel.
#[pyclass(name = "MediumParams", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMediumParams {
    inner: cbs_core::MediumParams,
}

#[pymethods]
impl PyMediumParams {
    #[new]
    #[pyo3(signature = (detuning=0.0, b=0.5, s0=0.01, channel="scalar"))]
    fn new(detuning: f64, b: f64, s0: f64, channel: &str) -> PyResult<Self> {
        let channel: Channel = channel.parse().map_err(param_err)?;
        let inner = cbs_core::MediumParams::new(detuning, b, s0, channel).map_err(param_err)?;
        Ok(PyMediumParams { inner })
    }

    #[getter]
    fn detuning(&self) -> f64 {
        self.inner.detuning.0
    }

    #[getter]
    fn b(&self) -> f64 {
        self.inner.b
    }

    #[getter]
    fn s0(&self) -> f64 {
        self.inner.s0
    }

    #[getter]
    fn channel(&self) -> &'static str {
        self.inner.channel.name()
    }

    /// Saturation parameter at the laser detuning.
    fn s(&self) -> f64 {
        self.inner.s()
    }

    fn __repr__(&self) -> String {
        format!(
            "MediumParams(detuning={}, b={}, s0={}, channel='{}')",
            self.inner.detuning.0,
            self.inner.b,
            self.inner.s0,
            self.inner.channel.name()
        )
    }
}

fn breakdown_dict<'py>(py: Python<'py>, bd: &BistaticBreakdown) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for (k, v) in bd.fields() {
        d.set_item(k, v)?;
    }
    Ok(d)
}

fn estimate_pair(e: &McEstimate) -> (f64, f64) {
    (e.mean, e.std_error)
}

/// Scalar breakdown by quadrature, as a dict of named components.
#[pyfunction]
#[pyo3(signature = (params, nodes=512, inelastic=true))]
fn assemble<'py>(py: Python<'py>, params: &PyMediumParams, nodes: usize, inelastic: bool) -> PyResult<Bound<'py, PyDict>> {
    let opts = BistaticOptions { nodes, include_inelastic: inelastic, ..Default::default() };
    let bd = py.detach(|| bistatic::assemble_with(&params.inner, &opts)).map_err(to_py)?;
    breakdown_dict(py, &bd)
}

/// First-order scalar enhancement factor at the configured saturation.
#[pyfunction]
fn enhancement_factor(py: Python<'_>, params: &PyMediumParams) -> PyResult<f64> {
    py.detach(|| bistatic::enhancement_factor(&params.inner)).map_err(to_py)
}

/// Scalar enhancement factor of the inelastic light at each final detuning.
#[pyfunction]
#[pyo3(signature = (params, delta_p, nodes=256))]
fn spectral_enhancement<'py>(py: Python<'py>, params: &PyMediumParams, delta_p: Vec<f64>, nodes: usize) -> PyResult<Bound<'py, PyDict>> {
    let c = py.detach(|| bistatic::spectral_enhancement(&params.inner, &delta_p, nodes)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("delta_p", c.delta_p)?;
    d.set_item("ladder", c.ladder)?;
    d.set_item("crossed", c.crossed)?;
    d.set_item("eta", c.eta)?;
    Ok(d)
}

/// Average intensity inside the slab: `(z, values)` on a uniform grid.
#[pyfunction]
#[pyo3(signature = (b, detuning=0.0, nodes=512))]
fn solve_intensity(py: Python<'_>, b: f64, detuning: f64, nodes: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
    py.detach(|| {
        let grid = SlabGrid::uniform(b, nodes)?;
        let i = solve_profile(&grid, Detuning(detuning), Detuning(detuning))?;
        Ok::<_, cbs_core::SolveError>((grid.nodes().to_vec(), i.values.clone()))
    })
    .map_err(|e| to_py(e.into()))
}

/// Monte-Carlo breakdown. Returns a dict of components and a dict of their
/// standard errors.
#[pyfunction]
#[pyo3(signature = (params, samples, seed, inelastic=true))]
fn mc_breakdown<'py>(
    py: Python<'py>,
    params: &PyMediumParams,
    samples: u64,
    seed: u64,
    inelastic: bool,
) -> PyResult<(Bound<'py, PyDict>, Bound<'py, PyDict>)> {
    let m = py.detach(|| mc::mc_breakdown(&params.inner, inelastic, &McOptions::new(samples, seed))).map_err(to_py)?;
    let bd = m.to_breakdown();
    let errs = PyDict::new(py);
    if let Some(e) = &bd.mc_errors {
        for (k, v) in [
            ("l_el_1", e.l_el_1),
            ("c_el_1", e.c_el_1),
            ("l_el_2_scatt", e.l_el_2_scatt),
            ("c_el_2_scatt", e.c_el_2_scatt),
            ("l_in_2", e.l_in_2),
            ("c_in_2", e.c_in_2),
            ("l_el_2_prop", e.l_el_2_prop),
            ("c_el_2_prop", e.c_el_2_prop),
            ("gamma_l", e.gamma_l),
            ("gamma_c", e.gamma_c),
            ("gamma_l_el", m.gamma_l_el().std_error),
            ("gamma_c_el", m.gamma_c_el().std_error),
            ("eta_slope", e.eta_slope),
        ] {
            errs.set_item(k, v)?;
        }
    }
    Ok((breakdown_dict(py, &bd)?, errs))
}

/// Ladder, crossed and enhancement at one final detuning, each as
/// `(mean, std_error)`.
#[pyfunction]
fn mc_spectral_point<'py>(py: Python<'py>, params: &PyMediumParams, delta_p: f64, samples: u64, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let p = py.detach(|| mc::mc_spectral_point(&params.inner, delta_p, &McOptions::new(samples, seed))).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("delta_p", p.delta_p)?;
    d.set_item("ladder", estimate_pair(&p.ladder))?;
    d.set_item("crossed", estimate_pair(&p.crossed))?;
    d.set_item("eta", estimate_pair(&p.eta))?;
    Ok(d)
}

/// Mean and mean squared scattering order against thickness, with the
/// fitted power-law exponents.
#[pyfunction]
fn path_statistics<'py>(py: Python<'py>, thickness: Vec<f64>, samples: u64, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let params = cbs_core::MediumParams::new(0.0, 1.0, 0.0, Channel::Scalar).map_err(param_err)?;
    let s = py.detach(|| mc::path_statistics(&thickness, &params, &McOptions::new(samples, seed))).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("thickness", s.thickness)?;
    d.set_item("mean_order", s.mean_order.iter().map(estimate_pair).collect::<Vec<_>>())?;
    d.set_item("mean_order_sq", s.mean_order_sq.iter().map(estimate_pair).collect::<Vec<_>>())?;
    d.set_item("exponent_mean", s.exponent_mean)?;
    d.set_item("exponent_mean_sq", s.exponent_mean_sq)?;
    Ok(d)
}

/// Coupled-dipole slopes of the background and interference peak at zero
/// saturation, with the scalar prediction for their ratio.
#[pyfunction]
#[pyo3(signature = (realizations, seed, atoms=500, b=0.5, max_saturation=0.01))]
fn classical_response<'py>(
    py: Python<'py>,
    realizations: usize,
    seed: u64,
    atoms: usize,
    b: f64,
    max_saturation: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let params = ClassicalParams { n_atoms: atoms, b, saturations: vec![0.0, 0.5 * max_saturation, max_saturation], ..Default::default() };
    let (r, pred) = py
        .detach(|| {
            let samples = dipole::ensemble_samples(&params, realizations, seed)?;
            let r = dipole::saturation_response(&samples)?;
            Ok::<_, cbs_core::Error>((r, dipole::predicted_ratio(b)?))
        })
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("background", estimate_pair(&r.background))?;
    d.set_item("crossed", estimate_pair(&r.crossed))?;
    d.set_item("gamma_l", estimate_pair(&r.gamma_l))?;
    d.set_item("gamma_c", estimate_pair(&r.gamma_c))?;
    d.set_item("ratio", estimate_pair(&r.ratio))?;
    d.set_item("predicted_ratio", pred.full)?;
    d.set_item("predicted_ratio_reciprocal_only", pred.reciprocal_only)?;
    Ok(d)
}

#[pymodule]
fn cbs(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMediumParams>()?;
    m.add_function(wrap_pyfunction!(assemble, m)?)?;
    m.add_function(wrap_pyfunction!(enhancement_factor, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_enhancement, m)?)?;
    m.add_function(wrap_pyfunction!(solve_intensity, m)?)?;
    m.add_function(wrap_pyfunction!(mc_breakdown, m)?)?;
    m.add_function(wrap_pyfunction!(mc_spectral_point, m)?)?;
    m.add_function(wrap_pyfunction!(path_statistics, m)?)?;
    m.add_function(wrap_pyfunction!(classical_response, m)?)?;
    Ok(())
}
