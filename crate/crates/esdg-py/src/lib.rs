//! Python bindings for the esdg solver: operator tables, meshes with
//! their metric diagnostics, state algebra, the two-point fluxes and
//! the batch driver.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use esdg::config::CaseConfig;
use esdg::dg::{rhs_nse, FieldsNse, NseWorkspace, SchemeConfig};
use esdg::driver::{audit_case, run_case, run_convergence_sweep, SweepParam};
use esdg::mesh::{build_box_mesh, Mesh, Warp};
use esdg::operators::OperatorSet;
use esdg::physics::{GasParams, State};
use esdg::SolverError;

fn solver_err(e: SolverError) -> PyErr {
    match e {
        SolverError::Config(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn gas_from(gamma: f64, reynolds: Option<f64>, prandtl: f64, mach: f64) -> GasParams {
    GasParams {
        gamma,
        reynolds: reynolds.unwrap_or(f64::INFINITY),
        prandtl,
        mach,
        mu: 1.0,
    }
}

fn state_from(values: [f64; 5]) -> State {
    State(values)
}

/// Legendre-Gauss-Lobatto quadrature, derivative and SBP matrices for
/// one polynomial degree.
#[pyclass(name = "OperatorSet")]
struct PyOperatorSet {
    inner: OperatorSet,
}

#[pymethods]
impl PyOperatorSet {
    #[new]
    fn new(degree: usize) -> PyResult<Self> {
        Ok(Self {
            inner: OperatorSet::new(degree).map_err(solver_err)?,
        })
    }

    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree()
    }

    fn nodes(&self) -> Vec<f64> {
        self.inner.nodes().to_vec()
    }

    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }

    fn diff_matrix(&self) -> Vec<Vec<f64>> {
        matrix_rows(self.inner.diff())
    }

    fn sbp_matrix(&self) -> Vec<Vec<f64>> {
        matrix_rows(self.inner.sbp())
    }

    fn boundary_matrix(&self) -> Vec<Vec<f64>> {
        matrix_rows(self.inner.boundary())
    }

    /// Plain-text operator tables (17 significant digits) for
    /// cross-language diffing.
    fn dump_tables(&self) -> String {
        self.inner.dump_tables()
    }
}

fn matrix_rows(m: &ndarray::Array2<f64>) -> Vec<Vec<f64>> {
    let n = m.nrows();
    (0..n)
        .map(|i| (0..n).map(|j| m[[i, j]]).collect())
        .collect()
}

/// Periodic curvilinear box mesh with metric diagnostics.
#[pyclass(name = "BoxMesh")]
struct PyBoxMesh {
    ops: OperatorSet,
    mesh: Mesh,
}

#[pymethods]
impl PyBoxMesh {
    #[new]
    #[pyo3(signature = (degree, elements, extent=None, warp_amplitude=0.0))]
    fn new(
        degree: usize,
        elements: [usize; 3],
        extent: Option<[f64; 3]>,
        warp_amplitude: f64,
    ) -> PyResult<Self> {
        let ops = OperatorSet::new(degree).map_err(solver_err)?;
        let extent = extent.unwrap_or([2.0 * std::f64::consts::PI; 3]);
        let warp = if warp_amplitude == 0.0 {
            Warp::None
        } else {
            Warp::Sine {
                amplitude: warp_amplitude,
            }
        };
        let mesh = build_box_mesh(extent, elements, &ops, warp).map_err(solver_err)?;
        Ok(Self { ops, mesh })
    }

    #[getter]
    fn n_elements(&self) -> usize {
        self.mesh.n_elements()
    }

    #[getter]
    fn n_faces(&self) -> usize {
        self.mesh.faces.len()
    }

    /// Worst residual of the discrete metric identities.
    fn metric_identity_residual(&self) -> f64 {
        self.mesh.metric_identity_residual(&self.ops)
    }

    /// Worst master/slave face geometry mismatch.
    fn watertightness(&self) -> PyResult<f64> {
        self.mesh.watertightness().map_err(solver_err)
    }

    /// Quadrature volume of the mapped box.
    fn volume(&self) -> f64 {
        self.mesh.volume(&self.ops)
    }

    /// Max-norm RHS residual of a constant state (free-stream
    /// preservation), relative to the state magnitude.
    #[pyo3(signature = (rho=1.0, velocity=[0.3, -0.2, 0.7], pressure=0.9, gamma=1.4))]
    fn free_stream_residual(
        &self,
        rho: f64,
        velocity: [f64; 3],
        pressure: f64,
        gamma: f64,
    ) -> PyResult<f64> {
        let gas = gas_from(gamma, None, 0.72, 0.1);
        let free = State::from_primitive(rho, velocity, pressure, &gas);
        free.validate(&gas).map_err(solver_err)?;
        let mut fields = FieldsNse::new(&self.mesh);
        let mut ws = NseWorkspace::new(&self.mesh);
        fields.set_from(&self.mesh, |_| free);
        rhs_nse(
            &self.mesh,
            &self.ops,
            &SchemeConfig::default(),
            &gas,
            &mut fields,
            &mut ws,
        )
        .map_err(solver_err)?;
        let umax = free.0.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let rmax = fields
            .rhs
            .iter()
            .flat_map(|s| s.0.iter())
            .fold(0.0f64, |a, &v| a.max(v.abs()));
        Ok(rmax / umax)
    }
}

/// Stable logarithmic mean of two positive numbers.
#[pyfunction]
fn log_mean(a: f64, b: f64) -> PyResult<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(PyValueError::new_err("log_mean needs positive arguments"));
    }
    Ok(esdg::flux::log_mean(a, b))
}

/// Kinetic-energy-preserving entropy-conservative two-point flux for a
/// Cartesian direction (0, 1 or 2).
#[pyfunction]
#[pyo3(signature = (left, right, direction, gamma=1.4))]
fn kepec_flux(left: [f64; 5], right: [f64; 5], direction: usize, gamma: f64) -> PyResult<[f64; 5]> {
    if direction > 2 {
        return Err(PyValueError::new_err("direction must be 0, 1 or 2"));
    }
    let gas = gas_from(gamma, None, 0.72, 0.1);
    let (l, r) = (state_from(left), state_from(right));
    l.validate(&gas).map_err(solver_err)?;
    r.validate(&gas).map_err(solver_err)?;
    Ok(esdg::flux::kepec_flux(l, r, direction, &gas).0)
}

/// Entropy variables of a conservative state.
#[pyfunction]
#[pyo3(signature = (state, gamma=1.4))]
fn entropy_variables(state: [f64; 5], gamma: f64) -> PyResult<[f64; 5]> {
    let gas = gas_from(gamma, None, 0.72, 0.1);
    let u = state_from(state);
    u.validate(&gas).map_err(solver_err)?;
    Ok(esdg::physics::entropy_variables(u, &gas).0)
}

/// Invert the entropy-variable map.
#[pyfunction]
#[pyo3(signature = (w, gamma=1.4))]
fn conservative_from_entropy(w: [f64; 5], gamma: f64) -> PyResult<[f64; 5]> {
    let gas = gas_from(gamma, None, 0.72, 0.1);
    Ok(
        esdg::physics::conservative_from_entropy(esdg::physics::EntropyState(w), &gas)
            .map_err(solver_err)?
            .0,
    )
}

/// Cartesian Euler flux components as a 3 x 5 nested list.
#[pyfunction]
#[pyo3(signature = (state, gamma=1.4))]
fn euler_flux(state: [f64; 5], gamma: f64) -> PyResult<Vec<Vec<f64>>> {
    let gas = gas_from(gamma, None, 0.72, 0.1);
    let u = state_from(state);
    u.validate(&gas).map_err(solver_err)?;
    let f = esdg::physics::euler_flux(u, &gas);
    Ok(f.0.iter().map(|s| s.0.to_vec()).collect())
}

/// Parse and run a case from configuration text; returns a dict with
/// steps, final time and the last diagnostic sample.
#[pyfunction]
#[pyo3(signature = (config_text, out_dir=None))]
fn run_case_text<'py>(
    py: Python<'py>,
    config_text: &str,
    out_dir: Option<String>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut config = CaseConfig::from_text(config_text).map_err(solver_err)?;
    if let Some(dir) = out_dir {
        config.out_dir = PathBuf::from(dir);
    }
    let output = run_case(&config).map_err(solver_err)?;
    let dict = PyDict::new(py);
    dict.set_item("steps", output.steps)?;
    dict.set_item("t_final", output.t_final)?;
    if let Some(last) = output.series.samples().last() {
        dict.set_item("entropy", last.entropy)?;
        dict.set_item("mass", last.mass)?;
        if let Some(ekin) = last.kinetic {
            dict.set_item("kinetic_energy", ekin)?;
        }
    }
    dict.set_item(
        "series_csv",
        config
            .out_dir
            .join("series.csv")
            .to_string_lossy()
            .to_string(),
    )?;
    Ok(dict)
}

/// Run every semi-discrete audit check for a case; returns a list of
/// (name, residual, tolerance, pass) tuples.
#[pyfunction]
#[pyo3(signature = (config_text, out_dir=None))]
fn audit_case_text(
    config_text: &str,
    out_dir: Option<String>,
) -> PyResult<Vec<(String, f64, f64, bool)>> {
    let mut config = CaseConfig::from_text(config_text).map_err(solver_err)?;
    if let Some(dir) = out_dir {
        config.out_dir = PathBuf::from(dir);
    }
    let report = audit_case(&config).map_err(solver_err)?;
    Ok(report
        .checks
        .into_iter()
        .map(|c| (c.name, c.residual, c.tolerance, c.pass))
        .collect())
}

/// Convergence sweep; returns (label, resolution, l2_error) rows.
#[pyfunction]
#[pyo3(signature = (config_text, param, out_dir=None))]
fn sweep_case_text(
    config_text: &str,
    param: &str,
    out_dir: Option<String>,
) -> PyResult<Vec<(String, f64, f64)>> {
    let mut config = CaseConfig::from_text(config_text).map_err(solver_err)?;
    if let Some(dir) = out_dir {
        config.out_dir = PathBuf::from(dir);
    }
    let param = SweepParam::parse(param).map_err(solver_err)?;
    let table = run_convergence_sweep(&config, &param).map_err(solver_err)?;
    Ok(table
        .rows
        .into_iter()
        .map(|r| (r.label, r.resolution, r.error))
        .collect())
}

#[pymodule]
fn esdg_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyOperatorSet>()?;
    m.add_class::<PyBoxMesh>()?;
    m.add_function(wrap_pyfunction!(log_mean, m)?)?;
    m.add_function(wrap_pyfunction!(kepec_flux, m)?)?;
    m.add_function(wrap_pyfunction!(entropy_variables, m)?)?;
    m.add_function(wrap_pyfunction!(conservative_from_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(euler_flux, m)?)?;
    m.add_function(wrap_pyfunction!(run_case_text, m)?)?;
    m.add_function(wrap_pyfunction!(audit_case_text, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_case_text, m)?)?;
    Ok(())
}
