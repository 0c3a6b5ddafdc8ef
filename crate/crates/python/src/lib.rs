//! Python bindings for the `attrition` crate.

use attrition::refine::{equivalence_check, selection_sweep, SelectionConfig, DEFAULT_DELTAS};
use attrition::verify::{best_response_gap, deviation_grid, quantile_types, Profile};
use attrition::{
    Anchor, DistSpec, EquilibriumFamily, HazardPotential, Player, Solution as CoreSolution, TypeDistribution,
};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn py_err(e: attrition::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<T: serde::Serialize>(py: Python<'_>, v: &T) -> PyResult<Py<PyAny>> {
    let s = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (s,))?.unbind())
}

fn player(p: u8) -> PyResult<Player> {
    match p {
        1 => Ok(Player::One),
        2 => Ok(Player::Two),
        _ => Err(PyValueError::new_err("player must be 1 or 2")),
    }
}

#[pyclass(name = "Distribution", frozen)]
struct PyDistribution {
    inner: TypeDistribution,
}

#[pymethods]
impl PyDistribution {
    #[staticmethod]
    fn exponential(lam: f64) -> PyResult<Self> {
        Ok(Self { inner: TypeDistribution::exponential(lam).map_err(py_err)? })
    }

    #[staticmethod]
    fn uniform01() -> Self {
        Self { inner: TypeDistribution::uniform01() }
    }

    #[staticmethod]
    fn pareto(theta_min: f64, alpha: f64) -> PyResult<Self> {
        Ok(Self { inner: TypeDistribution::pareto(theta_min, alpha).map_err(py_err)? })
    }

    /// Piecewise-linear cdf through `(x, F(x))` points.
    #[staticmethod]
    fn tabulated(points: Vec<(f64, f64)>) -> PyResult<Self> {
        Ok(Self { inner: TypeDistribution::tabulated(&points).map_err(py_err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec: DistSpec = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { inner: TypeDistribution::from_spec(&spec).map_err(py_err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner.spec()).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn cdf(&self, x: f64) -> PyResult<f64> {
        self.inner.cdf(x).map_err(py_err)
    }

    fn pdf(&self, x: f64) -> PyResult<f64> {
        self.inner.pdf(x).map_err(py_err)
    }

    fn quantile(&self, p: f64) -> PyResult<f64> {
        self.inner.quantile(p).map_err(py_err)
    }

    #[getter]
    fn lower(&self) -> f64 {
        self.inner.lower()
    }

    #[getter]
    fn upper(&self) -> f64 {
        self.inner.upper().as_f64()
    }

    /// `"A"` or `"B"` for the undiscounted potential.
    fn classify(&self) -> PyResult<String> {
        let hp = HazardPotential::new(self.inner.clone(), 1.0).map_err(py_err)?;
        Ok(hp.classify().map_err(py_err)?.to_string())
    }

    fn __repr__(&self) -> PyResult<String> {
        Ok(format!("Distribution({})", self.to_json()?))
    }
}

#[pyclass(name = "Equilibrium", frozen)]
struct PyEquilibrium {
    inner: EquilibriumFamily,
}

#[pymethods]
impl PyEquilibrium {
    /// Exactly one of `c` and `theta1` anchors the family.
    #[new]
    #[pyo3(signature = (dist, *, c=None, theta1=None, delta=1.0))]
    fn new(dist: &PyDistribution, c: Option<f64>, theta1: Option<f64>, delta: f64) -> PyResult<Self> {
        let anchor = match (c, theta1) {
            (Some(c), None) => Anchor::C(c),
            (None, Some(t)) => Anchor::Theta1(t),
            _ => return Err(PyValueError::new_err("give exactly one of c and theta1")),
        };
        let hp = HazardPotential::new(dist.inner.clone(), delta).map_err(py_err)?;
        Ok(Self { inner: EquilibriumFamily::new(hp, anchor).map_err(py_err)? })
    }

    #[getter]
    fn c(&self) -> f64 {
        self.inner.c()
    }

    #[getter]
    fn theta1(&self) -> f64 {
        self.inner.theta1()
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta()
    }

    #[getter]
    fn case(&self) -> String {
        self.inner.case().to_string()
    }

    fn k(&self, theta: f64) -> PyResult<f64> {
        self.inner.k(theta).map_err(py_err)
    }

    #[pyo3(signature = (grid=512, tail=1e-6))]
    fn solve(&self, grid: usize, tail: f64) -> PyResult<PySolution> {
        Ok(PySolution { inner: self.inner.solve(grid, tail).map_err(py_err)? })
    }
}

/// Stopping times are floats; fighting forever is `inf`.
#[pyclass(name = "Solution", frozen)]
struct PySolution {
    inner: CoreSolution,
}

#[pymethods]
impl PySolution {
    fn sigma(&self, theta: f64, player: u8) -> PyResult<f64> {
        let curve = match self::player(player)? {
            Player::One => &self.inner.sigma1,
            Player::Two => &self.inner.sigma2,
        };
        Ok(curve.eval(theta).map_err(py_err)?.as_f64())
    }

    /// `(theta, k, sigma1, sigma2)` tuples.
    fn rows(&self, thetas: Vec<f64>) -> PyResult<Vec<(f64, f64, f64, f64)>> {
        let rows = self.inner.rows(&thetas).map_err(py_err)?;
        Ok(rows.iter().map(|r| (r.theta, r.k, r.sigma1.as_f64(), r.sigma2.as_f64())).collect())
    }

    /// Best-response gaps of both players as a dict.
    #[pyo3(signature = (types=50, deviations=400, tail=1e-6))]
    fn verify(&self, py: Python<'_>, types: usize, deviations: usize, tail: f64) -> PyResult<Py<PyAny>> {
        let profile = Profile::from_solution(&self.inner);
        let t = quantile_types(profile.dist(), types, tail).map_err(py_err)?;
        let span = profile.deviation_span(tail).map_err(py_err)?;
        let dev = deviation_grid(span, deviations).map_err(py_err)?;
        let report = best_response_gap(&profile, &t, &dev).map_err(py_err)?;
        to_py(py, &report)
    }
}

/// Largest gap between the discounting and behavioral-type constructions of `k`.
#[pyfunction]
fn equivalence(dist: &PyDistribution, delta: f64, c: f64, grid: Vec<f64>) -> PyResult<f64> {
    equivalence_check(&dist.inner, delta, c, &grid).map_err(py_err)
}

/// Selection experiment over a `δ` schedule, returned as a dict.
#[pyfunction]
#[pyo3(signature = (dist, deltas=None, candidates=Vec::new(), grid=512))]
fn selection(
    py: Python<'_>,
    dist: &PyDistribution,
    deltas: Option<Vec<f64>>,
    candidates: Vec<f64>,
    grid: usize,
) -> PyResult<Py<PyAny>> {
    let deltas = deltas.unwrap_or_else(|| DEFAULT_DELTAS.to_vec());
    let cfg = SelectionConfig { grid, ..SelectionConfig::default() };
    let x = selection_sweep(&dist.inner, &deltas, &candidates, &cfg).map_err(py_err)?;
    to_py(py, &x)
}

#[pymodule]
fn attrition_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDistribution>()?;
    m.add_class::<PyEquilibrium>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(equivalence, m)?)?;
    m.add_function(wrap_pyfunction!(selection, m)?)?;
    Ok(())
}
