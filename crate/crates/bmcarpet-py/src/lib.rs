//! Python bindings: a thin `Carpet` class over the core crate.

use bmcarpet::{
    empirical, spectrum, symbolic, CarpetSpec, Digit, EmpiricalError, RawCarpetSpec, SpectrumError,
    SymbolicPrefix,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn spectrum_err(e: SpectrumError) -> PyErr {
    match e {
        SpectrumError::NoConvergence { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn empirical_err(e: EmpiricalError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass]
struct Carpet {
    spec: CarpetSpec,
}

impl Carpet {
    fn prefix(&self, digits: Vec<(u32, u32)>) -> PyResult<SymbolicPrefix> {
        let digits = digits.into_iter().map(|(r, c)| Digit::new(r, c)).collect();
        SymbolicPrefix::new(&self.spec, digits).map_err(|e| PyValueError::new_err(e.to_string()))
    }
}

#[pymethods]
impl Carpet {
    #[new]
    fn new(m: u32, n: u32, digits: Vec<(u32, u32)>, probs: Vec<f64>) -> PyResult<Self> {
        let raw = RawCarpetSpec {
            m,
            n,
            digits: digits.into_iter().map(|(r, c)| [r, c]).collect(),
            probs,
        };
        let spec = CarpetSpec::build(&raw).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Carpet { spec })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let spec = CarpetSpec::from_toml_str(text).map_err(PyValueError::new_err)?;
        Ok(Carpet { spec })
    }

    #[getter]
    fn m(&self) -> u32 {
        self.spec.m()
    }

    #[getter]
    fn n(&self) -> u32 {
        self.spec.n()
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.spec.sigma()
    }

    #[getter]
    fn row_probs(&self) -> Vec<f64> {
        self.spec.row_probs().to_vec()
    }

    fn fingerprint(&self) -> String {
        self.spec.fingerprint()
    }

    fn beta(&self, t: f64) -> f64 {
        spectrum::beta(&self.spec, t)
    }

    fn alpha(&self, t: f64) -> f64 {
        spectrum::alpha_of_t(&self.spec, t)
    }

    fn hausdorff_dimension(&self) -> f64 {
        spectrum::hausdorff_dimension(&self.spec)
    }

    fn tilted_weights(&self, t: f64) -> Vec<f64> {
        spectrum::tilted_measure(&self.spec, t).weights
    }

    /// (alpha_min, alpha_max, f at alpha_min, f at alpha_max).
    fn alpha_range(&self) -> (f64, f64, f64, f64) {
        let r = spectrum::alpha_range(&self.spec);
        (r.alpha_min, r.alpha_max, r.f_at_min, r.f_at_max)
    }

    /// (f(alpha), t*).
    fn f(&self, alpha: f64) -> PyResult<(f64, f64)> {
        let p = spectrum::legendre_point(&self.spec, alpha).map_err(spectrum_err)?;
        Ok((p.f, p.t_star))
    }

    /// Rows (t, alpha, f, beta) over the given t-grid.
    fn curve(&self, t_grid: Vec<f64>) -> PyResult<Vec<(f64, f64, f64, f64)>> {
        let curve = spectrum::spectrum_curve(&self.spec, &t_grid).map_err(spectrum_err)?;
        Ok(curve
            .samples
            .iter()
            .map(|s| (s.t, s.alpha, s.f, s.beta))
            .collect())
    }

    /// (x0, y0, width, height, measure) of the level-k approximate square.
    fn approx_square(
        &self,
        prefix: Vec<(u32, u32)>,
        k: usize,
    ) -> PyResult<(f64, f64, f64, f64, f64)> {
        let prefix = self.prefix(prefix)?;
        let sq = symbolic::approx_square(&self.spec, &prefix, k)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok((sq.x0, sq.y0, sq.width, sq.height, sq.measure))
    }

    fn symbolic_local_dim(&self, prefix: Vec<(u32, u32)>, k: usize) -> PyResult<f64> {
        let prefix = self.prefix(prefix)?;
        symbolic::symbolic_local_dim(&self.spec, &prefix, k)
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Length-k prefix drawn from the tilted measure, as (row, col) pairs.
    fn sample_prefix(&self, t: f64, k: usize, seed: u64, index: u64) -> Vec<(u32, u32)> {
        empirical::sample_prefix(&self.spec, t, k, seed, index)
            .digits()
            .iter()
            .map(|d| (d.row, d.col))
            .collect()
    }

    /// (value, lower, upper) bracket of mu(B((x, y), r)).
    #[pyo3(signature = (x, y, r, rel_tol=1e-6, max_expansions=400_000))]
    fn ball_measure(
        &self,
        x: f64,
        y: f64,
        r: f64,
        rel_tol: f64,
        max_expansions: usize,
    ) -> PyResult<(f64, f64, f64)> {
        let opts = empirical::BallOptions {
            rel_tol,
            max_expansions,
        };
        let b = empirical::ball_measure_radius(&self.spec, x, y, r, opts).map_err(empirical_err)?;
        Ok((b.value, b.lower, b.upper))
    }
}

#[pymodule]
fn bmcarpet_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Carpet>()?;
    Ok(())
}
