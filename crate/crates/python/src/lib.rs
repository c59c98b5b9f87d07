use ::bn_ergodic::analysis::conditions::geometric_samples;
use ::bn_ergodic::analysis::fit::fit_power_law as core_fit;
use ::bn_ergodic::analysis::{check_conditions, tv_distance_curve as core_tv};
use ::bn_ergodic::beta_binomial::{beta_binomial_row as core_bb_row, beta_binomial_table, Beta};
use ::bn_ergodic::bn_coeffs::{
    bn_row as core_bn_row, bn_row_recursive, bn_row_recursive_exact, Alpha,
};
use ::bn_ergodic::ergodic::{
    bn_iterate as core_bn_iterate, cesaro_iterate as core_cesaro_iterate, cesaro_table,
    equivalence_check as core_equivalence, Checkpoints, IterateOptions, IterationTrace,
};
use ::bn_ergodic::exact::{format_rational, parse_rational};
use ::bn_ergodic::operators::{fixed_point_projector, DenseMatrix, OperatorModel, OperatorSpec};
use ::bn_ergodic::table::{CoefficientTable, TableKind};
use ::bn_ergodic::Error;
use pyo3::exceptions::{PyArithmeticError, PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NonFinite { .. } | Error::NonPositive { .. } => {
            PyArithmeticError::new_err(e.to_string())
        }
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Linear nonexpansive operator on R^d.
#[pyclass(name = "Operator", module = "bn_ergodic", from_py_object)]
#[derive(Clone)]
pub struct PyOperator {
    inner: OperatorModel,
}

#[pymethods]
impl PyOperator {
    #[staticmethod]
    fn shift(dim: usize) -> PyResult<Self> {
        Ok(Self {
            inner: OperatorModel::right_shift(dim).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn identity(dim: usize) -> PyResult<Self> {
        Ok(Self {
            inner: OperatorModel::identity(dim).map_err(py_err)?,
        })
    }

    /// Planar rotation on the first two coordinates, identity elsewhere.
    #[staticmethod]
    fn rotation(angle: f64, dim: usize) -> PyResult<Self> {
        Ok(Self {
            inner: OperatorModel::rotation(angle, dim).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn random_orthogonal(dim: usize, seed: u64) -> PyResult<Self> {
        Ok(Self {
            inner: OperatorModel::random_orthogonal(dim, seed).map_err(py_err)?,
        })
    }

    /// Rejects matrices whose norm estimate exceeds 1.
    #[staticmethod]
    fn dense(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        let m = DenseMatrix::from_rows(&rows).map_err(py_err)?;
        Ok(Self {
            inner: OperatorModel::dense(m).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn composite(parts: Vec<(f64, PyOperator)>) -> PyResult<Self> {
        let parts = parts.into_iter().map(|(w, op)| (w, op.inner)).collect();
        Ok(Self {
            inner: OperatorModel::composite(parts).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec: OperatorSpec =
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self {
            inner: OperatorModel::from_spec(&spec).map_err(py_err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner.to_spec())
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn norm_bound(&self) -> f64 {
        self.inner.norm_bound()
    }

    fn apply(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.apply(&x).map_err(py_err)
    }

    fn to_dense(&self) -> Vec<Vec<f64>> {
        self.inner.to_dense().rows()
    }

    /// Orthogonal projection of `x` onto the fixed-point subspace.
    fn project(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        fixed_point_projector(&self.inner)
            .project(&x)
            .map_err(py_err)
    }

    fn fixed_point_basis(&self) -> Vec<Vec<f64>> {
        fixed_point_projector(&self.inner).basis
    }

    fn __repr__(&self) -> String {
        format!(
            "Operator(dim={}, norm_bound={})",
            self.inner.dim(),
            self.inner.norm_bound()
        )
    }
}

/// Lower-triangular coefficient table; row `n` has `n + 1` entries.
#[pyclass(name = "CoefficientTable", module = "bn_ergodic")]
pub struct PyTable {
    inner: CoefficientTable,
}

#[pymethods]
impl PyTable {
    #[staticmethod]
    fn bn(alpha: f64, n_max: usize) -> PyResult<Self> {
        let a = Alpha::new(alpha).map_err(py_err)?;
        Ok(Self {
            inner: bn_row_recursive(a, n_max),
        })
    }

    #[staticmethod]
    fn beta_binomial(beta: f64, n_max: usize) -> PyResult<Self> {
        let b = Beta::new(beta).map_err(py_err)?;
        Ok(Self {
            inner: beta_binomial_table(b, n_max),
        })
    }

    #[staticmethod]
    fn cesaro(n_max: usize) -> Self {
        Self {
            inner: cesaro_table(n_max),
        }
    }

    #[staticmethod]
    #[pyo3(signature = (rows, label = "custom"))]
    fn from_rows(rows: Vec<Vec<f64>>, label: &str) -> PyResult<Self> {
        let kind = TableKind::Custom {
            label: label.to_string(),
        };
        Ok(Self {
            inner: CoefficientTable::new(kind, rows).map_err(py_err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (text, label = "custom"))]
    fn from_csv(text: &str, label: &str) -> PyResult<Self> {
        let kind = TableKind::Custom {
            label: label.to_string(),
        };
        Ok(Self {
            inner: CoefficientTable::from_csv(text, kind).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: CoefficientTable::from_json(text).map_err(py_err)?,
        })
    }

    #[getter]
    fn n_max(&self) -> usize {
        self.inner.n_max
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.kind.label()
    }

    fn row(&self, n: usize) -> PyResult<Vec<f64>> {
        self.inner.row(n).map(<[f64]>::to_vec).ok_or_else(|| {
            py_err(Error::RowOutOfRange {
                n,
                n_max: self.inner.n_max,
            })
        })
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.rows.clone()
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(py_err)
    }

    /// Condition report as a JSON string; samples default to a geometric grid.
    #[pyo3(signature = (n_samples = None, k_samples = None))]
    fn check_conditions(
        &self,
        n_samples: Option<Vec<usize>>,
        k_samples: Option<Vec<usize>>,
    ) -> PyResult<String> {
        let n_max = self.inner.n_max;
        let ns = n_samples.unwrap_or_else(|| geometric_samples(n_max));
        let ks = k_samples.unwrap_or_else(|| {
            let mut ks = vec![0];
            if n_max >= 2 {
                ks.extend(geometric_samples(n_max / 2));
            }
            ks
        });
        let report = check_conditions(&self.inner, &ns, &ks);
        serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __len__(&self) -> usize {
        self.inner.rows.len()
    }
}

#[pyfunction]
fn bn_row(alpha: f64, n: usize) -> PyResult<Vec<f64>> {
    Ok(core_bn_row(Alpha::new(alpha).map_err(py_err)?, n))
}

/// Row `n` as `p/q` strings; `alpha` must be an integer or `p/q` string.
#[pyfunction]
fn bn_row_exact(alpha: &str, n: usize) -> PyResult<Vec<String>> {
    let a = parse_rational(alpha).map_err(py_err)?;
    let t = bn_row_recursive_exact(&a, n).map_err(py_err)?;
    Ok(t.rows[n].iter().map(format_rational).collect())
}

#[pyfunction]
fn beta_binomial_row(beta: f64, n: usize) -> PyResult<Vec<f64>> {
    Ok(core_bb_row(Beta::new(beta).map_err(py_err)?, n).values)
}

fn trace_dict<'py>(py: Python<'py>, trace: &IterationTrace) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("n", trace.points.iter().map(|p| p.n).collect::<Vec<_>>())?;
    d.set_item(
        "norm_sq",
        trace.points.iter().map(|p| p.norm_sq).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "vel_sq",
        trace.points.iter().map(|p| p.vel_sq).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "res_sq",
        trace.points.iter().map(|p| p.res_sq).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "dist_sq",
        trace.points.iter().map(|p| p.dist_sq).collect::<Vec<_>>(),
    )?;
    if let Some(f) = trace.fejer {
        d.set_item("fejer_initial", f.initial)?;
        d.set_item("fejer_max", f.max)?;
    }
    d.set_item("csv", trace.to_csv())?;
    Ok(d)
}

fn options(op: &OperatorModel, every_step: bool) -> IterateOptions {
    IterateOptions {
        checkpoints: if every_step {
            Checkpoints::All
        } else {
            Checkpoints::default()
        },
        projector: Some(fixed_point_projector(op)),
        store_vectors: false,
    }
}

/// Runs the accelerated iteration; returns diagnostic columns keyed by name.
#[pyfunction]
#[pyo3(signature = (op, x0, alpha, n_max, every_step = false))]
fn bn_iterate<'py>(
    py: Python<'py>,
    op: &PyOperator,
    x0: Vec<f64>,
    alpha: f64,
    n_max: usize,
    every_step: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let a = Alpha::new(alpha).map_err(py_err)?;
    let trace = core_bn_iterate(&op.inner, &x0, a, n_max, &options(&op.inner, every_step))
        .map_err(py_err)?;
    trace_dict(py, &trace)
}

#[pyfunction]
#[pyo3(signature = (op, x0, n_max, every_step = false))]
fn cesaro_iterate<'py>(
    py: Python<'py>,
    op: &PyOperator,
    x0: Vec<f64>,
    n_max: usize,
    every_step: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let trace = core_cesaro_iterate(&op.inner, &x0, n_max, &options(&op.inner, every_step))
        .map_err(py_err)?;
    trace_dict(py, &trace)
}

/// `(max_deviation, at_n, tolerance)` between iteration and coefficient expansion.
#[pyfunction]
fn equivalence_check(
    op: &PyOperator,
    x0: Vec<f64>,
    alpha: f64,
    n_max: usize,
) -> PyResult<(f64, usize, f64)> {
    let a = Alpha::new(alpha).map_err(py_err)?;
    let eq = core_equivalence(&op.inner, &x0, a, n_max).map_err(py_err)?;
    Ok((eq.max_deviation, eq.at_n, eq.tolerance))
}

/// `(exponent, constant, r_squared)` of `value ≈ C n^p` over `[lo, hi]`.
#[pyfunction]
fn fit_power_law(
    ns: Vec<usize>,
    values: Vec<f64>,
    lo: usize,
    hi: usize,
) -> PyResult<(f64, f64, f64)> {
    if ns.len() != values.len() {
        return Err(py_err(Error::DimensionMismatch {
            expected: ns.len(),
            got: values.len(),
        }));
    }
    let data: Vec<(usize, f64)> = ns.into_iter().zip(values).collect();
    let f = core_fit(&data, (lo, hi)).map_err(py_err)?;
    Ok((f.exponent, f.constant, f.r_squared))
}

/// `[(n, Σ_k |c_{n,k} − b_{n,k}|)]` for `0 <= n <= n_max`.
#[pyfunction]
fn tv_distance_curve(alpha: f64, beta: f64, n_max: usize) -> PyResult<Vec<(usize, f64)>> {
    let a = Alpha::new(alpha).map_err(py_err)?;
    let b = Beta::new(beta).map_err(py_err)?;
    Ok(core_tv(a, b, n_max).map_err(py_err)?.series())
}

/// Adds every class and function to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyOperator>()?;
    m.add_class::<PyTable>()?;
    m.add_function(wrap_pyfunction!(bn_row, m)?)?;
    m.add_function(wrap_pyfunction!(bn_row_exact, m)?)?;
    m.add_function(wrap_pyfunction!(beta_binomial_row, m)?)?;
    m.add_function(wrap_pyfunction!(bn_iterate, m)?)?;
    m.add_function(wrap_pyfunction!(cesaro_iterate, m)?)?;
    m.add_function(wrap_pyfunction!(equivalence_check, m)?)?;
    m.add_function(wrap_pyfunction!(fit_power_law, m)?)?;
    m.add_function(wrap_pyfunction!(tv_distance_curve, m)?)?;
    Ok(())
}

#[pymodule]
fn bn_ergodic(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
