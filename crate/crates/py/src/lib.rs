//! Python bindings: grids, fields, kernel convolutions, initial data,
//! time stepping and diagnostics, mirroring the `tricam-core` surface.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use tricam_core::diagnostics::{self, Sample};
use tricam_core::dynamics::{self, SolverOptions, TimeStep};
use tricam_core::field::{DerivativeBackend, Field, Grid1D};
use tricam_core::initdata::{self, MollifierIndex, PeakonKind, PeakonParams};
use tricam_core::kernels::{self, KernelBackend};

fn py_err(e: tricam_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_backend(name: &str) -> PyResult<KernelBackend> {
    name.parse().map_err(py_err)
}

/// Uniform periodic grid on `[x_min, x_max)`.
#[pyclass(name = "Grid", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGrid {
    inner: Grid1D,
}

#[pymethods]
impl PyGrid {
    #[new]
    #[pyo3(signature = (x_min, x_max, n, periodic = true))]
    fn new(x_min: f64, x_max: f64, n: usize, periodic: bool) -> PyResult<Self> {
        Ok(Self {
            inner: Grid1D::new(x_min, x_max, n, periodic).map_err(py_err)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn dx(&self) -> f64 {
        self.inner.dx()
    }

    #[getter]
    fn x_min(&self) -> f64 {
        self.inner.x_min()
    }

    #[getter]
    fn x_max(&self) -> f64 {
        self.inner.x_max()
    }

    #[getter]
    fn periodic(&self) -> bool {
        self.inner.is_periodic()
    }

    /// Node coordinates.
    fn points(&self) -> Vec<f64> {
        self.inner.points().collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid(x_min={}, x_max={}, n={}, periodic={})",
            self.inner.x_min(),
            self.inner.x_max(),
            self.inner.n(),
            self.inner.is_periodic()
        )
    }
}

/// Real scalar samples on a [`Grid`].
#[pyclass(name = "Field", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyField {
    inner: Field,
}

impl PyField {
    fn wrap(inner: Field) -> Self {
        Self { inner }
    }
}

#[pymethods]
impl PyField {
    #[new]
    fn new(grid: &PyGrid, values: Vec<f64>) -> PyResult<Self> {
        Ok(Self::wrap(Field::new(grid.inner, values).map_err(py_err)?))
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid {
            inner: self.inner.grid(),
        }
    }

    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    #[pyo3(signature = (backend = "spectral"))]
    fn derivative(&self, backend: &str) -> PyResult<Self> {
        let b = match backend {
            "spectral" => DerivativeBackend::Spectral,
            "fd4" => DerivativeBackend::CentralFd4,
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown derivative backend '{other}' (expected spectral|fd4)"
                )))
            }
        };
        Ok(Self::wrap(self.inner.derivative_with(b).map_err(py_err)?))
    }

    fn second_derivative(&self) -> PyResult<Self> {
        Ok(Self::wrap(self.inner.second_derivative().map_err(py_err)?))
    }

    fn integrate(&self) -> PyResult<f64> {
        self.inner.integrate().map_err(py_err)
    }

    fn lp_norm(&self, p: f64) -> PyResult<f64> {
        self.inner.lp_norm(p).map_err(py_err)
    }

    fn h1_norm(&self) -> PyResult<f64> {
        self.inner.h1_norm().map_err(py_err)
    }

    fn sup_norm(&self) -> f64 {
        self.inner.sup_norm()
    }

    fn min_value(&self) -> f64 {
        self.inner.min_value()
    }

    fn total_variation(&self) -> f64 {
        diagnostics::total_variation(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Evolved pair `(a, c)` at one time.
#[pyclass(name = "State", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyState {
    inner: dynamics::State,
}

#[pymethods]
impl PyState {
    #[new]
    fn new(t: f64, a: &PyField, c: &PyField) -> PyResult<Self> {
        Ok(Self {
            inner: dynamics::State::new(t, a.inner.clone(), c.inner.clone()).map_err(py_err)?,
        })
    }

    #[getter]
    fn t(&self) -> f64 {
        self.inner.t()
    }

    #[getter]
    fn a(&self) -> PyField {
        PyField::wrap(self.inner.a().clone())
    }

    #[getter]
    fn c(&self) -> PyField {
        PyField::wrap(self.inner.c().clone())
    }

    fn swapped(&self) -> PyState {
        PyState {
            inner: self.inner.swapped(),
        }
    }
}

#[pyfunction]
#[pyo3(signature = (f, backend = "fourier"))]
fn conv_g1(f: &PyField, backend: &str) -> PyResult<PyField> {
    Ok(PyField::wrap(
        kernels::conv_g1(&f.inner, parse_backend(backend)?).map_err(py_err)?,
    ))
}

#[pyfunction]
#[pyo3(signature = (f, backend = "fourier"))]
fn conv_g2(f: &PyField, backend: &str) -> PyResult<PyField> {
    Ok(PyField::wrap(
        kernels::conv_g2(&f.inner, parse_backend(backend)?).map_err(py_err)?,
    ))
}

#[pyfunction]
#[pyo3(signature = (f, backend = "fourier"))]
fn conv_g1_dx(f: &PyField, backend: &str) -> PyResult<PyField> {
    Ok(PyField::wrap(
        kernels::conv_g1_dx(&f.inner, parse_backend(backend)?).map_err(py_err)?,
    ))
}

#[pyfunction]
#[pyo3(signature = (f, backend = "fourier"))]
fn conv_g2_dx(f: &PyField, backend: &str) -> PyResult<PyField> {
    Ok(PyField::wrap(
        kernels::conv_g2_dx(&f.inner, parse_backend(backend)?).map_err(py_err)?,
    ))
}

/// Sampled mollifier `rho_n`, unit quadrature mass.
#[pyfunction]
fn mollifier(n: u32, grid: &PyGrid) -> PyResult<PyField> {
    let idx = MollifierIndex::new(n).map_err(py_err)?;
    Ok(PyField::wrap(
        initdata::mollifier(idx, grid.inner).map_err(py_err)?,
    ))
}

/// Periodic mollification `rho_n * f`.
#[pyfunction]
fn mollify(f: &PyField, n: u32) -> PyResult<PyField> {
    let idx = MollifierIndex::new(n).map_err(py_err)?;
    Ok(PyField::wrap(
        initdata::mollify(&f.inner, idx).map_err(py_err)?,
    ))
}

/// Peaked-soliton ansatz `sum_i amp_i e^{-decay |x - pos_i|}`;
/// `kind` is one of `a`, `c` (decay 1) or `b` (decay 2).
#[pyfunction]
#[pyo3(signature = (peaks, grid, kind = "a"))]
fn peakon_field(peaks: Vec<(f64, f64)>, grid: &PyGrid, kind: &str) -> PyResult<PyField> {
    let kind = match kind {
        "a" => PeakonKind::AComponent,
        "c" => PeakonKind::CComponent,
        "b" => PeakonKind::BComponent,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown peakon kind '{other}' (expected a|c|b)"
            )))
        }
    };
    Ok(PyField::wrap(
        initdata::peakon_field(&PeakonParams::new(kind, peaks), grid.inner).map_err(py_err)?,
    ))
}

/// Elliptic lift `a0 = (1 - d_xx)^{-1} u0`.
#[pyfunction]
fn lift_initial(u0: &PyField) -> PyResult<PyField> {
    Ok(PyField::wrap(
        initdata::lift_initial(&u0.inner).map_err(py_err)?,
    ))
}

/// Mollified peaked-soliton data `(u0, w0)`.
#[pyfunction]
fn smoothed_peakon_profile(
    peaks_a: Vec<(f64, f64)>,
    peaks_c: Vec<(f64, f64)>,
    moll: u32,
    grid: &PyGrid,
) -> PyResult<(PyField, PyField)> {
    let profile = initdata::Profile::SmoothedPeakon {
        peaks_a,
        peaks_c,
        moll,
    };
    let (u0, w0) = initdata::admissible_profiles(&profile, grid.inner).map_err(py_err)?;
    Ok((PyField::wrap(u0), PyField::wrap(w0)))
}

#[pyfunction]
#[pyo3(signature = (a, c, backend = "fourier"))]
fn recover_b(a: &PyField, c: &PyField, backend: &str) -> PyResult<PyField> {
    Ok(PyField::wrap(
        dynamics::recover_b(&a.inner, &c.inner, parse_backend(backend)?).map_err(py_err)?,
    ))
}

#[pyfunction]
fn compute_u(a: &PyField) -> PyResult<PyField> {
    Ok(PyField::wrap(dynamics::compute_u(&a.inner).map_err(py_err)?))
}

#[pyfunction]
fn compute_w(c: &PyField) -> PyResult<PyField> {
    Ok(PyField::wrap(dynamics::compute_w(&c.inner).map_err(py_err)?))
}

fn options(backend: &str, cfl: f64, dt_max: f64) -> PyResult<SolverOptions> {
    Ok(SolverOptions {
        backend: parse_backend(backend)?,
        cfl,
        dt_max,
        ..SolverOptions::default()
    })
}

/// Right-hand side `(da/dt, dc/dt)` of the evolution system.
#[pyfunction]
#[pyo3(signature = (state, backend = "fourier"))]
fn rhs(state: &PyState, backend: &str) -> PyResult<(PyField, PyField)> {
    let opts = options(backend, 0.3, 0.02)?;
    let r = dynamics::rhs(&state.inner, &opts).map_err(py_err)?;
    Ok((PyField::wrap(r.da_dt), PyField::wrap(r.dc_dt)))
}

/// One RK4 step (negative `dt` steps backwards).
#[pyfunction]
#[pyo3(signature = (state, dt, backend = "fourier"))]
fn step_rk4(state: &PyState, dt: f64, backend: &str) -> PyResult<PyState> {
    let opts = options(backend, 0.3, 0.02)?;
    Ok(PyState {
        inner: dynamics::step_rk4(&state.inner, dt, &opts).map_err(py_err)?,
    })
}

fn record_to_dict<'py>(
    py: Python<'py>,
    rec: &diagnostics::DiagnosticsRecord,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    use pyo3::types::PyDict;
    let d = PyDict::new(py);
    d.set_item("t", rec.t)?;
    d.set_item("h1", rec.h1)?;
    d.set_item("h2_form1", rec.h2_form1)?;
    d.set_item("h2_form2", rec.h2_form2)?;
    d.set_item("min_u", rec.min_u)?;
    d.set_item("min_w", rec.min_w)?;
    d.set_item("slope_excess_a", rec.slope_excess_a)?;
    d.set_item("slope_excess_c", rec.slope_excess_c)?;
    d.set_item("b_h1", rec.b_h1)?;
    d.set_item("b_sup", rec.b_sup)?;
    d.set_item("bx_sup", rec.bx_sup)?;
    d.set_item("elliptic_residual", rec.elliptic_residual)?;
    d.set_item("tv_ax", rec.tv_ax)?;
    d.set_item("tv_bx", rec.tv_bx)?;
    for ((field, p), value) in &rec.norms {
        let fname = match field {
            diagnostics::FieldTag::A => "a",
            diagnostics::FieldTag::C => "c",
            diagnostics::FieldTag::B => "b",
            diagnostics::FieldTag::U => "u",
            diagnostics::FieldTag::W => "w",
        };
        let pname = match p {
            diagnostics::NormTag::L1 => "l1",
            diagnostics::NormTag::LpEps => "lp",
            diagnostics::NormTag::L2 => "l2",
            diagnostics::NormTag::Sup => "sup",
        };
        d.set_item(format!("{pname}_{fname}"), *value)?;
    }
    Ok(d)
}

/// Measure one state: conserved functionals, sign/slope monitors, norms,
/// b bounds, total variations.
#[pyfunction]
#[pyo3(signature = (state, epsilon = 1.0, backend = "fourier"))]
fn diagnostics_record<'py>(
    py: Python<'py>,
    state: &PyState,
    epsilon: f64,
    backend: &str,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let b = dynamics::recover_b(state.inner.a(), state.inner.c(), parse_backend(backend)?)
        .map_err(py_err)?;
    let sample = Sample::new(state.inner.clone(), b);
    let rec = diagnostics::DiagnosticsRecord::measure(&sample, epsilon).map_err(py_err)?;
    record_to_dict(py, &rec)
}

/// March to `t_end`; returns the final state and one diagnostics dict per
/// observed sample (every `stride` steps). `dt = None` selects CFL-driven
/// stepping.
#[pyfunction]
#[pyo3(signature = (state, t_end, dt = None, stride = 10, epsilon = 1.0, backend = "fourier", cfl = 0.3, dt_max = 0.02))]
#[allow(clippy::too_many_arguments)]
fn evolve<'py>(
    py: Python<'py>,
    state: &PyState,
    t_end: f64,
    dt: Option<f64>,
    stride: usize,
    epsilon: f64,
    backend: &str,
    cfl: f64,
    dt_max: f64,
) -> PyResult<(PyState, Vec<Bound<'py, pyo3::types::PyDict>>)> {
    let mut opts = options(backend, cfl, dt_max)?;
    opts.stride = stride;
    let step = match dt {
        Some(d) => TimeStep::Fixed(d),
        None => TimeStep::Cfl,
    };
    let mut records = Vec::new();
    let mut measure_err: Option<tricam_core::Error> = None;
    let final_state = dynamics::evolve(&state.inner, t_end, step, &opts, |s, b| {
        if measure_err.is_some() {
            return;
        }
        let sample = Sample::new(s.clone(), b.clone());
        match diagnostics::DiagnosticsRecord::measure(&sample, epsilon) {
            Ok(rec) => records.push(rec),
            Err(e) => measure_err = Some(e),
        }
    })
    .map_err(py_err)?;
    if let Some(e) = measure_err {
        return Err(py_err(e));
    }
    let dicts = records
        .iter()
        .map(|r| record_to_dict(py, r))
        .collect::<PyResult<Vec<_>>>()?;
    Ok((PyState { inner: final_state }, dicts))
}

#[pyfunction]
fn conserved_h1(state: &PyState) -> PyResult<f64> {
    diagnostics::conserved_h1(&state.inner).map_err(py_err)
}

#[pyfunction]
fn conserved_h2(state: &PyState) -> PyResult<(f64, f64)> {
    diagnostics::conserved_h2(&state.inner).map_err(py_err)
}

#[pymodule]
fn tricam_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyState>()?;
    m.add_function(wrap_pyfunction!(conv_g1, m)?)?;
    m.add_function(wrap_pyfunction!(conv_g2, m)?)?;
    m.add_function(wrap_pyfunction!(conv_g1_dx, m)?)?;
    m.add_function(wrap_pyfunction!(conv_g2_dx, m)?)?;
    m.add_function(wrap_pyfunction!(mollifier, m)?)?;
    m.add_function(wrap_pyfunction!(mollify, m)?)?;
    m.add_function(wrap_pyfunction!(peakon_field, m)?)?;
    m.add_function(wrap_pyfunction!(lift_initial, m)?)?;
    m.add_function(wrap_pyfunction!(smoothed_peakon_profile, m)?)?;
    m.add_function(wrap_pyfunction!(recover_b, m)?)?;
    m.add_function(wrap_pyfunction!(compute_u, m)?)?;
    m.add_function(wrap_pyfunction!(compute_w, m)?)?;
    m.add_function(wrap_pyfunction!(rhs, m)?)?;
    m.add_function(wrap_pyfunction!(step_rk4, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(diagnostics_record, m)?)?;
    m.add_function(wrap_pyfunction!(conserved_h1, m)?)?;
    m.add_function(wrap_pyfunction!(conserved_h2, m)?)?;
    Ok(())
}
