//! Python bindings. Charts are named as in the core crate's `Display`
//! (`bottom0`, `top0`, `tube3`); reports come back as plain dicts.

use anosov_core::cone::{lyapunov_exponent, scan_uniform_invariance, ConeScanConfig, ScanGrid};
use anosov_core::embedding::{
    convergence_report, embedded_genus as core_embedded_genus, embedded_torus, periodicity_check,
    ConvergenceGrid, RadiusSchedule,
};
use anosov_core::flow::{Flow, TangentState};
use anosov_core::model::horizon::{finite_horizon_bound, HorizonSampling};
use anosov_core::model::{
    assemble_with, default_tau as core_default_tau, gauss_bonnet_integral, Disk, DiskLattice,
    GaussBonnetGrid, ModelSurface, ProfileParams, QuotientSpec,
};
use anosov_core::surfaces::{flat_torus, hyperbolic_cylinder, sphere_band};
use anosov_core::{Atlas, ChartId, ChartPoint, Error};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn err(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter(_)
        | Error::InfeasibleProfile(_)
        | Error::NonPeriodic { .. }
        | Error::UnknownChart(_)
        | Error::OutOfDomain { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_chart(name: &str) -> PyResult<ChartId> {
    let bad = || PyValueError::new_err(format!("unknown chart name {name:?}"));
    let split = name.find(|c: char| c.is_ascii_digit()).ok_or_else(bad)?;
    let (kind, index) = name.split_at(split);
    let index: usize = index.parse().map_err(|_| bad())?;
    match kind {
        "bottom" => Ok(ChartId::bottom(index)),
        "top" => Ok(ChartId::top(index)),
        "tube" => Ok(ChartId::tube(index)),
        _ => Err(bad()),
    }
}

fn parse_schedule(name: &str) -> PyResult<RadiusSchedule> {
    match name {
        "quadratic" => Ok(RadiusSchedule::Quadratic),
        "equal" => Ok(RadiusSchedule::Equal),
        "sqrt2_ratio" => Ok(RadiusSchedule::Sqrt2Ratio),
        _ => Err(PyValueError::new_err(format!(
            "schedule must be quadratic, equal or sqrt2_ratio, got {name:?}"
        ))),
    }
}

fn lattice(disks: Option<Vec<([f64; 2], f64)>>) -> PyResult<DiskLattice> {
    match disks {
        None => Ok(DiskLattice::default_two_disk()),
        Some(d) => DiskLattice::new(
            d.into_iter()
                .map(|(center, radius)| Disk { center, radius })
                .collect(),
        )
        .map_err(err),
    }
}

/// A unit tangent vector at a chart point.
#[pyclass(frozen, name = "State", module = "anosov")]
struct PyState {
    inner: TangentState,
}

#[pymethods]
impl PyState {
    #[new]
    fn new(chart: &str, coords: [f64; 2], velocity: [f64; 2]) -> PyResult<Self> {
        Ok(Self {
            inner: TangentState::new(ChartPoint::new(parse_chart(chart)?, coords), velocity),
        })
    }

    #[getter]
    fn chart(&self) -> String {
        self.inner.p.chart.to_string()
    }

    #[getter]
    fn coords(&self) -> [f64; 2] {
        self.inner.p.coords
    }

    #[getter]
    fn velocity(&self) -> [f64; 2] {
        self.inner.v
    }

    fn __repr__(&self) -> String {
        format!(
            "State({:?}, {:?}, {:?})",
            self.chart(),
            self.inner.p.coords,
            self.inner.v
        )
    }
}

/// A surface given by an atlas of charts.
#[pyclass(frozen, name = "Surface", module = "anosov")]
struct PySurface {
    atlas: Atlas,
    model: Option<ModelSurface>,
}

impl PySurface {
    fn plain(atlas: Atlas) -> Self {
        Self { atlas, model: None }
    }

    fn point(&self, chart: &str, coords: [f64; 2]) -> PyResult<ChartPoint> {
        Ok(ChartPoint::new(parse_chart(chart)?, coords))
    }
}

#[pymethods]
impl PySurface {
    /// The compact quotient of the disk-lattice surface by `aZ x bZ`.
    /// `disks` is a list of `((x, y), radius)`; the default has two disks.
    #[staticmethod]
    #[pyo3(signature = (a = 1, b = 1, disks = None, collar = None, neck_fraction = None))]
    fn model(
        a: u32,
        b: u32,
        disks: Option<Vec<([f64; 2], f64)>>,
        collar: Option<f64>,
        neck_fraction: Option<f64>,
    ) -> PyResult<Self> {
        let defaults = ProfileParams::default();
        let params = ProfileParams {
            collar: collar.unwrap_or(defaults.collar),
            neck_fraction: neck_fraction.unwrap_or(defaults.neck_fraction),
        };
        let quotient = QuotientSpec::new(a, b).map_err(err)?;
        let model = assemble_with(&lattice(disks)?, Some(quotient), params).map_err(err)?;
        Ok(Self {
            atlas: model.atlas.clone(),
            model: Some(model),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (width = 1.0, height = 1.0))]
    fn flat_torus(width: f64, height: f64) -> Self {
        Self::plain(flat_torus(width, height))
    }

    #[staticmethod]
    fn hyperbolic_cylinder() -> Self {
        Self::plain(hyperbolic_cylinder())
    }

    #[staticmethod]
    fn sphere_band() -> Self {
        Self::plain(sphere_band())
    }

    /// The flat torus at slab height `height`, with the metric induced by
    /// the embedding at parameter `s`.
    #[staticmethod]
    #[pyo3(signature = (s, schedule = "quadratic", height = 0.0))]
    fn embedded_torus(s: f64, schedule: &str, height: f64) -> PyResult<Self> {
        let params = parse_schedule(schedule)?.params(s).map_err(err)?;
        Ok(Self::plain(embedded_torus(&params, height)))
    }

    #[getter]
    fn label(&self) -> &str {
        &self.atlas.label
    }

    #[getter]
    fn tube_count(&self) -> usize {
        self.atlas.tube_count()
    }

    /// `None` unless the surface is a model quotient.
    #[getter]
    fn genus(&self) -> Option<u64> {
        self.model.as_ref().map(ModelSurface::genus)
    }

    fn charts(&self) -> Vec<String> {
        self.atlas
            .charts()
            .iter()
            .map(|c| c.id.to_string())
            .collect()
    }

    fn curvature(&self, chart: &str, coords: [f64; 2]) -> PyResult<f64> {
        self.atlas
            .gaussian_curvature(&self.point(chart, coords)?)
            .map_err(err)
    }

    fn metric(&self, chart: &str, coords: [f64; 2]) -> PyResult<[[f64; 2]; 2]> {
        let g = self
            .atlas
            .metric_at(&self.point(chart, coords)?)
            .map_err(err)?;
        Ok([[g.xx, g.xy], [g.xy, g.yy]])
    }

    /// The unit vector at `angle` from the first coordinate direction.
    #[pyo3(signature = (chart, coords, angle = 0.0))]
    fn state(&self, chart: &str, coords: [f64; 2], angle: f64) -> PyResult<PyState> {
        let inner = TangentState::with_angle(&self.atlas, self.point(chart, coords)?, angle)
            .map_err(err)?;
        Ok(PyState { inner })
    }

    /// Flows `state` for `duration`. Returns `{"state", "dphi", "det"}`,
    /// where `dphi` acts on `(J, J')` perpendicular Jacobi data.
    fn flow<'py>(
        &self,
        py: Python<'py>,
        state: &PyState,
        duration: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let x = state.inner;
        let end = py
            .detach(|| Flow::new(&self.atlas).advance(&x, duration))
            .map_err(err)?;
        let d = pyo3::types::PyDict::new(py);
        d.set_item("state", Py::new(py, PyState { inner: end.state })?)?;
        d.set_item("dphi", end.dphi.0)?;
        d.set_item("det", end.det)?;
        Ok(d.into_any())
    }

    /// First conjugate time along the geodesic, if any before `duration`.
    fn conjugate_time(
        &self,
        py: Python<'_>,
        state: &PyState,
        duration: f64,
    ) -> PyResult<Option<f64>> {
        let x = state.inner;
        py.detach(|| Flow::new(&self.atlas).conjugate_time(&x, duration))
            .map_err(err)
    }

    #[pyo3(signature = (state, total, step = 1.0))]
    fn lyapunov(&self, py: Python<'_>, state: &PyState, total: f64, step: f64) -> PyResult<f64> {
        let x = state.inner;
        py.detach(|| lyapunov_exponent(&self.atlas, &x, total, step))
            .map(|e| e.lambda)
            .map_err(err)
    }

    /// Cone-invariance scan over a grid of unit vectors. `tau` defaults to
    /// 1.5 times the horizon bound of the default lattice's cores.
    #[pyo3(signature = (tau = None, spatial = (32, 32), angular = 64))]
    fn cone_scan<'py>(
        &self,
        py: Python<'py>,
        tau: Option<f64>,
        spatial: (usize, usize),
        angular: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let tau = tau.unwrap_or_else(|| default_tau(None).unwrap());
        let cfg = ConeScanConfig {
            grid: ScanGrid {
                spatial: [spatial.0, spatial.1],
                angular,
            },
            ..ConeScanConfig::new(tau)
        };
        let scan = py
            .detach(|| scan_uniform_invariance(&self.atlas, &cfg))
            .map_err(err)?;
        to_py(py, &scan.report)
    }

    #[pyo3(signature = (panels = 64, around = 64))]
    fn gauss_bonnet<'py>(
        &self,
        py: Python<'py>,
        panels: usize,
        around: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let gb =
            gauss_bonnet_integral(&self.atlas, GaussBonnetGrid { panels, around }).map_err(err)?;
        let d = pyo3::types::PyDict::new(py);
        d.set_item("integral", gb.integral)?;
        d.set_item("expected", gb.expected)?;
        d.set_item("genus", gb.genus)?;
        d.set_item("relative_error", gb.relative_error())?;
        Ok(d.into_any())
    }

    /// The model with every metric scaled by `1 + amplitude*cos(2pi u)*cos(2pi v)`.
    fn perturbed(&self, amplitude: f64) -> PyResult<Self> {
        let model = self
            .model
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("only model surfaces can be perturbed"))?;
        Ok(Self::plain(model.perturbed(amplitude)))
    }

    fn __repr__(&self) -> String {
        format!(
            "Surface({:?}, charts={})",
            self.atlas.label,
            self.atlas.charts().len()
        )
    }
}

/// Free-flight bound of straight lines among the disks.
#[pyfunction]
#[pyo3(signature = (disks = None))]
fn horizon_bound<'py>(
    py: Python<'py>,
    disks: Option<Vec<([f64; 2], f64)>>,
) -> PyResult<Bound<'py, PyAny>> {
    let l = lattice(disks)?;
    let report = py.detach(|| finite_horizon_bound(&l, &HorizonSampling::default()));
    to_py(py, &report)
}

/// 1.5 times the horizon bound of the curved cores.
#[pyfunction]
#[pyo3(signature = (disks = None))]
fn default_tau(disks: Option<Vec<([f64; 2], f64)>>) -> PyResult<f64> {
    let l = lattice(disks)?;
    Ok(core_default_tau(&l, &ProfileParams::default(), &HorizonSampling::default()).1)
}

/// `(m, n)` when both embedding periods are integers.
#[pyfunction]
#[pyo3(signature = (s, schedule = "quadratic"))]
fn periodicity(s: f64, schedule: &str) -> PyResult<Option<(u64, u64)>> {
    Ok(periodicity_check(
        &parse_schedule(schedule)?.params(s).map_err(err)?,
    ))
}

#[pyfunction]
#[pyo3(signature = (m, n, disks_per_cell = 2))]
fn embedded_genus(m: u64, n: u64, disks_per_cell: u64) -> u64 {
    core_embedded_genus(m, n, disks_per_cell)
}

/// Distance of the pulled-back metric from the identity, per `s`.
#[pyfunction]
#[pyo3(signature = (s_values, schedule = "quadratic"))]
fn convergence<'py>(
    py: Python<'py>,
    s_values: Vec<f64>,
    schedule: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let report = convergence_report(
        parse_schedule(schedule)?,
        &s_values,
        ConvergenceGrid::default(),
    )
    .map_err(err)?;
    to_py(py, &report)
}

#[pymodule]
fn anosov(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySurface>()?;
    m.add_class::<PyState>()?;
    m.add_function(wrap_pyfunction!(horizon_bound, m)?)?;
    m.add_function(wrap_pyfunction!(default_tau, m)?)?;
    m.add_function(wrap_pyfunction!(periodicity, m)?)?;
    m.add_function(wrap_pyfunction!(embedded_genus, m)?)?;
    m.add_function(wrap_pyfunction!(convergence, m)?)?;
    Ok(())
}
