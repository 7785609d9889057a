//! Python bindings for the biphoton bench simulator.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use biphoton::analysis::{self, Channel, FitGeometry, PlaneSweep};
use biphoton::config::parse_config;
use biphoton::experiment::{self, BenchSpec, DetectorSpec, IdlerScreen, ScanWindow};
use biphoton::grid::{make_grid, sampling_check as core_sampling_check};
use biphoton::source::{self, SourceKind};
use biphoton::temporal::{self, TemporalSpec};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Two-arm bench: source, signal arm with lens and slit A, idler arm with
/// screen B, detectors D1 and D2.
#[pyclass(name = "Bench", module = "biphoton")]
struct PyBench {
    inner: BenchSpec,
}

#[pymethods]
impl PyBench {
    /// Standard bench; `slit_b=False` leaves screen B open.
    #[staticmethod]
    #[pyo3(signature = (slit_b = true))]
    fn standard(slit_b: bool) -> Self {
        let screen = if slit_b {
            IdlerScreen::Slit
        } else {
            IdlerScreen::Open
        };
        Self {
            inner: BenchSpec::standard(screen),
        }
    }

    /// Bench described by a configuration document.
    #[staticmethod]
    fn from_config(text: &str) -> PyResult<Self> {
        let config = parse_config(text).map_err(value_error)?;
        Ok(Self {
            inner: config.to_bench().map_err(value_error)?,
        })
    }

    fn with_correlation_width(&self, correlation_width_m: f64) -> Self {
        let mut inner = self.inner.clone();
        inner.source.correlation_width_m = correlation_width_m;
        Self { inner }
    }

    fn with_separable_source(&self) -> Self {
        let mut inner = self.inner.clone();
        inner.source.kind = SourceKind::Separable;
        Self { inner }
    }

    fn with_point_d1(&self, position_m: f64) -> Self {
        let mut inner = self.inner.clone();
        inner.d1 = DetectorSpec::point(position_m);
        Self { inner }
    }

    fn with_slit_a_center(&self, center_m: f64) -> PyResult<Self> {
        Ok(Self {
            inner: self
                .inner
                .with_slit_a_center(center_m)
                .map_err(value_error)?,
        })
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(value_error)
    }

    #[getter]
    fn n_points(&self) -> usize {
        self.inner.grid.n_points()
    }

    #[getter]
    fn positions_m(&self) -> Vec<f64> {
        self.inner.grid.positions().to_vec()
    }

    /// Grid positions where slit A transmits.
    fn slit_a_sample_positions(&self) -> PyResult<Vec<f64>> {
        self.inner.slit_a_sample_positions().map_err(value_error)
    }

    fn __repr__(&self) -> String {
        format!(
            "Bench(n_points={}, extent_m={}, source={:?})",
            self.inner.grid.n_points(),
            self.inner.grid.extent_m(),
            self.inner.source.kind
        )
    }
}

/// Peak-normalized coincidence and D2 singles rates along a D2 sweep.
#[pyclass(name = "ScanResult", module = "biphoton")]
struct PyScanResult {
    inner: experiment::ScanResult,
}

fn parse_channel(channel: &str) -> PyResult<Channel> {
    match channel {
        "coincidence" => Ok(Channel::Coincidence),
        "singles" => Ok(Channel::Singles),
        other => Err(PyValueError::new_err(format!(
            "unknown channel {other:?}; expected \"coincidence\" or \"singles\""
        ))),
    }
}

#[pymethods]
impl PyScanResult {
    #[getter]
    fn positions_m(&self) -> Vec<f64> {
        self.inner.positions_m.clone()
    }

    #[getter]
    fn coincidence(&self) -> Vec<f64> {
        self.inner.coincidence.clone()
    }

    #[getter]
    fn singles_d2(&self) -> Vec<f64> {
        self.inner.singles_d2.clone()
    }

    #[pyo3(signature = (channel = "coincidence"))]
    fn fwhm(&self, channel: &str) -> PyResult<f64> {
        analysis::fwhm(&self.inner, parse_channel(channel)?).map_err(value_error)
    }

    /// Distance from the peak to the first zero, or None.
    fn first_zero(&self) -> PyResult<Option<f64>> {
        analysis::first_zero_profile(&self.inner.positions_m, &self.inner.coincidence)
            .map_err(value_error)
    }

    /// Fits `peak * sinc^2(pi w (y - y0) / (lambda L))` to the coincidences.
    fn fit_sinc2<'py>(
        &self,
        py: Python<'py>,
        wavelength_m: f64,
        distance_m: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let geometry = FitGeometry {
            wavelength_m,
            distance_m,
        };
        let fit = analysis::fit_sinc2(&self.inner, &geometry).map_err(value_error)?;
        let d = PyDict::new(py);
        d.set_item("width_m", fit.width_m)?;
        d.set_item("center_m", fit.center_m)?;
        d.set_item("peak", fit.peak)?;
        d.set_item("residual", fit.residual)?;
        d.set_item("first_zero_m", fit.first_zero_m(&geometry))?;
        d.set_item("good", fit.is_good())?;
        Ok(d)
    }
}

#[pyfunction]
#[pyo3(signature = (bench, y_min_m = -4e-3, y_max_m = 4e-3, steps = 321))]
fn run_coincidence_scan(
    bench: &PyBench,
    y_min_m: f64,
    y_max_m: f64,
    steps: usize,
) -> PyResult<PyScanResult> {
    let window = ScanWindow::new(y_min_m, y_max_m, steps).map_err(value_error)?;
    Ok(PyScanResult {
        inner: experiment::run_coincidence_scan(&bench.inner, &window).map_err(value_error)?,
    })
}

/// `(adequate, max_phase_step_rad, max_distance_m)` for a propagation.
#[pyfunction]
fn sampling_check(
    n_points: usize,
    extent_m: f64,
    wavelength_m: f64,
    distance_m: f64,
) -> PyResult<(bool, f64, f64)> {
    let grid = make_grid(n_points, extent_m).map_err(value_error)?;
    let r = core_sampling_check(&grid, wavelength_m, distance_m);
    Ok((r.adequate, r.max_phase_step_rad, r.max_distance_m))
}

/// `(image_distance_m, magnification)`.
#[pyfunction]
fn thin_lens_predict(object_distance_m: f64, focal_m: f64) -> PyResult<(f64, f64)> {
    let r = analysis::thin_lens_predict(object_distance_m, focal_m).map_err(value_error)?;
    Ok((r.image_distance_m, r.magnification))
}

#[pyfunction]
#[pyo3(signature = (bench, plane_min_m = 0.6, plane_max_m = 0.9, steps = 61))]
fn ghost_image_stats<'py>(
    py: Python<'py>,
    bench: &PyBench,
    plane_min_m: f64,
    plane_max_m: f64,
    steps: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let sweep = PlaneSweep {
        min_m: plane_min_m,
        max_m: plane_max_m,
        steps,
    };
    let r = analysis::ghost_image_stats(&bench.inner, &sweep).map_err(value_error)?;
    let d = PyDict::new(py);
    d.set_item("planes_m", r.planes_m)?;
    d.set_item("fwhm_m", r.fwhm_m)?;
    d.set_item("best_plane_m", r.best_plane_m)?;
    d.set_item("best_fwhm_m", r.best_fwhm_m)?;
    d.set_item("magnification", r.magnification)?;
    d.set_item("focus_inside", r.focus_inside)?;
    Ok(d)
}

/// Maximum deviation between forward and advanced-wave conditional
/// patterns over the slit-A sample positions. `perturb_m` lengthens the
/// first leg of the backward arm.
#[pyfunction]
#[pyo3(signature = (bench, perturb_m = 0.0))]
fn klyshko_check(bench: &PyBench, perturb_m: f64) -> PyResult<f64> {
    let mut b = bench.inner.clone();
    b.d1 = DetectorSpec::point(b.d1.position_m);
    let positions = b.slit_a_sample_positions().map_err(value_error)?;
    let mut backward = b.signal_arm.clone();
    if let Some(biphoton::elements::OpticalElement::FreeSpace { distance_m }) =
        backward.elements.first_mut()
    {
        *distance_m += perturb_m;
    }
    let report = experiment::klyshko_equivalence(&b, &backward, &positions).map_err(value_error)?;
    Ok(report.max_deviation())
}

/// Schmidt number of the bench's source amplitude.
#[pyfunction]
fn schmidt_number(bench: &PyBench) -> PyResult<f64> {
    let joint = bench.inner.build_source().map_err(value_error)?;
    source::schmidt_number(&joint).map_err(value_error)
}

/// Schmidt number of the sampled two-time wavepacket.
#[pyfunction]
#[pyo3(signature = (sigma_plus, sigma_minus, n_points = 512))]
fn temporal_schmidt_number(sigma_plus: f64, sigma_minus: f64, n_points: usize) -> PyResult<f64> {
    let spec = TemporalSpec {
        n_points,
        ..TemporalSpec::new(sigma_plus, sigma_minus)
    };
    let psi = temporal::eval_biphoton_wavepacket(&spec).map_err(value_error)?;
    temporal::factorability_check(psi.view()).map_err(value_error)
}

/// `|Psi(t1, t2)|` as nested lists, rows indexing `t1`, plus the time axis.
#[pyfunction]
#[pyo3(signature = (sigma_plus, sigma_minus, n_points = 512))]
fn temporal_envelope(
    sigma_plus: f64,
    sigma_minus: f64,
    n_points: usize,
) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let spec = TemporalSpec {
        n_points,
        ..TemporalSpec::new(sigma_plus, sigma_minus)
    };
    let psi = temporal::eval_biphoton_wavepacket(&spec).map_err(value_error)?;
    let rows = psi
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|z| z.norm()).collect())
        .collect();
    Ok((spec.times().to_vec(), rows))
}

#[pymodule]
#[pyo3(name = "biphoton")]
fn biphoton_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBench>()?;
    m.add_class::<PyScanResult>()?;
    m.add_function(wrap_pyfunction!(run_coincidence_scan, m)?)?;
    m.add_function(wrap_pyfunction!(sampling_check, m)?)?;
    m.add_function(wrap_pyfunction!(thin_lens_predict, m)?)?;
    m.add_function(wrap_pyfunction!(ghost_image_stats, m)?)?;
    m.add_function(wrap_pyfunction!(klyshko_check, m)?)?;
    m.add_function(wrap_pyfunction!(schmidt_number, m)?)?;
    m.add_function(wrap_pyfunction!(temporal_schmidt_number, m)?)?;
    m.add_function(wrap_pyfunction!(temporal_envelope, m)?)?;
    Ok(())
}
