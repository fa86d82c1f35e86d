//! Python bindings. Structured inputs and results cross the boundary as
//! plain dicts with the same field names as the Rust types.

use lnspdc::coincidence::{analytic_car, analyze, AnalysisOptions};
use lnspdc::dispersion::{gvd, te_curve};
use lnspdc::mode::{mode_overlap, ModeSolution};
use lnspdc::qpm::{phase_matching_bandwidth, solve_poling_period, QpmCurves, QpmDesign};
use lnspdc::shg::{shg_efficiency, ShgModelInput};
use lnspdc::spectra::{jsi, marginal_signal_spectrum, JsiGridSpec, PumpEnvelope};
use lnspdc::tags::{simulate_tags, SourceConfig};
use lnspdc::{GridSpec, LayerMaterials, MaterialCatalog, WaveguideGeometry};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

fn err(e: lnspdc::Error) -> PyErr {
    match e {
        lnspdc::Error::Io(e) => PyIOError::new_err(e.to_string()),
        e if e.is_numerical() => PyRuntimeError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn grid_spec(core_step_nm: Option<f64>) -> GridSpec {
    core_step_nm.map(GridSpec::with_core_step).unwrap_or_default()
}

/// Reference ridge cross-section as a dict.
#[pyfunction]
fn reference_geometry(py: Python<'_>) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &WaveguideGeometry::REFERENCE)
}

/// Film, substrate and cladding index models.
#[pyclass(name = "Materials", frozen)]
struct PyMaterials(LayerMaterials);

#[pymethods]
impl PyMaterials {
    #[new]
    #[pyo3(signature = (path=None))]
    fn new(path: Option<std::path::PathBuf>) -> PyResult<Self> {
        let catalog = match path {
            Some(p) => MaterialCatalog::load(&p).map_err(err)?,
            None => MaterialCatalog::bundled(),
        };
        Ok(Self(catalog.stack().map_err(err)?))
    }

    /// Extraordinary (TE) film index at a wavelength in µm.
    fn film_te(&self, wavelength_um: f64) -> PyResult<f64> {
        self.0.film_te.index(wavelength_um).map_err(err)
    }
}

fn mode_dict<'py>(py: Python<'py>, m: &ModeSolution) -> PyResult<Bound<'py, PyAny>> {
    to_py(
        py,
        &serde_json::json!({
            "wavelength_um": m.wavelength_um,
            "n_eff": m.n_eff,
            "polarization": m.polarization,
            "te_fraction": m.te_fraction,
            "a_eff_um2": m.a_eff_um2,
            "guided": m.guided,
        }),
    )
}

/// Discretized cross-section; reuse it to solve several wavelengths on one grid.
#[pyclass(name = "ModeSolver", frozen)]
struct PyModeSolver(lnspdc::ModeSolver);

#[pymethods]
impl PyModeSolver {
    #[new]
    #[pyo3(signature = (geometry, materials, max_wavelength_um, core_step_nm=None))]
    fn new(
        geometry: &Bound<'_, PyAny>,
        materials: &PyMaterials,
        max_wavelength_um: f64,
        core_step_nm: Option<f64>,
    ) -> PyResult<Self> {
        let g: WaveguideGeometry = from_py(geometry)?;
        let solver = lnspdc::ModeSolver::new(&g, &materials.0, &grid_spec(core_step_nm), max_wavelength_um);
        Ok(Self(solver.map_err(err)?))
    }

    /// Fundamental TE mode summary at a wavelength in µm.
    fn fundamental_te<'py>(&self, py: Python<'py>, wavelength_um: f64) -> PyResult<Bound<'py, PyAny>> {
        mode_dict(py, &self.0.fundamental_te(wavelength_um).map_err(err)?)
    }

    /// Power-coupling overlap of the fundamental TE modes at two wavelengths.
    fn te_overlap(&self, a_um: f64, b_um: f64) -> PyResult<f64> {
        let a = self.0.fundamental_te(a_um).map_err(err)?;
        let b = self.0.fundamental_te(b_um).map_err(err)?;
        mode_overlap(&a, &b).map_err(err)
    }
}

/// Fundamental TE n_eff(λ) with spline derivatives.
#[pyclass(name = "DispersionCurve", frozen)]
struct PyDispersionCurve(lnspdc::DispersionCurve);

#[pymethods]
impl PyDispersionCurve {
    /// Curve from sampled effective indices.
    #[new]
    fn new(wavelengths_um: Vec<f64>, n_eff: Vec<f64>) -> PyResult<Self> {
        Ok(Self(lnspdc::DispersionCurve::new(wavelengths_um, n_eff).map_err(err)?))
    }

    /// Solves the TE curve of a cross-section over [lo, hi] µm.
    #[staticmethod]
    #[pyo3(signature = (geometry, materials, lo_um, hi_um, step_nm=10.0, core_step_nm=None))]
    fn solve(
        geometry: &Bound<'_, PyAny>,
        materials: &PyMaterials,
        lo_um: f64,
        hi_um: f64,
        step_nm: f64,
        core_step_nm: Option<f64>,
    ) -> PyResult<Self> {
        let g: WaveguideGeometry = from_py(geometry)?;
        let curve = te_curve(&g, &materials.0, &grid_spec(core_step_nm), lo_um, hi_um, step_nm).map_err(err)?;
        Ok(Self(curve))
    }

    fn n_eff(&self, wavelength_um: f64) -> PyResult<f64> {
        self.0.n_eff_at(wavelength_um).map_err(err)
    }

    /// Group-velocity dispersion k″ in fs²/mm.
    fn gvd(&self, wavelength_um: f64) -> PyResult<f64> {
        gvd(&self.0, wavelength_um).map_err(err)
    }

    /// First-order QPM period in µm for a degenerate-band design.
    #[pyo3(signature = (pump_nm, signal_nm, order=1))]
    fn poling_period(&self, pump_nm: f64, signal_nm: f64, order: u32) -> PyResult<f64> {
        solve_poling_period(&QpmCurves::single(&self.0), pump_nm, signal_nm, order).map_err(err)
    }

    /// Sinc-null phase-matching bandwidth of a design dict.
    fn phase_matching_bandwidth<'py>(
        &self,
        py: Python<'py>,
        design: &Bound<'py, PyAny>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let d: QpmDesign = from_py(design)?;
        to_py(py, &phase_matching_bandwidth(&d, &QpmCurves::single(&self.0)).map_err(err)?)
    }

    /// JSI bandwidth and marginal signal spectrum summary.
    #[pyo3(signature = (design, pump, points=401))]
    fn jsi_summary<'py>(
        &self,
        py: Python<'py>,
        design: &Bound<'py, PyAny>,
        pump: &Bound<'py, PyAny>,
        points: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let d: QpmDesign = from_py(design)?;
        let p: PumpEnvelope = from_py(pump)?;
        let spec = JsiGridSpec {
            points,
            ..JsiGridSpec::default()
        };
        let grid = jsi(&d, &QpmCurves::single(&self.0), &p, &spec).map_err(err)?;
        let marginal = marginal_signal_spectrum(&grid).map_err(err)?;
        to_py(
            py,
            &serde_json::json!({
                "two_photon_bandwidth_thz": grid.bandwidth_thz().map_err(err)?,
                "signal_half_bandwidth_thz": marginal.half_bandwidth_thz,
                "signal_half_bandwidth_nm": marginal.half_bandwidth_nm,
                "marginal_fwhm_thz": marginal.fwhm_thz,
            }),
        )
    }
}

/// Normalized SHG efficiency in %/W/cm² from a model dict.
#[pyfunction]
fn shg_eta(model: &Bound<'_, PyAny>) -> PyResult<f64> {
    let m: ShgModelInput = from_py(model)?;
    shg_efficiency(&m).map_err(err)
}

/// Closed-form CAR of a Poisson pair source.
#[pyfunction]
fn car_closed_form(pair_rate_hz: f64, eta_s: f64, eta_i: f64, singles_s_hz: f64, singles_i_hz: f64, window_ps: f64) -> f64 {
    analytic_car(pair_rate_hz, eta_s, eta_i, singles_s_hz, singles_i_hz, window_ps)
}

/// Time-tag stream in the TTAG format.
#[pyclass(name = "TagStream", frozen)]
struct PyTagStream(lnspdc::TagStream);

#[pymethods]
impl PyTagStream {
    /// Synthetic stream from a source dict.
    #[staticmethod]
    fn simulate(source: &Bound<'_, PyAny>) -> PyResult<Self> {
        let cfg: SourceConfig = from_py(source)?;
        Ok(Self(simulate_tags(&cfg).map_err(err)?))
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        Ok(Self(lnspdc::TagStream::read_from(data).map_err(err)?))
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, pyo3::types::PyBytes> {
        pyo3::types::PyBytes::new(py, &self.0.to_bytes())
    }

    fn counts_per_channel(&self) -> Vec<u64> {
        self.0.counts_per_channel()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    /// Singles, CAR, PCR and heralded g2; `options` overrides the defaults.
    #[pyo3(signature = (options=None))]
    fn analyze<'py>(&self, py: Python<'py>, options: Option<&Bound<'py, PyAny>>) -> PyResult<Bound<'py, PyAny>> {
        let opts: AnalysisOptions = match options {
            Some(o) => from_py(o)?,
            None => AnalysisOptions::default(),
        };
        let mut report = serde_json::to_value(analyze(&self.0, &opts).map_err(err)?)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        if let Some(r) = report.as_object_mut() {
            r.remove("histogram");
        }
        to_py(py, &report)
    }
}

#[pymodule]
#[pyo3(name = "lnspdc")]
fn lnspdc_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMaterials>()?;
    m.add_class::<PyModeSolver>()?;
    m.add_class::<PyDispersionCurve>()?;
    m.add_class::<PyTagStream>()?;
    m.add_function(wrap_pyfunction!(reference_geometry, m)?)?;
    m.add_function(wrap_pyfunction!(shg_eta, m)?)?;
    m.add_function(wrap_pyfunction!(car_closed_form, m)?)?;
    Ok(())
}
