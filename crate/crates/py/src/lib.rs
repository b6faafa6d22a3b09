//! Python module `thermolux`.

use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use thermolux_core as core;
use thermolux_core::{
    Band, FlatSpectrum, InputDistribution, PhysicalConstants, PlanckSource, RadiometricScene,
    SignalLevel, SolverConfig, SpectralModel,
};

fn to_py(e: core::Error) -> PyErr {
    match e {
        core::Error::Quadrature { .. } | core::Error::CountOverflow => {
            PyRuntimeError::new_err(e.to_string())
        }
        other => PyValueError::new_err(other.to_string()),
    }
}

fn level(x: f64) -> PyResult<SignalLevel> {
    SignalLevel::new(x).map_err(to_py)
}

#[pyfunction]
fn gibbs_pmf(n: u64, x: f64) -> PyResult<f64> {
    core::gibbs_pmf(n, x).map_err(to_py)
}

/// Capacity of the two-level code `{0, x_m}` in nats.
#[pyfunction]
fn two_point_capacity(x_m: f64) -> PyResult<f64> {
    Ok(core::two_point_capacity(level(x_m)?))
}

#[pyfunction]
fn two_point_weight(x_m: f64) -> PyResult<f64> {
    core::two_point_weight(level(x_m)?).map_err(to_py)
}

/// `I(f)` in nats for atoms `levels` with probabilities `weights`.
#[pyfunction]
#[pyo3(signature = (levels, weights, x_max))]
fn mutual_information(levels: Vec<f64>, weights: Vec<f64>, x_max: f64) -> PyResult<f64> {
    if levels.len() != weights.len() {
        return Err(PyValueError::new_err("levels and weights differ in length"));
    }
    let f = InputDistribution::new(levels.into_iter().zip(weights)).map_err(to_py)?;
    let ch = core::GeometricChannel::with_default_tail(level(x_max)?).map_err(to_py)?;
    core::mutual_information(&f, &ch).map_err(to_py)
}

#[pyclass(frozen, get_all, skip_from_py_object, module = "thermolux")]
#[derive(Debug, Clone)]
struct CapacityResult {
    capacity_nats: f64,
    upper_bound_nats: f64,
    levels: Vec<f64>,
    weights: Vec<f64>,
    iterations: usize,
    converged: bool,
    kkt_max_violation: f64,
}

#[pymethods]
impl CapacityResult {
    fn __repr__(&self) -> String {
        format!(
            "CapacityResult(capacity_nats={}, levels={:?}, weights={:?}, converged={})",
            self.capacity_nats, self.levels, self.weights, self.converged
        )
    }
}

#[pyfunction]
#[pyo3(signature = (x_m, grid_points = 2001, tol = 1e-9))]
fn solve_capacity(
    py: Python<'_>,
    x_m: f64,
    grid_points: usize,
    tol: f64,
) -> PyResult<CapacityResult> {
    let xm = level(x_m)?;
    let cfg = SolverConfig {
        grid_points,
        tol,
        ..SolverConfig::default()
    };
    let r = py
        .detach(|| core::solve_capacity(xm, &cfg))
        .map_err(to_py)?;
    let atoms = r.distribution.atoms();
    Ok(CapacityResult {
        capacity_nats: r.capacity_nats,
        upper_bound_nats: r.upper_bound_nats,
        levels: atoms.iter().map(|a| a.level.value()).collect(),
        weights: atoms.iter().map(|a| a.weight).collect(),
        iterations: r.iterations,
        converged: r.converged,
        kkt_max_violation: r.kkt_max_violation,
    })
}

/// Returns `(is_optimal, max_excess_nats, argmax_level)`.
#[pyfunction]
#[pyo3(signature = (x_m, probe_points = 2001))]
fn verify_two_point_kkt(x_m: f64, probe_points: usize) -> PyResult<(bool, f64, f64)> {
    let r = core::verify_two_point_kkt(level(x_m)?, probe_points).map_err(to_py)?;
    Ok((r.is_optimal, r.max_excess_nats, r.argmax_level))
}

/// Returns `(level, lo, hi)`.
#[pyfunction]
#[pyo3(signature = (lo = 0.85, hi = 0.95, resolution = 1e-3))]
fn find_two_point_threshold(
    py: Python<'_>,
    lo: f64,
    hi: f64,
    resolution: f64,
) -> PyResult<(f64, f64, f64)> {
    let t = py
        .detach(|| core::find_two_point_threshold(lo, hi, resolution))
        .map_err(to_py)?;
    Ok((t.level.value(), t.lo, t.hi))
}

#[pyfunction]
fn sigma() -> f64 {
    core::sigma_constant().value
}

#[pyfunction]
fn eta() -> f64 {
    core::eta_constant().value
}

#[pyfunction]
fn nats_per_photon() -> f64 {
    core::nats_per_photon()
}

#[pyfunction]
fn bits_per_photon() -> f64 {
    core::bits_per_photon()
}

/// Information per oscillator at frequency `nu` (Hz) for recorded energy
/// `rp` (J).
#[pyfunction]
fn per_oscillator_info(nu: f64, rp: f64) -> PyResult<f64> {
    core::per_oscillator_info(nu, rp, &PhysicalConstants::default()).map_err(to_py)
}

#[pyclass(frozen, module = "thermolux")]
struct Scene {
    inner: RadiometricScene,
    planck: Option<PlanckSource>,
}

fn build_scene(
    model: Arc<dyn SpectralModel>,
    area: f64,
    solid_angle: f64,
    tau: f64,
    nu_lo: f64,
    nu_hi: f64,
) -> PyResult<RadiometricScene> {
    let band = Band::new(nu_lo, nu_hi).map_err(to_py)?;
    RadiometricScene::new(area, solid_angle, tau, band, model).map_err(to_py)
}

#[pymethods]
impl Scene {
    /// Blackbody illumination at `temperature` kelvin.
    #[staticmethod]
    #[pyo3(signature = (temperature, area = 1.0, solid_angle = 2.0 * std::f64::consts::PI, tau = 1.0, nu_lo = 0.0, nu_hi = f64::INFINITY))]
    fn planck(
        temperature: f64,
        area: f64,
        solid_angle: f64,
        tau: f64,
        nu_lo: f64,
        nu_hi: f64,
    ) -> PyResult<Self> {
        let src = PlanckSource::new(temperature).map_err(to_py)?;
        Ok(Scene {
            inner: build_scene(Arc::new(src), area, solid_angle, tau, nu_lo, nu_hi)?,
            planck: Some(src),
        })
    }

    /// Constant recorded energy `rp` joules per oscillator on a bounded band.
    #[staticmethod]
    #[pyo3(signature = (rp, nu_lo, nu_hi, area = 1.0, solid_angle = 1.0, tau = 1.0))]
    fn flat(
        rp: f64,
        nu_lo: f64,
        nu_hi: f64,
        area: f64,
        solid_angle: f64,
        tau: f64,
    ) -> PyResult<Self> {
        let model = FlatSpectrum::new(rp).map_err(to_py)?;
        Ok(Scene {
            inner: build_scene(Arc::new(model), area, solid_angle, tau, nu_lo, nu_hi)?,
            planck: None,
        })
    }

    /// `J_m` in nats.
    fn total_info(&self) -> PyResult<f64> {
        core::total_info_jm(&self.inner)
            .map(|e| e.value)
            .map_err(to_py)
    }

    fn expected_photons(&self) -> PyResult<f64> {
        core::radiometry::expected_photons(&self.inner)
            .map(|e| e.value)
            .map_err(to_py)
    }

    fn degrees_of_freedom(&self) -> PyResult<f64> {
        core::degrees_of_freedom(&self.inner)
            .map(|d| d.total)
            .map_err(to_py)
    }

    /// Information per second per m² at Ω = 2π; blackbody scenes only.
    fn max_rate(&self) -> PyResult<f64> {
        let src = self
            .planck
            .ok_or_else(|| PyValueError::new_err("max_rate needs a blackbody scene"))?;
        Ok(core::max_rate_rm(&src, self.inner.constants()))
    }

    fn warnings(&self) -> Vec<String> {
        self.inner
            .warnings()
            .iter()
            .map(ToString::to_string)
            .collect()
    }
}

#[pyclass(frozen, get_all, skip_from_py_object, module = "thermolux")]
#[derive(Debug, Clone)]
struct SimulationReport {
    empirical_mi_nats: f64,
    mi_standard_error: f64,
    photon_mean: f64,
    photon_mean_standard_error: f64,
    map_error_rate: Option<f64>,
    seed: u64,
    samples: u64,
    /// `(atom, n, count)` triples.
    histogram: Vec<(usize, u64, u64)>,
}

#[pymethods]
impl SimulationReport {
    fn __repr__(&self) -> String {
        format!(
            "SimulationReport(empirical_mi_nats={}, mi_standard_error={}, samples={}, seed={})",
            self.empirical_mi_nats, self.mi_standard_error, self.samples, self.seed
        )
    }
}

/// Simulates the optimal two-level code at `x_m`.
#[pyfunction]
#[pyo3(signature = (x_m, samples = 1_000_000, seed = 0))]
fn run_simulation(py: Python<'_>, x_m: f64, samples: u64, seed: u64) -> PyResult<SimulationReport> {
    let xm = level(x_m)?;
    let f = core::optimal_two_point_distribution(xm).map_err(to_py)?;
    let cfg = core::SimulationConfig::new(f, xm, samples, seed).map_err(to_py)?;
    let r = py.detach(|| core::run_simulation(&cfg)).map_err(to_py)?;
    Ok(SimulationReport {
        empirical_mi_nats: r.empirical_mi_nats,
        mi_standard_error: r.mi_standard_error,
        photon_mean: r.photon_mean,
        photon_mean_standard_error: r.photon_mean_standard_error,
        map_error_rate: r.map_error_rate,
        seed: r.seed,
        samples: r.samples,
        histogram: r
            .count_histogram
            .iter()
            .map(|(&(a, n), &c)| (a, n, c))
            .collect(),
    })
}

/// Returns `(nats_per_photon, standard_error)`.
#[pyfunction]
#[pyo3(signature = (temperature, oscillators, seed = 0))]
fn empirical_nats_per_photon(
    py: Python<'_>,
    temperature: f64,
    oscillators: u64,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let src = PlanckSource::new(temperature).map_err(to_py)?;
    let r = py
        .detach(|| {
            core::empirical_nats_per_photon(&src, &PhysicalConstants::default(), oscillators, seed)
        })
        .map_err(to_py)?;
    Ok((r.nats_per_photon, r.standard_error))
}

#[pymodule]
fn thermolux(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(gibbs_pmf, m)?)?;
    m.add_function(wrap_pyfunction!(two_point_capacity, m)?)?;
    m.add_function(wrap_pyfunction!(two_point_weight, m)?)?;
    m.add_function(wrap_pyfunction!(mutual_information, m)?)?;
    m.add_function(wrap_pyfunction!(solve_capacity, m)?)?;
    m.add_function(wrap_pyfunction!(verify_two_point_kkt, m)?)?;
    m.add_function(wrap_pyfunction!(find_two_point_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(sigma, m)?)?;
    m.add_function(wrap_pyfunction!(eta, m)?)?;
    m.add_function(wrap_pyfunction!(nats_per_photon, m)?)?;
    m.add_function(wrap_pyfunction!(bits_per_photon, m)?)?;
    m.add_function(wrap_pyfunction!(per_oscillator_info, m)?)?;
    m.add_function(wrap_pyfunction!(run_simulation, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_nats_per_photon, m)?)?;
    m.add_class::<CapacityResult>()?;
    m.add_class::<Scene>()?;
    m.add_class::<SimulationReport>()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_python_types() {
        Python::initialize();
        Python::attach(|py| {
            let e = to_py(core::Error::CountOverflow);
            assert!(e.is_instance_of::<PyRuntimeError>(py));
            let e = level(1.0).unwrap_err();
            assert!(e.is_instance_of::<PyValueError>(py));
        });
    }

    #[test]
    fn scene_round_trip() {
        let s = Scene::planck(
            6000.0,
            1.0,
            2.0 * std::f64::consts::PI,
            1.0,
            0.0,
            f64::INFINITY,
        )
        .unwrap();
        let ratio = s.total_info().unwrap() / s.expected_photons().unwrap();
        assert!((ratio - core::nats_per_photon()).abs() < 1e-8);
        assert!(s.max_rate().unwrap() > 0.0);
        let flat = Scene::flat(1e-20, 1e12, 2e12, 1.0, 1.0, 1.0).unwrap();
        assert!(flat.max_rate().is_err());
        assert!(flat.degrees_of_freedom().unwrap() > 0.0);
    }
}
