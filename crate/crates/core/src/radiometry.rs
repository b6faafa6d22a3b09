//! Mode counting and spectral integration for a viewed object.
//!
//! A detector whose pupil subtends `Ω` from an object of area `S`, observing
//! for a time `τ`, resolves `G = (2/c²)·ν²·Ω·S·τ·δν` field oscillators in a
//! band `δν` around `ν`. Each oscillator contributes the two-level capacity of
//! the photon-counting channel with `x_m = rP/(rP + hν)`, where `rP` is the
//! recorded energy per oscillator at unit reflectivity.
//!
//! Under blackbody illumination the integrals reduce to the dimensionless
//! constants `σ` (information) and `η` (photons), computed here by quadrature.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{domain, Result};
use crate::photon_channel::{two_point_capacity, two_point_weight, SignalLevel};
use crate::quadrature::{self, Estimate};

/// Relative tolerance for spectral integrals over a scene.
pub const SPECTRAL_REL_TOL: f64 = 1e-9;

/// Occupation above which the two-level code is no longer optimal.
pub const MAX_TWO_LEVEL_OCCUPATION: f64 = 9.0;

/// Factor standing in for "much greater than one" in validity checks.
pub const MUCH_GREATER: f64 = 100.0;

/// Upper limit of the dimensionless σ and η integrals before the analytic tail.
pub const DIMENSIONLESS_CUTOFF: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Planck constant, J·s.
    pub h: f64,
    /// Boltzmann constant, J/K.
    pub k: f64,
    /// Speed of light, m/s.
    pub c: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            h: 6.626_070_15e-34,
            k: 1.380_649e-23,
            c: 2.997_924_58e8,
        }
    }
}

impl PhysicalConstants {
    pub fn new(h: f64, k: f64, c: f64) -> Result<Self> {
        if [h, k, c].iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(PhysicalConstants { h, k, c })
        } else {
            Err(domain("physical constants must be positive and finite"))
        }
    }
}

/// Spectral signal model: recorded energy per oscillator at unit
/// reflectivity, `r(ν)·P(ν)`, in joules.
pub trait SpectralModel: Send + Sync + fmt::Debug {
    fn recorded_energy(&self, nu: f64, consts: &PhysicalConstants) -> f64;

    /// Frequency width over which the model decays; required to integrate
    /// over an unbounded band.
    fn frequency_scale(&self, _consts: &PhysicalConstants) -> Option<f64> {
        None
    }

    fn describe(&self) -> String;
}

/// Blackbody illumination recorded with `r(ν) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanckSource {
    temperature: f64,
}

impl PlanckSource {
    pub fn new(temperature: f64) -> Result<Self> {
        if temperature.is_finite() && temperature > 0.0 {
            Ok(PlanckSource { temperature })
        } else {
            Err(domain(format!(
                "temperature must be positive, got {temperature}"
            )))
        }
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// Signal constraint `x_m(ν) = e^(−hν/kT)`.
    pub fn max_level(&self, nu: f64, consts: &PhysicalConstants) -> f64 {
        (-consts.h * nu / (consts.k * self.temperature)).exp()
    }

    /// `2τΩS(kT)³/(c²h³)`, the common factor of the blackbody information
    /// and photon totals.
    pub fn scene_prefactor(&self, scene: &RadiometricScene) -> f64 {
        let c = &scene.consts;
        let kt = c.k * self.temperature;
        2.0 * scene.duration * scene.solid_angle * scene.area * (kt / c.h).powi(3) / (c.c * c.c)
    }
}

impl SpectralModel for PlanckSource {
    fn recorded_energy(&self, nu: f64, consts: &PhysicalConstants) -> f64 {
        let kt = consts.k * self.temperature;
        let u = consts.h * nu / kt;
        if u == 0.0 {
            kt
        } else {
            consts.h * nu / u.exp_m1()
        }
    }

    fn frequency_scale(&self, consts: &PhysicalConstants) -> Option<f64> {
        Some(consts.k * self.temperature / consts.h)
    }

    fn describe(&self) -> String {
        format!("planck:{}", self.temperature)
    }
}

/// Constant recorded energy per oscillator across the band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatSpectrum {
    energy: f64,
}

impl FlatSpectrum {
    pub fn new(energy: f64) -> Result<Self> {
        if energy.is_finite() && energy >= 0.0 {
            Ok(FlatSpectrum { energy })
        } else {
            Err(domain(format!(
                "recorded energy must be non-negative, got {energy}"
            )))
        }
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }
}

impl SpectralModel for FlatSpectrum {
    fn recorded_energy(&self, _nu: f64, _consts: &PhysicalConstants) -> f64 {
        self.energy
    }

    fn describe(&self) -> String {
        format!("flat:{}", self.energy)
    }
}

/// Frequency band `[lo, hi]` in Hz; `hi` may be `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    lo: f64,
    hi: f64,
}

impl Band {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && lo >= 0.0) {
            return Err(domain(format!(
                "band start must be finite and ≥ 0, got {lo}"
            )));
        }
        if hi.is_nan() || hi < lo {
            return Err(domain(format!("band end {hi} lies below band start {lo}")));
        }
        Ok(Band { lo, hi })
    }

    pub fn full() -> Self {
        Band {
            lo: 0.0,
            hi: f64::INFINITY,
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_bounded(&self) -> bool {
        self.hi.is_finite()
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Advisory conditions under which the mode-counting or two-level results
/// lose accuracy. None of them stop a computation.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// `ν²ΩSτδν/c²` is not much greater than one at `nu`.
    GeometricOptics { nu: f64, modes: f64 },
    /// The band reaches zero frequency, where the mode count is not large.
    LowFrequencyExtension,
    /// Mean occupation `rP/hν` exceeds the two-level regime at `nu`.
    HighOccupation { nu: f64, mean_occupation: f64 },
    /// `(ν_hi − ν_lo)·τ` is not much greater than one.
    NarrowBand { width_times_tau: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::GeometricOptics { nu, modes } => write!(
                f,
                "geometric optics: only {modes:.3e} modes at ν = {nu:.6e} Hz (needs ≫ 1)"
            ),
            Warning::LowFrequencyExtension => write!(
                f,
                "band extends to ν = 0 where geometric optics fails; low-frequency contribution is suppressed by ν²"
            ),
            Warning::HighOccupation {
                nu,
                mean_occupation,
            } => write!(
                f,
                "mean occupation {mean_occupation:.6e} > {MAX_TWO_LEVEL_OCCUPATION} at ν = {nu:.6e} Hz; two-level capacity formula is not exact there"
            ),
            Warning::NarrowBand { width_times_tau } => write!(
                f,
                "band width × τ = {width_times_tau:.6e} is not ≫ 1"
            ),
        }
    }
}

/// Object, aperture, exposure and spectrum of one observation.
#[derive(Debug, Clone)]
pub struct RadiometricScene {
    area: f64,
    solid_angle: f64,
    duration: f64,
    band: Band,
    model: Arc<dyn SpectralModel>,
    consts: PhysicalConstants,
}

impl RadiometricScene {
    pub fn new(
        area: f64,
        solid_angle: f64,
        duration: f64,
        band: Band,
        model: Arc<dyn SpectralModel>,
    ) -> Result<Self> {
        if !(area.is_finite() && area > 0.0) {
            return Err(domain(format!("area must be positive, got {area}")));
        }
        if !(solid_angle > 0.0 && solid_angle <= 2.0 * PI) {
            return Err(domain(format!(
                "solid angle must lie in (0, 2π], got {solid_angle}"
            )));
        }
        if !(duration.is_finite() && duration > 0.0) {
            return Err(domain(format!("duration must be positive, got {duration}")));
        }
        Ok(RadiometricScene {
            area,
            solid_angle,
            duration,
            band,
            model,
            consts: PhysicalConstants::default(),
        })
    }

    pub fn with_constants(mut self, consts: PhysicalConstants) -> Self {
        self.consts = consts;
        self
    }

    pub fn with_area(&self, area: f64) -> Result<Self> {
        Self::new(
            area,
            self.solid_angle,
            self.duration,
            self.band,
            self.model.clone(),
        )
        .map(|s| s.with_constants(self.consts))
    }

    pub fn with_duration(&self, duration: f64) -> Result<Self> {
        Self::new(
            self.area,
            self.solid_angle,
            duration,
            self.band,
            self.model.clone(),
        )
        .map(|s| s.with_constants(self.consts))
    }

    pub fn with_solid_angle(&self, solid_angle: f64) -> Result<Self> {
        Self::new(
            self.area,
            solid_angle,
            self.duration,
            self.band,
            self.model.clone(),
        )
        .map(|s| s.with_constants(self.consts))
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn solid_angle(&self) -> f64 {
        self.solid_angle
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn band(&self) -> Band {
        self.band
    }

    pub fn model(&self) -> &dyn SpectralModel {
        self.model.as_ref()
    }

    pub fn constants(&self) -> &PhysicalConstants {
        &self.consts
    }

    /// Spatial modes per frequency cell, `G_s(ν) = ν²ΩS/c²`.
    pub fn spatial_modes(&self, nu: f64) -> f64 {
        nu * nu * self.solid_angle * self.area / (self.consts.c * self.consts.c)
    }

    fn mean_occupation_at(&self, nu: f64) -> f64 {
        let rp = self.model.recorded_energy(nu, &self.consts);
        if nu == 0.0 {
            if rp > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        } else {
            rp / (self.consts.h * nu)
        }
    }

    /// Validity checks for the mode count and the two-level regime.
    pub fn warnings(&self) -> Vec<Warning> {
        let mut out = Vec::new();
        let band = self.band;
        if band.width() == 0.0 {
            return out;
        }
        if band.is_bounded() {
            let nu = band.center();
            let modes = 2.0 * self.spatial_modes(nu) * self.duration * band.width();
            if modes < MUCH_GREATER {
                out.push(Warning::GeometricOptics { nu, modes });
            }
        } else if let Some(scale) = self.model.frequency_scale(&self.consts) {
            let nu = band.lo().max(scale);
            let modes = 2.0 * self.spatial_modes(nu) * self.duration * nu;
            if modes < MUCH_GREATER {
                out.push(Warning::GeometricOptics { nu, modes });
            }
        }
        if band.lo() == 0.0 {
            out.push(Warning::LowFrequencyExtension);
        }
        let width_times_tau = band.width() * self.duration;
        if width_times_tau < MUCH_GREATER {
            out.push(Warning::NarrowBand { width_times_tau });
        }

        let span_hi = if band.is_bounded() {
            band.hi()
        } else {
            let scale = self
                .model
                .frequency_scale(&self.consts)
                .unwrap_or(band.lo().max(1.0));
            band.lo() + 50.0 * scale
        };
        const SCAN: usize = 256;
        let worst = (0..=SCAN)
            .map(|i| band.lo() + (span_hi - band.lo()) * i as f64 / SCAN as f64)
            .map(|nu| (nu, self.mean_occupation_at(nu)))
            .fold(
                (0.0, f64::NEG_INFINITY),
                |a, b| if b.1 > a.1 { b } else { a },
            );
        if worst.1 > MAX_TWO_LEVEL_OCCUPATION {
            out.push(Warning::HighOccupation {
                nu: worst.0,
                mean_occupation: worst.1,
            });
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreesOfFreedom {
    /// Frequency at which the counts are evaluated (band center).
    pub nu: f64,
    /// `G_s = ν²ΩS/c²`.
    pub spatial: f64,
    /// `G_f = τ·δν`.
    pub spectral: f64,
    /// `G = 2·G_s·G_f`, both polarizations.
    pub total: f64,
}

pub fn degrees_of_freedom(scene: &RadiometricScene) -> Result<DegreesOfFreedom> {
    let band = scene.band;
    if band.width() == 0.0 {
        return Err(domain("degrees of freedom need a non-empty band"));
    }
    if !band.is_bounded() {
        return Err(domain("degrees of freedom need a bounded band"));
    }
    let nu = band.center();
    let spatial = scene.spatial_modes(nu);
    let spectral = scene.duration * band.width();
    Ok(DegreesOfFreedom {
        nu,
        spatial,
        spectral,
        total: 2.0 * spatial * spectral,
    })
}

/// Smallest resolvable object patch and frequency interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolutionCell {
    /// `ΔS = c²/(ν²Ω)`, m².
    pub area: f64,
    /// `Δν = 1/τ`, Hz.
    pub bandwidth: f64,
}

pub fn resolution_cell(scene: &RadiometricScene, nu: f64) -> Result<ResolutionCell> {
    if !(nu.is_finite() && nu > 0.0) {
        return Err(domain(format!("frequency must be positive, got {nu}")));
    }
    let c = scene.consts.c;
    Ok(ResolutionCell {
        area: c * c / (nu * nu * scene.solid_angle),
        bandwidth: 1.0 / scene.duration,
    })
}

/// Information per field oscillator at frequency `nu` when the recorded
/// energy at unit reflectivity is `recorded_energy` joules.
pub fn per_oscillator_info(
    nu: f64,
    recorded_energy: f64,
    consts: &PhysicalConstants,
) -> Result<f64> {
    if !(nu.is_finite() && nu > 0.0) {
        return Err(domain(format!("frequency must be positive, got {nu}")));
    }
    if !(recorded_energy.is_finite() && recorded_energy >= 0.0) {
        return Err(domain(format!(
            "recorded energy must be non-negative, got {recorded_energy}"
        )));
    }
    Ok(two_point_capacity(max_level(nu, recorded_energy, consts)?))
}

/// `x_m = rP/(rP + hν)`.
pub fn max_level(nu: f64, recorded_energy: f64, consts: &PhysicalConstants) -> Result<SignalLevel> {
    SignalLevel::new(recorded_energy / (recorded_energy + consts.h * nu))
}

/// `Some(warning)` when `rP/hν` exceeds the two-level regime.
pub fn occupation_warning(
    nu: f64,
    recorded_energy: f64,
    consts: &PhysicalConstants,
) -> Option<Warning> {
    let mean_occupation = recorded_energy / (consts.h * nu);
    (mean_occupation > MAX_TWO_LEVEL_OCCUPATION).then_some(Warning::HighOccupation {
        nu,
        mean_occupation,
    })
}

fn spectral_integral(scene: &RadiometricScene, per_mode: impl Fn(f64) -> f64) -> Result<Estimate> {
    let band = scene.band;
    let integrand = |nu: f64| {
        if nu == 0.0 {
            0.0
        } else {
            nu * nu * per_mode(nu)
        }
    };
    let raw = if band.width() == 0.0 {
        Estimate {
            value: 0.0,
            abs_error: 0.0,
        }
    } else if band.is_bounded() {
        quadrature::integrate(integrand, band.lo(), band.hi(), 0.0, SPECTRAL_REL_TOL)?
    } else {
        let scale = scene.model.frequency_scale(&scene.consts).ok_or_else(|| {
            domain(format!(
                "model {} has no frequency scale; an unbounded band diverges",
                scene.model.describe()
            ))
        })?;
        quadrature::integrate_to_infinity(integrand, band.lo(), scale, 0.0, SPECTRAL_REL_TOL)?
    };
    let c = scene.consts.c;
    Ok(raw.scaled(2.0 * scene.duration * scene.solid_angle * scene.area / (c * c)))
}

/// `J_m = (2τΩS/c²)·∫ν²·I_m(ν) dν` over the scene's band, in nats.
pub fn total_info_jm(scene: &RadiometricScene) -> Result<Estimate> {
    let consts = scene.consts;
    spectral_integral(scene, |nu| {
        let rp = scene.model.recorded_energy(nu, &consts);
        max_level(nu, rp, &consts).map_or(0.0, two_point_capacity)
    })
}

/// Expected recorded photons when every oscillator uses the optimal
/// two-level code: `(2τΩS/c²)·∫ν²·w(ν)·n̄_m(ν) dν`.
pub fn expected_photons(scene: &RadiometricScene) -> Result<Estimate> {
    let consts = scene.consts;
    spectral_integral(scene, |nu| {
        let rp = scene.model.recorded_energy(nu, &consts);
        match max_level(nu, rp, &consts) {
            Ok(x) if x.value() > 0.0 => two_point_weight(x).unwrap_or(0.0) * rp / (consts.h * nu),
            _ => 0.0,
        }
    })
}

/// `x²·ln[1 + e^(−x)·(1 − e^(−x))^(eˣ − 1)]`.
pub fn sigma_integrand(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let em = (-x).exp();
    let power = (x.exp_m1() * (-em).ln_1p()).exp();
    x * x * (em * power).ln_1p()
}

/// `x²·(1 − e^(−x))^(eˣ − 1) / [(eˣ − 1) + (1 − e^(−x))^(eˣ)]`.
pub fn eta_integrand(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let l = (-(-x).exp()).ln_1p();
    let a = (x.exp_m1() * l).exp();
    let b = (x.exp() * l).exp();
    x * x * a / (x.exp_m1() + b)
}

// Both integrands behave like x²·e^(−x)/e beyond the cutoff.
fn dimensionless_tail() -> Estimate {
    let x = DIMENSIONLESS_CUTOFF;
    let tail = (-x).exp() * (x * x + 2.0 * x + 2.0);
    Estimate {
        value: tail / std::f64::consts::E,
        abs_error: tail,
    }
}

pub fn compute_sigma(rel_tol: f64) -> Result<Estimate> {
    let body = quadrature::integrate(sigma_integrand, 0.0, DIMENSIONLESS_CUTOFF, 1e-15, rel_tol)?;
    Ok(body + dimensionless_tail())
}

pub fn compute_eta(rel_tol: f64) -> Result<Estimate> {
    let body = quadrature::integrate(eta_integrand, 0.0, DIMENSIONLESS_CUTOFF, 1e-15, rel_tol)?;
    Ok(body + dimensionless_tail())
}

const CONSTANT_REL_TOL: f64 = 1e-12;

/// `σ = ∫₀^∞ x²·ln[1 + e^(−x)(1 − e^(−x))^(eˣ − 1)] dx ≈ 0.7707`.
pub fn sigma_constant() -> Estimate {
    static SIGMA: OnceLock<Estimate> = OnceLock::new();
    *SIGMA
        .get_or_init(|| compute_sigma(CONSTANT_REL_TOL).expect("σ integrand is smooth and bounded"))
}

/// `η`, recorded photons per unit blackbody prefactor `≈ 0.9093`.
pub fn eta_constant() -> Estimate {
    static ETA: OnceLock<Estimate> = OnceLock::new();
    *ETA.get_or_init(|| compute_eta(CONSTANT_REL_TOL).expect("η integrand is smooth and bounded"))
}

/// Information per recorded photon under blackbody illumination, `σ/η`.
pub fn nats_per_photon() -> f64 {
    sigma_constant().value / eta_constant().value
}

pub fn bits_per_photon() -> f64 {
    nats_per_photon() * std::f64::consts::LOG2_E
}

/// Total blackbody information over the full spectrum, `prefactor·σ`.
pub fn planck_information(scene: &RadiometricScene, source: &PlanckSource) -> f64 {
    source.scene_prefactor(scene) * sigma_constant().value
}

/// Total recorded photons over the full spectrum, `prefactor·η`.
pub fn photon_count_total(scene: &RadiometricScene, source: &PlanckSource) -> f64 {
    source.scene_prefactor(scene) * eta_constant().value
}

/// Information per second per m² at `Ω = 2π`: `4π(kT)³σ/(c²h³)`.
pub fn max_rate_rm(source: &PlanckSource, consts: &PhysicalConstants) -> f64 {
    let kt = consts.k * source.temperature;
    4.0 * PI * (kt / consts.h).powi(3) * sigma_constant().value / (consts.c * consts.c)
}

/// Maximum-signal energy flux per m² at `Ω = 2π`: `4π⁵(kT)⁴/(15c²h³)`.
pub fn flux_p(source: &PlanckSource, consts: &PhysicalConstants) -> f64 {
    let kt = consts.k * source.temperature;
    4.0 * PI.powi(5) * kt * (kt / consts.h).powi(3) / (15.0 * consts.c * consts.c)
}

/// The rate written in terms of the flux: `σ√2/(π²√c)·(15P/(πh))^(3/4)`.
pub fn max_rate_from_flux(flux: f64, consts: &PhysicalConstants) -> f64 {
    sigma_constant().value * 2f64.sqrt() / (PI * PI * consts.c.sqrt())
        * (15.0 * flux / (PI * consts.h)).powf(0.75)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scene(model: Arc<dyn SpectralModel>, band: Band) -> RadiometricScene {
        RadiometricScene::new(1e-4, 0.1, 1e-3, band, model).unwrap()
    }

    #[test]
    fn scene_validation() {
        let m: Arc<dyn SpectralModel> = Arc::new(FlatSpectrum::new(1e-19).unwrap());
        let b = Band::new(1e14, 2e14).unwrap();
        assert!(RadiometricScene::new(0.0, 0.1, 1.0, b, m.clone()).is_err());
        assert!(RadiometricScene::new(1.0, 7.0, 1.0, b, m.clone()).is_err());
        assert!(RadiometricScene::new(1.0, 0.1, -1.0, b, m.clone()).is_err());
        assert!(RadiometricScene::new(1.0, 2.0 * PI, 1.0, b, m).is_ok());
        assert!(Band::new(2.0, 1.0).is_err());
        assert!(Band::new(-1.0, 1.0).is_err());
        assert!(FlatSpectrum::new(-1.0).is_err());
        assert!(PlanckSource::new(0.0).is_err());
    }

    #[test]
    fn dof_example() {
        let m: Arc<dyn SpectralModel> = Arc::new(FlatSpectrum::new(0.0).unwrap());
        let s = scene(m, Band::new(5e14 - 5e11, 5e14 + 5e11).unwrap());
        let g = degrees_of_freedom(&s).unwrap();
        // 2·(5e14)²·0.1·1e-4·1e-3·1e12 / c²
        let expected = 5e33 / (2.997_924_58e8f64 * 2.997_924_58e8);
        assert!((g.total / expected - 1.0).abs() < 1e-12);
        assert!((g.total - 5.563e16).abs() / 5.563e16 < 1e-3);
        let cell = resolution_cell(&s, 5e14).unwrap();
        assert!((cell.area * s.spatial_modes(5e14) / s.area() - 1.0).abs() < 1e-14);
        assert!((cell.area - 3.595e-12).abs() / 3.595e-12 < 1e-3);
        assert_eq!(cell.bandwidth, 1e3);
    }

    #[test]
    fn dof_rejects_empty_or_unbounded_band() {
        let m: Arc<dyn SpectralModel> = Arc::new(PlanckSource::new(300.0).unwrap());
        assert!(degrees_of_freedom(&scene(m.clone(), Band::new(1e14, 1e14).unwrap())).is_err());
        assert!(degrees_of_freedom(&scene(m, Band::full())).is_err());
    }

    #[test]
    fn per_oscillator_examples() {
        let c = PhysicalConstants::default();
        let nu = 5e14;
        let hnu = c.h * nu;
        assert_eq!(per_oscillator_info(nu, 0.0, &c).unwrap(), 0.0);
        assert!((per_oscillator_info(nu, hnu, &c).unwrap() - 1.25f64.ln()).abs() < 1e-12);
        let at_nine = two_point_capacity(SignalLevel::new(0.9).unwrap());
        assert!((per_oscillator_info(nu, 9.0 * hnu, &c).unwrap() - at_nine).abs() < 1e-12);
        assert!(per_oscillator_info(nu, -1.0, &c).is_err());
        assert!(per_oscillator_info(0.0, hnu, &c).is_err());
        assert!(occupation_warning(nu, 9.5 * hnu, &c).is_some());
        assert!(occupation_warning(nu, 8.5 * hnu, &c).is_none());
    }

    #[test]
    fn integrand_spot_values() {
        assert_eq!(sigma_integrand(0.0), 0.0);
        let x = 1e-6;
        assert!((sigma_integrand(x) / (x * x) - 2f64.ln()).abs() < 1e-4);
        assert!((sigma_integrand(1.0) - 0.155).abs() < 5e-4);
        assert!((eta_integrand(1e-6) / 1e-6 - 0.5).abs() < 1e-4);
        for i in 0..500 {
            assert!(eta_integrand(i as f64 * 0.1) >= 0.0);
        }
    }

    #[test]
    fn zero_width_band_has_no_information() {
        let m: Arc<dyn SpectralModel> = Arc::new(PlanckSource::new(6000.0).unwrap());
        let s = scene(m, Band::new(3e14, 3e14).unwrap());
        assert_eq!(total_info_jm(&s).unwrap().value, 0.0);
    }

    #[test]
    fn flat_model_on_unbounded_band_is_rejected() {
        let m: Arc<dyn SpectralModel> = Arc::new(FlatSpectrum::new(1e-19).unwrap());
        assert!(total_info_jm(&scene(m, Band::new(1e14, f64::INFINITY).unwrap())).is_err());
    }

    #[test]
    fn warnings_flag_high_occupation_and_small_scenes() {
        let c = PhysicalConstants::default();
        let m: Arc<dyn SpectralModel> = Arc::new(FlatSpectrum::new(20.0 * c.h * 1e14).unwrap());
        let w = scene(m, Band::new(1e14, 2e14).unwrap()).warnings();
        assert!(w
            .iter()
            .any(|w| matches!(w, Warning::HighOccupation { .. })));

        let m: Arc<dyn SpectralModel> = Arc::new(FlatSpectrum::new(1e-22).unwrap());
        let tiny =
            RadiometricScene::new(1e-20, 1e-3, 1e-3, Band::new(1e12, 1e12 + 1e4).unwrap(), m)
                .unwrap();
        let w = tiny.warnings();
        assert!(w
            .iter()
            .any(|w| matches!(w, Warning::GeometricOptics { .. })));
        assert!(w.iter().any(|w| matches!(w, Warning::NarrowBand { .. })));
        assert!(!w
            .iter()
            .any(|w| matches!(w, Warning::HighOccupation { .. })));
    }
}
