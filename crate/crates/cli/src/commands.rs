use std::f64::consts::{LN_2, PI};
use std::sync::Arc;

use serde_json::Value;
use thermolux_core::capacity_solver::DEFAULT_PROBE_POINTS;
use thermolux_core::radiometry::{
    compute_eta, compute_sigma, expected_photons, max_rate_from_flux, resolution_cell,
    MAX_TWO_LEVEL_OCCUPATION, SPECTRAL_REL_TOL,
};
use thermolux_core::{
    degrees_of_freedom, eta_constant, find_two_point_threshold, flux_p, max_rate_rm,
    optimal_two_point_distribution, run_simulation, sigma_constant, solve_capacity, total_info_jm,
    two_point_capacity, two_point_weight, verify_two_point_kkt, Band, Estimate, FlatSpectrum,
    PhysicalConstants, PlanckSource, RadiometricScene, SignalLevel, SimulationConfig, SolverConfig,
    SpectralModel, KKT_TOLERANCE,
};

use crate::envelope::{number, numbers, Envelope};
use crate::{
    CapacityArgs, CliError, ConstantsArgs, SourceModel, RadiometryArgs, SimulateArgs, ThresholdArgs,
};

const CLOSED_FORM: &str = "C(x_m) = ln[1 + x_m (1 - x_m)^((1 - x_m)/x_m)]";
const OPTIMAL_WEIGHT: &str = "w(x_m) = 1 / ((1 - x_m)^((x_m - 1)/x_m) + x_m)";
const COUNT_LAW: &str = "p(n|x) = (1 - x) x^n";
const KKT: &str = "D(x) = sum_n p(n|x) ln[p(n|x)/q(n)] <= C for all x in [0, x_m]";
const SIGMA: &str = "sigma = int_0^inf x^2 ln[1 + e^-x (1 - e^-x)^(e^x - 1)] dx";
const ETA: &str = "eta = int_0^inf x^2 (1 - e^-x)^(e^x - 1) / [(e^x - 1) + (1 - e^-x)^(e^x)] dx";
const MODES: &str = "G = (2/c^2) nu^2 Omega S tau dnu";
const TOTAL_INFO: &str = "J_m = (2 tau Omega S / c^2) int nu^2 I_m(nu) dnu";
const RATE: &str = "R_m = 4 pi (kT)^3 sigma / (c^2 h^3)";
const RATE_FROM_FLUX: &str = "R_m = sigma sqrt(2) / (pi^2 sqrt(c)) (15 P / (pi h))^(3/4)";
const FLUX: &str = "P = 4 pi^5 (kT)^4 / (15 c^2 h^3)";

fn level(x: f64) -> Result<SignalLevel, CliError> {
    if x > 0.0 && x < 1.0 {
        Ok(SignalLevel::new(x)?)
    } else {
        Err(CliError::Domain(format!("x_m must lie in (0, 1), got {x}")))
    }
}

pub fn capacity(a: &CapacityArgs) -> Result<Envelope, CliError> {
    let xm = level(a.xm)?;
    let cfg = SolverConfig {
        grid_points: a.grid,
        tol: a.tol,
        ..SolverConfig::default()
    };
    let solved = solve_capacity(xm, &cfg)?;
    let closed = two_point_capacity(xm);
    let kkt = verify_two_point_kkt(xm, a.grid.max(DEFAULT_PROBE_POINTS))?;

    let mut env = Envelope::new("capacity");
    env.input("xm", number(a.xm))
        .input("grid", a.grid)
        .input("tol", number(a.tol));
    env.real("closed_form_nats", closed, "nats")
        .real("closed_form_bits", closed / LN_2, "bits")
        .real("optimal_weight", two_point_weight(xm)?, "1")
        .real("mean_occupation", xm.mean_occupation(), "photons")
        .real("solver_capacity_nats", solved.capacity_nats, "nats")
        .real("solver_upper_bound_nats", solved.upper_bound_nats, "nats")
        .real(
            "solver_minus_closed_form_nats",
            solved.capacity_nats - closed,
            "nats",
        )
        .real("kkt_max_violation_nats", solved.kkt_max_violation, "nats")
        .real("two_point_kkt_max_excess_nats", kkt.max_excess_nats, "nats")
        .real("two_point_kkt_argmax_level", kkt.argmax_level, "1")
        .result("two_point_optimal", kkt.is_optimal, "bool")
        .result("converged", solved.converged, "bool")
        .result("iterations", solved.iterations, "count");
    let atoms = solved.distribution.atoms();
    env.result(
        "support_levels",
        numbers(atoms.iter().map(|a| a.level.value())),
        "1",
    )
    .result(
        "support_weights",
        numbers(atoms.iter().map(|a| a.weight)),
        "1",
    );

    if !kkt.is_optimal {
        env.warnings.push(format!(
            "two-level code is not optimal at x_m = {}: D exceeds C by {:.3e} nats at x = {}",
            a.xm, kkt.max_excess_nats, kkt.argmax_level
        ));
    }
    if xm.mean_occupation() > MAX_TWO_LEVEL_OCCUPATION {
        env.warnings.push(format!(
            "mean occupation {} exceeds 9 photons; the closed form is outside its validity range",
            xm.mean_occupation()
        ));
    }
    if !solved.converged {
        env.warnings.push(format!(
            "solver stopped after {} iterations with gap {:.3e} nats",
            solved.iterations,
            solved.upper_bound_nats - solved.capacity_nats
        ));
    }
    env.provenance.equations = vec![
        COUNT_LAW.into(),
        CLOSED_FORM.into(),
        OPTIMAL_WEIGHT.into(),
        KKT.into(),
    ];
    env.provenance
        .tolerances
        .insert("solver_gap_nats".into(), a.tol);
    env.provenance
        .tolerances
        .insert("kkt_nats".into(), KKT_TOLERANCE);
    env.provenance
        .tolerances
        .insert("tail_mass".into(), cfg.tail_epsilon);
    Ok(env)
}

fn constant_results(env: &mut Envelope, sigma: Estimate, eta: Estimate) {
    let ratio = sigma.value / eta.value;
    let ratio_err = ratio * (sigma.abs_error / sigma.value + eta.abs_error / eta.value);
    env.real("sigma", sigma.value, "1")
        .real("sigma_abs_error", sigma.abs_error, "1")
        .real("eta", eta.value, "1")
        .real("eta_abs_error", eta.abs_error, "1")
        .real("nats_per_photon", ratio, "nats/photon")
        .real("nats_per_photon_abs_error", ratio_err, "nats/photon")
        .real("bits_per_photon", ratio / LN_2, "bits/photon")
        .real("bits_per_photon_abs_error", ratio_err / LN_2, "bits/photon");
}

pub fn constants(a: &ConstantsArgs) -> Result<Envelope, CliError> {
    const REL_TOL: f64 = 1e-12;
    let (sigma, eta) = if a.recompute {
        (compute_sigma(REL_TOL)?, compute_eta(REL_TOL)?)
    } else {
        (sigma_constant(), eta_constant())
    };
    let mut env = Envelope::new("constants");
    env.input("recompute", a.recompute);
    constant_results(&mut env, sigma, eta);
    env.provenance.equations = vec![SIGMA.into(), ETA.into()];
    env.provenance
        .tolerances
        .insert("quadrature_rel".into(), REL_TOL);
    env.provenance.notes.insert(
        "printed_form_differs".into(),
        "sigma is integrated with 1 + e^-x (...) inside the logarithm and eta with an (e^x - 1) \
         denominator; the printed 1 - e^-x (...) and e^(x-1) forms give -0.8225 and 1.9570"
            .into(),
    );
    Ok(env)
}

pub fn radiometry(a: &RadiometryArgs) -> Result<Envelope, CliError> {
    let consts = PhysicalConstants::default();
    let band = Band::new(a.nu_lo, a.nu_hi)?;
    let (model, planck): (Arc<dyn SpectralModel>, _) = match a.model {
        SourceModel::Planck { temperature } => {
            let src = PlanckSource::new(temperature)?;
            (Arc::new(src), Some(src))
        }
        SourceModel::Flat { energy } => (Arc::new(FlatSpectrum::new(energy)?), None),
    };
    let scene = RadiometricScene::new(a.area, a.solid_angle, a.tau, band, model)?;

    let mut env = Envelope::new("radiometry");
    env.input("area", number(a.area))
        .input("solid_angle", number(a.solid_angle))
        .input("tau", number(a.tau))
        .input("nu_lo", number(a.nu_lo))
        .input("nu_hi", number(a.nu_hi))
        .input("model", a.model.to_string());

    let jm = total_info_jm(&scene)?;
    let photons = expected_photons(&scene)?;
    env.real("jm_nats", jm.value, "nats")
        .real("jm_bits", jm.value / LN_2, "bits")
        .real("jm_abs_error", jm.abs_error, "nats")
        .real("photons", photons.value, "photons")
        .real("photons_abs_error", photons.abs_error, "photons");
    if photons.value > 0.0 {
        env.real("nats_per_photon", jm.value / photons.value, "nats/photon")
            .real(
                "bits_per_photon",
                jm.value / photons.value / LN_2,
                "bits/photon",
            );
    }

    if band.is_bounded() && band.width() > 0.0 {
        let dof = degrees_of_freedom(&scene)?;
        let cell = resolution_cell(&scene, dof.nu)?;
        env.real("degrees_of_freedom", dof.total, "modes")
            .real("spatial_modes", dof.spatial, "modes")
            .real("spectral_modes", dof.spectral, "modes")
            .real("band_center", dof.nu, "Hz")
            .real("resolution_area", cell.area, "m^2")
            .real("resolution_bandwidth", cell.bandwidth, "Hz");
    } else {
        env.provenance.notes.insert(
            "degrees_of_freedom".into(),
            "omitted: the mode count needs a bounded band of positive width".into(),
        );
    }

    let full_band = a.nu_lo == 0.0 && a.nu_hi == f64::INFINITY;
    if let (Some(src), true) = (
        planck,
        (a.solid_angle - 2.0 * PI).abs() <= 1e-12 && full_band,
    ) {
        let flux = flux_p(&src, &consts);
        env.real("max_rate", max_rate_rm(&src, &consts), "nats/(s m^2)")
            .real(
                "max_rate_from_flux",
                max_rate_from_flux(flux, &consts),
                "nats/(s m^2)",
            )
            .real("flux", flux, "W/m^2");
        env.provenance
            .equations
            .extend([RATE.into(), RATE_FROM_FLUX.into(), FLUX.into()]);
    }

    env.warnings = scene.warnings().iter().map(ToString::to_string).collect();
    env.provenance
        .equations
        .splice(0..0, [MODES.into(), TOTAL_INFO.into(), CLOSED_FORM.into()]);
    env.provenance
        .tolerances
        .insert("spectral_rel".into(), SPECTRAL_REL_TOL);
    Ok(env)
}

pub fn threshold(a: &ThresholdArgs) -> Result<Envelope, CliError> {
    let t = find_two_point_threshold(a.lo, a.hi, a.resolution).map_err(|e| match e {
        thermolux_core::Error::Bracket(m) => CliError::Domain(format!("invalid bracket: {m}")),
        other => other.into(),
    })?;
    let mut env = Envelope::new("threshold");
    env.input("lo", number(a.lo))
        .input("hi", number(a.hi))
        .input("resolution", number(a.resolution));
    env.real("threshold_level", t.level.value(), "1")
        .real("interval_lo", t.lo, "1")
        .real("interval_hi", t.hi, "1")
        .real("threshold_mean_occupation", t.mean_occupation(), "photons");
    env.provenance.equations = vec![CLOSED_FORM.into(), KKT.into()];
    env.provenance
        .tolerances
        .insert("kkt_nats".into(), KKT_TOLERANCE);
    env.provenance
        .tolerances
        .insert("resolution".into(), a.resolution);
    Ok(env)
}

pub fn simulate(a: &SimulateArgs) -> Result<Envelope, CliError> {
    let xm = level(a.xm)?;
    let f = optimal_two_point_distribution(xm)?;
    let w = two_point_weight(xm)?;
    let report = run_simulation(&SimulationConfig::new(f, xm, a.samples, a.seed)?)?;
    let capacity = two_point_capacity(xm);

    let mut env = Envelope::new("simulate");
    env.input("xm", number(a.xm))
        .input("samples", a.samples)
        .input("seed", a.seed);
    env.real("empirical_mi_nats", report.empirical_mi_nats, "nats")
        .real("mi_standard_error", report.mi_standard_error, "nats")
        .real("analytic_capacity_nats", capacity, "nats")
        .real(
            "mi_deviation_in_standard_errors",
            (report.empirical_mi_nats - capacity) / report.mi_standard_error,
            "1",
        )
        .real("photon_mean", report.photon_mean, "photons")
        .real(
            "photon_mean_standard_error",
            report.photon_mean_standard_error,
            "photons",
        )
        .real("analytic_photon_mean", w * xm.mean_occupation(), "photons")
        .result("seed", report.seed, "1")
        .result("samples", report.samples, "count")
        .result("count_cap", report.count_cap, "photons");
    if let Some(rate) = report.map_error_rate {
        env.real("map_error_rate", rate, "1");
    }
    let histogram: Vec<Value> = report
        .count_histogram
        .iter()
        .map(|(&(atom, n), &c)| Value::Array(vec![atom.into(), n.into(), c.into()]))
        .collect();
    env.result("count_histogram", Value::Array(histogram), "count");
    env.provenance.equations = vec![COUNT_LAW.into(), CLOSED_FORM.into(), OPTIMAL_WEIGHT.into()];
    env.provenance.notes.insert(
        "rng".into(),
        "ChaCha8, block b of 65536 samples uses stream b of the seed".into(),
    );
    env.provenance.notes.insert(
        "estimator".into(),
        "plug-in mutual information with Miller-Madow correction; jackknife standard error".into(),
    );
    Ok(env)
}
