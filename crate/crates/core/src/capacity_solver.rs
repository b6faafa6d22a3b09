//! Peak-constrained capacity of the geometric channel on a level grid.
//!
//! The solver runs Blahut–Arimoto (alternating maximization: reweight every
//! grid atom by `exp(D(x))` and renormalize) for a warm-up phase, then switches
//! to an active-set Newton method on the local maxima of the information
//! density `D`, adding grid points whose density exceeds the current value.
//! Every iterate is a distribution on the grid, so
//! `I(f) ≤ C_grid ≤ max_x D(x)` brackets the grid capacity throughout.

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::photon_channel::{
    self, optimal_two_point_distribution, two_point_capacity, Atom, GeometricChannel,
    InputDistribution, SignalLevel, DEFAULT_TAIL_EPSILON,
};

/// Largest density excess over capacity still counted as KKT-optimal.
pub const KKT_TOLERANCE: f64 = 1e-7;

/// Probe grid used by [`find_two_point_threshold`].
pub const DEFAULT_PROBE_POINTS: usize = 2001;

const MAX_CANDIDATES: usize = 16;
const MAX_POLISH_ROUNDS: usize = 64;
const MAX_NEWTON_STEPS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Equispaced levels on `[0, x_m]`, both endpoints included.
    pub grid_points: usize,
    /// Stop once `max D − I(f)` falls to this many nats.
    pub tol: f64,
    pub max_iters: usize,
    /// Atoms lighter than this are dropped from the reported support.
    pub support_weight_floor: f64,
    pub tail_epsilon: f64,
    /// Number of Blahut–Arimoto steps before the Newton polish; `None` runs
    /// Blahut–Arimoto alone.
    pub polish_after: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grid_points: 2001,
            tol: 1e-9,
            max_iters: 20_000,
            support_weight_floor: 1e-6,
            tail_epsilon: DEFAULT_TAIL_EPSILON,
            polish_after: Some(200),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 3 {
            return Err(domain("grid_points must be at least 3"));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(domain("tol must be positive"));
        }
        if self.max_iters < 1 {
            return Err(domain("max_iters must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.support_weight_floor) {
            return Err(domain("support_weight_floor must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Lower and upper bound on the grid capacity at one iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    /// `I(f)` of the best iterate.
    pub capacity_nats: f64,
    /// Smallest `max_x D(x)` seen; a valid upper bound on the grid capacity.
    pub upper_bound_nats: f64,
    /// Best iterate with atoms below the weight floor pruned.
    pub distribution: InputDistribution,
    pub iterations: usize,
    /// `max_x D(x) − I(f)` at the best iterate.
    pub kkt_max_violation: f64,
    pub converged: bool,
    /// Bracket of every accepted iterate, in order.
    pub history: Vec<Bracket>,
}

/// Transition matrix of the channel restricted to an equispaced level grid.
struct GridChannel {
    levels: Vec<f64>,
    n_out: usize,
    pmf: Vec<f64>,
    neg_entropy: Vec<f64>,
}

impl GridChannel {
    fn new(x_m: SignalLevel, grid_points: usize, tail_epsilon: f64) -> Result<Self> {
        let ch = GeometricChannel::new(x_m, tail_epsilon)?;
        let n_out = ch.max_count() + 1;
        let last = (grid_points - 1) as f64;
        let levels: Vec<f64> = (0..grid_points)
            .map(|i| {
                if i + 1 == grid_points {
                    x_m.value()
                } else {
                    x_m.value() * i as f64 / last
                }
            })
            .collect();
        let mut pmf = Vec::with_capacity(grid_points * n_out);
        let mut neg_entropy = Vec::with_capacity(grid_points);
        for &x in &levels {
            let row = ch.pmf_row(SignalLevel::new(x)?);
            let ln_x = x.ln();
            let ln_1mx = (-x).ln_1p();
            let h: f64 = row
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(n, &p)| p * (ln_1mx + if n == 0 { 0.0 } else { n as f64 * ln_x }))
                .sum();
            neg_entropy.push(h);
            pmf.extend(row);
        }
        Ok(GridChannel {
            levels,
            n_out,
            pmf,
            neg_entropy,
        })
    }

    fn len(&self) -> usize {
        self.levels.len()
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.pmf[i * self.n_out..(i + 1) * self.n_out]
    }

    /// `ln q(n)` for a sparse law given as `(index, weight)` pairs.
    fn ln_marginal(&self, atoms: impl Iterator<Item = (usize, f64)>) -> Vec<f64> {
        let mut q = vec![0.0; self.n_out];
        for (i, w) in atoms.filter(|&(_, w)| w > 0.0) {
            for (qn, p) in q.iter_mut().zip(self.row(i)) {
                *qn += w * p;
            }
        }
        q.into_iter().map(f64::ln).collect()
    }

    fn density(&self, i: usize, ln_q: &[f64]) -> f64 {
        let cross: f64 = self
            .row(i)
            .iter()
            .zip(ln_q)
            .filter(|(&p, _)| p > 0.0)
            .map(|(&p, &lq)| p * lq)
            .sum();
        self.neg_entropy[i] - cross
    }

    fn densities(&self, ln_q: &[f64]) -> Vec<f64> {
        (0..self.len())
            .into_par_iter()
            .map(|i| self.density(i, ln_q))
            .collect()
    }

    /// Densities on the full grid plus `(I(f), max D)` for a dense law.
    fn evaluate(&self, f: &[f64]) -> (Vec<f64>, Bracket) {
        let ln_q = self.ln_marginal(f.iter().copied().enumerate());
        let d = self.densities(&ln_q);
        let lower = f
            .iter()
            .zip(&d)
            .filter(|(&w, _)| w > 0.0)
            .map(|(&w, &di)| w * di)
            .sum();
        let upper = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (d, Bracket { lower, upper })
    }

    /// `I(w)` and the per-atom densities for a law supported on `support`.
    fn restricted(&self, support: &[usize], w: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let ln_q = self.ln_marginal(support.iter().copied().zip(w.iter().copied()));
        let d: Vec<f64> = support.iter().map(|&i| self.density(i, &ln_q)).collect();
        let value = w.iter().zip(&d).map(|(wi, di)| wi * di).sum();
        (value, d, ln_q)
    }
}

fn local_maxima(d: &[f64]) -> Vec<usize> {
    let last = d.len() - 1;
    let mut peaks: Vec<usize> = (0..d.len())
        .filter(|&i| (i == 0 || d[i] >= d[i - 1]) && (i == last || d[i] >= d[i + 1]))
        .collect();
    peaks.sort_by(|&a, &b| d[b].total_cmp(&d[a]));
    peaks.truncate(MAX_CANDIDATES);
    peaks.sort_unstable();
    peaks
}

/// Solves `A·x = b` for a small symmetric positive definite `A` (row-major).
fn cholesky_solve(a: &[f64], k: usize, rhs: &[&[f64]]) -> Option<Vec<Vec<f64>>> {
    let mut l = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let s: f64 = (0..j).map(|m| l[i * k + m] * l[j * k + m]).sum();
            if i == j {
                let v = a[i * k + i] - s;
                if v.is_nan() || v <= 0.0 {
                    return None;
                }
                l[i * k + i] = v.sqrt();
            } else {
                l[i * k + j] = (a[i * k + j] - s) / l[j * k + j];
            }
        }
    }
    let solve = |b: &[f64]| {
        let mut y = vec![0.0; k];
        for i in 0..k {
            let s: f64 = (0..i).map(|m| l[i * k + m] * y[m]).sum();
            y[i] = (b[i] - s) / l[i * k + i];
        }
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|m| l[m * k + i] * y[m]).sum();
            y[i] = (y[i] - s) / l[i * k + i];
        }
        y
    };
    Some(rhs.iter().map(|b| solve(b)).collect())
}

/// Equality-constrained Newton ascent of `I(w)` over the simplex on
/// `support`, dropping atoms whose weight is driven to zero.
fn spread_of(d: &[f64]) -> f64 {
    d.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - d.iter().copied().fold(f64::INFINITY, f64::min)
}

fn newton_restricted(
    grid: &GridChannel,
    support: &mut Vec<usize>,
    w: &mut Vec<f64>,
    iterations: &mut usize,
    max_iters: usize,
) {
    for _ in 0..MAX_NEWTON_STEPS {
        if *iterations >= max_iters || support.is_empty() {
            return;
        }
        let k = support.len();
        let (value, d, ln_q) = grid.restricted(support, w);
        let spread = spread_of(&d);
        if spread <= 1e-15 * value.abs().max(1.0) {
            return;
        }

        // A = −Hessian, A_jl = Σ_n p_j(n)·p_l(n)/q(n)
        let inv_q: Vec<f64> = ln_q.iter().map(|lq| (-lq).exp()).collect();
        let mut a = vec![0.0; k * k];
        for j in 0..k {
            let pj = grid.row(support[j]);
            for l in 0..=j {
                let pl = grid.row(support[l]);
                let s: f64 = pj
                    .iter()
                    .zip(pl)
                    .zip(&inv_q)
                    .filter(|((&x, &y), _)| x > 0.0 && y > 0.0)
                    .map(|((&x, &y), &iq)| x * y * iq)
                    .sum();
                a[j * k + l] = s;
                a[l * k + j] = s;
            }
        }
        let max_diag = (0..k).map(|j| a[j * k + j]).fold(0.0, f64::max);
        let ones = vec![1.0; k];
        let mut ridge = 1e-14 * max_diag;
        let solved = loop {
            let mut reg = a.clone();
            for j in 0..k {
                reg[j * k + j] += ridge;
            }
            if let Some(s) = cholesky_solve(&reg, k, &[&d, &ones]) {
                break s;
            }
            ridge = if ridge == 0.0 { 1e-300 } else { ridge * 100.0 };
        };
        let (y, z) = (&solved[0], &solved[1]);
        let lambda = y.iter().sum::<f64>() / z.iter().sum::<f64>();
        let dir: Vec<f64> = y.iter().zip(z).map(|(yi, zi)| yi - lambda * zi).collect();

        let mut alpha_max = f64::INFINITY;
        let mut blocking = None;
        for j in 0..k {
            if dir[j] < 0.0 {
                let r = -w[j] / dir[j];
                if r < alpha_max {
                    alpha_max = r;
                    blocking = Some(j);
                }
            }
        }
        let mut alpha = alpha_max.min(1.0);
        let hits_bound = alpha_max <= 1.0;
        let trial = |alpha: f64| -> Vec<f64> {
            w.iter()
                .zip(&dir)
                .map(|(wi, di)| (wi + alpha * di).max(0.0))
                .collect()
        };
        let mut accepted = None;
        while alpha > 1e-14 {
            let mut cand = trial(alpha);
            if hits_bound && alpha == alpha_max {
                cand[blocking.expect("bound implies a blocking atom")] = 0.0;
            }
            let total: f64 = cand.iter().sum();
            cand.iter_mut().for_each(|c| *c /= total);
            let (cv, cd, _) = grid.restricted(support, &cand);
            // Near the optimum I is flat to rounding; accept steps that
            // equalise the densities without a measurable loss.
            let flat =
                cv >= value - 16.0 * f64::EPSILON * value.abs().max(1.0) && spread_of(&cd) < spread;
            if cv >= value || flat {
                accepted = Some(cand);
                break;
            }
            alpha *= 0.5;
        }
        *iterations += 1;
        let Some(cand) = accepted else {
            return;
        };
        let keep: Vec<usize> = (0..k).filter(|&j| cand[j] > 0.0).collect();
        *support = keep.iter().map(|&j| support[j]).collect();
        *w = keep.iter().map(|&j| cand[j]).collect();
    }
}

struct Best {
    f: Vec<f64>,
    bracket: Bracket,
}

/// Capacity of the geometric channel with inputs restricted to `[0, x_m]`.
///
/// Non-convergence within `max_iters` is not an error: the result carries
/// `converged = false` and a valid bracket.
pub fn solve_capacity(x_m: SignalLevel, cfg: &SolverConfig) -> Result<CapacityResult> {
    cfg.validate()?;
    if x_m.value() <= 0.0 {
        return Err(domain("capacity solver needs x_m > 0"));
    }
    let grid = GridChannel::new(x_m, cfg.grid_points, cfg.tail_epsilon)?;
    let g = grid.len();

    let mut f = vec![1.0 / g as f64; g];
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut upper_min = f64::INFINITY;

    let (mut d, mut bracket) = grid.evaluate(&f);
    loop {
        history.push(bracket);
        upper_min = upper_min.min(bracket.upper);
        if bracket.upper - bracket.lower <= cfg.tol || iterations >= cfg.max_iters {
            break;
        }
        if cfg.polish_after.is_some_and(|k| iterations >= k) {
            break;
        }
        let shift = bracket.upper;
        for (fi, di) in f.iter_mut().zip(&d) {
            *fi *= (di - shift).exp();
        }
        let total: f64 = f.iter().sum();
        f.iter_mut().for_each(|fi| *fi /= total);
        iterations += 1;
        (d, bracket) = grid.evaluate(&f);
    }
    let mut best = Best { f, bracket };

    if cfg.polish_after.is_some()
        && best.bracket.upper - best.bracket.lower > cfg.tol
        && iterations < cfg.max_iters
    {
        polish(
            &grid,
            &d,
            &mut best,
            cfg,
            &mut iterations,
            &mut history,
            &mut upper_min,
        );
    }

    let floor = cfg.support_weight_floor;
    let kept: Vec<(f64, f64)> = grid
        .levels
        .iter()
        .zip(&best.f)
        .filter(|(_, &w)| w > 0.0 && w >= floor)
        .map(|(&x, &w)| (x, w))
        .collect();
    let kept_mass: f64 = kept.iter().map(|(_, w)| w).sum();
    let atoms = kept
        .into_iter()
        .map(|(x, w)| {
            Ok(Atom {
                level: SignalLevel::new(x)?,
                weight: w / kept_mass,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let distribution = InputDistribution::from_atoms(atoms)?;

    let upper = upper_min.max(best.bracket.lower);
    Ok(CapacityResult {
        capacity_nats: best.bracket.lower,
        upper_bound_nats: upper,
        distribution,
        iterations,
        kkt_max_violation: best.bracket.upper - best.bracket.lower,
        converged: upper - best.bracket.lower <= cfg.tol,
        history,
    })
}

fn polish(
    grid: &GridChannel,
    d_start: &[f64],
    best: &mut Best,
    cfg: &SolverConfig,
    iterations: &mut usize,
    history: &mut Vec<Bracket>,
    upper_min: &mut f64,
) {
    let mut support = local_maxima(d_start);
    let mut w: Vec<f64> = support.iter().map(|&i| best.f[i].max(1e-300)).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);

    for _ in 0..MAX_POLISH_ROUNDS {
        newton_restricted(grid, &mut support, &mut w, iterations, cfg.max_iters);

        let mut f = vec![0.0; grid.len()];
        for (&i, &wi) in support.iter().zip(&w) {
            f[i] = wi;
        }
        let (d, bracket) = grid.evaluate(&f);
        *upper_min = upper_min.min(bracket.upper);
        if bracket.lower >= best.bracket.lower {
            history.push(bracket);
            *best = Best {
                f: f.clone(),
                bracket,
            };
        }
        if bracket.upper - bracket.lower <= cfg.tol || *iterations >= cfg.max_iters {
            return;
        }

        let fresh: Vec<usize> = local_maxima(&d)
            .into_iter()
            .filter(|&i| d[i] > bracket.lower && !support.contains(&i))
            .collect();
        if fresh.is_empty() {
            return;
        }
        // Shift a little mass onto the new atoms; the first-order gain is
        // D(new) − I > 0, so a small enough step always helps.
        let mut t = 1e-2;
        let (value, _, _) = grid.restricted(&support, &w);
        let mut merged: Vec<(usize, f64)> = Vec::new();
        while t > 1e-12 {
            merged = support
                .iter()
                .zip(&w)
                .map(|(&i, &wi)| (i, wi * (1.0 - t)))
                .chain(fresh.iter().map(|&i| (i, t / fresh.len() as f64)))
                .collect();
            merged.sort_by_key(|&(i, _)| i);
            let (s, ww): (Vec<usize>, Vec<f64>) = merged.iter().copied().unzip();
            if grid.restricted(&s, &ww).0 > value {
                break;
            }
            t *= 0.5;
        }
        (support, w) = merged.into_iter().unzip();
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    pub is_optimal: bool,
    /// `max_x D(x) − C` over the probe grid.
    pub max_excess_nats: f64,
    /// Probe level where the density peaks.
    pub argmax_level: f64,
    pub capacity_nats: f64,
}

/// Checks the analytic two-level code `{0, x_m}` against the KKT condition
/// `D(x) ≤ C` on `probe_points` equispaced levels of `[0, x_m]`.
pub fn verify_two_point_kkt(x_m: SignalLevel, probe_points: usize) -> Result<KktReport> {
    if x_m.value() <= 0.0 {
        return Err(domain("KKT check needs x_m > 0"));
    }
    if probe_points < 100 {
        return Err(domain("KKT check needs at least 100 probe points"));
    }
    let f = optimal_two_point_distribution(x_m)?;
    let ch = GeometricChannel::with_default_tail(x_m)?;
    let ln_q = photon_channel::ln_output_marginal(&f, ch.max_count() + 1);
    let last = (probe_points - 1) as f64;
    let densities = (0..probe_points)
        .into_par_iter()
        .map(|i| {
            let x = if i + 1 == probe_points {
                x_m.value()
            } else {
                x_m.value() * i as f64 / last
            };
            photon_channel::density_against(SignalLevel::new(x)?, &ln_q).map(|d| (x, d))
        })
        .collect::<Result<Vec<_>>>()?;
    let (argmax_level, peak) =
        densities.into_iter().fold(
            (0.0, f64::NEG_INFINITY),
            |acc, p| if p.1 > acc.1 { p } else { acc },
        );
    let capacity = two_point_capacity(x_m);
    let excess = peak - capacity;
    Ok(KktReport {
        is_optimal: excess <= KKT_TOLERANCE,
        max_excess_nats: excess,
        argmax_level,
        capacity_nats: capacity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    /// Midpoint of the final bisection interval.
    pub level: SignalLevel,
    /// Final interval: two-level code optimal at `lo`, not at `hi`.
    pub lo: f64,
    pub hi: f64,
}

impl Threshold {
    pub fn mean_occupation(&self) -> f64 {
        self.level.mean_occupation()
    }
}

/// Bisects the KKT verdict of the two-level code to locate the largest
/// `x_m` for which two signal levels remain optimal.
pub fn find_two_point_threshold(lo: f64, hi: f64, resolution: f64) -> Result<Threshold> {
    if !(lo > 0.0 && hi < 1.0 && lo < hi) {
        return Err(Error::Bracket(format!(
            "need 0 < lo < hi < 1, got lo = {lo}, hi = {hi}"
        )));
    }
    if resolution.is_nan() || resolution <= 0.0 {
        return Err(domain("resolution must be positive"));
    }
    let optimal = |x: f64| -> Result<bool> {
        Ok(verify_two_point_kkt(SignalLevel::new(x)?, DEFAULT_PROBE_POINTS)?.is_optimal)
    };
    if !optimal(lo)? {
        return Err(Error::Bracket(format!(
            "two-level code is already suboptimal at lo = {lo}"
        )));
    }
    if optimal(hi)? {
        return Err(Error::Bracket(format!(
            "two-level code is still optimal at hi = {hi}; no crossover inside the bracket"
        )));
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > resolution {
        let mid = 0.5 * (a + b);
        if optimal(mid)? {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(Threshold {
        level: SignalLevel::new(0.5 * (a + b))?,
        lo: a,
        hi: b,
    })
}
