//! Seeded Monte Carlo readout of the photon-counting channel.
//!
//! Random numbers come from ChaCha8 (`rand_chacha`), which produces the same
//! stream on every platform. Draws are grouped in blocks of [`BLOCK_SIZE`];
//! block `b` uses the generator seeded with `seed` on stream `b`
//! (`ChaCha8Rng::seed_from_u64(seed)` then `set_stream(b)`). Blocks may run on
//! any number of threads and are merged in block order, so reports do not
//! depend on the thread count.

use std::collections::BTreeMap;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::photon_channel::{
    two_point_capacity, two_point_weight, GeometricChannel, InputDistribution, SignalLevel,
};
use crate::radiometry::{PhysicalConstants, PlanckSource};

/// Draws per RNG substream.
pub const BLOCK_SIZE: u64 = 1 << 16;

/// Generator for substream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Photon count for input `x` by inversion: `n = ⌊ln U / ln x⌋`, `U ~ (0, 1)`.
pub fn sample_count<R: Rng + ?Sized>(x: SignalLevel, rng: &mut R) -> u64 {
    if x.value() == 0.0 {
        return 0;
    }
    let u: f64 = rng.sample(Open01);
    let n = (u.ln() / x.value().ln()).floor();
    if n >= u64::MAX as f64 {
        u64::MAX
    } else {
        n as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub distribution: InputDistribution,
    pub x_max: SignalLevel,
    pub samples: u64,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn new(
        distribution: InputDistribution,
        x_max: SignalLevel,
        samples: u64,
        seed: u64,
    ) -> Result<Self> {
        let cfg = SimulationConfig {
            distribution,
            x_max,
            samples,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < 1 {
            return Err(domain("simulation needs at least one sample"));
        }
        let ch = GeometricChannel::with_default_tail(self.x_max)?;
        self.distribution
            .atoms()
            .iter()
            .try_for_each(|a| ch.check_level(a.level))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    /// Plug-in mutual information with the Miller–Madow correction, nats.
    pub empirical_mi_nats: f64,
    /// Jackknife standard error of `empirical_mi_nats`.
    pub mi_standard_error: f64,
    pub photon_mean: f64,
    pub photon_mean_standard_error: f64,
    /// Error rate of the MAP detector; two-atom inputs only.
    pub map_error_rate: Option<f64>,
    pub seed: u64,
    pub samples: u64,
    /// Counts above this value share one histogram bin.
    pub count_cap: u64,
    /// `(atom index, photon count) → frequency`, counts capped at `count_cap`.
    pub count_histogram: BTreeMap<(usize, u64), u64>,
}

/// Maximum a posteriori decision between the two atoms of a binary code.
/// Ties go to the lower atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapDetector {
    levels: [SignalLevel; 2],
    ln_weights: [f64; 2],
}

impl MapDetector {
    pub fn new(f: &InputDistribution) -> Result<Self> {
        match f.atoms() {
            [a, b] => Ok(MapDetector {
                levels: [a.level, b.level],
                ln_weights: [a.weight.ln(), b.weight.ln()],
            }),
            other => Err(domain(format!(
                "MAP detector needs exactly two atoms, got {}",
                other.len()
            ))),
        }
    }

    pub fn decide(&self, n: u64) -> usize {
        let lower = self.ln_weights[0] + self.levels[0].ln_pmf(n);
        let upper = self.ln_weights[1] + self.levels[1].ln_pmf(n);
        usize::from(upper > lower)
    }
}

struct BlockTally {
    table: Vec<u64>,
    photons: u128,
    photons_sq: u128,
    map_errors: u64,
}

fn simulate_block(
    cfg: &SimulationConfig,
    cumulative: &[f64],
    detector: Option<&MapDetector>,
    bins: usize,
    block: u64,
) -> Result<BlockTally> {
    let start = block * BLOCK_SIZE;
    let len = BLOCK_SIZE.min(cfg.samples - start);
    let atoms = cfg.distribution.atoms();
    let mut rng = substream(cfg.seed, block);
    let mut tally = BlockTally {
        table: vec![0; atoms.len() * bins],
        photons: 0,
        photons_sq: 0,
        map_errors: 0,
    };
    let overflow = || Error::CountOverflow;
    for _ in 0..len {
        let u: f64 = rng.random();
        let atom = cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(atoms.len() - 1);
        let n = sample_count(atoms[atom].level, &mut rng);
        let bin = (n as usize).min(bins - 1);
        tally.table[atom * bins + bin] += 1;
        let n = u128::from(n);
        tally.photons = tally.photons.checked_add(n).ok_or_else(overflow)?;
        tally.photons_sq = tally
            .photons_sq
            .checked_add(n.checked_mul(n).ok_or_else(overflow)?)
            .ok_or_else(overflow)?;
        if let Some(d) = detector {
            if d.decide(n as u64) != atom {
                tally.map_errors += 1;
            }
        }
    }
    Ok(tally)
}

fn xlogx(c: f64) -> f64 {
    if c > 0.0 {
        c * c.ln()
    } else {
        0.0
    }
}

/// Sufficient statistics of a contingency table for the plug-in estimator.
#[derive(Debug, Clone, Copy)]
struct Entropies {
    total: f64,
    cells: f64,
    rows: f64,
    cols: f64,
    nonzero_cells: f64,
    nonzero_rows: f64,
    nonzero_cols: f64,
}

impl Entropies {
    /// `Σ(c/S)·ln(cS/(r·k))` plus `(K_rows + K_cols − K_cells − 1)/(2S)`.
    fn miller_madow(&self) -> f64 {
        let s = self.total;
        let plug_in = (self.cells - self.rows - self.cols) / s + s.ln();
        plug_in + (self.nonzero_rows + self.nonzero_cols - self.nonzero_cells - 1.0) / (2.0 * s)
    }
}

/// Miller–Madow mutual information of a row-major table and its jackknife
/// standard error (leave-one-out over samples, grouped by cell).
fn table_mutual_information(table: &[u64], n_rows: usize, n_cols: usize) -> (f64, f64) {
    let row_sums: Vec<u64> = (0..n_rows)
        .map(|a| table[a * n_cols..(a + 1) * n_cols].iter().sum())
        .collect();
    let col_sums: Vec<u64> = (0..n_cols)
        .map(|n| (0..n_rows).map(|a| table[a * n_cols + n]).sum())
        .collect();
    let full = Entropies {
        total: row_sums.iter().sum::<u64>() as f64,
        cells: table.iter().map(|&c| xlogx(c as f64)).sum(),
        rows: row_sums.iter().map(|&c| xlogx(c as f64)).sum(),
        cols: col_sums.iter().map(|&c| xlogx(c as f64)).sum(),
        nonzero_cells: table.iter().filter(|&&c| c > 0).count() as f64,
        nonzero_rows: row_sums.iter().filter(|&&c| c > 0).count() as f64,
        nonzero_cols: col_sums.iter().filter(|&&c| c > 0).count() as f64,
    };
    let estimate = full.miller_madow();
    if full.total < 2.0 {
        return (estimate, (full.nonzero_rows.max(1.0)).ln());
    }

    let drop_one = |c: u64| xlogx(c as f64 - 1.0) - xlogx(c as f64);
    let emptied = |c: u64| if c == 1 { 1.0 } else { 0.0 };
    let mut loo = Vec::new();
    for a in 0..n_rows {
        for n in 0..n_cols {
            let c = table[a * n_cols + n];
            if c == 0 {
                continue;
            }
            let (r, k) = (row_sums[a], col_sums[n]);
            let e = Entropies {
                total: full.total - 1.0,
                cells: full.cells + drop_one(c),
                rows: full.rows + drop_one(r),
                cols: full.cols + drop_one(k),
                nonzero_cells: full.nonzero_cells - emptied(c),
                nonzero_rows: full.nonzero_rows - emptied(r),
                nonzero_cols: full.nonzero_cols - emptied(k),
            };
            loo.push((c as f64, e.miller_madow()));
        }
    }
    let s = full.total;
    let mean = loo.iter().map(|(c, v)| c * v).sum::<f64>() / s;
    let ss: f64 = loo.iter().map(|(c, v)| c * (v - mean).powi(2)).sum();
    (estimate, ((s - 1.0) / s * ss).sqrt())
}

pub fn run_simulation(cfg: &SimulationConfig) -> Result<SimulationReport> {
    cfg.validate()?;
    let ch = GeometricChannel::with_default_tail(cfg.x_max)?;
    let count_cap = ch.max_count() as u64 + 1;
    let bins = count_cap as usize + 1;
    let atoms = cfg.distribution.atoms();

    let mut cumulative = Vec::with_capacity(atoms.len());
    let mut acc = 0.0;
    for a in atoms {
        acc += a.weight;
        cumulative.push(acc);
    }
    let detector = MapDetector::new(&cfg.distribution).ok();

    let blocks = cfg.samples.div_ceil(BLOCK_SIZE);
    let tallies = (0..blocks)
        .into_par_iter()
        .map(|b| simulate_block(cfg, &cumulative, detector.as_ref(), bins, b))
        .collect::<Result<Vec<_>>>()?;

    let mut table = vec![0u64; atoms.len() * bins];
    let (mut photons, mut photons_sq, mut map_errors) = (0u128, 0u128, 0u64);
    for t in &tallies {
        for (dst, src) in table.iter_mut().zip(&t.table) {
            *dst = dst.checked_add(*src).ok_or(Error::CountOverflow)?;
        }
        photons = photons.checked_add(t.photons).ok_or(Error::CountOverflow)?;
        photons_sq = photons_sq
            .checked_add(t.photons_sq)
            .ok_or(Error::CountOverflow)?;
        map_errors += t.map_errors;
    }

    let (mi, se) = table_mutual_information(&table, atoms.len(), bins);
    let s = cfg.samples as f64;
    let photon_mean = photons as f64 / s;
    let photon_var = (photons_sq as f64 / s - photon_mean * photon_mean).max(0.0);
    let count_histogram = table
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| ((i / bins, (i % bins) as u64), c))
        .collect();

    Ok(SimulationReport {
        empirical_mi_nats: mi.max(0.0),
        mi_standard_error: se,
        photon_mean,
        photon_mean_standard_error: (photon_var / s).sqrt(),
        map_error_rate: detector.map(|_| map_errors as f64 / s),
        seed: cfg.seed,
        samples: cfg.samples,
        count_cap,
        count_histogram,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonRatioEstimate {
    pub nats_per_photon: f64,
    pub standard_error: f64,
    pub oscillators: u64,
    pub photons: u64,
    pub seed: u64,
}

#[derive(Debug, Default, Clone, Copy)]
struct RatioSums {
    info: f64,
    photons: f64,
    info_sq: f64,
    photons_sq: f64,
    cross: f64,
    raw_photons: u64,
    weight: f64,
}

impl RatioSums {
    fn merge(self, o: RatioSums) -> RatioSums {
        RatioSums {
            info: self.info + o.info,
            photons: self.photons + o.photons,
            info_sq: self.info_sq + o.info_sq,
            photons_sq: self.photons_sq + o.photons_sq,
            cross: self.cross + o.cross,
            raw_photons: self.raw_photons + o.raw_photons,
            weight: self.weight + o.weight,
        }
    }
}

/// Simulated information per recorded photon over a blackbody spectrum.
///
/// Oscillator frequencies `u = hν/kT` are drawn from the `u²`-weighted
/// proposal `g(u) = u²·e^(−u/2)/16` (a Gamma(3, 2) law), so every draw is
/// weighted by `16·e^(u/2)`. Each oscillator contributes its two-level
/// capacity to the information sum and one simulated photon count, from the
/// optimal two-level code, to the photon sum. A proposal that decays like
/// `e^(−u)` would give the photon sum infinite variance.
///
/// When no photon is recorded at all the photon sum is replaced by half the
/// mean importance weight so the ratio stays finite.
pub fn empirical_nats_per_photon(
    source: &PlanckSource,
    consts: &PhysicalConstants,
    oscillators: u64,
    seed: u64,
) -> Result<PhotonRatioEstimate> {
    if oscillators < 1 {
        return Err(domain("need at least one oscillator"));
    }
    let scale = consts.k * source.temperature() / consts.h;
    let blocks = oscillators.div_ceil(BLOCK_SIZE);
    let per_block: Vec<RatioSums> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let len = BLOCK_SIZE.min(oscillators - b * BLOCK_SIZE);
            let mut rng = substream(seed, b);
            let mut sums = RatioSums::default();
            for _ in 0..len {
                let prod: f64 = (0..3).map(|_| rng.sample::<f64, _>(Open01)).product();
                let u = -2.0 * prod.ln();
                let weight = 16.0 * (0.5 * u).exp();
                let level = SignalLevel::new(source.max_level(u * scale, consts))
                    .unwrap_or(SignalLevel::ZERO);
                let info = two_point_capacity(level);
                let coin: f64 = rng.random();
                let n = match two_point_weight(level) {
                    Ok(w) if coin < w => sample_count(level, &mut rng),
                    _ => 0,
                };
                let a = weight * info;
                let p = weight * n as f64;
                sums = sums.merge(RatioSums {
                    info: a,
                    photons: p,
                    info_sq: a * a,
                    photons_sq: p * p,
                    cross: a * p,
                    raw_photons: n,
                    weight,
                });
            }
            sums
        })
        .collect();
    let s = per_block
        .into_iter()
        .fold(RatioSums::default(), RatioSums::merge);

    let m = oscillators as f64;
    let photons = if s.photons > 0.0 {
        s.photons
    } else {
        0.5 * s.weight / m
    };
    let ratio = s.info / photons;
    let standard_error = if oscillators < 2 {
        ratio
    } else {
        let (ma, mb) = (s.info / m, photons / m);
        let var_a = (s.info_sq - m * ma * ma) / (m - 1.0);
        let var_b = (s.photons_sq - m * mb * mb) / (m - 1.0);
        let cov = (s.cross - m * ma * mb) / (m - 1.0);
        let var_r = (var_a - 2.0 * ratio * cov + ratio * ratio * var_b) / (m * mb * mb);
        var_r.max(0.0).sqrt()
    };
    Ok(PhotonRatioEstimate {
        nats_per_photon: ratio,
        standard_error,
        oscillators,
        photons: s.raw_photons,
        seed,
    })
}
