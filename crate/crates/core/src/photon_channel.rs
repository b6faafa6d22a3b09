//! The geometric photon-counting channel of a single field oscillator.
//!
//! A thermal mode with mean occupation `n̄` emits `n` photons with probability
//! `(1 − x)·xⁿ`, where `x = n̄/(n̄ + 1)` is the signal level. The encoder picks
//! `x` in `[0, x_max]`; the decoder sees `n`.

use crate::error::{domain, Error, Result};

/// Tail tolerance used when a channel is built without an explicit one.
pub const DEFAULT_TAIL_EPSILON: f64 = 1e-12;

/// Largest tail tolerance a [`GeometricChannel`] accepts.
pub const MAX_TAIL_EPSILON: f64 = 1e-9;

const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// Channel input `x = n̄/(n̄ + 1)`, restricted to `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SignalLevel(f64);

impl SignalLevel {
    pub const ZERO: SignalLevel = SignalLevel(0.0);

    pub fn new(x: f64) -> Result<Self> {
        if x.is_finite() && (0.0..1.0).contains(&x) {
            Ok(SignalLevel(x))
        } else {
            Err(domain(format!("signal level must lie in [0, 1), got {x}")))
        }
    }

    pub fn from_mean_occupation(nbar: f64) -> Result<Self> {
        if !(nbar.is_finite() && nbar >= 0.0) {
            return Err(domain(format!(
                "mean occupation must be finite and non-negative, got {nbar}"
            )));
        }
        // n̄ so large that n̄/(n̄+1) rounds to 1 is still an infinite-occupation input.
        SignalLevel::new(nbar / (nbar + 1.0))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// Mean photon count `x/(1 − x)`.
    pub fn mean_occupation(self) -> f64 {
        self.0 / (1.0 - self.0)
    }

    /// `ln p(n|x)`; `-inf` for unreachable outputs of the dark level.
    #[inline]
    pub fn ln_pmf(self, n: u64) -> f64 {
        let x = self.0;
        if n == 0 {
            (-x).ln_1p()
        } else if x == 0.0 {
            f64::NEG_INFINITY
        } else {
            (-x).ln_1p() + n as f64 * x.ln()
        }
    }

    #[inline]
    pub fn pmf(self, n: u64) -> f64 {
        let x = self.0;
        match i32::try_from(n) {
            Ok(k) => (1.0 - x) * x.powi(k),
            Err(_) => self.ln_pmf(n).exp(),
        }
    }
}

impl TryFrom<f64> for SignalLevel {
    type Error = Error;

    fn try_from(x: f64) -> Result<Self> {
        SignalLevel::new(x)
    }
}

impl From<SignalLevel> for f64 {
    fn from(x: SignalLevel) -> f64 {
        x.0
    }
}

/// `p(n|x) = (1 − x)·xⁿ`.
pub fn gibbs_pmf(n: u64, x: f64) -> Result<f64> {
    Ok(SignalLevel::new(x)?.pmf(n))
}

pub fn nbar_to_level(nbar: f64) -> Result<SignalLevel> {
    SignalLevel::from_mean_occupation(nbar)
}

pub fn level_to_nbar(x: SignalLevel) -> f64 {
    x.mean_occupation()
}

/// Peak-constrained photon-counting channel with a finite output alphabet.
///
/// Outputs are truncated at `N = ceil(ln(ε·(1 − x_max)) / ln x_max)`; the
/// geometric tail beyond `N` has mass `x^(N+1) ≤ ε·x_max` for every admissible
/// input `x ≤ x_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricChannel {
    x_max: SignalLevel,
    tail_epsilon: f64,
}

impl GeometricChannel {
    pub fn new(x_max: SignalLevel, tail_epsilon: f64) -> Result<Self> {
        if x_max.value() <= 0.0 {
            return Err(domain("channel constraint x_max must be positive"));
        }
        if !(tail_epsilon > 0.0 && tail_epsilon <= MAX_TAIL_EPSILON) {
            return Err(domain(format!(
                "tail_epsilon must lie in (0, {MAX_TAIL_EPSILON}], got {tail_epsilon}"
            )));
        }
        Ok(GeometricChannel {
            x_max,
            tail_epsilon,
        })
    }

    pub fn with_default_tail(x_max: SignalLevel) -> Result<Self> {
        GeometricChannel::new(x_max, DEFAULT_TAIL_EPSILON)
    }

    pub fn x_max(&self) -> SignalLevel {
        self.x_max
    }

    pub fn tail_epsilon(&self) -> f64 {
        self.tail_epsilon
    }

    /// Largest output count kept, `N`.
    pub fn max_count(&self) -> usize {
        let x = self.x_max.value();
        let n = ((self.tail_epsilon * (1.0 - x)).ln() / x.ln()).ceil();
        n.max(0.0) as usize
    }

    /// `p(0|x), …, p(N|x)` by the recurrence `p(n+1) = x·p(n)`.
    pub fn pmf_row(&self, x: SignalLevel) -> Vec<f64> {
        let n_out = self.max_count() + 1;
        let mut row = Vec::with_capacity(n_out);
        let mut p = 1.0 - x.value();
        for _ in 0..n_out {
            row.push(p);
            p *= x.value();
        }
        row
    }

    pub fn check_level(&self, x: SignalLevel) -> Result<()> {
        if x > self.x_max {
            Err(Error::Constraint {
                level: x.value(),
                x_max: self.x_max.value(),
            })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub level: SignalLevel,
    pub weight: f64,
}

/// A finite-support input law over signal levels.
#[derive(Debug, Clone, PartialEq)]
pub struct InputDistribution {
    atoms: Vec<Atom>,
}

impl InputDistribution {
    /// Builds a law from `(level, weight)` pairs. Levels must be strictly
    /// increasing and weights must be non-negative and sum to one.
    pub fn new(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let atoms = atoms
            .into_iter()
            .map(|(level, weight)| {
                Ok(Atom {
                    level: SignalLevel::new(level)?,
                    weight,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_atoms(atoms)
    }

    pub fn from_atoms(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Degenerate("input law has no atoms".into()));
        }
        if let Some(a) = atoms
            .iter()
            .find(|a| !(a.weight >= 0.0 && a.weight.is_finite()))
        {
            return Err(domain(format!(
                "atom weight {} is not a probability",
                a.weight
            )));
        }
        let total: f64 = atoms.iter().map(|a| a.weight).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(domain(format!("atom weights sum to {total}, not 1")));
        }
        if atoms.windows(2).any(|w| w[0].level >= w[1].level) {
            return Err(domain("atom levels must be strictly increasing"));
        }
        Ok(InputDistribution { atoms })
    }

    /// Deterministic input at `x`.
    pub fn point_mass(x: SignalLevel) -> Self {
        InputDistribution {
            atoms: vec![Atom {
                level: x,
                weight: 1.0,
            }],
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn max_level(&self) -> SignalLevel {
        self.atoms[self.atoms.len() - 1].level
    }

    /// Mean photon count `Σ wᵢ·xᵢ/(1 − xᵢ)`.
    pub fn mean_photons(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.weight * a.level.mean_occupation())
            .sum()
    }
}

/// `ln[1 + x·(1 − x)^((1 − x)/x)]`, the capacity of the channel when the
/// two-level code `{0, x_m}` is optimal. Tends to 0 as `x_m → 0`.
pub fn two_point_capacity(x_m: SignalLevel) -> f64 {
    let x = x_m.value();
    if x == 0.0 {
        return 0.0;
    }
    (x * stable_power(x)).ln_1p()
}

/// `(1 − x)^((1 − x)/x)` via `exp(((1 − x)/x)·ln(1 − x))`; equals 1 in the
/// `x → 1` limit and `1/e` in the `x → 0` limit.
fn stable_power(x: f64) -> f64 {
    (((1.0 - x) / x) * (-x).ln_1p()).exp()
}

/// Probability the optimal two-level code puts on `x_m`:
/// `x₀/x_m = 1 / ((1 − x_m)^((x_m − 1)/x_m) + x_m)`.
pub fn two_point_weight(x_m: SignalLevel) -> Result<f64> {
    let x = x_m.value();
    if x == 0.0 {
        return Err(Error::Degenerate("two-level code needs x_m > 0".into()));
    }
    Ok(1.0 / (1.0 / stable_power(x) + x))
}

/// Two atoms at `0` and `x_m` with the weights that maximize information.
pub fn optimal_two_point_distribution(x_m: SignalLevel) -> Result<InputDistribution> {
    let w = two_point_weight(x_m)?;
    Ok(InputDistribution {
        atoms: vec![
            Atom {
                level: SignalLevel::ZERO,
                weight: 1.0 - w,
            },
            Atom {
                level: x_m,
                weight: w,
            },
        ],
    })
}

/// Log of the output marginal `q(n) = Σᵢ fᵢ·p(n|xᵢ)` for `n = 0..=N`,
/// computed with log-sum-exp so deep tails do not underflow to zero.
pub(crate) fn ln_output_marginal(f: &InputDistribution, n_out: usize) -> Vec<f64> {
    let mut ln_q = Vec::with_capacity(n_out);
    let mut terms = Vec::with_capacity(f.len());
    for n in 0..n_out as u64 {
        terms.clear();
        terms.extend(
            f.atoms
                .iter()
                .filter(|a| a.weight > 0.0)
                .map(|a| a.weight.ln() + a.level.ln_pmf(n)),
        );
        ln_q.push(log_sum_exp(&terms));
    }
    ln_q
}

pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

pub(crate) fn density_against(x: SignalLevel, ln_q: &[f64]) -> Result<f64> {
    let mut d = 0.0;
    for (n, &lq) in ln_q.iter().enumerate() {
        let lp = x.ln_pmf(n as u64);
        if lp == f64::NEG_INFINITY {
            continue;
        }
        if lq == f64::NEG_INFINITY {
            return Err(Error::UnsupportedOutput { n });
        }
        d += lp.exp() * (lp - lq);
    }
    Ok(d)
}

fn check_support(f: &InputDistribution, ch: &GeometricChannel) -> Result<()> {
    f.atoms.iter().try_for_each(|a| ch.check_level(a.level))
}

/// `D(x) = Σₙ p(n|x)·ln(p(n|x)/q(n))`, the relative entropy between the
/// output law at input `x` and the output marginal under `f`.
pub fn information_density(
    x: SignalLevel,
    f: &InputDistribution,
    ch: &GeometricChannel,
) -> Result<f64> {
    ch.check_level(x)?;
    check_support(f, ch)?;
    let ln_q = ln_output_marginal(f, ch.max_count() + 1);
    density_against(x, &ln_q)
}

/// `I(f) = Σᵢ fᵢ·D(xᵢ)`, in nats.
pub fn mutual_information(f: &InputDistribution, ch: &GeometricChannel) -> Result<f64> {
    check_support(f, ch)?;
    let ln_q = ln_output_marginal(f, ch.max_count() + 1);
    let mut total = 0.0;
    for a in f.atoms.iter().filter(|a| a.weight > 0.0) {
        total += a.weight * density_against(a.level, &ln_q)?;
    }
    Ok(total.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lvl(x: f64) -> SignalLevel {
        SignalLevel::new(x).unwrap()
    }

    #[test]
    fn level_domain() {
        assert!(SignalLevel::new(1.0).is_err());
        assert!(SignalLevel::new(-1e-300).is_err());
        assert!(SignalLevel::new(f64::NAN).is_err());
        assert!(nbar_to_level(-0.5).is_err());
        assert!(nbar_to_level(f64::INFINITY).is_err());
    }

    #[test]
    fn level_nbar_examples() {
        assert!((nbar_to_level(9.0).unwrap().value() - 0.9).abs() < 1e-15);
        assert_eq!(nbar_to_level(0.0).unwrap().value(), 0.0);
        assert_eq!(level_to_nbar(lvl(0.5)), 1.0);
    }

    #[test]
    fn pmf_examples() {
        assert_eq!(gibbs_pmf(0, 0.0).unwrap(), 1.0);
        assert_eq!(gibbs_pmf(3, 0.0).unwrap(), 0.0);
        assert_eq!(gibbs_pmf(2, 0.5).unwrap(), 0.125);
        assert!(gibbs_pmf(0, 1.0).is_err());
        for big in [40u64, 400] {
            let s: f64 = (0..=big).map(|n| gibbs_pmf(n, 0.9).unwrap()).sum();
            assert!((s - (1.0 - 0.9f64.powi(big as i32 + 1))).abs() < 1e-14);
        }
    }

    #[test]
    fn truncation_deficit_within_epsilon() {
        for &x in &[0.05, 0.5, 0.9, 0.99] {
            let ch = GeometricChannel::new(lvl(x), 1e-10).unwrap();
            let kept: f64 = ch.pmf_row(lvl(x)).iter().sum();
            assert!(1.0 - kept <= 1e-10 + 1e-15, "x={x} deficit {}", 1.0 - kept);
            assert!(kept <= 1.0 + 1e-15);
        }
    }

    #[test]
    fn channel_rejects_bad_parameters() {
        assert!(GeometricChannel::new(SignalLevel::ZERO, 1e-12).is_err());
        assert!(GeometricChannel::new(lvl(0.5), 1e-8).is_err());
        assert!(GeometricChannel::new(lvl(0.5), 0.0).is_err());
    }

    #[test]
    fn distribution_invariants() {
        assert!(InputDistribution::new([(0.0, 0.5), (0.5, 0.5)]).is_ok());
        assert!(InputDistribution::new([(0.5, 0.5), (0.0, 0.5)]).is_err());
        assert!(InputDistribution::new([(0.5, 0.5), (0.5, 0.5)]).is_err());
        assert!(InputDistribution::new([(0.0, 0.6), (0.5, 0.5)]).is_err());
        assert!(InputDistribution::new([(0.0, -0.1), (0.5, 1.1)]).is_err());
        assert!(InputDistribution::new(Vec::<(f64, f64)>::new()).is_err());
    }

    #[test]
    fn closed_form_edges() {
        assert_eq!(two_point_capacity(SignalLevel::ZERO), 0.0);
        assert!((two_point_capacity(lvl(0.5)) - 1.25f64.ln()).abs() < 1e-15);
        assert!(two_point_capacity(lvl(1e-300)) >= 0.0);
        let near_one = two_point_capacity(lvl(1.0 - 1e-12));
        assert!((near_one - 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn two_point_weights_at_half() {
        let f = optimal_two_point_distribution(lvl(0.5)).unwrap();
        let a = f.atoms();
        assert!((a[0].weight - 0.6).abs() < 1e-15);
        assert!((a[1].weight - 0.4).abs() < 1e-15);
        // x₀ = x_m · weight
        assert!((0.5 * a[1].weight - 0.2).abs() < 1e-15);
        assert!(matches!(
            optimal_two_point_distribution(SignalLevel::ZERO),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn small_xm_weight_matches_series() {
        // (1 − x)^((x − 1)/x) = e·exp(−x/2 − x²/6 + O(x³))
        let x = 1e-6;
        let series = 1.0 / (std::f64::consts::E * (1.0 - x / 2.0 - x * x / 6.0) + x);
        let w = two_point_weight(lvl(x)).unwrap();
        assert!((w - series).abs() < 1e-12, "{w} vs {series}");
        assert!((w - (-1.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn single_atom_carries_no_information() {
        let ch = GeometricChannel::with_default_tail(lvl(0.9)).unwrap();
        for x in [0.0, 0.3, 0.9] {
            let f = InputDistribution::point_mass(lvl(x));
            assert_eq!(mutual_information(&f, &ch).unwrap(), 0.0);
            assert!(information_density(lvl(x), &f, &ch).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn atoms_above_constraint_are_rejected() {
        let ch = GeometricChannel::with_default_tail(lvl(0.5)).unwrap();
        let f = InputDistribution::new([(0.0, 0.5), (0.6, 0.5)]).unwrap();
        assert!(matches!(
            mutual_information(&f, &ch),
            Err(Error::Constraint { .. })
        ));
        let g = InputDistribution::point_mass(lvl(0.1));
        assert!(matches!(
            information_density(lvl(0.7), &g, &ch),
            Err(Error::Constraint { .. })
        ));
    }

    #[test]
    fn dark_input_leaves_outputs_unsupported() {
        let ch = GeometricChannel::with_default_tail(lvl(0.5)).unwrap();
        let dark = InputDistribution::point_mass(SignalLevel::ZERO);
        assert_eq!(
            information_density(lvl(0.25), &dark, &ch),
            Err(Error::UnsupportedOutput { n: 1 })
        );
    }
}
