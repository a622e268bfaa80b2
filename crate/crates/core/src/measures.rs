//! Finite nonnegative measures over the binary covariate space.
//!
//! Population states, actions and inflows are all atomic measures: weighted
//! sets of binary covariate vectors. Atoms are keyed by canonical bitstring
//! and iterated in lexicographic order, so every downstream reduction is
//! deterministic.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Negative weights below this magnitude are clamped to zero; anything more
/// negative signals a real constraint violation.
pub const WEIGHT_DUST: f64 = 1e-12;

/// Tolerance on total-mass identities (e.g. mass(eta) + mass(rho) = 1).
pub const MASS_TOL: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum MeasureError {
    #[error("combined weight {weight} at atom {atom} is below -{WEIGHT_DUST}")]
    ResultNegative { atom: String, weight: f64 },
    #[error("measure is not absolutely continuous: weight {weight} at {atom} outside the reference support")]
    NotAbsolutelyContinuous { atom: String, weight: f64 },
    #[error("covariate entries must be 0 or 1, got {0}")]
    InvalidBit(u8),
    #[error("invalid bitstring {0:?}")]
    InvalidBitstring(String),
    #[error("population state masses sum to {0}, expected 1")]
    NotAPopulation(f64),
}

/// An ordered vector of binary covariate indicators.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CovariateVector {
    bits: Vec<u8>,
}

impl CovariateVector {
    pub fn new(bits: Vec<u8>) -> Result<Self, MeasureError> {
        if let Some(&b) = bits.iter().find(|&&b| b > 1) {
            return Err(MeasureError::InvalidBit(b));
        }
        Ok(Self { bits })
    }

    pub fn from_bitstring(s: &str) -> Result<Self, MeasureError> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(MeasureError::InvalidBitstring(s.to_string())),
            })
            .collect::<Result<Vec<u8>, _>>()?;
        Ok(Self { bits })
    }

    /// The all-zeros vector of dimension `p`.
    pub fn zeros(p: usize) -> Self {
        Self { bits: vec![0; p] }
    }

    /// Builds the vector whose bit `i` is bit `i` of `index` (bit 0 first).
    pub fn from_index(index: usize, p: usize) -> Self {
        let bits = (0..p).map(|i| ((index >> i) & 1) as u8).collect();
        Self { bits }
    }

    /// Enumerates all 2^p vectors in lexicographic bitstring order.
    pub fn enumerate(p: usize) -> Vec<Self> {
        assert!(p < usize::BITS as usize, "dimension too large to enumerate");
        let mut all: Vec<Self> = (0..(1usize << p)).map(|i| Self::from_index(i, p)).collect();
        all.sort();
        all
    }

    pub fn dim(&self) -> usize {
        self.bits.len()
    }

    pub fn bit(&self, i: usize) -> u8 {
        self.bits[i]
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn to_bitstring(&self) -> String {
        self.bits.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect()
    }
}

impl fmt::Display for CovariateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bitstring())
    }
}

impl TryFrom<String> for CovariateVector {
    type Error = MeasureError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        Self::from_bitstring(&s)
    }
}

impl From<CovariateVector> for String {
    fn from(x: CovariateVector) -> String {
        x.to_bitstring()
    }
}

/// A nonnegative measure supported on finitely many covariate vectors.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AtomicMeasure {
    atoms: BTreeMap<CovariateVector, f64>,
}

impl AtomicMeasure {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_pairs<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (CovariateVector, f64)>,
    {
        let mut m = Self::zero();
        for (x, w) in pairs {
            m.add_weight(x, w);
        }
        m
    }

    /// A unit point mass at `x`.
    pub fn dirac(x: CovariateVector) -> Self {
        Self::from_pairs([(x, 1.0)])
    }

    /// Accumulates `w` onto atom `x`. Callers are responsible for keeping
    /// weights nonnegative; use [`AtomicMeasure::combine`] for subtraction.
    pub fn add_weight(&mut self, x: CovariateVector, w: f64) {
        if w == 0.0 {
            return;
        }
        *self.atoms.entry(x).or_insert(0.0) += w;
    }

    pub fn weight(&self, x: &CovariateVector) -> f64 {
        self.atoms.get(x).copied().unwrap_or(0.0)
    }

    /// Atoms in lexicographic bitstring order.
    pub fn atoms(&self) -> impl Iterator<Item = (&CovariateVector, f64)> {
        self.atoms.iter().map(|(x, &w)| (x, w))
    }

    pub fn support(&self) -> impl Iterator<Item = &CovariateVector> {
        self.atoms.iter().filter(|(_, &w)| w > 0.0).map(|(x, _)| x)
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Total mass m(X).
    pub fn mass(&self) -> f64 {
        self.atoms.values().sum()
    }

    /// Integral of `f` against the measure.
    pub fn expectation<F>(&self, mut f: F) -> f64
    where
        F: FnMut(&CovariateVector) -> f64,
    {
        self.atoms.iter().map(|(x, &w)| f(x) * w).sum()
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            atoms: self.atoms.iter().map(|(x, &w)| (x.clone(), alpha * w)).collect(),
        }
    }

    /// Drops atoms with zero weight.
    pub fn prune(&mut self) {
        self.atoms.retain(|_, w| *w != 0.0);
    }

    /// Atomwise `alpha * a + beta * b`. Weights in `(-WEIGHT_DUST, 0)` are
    /// clamped to zero; more negative results are an error (they signal a
    /// tau <= eta violation upstream).
    pub fn combine(a: &Self, b: &Self, alpha: f64, beta: f64) -> Result<Self, MeasureError> {
        let mut atoms: BTreeMap<CovariateVector, f64> = BTreeMap::new();
        for (x, &w) in &a.atoms {
            *atoms.entry(x.clone()).or_insert(0.0) += alpha * w;
        }
        for (x, &w) in &b.atoms {
            *atoms.entry(x.clone()).or_insert(0.0) += beta * w;
        }
        for (x, w) in &mut atoms {
            if *w < -WEIGHT_DUST {
                return Err(MeasureError::ResultNegative {
                    atom: x.to_bitstring(),
                    weight: *w,
                });
            }
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        atoms.retain(|_, w| *w != 0.0);
        Ok(Self { atoms })
    }

    /// Normalizes to a probability measure. Returns `None` on zero mass.
    pub fn normalized(&self) -> Option<Self> {
        let m = self.mass();
        if m <= 0.0 {
            return None;
        }
        let mut out = self.scale(1.0 / m);
        out.prune();
        Some(out)
    }

    /// Serializes to the text-table format: one `bitstring,weight` row per
    /// atom, in lexicographic order, full round-trip precision.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for (x, w) in self.atoms() {
            out.push_str(&format!("{},{:.17e}\n", x, w));
        }
        out
    }

    pub fn from_table(s: &str) -> Result<Self, MeasureError> {
        let mut m = Self::zero();
        for line in s.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (bits, w) = line
                .split_once(',')
                .ok_or_else(|| MeasureError::InvalidBitstring(line.to_string()))?;
            let x = CovariateVector::from_bitstring(bits)?;
            let w: f64 = w
                .parse()
                .map_err(|_| MeasureError::InvalidBitstring(line.to_string()))?;
            m.add_weight(x, w);
        }
        Ok(m)
    }
}

/// Total variation distance; for probability measures this is
/// half the L1 distance of the weight vectors.
pub fn total_variation(a: &AtomicMeasure, b: &AtomicMeasure) -> f64 {
    let mut keys: Vec<&CovariateVector> = a.atoms.keys().chain(b.atoms.keys()).collect();
    keys.sort();
    keys.dedup();
    0.5 * keys.iter().map(|x| (a.weight(x) - b.weight(x)).abs()).sum::<f64>()
}

/// Radon-Nikodym density of `tau` with respect to `eta` on finite support:
/// g(x) = tau(x)/eta(x) on supp(eta) and 0 elsewhere.
#[derive(Debug, Clone)]
pub struct Density {
    ratios: BTreeMap<CovariateVector, f64>,
}

impl Density {
    pub fn eval(&self, x: &CovariateVector) -> f64 {
        self.ratios.get(x).copied().unwrap_or(0.0)
    }
}

pub fn radon_nikodym(tau: &AtomicMeasure, eta: &AtomicMeasure) -> Result<Density, MeasureError> {
    for (x, w) in tau.atoms() {
        if w > 0.0 && eta.weight(x) <= 0.0 {
            return Err(MeasureError::NotAbsolutelyContinuous {
                atom: x.to_bitstring(),
                weight: w,
            });
        }
    }
    let ratios = eta
        .atoms()
        .filter(|(_, w)| *w > 0.0)
        .map(|(x, w)| (x.clone(), tau.weight(x) / w))
        .collect();
    Ok(Density { ratios })
}

/// The pair (eta, rho) of untreated and treated measures; together they form
/// a probability measure on the covariate space.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationState {
    pub untreated: AtomicMeasure,
    pub treated: AtomicMeasure,
}

impl PopulationState {
    pub fn new(untreated: AtomicMeasure, treated: AtomicMeasure) -> Result<Self, MeasureError> {
        let total = untreated.mass() + treated.mass();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(MeasureError::NotAPopulation(total));
        }
        Ok(Self { untreated, treated })
    }

    /// The combined population distribution mu = eta + rho.
    pub fn total(&self) -> AtomicMeasure {
        AtomicMeasure::combine(&self.untreated, &self.treated, 1.0, 1.0)
            .expect("sum of nonnegative measures")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn x(s: &str) -> CovariateVector {
        CovariateVector::from_bitstring(s).unwrap()
    }

    #[test]
    fn mass_of_empty_measure_is_zero() {
        assert_eq!(AtomicMeasure::zero().mass(), 0.0);
    }

    #[test]
    fn mass_sums_weights() {
        let m = AtomicMeasure::from_pairs([(x("0"), 0.4), (x("1"), 0.6)]);
        assert_abs_diff_eq!(m.mass(), 1.0);
        assert_abs_diff_eq!(m.scale(2.0).mass(), 2.0);
        let half = AtomicMeasure::from_pairs([(x("0"), 0.25)]).scale(2.0);
        assert_abs_diff_eq!(half.mass(), 0.5);
    }

    #[test]
    fn expectation_point_mass_and_constant() {
        let delta = AtomicMeasure::dirac(x("01"));
        assert_abs_diff_eq!(delta.expectation(|v| v.bit(1) as f64 * 7.0), 7.0);
        let m = AtomicMeasure::from_pairs([(x("0"), 0.5), (x("1"), 0.5)]);
        assert_abs_diff_eq!(m.expectation(|_| 3.25), 3.25);
    }

    #[test]
    fn expectation_hand_sum() {
        let m = AtomicMeasure::from_pairs([(x("0"), 0.3), (x("1"), 0.2)]);
        let got = m.expectation(|v| if v.bit(0) == 0 { 1.0 } else { 2.0 });
        assert_abs_diff_eq!(got, 0.7, epsilon = 1e-15);
    }

    #[test]
    fn combine_cancellation_and_union() {
        let eta = AtomicMeasure::from_pairs([(x("0"), 0.2), (x("1"), 0.3)]);
        let z = AtomicMeasure::combine(&eta, &eta, 1.0, -1.0).unwrap();
        assert!(z.is_empty());

        let a = AtomicMeasure::from_pairs([(x("0"), 0.2)]);
        let b = AtomicMeasure::from_pairs([(x("1"), 0.3)]);
        let u = AtomicMeasure::combine(&a, &b, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(u.weight(&x("0")), 0.2);
        assert_abs_diff_eq!(u.weight(&x("1")), 0.3);
    }

    #[test]
    fn combine_rejects_negative_result() {
        let a = AtomicMeasure::from_pairs([(x("0"), 0.2)]);
        let b = AtomicMeasure::from_pairs([(x("0"), 0.3)]);
        let err = AtomicMeasure::combine(&a, &b, 1.0, -1.0).unwrap_err();
        assert!(matches!(err, MeasureError::ResultNegative { .. }));
    }

    #[test]
    fn radon_nikodym_full_none_and_partial() {
        let eta = AtomicMeasure::from_pairs([(x("0"), 0.04), (x("1"), 0.05)]);
        let g = radon_nikodym(&eta, &eta).unwrap();
        assert_abs_diff_eq!(g.eval(&x("0")), 1.0);
        assert_abs_diff_eq!(g.eval(&x("1")), 1.0);

        let g = radon_nikodym(&AtomicMeasure::zero(), &eta).unwrap();
        assert_eq!(g.eval(&x("0")), 0.0);

        let tau = AtomicMeasure::from_pairs([(x("0"), 0.02)]);
        let g = radon_nikodym(&tau, &eta).unwrap();
        assert_abs_diff_eq!(g.eval(&x("0")), 0.5);
        assert_eq!(g.eval(&x("1")), 0.0);
    }

    #[test]
    fn radon_nikodym_rejects_mass_off_support() {
        let tau = AtomicMeasure::from_pairs([(x("1"), 0.1)]);
        let eta = AtomicMeasure::from_pairs([(x("0"), 1.0)]);
        assert!(matches!(
            radon_nikodym(&tau, &eta),
            Err(MeasureError::NotAbsolutelyContinuous { .. })
        ));
    }

    #[test]
    fn radon_nikodym_reconstructs_tau_on_support_subsets() {
        let eta = AtomicMeasure::from_pairs([(x("00"), 0.4), (x("01"), 0.3), (x("11"), 0.3)]);
        let tau = AtomicMeasure::from_pairs([(x("00"), 0.1), (x("11"), 0.3)]);
        let g = radon_nikodym(&tau, &eta).unwrap();
        for (xv, w) in eta.atoms() {
            assert_abs_diff_eq!(g.eval(xv) * w, tau.weight(xv), epsilon = 1e-15);
        }
    }

    #[test]
    fn total_variation_cases() {
        let a = AtomicMeasure::from_pairs([(x("0"), 0.6), (x("1"), 0.4)]);
        let b = AtomicMeasure::from_pairs([(x("0"), 0.5), (x("1"), 0.5)]);
        assert_abs_diff_eq!(total_variation(&a, &a), 0.0);
        assert_abs_diff_eq!(total_variation(&a, &b), 0.1, epsilon = 1e-15);
        let d0 = AtomicMeasure::dirac(x("0"));
        let d1 = AtomicMeasure::dirac(x("1"));
        assert_abs_diff_eq!(total_variation(&d0, &d1), 1.0);
    }

    #[test]
    fn table_round_trip() {
        let m = AtomicMeasure::from_pairs([(x("010"), 0.123456789012345678), (x("111"), 1e-9)]);
        let back = AtomicMeasure::from_table(&m.to_table()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn population_state_checks_total_mass() {
        let eta = AtomicMeasure::from_pairs([(x("0"), 0.7)]);
        let rho = AtomicMeasure::from_pairs([(x("1"), 0.3)]);
        assert!(PopulationState::new(eta.clone(), rho).is_ok());
        assert!(matches!(
            PopulationState::new(eta, AtomicMeasure::zero()),
            Err(MeasureError::NotAPopulation(_))
        ));
    }
}
