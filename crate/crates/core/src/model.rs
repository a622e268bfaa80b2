//! Model primitives: rewards, transition kernels, mortality, dropout, inflow
//! and basis functions, plus spec-file ingestion and a synthetic generator.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measures::{AtomicMeasure, CovariateVector, MASS_TOL};

/// Largest dimension for which successor states are enumerated exactly.
pub const P_MAX_EXACT: usize = 12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("dimension {p} exceeds the exact-enumeration limit {P_MAX_EXACT}; use the sampling path")]
    DimensionTooLarge { p: usize },
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// An affine function of the covariate bits: intercept + sum_i slope_i * x_i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct Affine {
    pub intercept: f64,
    pub slopes: Vec<f64>,
}

impl Affine {
    pub fn new(intercept: f64, slopes: Vec<f64>) -> Self {
        Self { intercept, slopes }
    }

    pub fn constant(c: f64) -> Self {
        Self { intercept: c, slopes: Vec::new() }
    }

    pub fn eval(&self, x: &CovariateVector) -> f64 {
        let mut v = self.intercept;
        for (i, &s) in self.slopes.iter().enumerate() {
            if x.bit(i) == 1 {
                v += s;
            }
        }
        v
    }

    /// Exact expectation under independent per-coordinate success
    /// probabilities: intercept + sum_i slope_i * P(x'_i = 1).
    pub fn expectation_under(&self, probs: &[f64]) -> f64 {
        self.intercept + self.slopes.iter().zip(probs).map(|(s, p)| s * p).sum::<f64>()
    }

    /// Largest value over the binary cube, in closed form.
    pub fn max_over_cube(&self) -> f64 {
        self.intercept + self.slopes.iter().filter(|s| **s > 0.0).sum::<f64>()
    }

    /// Smallest value over the binary cube, in closed form.
    pub fn min_over_cube(&self) -> f64 {
        self.intercept + self.slopes.iter().filter(|s| **s < 0.0).sum::<f64>()
    }
}

// Spec files write affine coefficients as [intercept, slope_1, ..., slope_p].
impl From<Vec<f64>> for Affine {
    fn from(v: Vec<f64>) -> Self {
        if v.is_empty() {
            return Affine::constant(0.0);
        }
        Affine::new(v[0], v[1..].to_vec())
    }
}

impl From<Affine> for Vec<f64> {
    fn from(a: Affine) -> Vec<f64> {
        let mut v = vec![a.intercept];
        v.extend(a.slopes);
        v
    }
}

/// A probability as a function of covariates: either constant or
/// logistic-in-x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbModel {
    Const(f64),
    Logits(Affine),
}

impl ProbModel {
    pub fn eval(&self, x: &CovariateVector) -> f64 {
        match self {
            ProbModel::Const(c) => *c,
            ProbModel::Logits(a) => logistic(a.eval(x)),
        }
    }

    /// Supremum over the binary cube (exact: logistic is monotone in its
    /// linear index).
    pub fn max_over_cube(&self) -> f64 {
        match self {
            ProbModel::Const(c) => *c,
            ProbModel::Logits(a) => logistic(a.max_over_cube()),
        }
    }

    pub fn min_over_cube(&self) -> f64 {
        match self {
            ProbModel::Const(c) => *c,
            ProbModel::Logits(a) => logistic(a.min_over_cube()),
        }
    }
}

/// All model primitives behind exact-evaluation operations.
///
/// Immutable after load; safe to share across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub p: usize,
    /// Raw per-period reward for an untreated patient (home days).
    pub reward0: Affine,
    /// Raw per-period reward for a treated patient (home days).
    pub reward1: Affine,
    /// Row i: logits of P(x'_i = 1 | x) without treatment.
    pub q0_logits: Vec<Affine>,
    /// Row i: logits of P(x'_i = 1 | x) under treatment.
    pub q1_logits: Vec<Affine>,
    pub pd0: ProbModel,
    pub pd1: ProbModel,
    /// Dropout probability, constant across patients.
    pub p0: f64,
    /// Inflow distribution psi as [bitstring, weight] pairs.
    #[serde(with = "inflow_pairs")]
    pub inflow: AtomicMeasure,
    /// Basis functions phi_1..phi_K, affine in x.
    pub bases: Vec<Affine>,
}

mod inflow_pairs {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &AtomicMeasure, s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<(String, f64)> =
            m.atoms().map(|(x, w)| (x.to_bitstring(), w)).collect();
        serde::Serialize::serialize(&pairs, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<AtomicMeasure, D::Error> {
        let pairs: Vec<(String, f64)> = serde::Deserialize::deserialize(d)?;
        let mut m = AtomicMeasure::zero();
        for (bits, w) in pairs {
            let x = CovariateVector::from_bitstring(&bits).map_err(serde::de::Error::custom)?;
            m.add_weight(x, w);
        }
        Ok(m)
    }
}

impl ModelSpec {
    /// Parses and validates a spec file (JSON syntax).
    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let spec: ModelSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serialization")
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |msg: String| Err(ModelError::Validation(msg));
        if self.p == 0 {
            return fail("covariate dimension p must be at least 1".into());
        }
        for (name, a) in [("reward0", &self.reward0), ("reward1", &self.reward1)] {
            if a.slopes.len() != self.p {
                return fail(format!("{name} must have {} slopes, got {}", self.p, a.slopes.len()));
            }
        }
        for (name, rows) in [("q0_logits", &self.q0_logits), ("q1_logits", &self.q1_logits)] {
            if rows.len() != self.p {
                return fail(format!("{name} must have {} rows, got {}", self.p, rows.len()));
            }
            for (i, row) in rows.iter().enumerate() {
                if row.slopes.len() != self.p {
                    return fail(format!("{name} row {i} must have {} slopes", self.p));
                }
            }
        }
        for (name, pm) in [("pd0", &self.pd0), ("pd1", &self.pd1)] {
            match pm {
                ProbModel::Const(c) if !(0.0..=1.0).contains(c) => {
                    return fail(format!("{name} constant {c} outside [0, 1]"));
                }
                ProbModel::Logits(a) if a.slopes.len() != self.p => {
                    return fail(format!("{name} logits must have {} slopes", self.p));
                }
                _ => {}
            }
        }
        if !(0.0..=1.0).contains(&self.p0) {
            return fail(format!("dropout probability p0 = {} outside [0, 1]", self.p0));
        }
        let inflow_mass = self.inflow.mass();
        if (inflow_mass - 1.0).abs() > MASS_TOL {
            return fail(format!("inflow mass {inflow_mass} is not 1"));
        }
        for (x, w) in self.inflow.atoms() {
            if x.dim() != self.p {
                return fail(format!("inflow atom {x} has dimension {} != p = {}", x.dim(), self.p));
            }
            if w < 0.0 {
                return fail(format!("inflow atom {x} has negative weight {w}"));
            }
        }
        if self.bases.is_empty() {
            return fail("at least one basis function is required".into());
        }
        for (k, b) in self.bases.iter().enumerate() {
            if b.slopes.len() != self.p {
                return fail(format!("basis {k} must have {} slopes (affine in x)", self.p));
            }
        }
        // 1 - p_{d,1}(x) - p0 >= 0 everywhere, so the treated survival factor
        // in the transition stays nonnegative. The sup over the cube is exact.
        let worst = 1.0 - self.pd1.max_over_cube() - self.p0;
        if worst < 0.0 {
            return fail(format!(
                "1 - pd1(x) - p0 reaches {worst} < 0 on the cube; transition would go negative"
            ));
        }
        Ok(())
    }

    pub fn num_bases(&self) -> usize {
        self.bases.len()
    }

    pub fn capacity_default() -> f64 {
        0.1
    }

    /// Mortality probability for an untreated patient.
    pub fn mortality_untreated(&self, x: &CovariateVector) -> f64 {
        self.pd0.eval(x)
    }

    /// Mortality probability for a treated patient (pre-dropout).
    pub fn mortality_treated(&self, x: &CovariateVector) -> f64 {
        self.pd1.eval(x)
    }

    /// Period exit probability for a patient in the treated pool, including
    /// post-dropout mortality: p_{d,1}(x) + p0 * p_{d,0}(x).
    pub fn exit_prob_treated(&self, x: &CovariateVector) -> f64 {
        self.pd1.eval(x) + self.p0 * self.pd0.eval(x)
    }

    /// Effective rewards after accounting for dropout:
    /// y0 = reward0, y1 = (1 - p0) * reward1 + p0 * reward0.
    pub fn effective_rewards(&self, x: &CovariateVector) -> (f64, f64) {
        let y0 = self.reward0.eval(x);
        let y1 = (1.0 - self.p0) * self.reward1.eval(x) + self.p0 * y0;
        (y0, y1)
    }

    /// Mortality-penalized rewards (y0_lambda, y1_lambda).
    pub fn y_lambda(&self, x: &CovariateVector, lambda: f64) -> (f64, f64) {
        debug_assert!(lambda >= 0.0);
        let (y0, y1) = self.effective_rewards(x);
        (
            y0 - lambda * self.pd0.eval(x),
            y1 - lambda * self.exit_prob_treated(x),
        )
    }

    /// P(x'_i = 1 | x) under the given arm.
    pub fn coord_prob(&self, i: usize, x: &CovariateVector, treated: bool) -> f64 {
        let rows = if treated { &self.q1_logits } else { &self.q0_logits };
        logistic(rows[i].eval(x))
    }

    fn coord_probs(&self, x: &CovariateVector, treated: bool) -> Vec<f64> {
        (0..self.p).map(|i| self.coord_prob(i, x, treated)).collect()
    }

    /// Exact successor distribution Q_b(.|x) as a product of independent
    /// Bernoulli coordinates. Only available for p <= P_MAX_EXACT.
    pub fn transition_distribution(
        &self,
        x: &CovariateVector,
        treated: bool,
    ) -> Result<AtomicMeasure, ModelError> {
        if self.p > P_MAX_EXACT {
            return Err(ModelError::DimensionTooLarge { p: self.p });
        }
        let probs = self.coord_probs(x, treated);
        let mut out = AtomicMeasure::zero();
        for idx in 0..(1usize << self.p) {
            let succ = CovariateVector::from_index(idx, self.p);
            let mut w = 1.0;
            for (i, &q) in probs.iter().enumerate() {
                w *= if succ.bit(i) == 1 { q } else { 1.0 - q };
            }
            if w != 0.0 {
                out.add_weight(succ, w);
            }
        }
        Ok(out)
    }

    /// Exact E[phi_k(x') | x] under the given arm; closed form because the
    /// bases are affine.
    pub fn expected_basis_next(&self, x: &CovariateVector, treated: bool, k: usize) -> f64 {
        self.bases[k].expectation_under(&self.coord_probs(x, treated))
    }

    /// Exact E_psi[phi_k(x')].
    pub fn expected_basis_inflow(&self, k: usize) -> f64 {
        self.inflow.expectation(|x| self.bases[k].eval(x))
    }

    /// Samples one covariate evolution step for a single patient.
    pub fn sample_transition<R: Rng>(
        &self,
        x: &CovariateVector,
        treated: bool,
        rng: &mut R,
    ) -> CovariateVector {
        let bits = (0..self.p)
            .map(|i| u8::from(rng.random::<f64>() < self.coord_prob(i, x, treated)))
            .collect();
        CovariateVector::new(bits).expect("bits are 0/1")
    }

    /// Samples a fresh arrival from the inflow distribution.
    pub fn sample_inflow<R: Rng>(&self, rng: &mut R) -> CovariateVector {
        let u = rng.random::<f64>() * self.inflow.mass();
        let mut acc = 0.0;
        let mut last = None;
        for (x, w) in self.inflow.atoms() {
            acc += w;
            last = Some(x);
            if u < acc {
                return x.clone();
            }
        }
        last.expect("inflow is nonempty").clone()
    }
}

/// Parameters for [`gen_synthetic`]. Defaults give a nontrivial selection
/// problem: treatment reduces every coordinate's onset probability and
/// mortality, and rewards decrease with comorbidity count.
#[derive(Debug, Clone)]
pub struct SyntheticParams {
    /// Amount subtracted from every treated-kernel intercept.
    pub treatment_logit_shift: f64,
    /// Amount subtracted from the treated-mortality intercept (the scale of
    /// p_{d,1} relative to p_{d,0}).
    pub mortality_logit_shift: f64,
    pub dropout: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            treatment_logit_shift: 1.0,
            mortality_logit_shift: 0.7,
            dropout: 0.1,
        }
    }
}

/// Deterministic synthetic model generator: same seed, same spec.
pub fn gen_synthetic(seed: u64, p: usize, num_bases: usize) -> ModelSpec {
    gen_synthetic_with(seed, p, num_bases, &SyntheticParams::default())
}

pub fn gen_synthetic_with(
    seed: u64,
    p: usize,
    num_bases: usize,
    params: &SyntheticParams,
) -> ModelSpec {
    assert!(p >= 1 && num_bases >= 1);
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(p as u64).to_le_bytes());
    key[16..24].copy_from_slice(&(num_bases as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);

    // Rewards decrease in comorbidity count; treatment adds a small direct lift.
    let penalties: Vec<f64> = (0..p).map(|_| -(2.0 + 8.0 * rng.random::<f64>())).collect();
    let reward0 = Affine::new(85.0, penalties.clone());
    let lifts: Vec<f64> = penalties.iter().map(|c| c * -(0.05 + 0.15 * rng.random::<f64>())).collect();
    let reward1 = Affine::new(85.0 + 1.0 + 2.0 * rng.random::<f64>(), {
        penalties.iter().zip(&lifts).map(|(c, l)| c + l).collect()
    });

    // Sticky comorbidities: strong own-coordinate persistence, weak
    // cross-effects, negative onset intercepts.
    let mut q0_logits = Vec::with_capacity(p);
    for i in 0..p {
        let mut slopes: Vec<f64> = (0..p).map(|_| -0.3 + 0.6 * rng.random::<f64>()).collect();
        slopes[i] = 2.0 + 2.0 * rng.random::<f64>();
        q0_logits.push(Affine::new(-2.5 + 1.0 * rng.random::<f64>(), slopes));
    }
    // Treatment strictly reduces each coordinate's probability: identical
    // slopes, strictly smaller intercept.
    let q1_logits: Vec<Affine> = q0_logits
        .iter()
        .map(|a| Affine::new(a.intercept - params.treatment_logit_shift, a.slopes.clone()))
        .collect();

    // Mortality grows with comorbidity burden; treated mortality uses the
    // same slopes with a strictly smaller intercept so pd1(x) < pd0(x).
    let pd_slopes: Vec<f64> = (0..p).map(|_| 0.1 + 0.4 * rng.random::<f64>()).collect();
    let pd0_intercept = -2.8 + 0.4 * rng.random::<f64>();
    let pd0 = ProbModel::Logits(Affine::new(pd0_intercept, pd_slopes.clone()));
    let pd1 = ProbModel::Logits(Affine::new(
        pd0_intercept - params.mortality_logit_shift,
        pd_slopes,
    ));

    // Inflow over a handful of random states, biased toward low burden.
    let n_atoms = (1usize << p.min(P_MAX_EXACT)).min(8).max(2);
    let mut inflow = AtomicMeasure::zero();
    while inflow.num_atoms() < n_atoms {
        let bits = (0..p).map(|_| u8::from(rng.random::<f64>() < 0.3)).collect();
        let x = CovariateVector::new(bits).unwrap();
        if inflow.weight(&x) == 0.0 {
            inflow.add_weight(x, 0.2 + rng.random::<f64>());
        }
    }
    let inflow = inflow.normalized().unwrap();

    // Health-proxy bases: affine with slopes on the burden scale.
    let bases = (0..num_bases)
        .map(|_| {
            Affine::new(
                2.0 * rng.random::<f64>(),
                (0..p).map(|_| -1.0 + 2.0 * rng.random::<f64>()).collect(),
            )
        })
        .collect();

    let spec = ModelSpec {
        p,
        reward0,
        reward1,
        q0_logits,
        q1_logits,
        pd0,
        pd1,
        p0: params.dropout,
        inflow,
        bases,
    };
    spec.validate().expect("generated spec is valid by construction");
    spec
}

/// A hand-set p=1 spec with constant mortality, shared by tests across
/// modules.
#[cfg(test)]
pub(crate) fn tiny_spec() -> ModelSpec {
    ModelSpec {
        p: 1,
        reward0: Affine::new(80.0, vec![0.0]),
        reward1: Affine::new(90.0, vec![0.0]),
        q0_logits: vec![Affine::new(-0.5, vec![1.0])],
        q1_logits: vec![Affine::new(-1.5, vec![1.0])],
        pd0: ProbModel::Const(0.05),
        pd1: ProbModel::Const(0.02),
        p0: 0.1,
        inflow: AtomicMeasure::dirac(CovariateVector::from_bitstring("1").unwrap()),
        bases: vec![Affine::new(0.0, vec![1.0])],
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
    fn load_round_trip() {
        let spec = tiny_spec();
        let back = ModelSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(spec, back);
    }

    #[test]
    fn load_rejects_bad_dropout() {
        let mut spec = tiny_spec();
        spec.p0 = 1.5;
        let err = ModelSpec::from_json(&spec.to_json()).unwrap_err();
        assert!(matches!(err, ModelError::Validation(_)));
    }

    #[test]
    fn load_rejects_deficient_inflow() {
        let mut spec = tiny_spec();
        spec.inflow = AtomicMeasure::from_pairs([(x("1"), 0.98)]);
        assert!(matches!(
            ModelSpec::from_json(&spec.to_json()),
            Err(ModelError::Validation(_))
        ));
    }

    #[test]
    fn y_lambda_examples() {
        let mut spec = tiny_spec();
        spec.p0 = 0.0;
        let (y0, y1) = spec.y_lambda(&x("0"), 0.0);
        assert_abs_diff_eq!(y0, 80.0);
        assert_abs_diff_eq!(y1, 90.0);
        // constant pd0 = 0.05, lambda = 10 shifts y0 by -0.5
        let (y0l, _) = spec.y_lambda(&x("0"), 10.0);
        assert_abs_diff_eq!(y0l, 79.5, epsilon = 1e-12);
    }

    #[test]
    fn effective_reward_accounts_for_dropout() {
        let spec = tiny_spec(); // p0 = 0.1, reward1 = 90, reward0 = 80
        let (_, y1) = spec.effective_rewards(&x("0"));
        assert_abs_diff_eq!(y1, 89.0, epsilon = 1e-12);
        // and the penalized treated reward at lambda = 10
        let (_, y1l) = spec.y_lambda(&x("0"), 10.0);
        assert_abs_diff_eq!(y1l, 89.0 - 10.0 * (0.02 + 0.1 * 0.05), epsilon = 1e-12);
    }

    #[test]
    fn transition_distribution_single_bernoulli() {
        let mut spec = tiny_spec();
        // P(x'=1 | x=0) = logistic(z) = 0.3
        let z = (0.3f64 / 0.7).ln();
        spec.q0_logits = vec![Affine::new(z, vec![0.0])];
        let d = spec.transition_distribution(&x("0"), false).unwrap();
        assert_abs_diff_eq!(d.weight(&x("0")), 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(d.weight(&x("1")), 0.3, epsilon = 1e-12);
    }

    #[test]
    fn transition_distribution_degenerate_and_uniform() {
        let mut spec = tiny_spec();
        spec.q0_logits = vec![Affine::new(-1e3, vec![0.0])];
        let d = spec.transition_distribution(&x("1"), false).unwrap();
        assert_abs_diff_eq!(d.weight(&x("0")), 1.0, epsilon = 1e-12);

        let spec2 = ModelSpec {
            p: 2,
            reward0: Affine::new(80.0, vec![0.0, 0.0]),
            reward1: Affine::new(90.0, vec![0.0, 0.0]),
            q0_logits: vec![Affine::new(0.0, vec![0.0, 0.0]); 2],
            q1_logits: vec![Affine::new(0.0, vec![0.0, 0.0]); 2],
            pd0: ProbModel::Const(0.05),
            pd1: ProbModel::Const(0.02),
            p0: 0.1,
            inflow: AtomicMeasure::dirac(x("11")),
            bases: vec![Affine::new(0.0, vec![1.0, 1.0])],
        };
        let d = spec2.transition_distribution(&x("00"), true).unwrap();
        for (_, w) in d.atoms() {
            assert_abs_diff_eq!(w, 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn expected_basis_next_examples() {
        let mut spec = tiny_spec();
        let z = (0.3f64 / 0.7).ln();
        spec.q0_logits = vec![Affine::new(z, vec![0.0])];
        spec.bases = vec![Affine::constant_with_p(1, 5.0), Affine::new(0.0, vec![1.0]), Affine::new(1.0, vec![2.0])];
        assert_abs_diff_eq!(spec.expected_basis_next(&x("0"), false, 0), 5.0);
        assert_abs_diff_eq!(spec.expected_basis_next(&x("0"), false, 1), 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(spec.expected_basis_next(&x("0"), false, 2), 1.6, epsilon = 1e-12);
    }

    #[test]
    fn expected_basis_matches_enumeration() {
        for seed in 0..10 {
            let spec = gen_synthetic(seed, 4, 3);
            for xv in CovariateVector::enumerate(4) {
                for treated in [false, true] {
                    let d = spec.transition_distribution(&xv, treated).unwrap();
                    assert_abs_diff_eq!(d.mass(), 1.0, epsilon = 1e-12);
                    for k in 0..3 {
                        let exact = spec.expected_basis_next(&xv, treated, k);
                        let enumerated = d.expectation(|s| spec.bases[k].eval(s));
                        assert_abs_diff_eq!(exact, enumerated, epsilon = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn y_lambda_affine_in_lambda() {
        let spec = gen_synthetic(3, 5, 2);
        for xv in CovariateVector::enumerate(5).into_iter().step_by(7) {
            let (y0a, y1a) = spec.y_lambda(&xv, 1.0);
            let (y0b, y1b) = spec.y_lambda(&xv, 2.0);
            let slope0 = y0b - y0a;
            let slope1 = y1b - y1a;
            assert_abs_diff_eq!(slope0, -spec.pd0.eval(&xv), epsilon = 1e-9);
            assert_abs_diff_eq!(slope1, -spec.exit_prob_treated(&xv), epsilon = 1e-9);
        }
    }

    #[test]
    fn synthetic_is_deterministic_and_valid() {
        let a = gen_synthetic(7, 6, 4);
        let b = gen_synthetic(7, 6, 4);
        assert_eq!(a, b);
        assert!(ModelSpec::from_json(&a.to_json()).is_ok());
    }

    #[test]
    fn synthetic_treated_mortality_dominated() {
        for seed in [0, 1, 42] {
            let spec = gen_synthetic(seed, 6, 2);
            for xv in CovariateVector::enumerate(6) {
                assert!(spec.pd1.eval(&xv) <= spec.pd0.eval(&xv));
                for i in 0..6 {
                    assert!(spec.coord_prob(i, &xv, true) < spec.coord_prob(i, &xv, false));
                }
            }
        }
    }

    impl Affine {
        fn constant_with_p(p: usize, c: f64) -> Self {
            Affine::new(c, vec![0.0; p])
        }
    }
}
