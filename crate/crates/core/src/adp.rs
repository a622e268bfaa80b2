//! Equilibrium dual machinery: basis drift coefficients, impactability
//! scores, the row-generation solve for bias weights, the mortality
//! threshold, and an LP-duality self-check.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::lp::{self, LinearProgram, Relation, Status};
use crate::measures::CovariateVector;
use crate::model::{ModelSpec, P_MAX_EXACT};

/// Default violation tolerance for row generation.
pub const ROW_GEN_TOL: f64 = 1e-7;
/// Default cap on row-generation rounds.
pub const MAX_ROUNDS: usize = 500;

#[derive(Debug, Error)]
pub enum AdpError {
    #[error("candidate set must be nonempty")]
    EmptyCandidateSet,
    #[error("row generation hit the round cap {rounds}; max remaining violation {max_violation}")]
    MaxRoundsExceeded {
        rounds: usize,
        max_violation: f64,
        best: Box<BiasWeights>,
    },
    #[error("master infeasible; this signals a bug, the master always admits a feasible point")]
    MasterInfeasible,
    #[error("master unbounded even with every candidate row; the candidate set admits no equilibrium")]
    MasterUnbounded,
    #[error("finite primal over the generated atoms is infeasible; widen the candidate set")]
    PrimalInfeasible,
    #[error(transparent)]
    Lp(#[from] lp::LpError),
}

/// Solution of the equilibrium dual: basis weights, the capacity prices
/// zeta0/zeta1, and the mortality multiplier lambda.
#[derive(Debug, Clone)]
pub struct BiasWeights {
    pub w: Vec<f64>,
    pub lambda: f64,
    pub zeta0: f64,
    pub zeta1: f64,
    /// Mortality threshold the solve was run against.
    pub delta_star: f64,
    pub objective: f64,
    pub rounds: usize,
    /// Every (x, treated-arm) row added to the master, in insertion order.
    pub generated_rows: Vec<(CovariateVector, bool)>,
    /// Master optimum after each re-solve; non-decreasing.
    pub master_objectives: Vec<f64>,
}

impl BiasWeights {
    /// Weights that make the index policy score pure impactability at
    /// lambda = 0 (the myopic reduction).
    pub fn myopic(num_bases: usize) -> Self {
        Self {
            w: vec![0.0; num_bases],
            lambda: 0.0,
            zeta0: 0.0,
            zeta1: 0.0,
            delta_star: 1.0,
            objective: f64::NAN,
            rounds: 0,
            generated_rows: Vec::new(),
            master_objectives: Vec::new(),
        }
    }
}

/// The finite set of covariate vectors over which subproblems maximize.
/// Sorted and duplicate-free, so argmax tie-breaks are lexicographic.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    points: Vec<CovariateVector>,
}

impl CandidateSet {
    pub fn new(points: Vec<CovariateVector>) -> Result<Self, AdpError> {
        let mut points = points;
        points.sort();
        points.dedup();
        if points.is_empty() {
            return Err(AdpError::EmptyCandidateSet);
        }
        Ok(Self { points })
    }

    /// All 2^p vectors; only sensible for p <= P_MAX_EXACT.
    pub fn full(p: usize) -> Self {
        assert!(p <= P_MAX_EXACT);
        Self { points: CovariateVector::enumerate(p) }
    }

    /// Union of the inflow support, optional extra support (e.g. the current
    /// population), and for small p the whole cube.
    pub fn default_for(spec: &ModelSpec, extra: &[CovariateVector]) -> Self {
        if spec.p <= P_MAX_EXACT {
            return Self::full(spec.p);
        }
        let mut points: Vec<CovariateVector> = spec.inflow.support().cloned().collect();
        points.extend_from_slice(extra);
        Self::new(points).expect("inflow support is nonempty")
    }

    pub fn points(&self) -> &[CovariateVector] {
        &self.points
    }
}

/// Expected one-period basis drift for arm 0 (untreated) or arm 1 (treated):
///   arm 0: (1 - pd0) E_Q0[phi_k | x] + pd0 E_psi[phi_k] - phi_k(x)
///   arm 1: (1 - pd1 - p0) E_Q1[phi_k | x] + p0 (1 - pd0) E_Q0[phi_k | x]
///          + (pd1 + p0 pd0) E_psi[phi_k] - phi_k(x)
pub fn delta_t(spec: &ModelSpec, x: &CovariateVector, treated: bool, k: usize) -> f64 {
    let phi_here = spec.bases[k].eval(x);
    let phi_inflow = spec.expected_basis_inflow(k);
    let pd0 = spec.mortality_untreated(x);
    if !treated {
        (1.0 - pd0) * spec.expected_basis_next(x, false, k) + pd0 * phi_inflow - phi_here
    } else {
        let pd1 = spec.mortality_treated(x);
        (1.0 - pd1 - spec.p0) * spec.expected_basis_next(x, true, k)
            + spec.p0 * (1.0 - pd0) * spec.expected_basis_next(x, false, k)
            + (pd1 + spec.p0 * pd0) * phi_inflow
            - phi_here
    }
}

/// Penalized short-term treatment effect y1_lambda(x) - y0_lambda(x).
pub fn impactability(spec: &ModelSpec, x: &CovariateVector, lambda: f64) -> f64 {
    let (y0, y1) = spec.y_lambda(x, lambda);
    y1 - y0
}

/// Impactability corrected by the weighted drift difference:
/// Delta^lambda(x) - sum_k w_k (delta_t(x, 1, k) - delta_t(x, 0, k)).
pub fn adjusted_impactability(spec: &ModelSpec, x: &CovariateVector, bw: &BiasWeights) -> f64 {
    let mut v = impactability(spec, x, bw.lambda);
    for (k, &wk) in bw.w.iter().enumerate() {
        v -= wk * (delta_t(spec, x, true, k) - delta_t(spec, x, false, k));
    }
    v
}

#[derive(Clone, Copy)]
enum RewardMode {
    /// Effective home-day rewards with the mortality constraint priced by a
    /// lambda column against the given threshold.
    Penalized { delta_star: f64 },
    /// Survival rewards 1 - pd0 and 1 - pd1 - p0 pd0; no lambda column.
    Survival,
}

impl RewardMode {
    fn rewards(&self, spec: &ModelSpec, x: &CovariateVector) -> (f64, f64) {
        match self {
            RewardMode::Penalized { .. } => spec.effective_rewards(x),
            RewardMode::Survival => (
                1.0 - spec.mortality_untreated(x),
                1.0 - spec.exit_prob_treated(x),
            ),
        }
    }
}

/// Runs row generation on the dual master
///   min (m/n) zeta1 + (1 - m/n) zeta0 + delta_star * lambda
/// over variables (w, zeta0, zeta1 free; lambda >= 0), adding the most
/// violated candidate constraint per arm each round until every candidate
/// constraint holds within `tol`.
pub fn row_generation(
    spec: &ModelSpec,
    cand: &CandidateSet,
    delta_star: f64,
    capacity_ratio: f64,
    tol: f64,
    max_rounds: usize,
) -> Result<BiasWeights, AdpError> {
    solve_master(spec, cand, RewardMode::Penalized { delta_star }, capacity_ratio, tol, max_rounds)
}

/// Smallest equilibrium mortality rate achievable within capacity:
/// 1 - (optimal survival objective). Used as the threshold delta_star.
pub fn mortality_threshold(
    spec: &ModelSpec,
    cand: &CandidateSet,
    capacity_ratio: f64,
) -> Result<f64, AdpError> {
    let bw = solve_master(spec, cand, RewardMode::Survival, capacity_ratio, ROW_GEN_TOL, MAX_ROUNDS)?;
    Ok(1.0 - bw.objective)
}

fn solve_master(
    spec: &ModelSpec,
    cand: &CandidateSet,
    mode: RewardMode,
    capacity_ratio: f64,
    tol: f64,
    max_rounds: usize,
) -> Result<BiasWeights, AdpError> {
    assert!(tol > 0.0);
    assert!((0.0..=1.0).contains(&capacity_ratio));
    let kk = spec.num_bases();
    let has_lambda = matches!(mode, RewardMode::Penalized { .. });
    // variable layout: w_0..w_{K-1}, zeta0, zeta1 [, lambda]
    let z0 = kk;
    let z1 = kk + 1;
    let lam = kk + 2;
    let nvars = kk + 2 + usize::from(has_lambda);

    let mut objective = vec![0.0; nvars];
    objective[z0] = 1.0 - capacity_ratio;
    objective[z1] = capacity_ratio;
    if let RewardMode::Penalized { delta_star } = mode {
        objective[lam] = delta_star;
    }

    let constraint_row = |x: &CovariateVector, treated: bool| -> (Vec<f64>, f64) {
        // zeta_b + sum_k w_k Delta_bk(x) + lambda * mortality_b(x) >= y_b(x)
        let mut coeffs = vec![0.0; nvars];
        for k in 0..kk {
            coeffs[k] = delta_t(spec, x, treated, k);
        }
        coeffs[if treated { z1 } else { z0 }] = 1.0;
        if has_lambda {
            coeffs[lam] = if treated {
                spec.exit_prob_treated(x)
            } else {
                spec.mortality_untreated(x)
            };
        }
        let (y0, y1) = mode.rewards(spec, x);
        (coeffs, if treated { y1 } else { y0 })
    };

    let mut rows: Vec<(CovariateVector, bool)> = Vec::new();
    let mut present: BTreeSet<(CovariateVector, bool)> = BTreeSet::new();
    let add_row = |rows: &mut Vec<(CovariateVector, bool)>,
                       present: &mut BTreeSet<(CovariateVector, bool)>,
                       x: &CovariateVector,
                       treated: bool|
     -> bool {
        if present.insert((x.clone(), treated)) {
            rows.push((x.clone(), treated));
            true
        } else {
            false
        }
    };
    let first = &cand.points()[0];
    add_row(&mut rows, &mut present, first, false);
    add_row(&mut rows, &mut present, first, true);

    let mut master_objectives = Vec::new();
    let mut widened = false;
    let mut best: Option<BiasWeights> = None;
    let mut last_violation = f64::INFINITY;

    for round in 1..=max_rounds {
        let mut lp = LinearProgram::new(objective.clone());
        for i in 0..(kk + 2) {
            lp.set_free(i);
        }
        for (x, treated) in &rows {
            let (coeffs, rhs) = constraint_row(x, *treated);
            lp.push_row(coeffs, Relation::Ge, rhs);
        }
        // zeta1 >= zeta0
        let mut beta = vec![0.0; nvars];
        beta[z1] = 1.0;
        beta[z0] = -1.0;
        lp.push_row(beta, Relation::Ge, 0.0);

        let sol = lp::solve(&lp)?;
        match sol.status {
            Status::Infeasible => return Err(AdpError::MasterInfeasible),
            Status::Unbounded => {
                // Few-row masters can be unbounded along w directions; the
                // master over every candidate row is bounded whenever the
                // candidate set admits an equilibrium, so add everything.
                if widened {
                    return Err(AdpError::MasterUnbounded);
                }
                widened = true;
                for x in cand.points() {
                    add_row(&mut rows, &mut present, x, false);
                    add_row(&mut rows, &mut present, x, true);
                }
                continue;
            }
            Status::Optimal => {}
        }
        master_objectives.push(sol.objective_value);

        let bw = BiasWeights {
            w: sol.values[..kk].to_vec(),
            lambda: if has_lambda { sol.values[lam] } else { 0.0 },
            zeta0: sol.values[z0],
            zeta1: sol.values[z1],
            delta_star: match mode {
                RewardMode::Penalized { delta_star } => delta_star,
                RewardMode::Survival => f64::NAN,
            },
            objective: sol.objective_value,
            rounds: round,
            generated_rows: rows.clone(),
            master_objectives: master_objectives.clone(),
        };

        // Subproblems: per arm, the candidate whose constraint is most
        // violated. Sorted candidate order makes ties lexicographic.
        let mut max_violation = 0.0f64;
        let mut new_rows: Vec<(CovariateVector, bool)> = Vec::new();
        for treated in [false, true] {
            let mut worst: Option<(&CovariateVector, f64)> = None;
            for x in cand.points() {
                let (coeffs, rhs) = constraint_row(x, treated);
                let lhs: f64 = coeffs.iter().zip(&sol.values).map(|(c, v)| c * v).sum();
                let violation = rhs - lhs;
                if violation > worst.map_or(0.0, |(_, v)| v) {
                    worst = Some((x, violation));
                }
            }
            if let Some((x, v)) = worst {
                max_violation = max_violation.max(v);
                if v > tol {
                    new_rows.push((x.clone(), treated));
                }
            }
        }

        if max_violation <= tol {
            return Ok(bw);
        }
        best = Some(bw);
        last_violation = max_violation;
        for (x, treated) in new_rows {
            add_row(&mut rows, &mut present, &x, treated);
        }
    }

    Err(AdpError::MaxRoundsExceeded {
        rounds: max_rounds,
        max_violation: last_violation,
        best: Box::new(best.expect("at least one master solved")),
    })
}

/// Solves the finite primal over the candidate atoms
///   max E_xi[y0] + E_rho[y1]
///   s.t. E_xi[Delta_0k] + E_rho[Delta_1k] = 0 for all k,
///        E_xi[pd0] + E_rho[pd1 + p0 pd0] <= delta_star,
///        xi(X) + rho(X) = 1,  rho(X) <= m/n,  xi, rho >= 0
/// and returns |primal optimum - master optimum|.
pub fn duality_gap_check(
    spec: &ModelSpec,
    cand: &CandidateSet,
    bw: &BiasWeights,
    delta_star: f64,
    capacity_ratio: f64,
) -> Result<f64, AdpError> {
    let pts = cand.points();
    let n = pts.len();
    let kk = spec.num_bases();
    // variables: xi weights then rho weights, all >= 0; minimize the negated
    // reward to fit the solver's orientation
    let mut objective = vec![0.0; 2 * n];
    for (i, x) in pts.iter().enumerate() {
        let (y0, y1) = spec.effective_rewards(x);
        objective[i] = -y0;
        objective[n + i] = -y1;
    }
    let mut lp = LinearProgram::new(objective);
    for k in 0..kk {
        let mut coeffs = vec![0.0; 2 * n];
        for (i, x) in pts.iter().enumerate() {
            coeffs[i] = delta_t(spec, x, false, k);
            coeffs[n + i] = delta_t(spec, x, true, k);
        }
        lp.push_row(coeffs, Relation::Eq, 0.0);
    }
    let mut mort = vec![0.0; 2 * n];
    for (i, x) in pts.iter().enumerate() {
        mort[i] = spec.mortality_untreated(x);
        mort[n + i] = spec.exit_prob_treated(x);
    }
    lp.push_row(mort, Relation::Le, delta_star);
    lp.push_row(vec![1.0; 2 * n], Relation::Eq, 1.0);
    let mut cap = vec![0.0; 2 * n];
    cap[n..].fill(1.0);
    lp.push_row(cap, Relation::Le, capacity_ratio);

    let sol = lp::solve(&lp)?;
    match sol.status {
        Status::Optimal => Ok((-sol.objective_value - bw.objective).abs()),
        Status::Infeasible => Err(AdpError::PrimalInfeasible),
        Status::Unbounded => unreachable!("primal feasible set is a subset of the simplex"),
    }
}
