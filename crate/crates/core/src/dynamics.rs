//! Deterministic measure-valued population transition and the uncontrolled
//! chain used for invariant-distribution analysis.

use thiserror::Error;

use crate::measures::{total_variation, AtomicMeasure, MeasureError, PopulationState};
use crate::model::{ModelError, ModelSpec};

/// Slack allowed when checking tau <= eta atomwise.
const DOMINANCE_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("action not dominated by eta at atom {atom}: tau = {tau}, eta = {eta}")]
    InfeasibleAction { atom: String, tau: f64, eta: f64 },
    #[error("treated survival factor 1 - pd1(x) - p0 is {factor} < 0 at atom {atom}")]
    NegativeSurvival { atom: String, factor: f64 },
    #[error("mortality must be bounded away from zero for the chain to contract; min pd0 = {min}")]
    MortalityNotPositive { min: f64 },
    #[error("no convergence after {iterations} iterations; final total variation {tv}")]
    NoConvergence { iterations: usize, tv: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Outcome of one population transition.
#[derive(Debug, Clone)]
pub struct TransitionReport {
    pub next: PopulationState,
    /// Probability mass exiting through death this period.
    pub mortality_outflow: f64,
    /// 1 - mortality_outflow: expected survival probability of a random
    /// patient.
    pub survival_rate: f64,
}

/// One period of population dynamics: the action moves tau from the
/// untreated to the treated pool, dropout and mortality thin both pools, the
/// covariates of survivors evolve, and deaths are replaced by fresh inflow.
///
/// treated' = sum_x (1 - pd1(x) - p0) Q1(.|x) (rho + tau)(x)
/// untreated' = psi * D
///            + sum_x (1 - pd0(x)) Q0(.|x) (eta - tau)(x)
///            + sum_x p0 (1 - pd0(x)) Q0(.|x) (rho + tau)(x)
/// with D = E_{rho+tau}[pd1 + p0 pd0] + E_{eta-tau}[pd0].
pub fn transition(
    spec: &ModelSpec,
    state: &PopulationState,
    tau: &AtomicMeasure,
) -> Result<TransitionReport, DynamicsError> {
    for (x, w) in tau.atoms() {
        let avail = state.untreated.weight(x);
        if w > avail + DOMINANCE_TOL {
            return Err(DynamicsError::InfeasibleAction {
                atom: x.to_bitstring(),
                tau: w,
                eta: avail,
            });
        }
    }

    let treated_pool = AtomicMeasure::combine(&state.treated, tau, 1.0, 1.0)?;
    let untreated_pool = AtomicMeasure::combine(&state.untreated, tau, 1.0, -1.0)?;

    let mut rho_next = AtomicMeasure::zero();
    let mut eta_next = AtomicMeasure::zero();
    let mut deaths = 0.0;

    for (x, w) in treated_pool.atoms() {
        let pd1 = spec.mortality_treated(x);
        let pd0 = spec.mortality_untreated(x);
        let stay = 1.0 - pd1 - spec.p0;
        if stay < 0.0 {
            return Err(DynamicsError::NegativeSurvival {
                atom: x.to_bitstring(),
                factor: stay,
            });
        }
        deaths += w * (pd1 + spec.p0 * pd0);
        if stay > 0.0 {
            for (succ, q) in spec.transition_distribution(x, true)?.atoms() {
                rho_next.add_weight(succ.clone(), w * stay * q);
            }
        }
        let dropout_stay = spec.p0 * (1.0 - pd0);
        if dropout_stay > 0.0 {
            for (succ, q) in spec.transition_distribution(x, false)?.atoms() {
                eta_next.add_weight(succ.clone(), w * dropout_stay * q);
            }
        }
    }
    for (x, w) in untreated_pool.atoms() {
        let pd0 = spec.mortality_untreated(x);
        deaths += w * pd0;
        let stay = 1.0 - pd0;
        if stay > 0.0 {
            for (succ, q) in spec.transition_distribution(x, false)?.atoms() {
                eta_next.add_weight(succ.clone(), w * stay * q);
            }
        }
    }
    for (x, w) in spec.inflow.atoms() {
        eta_next.add_weight(x.clone(), w * deaths);
    }

    let next = PopulationState::new(eta_next, rho_next)?;
    Ok(TransitionReport {
        next,
        mortality_outflow: deaths,
        survival_rate: 1.0 - deaths,
    })
}

/// One step of the uncontrolled chain: mu Q with
/// Q(.|x) = pd0(x) psi(.) + (1 - pd0(x)) Q0(.|x).
pub fn uncontrolled_step(spec: &ModelSpec, mu: &AtomicMeasure) -> AtomicMeasure {
    let mut out = AtomicMeasure::zero();
    let mut deaths = 0.0;
    for (x, w) in mu.atoms() {
        let pd0 = spec.mortality_untreated(x);
        deaths += w * pd0;
        let stay = 1.0 - pd0;
        if stay > 0.0 {
            let d = spec
                .transition_distribution(x, false)
                .expect("uncontrolled_step requires p <= P_MAX_EXACT");
            for (succ, q) in d.atoms() {
                out.add_weight(succ.clone(), w * stay * q);
            }
        }
    }
    for (x, w) in spec.inflow.atoms() {
        out.add_weight(x.clone(), w * deaths);
    }
    out.prune();
    out
}

/// Fixed-point iteration mu <- mu Q until total variation between successive
/// iterates falls to `tol`. Returns the limit and the number of steps taken.
pub fn find_invariant(
    spec: &ModelSpec,
    mu0: &AtomicMeasure,
    tol: f64,
    max_iter: usize,
) -> Result<(AtomicMeasure, usize), DynamicsError> {
    assert!(tol > 0.0);
    let min_pd0 = spec.pd0.min_over_cube();
    if min_pd0 <= 0.0 {
        return Err(DynamicsError::MortalityNotPositive { min: min_pd0 });
    }
    // The chain contracts in total variation at rate at most 1 - min_pd0
    // (every row carries at least min_pd0 mass of psi), so a successive-step
    // gap of tol * min_pd0 puts the iterate within tol of the fixed point.
    let stop = tol * min_pd0;
    let mut mu = mu0.clone();
    let mut tv = f64::INFINITY;
    for it in 0..=max_iter {
        let next = uncontrolled_step(spec, &mu);
        tv = total_variation(&next, &mu);
        if tv <= stop {
            return Ok((mu, it));
        }
        mu = next;
    }
    Err(DynamicsError::NoConvergence { iterations: max_iter, tv })
}
