//! Index policies: scoring rules turned into feasible action measures by a
//! fractional-knapsack threshold rule, plus the analytic uniform-density
//! threshold used as a test fixture.

use thiserror::Error;

use crate::adp::{adjusted_impactability, impactability, BiasWeights};
use crate::measures::{AtomicMeasure, CovariateVector, PopulationState};
use crate::model::ModelSpec;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("treated mass {treated} already exceeds capacity ratio {capacity}")]
    CapacityExceeded { treated: f64, capacity: f64 },
}

/// A selected action measure together with the score threshold realizing it.
#[derive(Debug, Clone)]
pub struct SelectionResult {
    pub tau: AtomicMeasure,
    /// Score of the last (possibly fractionally) selected atom; +inf when
    /// nothing is selected.
    pub threshold: f64,
    /// Fraction of the marginal atom selected; 1 when the last atom is taken
    /// fully, 0 when nothing is selected.
    pub boundary_fraction: f64,
}

/// Greedy fractional knapsack over the untreated pool: atoms are ranked by
/// score (descending, ties broken by ascending bitstring), and mass is taken
/// from strictly positive-score atoms until the residual capacity
/// capacity_ratio - mass(rho) runs out, splitting the marginal atom.
pub fn select<F>(
    eta: &AtomicMeasure,
    rho: &AtomicMeasure,
    capacity_ratio: f64,
    score: F,
) -> Result<SelectionResult, PolicyError>
where
    F: Fn(&CovariateVector) -> f64,
{
    let treated = rho.mass();
    if treated > capacity_ratio + 1e-10 {
        return Err(PolicyError::CapacityExceeded { treated, capacity: capacity_ratio });
    }
    let mut residual = (capacity_ratio - treated).max(0.0);

    let mut ranked: Vec<(&CovariateVector, f64, f64)> =
        eta.atoms().map(|(x, w)| (x, w, score(x))).collect();
    // sort_by is stable and atoms() is already in ascending bitstring order,
    // so equal scores fall back to lexicographic order
    ranked.sort_by(|a, b| b.2.total_cmp(&a.2));

    let mut tau = AtomicMeasure::zero();
    let mut threshold = f64::INFINITY;
    let mut boundary_fraction = 0.0;
    for (x, w, s) in ranked {
        if s <= 0.0 || residual <= 0.0 {
            break;
        }
        let take = w.min(residual);
        tau.add_weight(x.clone(), take);
        residual -= take;
        threshold = s;
        boundary_fraction = take / w;
    }
    Ok(SelectionResult { tau, threshold, boundary_fraction })
}

/// Greedy selection on the penalized short-term effect Delta^lambda.
pub fn myopic_policy(
    spec: &ModelSpec,
    state: &PopulationState,
    capacity_ratio: f64,
    lambda: f64,
) -> Result<SelectionResult, PolicyError> {
    debug_assert!(lambda >= 0.0);
    select(&state.untreated, &state.treated, capacity_ratio, |x| {
        impactability(spec, x, lambda)
    })
}

/// Greedy selection on the drift-adjusted impactability score.
pub fn adp_policy(
    spec: &ModelSpec,
    state: &PopulationState,
    capacity_ratio: f64,
    bw: &BiasWeights,
) -> Result<SelectionResult, PolicyError> {
    select(&state.untreated, &state.treated, capacity_ratio, |x| {
        adjusted_impactability(spec, x, bw)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlopeSign {
    Increasing,
    Decreasing,
}

/// Analytic selection boundary for a uniform density on [a, b] with a linear
/// score and capacity fraction M: a decreasing score selects [a, x_M] with
/// x_M = (b - a) M + a; an increasing score selects the mirror interval
/// [x_M', b] with x_M' = (1 - M) b + M a ... the boundary returned here.
pub fn uniform_threshold(a: f64, b: f64, m: f64, slope_sign: SlopeSign) -> f64 {
    assert!(a < b && (0.0..=1.0).contains(&m));
    match slope_sign {
        SlopeSign::Decreasing => (b - a) * m + a,
        SlopeSign::Increasing => (1.0 - m) * b + m * a,
    }
}
