//! Finite-agent cohort simulator with paired policy comparison.
//!
//! Noise is organized as one counter-keyed stream per (replication, period,
//! stage), consumed in slot order with a fixed draw count per slot, so the
//! randomness an agent sees is independent of the policy being evaluated.
//! That is what makes the paired design clean: two policies on the same
//! replication share every draw until their agent histories diverge.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::adp::{
    self, adjusted_impactability, impactability, AdpError, BiasWeights, CandidateSet, MAX_ROUNDS,
    ROW_GEN_TOL,
};
use crate::measures::{radon_nikodym, AtomicMeasure, CovariateVector, MeasureError, PopulationState};
use crate::model::ModelSpec;
use crate::policies::{adp_policy, myopic_policy, PolicyError, SelectionResult};
use crate::stats::{paired_t, StatsError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Adp(#[from] AdpError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("config invalid: {0}")]
    Config(String),
}

/// One simulated patient slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Agent {
    pub covariates: CovariateVector,
    pub treated: bool,
    pub alive: bool,
    /// Slots vacated by death are refilled with initial_cohort = false;
    /// replacements never count toward outcome metrics.
    pub initial_cohort: bool,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub n: usize,
    pub m: usize,
    /// Horizon in 90-day periods.
    pub horizon: usize,
    pub replications: usize,
    pub base_seed: u64,
    /// Periods between re-solves of the equilibrium weights.
    pub resolve_every: usize,
    /// Fraction of the initial cohort drawn from the high-impact stratum.
    pub cohort_mix: f64,
    /// Row-generation tolerance for the embedded solves.
    pub tol: f64,
    /// Realize tau by deterministic top-score assignment instead of
    /// per-agent Bernoulli draws (variance-reduction variant).
    pub deterministic_assignment: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            m: 100,
            horizon: 10,
            replications: 500,
            base_seed: 0,
            resolve_every: 1,
            cohort_mix: 0.5,
            tol: ROW_GEN_TOL,
            deterministic_assignment: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.m > self.n {
            return Err(SimError::Config(format!("m = {} exceeds n = {}", self.m, self.n)));
        }
        if self.horizon == 0 {
            return Err(SimError::Config("horizon must be at least 1".into()));
        }
        if self.replications == 0 {
            return Err(SimError::Config("replications must be at least 1".into()));
        }
        if self.resolve_every == 0 {
            return Err(SimError::Config("resolve_every must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.cohort_mix) {
            return Err(SimError::Config(format!("cohort_mix {} outside [0, 1]", self.cohort_mix)));
        }
        Ok(())
    }

    pub fn capacity_ratio(&self) -> f64 {
        self.m as f64 / self.n as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    /// Never treat.
    None,
    /// Rank by impactability at lambda = 0.
    Myopic,
    /// Solve for bias weights and rank by adjusted impactability.
    Adp,
    /// Rank by adjusted impactability under frozen weights.
    Fixed(BiasWeightsKey),
}

/// The parts of BiasWeights a policy actually consumes, comparable bitwise.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasWeightsKey {
    pub w: Vec<f64>,
    pub lambda: f64,
}

impl From<&BiasWeights> for BiasWeightsKey {
    fn from(bw: &BiasWeights) -> Self {
        Self { w: bw.w.clone(), lambda: bw.lambda }
    }
}

impl BiasWeightsKey {
    fn as_weights(&self) -> BiasWeights {
        let mut bw = BiasWeights::myopic(self.w.len());
        bw.w = self.w.clone();
        bw.lambda = self.lambda;
        bw
    }
}

/// Outcomes of one simulated episode, attributed to the initial cohort.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub home_days_per_patient_period: f64,
    pub per_period_totals: Vec<f64>,
    /// Deaths among the initial cohort.
    pub deaths: usize,
    /// Periods an initial-cohort agent spent in treatment.
    pub treated_patient_periods: usize,
}

#[derive(Debug, Clone)]
pub struct ComparisonResult {
    pub mean_a: f64,
    pub mean_b: f64,
    pub mean_diff: f64,
    pub t_statistic: f64,
    pub p_value: f64,
    pub annual_gain_per_1000: f64,
}

/// RNG stages, one independent stream each per (replication, period).
#[derive(Clone, Copy)]
enum Stage {
    Cohort = 0,
    Assignment = 1,
    Dropout = 2,
    Mortality = 3,
    Evolution = 4,
    Inflow = 5,
}

fn stream(base_seed: u64, replication: u64, period: u64, stage: Stage) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[0..8].copy_from_slice(&base_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&replication.to_le_bytes());
    seed[16..24].copy_from_slice(&period.to_le_bytes());
    seed[24..32].copy_from_slice(&(stage as u64).to_le_bytes());
    ChaCha8Rng::from_seed(seed)
}

fn sample_measure(m: &AtomicMeasure, u: f64) -> CovariateVector {
    let target = u * m.mass();
    let mut acc = 0.0;
    let mut last = None;
    for (x, w) in m.atoms() {
        acc += w;
        last = Some(x);
        if target < acc {
            return x.clone();
        }
    }
    last.expect("sampling from a nonempty measure").clone()
}

/// The high-impact stratum: the smallest prefix of inflow atoms, ranked by
/// impactability at lambda = 0 (descending, ties lexicographic), whose mass
/// reaches `quantile`. Substitute for an enrollment flag: these are the
/// patients a capacity-constrained program would plausibly target.
pub fn high_impact_stratum(spec: &ModelSpec, quantile: f64) -> AtomicMeasure {
    let mut ranked: Vec<(&CovariateVector, f64, f64)> = spec
        .inflow
        .atoms()
        .map(|(x, w)| (x, w, impactability(spec, x, 0.0)))
        .collect();
    ranked.sort_by(|a, b| b.2.total_cmp(&a.2));
    let mut out = AtomicMeasure::zero();
    let mut acc = 0.0;
    for (x, w, _) in ranked {
        out.add_weight(x.clone(), w);
        acc += w;
        if acc >= quantile {
            break;
        }
    }
    out.normalized().expect("stratum is nonempty")
}

fn initial_cohort(spec: &ModelSpec, cfg: &SimConfig, replication: u64) -> Vec<Agent> {
    let stratum = high_impact_stratum(spec, cfg.cohort_mix);
    let mut rng = stream(cfg.base_seed, replication, 0, Stage::Cohort);
    let stratum_slots = (cfg.cohort_mix * cfg.n as f64).floor() as usize;
    (0..cfg.n)
        .map(|slot| {
            let u = rng.random::<f64>();
            let source = if slot < stratum_slots { &stratum } else { &spec.inflow };
            Agent {
                covariates: sample_measure(source, u),
                treated: false,
                alive: true,
                initial_cohort: true,
            }
        })
        .collect()
}

fn empirical_state(agents: &[Agent], n: usize) -> PopulationState {
    let w = 1.0 / n as f64;
    let mut eta = AtomicMeasure::zero();
    let mut rho = AtomicMeasure::zero();
    for a in agents {
        debug_assert!(a.alive);
        if a.treated {
            rho.add_weight(a.covariates.clone(), w);
        } else {
            eta.add_weight(a.covariates.clone(), w);
        }
    }
    PopulationState::new(eta, rho).expect("n alive agents have total mass 1")
}

struct EpisodeState {
    weights: Option<BiasWeights>,
}

fn policy_action(
    spec: &ModelSpec,
    cfg: &SimConfig,
    policy: &Policy,
    state: &PopulationState,
    period: usize,
    ep: &mut EpisodeState,
) -> Result<Option<SelectionResult>, SimError> {
    match policy {
        Policy::None => Ok(None),
        Policy::Myopic => Ok(Some(myopic_policy(spec, state, cfg.capacity_ratio(), 0.0)?)),
        Policy::Fixed(key) => {
            Ok(Some(adp_policy(spec, state, cfg.capacity_ratio(), &key.as_weights())?))
        }
        Policy::Adp => {
            // The candidate set over the full cube does not depend on the
            // population, so re-solving on the cadence reproduces the same
            // weights; skip the redundant solves.
            if ep.weights.is_none() || (period % cfg.resolve_every == 0 && spec.p > crate::model::P_MAX_EXACT)
            {
                let extra: Vec<CovariateVector> = state.total().support().cloned().collect();
                let cand = CandidateSet::default_for(spec, &extra);
                let dstar = adp::mortality_threshold(spec, &cand, cfg.capacity_ratio())?;
                let bw = adp::row_generation(
                    spec,
                    &cand,
                    dstar,
                    cfg.capacity_ratio(),
                    cfg.tol,
                    MAX_ROUNDS,
                )?;
                ep.weights = Some(bw);
            }
            let bw = ep.weights.as_ref().expect("weights just solved");
            Ok(Some(adp_policy(spec, state, cfg.capacity_ratio(), bw)?))
        }
    }
}

/// Realizes the action measure on agents: untreated agents enter treatment
/// with probability g(x) = tau(x)/eta(x), in slot order, capped so the
/// treated count never exceeds m. Consumes exactly one draw per slot.
fn realize_assignment<F>(
    agents: &mut [Agent],
    sel: &SelectionResult,
    eta: &AtomicMeasure,
    m: usize,
    rng: &mut ChaCha8Rng,
    deterministic: bool,
    score: F,
) -> Result<usize, SimError>
where
    F: Fn(&CovariateVector) -> f64,
{
    let g = radon_nikodym(&sel.tau, eta)?;
    let mut treated_count = agents.iter().filter(|a| a.treated).count();
    let mut entered = 0;

    if deterministic {
        // drain the stream identically to the stochastic branch
        for _ in 0..agents.len() {
            let _ = rng.random::<f64>();
        }
        let target = ((sel.tau.mass() * agents.len() as f64).round() as usize)
            .min(m.saturating_sub(treated_count));
        let mut order: Vec<usize> = (0..agents.len()).filter(|&i| !agents[i].treated).collect();
        order.sort_by(|&i, &j| {
            score(&agents[j].covariates)
                .total_cmp(&score(&agents[i].covariates))
                .then(i.cmp(&j))
        });
        for &i in order.iter() {
            if entered >= target {
                break;
            }
            if sel.tau.weight(&agents[i].covariates) > 0.0 {
                agents[i].treated = true;
                entered += 1;
            }
        }
        return Ok(entered);
    }

    for agent in agents.iter_mut() {
        let u = rng.random::<f64>();
        if agent.treated {
            continue;
        }
        if treated_count < m && u < g.eval(&agent.covariates) {
            agent.treated = true;
            treated_count += 1;
            entered += 1;
        }
    }
    Ok(entered)
}

/// Runs one episode under the given policy. Periods proceed through the
/// seven stages: action, dropout, freeze, reward, mortality, covariate
/// evolution, inflow replacement. Deterministic for a fixed
/// (base_seed, replication).
pub fn run_episode(
    spec: &ModelSpec,
    cfg: &SimConfig,
    policy: &Policy,
    replication: u64,
) -> Result<EpisodeResult, SimError> {
    cfg.validate()?;
    let mut agents = initial_cohort(spec, cfg, replication);
    let mut ep = EpisodeState { weights: None };
    let mut per_period_totals = Vec::with_capacity(cfg.horizon);
    let mut deaths = 0usize;
    let mut treated_patient_periods = 0usize;

    for period in 0..cfg.horizon {
        let t = period as u64;
        // (I) action
        let state = empirical_state(&agents, cfg.n);
        let sel = policy_action(spec, cfg, policy, &state, period, &mut ep)?;
        let mut assign_rng = stream(cfg.base_seed, replication, t, Stage::Assignment);
        if let Some(sel) = &sel {
            let bw_key = match policy {
                Policy::Fixed(key) => Some(key.as_weights()),
                Policy::Adp => ep.weights.clone(),
                _ => None,
            };
            let score = |x: &CovariateVector| match &bw_key {
                Some(bw) => adjusted_impactability(spec, x, bw),
                None => impactability(spec, x, 0.0),
            };
            realize_assignment(
                &mut agents,
                sel,
                &state.untreated,
                cfg.m,
                &mut assign_rng,
                cfg.deterministic_assignment,
                score,
            )?;
        } else {
            for _ in 0..agents.len() {
                let _ = assign_rng.random::<f64>();
            }
        }

        // (II) dropout
        let mut dropout_rng = stream(cfg.base_seed, replication, t, Stage::Dropout);
        for agent in agents.iter_mut() {
            let u = dropout_rng.random::<f64>();
            if agent.treated && u < spec.p0 {
                agent.treated = false;
            }
        }

        // (III) treatment set frozen; (IV) reward accrual
        let mut period_total = 0.0;
        for agent in agents.iter() {
            if !agent.initial_cohort {
                continue;
            }
            let raw = if agent.treated {
                treated_patient_periods += 1;
                spec.reward1.eval(&agent.covariates)
            } else {
                spec.reward0.eval(&agent.covariates)
            };
            period_total += raw.clamp(0.0, 90.0);
        }
        per_period_totals.push(period_total);

        // (V) mortality
        let mut mort_rng = stream(cfg.base_seed, replication, t, Stage::Mortality);
        for agent in agents.iter_mut() {
            let u = mort_rng.random::<f64>();
            let pd = if agent.treated {
                spec.mortality_treated(&agent.covariates)
            } else {
                spec.mortality_untreated(&agent.covariates)
            };
            if u < pd {
                agent.alive = false;
                if agent.initial_cohort {
                    deaths += 1;
                }
            }
        }

        // (VI) covariate evolution for survivors (fixed draw count per slot)
        let mut evo_rng = stream(cfg.base_seed, replication, t, Stage::Evolution);
        for agent in agents.iter_mut() {
            let draws: Vec<f64> = (0..spec.p).map(|_| evo_rng.random::<f64>()).collect();
            if !agent.alive {
                continue;
            }
            let bits = (0..spec.p)
                .map(|i| u8::from(draws[i] < spec.coord_prob(i, &agent.covariates, agent.treated)))
                .collect();
            agent.covariates = CovariateVector::new(bits).expect("bits are 0/1");
        }

        // (VII) inflow replacement
        let mut inflow_rng = stream(cfg.base_seed, replication, t, Stage::Inflow);
        for agent in agents.iter_mut() {
            let u = inflow_rng.random::<f64>();
            if !agent.alive {
                *agent = Agent {
                    covariates: sample_measure(&spec.inflow, u),
                    treated: false,
                    alive: true,
                    initial_cohort: false,
                };
            }
        }
    }

    let total: f64 = per_period_totals.iter().sum();
    Ok(EpisodeResult {
        home_days_per_patient_period: total / (cfg.n as f64 * cfg.horizon as f64),
        per_period_totals,
        deaths,
        treated_patient_periods,
    })
}

/// Runs both policies on identical cohorts and noise streams, one pair per
/// replication, and compares mean home days with a paired t-test.
/// `mean_diff` is policy `a` minus policy `b`.
pub fn paired_compare(
    spec: &ModelSpec,
    cfg: &SimConfig,
    a: &Policy,
    b: &Policy,
) -> Result<ComparisonResult, SimError> {
    cfg.validate()?;
    if cfg.replications < 2 {
        return Err(SimError::Config("paired comparison needs at least 2 replications".into()));
    }
    let pairs: Vec<Result<(f64, f64), SimError>> = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|r| {
            let ra = run_episode(spec, cfg, a, r)?;
            let rb = run_episode(spec, cfg, b, r)?;
            Ok((ra.home_days_per_patient_period, rb.home_days_per_patient_period))
        })
        .collect();
    let mut xs = Vec::with_capacity(cfg.replications);
    let mut ys = Vec::with_capacity(cfg.replications);
    for pair in pairs {
        let (x, y) = pair?;
        xs.push(x);
        ys.push(y);
    }
    let diffs: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| x - y).collect();
    let tt = paired_t(&diffs)?;
    Ok(ComparisonResult {
        mean_a: xs.iter().sum::<f64>() / xs.len() as f64,
        mean_b: ys.iter().sum::<f64>() / ys.len() as f64,
        mean_diff: tt.mean_diff,
        t_statistic: tt.t_statistic,
        p_value: tt.p_value,
        annual_gain_per_1000: tt.mean_diff * 1000.0 * 365.0 / 90.0,
    })
}
