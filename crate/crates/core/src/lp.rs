//! Dense two-phase simplex for the small master and verification programs.
//!
//! Instances here are tiny (K + 3 variables, a few hundred rows), so a dense
//! tableau with Dantzig pricing and a Bland fallback is both simple and
//! robust. Free variables are handled by sign splitting; equality rows by
//! artificial variables kept (barred) through phase two so row prices can be
//! read off their reduced costs.

use thiserror::Error;

/// Feasibility tolerance shared with callers.
pub const FEAS_TOL: f64 = 1e-8;
/// Reduced-cost (optimality) tolerance.
pub const OPT_TOL: f64 = 1e-9;
/// Entries at or below this magnitude are never used as pivots.
pub const PIVOT_TOL: f64 = 1e-11;

const BLAND_TRIGGER: usize = 50;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("row {0} has {1} coefficients, expected {2}")]
    BadArity(usize, usize, usize),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// min objective . x subject to rows; variable i is either nonnegative or
/// free (lower bound 0 or -inf, upper bound +inf).
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    /// free[i] = true lifts the nonnegativity bound on variable i.
    pub free: Vec<bool>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self { objective, rows: Vec::new(), free: vec![false; n] }
    }

    pub fn push_row(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        self.rows.push(Row { coeffs, relation, rhs });
    }

    pub fn set_free(&mut self, i: usize) {
        self.free[i] = true;
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: Status,
    /// Variable values (meaningful only when Optimal).
    pub values: Vec<f64>,
    pub objective_value: f64,
    /// Row prices y with y . b = objective at the optimum; y_i <= 0 for <=
    /// rows, y_i >= 0 for >= rows, free for equalities.
    pub dual_values: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
enum ColKind {
    /// Original variable index, with sign (+1, or -1 for the negative part
    /// of a free variable).
    Var(usize, f64),
    Slack(usize),
    Surplus,
    Artificial(usize),
}

struct Tableau {
    body: Vec<Vec<f64>>, // m rows of n coefficients
    rhs: Vec<f64>,
    basis: Vec<usize>, // column index basic in each row
    cols: Vec<ColKind>,
    flipped: Vec<bool>, // row was negated to make rhs >= 0
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let n = lp.num_vars();
    for (i, row) in lp.rows.iter().enumerate() {
        if row.coeffs.len() != n {
            return Err(LpError::BadArity(i, row.coeffs.len(), n));
        }
    }

    let mut cols: Vec<ColKind> = Vec::new();
    for i in 0..n {
        cols.push(ColKind::Var(i, 1.0));
        if lp.free[i] {
            cols.push(ColKind::Var(i, -1.0));
        }
    }
    let structural = cols.len();

    let m = lp.rows.len();
    let mut body: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut flipped = vec![false; m];
    let mut relations = Vec::with_capacity(m);
    for (i, row) in lp.rows.iter().enumerate() {
        let mut sign = 1.0;
        let mut rel = row.relation;
        if row.rhs < 0.0 {
            sign = -1.0;
            flipped[i] = true;
            rel = match row.relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        let mut r: Vec<f64> = cols
            .iter()
            .map(|c| match *c {
                ColKind::Var(v, s) => sign * s * row.coeffs[v],
                _ => unreachable!(),
            })
            .collect();
        r.reserve(2 * m);
        body.push(r);
        rhs.push(sign * row.rhs);
        relations.push(rel);
    }

    // Slack / surplus / artificial columns; artificials start basic except on
    // <= rows where the slack does.
    let mut basis = vec![usize::MAX; m];
    for i in 0..m {
        match relations[i] {
            Relation::Le => {
                let j = add_column(&mut body, &mut cols, ColKind::Slack(i), i, 1.0);
                basis[i] = j;
            }
            Relation::Ge => {
                add_column(&mut body, &mut cols, ColKind::Surplus, i, -1.0);
                let j = add_column(&mut body, &mut cols, ColKind::Artificial(i), i, 1.0);
                basis[i] = j;
            }
            Relation::Eq => {
                let j = add_column(&mut body, &mut cols, ColKind::Artificial(i), i, 1.0);
                basis[i] = j;
            }
        }
    }

    let mut tab = Tableau { body, rhs, basis, cols, flipped };

    // Phase 1: minimize the sum of artificials.
    let phase1_cost: Vec<f64> = tab
        .cols
        .iter()
        .map(|c| if matches!(c, ColKind::Artificial(_)) { 1.0 } else { 0.0 })
        .collect();
    let (p1_obj, _) = optimize(&mut tab, &phase1_cost, true)?;
    if p1_obj > FEAS_TOL {
        return Ok(LpSolution {
            status: Status::Infeasible,
            values: vec![0.0; n],
            objective_value: f64::NAN,
            dual_values: vec![0.0; m],
        });
    }
    drive_out_artificials(&mut tab);

    // Phase 2: the real objective over structural columns.
    let phase2_cost: Vec<f64> = tab
        .cols
        .iter()
        .map(|c| match *c {
            ColKind::Var(v, s) => s * lp.objective[v],
            _ => 0.0,
        })
        .collect();
    let (_, reduced) = optimize(&mut tab, &phase2_cost, false)?;
    let reduced = match reduced {
        Some(r) => r,
        None => {
            return Ok(LpSolution {
                status: Status::Unbounded,
                values: vec![0.0; n],
                objective_value: f64::NEG_INFINITY,
                dual_values: vec![0.0; m],
            });
        }
    };

    // Recover primal values, objective, and row prices.
    let mut values = vec![0.0; n];
    for (row, &bj) in tab.basis.iter().enumerate() {
        if let ColKind::Var(v, s) = tab.cols[bj] {
            values[v] += s * tab.rhs[row];
        }
    }
    let objective_value: f64 = values.iter().zip(&lp.objective).map(|(x, c)| x * c).sum();

    let mut dual_values = vec![0.0; m];
    // Signature column with +1 coefficient and zero phase-2 cost: the
    // artificial where present, otherwise the slack. y_i = -reduced_cost.
    let mut signature = vec![usize::MAX; m];
    for (j, kind) in tab.cols.iter().enumerate() {
        match *kind {
            ColKind::Artificial(i) => signature[i] = j,
            ColKind::Slack(i) if signature[i] == usize::MAX => signature[i] = j,
            _ => {}
        }
    }
    for i in 0..m {
        let j = signature[i];
        debug_assert!(j != usize::MAX);
        let mut y = -reduced[j];
        if tab.flipped[i] {
            y = -y;
        }
        dual_values[i] = y;
    }
    let _ = structural;

    Ok(LpSolution { status: Status::Optimal, values, objective_value, dual_values })
}

fn add_column(body: &mut [Vec<f64>], cols: &mut Vec<ColKind>, kind: ColKind, row: usize, coef: f64) -> usize {
    let j = cols.len();
    cols.push(kind);
    for (i, r) in body.iter_mut().enumerate() {
        r.push(if i == row { coef } else { 0.0 });
    }
    j
}

/// Runs the simplex to optimality on the given cost vector. Returns the
/// objective and the final reduced-cost row, or `(_, None)` when unbounded
/// (phase 2 only; phase 1 is always bounded below by 0).
fn optimize(
    tab: &mut Tableau,
    cost: &[f64],
    phase1: bool,
) -> Result<(f64, Option<Vec<f64>>), LpError> {
    let m = tab.basis.len();
    let ncols = tab.cols.len();

    // Reduced costs r_j = c_j - y . A_j, maintained by elimination of the
    // basic columns.
    let mut reduced = cost.to_vec();
    let mut obj = 0.0;
    for row in 0..m {
        let bj = tab.basis[row];
        let cb = cost[bj];
        if cb != 0.0 {
            for j in 0..ncols {
                reduced[j] -= cb * tab.body[row][j];
            }
            obj += cb * tab.rhs[row];
        }
    }

    let barred = |j: usize, tab: &Tableau| -> bool {
        !phase1 && matches!(tab.cols[j], ColKind::Artificial(_))
    };

    let mut degenerate_streak = 0usize;
    for _pivot in 0..MAX_PIVOTS {
        let use_bland = degenerate_streak >= BLAND_TRIGGER;

        // Entering column.
        let mut enter = None;
        if use_bland {
            for j in 0..ncols {
                if !barred(j, tab) && reduced[j] < -OPT_TOL {
                    enter = Some(j);
                    break;
                }
            }
        } else {
            let mut best = -OPT_TOL;
            for j in 0..ncols {
                if !barred(j, tab) && reduced[j] < best {
                    best = reduced[j];
                    enter = Some(j);
                }
            }
        }
        let enter = match enter {
            Some(j) => j,
            None => return Ok((obj, Some(reduced))), // optimal
        };

        // Ratio test.
        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..m {
            let a = tab.body[i][enter];
            if a > PIVOT_TOL {
                let ratio = tab.rhs[i] / a;
                let better = ratio < best_ratio - 1e-12
                    || (ratio < best_ratio + 1e-12
                        && leave.is_some_and(|l| tab.basis[i] < tab.basis[l]));
                if leave.is_none() || better {
                    best_ratio = ratio;
                    leave = Some(i);
                }
            }
        }
        let leave = match leave {
            Some(i) => i,
            None => {
                if phase1 {
                    return Err(LpError::NumericalFailure(
                        "phase-1 objective unbounded below".into(),
                    ));
                }
                return Ok((obj, None)); // unbounded
            }
        };

        if best_ratio <= 1e-12 {
            degenerate_streak += 1;
        } else {
            degenerate_streak = 0;
        }

        pivot(tab, &mut reduced, &mut obj, leave, enter);
    }
    Err(LpError::NumericalFailure(format!(
        "no convergence after {MAX_PIVOTS} pivots"
    )))
}

fn pivot(tab: &mut Tableau, reduced: &mut [f64], obj: &mut f64, row: usize, col: usize) {
    let m = tab.basis.len();
    let ncols = tab.cols.len();
    let piv = tab.body[row][col];
    debug_assert!(piv.abs() > PIVOT_TOL);

    let inv = 1.0 / piv;
    for j in 0..ncols {
        tab.body[row][j] *= inv;
    }
    tab.rhs[row] *= inv;
    tab.body[row][col] = 1.0;

    for i in 0..m {
        if i == row {
            continue;
        }
        let f = tab.body[i][col];
        if f != 0.0 {
            for j in 0..ncols {
                tab.body[i][j] -= f * tab.body[row][j];
            }
            tab.body[i][col] = 0.0;
            tab.rhs[i] -= f * tab.rhs[row];
        }
    }
    let f = reduced[col];
    if f != 0.0 {
        for j in 0..ncols {
            reduced[j] -= f * tab.body[row][j];
        }
        reduced[col] = 0.0;
        // z' = z + r_enter * theta with theta the (normalized) pivot-row rhs
        *obj += f * tab.rhs[row];
    }
    tab.basis[row] = col;
}

/// Pivots zero-level artificials out of the basis where a structural column
/// is available; rows where none is are redundant and stay inert.
fn drive_out_artificials(tab: &mut Tableau) {
    let m = tab.basis.len();
    let ncols = tab.cols.len();
    for row in 0..m {
        if !matches!(tab.cols[tab.basis[row]], ColKind::Artificial(_)) {
            continue;
        }
        let col = (0..ncols)
            .find(|&j| !matches!(tab.cols[j], ColKind::Artificial(_)) && tab.body[row][j].abs() > PIVOT_TOL);
        if let Some(col) = col {
            // rhs is 0 here (phase 1 ended at 0), so feasibility is kept even
            // when pivoting on a negative entry.
            let mut dummy = vec![0.0; ncols];
            let mut obj = 0.0;
            pivot(tab, &mut dummy, &mut obj, row, col);
        }
    }
}
