//! Exact linear programming over arbitrary-precision rationals.
//!
//! A dense-tableau two-phase primal simplex. Every quantity is a
//! `BigRational`, so feasibility, optimality and complementary slackness
//! hold with exact equality. Pivoting follows Bland's rule, which makes
//! results reproducible bit for bit.
//!
//! Dual sign convention: the dual objective is `sum_i y_i b_i`. For a
//! minimization, `>=` rows have `y_i >= 0` and `<=` rows have `y_i <= 0`;
//! a maximization flips both.

use num::{BigInt, BigRational, One, Signed, Zero};
use thiserror::Error;

/// Exact rational number used throughout the crate.
pub type Rational = BigRational;

/// Integer-valued rational.
pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// `num / den` as an exact rational. Panics on a zero denominator.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// One row `sum coeffs * x  (relation)  rhs`, stored sparsely.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

/// Variable bounds. `None` means unbounded in that direction.
#[derive(Clone, Debug, PartialEq)]
pub struct Bounds {
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { lower: Some(Rational::zero()), upper: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<Rational>,
    pub sense: Sense,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<Bounds>,
}

impl LinearProgram {
    /// Program with `num_vars` nonnegative variables and a zero objective.
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            objective: vec![Rational::zero(); num_vars],
            sense: Sense::Minimize,
            constraints: Vec::new(),
            bounds: vec![Bounds::default(); num_vars],
        }
    }

    pub fn set_objective(&mut self, objective: Vec<Rational>, sense: Sense) {
        self.objective = objective;
        self.sense = sense;
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, Rational)>, relation: Relation, rhs: Rational) {
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    pub fn set_bounds(&mut self, var: usize, lower: Option<Rational>, upper: Option<Rational>) {
        self.bounds[var] = Bounds { lower, upper };
    }

    fn validate(&self) -> Result<(), LpError> {
        if self.objective.len() != self.num_vars {
            return Err(LpError::Malformed(format!(
                "objective has {} coefficients for {} variables",
                self.objective.len(),
                self.num_vars
            )));
        }
        if self.bounds.len() != self.num_vars {
            return Err(LpError::Malformed(format!(
                "{} bounds for {} variables",
                self.bounds.len(),
                self.num_vars
            )));
        }
        for (r, c) in self.constraints.iter().enumerate() {
            if c.coeffs.is_empty() {
                return Err(LpError::Malformed(format!("constraint {r} is empty")));
            }
            if let Some((v, _)) = c.coeffs.iter().find(|(v, _)| *v >= self.num_vars) {
                return Err(LpError::Malformed(format!(
                    "constraint {r} references undeclared variable {v}"
                )));
            }
        }
        for (v, b) in self.bounds.iter().enumerate() {
            if let (Some(l), Some(u)) = (&b.lower, &b.upper) {
                if l > u {
                    return Err(LpError::Malformed(format!("variable {v} has lower bound above upper")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LpError {
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("objective unbounded at lexicographic stage {0}")]
    UnboundedStage(usize),
    #[error("no objectives given")]
    NoObjectives,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal value per declared variable (empty unless optimal).
    pub x: Vec<Rational>,
    /// Dual value per constraint (empty unless optimal).
    pub duals: Vec<Rational>,
    /// `c_j - sum_i a_ij y_i` per declared variable (empty unless optimal).
    pub reduced_costs: Vec<Rational>,
    pub objective: Rational,
}

impl LpSolution {
    fn empty(status: LpStatus) -> Self {
        LpSolution {
            status,
            x: Vec::new(),
            duals: Vec::new(),
            reduced_costs: Vec::new(),
            objective: Rational::zero(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Result of a pure feasibility query.
#[derive(Clone, Debug, PartialEq)]
pub enum Feasibility {
    Feasible(Vec<Rational>),
    Infeasible,
}

/// Maps a declared variable onto tableau columns: `x = shift + sum sign * col`.
#[derive(Clone, Debug)]
struct VarMap {
    shift: Rational,
    terms: Vec<(usize, bool)>,
}

#[derive(Clone, Debug)]
struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    ncols: usize,
    art_start: usize,
    unit_col: Vec<usize>,
    barred: Vec<bool>,
    cost: Vec<Rational>,
    d: Vec<Rational>,
    pivots: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let mut prow = std::mem::take(&mut self.rows[r]);
        let piv = prow[c].clone();
        if !piv.is_one() {
            for v in prow.iter_mut() {
                if !v.is_zero() {
                    *v = &*v / &piv;
                }
            }
            self.rhs[r] = &self.rhs[r] / &piv;
        }
        let nz: Vec<usize> = (0..self.ncols).filter(|&k| !prow[k].is_zero()).collect();
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][c].clone();
            if f.is_zero() {
                continue;
            }
            let row = &mut self.rows[i];
            for &k in &nz {
                row[k] -= &f * &prow[k];
            }
            if !prhs.is_zero() {
                self.rhs[i] -= &f * &prhs;
            }
        }
        let f = self.d[c].clone();
        if !f.is_zero() {
            for &k in &nz {
                self.d[k] -= &f * &prow[k];
            }
        }
        self.rows[r] = prow;
        self.basis[r] = c;
        self.pivots += 1;
    }

    fn price(&mut self, cost: Vec<Rational>) {
        let mut d = cost.clone();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for (k, v) in self.rows[r].iter().enumerate() {
                if !v.is_zero() {
                    d[k] -= cb * v;
                }
            }
        }
        self.cost = cost;
        self.d = d;
    }

    /// Bland's rule primal simplex on the current cost row.
    fn optimize(&mut self, allow_art: bool) -> Outcome {
        loop {
            let limit = if allow_art { self.ncols } else { self.art_start };
            let entering = (0..limit).find(|&k| !self.barred[k] && self.d[k].is_negative());
            let Some(c) = entering else {
                return Outcome::Optimal;
            };
            let mut best: Option<(usize, Rational)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][c];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[r] / a;
                best = match best {
                    None => Some((r, ratio)),
                    Some((br, bv)) => {
                        if ratio < bv || (ratio == bv && self.basis[r] < self.basis[br]) {
                            Some((r, ratio))
                        } else {
                            Some((br, bv))
                        }
                    }
                };
            }
            match best {
                None => return Outcome::Unbounded,
                Some((r, _)) => self.pivot(r, c),
            }
        }
    }

    /// Duals of the sign-normalized rows for the current cost row.
    fn row_duals(&self) -> Vec<Rational> {
        self.unit_col.iter().map(|&u| &self.cost[u] - &self.d[u]).collect()
    }

    fn column_values(&self) -> Vec<Rational> {
        let mut v = vec![Rational::zero(); self.ncols];
        for (r, &b) in self.basis.iter().enumerate() {
            v[b] = self.rhs[r].clone();
        }
        v
    }
}

/// A program brought to a feasible basis that can be optimized repeatedly,
/// each time restricted to the optimal face of the previous objective.
#[derive(Clone, Debug)]
pub struct StagedLp {
    tab: Tableau,
    vars: Vec<VarMap>,
    /// Original constraints, kept for dual and reduced-cost reporting.
    constraints: Vec<Constraint>,
    /// Per original row: `true` when the row was negated to make its rhs nonnegative.
    flipped: Vec<bool>,
    num_orig_rows: usize,
    current: Option<(Vec<Rational>, Sense)>,
    first_duals: Option<Vec<Rational>>,
    stages: usize,
}

/// Result of one optimization stage.
#[derive(Clone, Debug, PartialEq)]
pub enum StageResult {
    Optimal(Rational),
    Unbounded,
}

impl StagedLp {
    /// Runs phase one. Returns `Ok(None)` when the program is infeasible.
    pub fn new(lp: &LinearProgram) -> Result<Option<StagedLp>, LpError> {
        lp.validate()?;
        let mut vars = Vec::with_capacity(lp.num_vars);
        let mut ncols = 0usize;
        let mut extra_rows: Vec<Constraint> = Vec::new();
        for b in &lp.bounds {
            match (&b.lower, &b.upper) {
                (Some(l), u) => {
                    let col = ncols;
                    ncols += 1;
                    if let Some(u) = u {
                        extra_rows.push(Constraint {
                            coeffs: vec![(col, Rational::one())],
                            relation: Relation::Le,
                            rhs: u - l,
                        });
                    }
                    vars.push(VarMap { shift: l.clone(), terms: vec![(col, true)] });
                }
                (None, Some(u)) => {
                    let col = ncols;
                    ncols += 1;
                    vars.push(VarMap { shift: u.clone(), terms: vec![(col, false)] });
                }
                (None, None) => {
                    let col = ncols;
                    ncols += 2;
                    vars.push(VarMap { shift: Rational::zero(), terms: vec![(col, true), (col + 1, false)] });
                }
            }
        }
        let n_struct = ncols;
        // Rows in column space.
        let mut rows_sparse: Vec<(Vec<(usize, Rational)>, Relation, Rational)> = Vec::new();
        for c in &lp.constraints {
            let mut acc: Vec<(usize, Rational)> = Vec::new();
            let mut rhs = c.rhs.clone();
            for (v, a) in &c.coeffs {
                if a.is_zero() {
                    continue;
                }
                let vm = &vars[*v];
                rhs -= a * &vm.shift;
                for &(col, pos) in &vm.terms {
                    acc.push((col, if pos { a.clone() } else { -a.clone() }));
                }
            }
            rows_sparse.push((acc, c.relation, rhs));
        }
        for c in extra_rows {
            rows_sparse.push((c.coeffs, c.relation, c.rhs));
        }
        let m = rows_sparse.len();
        let mut flipped = vec![false; m];
        let mut rel = Vec::with_capacity(m);
        for (i, row) in rows_sparse.iter_mut().enumerate() {
            if row.2.is_negative() {
                flipped[i] = true;
                for e in row.0.iter_mut() {
                    e.1 = -e.1.clone();
                }
                row.2 = -row.2.clone();
                row.1 = match row.1 {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            rel.push(row.1);
        }
        // Slack / surplus columns.
        let mut slack_col = vec![usize::MAX; m];
        for i in 0..m {
            if rel[i] != Relation::Eq {
                slack_col[i] = ncols;
                ncols += 1;
            }
        }
        let art_start = ncols;
        let mut art_col = vec![usize::MAX; m];
        for i in 0..m {
            if rel[i] != Relation::Le {
                art_col[i] = ncols;
                ncols += 1;
            }
        }
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut unit_col = Vec::with_capacity(m);
        for (i, (coeffs, _, b)) in rows_sparse.into_iter().enumerate() {
            let mut row = vec![Rational::zero(); ncols];
            for (col, a) in coeffs {
                row[col] += a;
            }
            match rel[i] {
                Relation::Le => {
                    row[slack_col[i]] = Rational::one();
                    basis.push(slack_col[i]);
                    unit_col.push(slack_col[i]);
                }
                Relation::Ge => {
                    row[slack_col[i]] = -Rational::one();
                    row[art_col[i]] = Rational::one();
                    basis.push(art_col[i]);
                    unit_col.push(art_col[i]);
                }
                Relation::Eq => {
                    row[art_col[i]] = Rational::one();
                    basis.push(art_col[i]);
                    unit_col.push(art_col[i]);
                }
            }
            rows.push(row);
            rhs.push(b);
        }
        let _ = n_struct;
        let mut tab = Tableau {
            rows,
            rhs,
            basis,
            ncols,
            art_start,
            unit_col,
            barred: vec![false; ncols],
            cost: vec![Rational::zero(); ncols],
            d: vec![Rational::zero(); ncols],
            pivots: 0,
        };
        if ncols > art_start {
            let mut cost = vec![Rational::zero(); ncols];
            for c in cost.iter_mut().skip(art_start) {
                *c = Rational::one();
            }
            tab.price(cost);
            // Phase one is bounded below by zero.
            let _ = tab.optimize(false);
            let infeas: Rational = tab
                .basis
                .iter()
                .zip(&tab.rhs)
                .filter(|(b, _)| **b >= art_start)
                .map(|(_, v)| v.clone())
                .sum();
            if infeas.is_positive() {
                return Ok(None);
            }
            // Drive zero-level artificials out of the basis where possible.
            for r in 0..m {
                if tab.basis[r] < art_start {
                    continue;
                }
                if let Some(c) = (0..art_start).find(|&k| !tab.rows[r][k].is_zero()) {
                    tab.pivot(r, c);
                }
            }
        }
        for k in art_start..ncols {
            tab.barred[k] = true;
        }
        Ok(Some(StagedLp {
            tab,
            vars,
            constraints: lp.constraints.clone(),
            flipped,
            num_orig_rows: lp.constraints.len(),
            current: None,
            first_duals: None,
            stages: 0,
        }))
    }

    /// Optimizes `objective` over the current face.
    pub fn optimize(&mut self, objective: &[Rational], sense: Sense) -> Result<StageResult, LpError> {
        if objective.len() != self.vars.len() {
            return Err(LpError::Malformed(format!(
                "objective has {} coefficients for {} variables",
                objective.len(),
                self.vars.len()
            )));
        }
        let mut cost = vec![Rational::zero(); self.tab.ncols];
        for (v, c) in objective.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let c = if sense == Sense::Maximize { -c.clone() } else { c.clone() };
            for &(col, pos) in &self.vars[v].terms {
                if pos {
                    cost[col] += &c;
                } else {
                    cost[col] -= &c;
                }
            }
        }
        self.tab.price(cost);
        let out = self.tab.optimize(false);
        self.current = Some((objective.to_vec(), sense));
        self.stages += 1;
        match out {
            Outcome::Unbounded => Ok(StageResult::Unbounded),
            Outcome::Optimal => {
                if self.first_duals.is_none() {
                    self.first_duals = Some(self.duals());
                }
                Ok(StageResult::Optimal(self.objective_value(objective)))
            }
        }
    }

    /// Restricts all later stages to the optimal face of the last objective.
    pub fn restrict_to_optimal_face(&mut self) {
        for k in 0..self.tab.art_start {
            if self.tab.d[k].is_positive() {
                self.tab.barred[k] = true;
            }
        }
    }

    /// Current basic solution in terms of the declared variables.
    pub fn point(&self) -> Vec<Rational> {
        let cols = self.tab.column_values();
        self.vars
            .iter()
            .map(|vm| {
                let mut v = vm.shift.clone();
                for &(col, pos) in &vm.terms {
                    if pos {
                        v += &cols[col];
                    } else {
                        v -= &cols[col];
                    }
                }
                v
            })
            .collect()
    }

    fn objective_value(&self, objective: &[Rational]) -> Rational {
        self.point().iter().zip(objective).map(|(x, c)| x * c).sum()
    }

    /// Duals of the original constraints for the most recent objective.
    pub fn duals(&self) -> Vec<Rational> {
        let yn = self.tab.row_duals();
        let maximize = matches!(self.current, Some((_, Sense::Maximize)));
        (0..self.num_orig_rows)
            .map(|i| {
                let mut y = yn[i].clone();
                if self.flipped[i] {
                    y = -y;
                }
                if maximize {
                    y = -y;
                }
                y
            })
            .collect()
    }

    /// Duals recorded at the end of the first optimization stage.
    pub fn first_stage_duals(&self) -> Option<&Vec<Rational>> {
        self.first_duals.as_ref()
    }

    /// Number of pivots performed so far, phase one included.
    pub fn pivot_count(&self) -> usize {
        self.tab.pivots
    }

    fn reduced_costs(&self, objective: &[Rational], duals: &[Rational]) -> Vec<Rational> {
        let mut rc = objective.to_vec();
        for (c, y) in self.constraints.iter().zip(duals) {
            if y.is_zero() {
                continue;
            }
            for (v, a) in &c.coeffs {
                rc[*v] -= a * y;
            }
        }
        rc
    }

    fn solution_with(&self, objective: &[Rational], duals: Vec<Rational>) -> LpSolution {
        let x = self.point();
        let value = x.iter().zip(objective).map(|(a, b)| a * b).sum();
        LpSolution {
            status: LpStatus::Optimal,
            reduced_costs: self.reduced_costs(objective, &duals),
            x,
            duals,
            objective: value,
        }
    }
}

/// Solves `lp` exactly.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let Some(mut st) = StagedLp::new(lp)? else {
        return Ok(LpSolution::empty(LpStatus::Infeasible));
    };
    match st.optimize(&lp.objective, lp.sense)? {
        StageResult::Unbounded => Ok(LpSolution::empty(LpStatus::Unbounded)),
        StageResult::Optimal(_) => {
            let duals = st.duals();
            Ok(st.solution_with(&lp.objective, duals))
        }
    }
}

/// Optimizes the objectives in order, each over the optimal face of the
/// previous ones. The constraints of `lp` are used; its own objective is not.
/// The reported objective value and reduced costs refer to the last stage;
/// the duals are those of the first stage, which remain complementary to
/// the final primal point.
pub fn solve_lexicographic(
    lp: &LinearProgram,
    objectives: &[(Vec<Rational>, Sense)],
) -> Result<LpSolution, LpError> {
    if objectives.is_empty() {
        return Err(LpError::NoObjectives);
    }
    let Some(mut st) = StagedLp::new(lp)? else {
        return Ok(LpSolution::empty(LpStatus::Infeasible));
    };
    for (k, (obj, sense)) in objectives.iter().enumerate() {
        if k > 0 {
            st.restrict_to_optimal_face();
        }
        if let StageResult::Unbounded = st.optimize(obj, *sense)? {
            return Err(LpError::UnboundedStage(k));
        }
    }
    let duals = st.first_stage_duals().cloned().unwrap_or_default();
    let first = &objectives[0].0;
    let mut sol = st.solution_with(first, duals);
    let last = &objectives[objectives.len() - 1].0;
    sol.objective = sol.x.iter().zip(last).map(|(a, b)| a * b).sum();
    Ok(sol)
}

/// Finds any feasible point of the constraints of `lp` (objective ignored).
pub fn solve_feasibility(lp: &LinearProgram) -> Result<Feasibility, LpError> {
    match StagedLp::new(lp)? {
        None => Ok(Feasibility::Infeasible),
        Some(st) => Ok(Feasibility::Feasible(st.point())),
    }
}

/// Evaluates `sum coeffs * x` for a sparse row.
pub fn row_value(coeffs: &[(usize, Rational)], x: &[Rational]) -> Rational {
    coeffs.iter().map(|(v, a)| a * &x[*v]).sum()
}

/// True when `x` satisfies every constraint and bound of `lp` exactly.
pub fn is_feasible_point(lp: &LinearProgram, x: &[Rational]) -> bool {
    if x.len() != lp.num_vars {
        return false;
    }
    for (v, b) in lp.bounds.iter().enumerate() {
        if let Some(l) = &b.lower {
            if &x[v] < l {
                return false;
            }
        }
        if let Some(u) = &b.upper {
            if &x[v] > u {
                return false;
            }
        }
    }
    lp.constraints.iter().all(|c| {
        let lhs = row_value(&c.coeffs, x);
        match c.relation {
            Relation::Le => lhs <= c.rhs,
            Relation::Ge => lhs >= c.rhs,
            Relation::Eq => lhs == c.rhs,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: i64) -> Rational {
        int(v)
    }

    #[test]
    fn single_constraint_min() {
        let mut lp = LinearProgram::new(1);
        lp.set_objective(vec![r(1)], Sense::Minimize);
        lp.add_constraint(vec![(0, r(1))], Relation::Ge, r(1));
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.x, vec![r(1)]);
        assert_eq!(s.duals, vec![r(1)]);
        assert_eq!(s.objective, r(1));
    }

    #[test]
    fn infeasible_pair() {
        let mut lp = LinearProgram::new(1);
        lp.add_constraint(vec![(0, r(1))], Relation::Ge, r(1));
        lp.add_constraint(vec![(0, r(1))], Relation::Le, r(0));
        assert_eq!(solve_feasibility(&lp).unwrap(), Feasibility::Infeasible);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective(vec![r(1), r(1)], Sense::Maximize);
        lp.add_constraint(vec![(0, r(1)), (1, r(-1))], Relation::Le, r(1));
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn lexicographic_tie_break() {
        let mut lp = LinearProgram::new(2);
        lp.add_constraint(vec![(0, r(1)), (1, r(1))], Relation::Eq, r(1));
        let s = solve_lexicographic(
            &lp,
            &[(vec![r(0), r(0)], Sense::Minimize), (vec![r(1), r(0)], Sense::Minimize)],
        )
        .unwrap();
        assert_eq!(s.x, vec![r(0), r(1)]);
    }

    #[test]
    fn lexicographic_unbounded_stage_index() {
        let mut lp = LinearProgram::new(2);
        lp.add_constraint(vec![(0, r(1))], Relation::Le, r(3));
        let err = solve_lexicographic(
            &lp,
            &[(vec![r(1), r(0)], Sense::Maximize), (vec![r(0), r(1)], Sense::Maximize)],
        )
        .unwrap_err();
        assert_eq!(err, LpError::UnboundedStage(1));
    }

    #[test]
    fn one_stage_matches_solve() {
        let mut lp = LinearProgram::new(3);
        lp.set_objective(vec![r(2), r(3), r(1)], Sense::Minimize);
        lp.add_constraint(vec![(0, r(1)), (1, r(1)), (2, r(1))], Relation::Ge, r(4));
        lp.add_constraint(vec![(0, r(1)), (2, r(-1))], Relation::Ge, r(1));
        lp.add_constraint(vec![(2, r(1))], Relation::Le, r(2));
        let a = solve(&lp).unwrap();
        let b = solve_lexicographic(&lp, &[(lp.objective.clone(), Sense::Minimize)]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn feasibility_is_deterministic() {
        let mut lp = LinearProgram::new(2);
        lp.add_constraint(vec![(0, r(1)), (1, r(1))], Relation::Le, r(1));
        let a = solve_feasibility(&lp).unwrap();
        let b = solve_feasibility(&lp).unwrap();
        assert_eq!(a, b);
        assert!(matches!(a, Feasibility::Feasible(_)));
    }

    #[test]
    fn malformed_rejected() {
        let mut lp = LinearProgram::new(1);
        lp.add_constraint(vec![(3, r(1))], Relation::Ge, r(1));
        assert!(matches!(solve(&lp), Err(LpError::Malformed(_))));
        let mut lp = LinearProgram::new(1);
        lp.add_constraint(vec![], Relation::Ge, r(1));
        assert!(matches!(solve(&lp), Err(LpError::Malformed(_))));
    }

    #[test]
    fn bounds_and_free_variables() {
        // min x - y, x in [1, 3], y free, x + y = 2, y <= 5
        let mut lp = LinearProgram::new(2);
        lp.set_objective(vec![r(1), r(-1)], Sense::Minimize);
        lp.set_bounds(0, Some(r(1)), Some(r(3)));
        lp.set_bounds(1, None, None);
        lp.add_constraint(vec![(0, r(1)), (1, r(1))], Relation::Eq, r(2));
        lp.add_constraint(vec![(1, r(1))], Relation::Le, r(5));
        let s = solve(&lp).unwrap();
        assert_eq!(s.x, vec![r(1), r(1)]);
        assert_eq!(s.objective, r(0));
    }

    #[test]
    fn max_sense_duals() {
        // max 3x + 2y, x + y <= 4, x + 3y <= 6, x <= 3
        let mut lp = LinearProgram::new(2);
        lp.set_objective(vec![r(3), r(2)], Sense::Maximize);
        lp.add_constraint(vec![(0, r(1)), (1, r(1))], Relation::Le, r(4));
        lp.add_constraint(vec![(0, r(1)), (1, r(3))], Relation::Le, r(6));
        lp.add_constraint(vec![(0, r(1))], Relation::Le, r(3));
        let s = solve(&lp).unwrap();
        assert_eq!(s.objective, r(11));
        let dual_obj: Rational = s.duals.iter().zip([4, 6, 3]).map(|(y, b)| y * r(b)).sum();
        assert_eq!(dual_obj, r(11));
        assert!(s.duals.iter().all(|y| !y.is_negative()));
    }
}
