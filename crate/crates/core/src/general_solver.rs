//! General solver for markets with the extensibility property.
//!
//! Agents are split into segments sharing a common `lambda`, the inverse of
//! the marginal value of money. Starting from `lambda = 0`, the lambdas of
//! the still-active agents are raised together by `a` while prices follow a
//! canonical dual of the parameterized program
//!
//! ```text
//! LP(lambda):  min sum_i lambda_i sum_j d_ij x_ij
//!              sum_j a_ijk x_ij >= r_ik,   sum_i x_ij <= 1,   x >= 0
//! DLP(lambda): lambda_i d_ij >= sum_k a_ijk alpha_ik - p_j,   alpha, p >= 0
//! ```
//!
//! The surplus `f_a(S) = m(S) - pay_S` of every active subset is tracked;
//! the first `a` where its minimum reaches zero freezes the maximal tight
//! set, the others move up by a small `eps`, and the search repeats. A
//! final feasibility program picks an optimal allocation that spends every
//! budget exactly.

use num::{One, Signed, Zero};
use thiserror::Error;

use crate::format::EquilibriumRecord;
use crate::market_model::{Allocation, MarketError, MarketInstance, PriceVector};
use crate::rational_lp::{self, int, Feasibility, LinearProgram, LpError, LpStatus, Rational, Relation, Sense, StageResult, StagedLp};
use crate::submodular::{members, minimum_of_table, ENUMERATION_LIMIT};

pub type LambdaVector = Vec<Rational>;

/// Bisection steps before switching to exact zero steps.
pub const BISECTION_LIMIT: usize = 64;
/// Cap on search iterations (doubling, bisection and zero steps) per segment.
pub const ITERATION_CAP: usize = 200;
/// Cap on halvings when choosing `eps`.
pub const EPSILON_HALVINGS: usize = 128;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeneralError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error("stagewise program infeasible: covering constraints exceed supply")]
    StageLpInfeasible,
    #[error("no valid dual exists at the requested lambda")]
    ValidDualInfeasible,
    #[error("valid prices are unbounded: some saturated good has no unsaturated substitute")]
    ValidDualUnbounded,
    #[error("no tight set found while raising lambda")]
    NoTightSet,
    #[error("zero search exhausted after {0} iterations")]
    BracketExhausted(usize),
    #[error("no separating eps found")]
    EpsilonNotFound,
    #[error("final budget-exact allocation program is infeasible")]
    FinalFeasibilityInfeasible,
    #[error("first segment is tight at lambda = 0")]
    DegenerateInstance,
    #[error("{0} active agents exceed the enumeration limit")]
    TooManyAgents(usize),
    #[error("trace does not match the instance: {0}")]
    BadTrace(String),
}

fn var(m: usize, i: usize, j: usize) -> usize {
    i * m + j
}

/// Covering and supply rows over variables `x_ij` at index `i * m + j`.
pub struct ParamLp {
    pub lp: LinearProgram,
    /// Row index of covering row `k` of agent `i`, if emitted.
    pub cover_rows: Vec<Vec<Option<usize>>>,
    pub supply_rows: Vec<usize>,
}

impl ParamLp {
    /// `(alpha, p)` read from the duals of an optimal solution.
    pub fn dual_of(&self, duals: &[Rational]) -> (Vec<Vec<Rational>>, PriceVector) {
        let alpha = self
            .cover_rows
            .iter()
            .map(|rows| rows.iter().map(|r| r.map(|r| duals[r].clone()).unwrap_or_default()).collect())
            .collect();
        let p = self.supply_rows.iter().map(|&r| -duals[r].clone()).collect();
        (alpha, p)
    }
}

fn base_lp(inst: &MarketInstance) -> ParamLp {
    let n = inst.num_agents();
    let m = inst.num_goods();
    let mut lp = LinearProgram::new(n * m);
    let mut cover_rows = Vec::with_capacity(n);
    for (i, a) in inst.agents.iter().enumerate() {
        let mut rows = Vec::new();
        for c in &a.covers {
            let coeffs: Vec<(usize, Rational)> = c
                .coeffs
                .iter()
                .enumerate()
                .filter(|(_, v)| !v.is_zero())
                .map(|(j, v)| (var(m, i, j), v.clone()))
                .collect();
            if coeffs.is_empty() {
                if c.rhs.is_positive() {
                    lp.add_constraint(vec![(var(m, i, 0), Rational::zero())], Relation::Ge, c.rhs.clone());
                    rows.push(Some(lp.constraints.len() - 1));
                } else {
                    rows.push(None);
                }
            } else {
                lp.add_constraint(coeffs, Relation::Ge, c.rhs.clone());
                rows.push(Some(lp.constraints.len() - 1));
            }
        }
        cover_rows.push(rows);
    }
    let mut supply_rows = Vec::with_capacity(m);
    for j in 0..m {
        lp.add_constraint((0..n).map(|i| (var(m, i, j), Rational::one())).collect(), Relation::Le, Rational::one());
        supply_rows.push(lp.constraints.len() - 1);
    }
    ParamLp { lp, cover_rows, supply_rows }
}

/// LP(lambda) with its objective set; its duals give DLP(lambda).
pub fn build_param_lp(inst: &MarketInstance, lambda: &[Rational]) -> ParamLp {
    let mut p = base_lp(inst);
    let m = inst.num_goods();
    let mut obj = vec![Rational::zero(); inst.num_agents() * m];
    for (i, a) in inst.agents.iter().enumerate() {
        for j in 0..m {
            obj[var(m, i, j)] = &lambda[i] * &a.delays[j];
        }
    }
    p.lp.set_objective(obj, Sense::Minimize);
    p
}

fn to_allocation(x: &[Rational], n: usize, m: usize) -> Allocation {
    Allocation { x: (0..n).map(|i| x[i * m..(i + 1) * m].to_vec()).collect() }
}

fn delay_objective(inst: &MarketInstance, set: &[usize]) -> Vec<Rational> {
    let m = inst.num_goods();
    let mut obj = vec![Rational::zero(); inst.num_agents() * m];
    for &i in set {
        for j in 0..m {
            obj[var(m, i, j)] = inst.agents[i].delays[j].clone();
        }
    }
    obj
}

/// Optimal face of lexicographic delay minimization, groups in the given order.
fn face_for_order(inst: &MarketInstance, order: &[Vec<usize>]) -> Result<StagedLp, GeneralError> {
    let base = base_lp(inst);
    let Some(mut st) = StagedLp::new(&base.lp)? else {
        return Err(GeneralError::StageLpInfeasible);
    };
    for group in order {
        if group.is_empty() {
            continue;
        }
        if let StageResult::Unbounded = st.optimize(&delay_objective(inst, group), Sense::Minimize)? {
            return Err(GeneralError::StageLpInfeasible);
        }
        st.restrict_to_optimal_face();
    }
    Ok(st)
}

/// Agents grouped by equal lambda, largest lambda first.
fn groups_desc(lambda: &[Rational]) -> Vec<Vec<usize>> {
    let mut values: Vec<&Rational> = lambda.iter().collect();
    values.sort();
    values.dedup();
    values
        .into_iter()
        .rev()
        .map(|v| (0..lambda.len()).filter(|&i| &lambda[i] == v).collect())
        .collect()
}

/// Minimizes total delay of the largest-lambda group, then of the next
/// group on that optimal face, and so on.
pub fn stagewise_optimal(inst: &MarketInstance, lambda: &[Rational]) -> Result<Allocation, GeneralError> {
    let st = face_for_order(inst, &groups_desc(lambda))?;
    Ok(to_allocation(&st.point(), inst.num_agents(), inst.num_goods()))
}

/// Frozen agent set with its final lambda.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrozenSegment {
    pub agents: Vec<usize>,
    pub lambda: Rational,
}

/// Iteration record of one segment search.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NextSegTrace {
    /// Minimum surplus at `a = 0`.
    pub g0: Rational,
    /// `(a, g(a))` during upper-bracket doubling.
    pub doubling: Vec<(Rational, Rational)>,
    /// `(a_lo, a_hi, minimizer at a_lo, minimizer at a_hi)` per bisection step.
    pub bisection: Vec<(Rational, Rational, Vec<usize>, Vec<usize>)>,
    /// `(candidate a, g(candidate))` per zero step.
    pub zero_steps: Vec<(Rational, Rational)>,
    pub a_star: Rational,
    pub set: Vec<usize>,
    pub lambda: Rational,
    /// `None` when the segment was the last one.
    pub epsilon: Option<Rational>,
    pub epsilon_tries: usize,
}

impl NextSegTrace {
    pub fn iterations(&self) -> usize {
        self.doubling.len() + self.bisection.len() + self.zero_steps.len()
    }
}

/// Canonical dual: prices `p_hat + delta` with `delta` maximal in sum.
struct ValidSystem {
    lp: LinearProgram,
    delta: Vec<Option<usize>>,
    alpha: Vec<(usize, usize, usize)>,
    a_var: Option<usize>,
}

/// Dual constraints of the active agents with frozen goods pinned at
/// `p_hat`, optionally with `a` as a variable scaling the active lambdas.
fn valid_system(
    inst: &MarketInstance,
    active: &[usize],
    x_hat: &Allocation,
    p_hat: &[Rational],
    lambda: &[Rational],
    with_a: Option<(&Rational, &Rational)>,
) -> Result<ValidSystem, GeneralError> {
    let m = inst.num_goods();
    let mut nvars = 0;
    let mut delta = vec![None; m];
    for j in 0..m {
        let total = x_hat.good_total(j);
        let outside = x_hat.x.iter().enumerate().any(|(i, row)| !active.contains(&i) && !row[j].is_zero());
        if !outside && total == Rational::one() {
            delta[j] = Some(nvars);
            nvars += 1;
        }
    }
    let mut alpha = Vec::new();
    for &i in active {
        for (k, c) in inst.agents[i].covers.iter().enumerate() {
            let lhs: Rational = c.coeffs.iter().zip(&x_hat.x[i]).map(|(a, x)| a * x).sum();
            if lhs == c.rhs {
                alpha.push((i, k, nvars));
                nvars += 1;
            }
        }
    }
    let a_var = with_a.map(|_| {
        nvars += 1;
        nvars - 1
    });
    let mut lp = LinearProgram::new(nvars);
    if let (Some(v), Some((lo, hi))) = (a_var, with_a) {
        lp.set_bounds(v, Some(lo.clone()), Some(hi.clone()));
    }
    for &i in active {
        let agent = &inst.agents[i];
        for j in 0..m {
            let mut coeffs = Vec::new();
            for &(ai, k, v) in &alpha {
                if ai == i && !agent.covers[k].coeffs[j].is_zero() {
                    coeffs.push((v, agent.covers[k].coeffs[j].clone()));
                }
            }
            if let Some(v) = delta[j] {
                coeffs.push((v, -Rational::one()));
            }
            if let Some(v) = a_var {
                if !agent.delays[j].is_zero() {
                    coeffs.push((v, -agent.delays[j].clone()));
                }
            }
            let rhs = &lambda[i] * &agent.delays[j] + &p_hat[j];
            let used = !x_hat.x[i][j].is_zero();
            if coeffs.is_empty() {
                let ok = if used { rhs.is_zero() } else { !rhs.is_negative() };
                if !ok {
                    return Err(GeneralError::ValidDualInfeasible);
                }
                continue;
            }
            lp.add_constraint(coeffs, if used { Relation::Eq } else { Relation::Le }, rhs);
        }
    }
    Ok(ValidSystem { lp, delta, alpha, a_var })
}

/// Dual pair `(alpha, p)` at `lambda` that keeps every frozen agent's
/// `alpha` and every good touched by frozen agents or left unsaturated at
/// `p_hat`, raises the other prices as far as dual optimality with `x_hat`
/// allows, and recomputes `alpha` for the active agents.
fn canonical_valid_dual(
    inst: &MarketInstance,
    active: &[usize],
    x_hat: &Allocation,
    p_hat: &[Rational],
    alpha_hat: &[Vec<Rational>],
    lambda: &[Rational],
) -> Result<(Vec<Vec<Rational>>, PriceVector), GeneralError> {
    let mut sys = valid_system(inst, active, x_hat, p_hat, lambda, None)?;
    let mut obj = vec![Rational::zero(); sys.lp.num_vars];
    for v in sys.delta.iter().flatten() {
        obj[*v] = Rational::one();
    }
    sys.lp.set_objective(obj, Sense::Maximize);
    let sol = if sys.lp.constraints.is_empty() {
        // Nothing constrains the free prices.
        if sys.delta.iter().any(|d| d.is_some()) {
            return Err(GeneralError::ValidDualUnbounded);
        }
        rational_lp::LpSolution {
            status: LpStatus::Optimal,
            x: vec![Rational::zero(); sys.lp.num_vars],
            duals: vec![],
            reduced_costs: vec![],
            objective: Rational::zero(),
        }
    } else {
        rational_lp::solve(&sys.lp)?
    };
    match sol.status {
        LpStatus::Infeasible => return Err(GeneralError::ValidDualInfeasible),
        LpStatus::Unbounded => return Err(GeneralError::ValidDualUnbounded),
        LpStatus::Optimal => {}
    }
    let p: PriceVector =
        p_hat.iter().zip(&sys.delta).map(|(p, d)| d.map_or_else(|| p.clone(), |v| p + &sol.x[v])).collect();
    let mut alpha = alpha_hat.to_vec();
    for &i in active {
        for v in alpha[i].iter_mut() {
            *v = Rational::zero();
        }
    }
    for &(i, k, v) in &sys.alpha {
        alpha[i][k] = sol.x[v].clone();
    }
    Ok((alpha, p))
}

/// Per-phase data: the optimal face for the current lambda ordering and,
/// for every nonempty active subset `S`, the goods held by `S` in an
/// optimum maximizing the delay of `S`.
struct Phase {
    x_ref: Allocation,
    held: Vec<Vec<Rational>>,
    budget: Vec<Rational>,
}

pub struct SolverContext<'a> {
    pub instance: &'a MarketInstance,
    pub frozen: Vec<FrozenSegment>,
    pub active: Vec<usize>,
    pub lambda: LambdaVector,
    pub prices: PriceVector,
    pub alpha: Vec<Vec<Rational>>,
    phase: Phase,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneralEquilibrium {
    pub prices: PriceVector,
    pub allocation: Allocation,
    pub lambda: LambdaVector,
    /// Dual of covering row `k` of agent `i`.
    pub alpha: Vec<Vec<Rational>>,
    /// Agent sets in increasing lambda order.
    pub segments: Vec<FrozenSegment>,
    pub trace: Vec<NextSegTrace>,
}

impl GeneralEquilibrium {
    pub fn to_record(&self) -> EquilibriumRecord {
        EquilibriumRecord {
            prices: self.prices.clone(),
            lambda: self.lambda.clone(),
            allocation: self.allocation.clone(),
            segments: self.segments.iter().map(|s| (s.agents.clone(), s.lambda.clone())).collect(),
        }
    }
}

fn build_phase(inst: &MarketInstance, active: &[usize], frozen: &[FrozenSegment]) -> Result<Phase, GeneralError> {
    let mut order = vec![active.to_vec()];
    order.extend(frozen.iter().rev().map(|s| s.agents.clone()));
    let face = face_for_order(inst, &order)?;
    let n = inst.num_agents();
    let m = inst.num_goods();
    let x_ref = to_allocation(&face.point(), n, m);
    if active.len() > ENUMERATION_LIMIT {
        return Err(GeneralError::TooManyAgents(active.len()));
    }
    let mut held = Vec::with_capacity((1 << active.len()) - 1);
    let mut budget = Vec::with_capacity((1 << active.len()) - 1);
    for mask in 1u32..(1 << active.len()) {
        let set = members(active, mask);
        let mut st = face.clone();
        if let StageResult::Unbounded = st.optimize(&delay_objective(inst, &set), Sense::Maximize)? {
            return Err(GeneralError::StageLpInfeasible);
        }
        let x = st.point();
        held.push((0..m).map(|j| set.iter().map(|&i| &x[var(m, i, j)]).sum()).collect());
        budget.push(set.iter().map(|&i| &inst.agents[i].budget).sum());
    }
    Ok(Phase { x_ref, held, budget })
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).filter(|(x, _)| !x.is_zero()).map(|(x, y)| x * y).sum()
}

/// Outcome of a surplus sweep at one value of `a`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sweep {
    pub value: Rational,
    pub mask: u32,
    pub set: Vec<usize>,
    pub prices: PriceVector,
    pub alpha: Vec<Vec<Rational>>,
    pub table: Vec<Rational>,
}

impl<'a> SolverContext<'a> {
    /// Context with every agent active at `lambda = 0` and zero prices.
    pub fn new(inst: &'a MarketInstance) -> Result<Self, GeneralError> {
        inst.validate()?;
        let n = inst.num_agents();
        let active: Vec<usize> = (0..n).collect();
        let phase = build_phase(inst, &active, &[])?;
        Ok(SolverContext {
            instance: inst,
            frozen: Vec::new(),
            active,
            lambda: vec![Rational::zero(); n],
            prices: vec![Rational::zero(); inst.num_goods()],
            alpha: inst.agents.iter().map(|a| vec![Rational::zero(); a.covers.len()]).collect(),
            phase,
        })
    }

    /// Reference allocation the valid duals are defined against.
    pub fn reference_allocation(&self) -> &Allocation {
        &self.phase.x_ref
    }

    /// `lambda^cur + a` on active agents.
    pub fn lambda_at(&self, a: &Rational) -> LambdaVector {
        let mut l = self.lambda.clone();
        for &i in &self.active {
            l[i] += a;
        }
        l
    }

    /// Canonical valid dual at `lambda^cur + a 1_{active}`.
    pub fn valid_dual(&self, a: &Rational) -> Result<(Vec<Vec<Rational>>, PriceVector), GeneralError> {
        if a.is_zero() {
            return Ok((self.alpha.clone(), self.prices.clone()));
        }
        canonical_valid_dual(
            self.instance,
            &self.active,
            &self.phase.x_ref,
            &self.prices,
            &self.alpha,
            &self.lambda_at(a),
        )
    }

    /// Surplus of every nonempty active subset at `a`, with the minimum.
    pub fn min_f(&self, a: &Rational) -> Result<Sweep, GeneralError> {
        let (alpha, prices) = self.valid_dual(a)?;
        let table: Vec<Rational> =
            self.phase.held.iter().zip(&self.phase.budget).map(|(y, m)| m - dot(y, &prices)).collect();
        let min = minimum_of_table(&self.active, &table);
        Ok(Sweep { value: min.value, mask: min.mask, set: min.set, prices, alpha, table })
    }

    /// `m(S) - pay_S` at `a` for `S` given as active agent ids.
    pub fn eval_f(&self, a: &Rational, set: &[usize]) -> Result<Rational, GeneralError> {
        let mask = self.mask_of(set);
        let (_, prices) = self.valid_dual(a)?;
        let k = mask as usize - 1;
        Ok(&self.phase.budget[k] - dot(&self.phase.held[k], &prices))
    }

    fn mask_of(&self, set: &[usize]) -> u32 {
        let mut mask = 0u32;
        for (b, i) in self.active.iter().enumerate() {
            if set.contains(i) {
                mask |= 1 << b;
            }
        }
        assert!(mask != 0 && members(&self.active, mask).len() == set.len(), "set must be a nonempty active subset");
        mask
    }

    /// Smallest `a` in `[a_lo, a_hi]` at which some valid dual makes `S`
    /// pay its whole budget, refined until the canonical dual agrees.
    pub fn find_zero_a(&self, set: &[usize], a_lo: &Rational, a_hi: &Rational) -> Result<Rational, GeneralError> {
        let mask = self.mask_of(set);
        let k = mask as usize - 1;
        let held = &self.phase.held[k];
        let need = &self.phase.budget[k] - dot(held, &self.prices);
        let mut lo = a_lo.clone();
        let mut hi = a_hi.clone();
        let mut f_lo = self.eval_f(&lo, set)?;
        let mut f_hi = self.eval_f(&hi, set)?;
        if f_hi.is_zero() {
            return Ok(hi);
        }
        let mut candidate = self.zero_program(held, &need, &lo, &hi)?;
        for _ in 0..ITERATION_CAP {
            let a = match candidate.take() {
                Some(a) => a,
                // Secant step on the current bracket; exact on linear pieces.
                None => &lo + &f_lo * (&hi - &lo) / (&f_lo - &f_hi),
            };
            let f = self.eval_f(&a, set)?;
            if f.is_zero() {
                return Ok(a);
            }
            if f.is_positive() {
                lo = a;
                f_lo = f;
            } else {
                hi = a;
                f_hi = f;
            }
            // Alternate with a bisection so the bracket always shrinks.
            let mid = (&lo + &hi) / int(2);
            let fm = self.eval_f(&mid, set)?;
            if fm.is_zero() {
                return Ok(mid);
            }
            if fm.is_positive() {
                lo = mid;
                f_lo = fm;
            } else {
                hi = mid;
                f_hi = fm;
            }
        }
        Err(GeneralError::BracketExhausted(ITERATION_CAP))
    }

    /// `min a` over `(a, delta, alpha)` valid at `lambda^cur + a` with
    /// `held . (p^cur + delta) >= m(S)`. `None` when infeasible.
    fn zero_program(
        &self,
        held: &[Rational],
        need: &Rational,
        lo: &Rational,
        hi: &Rational,
    ) -> Result<Option<Rational>, GeneralError> {
        let mut sys = match valid_system(
            self.instance,
            &self.active,
            &self.phase.x_ref,
            &self.prices,
            &self.lambda,
            Some((lo, hi)),
        ) {
            Ok(s) => s,
            Err(GeneralError::ValidDualInfeasible) => return Ok(None),
            Err(e) => return Err(e),
        };
        let a_var = sys.a_var.expect("a variable");
        let coeffs: Vec<(usize, Rational)> = sys
            .delta
            .iter()
            .zip(held)
            .filter_map(|(d, y)| d.filter(|_| !y.is_zero()).map(|v| (v, y.clone())))
            .collect();
        if coeffs.is_empty() {
            if need.is_positive() {
                return Ok(None);
            }
        } else {
            sys.lp.add_constraint(coeffs, Relation::Ge, need.clone());
        }
        let mut obj = vec![Rational::zero(); sys.lp.num_vars];
        obj[a_var] = Rational::one();
        sys.lp.set_objective(obj, Sense::Minimize);
        let sol = rational_lp::solve(&sys.lp)?;
        Ok(match sol.status {
            LpStatus::Optimal => Some(sol.x[a_var].clone()),
            _ => None,
        })
    }

    /// Surplus sweep restricted to subsets of `rest` under an ordering in
    /// which `rest` is served first and `tight` next.
    fn certify_split(
        &self,
        a_star: &Rational,
        tight: &[usize],
        rest: &[usize],
        eps_start: &Rational,
        trace: &mut NextSegTrace,
    ) -> Result<(Rational, Phase, Vec<Vec<Rational>>, PriceVector), GeneralError> {
        let inst = self.instance;
        let (alpha_star, p_star) = self.valid_dual(a_star)?;
        let mut frozen = self.frozen.clone();
        frozen.push(FrozenSegment { agents: tight.to_vec(), lambda: &self.lambda[self.active[0]] + a_star });
        let phase = build_phase(inst, rest, &frozen)?;
        let lam_star = self.lambda_at(a_star);
        let tight_budget: Rational = tight.iter().map(|&i| &inst.agents[i].budget).sum();
        let tight_held: Vec<Rational> =
            (0..inst.num_goods()).map(|j| tight.iter().map(|&i| &phase.x_ref.x[i][j]).sum()).collect();
        let mut eps = eps_start.clone();
        for _ in 0..EPSILON_HALVINGS {
            trace.epsilon_tries += 1;
            let mut lam = lam_star.clone();
            for &i in rest {
                lam[i] += &eps;
            }
            match canonical_valid_dual(inst, rest, &phase.x_ref, &p_star, &alpha_star, &lam) {
                Ok((alpha, prices)) => {
                    let sc = phase.held.iter().zip(&phase.budget).all(|(y, m)| *m >= dot(y, &prices));
                    let bb = dot(&tight_held, &prices) == tight_budget;
                    if sc && bb {
                        return Ok((eps, phase, alpha, prices));
                    }
                }
                Err(GeneralError::ValidDualInfeasible) | Err(GeneralError::ValidDualUnbounded) => {}
                Err(e) => return Err(e),
            }
            eps /= int(2);
        }
        Err(GeneralError::EpsilonNotFound)
    }

    /// Separation `eps` for the agents still active after freezing `tight` at `a_star`.
    pub fn compute_epsilon(&self, tight: &[usize], a_star: &Rational) -> Result<Rational, GeneralError> {
        let rest: Vec<usize> = self.active.iter().copied().filter(|i| !tight.contains(i)).collect();
        if rest.is_empty() {
            return Ok(Rational::one());
        }
        let mut t = NextSegTrace::default();
        Ok(self.certify_split(a_star, tight, &rest, &Rational::one(), &mut t)?.0)
    }

    /// Locates the next tight set and its critical `a`.
    fn search(&self, trace: &mut NextSegTrace) -> Result<(Rational, Vec<usize>), GeneralError> {
        let zero = Rational::zero();
        let start = self.min_f(&zero)?;
        trace.g0 = start.value.clone();
        log::debug!("segment search entry: g(0) = {}", start.value);
        if start.value.is_zero() {
            if self.frozen.is_empty() {
                return Err(GeneralError::DegenerateInstance);
            }
            return Ok((zero, start.set));
        }
        let mut a0 = zero;
        let mut s0 = start.mask;
        let mut a1 = Rational::one();
        let mut sweep1;
        loop {
            sweep1 = self.min_f(&a1)?;
            trace.doubling.push((a1.clone(), sweep1.value.clone()));
            if !sweep1.value.is_positive() {
                break;
            }
            if trace.doubling.len() >= ITERATION_CAP / 2 {
                return Err(GeneralError::NoTightSet);
            }
            a0 = a1.clone();
            s0 = sweep1.mask;
            a1 *= int(2);
        }
        let mut s1 = sweep1.mask;
        let mut bisections = 0;
        loop {
            if trace.iterations() >= ITERATION_CAP {
                return Err(GeneralError::BracketExhausted(ITERATION_CAP));
            }
            if s0 == s1 || bisections >= BISECTION_LIMIT {
                let set = members(&self.active, s1);
                let cand = self.find_zero_a(&set, &a0, &a1)?;
                let sweep = self.min_f(&cand)?;
                trace.zero_steps.push((cand.clone(), sweep.value.clone()));
                if sweep.value.is_zero() {
                    return Ok((cand, sweep.set));
                }
                a1 = cand;
                s1 = sweep.mask;
                continue;
            }
            trace.bisection.push((a0.clone(), a1.clone(), members(&self.active, s0), members(&self.active, s1)));
            let mid = (&a0 + &a1) / int(2);
            let sweep = self.min_f(&mid)?;
            if sweep.value.is_positive() {
                a0 = mid;
                s0 = sweep.mask;
            } else {
                a1 = mid;
                s1 = sweep.mask;
            }
            bisections += 1;
        }
    }

    /// Grows `set` while some superset within the active agents is also tight.
    fn expand(&self, a: &Rational, set: Vec<usize>) -> Result<Vec<usize>, GeneralError> {
        let sweep = self.min_f(a)?;
        let mut mask = self.mask_of(&set);
        loop {
            let grown = (1u32..(1 << self.active.len()))
                .filter(|&m| m & mask == mask && m != mask)
                .filter(|&m| !sweep.table[m as usize - 1].is_positive())
                .fold(mask, |acc, m| acc | m);
            if grown == mask || !sweep.table[grown as usize - 1].is_zero() {
                break;
            }
            mask = grown;
        }
        Ok(members(&self.active, mask))
    }

    fn commit(&mut self, a_star: &Rational, tight: Vec<usize>, trace: &mut NextSegTrace, eps: Option<&Rational>) -> Result<(), GeneralError> {
        let seg_lambda = &self.lambda[self.active[0]] + a_star;
        trace.a_star = a_star.clone();
        trace.set = tight.clone();
        trace.lambda = seg_lambda.clone();
        let rest: Vec<usize> = self.active.iter().copied().filter(|i| !tight.contains(i)).collect();
        if rest.is_empty() {
            let (alpha, prices) = self.valid_dual(a_star)?;
            self.lambda = self.lambda_at(a_star);
            self.prices = prices;
            self.alpha = alpha;
            self.frozen.push(FrozenSegment { agents: tight, lambda: seg_lambda });
            self.active.clear();
            return Ok(());
        }
        let start = eps.cloned().unwrap_or_else(Rational::one);
        let (found, phase, alpha, prices) = self.certify_split(a_star, &tight, &rest, &start, trace)?;
        if eps.is_some_and(|e| *e != found) {
            return Err(GeneralError::BadTrace("recorded eps does not certify".into()));
        }
        let mut lam = self.lambda_at(a_star);
        for &i in &rest {
            lam[i] += &found;
        }
        trace.epsilon = Some(found);
        self.lambda = lam;
        self.prices = prices;
        self.alpha = alpha;
        self.frozen.push(FrozenSegment { agents: tight, lambda: seg_lambda });
        self.active = rest;
        self.phase = phase;
        Ok(())
    }

    /// Freezes the next segment and advances the context.
    pub fn next_segment(&mut self) -> Result<NextSegTrace, GeneralError> {
        let mut trace = NextSegTrace::default();
        let (a_star, set) = self.search(&mut trace)?;
        let set = self.expand(&a_star, set)?;
        log::debug!("segment {:?} after {} iterations", set, trace.iterations());
        self.commit(&a_star, set, &mut trace, None)?;
        Ok(trace)
    }

    /// Replays a recorded decision without searching.
    pub fn apply_recorded(&mut self, set: &[usize], a_star: &Rational, eps: Option<&Rational>) -> Result<NextSegTrace, GeneralError> {
        if set.is_empty() || set.iter().any(|i| !self.active.contains(i)) {
            return Err(GeneralError::BadTrace(format!("set {set:?} is not an active subset")));
        }
        let check = self.eval_f(a_star, set)?;
        if !check.is_zero() {
            return Err(GeneralError::BadTrace(format!("set {set:?} is not tight at a = {a_star}")));
        }
        let mut trace = NextSegTrace::default();
        self.commit(a_star, set.to_vec(), &mut trace, eps)?;
        Ok(trace)
    }

    /// Budget-exact optimal allocation at the final lambda and prices.
    pub fn finish(&self, trace: Vec<NextSegTrace>) -> Result<GeneralEquilibrium, GeneralError> {
        let inst = self.instance;
        let n = inst.num_agents();
        let m = inst.num_goods();
        let param = build_param_lp(inst, &self.lambda);
        let opt = rational_lp::solve(&param.lp)?;
        if opt.status != LpStatus::Optimal {
            return Err(GeneralError::StageLpInfeasible);
        }
        let mut lp = param.lp.clone();
        let obj: Vec<(usize, Rational)> =
            param.lp.objective.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(v, c)| (v, c.clone())).collect();
        if !obj.is_empty() {
            lp.add_constraint(obj, Relation::Eq, opt.objective.clone());
        }
        for (i, a) in inst.agents.iter().enumerate() {
            let pay: Vec<(usize, Rational)> =
                (0..m).filter(|&j| !self.prices[j].is_zero()).map(|j| (var(m, i, j), self.prices[j].clone())).collect();
            if pay.is_empty() {
                return Err(GeneralError::FinalFeasibilityInfeasible);
            }
            lp.add_constraint(pay, Relation::Eq, a.budget.clone());
        }
        let x = match rational_lp::solve_feasibility(&lp)? {
            Feasibility::Feasible(x) => x,
            Feasibility::Infeasible => return Err(GeneralError::FinalFeasibilityInfeasible),
        };
        Ok(GeneralEquilibrium {
            prices: self.prices.clone(),
            allocation: to_allocation(&x, n, m),
            lambda: self.lambda.clone(),
            alpha: self.alpha.clone(),
            segments: self.frozen.clone(),
            trace,
        })
    }
}

/// Full run: segments until every agent is frozen, then the final allocation.
pub fn solve_general(inst: &MarketInstance) -> Result<GeneralEquilibrium, GeneralError> {
    let mut ctx = SolverContext::new(inst)?;
    let mut trace = Vec::new();
    while !ctx.active.is_empty() {
        let t = ctx.next_segment()?;
        assert!(t.iterations() < ITERATION_CAP, "segment search iteration cap");
        trace.push(t);
    }
    ctx.finish(trace)
}

/// Rebuilds an equilibrium from recorded `(set, a*, eps)` decisions.
pub fn replay_general(
    inst: &MarketInstance,
    decisions: &[(Vec<usize>, Rational, Option<Rational>)],
) -> Result<GeneralEquilibrium, GeneralError> {
    let mut ctx = SolverContext::new(inst)?;
    let mut trace = Vec::new();
    for (set, a, eps) in decisions {
        if ctx.active.is_empty() {
            return Err(GeneralError::BadTrace("more decisions than segments".into()));
        }
        let mut t = ctx.apply_recorded(set, a, eps.as_ref())?;
        if eps.is_none() && !ctx.active.is_empty() {
            return Err(GeneralError::BadTrace("missing eps".into()));
        }
        t.epsilon = eps.clone().or(t.epsilon);
        trace.push(t);
    }
    if !ctx.active.is_empty() {
        return Err(GeneralError::BadTrace("decisions leave active agents".into()));
    }
    ctx.finish(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::market_model::{build_single_machine, build_single_machine_with_horizon};
    use crate::rational_lp::ratio;
    use crate::verifier::verify_equilibrium;

    fn six_with_spare() -> MarketInstance {
        build_single_machine_with_horizon(&corpus::six_agent_budgets(), &[1; 6], 1).unwrap()
    }

    #[test]
    fn six_agents_with_spare_slot() {
        let inst = six_with_spare();
        let eq = solve_general(&inst).unwrap();
        let want = [int(30), int(17), int(9), ratio(13, 3), ratio(8, 3), int(1), int(0)];
        assert_eq!(eq.prices, want);
        let lambdas: Vec<Rational> = eq.segments.iter().map(|s| s.lambda.clone()).collect();
        assert_eq!(lambdas, [int(1), ratio(5, 3), ratio(14, 3), int(8), int(13)]);
        assert_eq!(eq.segments[1].agents, [3, 4]);
        assert!(verify_equilibrium(&inst, &eq.allocation, &eq.prices).unwrap().passed());
    }

    #[test]
    fn no_spare_slot_means_unbounded_prices() {
        let inst = build_single_machine(&corpus::six_agent_budgets(), &[1; 6]).unwrap();
        assert_eq!(solve_general(&inst).unwrap_err(), GeneralError::ValidDualUnbounded);
    }

    #[test]
    fn first_segment_search() {
        let inst = six_with_spare();
        let mut ctx = SolverContext::new(&inst).unwrap();
        assert!(ctx.min_f(&int(0)).unwrap().value.is_positive());
        assert!(ctx.eval_f(&int(1), &[5]).unwrap().is_zero());
        assert!(ctx.eval_f(&ratio(1, 2), &[5]).unwrap().is_positive());
        let t = ctx.next_segment().unwrap();
        assert_eq!((t.set.clone(), t.a_star.clone(), t.lambda.clone()), (vec![5], int(1), int(1)));
        assert!(t.epsilon.as_ref().is_some_and(|e| e.is_positive()));
        assert_eq!(ctx.active, [0, 1, 2, 3, 4]);
    }

    #[test]
    fn valid_prices_never_fall() {
        let inst = six_with_spare();
        let mut ctx = SolverContext::new(&inst).unwrap();
        ctx.next_segment().unwrap();
        let before = ctx.prices.clone();
        for a in [ratio(1, 4), ratio(1, 2), int(1)] {
            let (_, p) = ctx.valid_dual(&a).unwrap();
            assert!(p.iter().zip(&before).all(|(x, y)| x >= y), "a = {a}");
        }
    }

    #[test]
    fn replay_matches_search() {
        let inst = corpus::multi_type_market();
        let eq = solve_general(&inst).unwrap();
        let decisions: Vec<_> = eq.trace.iter().map(|t| (t.set.clone(), t.a_star.clone(), t.epsilon.clone())).collect();
        let again = replay_general(&inst, &decisions).unwrap();
        assert_eq!(again.prices, eq.prices);
        assert_eq!(again.allocation, eq.allocation);
        assert!(verify_equilibrium(&inst, &eq.allocation, &eq.prices).unwrap().passed());
    }

    #[test]
    fn replay_rejects_bad_decisions() {
        let inst = six_with_spare();
        let err = replay_general(&inst, &[(vec![0], int(1), Some(ratio(1, 10)))]).unwrap_err();
        assert!(matches!(err, GeneralError::BadTrace(_)), "{err:?}");
        let err = replay_general(&inst, &[(vec![5], int(1), Some(ratio(1, 10)))]).unwrap_err();
        assert!(matches!(err, GeneralError::BadTrace(_)), "{err:?}");
    }

    #[test]
    fn stagewise_optimum_fills_earliest_slots() {
        let inst = six_with_spare();
        let x = stagewise_optimal(&inst, &vec![int(1); 6]).unwrap();
        assert!(x.good_total(6).is_zero());
        assert!((0..6).all(|j| x.good_total(j) == int(1)));
    }
}
