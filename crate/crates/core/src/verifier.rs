//! Independent certification of equilibria, price-vector checks, fairness
//! properties and the misreport experiment.
//!
//! Nothing here looks at solver internals. Every check re-solves its own
//! programs with `rational_lp`.

use std::fmt;
use std::fmt::Write as _;

use num::{Signed, Zero};
use thiserror::Error;

use crate::market_model::{fmt_rational, Allocation, MarketInstance};
use crate::rational_lp::{self, int, LinearProgram, LpError, LpStatus, Relation, Rational, Sense};
use crate::scheduling_solver::{solve_scheduling, ScheduleError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("not a single-machine scheduling instance")]
    NotSchedulingInstance,
    #[error("misreport must lower the budget and raise requirements: {0}")]
    InvalidMisreport(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// Duals of an agent's optimal-bundle LP: one `beta` per covering row and
/// `gamma` for the budget row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObLpDual {
    pub beta: Vec<Rational>,
    pub gamma: Rational,
}

/// Optimum of an agent's optimal-bundle LP.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OptimalBundle {
    pub delay: Rational,
    pub bundle: Vec<Rational>,
    pub dual: ObLpDual,
}

fn check_dims(inst: &MarketInstance, alloc: Option<&Allocation>, prices: Option<&[Rational]>) -> Result<(), VerifyError> {
    let (n, m) = (inst.num_agents(), inst.num_goods());
    if let Some(p) = prices {
        if p.len() != m {
            return Err(VerifyError::DimensionMismatch(format!("{} prices for {m} goods", p.len())));
        }
    }
    if let Some(a) = alloc {
        if a.x.len() != n {
            return Err(VerifyError::DimensionMismatch(format!("{} allocation rows for {n} agents", a.x.len())));
        }
        if let Some(i) = a.x.iter().position(|r| r.len() != m) {
            return Err(VerifyError::DimensionMismatch(format!("allocation row {i} has {} entries", a.x[i].len())));
        }
    }
    Ok(())
}

/// Covering rows of agent `i` over variables `offset..offset + m`.
fn add_covers(lp: &mut LinearProgram, inst: &MarketInstance, i: usize, offset: usize) {
    for c in &inst.agents[i].covers {
        let coeffs = c.coeffs.iter().enumerate().filter(|(_, a)| !a.is_zero()).map(|(j, a)| (offset + j, a.clone())).collect();
        lp.add_constraint(coeffs, Relation::Ge, c.rhs.clone());
    }
}

/// Adds a row unless it has no terms; an empty row reduces to `0 rel rhs`,
/// and the return value says whether that holds.
fn add_row(lp: &mut LinearProgram, coeffs: Vec<(usize, Rational)>, rel: Relation, rhs: Rational) -> bool {
    if !coeffs.is_empty() {
        lp.add_constraint(coeffs, rel, rhs);
        return true;
    }
    let z = Rational::zero();
    match rel {
        Relation::Le => z <= rhs,
        Relation::Ge => z >= rhs,
        Relation::Eq => z == rhs,
    }
}

fn delay_row(inst: &MarketInstance, i: usize, offset: usize) -> Vec<(usize, Rational)> {
    inst.agents[i].delays.iter().enumerate().filter(|(_, d)| !d.is_zero()).map(|(j, d)| (offset + j, d.clone())).collect()
}

fn price_row(prices: &[Rational], offset: usize) -> Vec<(usize, Rational)> {
    prices.iter().enumerate().filter(|(_, p)| !p.is_zero()).map(|(j, p)| (offset + j, p.clone())).collect()
}

/// Solves agent `i`'s optimal-bundle LP at `prices`. `None` when no
/// affordable bundle satisfies the covering rows.
pub fn optimal_bundle(inst: &MarketInstance, i: usize, prices: &[Rational]) -> Result<Option<OptimalBundle>, VerifyError> {
    check_dims(inst, None, Some(prices))?;
    let m = inst.num_goods();
    let mut lp = LinearProgram::new(m);
    lp.set_objective(inst.agents[i].delays.clone(), Sense::Minimize);
    add_covers(&mut lp, inst, i, 0);
    let priced = add_row(&mut lp, price_row(prices, 0), Relation::Le, inst.agents[i].budget.clone())
        && prices.iter().any(|p| !p.is_zero());
    let sol = rational_lp::solve(&lp)?;
    match sol.status {
        LpStatus::Infeasible => Ok(None),
        // Delays are nonnegative, so the minimum is bounded below by zero.
        LpStatus::Unbounded => Err(LpError::Malformed("optimal-bundle LP unbounded".into()).into()),
        LpStatus::Optimal => {
            let k = inst.agents[i].covers.len();
            let beta = sol.duals[..k].to_vec();
            let gamma = if priced { -sol.duals[k].clone() } else { Rational::zero() };
            Ok(Some(OptimalBundle { delay: sol.objective, bundle: sol.x, dual: ObLpDual { beta, gamma } }))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CheckKind {
    OptimalBundle,
    Supply,
    Covering,
    Budget,
    Clearing,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::OptimalBundle => "optimal_bundle",
            CheckKind::Supply => "supply",
            CheckKind::Covering => "covering",
            CheckKind::Budget => "budget",
            CheckKind::Clearing => "clearing",
        }
    }

    fn per_agent(self) -> bool {
        matches!(self, CheckKind::OptimalBundle | CheckKind::Covering | CheckKind::Budget)
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One sub-check on one agent or good, with the exact values compared.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub kind: CheckKind,
    /// Agent index for per-agent checks, good index otherwise.
    pub subject: usize,
    pub passed: bool,
    pub witness: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Distinct kinds of failed sub-checks, sorted.
    pub fn failed_kinds(&self) -> Vec<CheckKind> {
        let mut k: Vec<CheckKind> = self.failures().map(|c| c.kind).collect();
        k.sort();
        k.dedup();
        k
    }

    /// One line per sub-check, then an overall verdict line.
    pub fn to_text(&self, inst: &MarketInstance) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let subject = if c.kind.per_agent() {
                format!("agent {}", inst.agents[c.subject].id)
            } else {
                format!("good {}", inst.goods[c.subject])
            };
            let verdict = if c.passed { "pass" } else { "FAIL" };
            let _ = writeln!(s, "{verdict} {} {subject}: {}", c.kind, c.witness);
        }
        let _ = writeln!(s, "overall: {}", if self.passed() { "pass" } else { "FAIL" });
        s
    }
}

/// Checks both equilibrium conditions exactly: every agent holds an
/// optimal bundle at `prices`, and positively priced goods are fully sold.
pub fn verify_equilibrium(inst: &MarketInstance, alloc: &Allocation, prices: &[Rational]) -> Result<VerificationReport, VerifyError> {
    check_dims(inst, Some(alloc), Some(prices))?;
    let mut checks = Vec::new();
    for (i, agent) in inst.agents.iter().enumerate() {
        let x = &alloc.x[i];
        let neg = x.iter().any(|v| v.is_negative());
        let covered = !neg && inst.covers_satisfied(i, x);
        checks.push(Check {
            kind: CheckKind::Covering,
            subject: i,
            passed: covered,
            witness: if neg { "negative entry".into() } else { "covering rows".into() },
        });
        let spent: Rational = x.iter().zip(prices).map(|(a, p)| a * p).sum();
        checks.push(Check {
            kind: CheckKind::Budget,
            subject: i,
            passed: spent <= agent.budget,
            witness: format!("spent {} of {}", fmt_rational(&spent), fmt_rational(&agent.budget)),
        });
        let held = inst.delay_of(i, x);
        let (passed, witness) = match optimal_bundle(inst, i, prices)? {
            None => (false, "no affordable bundle meets the covering rows".to_string()),
            Some(ob) => (
                covered && spent <= agent.budget && held == ob.delay,
                format!("delay {} vs optimum {}", fmt_rational(&held), fmt_rational(&ob.delay)),
            ),
        };
        checks.push(Check { kind: CheckKind::OptimalBundle, subject: i, passed, witness });
    }
    for j in 0..inst.num_goods() {
        let total = alloc.good_total(j);
        checks.push(Check {
            kind: CheckKind::Supply,
            subject: j,
            passed: total <= int(1),
            witness: format!("sold {}", fmt_rational(&total)),
        });
        let clear = prices[j].is_zero() || total == int(1);
        checks.push(Check {
            kind: CheckKind::Clearing,
            subject: j,
            passed: clear && !prices[j].is_negative(),
            witness: format!("price {}, sold {}", fmt_rational(&prices[j]), fmt_rational(&total)),
        });
    }
    Ok(VerificationReport { checks })
}

/// Decides whether `prices` are equilibrium prices. On success returns an
/// allocation that together with `prices` forms an equilibrium.
pub fn check_price_equilibrium(inst: &MarketInstance, prices: &[Rational]) -> Result<Option<Allocation>, VerifyError> {
    check_dims(inst, None, Some(prices))?;
    if prices.iter().any(|p| p.is_negative()) {
        return Ok(None);
    }
    let (n, m) = (inst.num_agents(), inst.num_goods());
    let mut optimum = Vec::with_capacity(n);
    for i in 0..n {
        match optimal_bundle(inst, i, prices)? {
            Some(ob) => optimum.push(ob.delay),
            None => return Ok(None),
        }
    }
    let mut lp = LinearProgram::new(n * m);
    for i in 0..n {
        if !add_row(&mut lp, delay_row(inst, i, i * m), Relation::Eq, optimum[i].clone()) {
            return Ok(None);
        }
        add_covers(&mut lp, inst, i, i * m);
        add_row(&mut lp, price_row(prices, i * m), Relation::Le, inst.agents[i].budget.clone());
    }
    for j in 0..m {
        let col = (0..n).map(|i| (i * m + j, int(1))).collect();
        let rel = if prices[j].is_positive() { Relation::Eq } else { Relation::Le };
        lp.add_constraint(col, rel, int(1));
    }
    match rational_lp::solve_feasibility(&lp)? {
        rational_lp::Feasibility::Infeasible => Ok(None),
        rational_lp::Feasibility::Feasible(x) => Ok(Some(Allocation { x: x.chunks(m).map(|r| r.to_vec()).collect() })),
    }
}

/// Pareto optimality among covering- and supply-feasible allocations.
/// Returns the largest total delay reduction available (zero iff optimal).
pub fn pareto_gap(inst: &MarketInstance, alloc: &Allocation) -> Result<Rational, VerifyError> {
    check_dims(inst, Some(alloc), None)?;
    let (n, m) = (inst.num_agents(), inst.num_goods());
    let s = n * m;
    let mut lp = LinearProgram::new(s + n);
    let mut obj = vec![Rational::zero(); s + n];
    for i in 0..n {
        obj[s + i] = int(1);
        let mut row = delay_row(inst, i, i * m);
        row.push((s + i, int(1)));
        add_row(&mut lp, row, Relation::Le, inst.delay_of(i, &alloc.x[i]));
        add_covers(&mut lp, inst, i, i * m);
    }
    for j in 0..m {
        lp.add_constraint((0..n).map(|i| (i * m + j, int(1))).collect(), Relation::Le, int(1));
    }
    lp.set_objective(obj, Sense::Maximize);
    let sol = rational_lp::solve(&lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.objective),
        LpStatus::Infeasible => Err(VerifyError::DimensionMismatch("allocation is not feasible".into())),
        LpStatus::Unbounded => Err(LpError::Malformed("improvement LP unbounded".into()).into()),
    }
}

pub fn check_pareto(inst: &MarketInstance, alloc: &Allocation) -> Result<bool, VerifyError> {
    Ok(pareto_gap(inst, alloc)?.is_zero())
}

/// Ordered pairs `(i, k)` where agent `i` could afford bundle `x_k`, it
/// meets `i`'s covering rows, and it gives `i` strictly less delay.
pub fn envy_violations(inst: &MarketInstance, alloc: &Allocation, prices: &[Rational]) -> Result<Vec<(usize, usize)>, VerifyError> {
    check_dims(inst, Some(alloc), Some(prices))?;
    let n = inst.num_agents();
    let mut out = Vec::new();
    for i in 0..n {
        let own = inst.delay_of(i, &alloc.x[i]);
        for k in (0..n).filter(|&k| k != i) {
            let other = &alloc.x[k];
            let cost: Rational = other.iter().zip(prices).map(|(a, p)| a * p).sum();
            if cost <= inst.agents[i].budget && inst.covers_satisfied(i, other) && inst.delay_of(i, other) < own {
                out.push((i, k));
            }
        }
    }
    Ok(out)
}

pub fn check_envy_free(inst: &MarketInstance, alloc: &Allocation, prices: &[Rational]) -> Result<bool, VerifyError> {
    Ok(envy_violations(inst, alloc, prices)?.is_empty())
}

/// Smallest delay agent `i` can get from a covering-feasible bundle
/// dominated by `cap`. `None` stands for infinity.
pub fn dominated_delay(inst: &MarketInstance, i: usize, cap: &[Rational]) -> Result<Option<Rational>, VerifyError> {
    let m = inst.num_goods();
    if cap.len() != m {
        return Err(VerifyError::DimensionMismatch(format!("{} caps for {m} goods", cap.len())));
    }
    let mut lp = LinearProgram::new(m);
    lp.set_objective(inst.agents[i].delays.clone(), Sense::Minimize);
    add_covers(&mut lp, inst, i, 0);
    for (j, c) in cap.iter().enumerate() {
        lp.set_bounds(j, Some(Rational::zero()), Some(c.clone()));
    }
    let sol = rational_lp::solve(&lp)?;
    Ok(sol.is_optimal().then_some(sol.objective))
}

/// Per agent: (equilibrium delay, delay from the proportional share).
pub fn sharing_incentive_table(inst: &MarketInstance, alloc: &Allocation) -> Result<Vec<(Rational, Option<Rational>)>, VerifyError> {
    check_dims(inst, Some(alloc), None)?;
    let total: Rational = inst.agents.iter().map(|a| &a.budget).sum();
    (0..inst.num_agents())
        .map(|i| {
            let share = &inst.agents[i].budget / &total;
            let cap = vec![share; inst.num_goods()];
            Ok((inst.delay_of(i, &alloc.x[i]), dominated_delay(inst, i, &cap)?))
        })
        .collect()
}

pub fn check_sharing_incentive(inst: &MarketInstance, alloc: &Allocation) -> Result<bool, VerifyError> {
    Ok(sharing_incentive_table(inst, alloc)?.iter().all(|(held, share)| share.as_ref().is_none_or(|s| held <= s)))
}

/// A reported type for one agent of a single-machine instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Misreport {
    pub budget: Rational,
    pub requirement: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IcOutcome {
    pub truthful_delay: Rational,
    pub misreport_delay: Rational,
}

/// True delay of a slot bundle: the cheapest way to cover `req` units with
/// a sub-bundle, using slot `t` (1-based) at delay `t`.
fn true_slot_delay(bundle: &[Rational], req: u32) -> Option<Rational> {
    let mut need = int(req as i64);
    let mut delay = Rational::zero();
    for (t, amount) in bundle.iter().enumerate() {
        if !need.is_positive() {
            break;
        }
        let take = if amount < &need { amount.clone() } else { need.clone() };
        delay += &take * int(t as i64 + 1);
        need -= take;
    }
    (!need.is_positive()).then_some(delay)
}

/// Runs the scheduling solver on the truthful and on the misreported
/// instance and measures `agent`'s delay under its true requirement.
pub fn ic_experiment(inst: &MarketInstance, agent: usize, misreport: &Misreport) -> Result<IcOutcome, VerifyError> {
    let (budgets, reqs) = inst.single_machine_data().ok_or(VerifyError::NotSchedulingInstance)?;
    if agent >= budgets.len() {
        return Err(VerifyError::DimensionMismatch(format!("agent {agent} of {}", budgets.len())));
    }
    if misreport.budget > budgets[agent] || !misreport.budget.is_positive() {
        return Err(VerifyError::InvalidMisreport(format!("budget {}", fmt_rational(&misreport.budget))));
    }
    if misreport.requirement < reqs[agent] {
        return Err(VerifyError::InvalidMisreport(format!("requirement {}", misreport.requirement)));
    }
    let truthful = solve_scheduling(&budgets, &reqs)?;
    let mut b2 = budgets.clone();
    let mut r2 = reqs.clone();
    b2[agent] = misreport.budget.clone();
    r2[agent] = misreport.requirement;
    let lied = solve_scheduling(&b2, &r2)?;
    let measure = |x: &[Rational]| true_slot_delay(x, reqs[agent]).ok_or(VerifyError::NotSchedulingInstance);
    Ok(IcOutcome {
        truthful_delay: measure(&truthful.allocation.x[agent])?,
        misreport_delay: measure(&lied.allocation.x[agent])?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{six_agent_budgets, six_agent_market};
    use crate::market_model::build_single_machine_with_horizon;
    use crate::market_model::PriceVector;
    use crate::rational_lp::ratio;
    use crate::scheduling_solver::solve_scheduling;

    fn six_agent_run() -> (MarketInstance, Allocation, PriceVector) {
        let inst = six_agent_market();
        let eq = solve_scheduling(&six_agent_budgets(), &[1; 6]).unwrap();
        (inst, eq.allocation, eq.prices)
    }

    #[test]
    fn solver_output_verifies() {
        let (inst, x, p) = six_agent_run();
        let r = verify_equilibrium(&inst, &x, &p).unwrap();
        assert!(r.passed(), "{}", r.to_text(&inst));
    }

    #[test]
    fn raised_first_price_fails_for_agent_one() {
        let (inst, x, mut p) = six_agent_run();
        p[0] = int(31);
        let r = verify_equilibrium(&inst, &x, &p).unwrap();
        assert!(r.failures().any(|c| c.subject == 0 && matches!(c.kind, CheckKind::Budget | CheckKind::OptimalBundle)));
    }

    #[test]
    fn empty_allocation_fails_covering() {
        let inst = six_agent_market();
        let r = verify_equilibrium(&inst, &Allocation::zeros(6, 6), &vec![Rational::zero(); 6]).unwrap();
        assert!(r.failed_kinds().contains(&CheckKind::Covering));
    }

    #[test]
    fn ob_lp_duals_are_complementary() {
        let (inst, _, p) = six_agent_run();
        for i in 0..6 {
            let ob = optimal_bundle(&inst, i, &p).unwrap().unwrap();
            assert!(!ob.dual.gamma.is_negative() && ob.dual.beta.iter().all(|b| !b.is_negative()));
            for j in 0..6 {
                let slack = &inst.agents[i].delays[j] - &ob.dual.beta[0] * &inst.agents[i].covers[0].coeffs[j] + &ob.dual.gamma * &p[j];
                assert!(!slack.is_negative());
                assert!(ob.bundle[j].is_zero() || slack.is_zero());
            }
        }
    }

    #[test]
    fn price_check_on_known_vectors() {
        let inst = six_agent_market();
        let p1: Vec<Rational> = [30, 17, 9, 5, 2, 1].map(int).to_vec();
        assert!(check_price_equilibrium(&inst, &p1).unwrap().is_some());
        let bad: Vec<Rational> = [30, 17, 9, 5, 2, 2].map(int).to_vec();
        assert!(check_price_equilibrium(&inst, &bad).unwrap().is_none());
        assert!(matches!(check_price_equilibrium(&inst, &p1[..5]), Err(VerifyError::DimensionMismatch(_))));
    }

    #[test]
    fn wasted_first_slot_is_not_pareto() {
        let inst = build_single_machine_with_horizon(&[int(2), int(1)], &[1, 1], 1).unwrap();
        let mut x = Allocation::zeros(2, 3);
        x.x[0][1] = int(1);
        x.x[1][2] = int(1);
        assert!(!check_pareto(&inst, &x).unwrap());
        x.x[0][1] = int(0);
        x.x[0][0] = int(1);
        x.x[1][2] = int(0);
        x.x[1][1] = int(1);
        assert!(check_pareto(&inst, &x).unwrap());
    }

    #[test]
    fn swapped_slots_with_equal_budgets_create_envy() {
        let (mut inst, mut x, p) = six_agent_run();
        inst.agents[1].budget = inst.agents[0].budget.clone();
        x.x.swap(0, 1);
        assert!(envy_violations(&inst, &x, &p).unwrap().contains(&(0, 1)));
    }

    #[test]
    fn sharing_incentive_on_six_agents() {
        let (inst, x, _) = six_agent_run();
        let table = sharing_incentive_table(&inst, &x).unwrap();
        // A share of m_i/64 of each of six slots covers one unit iff 6 m_i >= 64.
        for (i, (_, share)) in table.iter().enumerate() {
            assert_eq!(share.is_some(), 6 * [30, 17, 9, 4, 3, 1][i] >= 64);
        }
        assert!(check_sharing_incentive(&inst, &x).unwrap());
    }

    #[test]
    fn misreports_on_six_agents() {
        let inst = six_agent_market();
        let o = ic_experiment(&inst, 5, &Misreport { budget: ratio(1, 2), requirement: 1 }).unwrap();
        assert_eq!((o.truthful_delay, o.misreport_delay), (int(6), int(6)));
        let o = ic_experiment(&inst, 0, &Misreport { budget: int(10), requirement: 1 }).unwrap();
        assert_eq!(o.truthful_delay, int(1));
        assert!(o.misreport_delay >= o.truthful_delay);
        let o = ic_experiment(&inst, 2, &Misreport { budget: int(9), requirement: 1 }).unwrap();
        assert_eq!(o.truthful_delay, o.misreport_delay);
        assert!(ic_experiment(&inst, 2, &Misreport { budget: int(10), requirement: 1 }).is_err());
    }
}
