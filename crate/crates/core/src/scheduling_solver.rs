//! Single-machine scheduling markets: segments are built from the latest
//! slot backwards. Each segment is the subset of remaining agents with the
//! smallest price slope, found by bisection on the slope and brute-force
//! set-function minimization.

use num::{One, Signed, Zero};
use thiserror::Error;

use crate::format::EquilibriumRecord;
use crate::market_model::{build_single_machine, Allocation, MarketError, PriceVector};
use crate::rational_lp::{self, int, Feasibility, LinearProgram, LpError, Rational, Relation};
use crate::submodular::{members, minimum_of_table, ENUMERATION_LIMIT};

/// Bisection steps before switching to exact zero-of-the-minimizer steps.
pub const BISECTION_LIMIT: usize = 64;
/// Hard cap on search iterations per segment.
pub const ITERATION_CAP: usize = 200;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("agent set is empty")]
    EmptySet,
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("feasibility program infeasible for segment {0:?}")]
    FeasibilityLpInfeasible(Vec<usize>),
    #[error("segment search exceeded {0} iterations")]
    SearchExhausted(usize),
    #[error("{0} agents exceed the enumeration limit")]
    TooManyAgents(usize),
    #[error("agent {0} does not hold the latest slots of its segment")]
    NotMarginal(usize),
    #[error("agent index {0} out of range")]
    UnknownAgent(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchedulingSegment {
    pub agents: Vec<usize>,
    pub lambda: Rational,
    /// First and last slot of the segment, 1-based and inclusive.
    pub first_slot: usize,
    pub last_slot: usize,
    /// Price of the lowest slot below this segment (0 for the latest segment).
    pub p_low: Rational,
    /// Prices of `first_slot..=last_slot`.
    pub prices: Vec<Rational>,
}

/// One bisection or refinement step of the segment search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchStep {
    pub lo: Rational,
    pub hi: Rational,
    pub set_lo: Vec<usize>,
    pub set_hi: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentSearch {
    pub steps: Vec<SearchStep>,
    pub chosen: Vec<usize>,
    pub lambda: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchedulingEquilibrium {
    /// Latest slots first; lambdas increase along the list.
    pub segments: Vec<SchedulingSegment>,
    pub prices: PriceVector,
    pub allocation: Allocation,
    pub lambda: Vec<Rational>,
    pub searches: Vec<SegmentSearch>,
}

impl SchedulingEquilibrium {
    pub fn to_record(&self) -> EquilibriumRecord {
        EquilibriumRecord {
            prices: self.prices.clone(),
            lambda: self.lambda.clone(),
            allocation: self.allocation.clone(),
            segments: self.segments.iter().map(|s| (s.agents.clone(), s.lambda.clone())).collect(),
        }
    }
}

fn sums(set: &[usize], budgets: &[Rational], reqs: &[u32]) -> (Rational, Rational) {
    let m: Rational = set.iter().map(|&i| &budgets[i]).sum();
    let r: i64 = set.iter().map(|&i| reqs[i] as i64).sum();
    (m, int(r))
}

/// `2 (m(S) - p_low r(S)) / (r(S) (r(S)+1))`.
pub fn lambda_of(set: &[usize], p_low: &Rational, budgets: &[Rational], reqs: &[u32]) -> Result<Rational, ScheduleError> {
    if set.is_empty() {
        return Err(ScheduleError::EmptySet);
    }
    let (m, r) = sums(set, budgets, reqs);
    Ok(int(2) * (m - p_low * &r) / (&r * (&r + Rational::one())))
}

/// `m(S) - p_low r(S) - lambda r(S)(r(S)+1)/2`.
pub fn f_sched(
    set: &[usize],
    p_low: &Rational,
    lambda: &Rational,
    budgets: &[Rational],
    reqs: &[u32],
) -> Result<Rational, ScheduleError> {
    if set.is_empty() {
        return Err(ScheduleError::EmptySet);
    }
    let (m, r) = sums(set, budgets, reqs);
    Ok(m - p_low * &r - lambda * &r * (&r + Rational::one()) / int(2))
}

/// Per-mask `m(S) - p_low r(S)` and `r(S)(r(S)+1)/2` over subsets of `ground`.
struct Table {
    ground: Vec<usize>,
    surplus: Vec<Rational>,
    weight: Vec<Rational>,
}

impl Table {
    fn new(ground: &[usize], p_low: &Rational, budgets: &[Rational], reqs: &[u32]) -> Table {
        let n = ground.len();
        let mut surplus = Vec::with_capacity((1 << n) - 1);
        let mut weight = Vec::with_capacity((1 << n) - 1);
        for mask in 1u32..(1 << n) {
            let set = members(ground, mask);
            let (m, r) = sums(&set, budgets, reqs);
            surplus.push(m - p_low * &r);
            weight.push(&r * (&r + Rational::one()) / int(2));
        }
        Table { ground: ground.to_vec(), surplus, weight }
    }

    fn minimize(&self, lambda: &Rational) -> (u32, Rational) {
        let values: Vec<Rational> = self.surplus.iter().zip(&self.weight).map(|(s, w)| s - lambda * w).collect();
        let min = minimum_of_table(&self.ground, &values);
        (min.mask, min.value)
    }

    fn zero_of(&self, mask: u32) -> Rational {
        let k = mask as usize - 1;
        &self.surplus[k] / &self.weight[k]
    }
}

/// Finds the maximal subset of `remaining` with the smallest slope.
pub fn next_segment_scheduling(
    p_low: &Rational,
    remaining: &[usize],
    budgets: &[Rational],
    reqs: &[u32],
) -> Result<SegmentSearch, ScheduleError> {
    if remaining.is_empty() {
        return Err(ScheduleError::EmptySet);
    }
    if remaining.len() > ENUMERATION_LIMIT {
        return Err(ScheduleError::TooManyAgents(remaining.len()));
    }
    let table = Table::new(remaining, p_low, budgets, reqs);
    let mut lo = Rational::zero();
    let mut hi = remaining.iter().map(|&i| budgets[i].clone()).max().unwrap_or_default();
    let (mut s_lo, _) = table.minimize(&lo);
    let (mut s_hi, _) = table.minimize(&hi);
    let mut steps = Vec::new();
    let mut bisections = 0usize;
    for _ in 0..ITERATION_CAP {
        steps.push(SearchStep {
            lo: lo.clone(),
            hi: hi.clone(),
            set_lo: members(remaining, s_lo),
            set_hi: members(remaining, s_hi),
        });
        if s_lo == s_hi || bisections >= BISECTION_LIMIT {
            let cand = table.zero_of(s_hi);
            let (mask, value) = table.minimize(&cand);
            if value.is_zero() {
                return Ok(SegmentSearch { steps, chosen: members(remaining, mask), lambda: cand });
            }
            // A set with a smaller slope exists; step to its zero.
            hi = cand;
            s_hi = mask;
            continue;
        }
        let mid = (&lo + &hi) / int(2);
        let (mask, value) = table.minimize(&mid);
        if value.is_positive() {
            lo = mid;
            s_lo = mask;
        } else {
            hi = mid;
            s_hi = mask;
        }
        bisections += 1;
    }
    Err(ScheduleError::SearchExhausted(ITERATION_CAP))
}

/// Splits the slots of `segment` among its agents: requirement, budget and
/// unit supply, solved as one feasibility program. Rows are indexed by the
/// segment's agents in order, columns by its slots.
pub fn allocate_segment(
    segment: &SchedulingSegment,
    budgets: &[Rational],
    reqs: &[u32],
) -> Result<Vec<Vec<Rational>>, ScheduleError> {
    let k = segment.agents.len();
    let w = segment.prices.len();
    let var = |a: usize, t: usize| a * w + t;
    let mut lp = LinearProgram::new(k * w);
    for (a, &i) in segment.agents.iter().enumerate() {
        lp.add_constraint((0..w).map(|t| (var(a, t), Rational::one())).collect(), Relation::Ge, int(reqs[i] as i64));
        lp.add_constraint(
            (0..w).map(|t| (var(a, t), segment.prices[t].clone())).collect(),
            Relation::Le,
            budgets[i].clone(),
        );
    }
    for t in 0..w {
        lp.add_constraint((0..k).map(|a| (var(a, t), Rational::one())).collect(), Relation::Le, Rational::one());
    }
    match rational_lp::solve_feasibility(&lp)? {
        Feasibility::Infeasible => Err(ScheduleError::FeasibilityLpInfeasible(segment.agents.clone())),
        Feasibility::Feasible(x) => Ok((0..k).map(|a| x[a * w..(a + 1) * w].to_vec()).collect()),
    }
}

/// Equilibrium of the single-machine market with the given budgets and
/// integer requirements; slots are `1..=sum r`.
pub fn solve_scheduling(budgets: &[Rational], reqs: &[u32]) -> Result<SchedulingEquilibrium, ScheduleError> {
    // Shape validation shared with the builder.
    build_single_machine(budgets, reqs)?;
    let n = budgets.len();
    let total: usize = reqs.iter().map(|&r| r as usize).sum();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut p_low = Rational::zero();
    let mut upper = total + 1; // T^{k-1}
    let mut segments = Vec::new();
    let mut searches = Vec::new();
    let mut prices = vec![Rational::zero(); total];
    let mut lambda = vec![Rational::zero(); n];
    while !remaining.is_empty() {
        let search = next_segment_scheduling(&p_low, &remaining, budgets, reqs)?;
        let set = search.chosen.clone();
        let r: usize = set.iter().map(|&i| reqs[i] as usize).sum();
        let lower = upper - r; // T^k
        let seg_prices: Vec<Rational> =
            (lower..upper).map(|t| &p_low + int((upper - t) as i64) * &search.lambda).collect();
        for (t, p) in (lower..upper).zip(&seg_prices) {
            prices[t - 1] = p.clone();
        }
        for &i in &set {
            lambda[i] = search.lambda.clone();
        }
        let next_low = seg_prices[0].clone();
        segments.push(SchedulingSegment {
            agents: set.clone(),
            lambda: search.lambda.clone(),
            first_slot: lower,
            last_slot: upper - 1,
            p_low: p_low.clone(),
            prices: seg_prices,
        });
        searches.push(search);
        remaining.retain(|i| !set.contains(i));
        p_low = next_low;
        upper = lower;
    }
    let mut allocation = Allocation::zeros(n, total);
    for seg in &segments {
        let part = allocate_segment(seg, budgets, reqs)?;
        for (a, &i) in seg.agents.iter().enumerate() {
            for (t, v) in part[a].iter().enumerate() {
                allocation.x[i][seg.first_slot - 1 + t] = v.clone();
            }
        }
    }
    Ok(SchedulingEquilibrium { segments, prices, allocation, lambda, searches })
}

/// Price paid by a marginal agent: the smallest budget declaration that
/// leaves every segment computed before the agent's own unchanged.
///
/// Lowering `m_i` only lowers the slope of sets containing `i`. The search
/// at iteration `k'` (slope `l`, floor price `q`, remaining agents `A`) is
/// unaffected while every `T ∋ i` in `A` keeps a slope above `l`, i.e.
/// `m_i' > l r(T)(r(T)+1)/2 + q r(T) - m(T - i)`. The infimum is the largest
/// such threshold, floored at zero.
pub fn marginal_payment(
    budgets: &[Rational],
    reqs: &[u32],
    eq: &SchedulingEquilibrium,
    agent: usize,
) -> Result<Rational, ScheduleError> {
    if agent >= budgets.len() {
        return Err(ScheduleError::UnknownAgent(agent));
    }
    let k = eq.segments.iter().position(|s| s.agents.contains(&agent)).ok_or(ScheduleError::UnknownAgent(agent))?;
    let seg = &eq.segments[k];
    let r = reqs[agent] as usize;
    let latest = seg.last_slot + 1 - r..=seg.last_slot;
    let holds_latest = latest.clone().all(|t| eq.allocation.x[agent][t - 1].is_one());
    let holds_nothing_else = (1..=eq.prices.len())
        .filter(|t| !latest.contains(t))
        .all(|t| eq.allocation.x[agent][t - 1].is_zero());
    if !holds_latest || !holds_nothing_else {
        return Err(ScheduleError::NotMarginal(agent));
    }
    let mut best = Rational::zero();
    let mut remaining: Vec<usize> = (0..budgets.len()).collect();
    for earlier in &eq.segments[..k] {
        let others: Vec<usize> = remaining.iter().copied().filter(|&i| i != agent).collect();
        if others.len() + 1 > ENUMERATION_LIMIT {
            return Err(ScheduleError::TooManyAgents(others.len() + 1));
        }
        for mask in 0u32..(1 << others.len()) {
            let mut t = members(&others, mask);
            let rest: Rational = t.iter().map(|&i| &budgets[i]).sum();
            t.push(agent);
            let (_, rt) = sums(&t, budgets, reqs);
            let thr = &earlier.lambda * &rt * (&rt + Rational::one()) / int(2) + &earlier.p_low * &rt - rest;
            if thr > best {
                best = thr;
            }
        }
        remaining.retain(|i| !earlier.agents.contains(i));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational_lp::ratio;

    fn six_agents() -> Vec<Rational> {
        [30, 17, 9, 4, 3, 1].map(int).to_vec()
    }

    #[test]
    fn slope_formula() {
        let b = six_agents();
        let r = [1; 6];
        assert_eq!(lambda_of(&[5], &int(0), &b, &r).unwrap(), int(1));
        assert_eq!(lambda_of(&[3, 4], &int(1), &b, &r).unwrap(), ratio(5, 3));
        let b2 = [30, 17, 9].map(int);
        assert_eq!(lambda_of(&[0, 1, 2], &ratio(13, 3), &b2, &[1, 1, 1]).unwrap(), ratio(43, 6));
        assert_eq!(lambda_of(&[], &int(0), &b, &r), Err(ScheduleError::EmptySet));
    }

    #[test]
    fn surplus_formula() {
        let b = six_agents();
        let r = [1; 6];
        assert_eq!(f_sched(&[5], &int(0), &int(1), &b, &r).unwrap(), int(0));
        assert_eq!(f_sched(&[4, 5], &int(0), &int(1), &b, &r).unwrap(), int(1));
        let l = lambda_of(&[0, 2, 4], &ratio(1, 2), &b, &r).unwrap();
        assert_eq!(f_sched(&[0, 2, 4], &ratio(1, 2), &l, &b, &r).unwrap(), int(0));
    }

    #[test]
    fn next_segment_examples() {
        let b = six_agents();
        let r = [1; 6];
        let s = next_segment_scheduling(&int(0), &[0, 1, 2, 3, 4, 5], &b, &r).unwrap();
        assert_eq!((s.chosen, s.lambda), (vec![5], int(1)));
        let s = next_segment_scheduling(&int(1), &[0, 1, 2, 3, 4], &b, &r).unwrap();
        assert_eq!((s.chosen, s.lambda), (vec![3, 4], ratio(5, 3)));
        let s = next_segment_scheduling(&int(9), &[0, 1], &b, &r).unwrap();
        assert_eq!((s.chosen, s.lambda), (vec![1], int(8)));
    }

    #[test]
    fn single_agent_two_slots() {
        let eq = solve_scheduling(&[int(5)], &[2]).unwrap();
        assert_eq!(eq.segments.len(), 1);
        assert_eq!(eq.segments[0].lambda, ratio(5, 3));
        assert_eq!(eq.prices, vec![ratio(10, 3), ratio(5, 3)]);
    }

    #[test]
    fn six_agent_segment_split() {
        let eq = solve_scheduling(&six_agents(), &[1; 6]).unwrap();
        let seg = &eq.segments[1];
        assert_eq!(seg.agents, vec![3, 4]);
        let part = allocate_segment(seg, &six_agents(), &[1; 6]).unwrap();
        assert_eq!(part, vec![vec![ratio(4, 5), ratio(1, 5)], vec![ratio(1, 5), ratio(4, 5)]]);
        let last = &eq.segments[0];
        assert_eq!(allocate_segment(last, &six_agents(), &[1; 6]).unwrap(), vec![vec![int(1)]]);
    }

    #[test]
    fn marginal_payments_six_agents() {
        let b = six_agents();
        let r = [1; 6];
        let eq = solve_scheduling(&b, &r).unwrap();
        assert_eq!(marginal_payment(&b, &r, &eq, 1).unwrap(), ratio(41, 3));
        assert_eq!(marginal_payment(&b, &r, &eq, 5).unwrap(), int(0));
        assert_eq!(marginal_payment(&b, &r, &eq, 3), Err(ScheduleError::NotMarginal(3)));
        let one = solve_scheduling(&[int(7)], &[2]).unwrap();
        assert_eq!(marginal_payment(&[int(7)], &[2], &one, 0).unwrap(), int(0));
    }
}
