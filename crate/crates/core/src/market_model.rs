//! Market instances, allocations, special-case builders and the
//! sufficient-demand check.

use std::collections::BTreeSet;

use num::{BigInt, One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::rational_lp::{self, int, LinearProgram, LpStatus, Relation, Rational, Sense, StageResult, StagedLp};

pub use crate::format::{parse_instance, write_instance};

/// One covering row `sum_j coeffs[j] * x_ij >= rhs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cover {
    pub coeffs: Vec<Rational>,
    pub rhs: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Agent {
    pub id: String,
    pub budget: Rational,
    pub delays: Vec<Rational>,
    pub covers: Vec<Cover>,
}

/// A market with unit supply of every good.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarketInstance {
    pub name: String,
    pub goods: Vec<String>,
    pub agents: Vec<Agent>,
}

pub type PriceVector = Vec<Rational>;

/// `x[i][j]`: amount of good `j` held by agent `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Allocation {
    pub x: Vec<Vec<Rational>>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MarketError {
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("non-positive input: {0}")]
    NonPositiveInput(String),
    #[error("type {type_index} has {capacity} machine units but agents require {demand}")]
    InsufficientCapacity { type_index: usize, capacity: usize, demand: Rational },
    #[error("allowed sets {first:?} and {second:?} of type {type_index} are neither disjoint nor nested")]
    NotLaminar { type_index: usize, first: Vec<usize>, second: Vec<usize> },
    #[error("type {type_index}: machines of {outer:?} outside {inner:?} are slower than machines inside it")]
    MonotonicityViolated { type_index: usize, outer: Vec<usize>, inner: Vec<usize> },
    #[error("bad graph: {0}")]
    BadGraph(String),
    #[error("covering constraints of agent {0} are unsatisfiable")]
    DelayLpInfeasible(usize),
    #[error("invalid instance: {0}")]
    Invalid(String),
}

impl Allocation {
    pub fn zeros(n: usize, m: usize) -> Self {
        Allocation { x: vec![vec![Rational::zero(); m]; n] }
    }

    /// Total amount of good `j` handed out.
    pub fn good_total(&self, j: usize) -> Rational {
        self.x.iter().map(|row| &row[j]).sum()
    }
}

impl MarketInstance {
    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn num_goods(&self) -> usize {
        self.goods.len()
    }

    /// Checks counts, nonnegativity and positive budgets.
    pub fn validate(&self) -> Result<(), MarketError> {
        if self.agents.is_empty() {
            return Err(MarketError::Invalid("no agents".into()));
        }
        if self.goods.is_empty() {
            return Err(MarketError::Invalid("no goods".into()));
        }
        let m = self.goods.len();
        let mut seen = BTreeSet::new();
        for g in &self.goods {
            if !seen.insert(g) {
                return Err(MarketError::Invalid(format!("duplicate good id {g}")));
            }
        }
        let mut seen = BTreeSet::new();
        for a in &self.agents {
            if !seen.insert(&a.id) {
                return Err(MarketError::Invalid(format!("duplicate agent id {}", a.id)));
            }
            if !a.budget.is_positive() {
                return Err(MarketError::NonPositiveInput(format!("budget of agent {}", a.id)));
            }
            if a.delays.len() != m {
                return Err(MarketError::LengthMismatch(format!("delays of agent {}", a.id)));
            }
            if a.delays.iter().any(|d| d.is_negative()) {
                return Err(MarketError::Invalid(format!("negative delay for agent {}", a.id)));
            }
            for c in &a.covers {
                if c.coeffs.len() != m {
                    return Err(MarketError::LengthMismatch(format!("covering row of agent {}", a.id)));
                }
                if c.rhs.is_negative() {
                    return Err(MarketError::Invalid(format!("negative requirement for agent {}", a.id)));
                }
            }
        }
        Ok(())
    }

    pub fn budgets(&self) -> Vec<Rational> {
        self.agents.iter().map(|a| a.budget.clone()).collect()
    }

    /// `sum_j d_ij x_j`.
    pub fn delay_of(&self, i: usize, bundle: &[Rational]) -> Rational {
        self.agents[i].delays.iter().zip(bundle).map(|(d, x)| d * x).sum()
    }

    /// True when `bundle` satisfies every covering row of agent `i`.
    pub fn covers_satisfied(&self, i: usize, bundle: &[Rational]) -> bool {
        self.agents[i].covers.iter().all(|c| {
            let lhs: Rational = c.coeffs.iter().zip(bundle).map(|(a, x)| a * x).sum();
            lhs >= c.rhs
        })
    }

    /// Recognizes a single-machine scheduling market: slot `t` has delay
    /// `t` for everyone and each agent has one all-ones row with a positive
    /// integer requirement. Trailing slots beyond the total requirement are
    /// allowed. Returns budgets and requirements.
    pub fn single_machine_data(&self) -> Option<(Vec<Rational>, Vec<u32>)> {
        let m = self.goods.len();
        let mut reqs = Vec::with_capacity(self.agents.len());
        for a in &self.agents {
            if a.delays.len() != m || a.covers.len() != 1 {
                return None;
            }
            if a.delays.iter().enumerate().any(|(t, d)| *d != int(t as i64 + 1)) {
                return None;
            }
            let c = &a.covers[0];
            if c.coeffs.iter().any(|v| !v.is_one()) || !c.rhs.is_integer() || !c.rhs.is_positive() {
                return None;
            }
            reqs.push(c.rhs.to_integer().to_u32()?);
        }
        let total: u64 = reqs.iter().map(|&r| r as u64).sum();
        if (m as u64) < total {
            return None;
        }
        Some((self.budgets(), reqs))
    }
}

fn slot_market(name: &str, budgets: &[Rational], reqs: &[u32], slots: usize) -> MarketInstance {
    let goods: Vec<String> = (1..=slots).map(|t| format!("t{t}")).collect();
    let delays: Vec<Rational> = (1..=slots).map(|t| int(t as i64)).collect();
    let agents = budgets
        .iter()
        .zip(reqs)
        .enumerate()
        .map(|(i, (b, &r))| Agent {
            id: format!("{}", i + 1),
            budget: b.clone(),
            delays: delays.clone(),
            covers: vec![Cover { coeffs: vec![Rational::one(); slots], rhs: int(r as i64) }],
        })
        .collect();
    MarketInstance { name: name.to_string(), goods, agents }
}

fn check_schedule_inputs(budgets: &[Rational], reqs: &[u32]) -> Result<(), MarketError> {
    if budgets.len() != reqs.len() {
        return Err(MarketError::LengthMismatch(format!(
            "{} budgets, {} requirements",
            budgets.len(),
            reqs.len()
        )));
    }
    if budgets.is_empty() {
        return Err(MarketError::Invalid("no agents".into()));
    }
    if let Some(i) = budgets.iter().position(|b| !b.is_positive()) {
        return Err(MarketError::NonPositiveInput(format!("budget of agent {}", i + 1)));
    }
    if let Some(i) = reqs.iter().position(|&r| r == 0) {
        return Err(MarketError::NonPositiveInput(format!("requirement of agent {}", i + 1)));
    }
    Ok(())
}

/// Single machine with slots `1..=sum r`; slot `t` has delay `t`.
pub fn build_single_machine(budgets: &[Rational], reqs: &[u32]) -> Result<MarketInstance, MarketError> {
    check_schedule_inputs(budgets, reqs)?;
    let total: usize = reqs.iter().map(|&r| r as usize).sum();
    Ok(slot_market("single-machine", budgets, reqs, total))
}

/// Single machine with `extra` further slots after the last required one.
/// One spare slot gives the market an unsold alternative at the end of the
/// horizon, which pins the price of the last required slot.
pub fn build_single_machine_with_horizon(
    budgets: &[Rational],
    reqs: &[u32],
    extra: usize,
) -> Result<MarketInstance, MarketError> {
    check_schedule_inputs(budgets, reqs)?;
    let total: usize = reqs.iter().map(|&r| r as usize).sum();
    Ok(slot_market("single-machine", budgets, reqs, total + extra))
}

/// Several machine types; `machine_delays[k]` lists the delay of every
/// machine unit of type `k`, `reqs[i][k]` is agent `i`'s need of type `k`.
pub fn build_multi_type_scheduling(
    machine_delays: &[Vec<Rational>],
    budgets: &[Rational],
    reqs: &[Vec<Rational>],
) -> Result<MarketInstance, MarketError> {
    let allowed: Vec<Vec<Vec<usize>>> = reqs
        .iter()
        .map(|_| machine_delays.iter().map(|ms| (0..ms.len()).collect()).collect())
        .collect();
    let inst = restricted_market(machine_delays, budgets, reqs, &allowed)?;
    for (k, ms) in machine_delays.iter().enumerate() {
        let demand: Rational = reqs.iter().map(|r| &r[k]).sum();
        if int(ms.len() as i64) < demand {
            return Err(MarketError::InsufficientCapacity { type_index: k, capacity: ms.len(), demand });
        }
    }
    Ok(inst)
}

fn restricted_market(
    machine_delays: &[Vec<Rational>],
    budgets: &[Rational],
    reqs: &[Vec<Rational>],
    allowed: &[Vec<Vec<usize>>],
) -> Result<MarketInstance, MarketError> {
    if budgets.len() != reqs.len() || budgets.len() != allowed.len() {
        return Err(MarketError::LengthMismatch("budgets, requirements and allowed sets".into()));
    }
    if budgets.is_empty() || machine_delays.is_empty() {
        return Err(MarketError::Invalid("empty market".into()));
    }
    let ntypes = machine_delays.len();
    let mut goods = Vec::new();
    let mut delays = Vec::new();
    let mut offset = Vec::new();
    for (k, ms) in machine_delays.iter().enumerate() {
        offset.push(goods.len());
        for (j, d) in ms.iter().enumerate() {
            if d.is_negative() {
                return Err(MarketError::Invalid(format!("negative delay on machine {j} of type {k}")));
            }
            goods.push(if ntypes == 1 { format!("t{}", j + 1) } else { format!("k{}m{}", k + 1, j + 1) });
            delays.push(d.clone());
        }
    }
    let m = goods.len();
    let mut agents = Vec::new();
    for (i, b) in budgets.iter().enumerate() {
        if !b.is_positive() {
            return Err(MarketError::NonPositiveInput(format!("budget of agent {}", i + 1)));
        }
        if reqs[i].len() != ntypes || allowed[i].len() != ntypes {
            return Err(MarketError::LengthMismatch(format!("requirements of agent {}", i + 1)));
        }
        let mut covers = Vec::new();
        for k in 0..ntypes {
            if reqs[i][k].is_negative() {
                return Err(MarketError::NonPositiveInput(format!("requirement of agent {} type {k}", i + 1)));
            }
            let mut coeffs = vec![Rational::zero(); m];
            for &j in &allowed[i][k] {
                if j >= machine_delays[k].len() {
                    return Err(MarketError::Invalid(format!("machine {j} not in type {k}")));
                }
                coeffs[offset[k] + j] = Rational::one();
            }
            covers.push(Cover { coeffs, rhs: reqs[i][k].clone() });
        }
        agents.push(Agent { id: format!("{}", i + 1), budget: b.clone(), delays: delays.clone(), covers });
    }
    Ok(MarketInstance { name: "scheduling".into(), goods, agents })
}

/// Restricted assignment: agent `i` may use only machines `allowed[i][k]`
/// of type `k`. Per type, the allowed sets must form a laminar family in
/// which a larger set only adds machines no slower than those it contains.
pub fn build_laminar_restricted(
    machine_delays: &[Vec<Rational>],
    budgets: &[Rational],
    reqs: &[Vec<Rational>],
    allowed: &[Vec<Vec<usize>>],
) -> Result<MarketInstance, MarketError> {
    for (k, ms) in machine_delays.iter().enumerate() {
        let sets: Vec<BTreeSet<usize>> =
            allowed.iter().filter_map(|a| a.get(k)).map(|s| s.iter().copied().collect()).collect();
        for a in 0..sets.len() {
            for b in 0..sets.len() {
                let (s, t) = (&sets[a], &sets[b]);
                let disjoint = s.is_disjoint(t);
                let nested = s.is_subset(t) || t.is_subset(s);
                if !disjoint && !nested {
                    return Err(MarketError::NotLaminar {
                        type_index: k,
                        first: s.iter().copied().collect(),
                        second: t.iter().copied().collect(),
                    });
                }
                // t strictly inside s
                if t.is_subset(s) && t.len() < s.len() && !t.is_empty() {
                    let outside_max = s.difference(t).filter_map(|&j| ms.get(j)).max();
                    let inside_min = t.iter().filter_map(|&j| ms.get(j)).min();
                    if let (Some(o), Some(i)) = (outside_max, inside_min) {
                        if o > i {
                            return Err(MarketError::MonotonicityViolated {
                                type_index: k,
                                outer: s.iter().copied().collect(),
                                inner: t.iter().copied().collect(),
                            });
                        }
                    }
                }
            }
        }
    }
    restricted_market(machine_delays, budgets, reqs, allowed)
}

/// Directed edge with capacity and delay per unit of flow.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowEdge {
    pub from: String,
    pub to: String,
    pub capacity: Rational,
    pub delay: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowAgent {
    pub source: String,
    pub sink: String,
    pub demand: Rational,
    pub budget: Rational,
}

/// Edges become goods. Variables are flows scaled by capacity, so every
/// good has unit supply; the good's delay is `d_e * c_e`. Conservation at
/// every node other than the agent's source and sink is written as two
/// opposite covering rows, and net inflow at the sink must reach the demand.
pub fn build_flow_market(edges: &[FlowEdge], agents: &[FlowAgent]) -> Result<MarketInstance, MarketError> {
    if edges.is_empty() || agents.is_empty() {
        return Err(MarketError::Invalid("empty network or no agents".into()));
    }
    let mut nodes: Vec<String> = Vec::new();
    for e in edges {
        if e.from == e.to {
            return Err(MarketError::BadGraph(format!("self loop at {}", e.from)));
        }
        if !e.capacity.is_positive() {
            return Err(MarketError::NonPositiveInput(format!("capacity of edge {}-{}", e.from, e.to)));
        }
        if e.delay.is_negative() {
            return Err(MarketError::Invalid(format!("negative delay on edge {}-{}", e.from, e.to)));
        }
        for v in [&e.from, &e.to] {
            if !nodes.contains(v) {
                nodes.push(v.clone());
            }
        }
    }
    let m = edges.len();
    let goods: Vec<String> = edges.iter().map(|e| format!("{}-{}", e.from, e.to)).collect();
    let delays: Vec<Rational> = edges.iter().map(|e| &e.delay * &e.capacity).collect();
    // net inflow coefficients per node
    let inflow = |v: &str| -> Vec<Rational> {
        edges
            .iter()
            .map(|e| {
                if e.to == v {
                    e.capacity.clone()
                } else if e.from == v {
                    -e.capacity.clone()
                } else {
                    Rational::zero()
                }
            })
            .collect()
    };
    let mut out = Vec::new();
    for (i, a) in agents.iter().enumerate() {
        for v in [&a.source, &a.sink] {
            if !nodes.contains(v) {
                return Err(MarketError::BadGraph(format!("agent {} references unknown node {v}", i + 1)));
            }
        }
        if a.source == a.sink {
            return Err(MarketError::BadGraph(format!("agent {} has equal source and sink", i + 1)));
        }
        if !a.demand.is_positive() {
            return Err(MarketError::NonPositiveInput(format!("demand of agent {}", i + 1)));
        }
        if !a.budget.is_positive() {
            return Err(MarketError::NonPositiveInput(format!("budget of agent {}", i + 1)));
        }
        let mut covers = Vec::new();
        for v in &nodes {
            if *v == a.source || *v == a.sink {
                continue;
            }
            let row = inflow(v);
            covers.push(Cover { coeffs: row.iter().map(|c| -c).collect(), rhs: Rational::zero() });
            covers.push(Cover { coeffs: row, rhs: Rational::zero() });
        }
        covers.push(Cover { coeffs: inflow(&a.sink), rhs: a.demand.clone() });
        out.push(Agent { id: format!("{}", i + 1), budget: a.budget.clone(), delays: delays.clone(), covers });
    }
    debug_assert!(out.iter().all(|a| a.delays.len() == m));
    Ok(MarketInstance { name: "flow".into(), goods, agents: out })
}

/// Per-agent outcome of the sufficient-demand test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SufficientDemandReport {
    /// Some optimal zero-price bundle of agent `i` holds more than one unit of a good.
    pub per_agent: Vec<bool>,
    /// The agents' canonical zero-price bundles together over-demand some good.
    pub aggregate_overdemand: bool,
}

impl SufficientDemandReport {
    /// Accepted under the existential per-agent reading, or failing that,
    /// under the aggregate reading (reported separately so callers can tell).
    pub fn satisfied(&self) -> bool {
        self.per_agent.iter().all(|&b| b) || self.aggregate_overdemand
    }
}

/// Zero-price delay LP of agent `i`: covering rows only, no supply limits.
fn delay_lp(inst: &MarketInstance, i: usize) -> LinearProgram {
    let m = inst.num_goods();
    let a = &inst.agents[i];
    let mut lp = LinearProgram::new(m);
    lp.set_objective(a.delays.clone(), Sense::Minimize);
    for c in &a.covers {
        let coeffs: Vec<(usize, Rational)> =
            c.coeffs.iter().enumerate().filter(|(_, v)| !v.is_zero()).map(|(j, v)| (j, v.clone())).collect();
        if coeffs.is_empty() {
            // 0 >= rhs: keep it visible to the solver.
            lp.add_constraint(vec![(0, Rational::zero())], Relation::Ge, c.rhs.clone());
        } else {
            lp.add_constraint(coeffs, Relation::Ge, c.rhs.clone());
        }
    }
    lp
}

pub fn check_sufficient_demand(inst: &MarketInstance) -> Result<SufficientDemandReport, MarketError> {
    let m = inst.num_goods();
    let mut per_agent = Vec::new();
    let mut demand = vec![Rational::zero(); m];
    for i in 0..inst.num_agents() {
        let lp = delay_lp(inst, i);
        let base = rational_lp::solve(&lp).map_err(|e| MarketError::Invalid(e.to_string()))?;
        if base.status != LpStatus::Optimal {
            return Err(MarketError::DelayLpInfeasible(i));
        }
        for (j, v) in base.x.iter().enumerate() {
            demand[j] += v;
        }
        let mut over = false;
        for j in 0..m {
            let Some(mut st) = StagedLp::new(&lp).map_err(|e| MarketError::Invalid(e.to_string()))? else {
                return Err(MarketError::DelayLpInfeasible(i));
            };
            st.optimize(&lp.objective, Sense::Minimize).map_err(|e| MarketError::Invalid(e.to_string()))?;
            st.restrict_to_optimal_face();
            let mut e = vec![Rational::zero(); m];
            e[j] = Rational::one();
            match st.optimize(&e, Sense::Maximize).map_err(|e| MarketError::Invalid(e.to_string()))? {
                StageResult::Unbounded => over = true,
                StageResult::Optimal(v) => over |= v > Rational::one(),
            }
            if over {
                break;
            }
        }
        per_agent.push(over);
    }
    let aggregate_overdemand = demand.iter().any(|d| d > &Rational::one());
    Ok(SufficientDemandReport { per_agent, aggregate_overdemand })
}

/// Parses a rational literal: `p`, `-p`, or `p/q`, optionally quoted.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim().trim_matches('"').trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let valid = |t: &str| {
        let t = t.strip_prefix('-').or_else(|| t.strip_prefix('+')).unwrap_or(t);
        !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit())
    };
    if !valid(n) || !valid(d) || d.starts_with('-') {
        return None;
    }
    let n: BigInt = n.trim_start_matches('+').parse().ok()?;
    let d: BigInt = d.trim_start_matches('+').parse().ok()?;
    if d.is_zero() {
        return None;
    }
    Some(Rational::new(n, d))
}

/// Formats as `p` or `p/q` in lowest terms.
pub fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
