//! Reference instances and published price vectors used by tests, the
//! acceptance suite and `gen`.

use crate::market_model::{
    build_flow_market, build_laminar_restricted, build_multi_type_scheduling, build_single_machine, FlowAgent, FlowEdge,
    MarketInstance,
};
use crate::rational_lp::{int, ratio, Rational};

/// Budgets of the six-agent single-machine market (one slot each).
pub const SIX_AGENT_BUDGETS: [i64; 6] = [30, 17, 9, 4, 3, 1];
/// Budgets of the nine-agent single-machine market (one slot each).
pub const NINE_AGENT_BUDGETS: [i64; 9] = [56, 45, 33, 23, 17, 10, 4, 3, 1];

pub fn six_agent_budgets() -> Vec<Rational> {
    SIX_AGENT_BUDGETS.iter().map(|&b| int(b)).collect()
}

pub fn nine_agent_budgets() -> Vec<Rational> {
    NINE_AGENT_BUDGETS.iter().map(|&b| int(b)).collect()
}

pub fn six_agent_market() -> MarketInstance {
    let mut inst = build_single_machine(&six_agent_budgets(), &[1; 6]).expect("valid");
    inst.name = "six-agents".into();
    inst
}

pub fn nine_agent_market() -> MarketInstance {
    let mut inst = build_single_machine(&nine_agent_budgets(), &[1; 9]).expect("valid");
    inst.name = "nine-agents".into();
    inst
}

fn thirds(v: &[i64]) -> Vec<Rational> {
    v.iter().map(|&x| ratio(x, 3)).collect()
}

/// Six equilibrium price vectors of the six-agent market.
pub fn six_agent_equilibria() -> Vec<Vec<Rational>> {
    [
        [90, 51, 27, 15, 6, 3],
        [90, 51, 27, 13, 8, 3],
        [102, 39, 27, 15, 6, 3],
        [102, 39, 27, 16, 8, 0],
        [105, 39, 24, 13, 8, 3],
        [105, 39, 24, 16, 8, 0],
    ]
    .iter()
    .map(|v| thirds(v))
    .collect()
}

/// Pairs of six-agent equilibria whose midpoint is not an equilibrium (0-based).
pub const SIX_AGENT_BROKEN_SEGMENTS: [(usize, usize); 3] = [(0, 5), (1, 4), (2, 3)];

/// Twenty equilibrium price vectors of the nine-agent market.
pub fn nine_agent_equilibria() -> Vec<Vec<Rational>> {
    [
        [171, 132, 99, 72, 48, 30, 15, 6, 3],
        [171, 134, 97, 72, 48, 30, 15, 6, 3],
        [171, 132, 99, 72, 50, 28, 15, 6, 3],
        [171, 132, 99, 72, 48, 30, 15, 8, 1],
        [172, 134, 96, 72, 48, 30, 15, 6, 3],
        [171, 132, 99, 73, 50, 27, 15, 6, 3],
        [171, 132, 99, 72, 48, 30, 16, 8, 0],
        [172, 134, 96, 72, 50, 28, 15, 6, 3],
        [172, 134, 96, 72, 48, 30, 15, 8, 1],
        [171, 134, 97, 73, 50, 27, 15, 6, 3],
        [171, 132, 99, 73, 50, 27, 15, 8, 1],
        [171, 132, 99, 72, 50, 28, 16, 8, 0],
        [171, 134, 97, 72, 48, 30, 16, 8, 0],
        [172, 134, 96, 73, 50, 27, 15, 6, 3],
        [172, 134, 96, 72, 48, 30, 16, 8, 0],
        [171, 132, 99, 73, 50, 27, 16, 8, 0],
        [171, 134, 97, 73, 50, 27, 16, 8, 0],
        [172, 134, 96, 73, 50, 27, 15, 8, 1],
        [172, 134, 96, 72, 50, 28, 16, 8, 0],
        [172, 134, 96, 73, 50, 27, 16, 8, 0],
    ]
    .iter()
    .map(|v| thirds(v))
    .collect()
}

fn edge(from: &str, to: &str, capacity: i64, delay: i64) -> FlowEdge {
    FlowEdge { from: from.into(), to: to.into(), capacity: int(capacity), delay: int(delay) }
}

/// Series-parallel network from `s` to `t` (capacity, delay per unit flow).
pub fn series_parallel_edges() -> Vec<FlowEdge> {
    vec![
        edge("s", "t", 13, 7),
        edge("s", "x", 20, 4),
        edge("x", "t", 20, 4),
        edge("s", "w", 33, 1),
        edge("w", "t", 15, 5),
        edge("w", "u", 21, 1),
        edge("u", "t", 15, 3),
        edge("u", "v", 15, 1),
        edge("v", "t", 10, 1),
        edge("s", "v", 10, 7),
    ]
}

/// Five `s`-`t` agents with demands 10..14 and budgets 12, 10, 4, 2, 2.
pub fn series_parallel_agents() -> Vec<FlowAgent> {
    [(10, 12), (11, 10), (12, 4), (13, 2), (14, 2)]
        .iter()
        .map(|&(d, b)| FlowAgent { source: "s".into(), sink: "t".into(), demand: int(d), budget: int(b) })
        .collect()
}

pub fn series_parallel_market() -> MarketInstance {
    let mut inst = build_flow_market(&series_parallel_edges(), &series_parallel_agents()).expect("valid");
    inst.name = "series-parallel".into();
    inst
}

/// Price per unit of flow on each edge, from per-good prices.
pub fn edge_unit_prices(edges: &[FlowEdge], good_prices: &[Rational]) -> Vec<Rational> {
    edges.iter().zip(good_prices).map(|(e, p)| p / &e.capacity).collect()
}

fn ints(v: &[i64]) -> Vec<Rational> {
    v.iter().map(|&x| int(x)).collect()
}

/// Two machine types (three and four units) shared by three agents.
pub fn multi_type_market() -> MarketInstance {
    let delays = vec![ints(&[1, 2, 3]), ints(&[2, 4, 6, 8])];
    let reqs = vec![ints(&[1, 1]), ints(&[1, 1]), ints(&[0, 1])];
    let mut inst = build_multi_type_scheduling(&delays, &ints(&[10, 6, 3]), &reqs).expect("valid");
    inst.name = "two-machine-types".into();
    inst
}

/// Four machines; the richest agent may also use the fastest one.
pub fn laminar_market() -> MarketInstance {
    let allowed = vec![vec![vec![0, 1, 2, 3]], vec![vec![1, 2, 3]], vec![vec![1, 2, 3]]];
    let reqs = vec![ints(&[1]), ints(&[1]), ints(&[1])];
    let mut inst = build_laminar_restricted(&[ints(&[1, 2, 3, 4])], &ints(&[8, 5, 2]), &reqs, &allowed).expect("valid");
    inst.name = "nested-machines".into();
    inst
}

/// Every reference market with the file name of its bundled fixture.
pub fn all_markets() -> Vec<(&'static str, MarketInstance)> {
    vec![
        ("six_agents.market", six_agent_market()),
        ("nine_agents.market", nine_agent_market()),
        ("series_parallel.market", series_parallel_market()),
        ("two_machine_types.market", multi_type_market()),
        ("nested_machines.market", laminar_market()),
    ]
}
