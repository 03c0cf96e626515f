//! Helpers shared by the integration tests.
#![allow(dead_code)]

use covmarket::cli::solve_instance;
use covmarket::corpus;
use covmarket::format::EquilibriumRecord;
use covmarket::market_model::MarketInstance;
use covmarket::rational_lp::{int, Rational};
use covmarket::scheduling_solver::SchedulingEquilibrium;
use covmarket::submodular::members;
use covmarket::verifier::check_price_equilibrium;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// Integer budgets in `1..=100` and requirements in `1..=max_req`.
pub fn random_schedule(rng: &mut ChaCha8Rng, max_agents: usize, max_req: u32) -> (Vec<Rational>, Vec<u32>) {
    let n = rng.gen_range(1..=max_agents);
    let budgets = (0..n).map(|_| int(rng.gen_range(1..=100))).collect();
    let reqs = (0..n).map(|_| rng.gen_range(1..=max_req)).collect();
    (budgets, reqs)
}

/// Solver output on every corpus market.
pub fn solved_corpus() -> Vec<(&'static str, MarketInstance, EquilibriumRecord)> {
    corpus::all_markets()
        .into_iter()
        .map(|(name, inst)| {
            let rec = solve_instance(&inst, false).unwrap_or_else(|e| panic!("{name}: {e}")).record();
            (name, inst, rec)
        })
        .collect()
}

/// Witness equilibria for the published price vectors of both
/// single-machine markets. Vectors the checker rejects have no witness
/// and are left out.
pub fn published_corpus() -> Vec<(String, MarketInstance, Vec<Rational>, covmarket::market_model::Allocation)> {
    let mut out = Vec::new();
    for (tag, inst, table) in [
        ("six", corpus::six_agent_market(), corpus::six_agent_equilibria()),
        ("nine", corpus::nine_agent_market(), corpus::nine_agent_equilibria()),
    ] {
        for (k, p) in table.into_iter().enumerate() {
            if let Some(x) = check_price_equilibrium(&inst, &p).unwrap() {
                out.push((format!("{tag}-agent vector {}", k + 1), inst.clone(), p, x));
            }
        }
    }
    out
}

/// Segment price sums equal segment budgets, and for every proper subset
/// the last `r(S)` slots of its segment cost at most `m(S)`. Returns the
/// first violation.
pub fn segment_conditions(eq: &SchedulingEquilibrium, budgets: &[Rational], reqs: &[u32]) -> Result<(), String> {
    for seg in &eq.segments {
        let prices = &eq.prices[seg.first_slot - 1..seg.last_slot];
        let total: Rational = prices.iter().sum();
        let m: Rational = seg.agents.iter().map(|&i| &budgets[i]).sum();
        if total != m {
            return Err(format!("segment {:?} sums to {total}, budget {m}", seg.agents));
        }
        let k = seg.agents.len();
        for mask in 1u32..(1 << k) - 1 {
            let s = members(&seg.agents, mask);
            let r: usize = s.iter().map(|&i| reqs[i] as usize).sum();
            let last: Rational = prices[prices.len() - r..].iter().sum();
            let ms: Rational = s.iter().map(|&i| &budgets[i]).sum();
            if last > ms {
                return Err(format!("subset {s:?} of {:?}: last {r} slots cost {last} > {ms}", seg.agents));
            }
        }
    }
    Ok(())
}

/// Prices decrease along slots with non-increasing decrements.
pub fn convex_decreasing(prices: &[Rational]) -> bool {
    let gaps: Vec<Rational> = prices.windows(2).map(|w| &w[0] - &w[1]).collect();
    gaps.iter().all(|g| g > &int(0)) && gaps.windows(2).all(|w| w[0] >= w[1])
}

pub fn spends_budgets(inst: &MarketInstance, rec_prices: &[Rational], x: &covmarket::market_model::Allocation) -> bool {
    inst.agents.iter().enumerate().all(|(i, a)| {
        let spent: Rational = x.x[i].iter().zip(rec_prices).map(|(v, p)| v * p).sum();
        spent == a.budget
    })
}
