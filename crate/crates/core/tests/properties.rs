//! Invariants of the scheduling solver, the verifier and the file formats
//! over generated markets.

mod common;

use std::path::Path;

use covmarket::corpus;
use covmarket::format::{parse_equilibrium, parse_instance, write_equilibrium, write_instance};
use covmarket::market_model::build_single_machine;
use covmarket::rational_lp::{int, Rational};
use covmarket::scheduling_solver::solve_scheduling;
use covmarket::verifier::{check_price_equilibrium, verify_equilibrium};
use num::Signed;
use proptest::prelude::*;

fn schedule() -> impl Strategy<Value = (Vec<Rational>, Vec<u32>)> {
    prop::collection::vec((1i64..=100, 1u32..=3), 1..=6)
        .prop_map(|v| (v.iter().map(|&(b, _)| int(b)).collect(), v.iter().map(|&(_, r)| r).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn scheduling_output_is_a_verified_equilibrium((b, r) in schedule()) {
        let eq = solve_scheduling(&b, &r).unwrap();
        let inst = build_single_machine(&b, &r).unwrap();
        let rep = verify_equilibrium(&inst, &eq.allocation, &eq.prices).unwrap();
        prop_assert!(rep.passed(), "{}", rep.to_text(&inst));
        prop_assert!(common::spends_budgets(&inst, &eq.prices, &eq.allocation));
        prop_assert!(eq.prices.iter().all(|p| p.is_positive()));
    }

    #[test]
    fn segments_partition_agents_and_slots((b, r) in schedule()) {
        let eq = solve_scheduling(&b, &r).unwrap();
        let mut seen: Vec<usize> = eq.segments.iter().flat_map(|s| s.agents.clone()).collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..b.len()).collect::<Vec<_>>());
        let total: usize = r.iter().map(|&x| x as usize).sum();
        // Segments are listed latest first and tile 1..=total.
        let mut next_last = total;
        for s in &eq.segments {
            prop_assert_eq!(s.last_slot, next_last);
            let need: usize = s.agents.iter().map(|&i| r[i] as usize).sum();
            prop_assert_eq!(s.last_slot + 1 - s.first_slot, need);
            next_last = s.first_slot - 1;
        }
        prop_assert_eq!(next_last, 0);
        prop_assert!(eq.segments.windows(2).all(|w| w[0].lambda < w[1].lambda));
    }

    #[test]
    fn price_curve_and_segment_conditions((b, r) in schedule()) {
        let eq = solve_scheduling(&b, &r).unwrap();
        prop_assert!(common::convex_decreasing(&eq.prices), "{:?}", eq.prices);
        if let Err(e) = common::segment_conditions(&eq, &b, &r) {
            return Err(TestCaseError::fail(e));
        }
    }

    #[test]
    fn budgets_scale_prices((b, r) in schedule(), c in 2i64..=7) {
        let eq = solve_scheduling(&b, &r).unwrap();
        let scaled: Vec<Rational> = b.iter().map(|x| x * int(c)).collect();
        let eq2 = solve_scheduling(&scaled, &r).unwrap();
        let want: Vec<Rational> = eq.prices.iter().map(|p| p * int(c)).collect();
        prop_assert_eq!(eq2.prices, want);
        prop_assert_eq!(eq2.allocation, eq.allocation);
    }

    #[test]
    fn price_checker_agrees_with_solver((b, r) in schedule(), bump in 0usize..18) {
        let eq = solve_scheduling(&b, &r).unwrap();
        let inst = build_single_machine(&b, &r).unwrap();
        let x = check_price_equilibrium(&inst, &eq.prices).unwrap();
        prop_assert!(x.is_some());
        let x = x.unwrap();
        prop_assert!(verify_equilibrium(&inst, &x, &eq.prices).unwrap().passed());

        // All slots are sold, so prices must add up to the total budget.
        let mut p = eq.prices.clone();
        let j = bump % p.len();
        p[j] += int(1);
        prop_assert!(check_price_equilibrium(&inst, &p).unwrap().is_none());
    }

    #[test]
    fn files_round_trip((b, r) in schedule()) {
        let inst = build_single_machine(&b, &r).unwrap();
        let back = parse_instance(&write_instance(&inst)).unwrap();
        prop_assert_eq!(&back, &inst);
        let rec = solve_scheduling(&b, &r).unwrap().to_record();
        let text = write_equilibrium(&inst, &rec);
        prop_assert_eq!(parse_equilibrium(&inst, &text).unwrap(), rec);
    }
}

#[test]
fn fixtures_match_corpus() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    for (file, inst) in corpus::all_markets() {
        let text = std::fs::read_to_string(dir.join(file)).unwrap();
        assert_eq!(parse_instance(&text).unwrap(), inst, "{file}");
        assert_eq!(text, write_instance(&inst), "{file}");
    }
}

#[test]
fn corpus_solutions_verify() {
    for (name, inst, rec) in common::solved_corpus() {
        let rep = verify_equilibrium(&inst, &rec.allocation, &rec.prices).unwrap();
        assert!(rep.passed(), "{name}: {}", rep.to_text(&inst));
        assert!(common::spends_budgets(&inst, &rec.prices, &rec.allocation), "{name}");
        assert!(rec.segments.windows(2).all(|w| w[0].1 < w[1].1), "{name}");
    }
}
