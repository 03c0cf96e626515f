//! The simplex against an independent vertex-enumeration oracle.

use covmarket::rational_lp::*;
use num::{Signed, Zero};
use proptest::prelude::*;

/// Solves a square system exactly; `None` when singular.
fn solve_square(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &a[col][col];
            for k in col..n {
                let t = &f * &a[col][k];
                a[r][k] -= t;
            }
            let t = &f * &b[col];
            b[r] -= t;
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Best objective over all vertices, or `None` when no vertex is feasible.
/// Every variable carries an explicit upper bound row, so the region is a polytope.
fn vertex_oracle(lp: &LinearProgram) -> Option<Rational> {
    let n = lp.num_vars;
    let mut ineq: Vec<(Vec<Rational>, Rational)> = Vec::new();
    for c in &lp.constraints {
        let mut row = vec![Rational::zero(); n];
        for (v, a) in &c.coeffs {
            row[*v] += a;
        }
        match c.relation {
            Relation::Le => ineq.push((row, c.rhs.clone())),
            Relation::Ge => ineq.push((row.iter().map(|v| -v).collect(), -c.rhs.clone())),
            Relation::Eq => {
                ineq.push((row.clone(), c.rhs.clone()));
                ineq.push((row.iter().map(|v| -v).collect(), -c.rhs.clone()));
            }
        }
    }
    for j in 0..n {
        let mut row = vec![Rational::zero(); n];
        row[j] = int(-1);
        ineq.push((row, Rational::zero()));
    }
    let mut best: Option<Rational> = None;
    for pick in combinations(ineq.len(), n) {
        let a: Vec<Vec<Rational>> = pick.iter().map(|&i| ineq[i].0.clone()).collect();
        let b: Vec<Rational> = pick.iter().map(|&i| ineq[i].1.clone()).collect();
        let Some(x) = solve_square(a, b) else { continue };
        let ok = ineq.iter().all(|(row, rhs)| {
            let lhs: Rational = row.iter().zip(&x).map(|(p, q)| p * q).sum();
            &lhs <= rhs
        });
        if !ok {
            continue;
        }
        let val: Rational = lp.objective.iter().zip(&x).map(|(p, q)| p * q).sum();
        best = Some(match (best, lp.sense) {
            (None, _) => val,
            (Some(b), Sense::Minimize) => b.min(val),
            (Some(b), Sense::Maximize) => b.max(val),
        });
    }
    best
}

fn lp_strategy(max_vars: usize, max_rows: usize) -> impl Strategy<Value = LinearProgram> {
    (1..=max_vars, 1..=max_rows).prop_flat_map(|(n, m)| {
        let row = (prop::collection::vec(-4i64..=4, n), 0u8..3, -6i64..=8);
        (
            Just(n),
            prop::collection::vec(-5i64..=5, n),
            any::<bool>(),
            prop::collection::vec(row, m),
        )
            .prop_map(|(n, obj, maximize, rows)| {
                let mut lp = LinearProgram::new(n);
                let sense = if maximize { Sense::Maximize } else { Sense::Minimize };
                lp.set_objective(obj.into_iter().map(int).collect(), sense);
                for (coeffs, rel, rhs) in rows {
                    let mut sparse: Vec<(usize, Rational)> =
                        coeffs.into_iter().enumerate().filter(|(_, a)| *a != 0).map(|(j, a)| (j, int(a))).collect();
                    if sparse.is_empty() {
                        sparse.push((0, int(1)));
                    }
                    let relation = match rel {
                        0 => Relation::Le,
                        1 => Relation::Ge,
                        _ => Relation::Eq,
                    };
                    lp.add_constraint(sparse, relation, int(rhs));
                }
                for j in 0..n {
                    lp.add_constraint(vec![(j, int(1))], Relation::Le, int(10));
                }
                lp
            })
    })
}

fn check_certificate(lp: &LinearProgram, s: &LpSolution) {
    assert!(is_feasible_point(lp, &s.x));
    let dual_obj: Rational = lp.constraints.iter().zip(&s.duals).map(|(c, y)| &c.rhs * y).sum();
    assert_eq!(dual_obj, s.objective, "strong duality");
    let flip = lp.sense == Sense::Maximize;
    for (c, y) in lp.constraints.iter().zip(&s.duals) {
        let y = if flip { -y.clone() } else { y.clone() };
        match c.relation {
            Relation::Ge => assert!(!y.is_negative()),
            Relation::Le => assert!(!y.is_positive()),
            Relation::Eq => {}
        }
        let slack = row_value(&c.coeffs, &s.x) - &c.rhs;
        assert!((slack * y).is_zero(), "row complementary slackness");
    }
    for (j, rc) in s.reduced_costs.iter().enumerate() {
        let rc = if flip { -rc.clone() } else { rc.clone() };
        assert!(!rc.is_negative(), "dual feasibility");
        assert!((&rc * &s.x[j]).is_zero(), "column complementary slackness");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]
    #[test]
    fn small_programs_match_vertex_oracle(lp in lp_strategy(4, 4)) {
        let s = solve(&lp).unwrap();
        match vertex_oracle(&lp) {
            None => prop_assert_eq!(s.status, LpStatus::Infeasible),
            Some(best) => {
                prop_assert_eq!(s.status, LpStatus::Optimal);
                prop_assert_eq!(&s.objective, &best);
                check_certificate(&lp, &s);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn six_by_six_programs_match_vertex_oracle(lp in lp_strategy(6, 6)) {
        let s = solve(&lp).unwrap();
        match vertex_oracle(&lp) {
            None => prop_assert_eq!(s.status, LpStatus::Infeasible),
            Some(best) => {
                prop_assert_eq!(s.status, LpStatus::Optimal);
                prop_assert_eq!(&s.objective, &best);
                check_certificate(&lp, &s);
            }
        }
    }

    #[test]
    fn repeated_solves_are_identical(lp in lp_strategy(5, 5)) {
        prop_assert_eq!(solve(&lp).unwrap(), solve(&lp).unwrap());
    }

    #[test]
    fn lexicographic_second_stage_stays_optimal(lp in lp_strategy(4, 4), second in prop::collection::vec(-3i64..=3, 4)) {
        let first = solve(&lp).unwrap();
        if first.status != LpStatus::Optimal {
            return Ok(());
        }
        let obj2: Vec<Rational> = second.into_iter().take(lp.num_vars).map(int).chain(std::iter::repeat(int(0))).take(lp.num_vars).collect();
        let lex = solve_lexicographic(&lp, &[(lp.objective.clone(), lp.sense), (obj2.clone(), Sense::Minimize)]).unwrap();
        let v1: Rational = lex.x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
        prop_assert_eq!(v1, first.objective.clone());
        // Oracle: second stage equals a plain solve with the first value pinned.
        let mut pinned = lp.clone();
        pinned.add_constraint(
            lp.objective.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(j, c)| (j, c.clone())).collect::<Vec<_>>(),
            Relation::Eq,
            first.objective.clone(),
        );
        if pinned.constraints.last().unwrap().coeffs.is_empty() {
            pinned.constraints.pop();
        }
        pinned.set_objective(obj2, Sense::Minimize);
        let direct = solve(&pinned).unwrap();
        prop_assert_eq!(lex.objective, direct.objective);
    }
}

#[test]
fn textbook_program_matches_oracle() {
    let mut lp = LinearProgram::new(3);
    lp.set_objective(vec![ratio(3, 2), int(-1), int(2)], Sense::Minimize);
    lp.add_constraint(vec![(0, int(1)), (1, int(1)), (2, int(1))], Relation::Ge, int(2));
    lp.add_constraint(vec![(0, int(2)), (1, int(-1))], Relation::Le, ratio(7, 3));
    lp.add_constraint(vec![(1, int(1)), (2, int(3))], Relation::Eq, int(3));
    for j in 0..3 {
        lp.add_constraint(vec![(j, int(1))], Relation::Le, int(10));
    }
    let s = solve(&lp).unwrap();
    assert_eq!(Some(s.objective.clone()), vertex_oracle(&lp));
    check_certificate(&lp, &s);
}
