//! Set-function minimization over nonempty subsets, and a submodularity test.
//!
//! Subsets of the ground set are bitmasks over positions in `ground`.

use thiserror::Error;

use crate::rational_lp::Rational;

/// Largest ground set handled by enumeration.
pub const ENUMERATION_LIMIT: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SubmodularError {
    #[error("ground set of size {0} exceeds the enumeration limit")]
    GroundSetTooLarge(usize),
    #[error("ground set is empty")]
    EmptyGroundSet,
}

/// A set function on nonempty subsets of `ground`.
pub trait SetFunctionOracle {
    /// Element ids (agent indices in this crate).
    fn ground(&self) -> &[usize];
    /// Value on the subset whose positions in `ground` are the set bits of `mask`.
    fn eval(&self, mask: u32) -> Rational;
}

/// Oracle wrapping a closure.
pub struct FnOracle<F: Fn(u32) -> Rational> {
    pub ground: Vec<usize>,
    pub f: F,
}

impl<F: Fn(u32) -> Rational> SetFunctionOracle for FnOracle<F> {
    fn ground(&self) -> &[usize] {
        &self.ground
    }
    fn eval(&self, mask: u32) -> Rational {
        (self.f)(mask)
    }
}

/// Element ids selected by `mask`, in ground order.
pub fn members(ground: &[usize], mask: u32) -> Vec<usize> {
    ground.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &e)| e).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Minimum {
    /// Canonical minimizer (bitmask over ground positions).
    pub mask: u32,
    pub set: Vec<usize>,
    pub value: Rational,
    /// False when the union of all minimizers was not itself a minimizer,
    /// which cannot happen for a submodular function.
    pub lattice: bool,
}

/// Minimum over all nonempty subsets by enumeration. The canonical
/// minimizer is the union of all minimizers when that union attains the
/// minimum, otherwise the lexicographically smallest minimizer.
pub fn minimize(oracle: &dyn SetFunctionOracle) -> Result<Minimum, SubmodularError> {
    let n = oracle.ground().len();
    if n == 0 {
        return Err(SubmodularError::EmptyGroundSet);
    }
    if n > ENUMERATION_LIMIT {
        return Err(SubmodularError::GroundSetTooLarge(n));
    }
    let values: Vec<Rational> = (1u32..(1u32 << n)).map(|m| oracle.eval(m)).collect();
    Ok(minimum_of_table(oracle.ground(), &values))
}

/// As [`minimize`], from values indexed by `mask - 1`.
pub fn minimum_of_table(ground: &[usize], values: &[Rational]) -> Minimum {
    let min = values.iter().min().expect("nonempty table").clone();
    let mut union = 0u32;
    let mut lex: Option<Vec<usize>> = None;
    let mut lex_mask = 0u32;
    for (k, v) in values.iter().enumerate() {
        if *v == min {
            let mask = k as u32 + 1;
            union |= mask;
            let set = members(ground, mask);
            if lex.as_ref().is_none_or(|l| set < *l) {
                lex = Some(set);
                lex_mask = mask;
            }
        }
    }
    let lattice = values[union as usize - 1] == min;
    let mask = if lattice { union } else { lex_mask };
    Minimum { mask, set: members(ground, mask), value: min, lattice }
}

/// A violation `f(S+x) - f(S) < f(T+x) - f(T)` with `S ⊆ T`, `x ∉ T`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub s: Vec<usize>,
    pub t: Vec<usize>,
    pub x: usize,
}

/// Exhaustive diminishing-returns check restricted to nonempty `S`.
/// Uses the equivalent local form `T = S + y`, which is complete because
/// any chain `S ⊆ T` telescopes through single-element steps.
pub fn check_submodular(oracle: &dyn SetFunctionOracle) -> Result<Option<Counterexample>, SubmodularError> {
    let ground = oracle.ground();
    let n = ground.len();
    if n > ENUMERATION_LIMIT {
        return Err(SubmodularError::GroundSetTooLarge(n));
    }
    let full = if n == 0 { 0 } else { (1u32 << n) - 1 };
    let values: Vec<Rational> = (0..=full).map(|m| if m == 0 { Rational::default() } else { oracle.eval(m) }).collect();
    for s in 1..=full {
        for x in 0..n {
            if s >> x & 1 == 1 {
                continue;
            }
            for y in 0..n {
                if y == x || s >> y & 1 == 1 {
                    continue;
                }
                let t = s | 1 << y;
                let lhs = &values[(s | 1 << x) as usize] - &values[s as usize];
                let rhs = &values[(t | 1 << x) as usize] - &values[t as usize];
                if lhs < rhs {
                    return Ok(Some(Counterexample {
                        s: members(ground, s),
                        t: members(ground, t),
                        x: ground[x],
                    }));
                }
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational_lp::int;

    fn card(m: u32) -> i64 {
        m.count_ones() as i64
    }

    #[test]
    fn cardinality_has_singleton_minimizers() {
        let o = FnOracle { ground: vec![0, 1, 2], f: |m| int(card(m)) };
        let r = minimize(&o).unwrap();
        assert_eq!(r.value, int(1));
        assert_eq!(r.set, vec![0]);
        assert!(!r.lattice);
    }

    #[test]
    fn negative_cardinality_takes_everything() {
        let o = FnOracle { ground: vec![4, 5, 6], f: |m| int(-card(m)) };
        let r = minimize(&o).unwrap();
        assert_eq!(r.set, vec![4, 5, 6]);
        assert_eq!(r.value, int(-3));
    }

    #[test]
    fn square_is_not_submodular() {
        let o = FnOracle { ground: vec![0, 1, 2], f: |m| int(card(m) * card(m)) };
        let c = check_submodular(&o).unwrap().expect("counterexample");
        assert!(c.s.len() < c.t.len());
        assert!(!c.t.contains(&c.x));
    }

    #[test]
    fn truncated_cardinality_is_submodular() {
        let o = FnOracle { ground: vec![0, 1, 2, 3], f: |m| int(card(m).min(2)) };
        assert_eq!(check_submodular(&o).unwrap(), None);
    }

    #[test]
    fn too_large() {
        let o = FnOracle { ground: (0..21).collect(), f: |_| int(0) };
        assert_eq!(minimize(&o).unwrap_err(), SubmodularError::GroundSetTooLarge(21));
    }
}
