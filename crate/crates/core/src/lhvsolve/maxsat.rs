//! Maximum number of parity constraints satisfiable by one ±1 value per
//! outcome variable, by enumeration of all assignments.

use std::collections::BTreeMap;

use crate::gamedef::ParityConstraint;
use crate::qsim::{Sign, SiteObservable};

use super::SolveError;

pub const MAX_SAT_VARIABLES: usize = 20;

pub type Assignment = BTreeMap<SiteObservable, Sign>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxSatResult {
    /// Distinct variables, sorted; bit `i` of a witness mask is `vars[i]`.
    pub vars: Vec<SiteObservable>,
    pub total: usize,
    pub max_satisfied: usize,
    witness_masks: Vec<u32>,
}

impl MaxSatResult {
    pub fn witness_count(&self) -> usize {
        self.witness_masks.len()
    }

    pub fn witness(&self, index: usize) -> Assignment {
        let mask = self.witness_masks[index];
        self.vars
            .iter()
            .enumerate()
            .map(|(i, v)| (*v, Sign::from_bit((mask >> i) & 1 == 1)))
            .collect()
    }

    /// Every maximizing assignment.
    pub fn witnesses(&self) -> impl Iterator<Item = Assignment> + '_ {
        (0..self.witness_masks.len()).map(|i| self.witness(i))
    }
}

/// Exact max-sat over all `2^vars` assignments.
pub fn noncontextual_maxsat(constraints: &[ParityConstraint]) -> Result<MaxSatResult, SolveError> {
    let mut vars: Vec<SiteObservable> = constraints.iter().flat_map(|c| c.vars().iter().copied()).collect();
    vars.sort_unstable();
    vars.dedup();
    if vars.len() > MAX_SAT_VARIABLES {
        return Err(SolveError::TooManyVariables { got: vars.len(), max: MAX_SAT_VARIABLES });
    }
    let compiled: Vec<(u32, bool)> = constraints
        .iter()
        .map(|c| {
            let mask = c
                .vars()
                .iter()
                .map(|v| 1u32 << vars.binary_search(v).expect("collected above"))
                .fold(0, |m, b| m | b);
            (mask, c.sign() == Sign::Minus)
        })
        .collect();
    let mut best = 0usize;
    let mut witness_masks = Vec::new();
    for assignment in 0u32..(1u32 << vars.len()) {
        let satisfied = compiled
            .iter()
            .filter(|(mask, odd)| ((assignment & mask).count_ones() & 1 == 1) == *odd)
            .count();
        if satisfied > best {
            best = satisfied;
            witness_masks.clear();
        }
        if satisfied == best {
            witness_masks.push(assignment);
        }
    }
    Ok(MaxSatResult { vars, total: constraints.len(), max_satisfied: best, witness_masks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_constraint() {
        let c: ParityConstraint = "-1 x1 y2".parse().unwrap();
        let r = noncontextual_maxsat(std::slice::from_ref(&c)).unwrap();
        assert_eq!(r.max_satisfied, 1);
        assert_eq!(r.witness_count(), 2);
        for w in r.witnesses() {
            assert!(c.holds_with(|v| w.get(&v).copied()).unwrap());
        }
    }

    #[test]
    fn contradictory_pair() {
        let a: ParityConstraint = "+1 x1 x2".parse().unwrap();
        let r = noncontextual_maxsat(&[a.clone(), a.negated()]).unwrap();
        assert_eq!(r.max_satisfied, 1);
        assert_eq!(r.witness_count(), 4);
    }

    #[test]
    fn variable_bound() {
        let line: String = (1..=21).map(|q| format!(" x{q}")).collect();
        let c: ParityConstraint = format!("+1{line}").parse().unwrap();
        assert_eq!(
            noncontextual_maxsat(&[c]).unwrap_err(),
            SolveError::TooManyVariables { got: 21, max: MAX_SAT_VARIABLES }
        );
    }
}
