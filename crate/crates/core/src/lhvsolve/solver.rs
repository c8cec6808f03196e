//! Exhaustive classical value.
//!
//! All parties but one (the responder) are enumerated jointly. For a fixed
//! choice of the others, every responder question only appears in its own
//! contexts, so the responder's best answer can be picked question by
//! question. Shared randomness is a convex mixture of deterministic
//! strategies and cannot beat the best of them, so this maximum is the
//! classical value.

use std::fmt;
use std::thread;

use serde::Serialize;

use crate::exact::{fraction_with_decimal, serde_fraction, Prob};
use crate::gamedef::{NonlocalGame, Predicate};
use crate::qsim::Sign;

use super::{DeterministicStrategy, SolveError};

pub const DEFAULT_BUDGET: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverConfig {
    /// Maximum number of outer strategy profiles to enumerate.
    pub budget: u64,
    pub workers: usize,
    /// Maximum number of optimal strategies returned.
    pub witness_cap: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { budget: DEFAULT_BUDGET, workers: 1, witness_cap: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameValueResult {
    pub game: String,
    #[serde(with = "serde_fraction")]
    pub value: Prob,
    pub optimal_strategies: Vec<DeterministicStrategy>,
    /// Outer profiles enumerated, each completed by a best response.
    pub strategies_examined: u64,
    /// Size of the full deterministic strategy space.
    pub joint_strategies: u128,
    pub responder: usize,
}

impl fmt::Display for GameValueResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", fraction_with_decimal(&self.value))
    }
}

struct CompiledContext {
    /// `(bit offset, answer mask)` per non-responder party.
    outer: Vec<(u32, u32)>,
    responder_mask: u32,
    target_odd: bool,
    always: bool,
    weight: i64,
}

struct Compiled {
    responder: usize,
    /// Bit offset of `[party][question]` in the outer index (responder unused).
    offsets: Vec<Vec<u32>>,
    arity: Vec<Vec<u32>>,
    outer_bits: u32,
    /// Contexts grouped by the responder question they ask.
    groups: Vec<Vec<CompiledContext>>,
    denominator: i64,
}

fn compile(game: &NonlocalGame) -> Compiled {
    let parties = game.parties();
    let arity: Vec<Vec<u32>> = parties
        .iter()
        .map(|p| (0..p.questions.len()).map(|q| p.arity(q) as u32).collect())
        .collect();
    let responder = arity
        .iter()
        .enumerate()
        .max_by_key(|(_, a)| a.iter().sum::<u32>())
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut offsets = Vec::new();
    let mut next = 0u32;
    for (p, qs) in arity.iter().enumerate() {
        let mut row = Vec::new();
        for a in qs {
            row.push(next);
            if p != responder {
                next += a;
            }
        }
        offsets.push(row);
    }
    let weights = game.integer_weights();
    let mut groups: Vec<Vec<CompiledContext>> =
        (0..parties[responder].questions.len()).map(|_| Vec::new()).collect();
    for (ci, ctx) in game.contexts().iter().enumerate() {
        let mask_for = |p: usize| -> u32 {
            let measured = parties[p].measured(ctx.questions[p]);
            match &ctx.predicate {
                Predicate::AlwaysWin => 0,
                Predicate::Parity(c) => measured
                    .iter()
                    .enumerate()
                    .filter(|(_, o)| c.vars().contains(o))
                    .fold(0u32, |m, (i, _)| m | (1 << i)),
            }
        };
        let outer = (0..parties.len())
            .filter(|p| *p != responder)
            .map(|p| (offsets[p][ctx.questions[p]], mask_for(p)))
            .collect();
        groups[ctx.questions[responder]].push(CompiledContext {
            outer,
            responder_mask: mask_for(responder),
            target_odd: ctx.predicate.constraint().is_some_and(|c| c.sign() == Sign::Minus),
            always: matches!(ctx.predicate, Predicate::AlwaysWin),
            weight: weights[ci],
        });
    }
    Compiled {
        responder,
        offsets,
        arity,
        outer_bits: next,
        groups,
        denominator: game.common_denominator(),
    }
}

fn decode(bits: u64, arity: u32) -> Vec<Sign> {
    (0..arity).map(|i| Sign::from_bit((bits >> i) & 1 == 1)).collect()
}

impl Compiled {
    fn strategy(&self, outer: u64, responses: &[u32]) -> DeterministicStrategy {
        let answers = self
            .arity
            .iter()
            .enumerate()
            .map(|(p, qs)| {
                qs.iter()
                    .enumerate()
                    .map(|(q, a)| {
                        if p == self.responder {
                            decode(u64::from(responses[q]), *a)
                        } else {
                            decode((outer >> self.offsets[p][q]) & ((1 << a) - 1), *a)
                        }
                    })
                    .collect()
            })
            .collect();
        DeterministicStrategy { answers }
    }

    /// Best total score for one outer profile, plus the tied best answers
    /// per responder question.
    fn best_response(&self, outer: u64, ties: &mut [Vec<u32>]) -> i64 {
        let mut total = 0;
        for (q, group) in self.groups.iter().enumerate() {
            let answers = 1u32 << self.arity[self.responder][q];
            let parities: Vec<bool> = group
                .iter()
                .map(|c| {
                    c.outer.iter().fold(c.target_odd, |acc, (off, mask)| {
                        acc ^ (((outer >> off) as u32 & mask).count_ones() & 1 == 1)
                    })
                })
                .collect();
            let mut best = -1;
            ties[q].clear();
            for b in 0..answers {
                let score: i64 = group
                    .iter()
                    .zip(&parities)
                    .filter(|(c, need)| c.always || ((b & c.responder_mask).count_ones() & 1 == 1) == **need)
                    .map(|(c, _)| c.weight)
                    .sum();
                if score > best {
                    best = score;
                    ties[q].clear();
                }
                if score == best {
                    ties[q].push(b);
                }
            }
            total += best;
        }
        total
    }

    fn search(&self, range: std::ops::Range<u64>, cap: usize) -> (i64, Vec<DeterministicStrategy>) {
        let mut ties: Vec<Vec<u32>> = vec![Vec::new(); self.groups.len()];
        let mut best = -1;
        let mut witnesses = Vec::new();
        for outer in range {
            let score = self.best_response(outer, &mut ties);
            if score > best {
                best = score;
                witnesses.clear();
            }
            if score == best && witnesses.len() < cap {
                self.push_tied(outer, &ties, cap, &mut witnesses);
            }
        }
        (best, witnesses)
    }

    /// Expands the Cartesian product of tied responder answers.
    fn push_tied(&self, outer: u64, ties: &[Vec<u32>], cap: usize, out: &mut Vec<DeterministicStrategy>) {
        let mut pick = vec![0usize; ties.len()];
        loop {
            if out.len() >= cap {
                return;
            }
            let responses: Vec<u32> = ties.iter().zip(&pick).map(|(t, i)| t[*i]).collect();
            out.push(self.strategy(outer, &responses));
            let mut q = 0;
            loop {
                if q == ties.len() {
                    return;
                }
                pick[q] += 1;
                if pick[q] < ties[q].len() {
                    break;
                }
                pick[q] = 0;
                q += 1;
            }
        }
    }
}

/// Exact classical value of `game` with up to `config.witness_cap` optimal
/// deterministic strategies, in enumeration order.
///
/// The outer index range is split into contiguous chunks across
/// `config.workers` threads and merged in order, so the result does not
/// depend on the worker count.
pub fn classical_value(game: &NonlocalGame, config: &SolverConfig) -> Result<GameValueResult, SolveError> {
    let compiled = compile(game);
    let required = 1u128 << compiled.outer_bits;
    if compiled.outer_bits >= 63 || required > u128::from(config.budget) {
        return Err(SolveError::BudgetExceeded { required, budget: config.budget });
    }
    let count = required as u64;
    let workers = config.workers.clamp(1, count.max(1) as usize) as u64;
    let chunk = count.div_ceil(workers);
    let cap = config.witness_cap;
    let partials: Vec<(i64, Vec<DeterministicStrategy>)> = thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let start = w * chunk;
                let end = ((w + 1) * chunk).min(count);
                let compiled = &compiled;
                s.spawn(move || compiled.search(start..end, cap))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("solver worker panicked")).collect()
    });
    let best = partials.iter().map(|(b, _)| *b).max().unwrap_or(0);
    let optimal_strategies = partials
        .into_iter()
        .filter(|(b, _)| *b == best)
        .flat_map(|(_, w)| w)
        .take(cap)
        .collect();
    let total_bits: u32 = compiled.arity.iter().flatten().sum();
    Ok(GameValueResult {
        game: game.id().to_string(),
        value: Prob::new(best, compiled.denominator),
        optimal_strategies,
        strategies_examined: count,
        joint_strategies: 1u128.checked_shl(total_bits).unwrap_or(u128::MAX),
        responder: compiled.responder,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamedef::catalog::{cabello_restricted, four_party_game, mermin_ghz};
    use crate::lhvsolve::win_probability;

    #[test]
    fn catalog_values() {
        let cfg = SolverConfig::default();
        assert_eq!(classical_value(&cabello_restricted(), &cfg).unwrap().value, Prob::from_integer(1));
        assert_eq!(classical_value(&mermin_ghz(), &cfg).unwrap().value, Prob::new(3, 4));
        assert_eq!(classical_value(&four_party_game(), &cfg).unwrap().value, Prob::new(6, 7));
    }

    #[test]
    fn responder_is_largest_party() {
        let r = classical_value(&cabello_restricted(), &SolverConfig::default()).unwrap();
        assert_eq!(r.responder, 1);
        assert_eq!(r.strategies_examined, 16);
        assert_eq!(r.joint_strategies, 16 * 256);
    }

    #[test]
    fn witnesses_achieve_value() {
        for game in [cabello_restricted(), mermin_ghz(), four_party_game()] {
            let r = classical_value(&game, &SolverConfig::default()).unwrap();
            assert!(!r.optimal_strategies.is_empty());
            assert!(r.optimal_strategies.len() <= 16);
            for s in &r.optimal_strategies {
                assert_eq!(win_probability(&game, s).unwrap(), r.value);
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let cfg = SolverConfig { budget: 100, ..SolverConfig::default() };
        assert_eq!(
            classical_value(&four_party_game(), &cfg).unwrap_err(),
            SolveError::BudgetExceeded { required: 512, budget: 100 }
        );
    }

    #[test]
    fn worker_count_does_not_change_result() {
        let game = four_party_game();
        let one = classical_value(&game, &SolverConfig::default()).unwrap();
        for workers in [2, 3, 7] {
            let many = classical_value(&game, &SolverConfig { workers, ..SolverConfig::default() }).unwrap();
            assert_eq!(one, many);
        }
    }
}
