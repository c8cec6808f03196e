//! Classical (local hidden variable) strategies and exact classical values.

mod maxsat;
mod solver;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::exact::Prob;
use crate::gamedef::{GameError, NonlocalGame};
use crate::qsim::Sign;

pub use maxsat::{noncontextual_maxsat, Assignment, MaxSatResult, MAX_SAT_VARIABLES};
pub use solver::{classical_value, GameValueResult, SolverConfig, DEFAULT_BUDGET};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StrategyError {
    #[error("strategy covers {got} parties, game has {expected}")]
    PartyCount { expected: usize, got: usize },
    #[error("party {party}: strategy answers {got} questions, game asks {expected}")]
    QuestionCount { party: usize, expected: usize, got: usize },
    #[error("party {party} question {question}: answer has {got} values, needs {expected}")]
    AnswerArity { party: usize, question: usize, expected: usize, got: usize },
    #[error("hidden-variable model with {bits} bits must list {expected} branches, got {got}")]
    BranchCount { bits: usize, expected: usize, got: usize },
    #[error(transparent)]
    Game(#[from] GameError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("search needs {required} strategy evaluations, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u64 },
    #[error("{got} distinct variables exceed the brute-force bound of {max}")]
    TooManyVariables { got: usize, max: usize },
}

/// A fixed answer for every question of every party.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeterministicStrategy {
    /// `answers[party][question]` is the ±1 tuple given for that question.
    pub answers: Vec<Vec<Vec<Sign>>>,
}

impl DeterministicStrategy {
    pub fn from_fn<F>(game: &NonlocalGame, mut f: F) -> Self
    where
        F: FnMut(usize, usize) -> Vec<Sign>,
    {
        let answers = game
            .parties()
            .iter()
            .enumerate()
            .map(|(p, party)| (0..party.questions.len()).map(|q| f(p, q)).collect())
            .collect();
        DeterministicStrategy { answers }
    }

    pub fn answer(&self, party: usize, question: usize) -> &[Sign] {
        &self.answers[party][question]
    }

    /// Checks totality and answer arity against the game's question sets.
    pub fn validate(&self, game: &NonlocalGame) -> Result<(), StrategyError> {
        let parties = game.parties();
        if self.answers.len() != parties.len() {
            return Err(StrategyError::PartyCount { expected: parties.len(), got: self.answers.len() });
        }
        for (p, (party, answers)) in parties.iter().zip(&self.answers).enumerate() {
            if answers.len() != party.questions.len() {
                return Err(StrategyError::QuestionCount {
                    party: p,
                    expected: party.questions.len(),
                    got: answers.len(),
                });
            }
            for (q, a) in answers.iter().enumerate() {
                if a.len() != party.arity(q) {
                    return Err(StrategyError::AnswerArity {
                        party: p,
                        question: q,
                        expected: party.arity(q),
                        got: a.len(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Answers of every party in one context.
    pub fn respond(&self, game: &NonlocalGame, context: usize) -> Vec<Vec<Sign>> {
        game.contexts()[context]
            .questions
            .iter()
            .enumerate()
            .map(|(p, q)| self.answers[p][*q].clone())
            .collect()
    }

    pub fn wins(&self, game: &NonlocalGame, context: usize) -> Result<bool, GameError> {
        game.judge(context, &self.respond(game, context))
    }
}

/// Local responses driven by `hidden_bits` uniform ±1 variables.
///
/// Stored as one deterministic strategy per hidden assignment; assignment
/// `i` has hidden bit `j` equal to `-1` iff bit `k-1-j` of `i` is set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HiddenVariableModel {
    pub name: String,
    pub hidden_bits: usize,
    branches: Vec<DeterministicStrategy>,
}

impl HiddenVariableModel {
    pub fn new(
        name: impl Into<String>,
        hidden_bits: usize,
        branches: Vec<DeterministicStrategy>,
    ) -> Result<Self, StrategyError> {
        let expected = 1usize << hidden_bits;
        if branches.len() != expected {
            return Err(StrategyError::BranchCount { bits: hidden_bits, expected, got: branches.len() });
        }
        Ok(HiddenVariableModel { name: name.into(), hidden_bits, branches })
    }

    /// Tabulates `response(hidden, party, question)` over all hidden assignments.
    pub fn from_fn<F>(name: impl Into<String>, game: &NonlocalGame, hidden_bits: usize, response: F) -> Self
    where
        F: Fn(&[Sign], usize, usize) -> Vec<Sign>,
    {
        let branches = (0..1usize << hidden_bits)
            .map(|i| {
                let hidden = hidden_assignment(i, hidden_bits);
                DeterministicStrategy::from_fn(game, |p, q| response(&hidden, p, q))
            })
            .collect();
        HiddenVariableModel { name: name.into(), hidden_bits, branches }
    }

    /// A deterministic strategy viewed as a model with no hidden bits.
    pub fn deterministic(name: impl Into<String>, strategy: DeterministicStrategy) -> Self {
        HiddenVariableModel { name: name.into(), hidden_bits: 0, branches: vec![strategy] }
    }

    pub fn branches(&self) -> &[DeterministicStrategy] {
        &self.branches
    }

    pub fn branch_for(&self, hidden: &[Sign]) -> &DeterministicStrategy {
        let index = hidden.iter().fold(0usize, |acc, s| (acc << 1) | usize::from(s.is_minus()));
        &self.branches[index]
    }

    pub fn respond(&self, hidden: &[Sign], party: usize, question: usize) -> &[Sign] {
        self.branch_for(hidden).answer(party, question)
    }
}

/// The ±1 values of hidden assignment `index` over `bits` variables.
pub fn hidden_assignment(index: usize, bits: usize) -> Vec<Sign> {
    (0..bits).map(|j| Sign::from_bit((index >> (bits - 1 - j)) & 1 == 1)).collect()
}

/// Anything that is a uniform mixture of deterministic strategies.
pub trait LocalModel {
    fn branches(&self) -> &[DeterministicStrategy];
}

impl LocalModel for DeterministicStrategy {
    fn branches(&self) -> &[DeterministicStrategy] {
        std::slice::from_ref(self)
    }
}

impl LocalModel for HiddenVariableModel {
    fn branches(&self) -> &[DeterministicStrategy] {
        &self.branches
    }
}

/// `λ1, λ2, μ` model for the restricted two-party game: Alice reports
/// `(λ1, λ2)` whatever she is asked; Bob reports `μ` and a product chosen per
/// question so that every tested relation holds.
pub fn lambda_mu_model() -> HiddenVariableModel {
    let game = crate::gamedef::catalog::cabello_restricted();
    HiddenVariableModel::from_fn("lambda-mu", &game, 3, |h, party, q| {
        let (l1, l2, mu) = (h[0], h[1], h[2]);
        match (party, q) {
            (0, _) => vec![l1, l2],
            (1, 0) | (1, 2) => vec![mu, mu * l1 * l2],
            (1, 1) => vec![mu, mu * l1],
            (1, 3) => vec![mu, -(mu * l1)],
            _ => unreachable!("restricted game has two parties"),
        }
    })
}

/// Constant answers that pass every test of the restricted two-party game:
/// all `+1`, except Bob's `4b` which gives `(+1, -1)`.
pub fn automaton_model() -> DeterministicStrategy {
    let game = crate::gamedef::catalog::cabello_restricted();
    DeterministicStrategy::from_fn(&game, |party, q| match (party, q) {
        (1, 3) => vec![Sign::Plus, Sign::Minus],
        _ => vec![Sign::Plus, Sign::Plus],
    })
}

/// Exact winning probability of a (mixed) local strategy.
pub fn win_probability<M: LocalModel + ?Sized>(
    game: &NonlocalGame,
    model: &M,
) -> Result<Prob, StrategyError> {
    let branches = model.branches();
    for b in branches {
        b.validate(game)?;
    }
    let n = branches.len() as i64;
    let mut total = Prob::from_integer(0);
    for (ci, ctx) in game.contexts().iter().enumerate() {
        let mut wins = 0i64;
        for b in branches {
            if b.wins(game, ci)? {
                wins += 1;
            }
        }
        total += ctx.weight * Prob::new(wins, n);
    }
    Ok(total)
}

/// Distribution of the joint answer tuple (parties concatenated in order)
/// produced by a model in one context, over uniform hidden bits.
pub fn model_distribution<M: LocalModel + ?Sized>(
    model: &M,
    game: &NonlocalGame,
    context: usize,
) -> Result<BTreeMap<Vec<Sign>, Prob>, StrategyError> {
    game.context(context)?;
    let branches = model.branches();
    let n = branches.len() as i64;
    let mut dist = BTreeMap::new();
    for b in branches {
        b.validate(game)?;
        let joint: Vec<Sign> = b.respond(game, context).into_iter().flatten().collect();
        *dist.entry(joint).or_insert_with(|| Prob::from_integer(0)) += Prob::new(1, n);
    }
    Ok(dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamedef::catalog::{cabello_restricted, mermin_ghz};
    use Sign::{Minus, Plus};

    #[test]
    fn lambda_mu_examples() {
        let m = lambda_mu_model();
        let h = [Minus, Plus, Plus];
        assert_eq!(m.respond(&h, 1, 1), &[Plus, Minus]);
        assert_eq!(m.respond(&h, 0, 0), &[Minus, Plus]);
        let game = cabello_restricted();
        let ctx = game.contexts().iter().position(|c| c.label == "1a/2b").unwrap();
        for b in m.branches() {
            assert!(b.wins(&game, ctx).unwrap());
        }
    }

    #[test]
    fn automaton_examples() {
        let a = automaton_model();
        assert_eq!(a.answer(1, 3), &[Plus, Minus]);
        assert_eq!(a.answer(0, 1), &[Plus, Plus]);
        assert_eq!(win_probability(&cabello_restricted(), &a).unwrap(), Prob::from_integer(1));
    }

    #[test]
    fn lambda_mu_wins_restricted_game() {
        assert_eq!(
            win_probability(&cabello_restricted(), &lambda_mu_model()).unwrap(),
            Prob::from_integer(1)
        );
    }

    #[test]
    fn all_plus_on_mermin() {
        let g = mermin_ghz();
        let s = DeterministicStrategy::from_fn(&g, |_, _| vec![Plus]);
        // XXX = +1 holds; the three mixed contexts want -1.
        assert_eq!(win_probability(&g, &s).unwrap(), Prob::new(1, 4));
    }

    #[test]
    fn partial_strategy_rejected() {
        let g = mermin_ghz();
        let mut s = DeterministicStrategy::from_fn(&g, |_, _| vec![Plus]);
        s.answers[2].pop();
        assert!(matches!(
            win_probability(&g, &s),
            Err(StrategyError::QuestionCount { party: 2, .. })
        ));
        s.answers[2].push(vec![Plus, Plus]);
        assert!(matches!(
            win_probability(&g, &s),
            Err(StrategyError::AnswerArity { party: 2, question: 1, .. })
        ));
        s.answers.pop();
        assert!(matches!(win_probability(&g, &s), Err(StrategyError::PartyCount { .. })));
    }

    #[test]
    fn lambda_mu_distribution_is_uniform_on_tested_context() {
        let game = cabello_restricted();
        let ctx = game.contexts().iter().position(|c| c.label == "1a/2b").unwrap();
        let dist = model_distribution(&lambda_mu_model(), &game, ctx).unwrap();
        assert_eq!(dist.len(), 8);
        assert!(dist.values().all(|p| *p == Prob::new(1, 8)));
        for pos in 0..4 {
            let plus: Prob = dist.iter().filter(|(k, _)| k[pos] == Plus).map(|(_, p)| *p).sum();
            assert_eq!(plus, Prob::new(1, 2));
        }
    }

    #[test]
    fn automaton_distribution_is_point_mass() {
        let game = cabello_restricted();
        let model = HiddenVariableModel::deterministic("automaton", automaton_model());
        for ctx in 0..game.contexts().len() {
            let dist = model_distribution(&model, &game, ctx).unwrap();
            assert_eq!(dist.len(), 1);
            assert_eq!(*dist.values().next().unwrap(), Prob::from_integer(1));
        }
    }

    #[test]
    fn model_branch_count_checked() {
        let g = mermin_ghz();
        let s = DeterministicStrategy::from_fn(&g, |_, _| vec![Plus]);
        assert!(matches!(
            HiddenVariableModel::new("x", 1, vec![s]),
            Err(StrategyError::BranchCount { bits: 1, expected: 2, got: 1 })
        ));
    }

    #[test]
    fn hidden_assignment_order() {
        assert_eq!(hidden_assignment(0b100, 3), vec![Minus, Plus, Plus]);
        assert_eq!(hidden_assignment(0, 0), Vec::<Sign>::new());
    }
}
