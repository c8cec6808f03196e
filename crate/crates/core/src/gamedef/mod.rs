//! Nonlocal games: parties own qubit slots, a referee picks a weighted
//! context (one question per party), and the joint answers are judged by a
//! parity predicate.

pub mod catalog;

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use serde::Serialize;
use thiserror::Error;

use crate::exact::{fraction, serde_fraction, Prob};
use crate::qsim::{ObservableKind, OutcomeTuple, Sign, SiteObservable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("parity constraint has no variables")]
    EmptyConstraint,
    #[error("variable {0} appears twice in one constraint")]
    DuplicateVariable(String),
    #[error("outcome for {0} is missing")]
    MissingVariable(String),
    #[error("qubit ownership is not a partition of 1..={0}")]
    Ownership(usize),
    #[error("party {party} question {question:?} does not match its qubit slots")]
    QuestionArity { party: usize, question: String },
    #[error("context {context:?}: {reason}")]
    BadContext { context: String, reason: String },
    #[error("context {context:?} cannot measure {var}")]
    Unmeasurable { context: String, var: String },
    #[error("context weights sum to {0}, expected 1")]
    WeightSum(String),
    #[error("answer for party {party} has {got} values, question needs {expected}")]
    AnswerArity { party: usize, expected: usize, got: usize },
    #[error("selector outcome must be +1 or -1, got {0}")]
    BadSelector(i64),
    #[error("no context with index {0}")]
    NoSuchContext(usize),
    #[error("unknown game {name:?}; known games: {known}")]
    UnknownGame { name: String, known: String },
    #[error("{0}")]
    Parse(String),
}

/// "The product of these outcomes equals `sign`."
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParityConstraint {
    vars: Vec<SiteObservable>,
    sign: Sign,
}

impl ParityConstraint {
    pub fn new(vars: Vec<SiteObservable>, sign: Sign) -> Result<Self, GameError> {
        if vars.is_empty() {
            return Err(GameError::EmptyConstraint);
        }
        for (i, v) in vars.iter().enumerate() {
            if vars[..i].contains(v) {
                return Err(GameError::DuplicateVariable(v.symbol()));
            }
        }
        Ok(ParityConstraint { vars, sign })
    }

    pub fn vars(&self) -> &[SiteObservable] {
        &self.vars
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn negated(&self) -> ParityConstraint {
        ParityConstraint { vars: self.vars.clone(), sign: -self.sign }
    }

    /// Evaluates against any lookup of outcome values.
    pub fn holds_with<F>(&self, mut value_of: F) -> Result<bool, GameError>
    where
        F: FnMut(SiteObservable) -> Option<Sign>,
    {
        let mut product = Sign::Plus;
        for v in &self.vars {
            product = product * value_of(*v).ok_or_else(|| GameError::MissingVariable(v.symbol()))?;
        }
        Ok(product == self.sign)
    }

    pub fn evaluate(&self, outcomes: &OutcomeTuple) -> Result<bool, GameError> {
        self.holds_with(|v| outcomes.value_of(v))
    }

    /// Human-readable form, e.g. `x1·x3·z4 = +1`.
    pub fn equation(&self) -> String {
        let lhs: Vec<String> = self.vars.iter().map(|v| v.symbol()).collect();
        format!("{} = {}", lhs.join("·"), self.sign)
    }
}

/// Line format `<sign> <var> <var> ...`, e.g. `-1 y1 y3 z4`.
impl fmt::Display for ParityConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.sign)?;
        for v in &self.vars {
            write!(f, " {}", v.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for ParityConstraint {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut tokens = s.split_whitespace();
        let sign = tokens
            .next()
            .ok_or_else(|| GameError::Parse("empty constraint line".into()))?
            .parse::<Sign>()
            .map_err(|e| GameError::Parse(e.to_string()))?;
        let vars = tokens
            .map(|t| t.parse::<SiteObservable>().map_err(|e| GameError::Parse(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        ParityConstraint::new(vars, sign)
    }
}

/// Parses an equation-set file: one constraint per line; blank lines and
/// `#` comments are skipped.
pub fn parse_constraints(text: &str) -> Result<Vec<ParityConstraint>, GameError> {
    text.lines()
        .enumerate()
        .filter_map(|(n, line)| {
            let line = line.split('#').next().unwrap_or("").trim();
            (!line.is_empty()).then(|| {
                line.parse::<ParityConstraint>()
                    .map_err(|e| GameError::Parse(format!("line {}: {e}", n + 1)))
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    AlwaysWin,
    Parity(ParityConstraint),
}

impl Predicate {
    pub fn evaluate(&self, outcomes: &OutcomeTuple) -> Result<bool, GameError> {
        match self {
            Predicate::AlwaysWin => Ok(true),
            Predicate::Parity(c) => c.evaluate(outcomes),
        }
    }

    pub fn constraint(&self) -> Option<&ParityConstraint> {
        match self {
            Predicate::AlwaysWin => None,
            Predicate::Parity(c) => Some(c),
        }
    }
}

/// Judges one round's outcomes.
pub fn predicate_eval(predicate: &Predicate, outcomes: &OutcomeTuple) -> Result<bool, GameError> {
    predicate.evaluate(outcomes)
}

/// One question a party may be asked: an observable (or nothing) per owned slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Question {
    pub label: String,
    /// Aligned with the owning party's `qubits`; `None` leaves the slot unmeasured.
    pub kinds: Vec<Option<ObservableKind>>,
}

impl Question {
    pub fn new(label: impl Into<String>, kinds: Vec<Option<ObservableKind>>) -> Self {
        Question { label: label.into(), kinds }
    }

    /// Number of ±1 values in an answer.
    pub fn arity(&self) -> usize {
        self.kinds.iter().filter(|k| k.is_some()).count()
    }

    /// Compact rendering such as `XZ` or `Z-`.
    pub fn pattern(&self) -> String {
        self.kinds.iter().map(|k| k.map_or('-', ObservableKind::letter)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Party {
    pub name: String,
    pub qubits: Vec<usize>,
    pub questions: Vec<Question>,
}

impl Party {
    /// Measured observables of question `q`, in slot order.
    pub fn measured(&self, q: usize) -> Vec<SiteObservable> {
        self.qubits
            .iter()
            .zip(&self.questions[q].kinds)
            .filter_map(|(qubit, kind)| kind.map(|k| SiteObservable::new(k, *qubit)))
            .collect()
    }

    pub fn arity(&self, q: usize) -> usize {
        self.questions[q].arity()
    }

    /// The question whose measured observables are exactly `observables`.
    pub fn find_question(&self, observables: &[SiteObservable]) -> Option<usize> {
        (0..self.questions.len()).find(|q| self.measured(*q) == observables)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Context {
    pub label: String,
    /// Question index per party.
    pub questions: Vec<usize>,
    pub predicate: Predicate,
    #[serde(with = "serde_fraction")]
    pub weight: Prob,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NonlocalGame {
    id: String,
    num_qubits: usize,
    parties: Vec<Party>,
    contexts: Vec<Context>,
}

impl NonlocalGame {
    pub fn new(
        id: impl Into<String>,
        num_qubits: usize,
        parties: Vec<Party>,
        contexts: Vec<Context>,
    ) -> Result<Self, GameError> {
        let mut owned: Vec<usize> = parties.iter().flat_map(|p| p.qubits.iter().copied()).collect();
        owned.sort_unstable();
        if owned != (1..=num_qubits).collect::<Vec<_>>() {
            return Err(GameError::Ownership(num_qubits));
        }
        for (pi, party) in parties.iter().enumerate() {
            for q in &party.questions {
                if q.kinds.len() != party.qubits.len() || q.arity() == 0 {
                    return Err(GameError::QuestionArity { party: pi, question: q.label.clone() });
                }
            }
        }
        let game = NonlocalGame { id: id.into(), num_qubits, parties, contexts };
        let mut total = Prob::from_integer(0);
        for (ci, ctx) in game.contexts.iter().enumerate() {
            let bad = |reason: &str| GameError::BadContext {
                context: ctx.label.clone(),
                reason: reason.to_string(),
            };
            if ctx.questions.len() != game.parties.len() {
                return Err(bad("needs exactly one question per party"));
            }
            for (pi, q) in ctx.questions.iter().enumerate() {
                if *q >= game.parties[pi].questions.len() {
                    return Err(bad(&format!("party {pi} has no question #{q}")));
                }
            }
            if ctx.weight < Prob::from_integer(0) {
                return Err(bad("negative weight"));
            }
            if let Some(c) = ctx.predicate.constraint() {
                let measured = game.context_observables(ci);
                if let Some(v) = c.vars().iter().find(|v| !measured.contains(v)) {
                    return Err(GameError::Unmeasurable {
                        context: ctx.label.clone(),
                        var: v.symbol(),
                    });
                }
            }
            total += ctx.weight;
        }
        if total != Prob::from_integer(1) {
            return Err(GameError::WeightSum(fraction(&total)));
        }
        Ok(game)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn parties(&self) -> &[Party] {
        &self.parties
    }

    pub fn contexts(&self) -> &[Context] {
        &self.contexts
    }

    pub fn context(&self, index: usize) -> Result<&Context, GameError> {
        self.contexts.get(index).ok_or(GameError::NoSuchContext(index))
    }

    /// Everything measured in a context, party by party.
    pub fn context_observables(&self, context: usize) -> Vec<SiteObservable> {
        let ctx = &self.contexts[context];
        self.parties
            .iter()
            .zip(&ctx.questions)
            .flat_map(|(p, q)| p.measured(*q))
            .collect()
    }

    /// Pairs each party's answer values with the observables it was asked.
    pub fn outcomes(&self, context: usize, answers: &[Vec<Sign>]) -> Result<OutcomeTuple, GameError> {
        let ctx = self.context(context)?;
        if answers.len() != self.parties.len() {
            return Err(GameError::BadContext {
                context: ctx.label.clone(),
                reason: format!("{} answers for {} parties", answers.len(), self.parties.len()),
            });
        }
        let mut entries = Vec::new();
        for (pi, (party, q)) in self.parties.iter().zip(&ctx.questions).enumerate() {
            let measured = party.measured(*q);
            if measured.len() != answers[pi].len() {
                return Err(GameError::AnswerArity {
                    party: pi,
                    expected: measured.len(),
                    got: answers[pi].len(),
                });
            }
            entries.extend(measured.into_iter().zip(answers[pi].iter().copied()));
        }
        Ok(OutcomeTuple { entries })
    }

    /// Whether these answers win in `context`.
    pub fn judge(&self, context: usize, answers: &[Vec<Sign>]) -> Result<bool, GameError> {
        let outcomes = self.outcomes(context, answers)?;
        self.contexts[context].predicate.evaluate(&outcomes)
    }

    /// Least common denominator of the context weights.
    pub fn common_denominator(&self) -> i64 {
        self.contexts.iter().fold(1i64, |acc, c| acc.lcm(c.weight.denom()))
    }

    /// Context weights as integers over [`Self::common_denominator`].
    pub fn integer_weights(&self) -> Vec<i64> {
        let d = self.common_denominator();
        self.contexts.iter().map(|c| (c.weight * d).to_integer()).collect()
    }

    /// Same game with one context dropped and the rest renormalized.
    pub fn without_context(&self, index: usize) -> Result<NonlocalGame, GameError> {
        let removed = self.context(index)?.weight;
        let remaining = Prob::from_integer(1) - removed;
        if remaining == Prob::from_integer(0) {
            return Err(GameError::WeightSum("0".into()));
        }
        let contexts = self
            .contexts
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != index)
            .map(|(_, c)| Context { weight: c.weight / remaining, ..c.clone() })
            .collect();
        NonlocalGame::new(self.id.clone(), self.num_qubits, self.parties.clone(), contexts)
    }
}

/// Plain-text table used by `nonlocal show` and the golden files.
impl fmt::Display for NonlocalGame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "game {}", self.id)?;
        writeln!(f, "qubits {}", self.num_qubits)?;
        for (pi, p) in self.parties.iter().enumerate() {
            let qubits: Vec<String> = p.qubits.iter().map(|q| q.to_string()).collect();
            writeln!(f, "party {pi} {} qubits {}", p.name, qubits.join(" "))?;
            for q in &p.questions {
                writeln!(f, "  question {} {}", q.label, q.pattern())?;
            }
        }
        for ctx in &self.contexts {
            let qs: Vec<&str> = self
                .parties
                .iter()
                .zip(&ctx.questions)
                .map(|(p, q)| p.questions[*q].label.as_str())
                .collect();
            let pred = match &ctx.predicate {
                Predicate::AlwaysWin => "always".to_string(),
                Predicate::Parity(c) => c.to_string(),
            };
            writeln!(
                f,
                "context {} weight {} questions {} predicate {}",
                ctx.label,
                fraction(&ctx.weight),
                qs.join(" "),
                pred
            )?;
        }
        Ok(())
    }
}
