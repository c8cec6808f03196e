//! Seeded trial runs of a game against a strategy.
//!
//! Both execution modes draw every round from the same plan: a context
//! chosen by weight, followed by whatever randomness the strategy consumes
//! (fresh hidden bits, or a joint quantum sample). The in-process runner
//! answers from that plan directly; the distributed referee deals the same
//! randomness to isolated players, so equal seeds give equal logs.

mod net;
mod stats;
pub mod wire;

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gamedef::{GameError, NonlocalGame};
use crate::lhvsolve::{DeterministicStrategy, HiddenVariableModel, StrategyError};
use crate::qsim::{joint_distribution, QsimError, Sign, Statevector};

pub use net::{
    expected_transcript, play_session, referee_session, run_player, serve_on, serve_referee,
    PlayerStrategy, ServeOutcome,
};
pub use stats::{
    co_referee_view, quantum_reference, quantum_win_probability, statistics, ContextStats, MarginalStats, NestedGhzView,
    ReferenceDistribution, StatReport,
};

pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("at least one round is required")]
    NoRounds,
    #[error("strategy does not fit the game: {0}")]
    Incompatible(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("protocol error from party {party}: {message}")]
    Protocol { party: usize, message: String },
    #[error("party {party} disconnected after {} complete rounds", log.records.len())]
    Disconnected { party: usize, log: Box<TrialLog> },
    #[error("trial log is empty")]
    EmptyLog,
    #[error("bad trial log: {0}")]
    LogFormat(String),
}

/// How the players answer.
#[derive(Debug, Clone)]
pub enum TrialStrategy {
    /// Measure the shared state; each party reports its own outcomes.
    Quantum(Statevector),
    Deterministic(DeterministicStrategy),
    /// Fresh uniform hidden bits every round.
    HiddenVariable(HiddenVariableModel),
}

impl TrialStrategy {
    pub fn descriptor(&self) -> String {
        Dealer::for_strategy(self).descriptor
    }

    /// Rejects strategies that cannot answer every question of `game`.
    pub fn check(&self, game: &NonlocalGame) -> Result<(), HarnessError> {
        match self {
            TrialStrategy::Quantum(state) => {
                if state.num_qubits() != game.num_qubits() {
                    return Err(HarnessError::Incompatible(format!(
                        "state has {} qubits, game uses {}",
                        state.num_qubits(),
                        game.num_qubits()
                    )));
                }
            }
            TrialStrategy::Deterministic(s) => s.validate(game)?,
            TrialStrategy::HiddenVariable(m) => {
                for b in m.branches() {
                    b.validate(game)?;
                }
            }
        }
        Ok(())
    }
}

/// The randomness a strategy needs from a trusted source, separated from
/// the strategy itself so a referee can deal it without knowing the answers.
#[derive(Debug, Clone)]
pub struct Dealer {
    pub descriptor: String,
    pub source: DealtRandomness,
}

#[derive(Debug, Clone)]
pub enum DealtRandomness {
    Nothing,
    HiddenBits(usize),
    /// Presampled joint outcomes of measuring this state.
    Quantum(Statevector),
}

impl Dealer {
    pub fn for_strategy(strategy: &TrialStrategy) -> Dealer {
        match strategy {
            TrialStrategy::Quantum(state) => Dealer {
                descriptor: "quantum".into(),
                source: DealtRandomness::Quantum(state.clone()),
            },
            TrialStrategy::Deterministic(_) => {
                Dealer { descriptor: "deterministic".into(), source: DealtRandomness::Nothing }
            }
            TrialStrategy::HiddenVariable(m) => Dealer {
                descriptor: format!("hidden-variable:{}", m.name),
                source: DealtRandomness::HiddenBits(m.hidden_bits),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum RoundTape {
    Empty,
    Hidden(Vec<Sign>),
    /// Per party, outcomes of its measured slots in order.
    Outcomes(Vec<Vec<Sign>>),
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct RoundPlan {
    pub context: usize,
    pub tape: RoundTape,
}

pub(crate) fn plan_rounds(
    game: &NonlocalGame,
    dealer: &Dealer,
    rounds: u64,
    seed: u64,
) -> Result<Vec<RoundPlan>, HarnessError> {
    if rounds == 0 {
        return Err(HarnessError::NoRounds);
    }
    let weights = game.integer_weights();
    let denominator = game.common_denominator() as u64;
    let distributions = match &dealer.source {
        DealtRandomness::Quantum(state) => {
            if state.num_qubits() != game.num_qubits() {
                return Err(HarnessError::Incompatible(format!(
                    "state has {} qubits, game uses {}",
                    state.num_qubits(),
                    game.num_qubits()
                )));
            }
            (0..game.contexts().len())
                .map(|c| joint_distribution(state, &game.context_observables(c)))
                .collect::<Result<Vec<_>, _>>()?
        }
        _ => Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut plan = Vec::with_capacity(rounds as usize);
    for _ in 0..rounds {
        let mut ticket = rng.random_range(0..denominator) as i64;
        let context = weights
            .iter()
            .position(|w| {
                ticket -= w;
                ticket < 0
            })
            .expect("weights sum to the denominator");
        let tape = match &dealer.source {
            DealtRandomness::Nothing => RoundTape::Empty,
            DealtRandomness::HiddenBits(k) => {
                RoundTape::Hidden((0..*k).map(|_| Sign::from_bit(rng.random())).collect())
            }
            DealtRandomness::Quantum(_) => {
                let mut values = distributions[context].sample(&mut rng).values().into_iter();
                let ctx = &game.contexts()[context];
                RoundTape::Outcomes(
                    game.parties()
                        .iter()
                        .zip(&ctx.questions)
                        .map(|(p, q)| values.by_ref().take(p.arity(*q)).collect())
                        .collect(),
                )
            }
        };
        plan.push(RoundPlan { context, tape });
    }
    Ok(plan)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub round: u64,
    /// Context index within the game.
    pub context: usize,
    /// Question index per party.
    pub questions: Vec<usize>,
    pub answers: Vec<Vec<Sign>>,
    pub win: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialLog {
    pub game: String,
    pub strategy: String,
    pub seed: u64,
    pub version: u32,
    /// False when a distributed session aborted early.
    pub complete: bool,
    pub records: Vec<TrialRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum LogLine {
    Header { game: String, strategy: String, seed: u64, version: u32, complete: bool },
    Round(TrialRecord),
}

impl TrialLog {
    pub(crate) fn new(game: &NonlocalGame, strategy: &str, seed: u64) -> TrialLog {
        TrialLog {
            game: game.id().to_string(),
            strategy: strategy.to_string(),
            seed,
            version: LOG_VERSION,
            complete: true,
            records: Vec::new(),
        }
    }

    pub fn wins(&self) -> u64 {
        self.records.iter().filter(|r| r.win).count() as u64
    }

    /// JSON lines: one header record, then one record per round.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<(), HarnessError> {
        let header = LogLine::Header {
            game: self.game.clone(),
            strategy: self.strategy.clone(),
            seed: self.seed,
            version: self.version,
            complete: self.complete,
        };
        writeln!(out, "{}", serde_json::to_string(&header).map_err(io_json)?)?;
        for r in &self.records {
            writeln!(out, "{}", serde_json::to_string(&LogLine::Round(r.clone())).map_err(io_json)?)?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<TrialLog, HarnessError> {
        let mut log: Option<TrialLog> = None;
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: LogLine = serde_json::from_str(&line)
                .map_err(|e| HarnessError::LogFormat(format!("line {}: {e}", n + 1)))?;
            match (parsed, log.as_mut()) {
                (LogLine::Header { game, strategy, seed, version, complete }, None) => {
                    log = Some(TrialLog { game, strategy, seed, version, complete, records: Vec::new() });
                }
                (LogLine::Round(r), Some(l)) => {
                    if r.round != l.records.len() as u64 {
                        return Err(HarnessError::LogFormat(format!(
                            "line {}: expected round {}, found {}",
                            n + 1,
                            l.records.len(),
                            r.round
                        )));
                    }
                    l.records.push(r);
                }
                (LogLine::Header { .. }, Some(_)) => {
                    return Err(HarnessError::LogFormat(format!("line {}: second header", n + 1)))
                }
                (LogLine::Round(_), None) => {
                    return Err(HarnessError::LogFormat("round before header".into()))
                }
            }
        }
        log.ok_or(HarnessError::EmptyLog)
    }
}

fn io_json(e: serde_json::Error) -> std::io::Error {
    std::io::Error::other(e)
}

/// Plays `rounds` seeded rounds in-process.
pub fn run_trials(
    game: &NonlocalGame,
    strategy: &TrialStrategy,
    rounds: u64,
    seed: u64,
) -> Result<TrialLog, HarnessError> {
    strategy.check(game)?;
    let dealer = Dealer::for_strategy(strategy);
    let plan = plan_rounds(game, &dealer, rounds, seed)?;
    let mut log = TrialLog::new(game, &dealer.descriptor, seed);
    for (round, step) in plan.into_iter().enumerate() {
        let questions = game.contexts()[step.context].questions.clone();
        let answers: Vec<Vec<Sign>> = match (&step.tape, strategy) {
            (RoundTape::Outcomes(values), _) => values.clone(),
            (RoundTape::Hidden(bits), TrialStrategy::HiddenVariable(m)) => questions
                .iter()
                .enumerate()
                .map(|(p, q)| m.respond(bits, p, *q).to_vec())
                .collect(),
            (_, TrialStrategy::Deterministic(s)) => {
                questions.iter().enumerate().map(|(p, q)| s.answer(p, *q).to_vec()).collect()
            }
            _ => unreachable!("plan matches the strategy's dealer"),
        };
        let win = game.judge(step.context, &answers)?;
        log.records.push(TrialRecord { round: round as u64, context: step.context, questions, answers, win });
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamedef::catalog::{cabello_restricted, four_party_game, mermin_ghz, native_state};
    use crate::lhvsolve::{automaton_model, lambda_mu_model};
    use crate::qsim::make_psi;

    #[test]
    fn quantum_wins_four_party_every_round() {
        let game = four_party_game();
        let log = run_trials(&game, &TrialStrategy::Quantum(make_psi()), 2_000, 3).unwrap();
        assert_eq!(log.wins(), 2_000);
        assert_eq!(log.strategy, "quantum");
    }

    #[test]
    fn lambda_mu_wins_restricted_every_round() {
        let log = run_trials(
            &cabello_restricted(),
            &TrialStrategy::HiddenVariable(lambda_mu_model()),
            2_000,
            11,
        )
        .unwrap();
        assert_eq!(log.wins(), 2_000);
    }

    #[test]
    fn incompatible_strategy_rejected_up_front() {
        let err = run_trials(&mermin_ghz(), &TrialStrategy::Deterministic(automaton_model()), 10, 0);
        assert!(matches!(err, Err(HarnessError::Strategy(_))));
        let err = run_trials(&mermin_ghz(), &TrialStrategy::Quantum(make_psi()), 10, 0);
        assert!(matches!(err, Err(HarnessError::Incompatible(_))));
        let err = run_trials(&mermin_ghz(), &TrialStrategy::Quantum(native_state("mermin-ghz")), 0, 0);
        assert!(matches!(err, Err(HarnessError::NoRounds)));
    }

    #[test]
    fn same_seed_same_log() {
        let game = four_party_game();
        let s = TrialStrategy::Quantum(make_psi());
        let a = run_trials(&game, &s, 300, 99).unwrap();
        let b = run_trials(&game, &s, 300, 99).unwrap();
        let c = run_trials(&game, &s, 300, 100).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_jsonl(), b.to_jsonl());
        assert_ne!(a, c);
    }

    #[test]
    fn log_round_trips_through_jsonl() {
        let log = run_trials(&cabello_restricted(), &TrialStrategy::Deterministic(automaton_model()), 25, 5)
            .unwrap();
        let text = log.to_jsonl();
        assert!(text.lines().next().unwrap().contains("\"type\":\"header\""));
        assert_eq!(TrialLog::read_from(text.as_bytes()).unwrap(), log);
    }

    #[test]
    fn malformed_logs_rejected() {
        assert!(matches!(TrialLog::read_from("".as_bytes()), Err(HarnessError::EmptyLog)));
        let log = run_trials(&mermin_ghz(), &TrialStrategy::Quantum(native_state("mermin-ghz")), 3, 1).unwrap();
        let mut lines: Vec<String> = log.to_jsonl().lines().map(String::from).collect();
        lines.remove(1);
        let broken = lines.join("\n");
        assert!(matches!(TrialLog::read_from(broken.as_bytes()), Err(HarnessError::LogFormat(_))));
    }

    #[test]
    fn context_choice_covers_every_context() {
        let game = four_party_game();
        let log = run_trials(&game, &TrialStrategy::Quantum(make_psi()), 1_400, 8).unwrap();
        for c in 0..game.contexts().len() {
            let n = log.records.iter().filter(|r| r.context == c).count();
            assert!((50..=150).contains(&n), "context {c} asked {n} times");
        }
    }
}
