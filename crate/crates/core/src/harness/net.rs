//! Distributed mode: a referee process and one process per player, talking
//! over TCP with the line protocol in [`super::wire`].
//!
//! No entanglement crosses the wire. A quantum strategy is emulated by the
//! referee acting as dealer: it samples each round's joint outcome centrally
//! and ships every player only its own share, up front, as part of the
//! session header. This reproduces the statistics of the quantum strategy,
//! not its physics.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::time::Duration;

use crate::gamedef::NonlocalGame;
use crate::lhvsolve::{DeterministicStrategy, HiddenVariableModel};
use crate::qsim::{Sign, SiteObservable};

use super::wire::{decode_tape, encode_tape, Message, WireObservable, PROTOCOL_VERSION};
use super::{
    plan_rounds, Dealer, DealtRandomness, HarnessError, RoundPlan, RoundTape, TrialLog, TrialRecord,
    TrialStrategy,
};

const IO_TIMEOUT: Duration = Duration::from_secs(60);

/// What a player process runs.
#[derive(Debug, Clone)]
pub enum PlayerStrategy {
    Deterministic(DeterministicStrategy),
    HiddenVariable(HiddenVariableModel),
    /// Answers from the dealt per-round outcome shares.
    QuantumEmulation,
}

impl PlayerStrategy {
    pub fn for_trial(strategy: &TrialStrategy) -> PlayerStrategy {
        match strategy {
            TrialStrategy::Quantum(_) => PlayerStrategy::QuantumEmulation,
            TrialStrategy::Deterministic(s) => PlayerStrategy::Deterministic(s.clone()),
            TrialStrategy::HiddenVariable(m) => PlayerStrategy::HiddenVariable(m.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServeOutcome {
    pub log: TrialLog,
    /// Every line sent to each party, in order.
    pub transcripts: Vec<Vec<String>>,
}

/// Per-party tape and its width per round.
fn party_tape(game: &NonlocalGame, plan: &[RoundPlan], dealer: &Dealer, party: usize) -> (Vec<Sign>, usize) {
    match &dealer.source {
        DealtRandomness::Nothing => (Vec::new(), 0),
        DealtRandomness::HiddenBits(k) => {
            let mut tape = Vec::with_capacity(plan.len() * k);
            for step in plan {
                if let RoundTape::Hidden(bits) = &step.tape {
                    tape.extend_from_slice(bits);
                }
            }
            (tape, *k)
        }
        DealtRandomness::Quantum(_) => {
            let owner = &game.parties()[party];
            let width = owner.qubits.len();
            let mut tape = Vec::with_capacity(plan.len() * width);
            for step in plan {
                let RoundTape::Outcomes(shares) = &step.tape else { continue };
                let q = game.contexts()[step.context].questions[party];
                let mut mine = shares[party].iter();
                for kind in &owner.questions[q].kinds {
                    tape.push(match kind {
                        Some(_) => *mine.next().expect("one outcome per measured slot"),
                        None => Sign::Plus,
                    });
                }
            }
            (tape, width)
        }
    }
}

fn question_message(game: &NonlocalGame, party: usize, round: u64, question: usize) -> Message {
    Message::Question {
        round,
        observables: game.parties()[party].measured(question).into_iter().map(WireObservable::from).collect(),
    }
}

struct Link<R, W> {
    reader: R,
    writer: W,
}

struct Referee<'g, R, W> {
    game: &'g NonlocalGame,
    links: Vec<Link<R, W>>,
    transcripts: Vec<Vec<String>>,
}

enum ReadFailure {
    Closed,
    Bad(String),
}

impl<R: BufRead, W: Write> Referee<'_, R, W> {
    fn send(&mut self, party: usize, msg: &Message) -> Result<(), HarnessError> {
        let line = msg.to_line();
        let link = &mut self.links[party];
        link.writer.write_all(line.as_bytes())?;
        link.writer.flush()?;
        self.transcripts[party].push(line);
        Ok(())
    }

    fn receive(&mut self, party: usize) -> Result<Message, ReadFailure> {
        let mut line = String::new();
        match self.links[party].reader.read_line(&mut line) {
            Ok(0) | Err(_) => Err(ReadFailure::Closed),
            Ok(_) => Message::parse(&line).map_err(ReadFailure::Bad),
        }
    }

    fn broadcast_end(&mut self, reason: &str) {
        let msg = Message::End { reason: reason.to_string() };
        for p in 0..self.links.len() {
            // Best effort: the peer may already be gone.
            let _ = self.send(p, &msg);
        }
    }

    fn protocol_error(&mut self, party: usize, message: String) -> HarnessError {
        self.broadcast_end(&format!("protocol error from party {party}"));
        HarnessError::Protocol { party, message }
    }
}

/// Runs a full session over already-connected links.
///
/// Each link must open with a `hello` naming its party. Per round, every
/// party is sent its own question before any answer is read; answers are
/// then collected from all parties before the round is scored.
pub fn referee_session<R: BufRead, W: Write>(
    game: &NonlocalGame,
    dealer: &Dealer,
    rounds: u64,
    seed: u64,
    links: Vec<(R, W)>,
) -> Result<ServeOutcome, HarnessError> {
    let n = game.parties().len();
    if links.len() != n {
        return Err(HarnessError::Incompatible(format!("{} players connected, game needs {n}", links.len())));
    }
    let plan = plan_rounds(game, dealer, rounds, seed)?;
    let mut by_party: Vec<Option<Link<R, W>>> = (0..n).map(|_| None).collect();
    for (i, (mut reader, writer)) in links.into_iter().enumerate() {
        let mut line = String::new();
        let read = reader.read_line(&mut line)?;
        let hello = if read == 0 { Err("closed before hello".to_string()) } else { Message::parse(&line) };
        match hello {
            Ok(Message::Hello { party, protocol_version }) => {
                if protocol_version != PROTOCOL_VERSION {
                    return Err(HarnessError::Protocol {
                        party,
                        message: format!("unsupported protocol version {protocol_version}"),
                    });
                }
                if party >= n || by_party[party].is_some() {
                    return Err(HarnessError::Protocol {
                        party,
                        message: "unknown or duplicate party in hello".into(),
                    });
                }
                by_party[party] = Some(Link { reader, writer });
            }
            Ok(other) => {
                return Err(HarnessError::Protocol {
                    party: i,
                    message: format!("expected hello, got {}", other.kind()),
                })
            }
            Err(e) => return Err(HarnessError::Protocol { party: i, message: e }),
        }
    }
    let mut referee = Referee {
        game,
        links: by_party.into_iter().map(|l| l.expect("all parties said hello")).collect(),
        transcripts: vec![Vec::new(); n],
    };
    for p in 0..n {
        let (tape, width) = party_tape(game, &plan, dealer, p);
        let dealt = Message::Dealt { tape: encode_tape(&tape), bits_per_round: width, rounds };
        referee.send(p, &dealt)?;
    }

    let mut log = TrialLog::new(game, &dealer.descriptor, seed);
    for (round, step) in plan.iter().enumerate() {
        let round = round as u64;
        let questions = game.contexts()[step.context].questions.clone();
        for (p, q) in questions.iter().enumerate() {
            let msg = question_message(referee.game, p, round, *q);
            if referee.send(p, &msg).is_err() {
                referee.broadcast_end(&format!("aborted: party {p} disconnected"));
                log.complete = false;
                return Err(HarnessError::Disconnected { party: p, log: Box::new(log) });
            }
        }
        let mut answers = Vec::with_capacity(n);
        for (p, q) in questions.iter().enumerate() {
            match referee.receive(p) {
                Ok(Message::Answer { round: r, values }) => {
                    if r != round {
                        return Err(referee.protocol_error(p, format!("answered round {r} during round {round}")));
                    }
                    let expected = game.parties()[p].arity(*q);
                    if values.len() != expected {
                        return Err(referee.protocol_error(
                            p,
                            format!("answer has {} values, question needs {expected}", values.len()),
                        ));
                    }
                    answers.push(values);
                }
                Ok(other) => {
                    return Err(referee.protocol_error(p, format!("expected answer, got {}", other.kind())));
                }
                Err(ReadFailure::Bad(e)) => return Err(referee.protocol_error(p, e)),
                Err(ReadFailure::Closed) => {
                    referee.broadcast_end(&format!("aborted: party {p} disconnected"));
                    log.complete = false;
                    return Err(HarnessError::Disconnected { party: p, log: Box::new(log) });
                }
            }
        }
        let win = game.judge(step.context, &answers)?;
        log.records.push(TrialRecord { round, context: step.context, questions, answers, win });
    }
    referee.broadcast_end("complete");
    Ok(ServeOutcome { log, transcripts: referee.transcripts })
}

/// Accepts one connection per party on `listener` and runs the session.
pub fn serve_on(
    listener: &TcpListener,
    game: &NonlocalGame,
    dealer: &Dealer,
    rounds: u64,
    seed: u64,
) -> Result<ServeOutcome, HarnessError> {
    let mut links = Vec::new();
    for _ in game.parties() {
        let (stream, _) = listener.accept()?;
        stream.set_read_timeout(Some(IO_TIMEOUT))?;
        stream.set_nodelay(true)?;
        links.push((BufReader::new(stream.try_clone()?), stream));
    }
    referee_session(game, dealer, rounds, seed, links)
}

/// Binds `bind` and serves one session.
pub fn serve_referee(
    game: &NonlocalGame,
    bind: &str,
    rounds: u64,
    seed: u64,
    dealer: &Dealer,
) -> Result<ServeOutcome, HarnessError> {
    let listener = TcpListener::bind(bind)?;
    serve_on(&listener, game, dealer, rounds, seed)
}

/// The transcript party `party` must have received, rebuilt from the
/// session header and that party's own questions only. For an aborted
/// session the final `end` line is omitted.
pub fn expected_transcript(game: &NonlocalGame, party: usize, dealt_line: &str, log: &TrialLog) -> Vec<String> {
    let mut lines = vec![dealt_line.to_string()];
    for r in &log.records {
        lines.push(question_message(game, party, r.round, r.questions[party]).to_line());
    }
    if log.complete {
        lines.push(Message::End { reason: "complete".into() }.to_line());
    }
    lines
}

fn player_error(party: usize, message: impl Into<String>) -> HarnessError {
    HarnessError::Protocol { party, message: message.into() }
}

/// Plays one session as `party`; returns the number of rounds answered.
pub fn play_session<R: BufRead, W: Write>(
    mut reader: R,
    mut writer: W,
    game: &NonlocalGame,
    party: usize,
    strategy: &PlayerStrategy,
) -> Result<u64, HarnessError> {
    let owner = game
        .parties()
        .get(party)
        .ok_or_else(|| player_error(party, format!("game has no party {party}")))?;
    match strategy {
        PlayerStrategy::Deterministic(s) => s.validate(game)?,
        PlayerStrategy::HiddenVariable(m) => {
            for b in m.branches() {
                b.validate(game)?;
            }
        }
        PlayerStrategy::QuantumEmulation => {}
    }
    let hello = Message::Hello { party, protocol_version: PROTOCOL_VERSION };
    writer.write_all(hello.to_line().as_bytes())?;
    writer.flush()?;

    let next = |reader: &mut R| -> Result<Message, HarnessError> {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            return Err(player_error(party, "referee closed the connection"));
        }
        Message::parse(&line).map_err(|e| player_error(party, e))
    };

    let (tape, width) = match next(&mut reader)? {
        Message::Dealt { tape, bits_per_round, rounds } => {
            let expected_width = match strategy {
                PlayerStrategy::Deterministic(_) => 0,
                PlayerStrategy::HiddenVariable(m) => m.hidden_bits,
                PlayerStrategy::QuantumEmulation => owner.qubits.len(),
            };
            if bits_per_round != expected_width {
                return Err(player_error(
                    party,
                    format!("dealt {bits_per_round} bits per round, strategy needs {expected_width}"),
                ));
            }
            let tape = decode_tape(&tape, bits_per_round * rounds as usize).map_err(|e| player_error(party, e))?;
            (tape, bits_per_round)
        }
        Message::End { .. } => return Ok(0),
        other => return Err(player_error(party, format!("expected dealt, got {}", other.kind()))),
    };

    let mut answered = 0u64;
    loop {
        match next(&mut reader)? {
            Message::Question { round, observables } => {
                if round != answered {
                    return Err(player_error(party, format!("question for round {round}, expected {answered}")));
                }
                let asked: Vec<SiteObservable> = observables.into_iter().map(SiteObservable::from).collect();
                let q = owner
                    .find_question(&asked)
                    .ok_or_else(|| player_error(party, "question is not in this party's question set"))?;
                let start = round as usize * width;
                let share = tape
                    .get(start..start + width)
                    .ok_or_else(|| player_error(party, "dealt tape exhausted"))?;
                let values = match strategy {
                    PlayerStrategy::Deterministic(s) => s.answer(party, q).to_vec(),
                    PlayerStrategy::HiddenVariable(m) => m.respond(share, party, q).to_vec(),
                    PlayerStrategy::QuantumEmulation => owner.questions[q]
                        .kinds
                        .iter()
                        .zip(share)
                        .filter_map(|(k, v)| k.map(|_| *v))
                        .collect(),
                };
                writer.write_all(Message::Answer { round, values }.to_line().as_bytes())?;
                writer.flush()?;
                answered += 1;
            }
            Message::End { reason } => {
                if reason.starts_with("complete") {
                    return Ok(answered);
                }
                return Err(player_error(party, format!("session ended: {reason}")));
            }
            other => return Err(player_error(party, format!("unexpected {}", other.kind()))),
        }
    }
}

/// Connects to a referee at `addr` and plays one session.
pub fn run_player(
    addr: &str,
    game: &NonlocalGame,
    party: usize,
    strategy: &PlayerStrategy,
) -> Result<u64, HarnessError> {
    let stream = TcpStream::connect(addr)?;
    stream.set_read_timeout(Some(IO_TIMEOUT))?;
    stream.set_nodelay(true)?;
    play_session(BufReader::new(stream.try_clone()?), stream, game, party, strategy)
}
