//! End-to-end checks of the headline numbers: quantum relations, classical
//! bounds, LHV mimicry and the distributed harness.
//!
//! Each check carries its own tolerance and wall-clock limit; a check whose
//! result is right but slow still fails.

use std::fmt;
use std::net::TcpListener;
use std::thread;
use std::time::{Duration, Instant};

use crate::exact::{fraction, fraction_with_decimal, to_f64, Prob};
use crate::gamedef::catalog::{
    cabello_extended, cabello_restricted, contradiction_subset, four_party_game, fourteen_equalities, mermin_ghz,
};
use crate::gamedef::NonlocalGame;
use crate::harness::wire::Message;
use crate::harness::{
    expected_transcript, quantum_win_probability, run_player, run_trials, serve_on, Dealer, PlayerStrategy,
    ServeOutcome, TrialStrategy,
};
use crate::lhvsolve::{
    automaton_model, classical_value, lambda_mu_model, model_distribution, noncontextual_maxsat, win_probability,
    SolverConfig,
};
use crate::qsim::{
    joint_distribution, make_ghz, make_psi, reduced_spectrum, verify_constraints, Sign, SiteObservable,
};

pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub id: u32,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:>2} {}: {} ({:.2}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

type CheckFn = fn() -> Result<(bool, String), String>;

/// `(id, title, time limit, check)` for every check, in order.
pub const CHECKS: [(u32, &str, Option<Duration>, CheckFn); 11] = [
    (1, "fourteen equalities hold on psi", Some(Duration::from_secs(1)), fourteen_hold),
    (2, "four-equation contradiction", Some(Duration::from_secs(1)), four_equation_contradiction),
    (3, "assignment bound over all fourteen", Some(Duration::from_secs(1)), assignment_bound),
    (4, "restricted experiment has a perfect LHV model", Some(Duration::from_secs(1)), restricted_refuted),
    (5, "lambda-mu mimics quantum statistics", None, mimicry),
    (6, "four-party pseudo-telepathy gap", Some(Duration::from_secs(5)), four_party_gap),
    (7, "Mermin-GHZ baseline", Some(Duration::from_secs(1)), mermin_baseline),
    (8, "nested GHZ conditioning", None, nested_conditioning),
    (9, "reduced spectra differ from GHZ4", None, spectra),
    (10, "distributed run matches in-process run", Some(Duration::from_secs(10)), distributed_equivalence),
    (11, "extended two-party game value", None, extended_value),
];

pub fn run_check(id: u32) -> Option<CheckOutcome> {
    let (id, title, limit, check) = CHECKS.iter().find(|c| c.0 == id).copied()?;
    let start = Instant::now();
    let result = check();
    let elapsed = start.elapsed();
    let (mut passed, mut detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    if let Some(limit) = limit {
        if elapsed > limit {
            passed = false;
            detail.push_str(&format!("; over the {}s limit", limit.as_secs()));
        }
    }
    Some(CheckOutcome { id, title, passed, detail, elapsed })
}

pub fn run_all() -> Vec<CheckOutcome> {
    CHECKS.iter().filter_map(|c| run_check(c.0)).collect()
}

fn err(e: impl fmt::Display) -> String {
    e.to_string()
}

fn fourteen_hold() -> Result<(bool, String), String> {
    let reports = verify_constraints(&make_psi(), &fourteen_equalities()).map_err(err)?;
    let worst = reports.iter().map(|r| r.violation_mass).fold(0.0, f64::max);
    let held = reports.iter().filter(|r| r.holds_surely && r.violation_mass < TOLERANCE).count();
    Ok((held == 14, format!("{held}/14 hold, max violation mass {worst:.1e}")))
}

fn four_equation_contradiction() -> Result<(bool, String), String> {
    let r = noncontextual_maxsat(&contradiction_subset()).map_err(err)?;
    Ok((
        r.vars.len() == 7 && r.max_satisfied == 3,
        format!("{} variables, max satisfied {}/{}", r.vars.len(), r.max_satisfied, r.total),
    ))
}

fn assignment_bound() -> Result<(bool, String), String> {
    let r = noncontextual_maxsat(&fourteen_equalities()).map_err(err)?;
    Ok((
        r.vars.len() == 12 && r.max_satisfied == 13 && r.witness_count() >= 1,
        format!(
            "max satisfied {}/{} over {} variables, {} witnesses (expected 13)",
            r.max_satisfied,
            r.total,
            r.vars.len(),
            r.witness_count()
        ),
    ))
}

fn restricted_refuted() -> Result<(bool, String), String> {
    let game = cabello_restricted();
    let one = Prob::from_integer(1);
    let value = classical_value(&game, &SolverConfig::default()).map_err(err)?.value;
    let automaton = win_probability(&game, &automaton_model()).map_err(err)?;
    let lambda_mu = win_probability(&game, &lambda_mu_model()).map_err(err)?;
    Ok((
        value == one && automaton == one && lambda_mu == one,
        format!(
            "classical value {}, automaton {}, lambda-mu {}",
            fraction(&value),
            fraction(&automaton),
            fraction(&lambda_mu)
        ),
    ))
}

fn mimicry() -> Result<(bool, String), String> {
    let game = cabello_restricted();
    let model = lambda_mu_model();
    let psi = make_psi();
    let mut worst: Vec<String> = Vec::new();
    let mut max_tv: f64 = 0.0;
    for (c, ctx) in game.contexts().iter().enumerate() {
        let classical = model_distribution(&model, &game, c).map_err(err)?;
        let quantum = joint_distribution(&psi, &game.context_observables(c)).map_err(err)?;
        let tv = 0.5
            * quantum
                .iter()
                .map(|(values, q)| (classical.get(&values).map(to_f64).unwrap_or(0.0) - q).abs())
                .sum::<f64>();
        max_tv = max_tv.max(tv);
        if tv > TOLERANCE {
            worst.push(format!("{} ({tv:.3})", ctx.label));
        }
    }
    let detail = if worst.is_empty() {
        format!("all 8 contexts within {TOLERANCE:e}, max tv {max_tv:.1e}")
    } else {
        format!("{}/8 contexts differ: {}", worst.len(), worst.join(", "))
    };
    Ok((worst.is_empty(), detail))
}

fn four_party_gap() -> Result<(bool, String), String> {
    let game = four_party_game();
    let value = classical_value(&game, &SolverConfig::default()).map_err(err)?.value;
    let log = run_trials(&game, &TrialStrategy::Quantum(make_psi()), 10_000, 42).map_err(err)?;
    Ok((
        value == Prob::new(13, 14) && log.wins() == 10_000,
        format!(
            "classical value {} (expected 13/14), quantum won {}/10000",
            fraction_with_decimal(&value),
            log.wins()
        ),
    ))
}

fn mermin_baseline() -> Result<(bool, String), String> {
    let game = mermin_ghz();
    let value = classical_value(&game, &SolverConfig::default()).map_err(err)?.value;
    let quantum = quantum_win_probability(&game, &make_ghz(3).map_err(err)?).map_err(err)?;
    Ok((
        value == Prob::new(3, 4) && (quantum - 1.0).abs() < TOLERANCE,
        format!("classical value {}, quantum value {quantum:.9}", fraction(&value)),
    ))
}

fn nested_conditioning() -> Result<(bool, String), String> {
    let obs = [SiteObservable::x(1), SiteObservable::x(2), SiteObservable::y(3), SiteObservable::y(4)];
    let dist = joint_distribution(&make_psi(), &obs).map_err(err)?;
    let conditional = |selector: Sign| {
        let (mut hit, mut all) = (0.0, 0.0);
        for (v, p) in dist.iter() {
            if v[1] == selector {
                all += p;
                if v[0] == selector * v[2] * v[3] {
                    hit += p;
                }
            }
        }
        hit / all
    };
    let (plus, minus) = (conditional(Sign::Plus), conditional(Sign::Minus));
    Ok((
        (plus - 1.0).abs() < TOLERANCE && (minus - 1.0).abs() < TOLERANCE,
        format!("P(x1 = y3y4 | x2=+1) = {plus:.9}, P(x1 = -y3y4 | x2=-1) = {minus:.9}"),
    ))
}

fn spectra() -> Result<(bool, String), String> {
    let psi = reduced_spectrum(&make_psi(), &[1, 2]).map_err(err)?;
    let ghz = reduced_spectrum(&make_ghz(4).map_err(err)?, &[1, 2]).map_err(err)?;
    let close = |got: &[f64], want: &[f64]| {
        got.len() == want.len() && got.iter().zip(want).all(|(a, b)| (a - b).abs() < TOLERANCE)
    };
    Ok((
        close(&psi, &[0.25; 4]) && close(&ghz, &[0.5, 0.5, 0.0, 0.0]),
        format!("psi {psi:.6?}, ghz4 {ghz:.6?}"),
    ))
}

/// Serves `game` on an ephemeral local port with one player thread per party.
pub fn local_session(
    game: &NonlocalGame,
    strategy: &TrialStrategy,
    rounds: u64,
    seed: u64,
) -> Result<ServeOutcome, String> {
    let listener = TcpListener::bind("127.0.0.1:0").map_err(err)?;
    let addr = listener.local_addr().map_err(err)?.to_string();
    let player = PlayerStrategy::for_trial(strategy);
    let dealer = Dealer::for_strategy(strategy);
    thread::scope(|s| {
        let players: Vec<_> = (0..game.parties().len())
            .map(|p| {
                let (addr, player) = (&addr, &player);
                s.spawn(move || run_player(addr, game, p, player))
            })
            .collect();
        let outcome = serve_on(&listener, game, &dealer, rounds, seed).map_err(err)?;
        for (p, h) in players.into_iter().enumerate() {
            let answered = h.join().map_err(|_| format!("player {p} panicked"))?.map_err(err)?;
            if answered != rounds {
                return Err(format!("player {p} answered {answered} rounds"));
            }
        }
        Ok(outcome)
    })
}

/// Checks that every line sent to each party is derivable from that party's
/// own questions and the session header.
pub fn transcripts_are_private(game: &NonlocalGame, outcome: &ServeOutcome) -> Result<(), String> {
    for (p, lines) in outcome.transcripts.iter().enumerate() {
        let dealt = lines.first().ok_or_else(|| format!("party {p} received nothing"))?;
        if !matches!(Message::parse(dealt), Ok(Message::Dealt { .. })) {
            return Err(format!("party {p} did not open with dealt"));
        }
        let owned = &game.parties()[p].qubits;
        for line in lines {
            if let Ok(Message::Question { observables, .. }) = Message::parse(line) {
                if let Some(o) = observables.iter().find(|o| !owned.contains(&o.slot)) {
                    return Err(format!("party {p} was asked about qubit {}", o.slot));
                }
            }
        }
        if *lines != expected_transcript(game, p, dealt, &outcome.log) {
            return Err(format!("party {p} transcript differs from its own question stream"));
        }
    }
    Ok(())
}

fn distributed_equivalence() -> Result<(bool, String), String> {
    let game = four_party_game();
    let strategy = TrialStrategy::Quantum(make_psi());
    let local = run_trials(&game, &strategy, 1_000, 42).map_err(err)?;
    let outcome = local_session(&game, &strategy, 1_000, 42)?;
    let identical = outcome.log == local && outcome.log.to_jsonl() == local.to_jsonl();
    let private = transcripts_are_private(&game, &outcome);
    let detail = format!(
        "logs {}, transcripts {}, {} wins",
        if identical { "identical" } else { "differ" },
        match &private {
            Ok(()) => "private".to_string(),
            Err(e) => e.clone(),
        },
        outcome.log.wins()
    );
    Ok((identical && private.is_ok(), detail))
}

fn extended_value() -> Result<(bool, String), String> {
    let assignment = noncontextual_maxsat(&fourteen_equalities()).map_err(err)?;
    let assignment_value = Prob::new(assignment.max_satisfied as i64, assignment.total as i64);
    let result = classical_value(&cabello_extended(), &SolverConfig::default()).map_err(err)?;
    Ok((
        result.value <= Prob::new(13, 14) && result.value >= assignment_value,
        format!(
            "two-party value {} after {} outer profiles, noncontextual assignment value {} (bound 13/14)",
            fraction_with_decimal(&result.value),
            result.strategies_examined,
            fraction_with_decimal(&assignment_value)
        ),
    ))
}
