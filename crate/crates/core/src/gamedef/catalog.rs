//! Concrete games built around the four-qubit state
//! `(|0000⟩ + |0101⟩ + |1010⟩ − |1111⟩)/2` and the three-party GHZ game.

use crate::exact::Prob;
use crate::qsim::{make_ghz, make_psi, ObservableKind, Statevector};

use super::{Context, GameError, NonlocalGame, ParityConstraint, Party, Predicate, Question};

use ObservableKind::{X, Y, Z};

pub const CABELLO_RESTRICTED: &str = "cabello-restricted";
pub const CABELLO_EXTENDED: &str = "cabello-extended";
pub const FOUR_PARTY: &str = "four-party";
pub const MERMIN_GHZ: &str = "mermin-ghz";

pub const GAME_NAMES: [&str; 4] = [CABELLO_RESTRICTED, CABELLO_EXTENDED, FOUR_PARTY, MERMIN_GHZ];

/// The fourteen parity relations obeyed by the four-qubit state, in the
/// `<sign> <vars>` line format.
pub const FOURTEEN: [&str; 14] = [
    "+1 z1 z3",
    "+1 z2 z4",
    "+1 x1 x3 z4",
    "+1 x2 z3 x4",
    "+1 x1 z2 x3",
    "+1 z1 x2 x4",
    "-1 y1 y3 z4",
    "-1 y2 z3 y4",
    "-1 y1 z2 y3",
    "-1 z1 y2 y4",
    "+1 x1 x2 y3 y4",
    "+1 x1 y2 y3 x4",
    "+1 y1 x2 x3 y4",
    "+1 y1 y2 x3 x4",
];

/// Indices into [`FOURTEEN`] of the four relations probed by the two-party
/// restricted experiment; on their own they already admit no ±1 assignment.
pub const CONTRADICTION_SUBSET: [usize; 4] = [2, 6, 10, 12];

fn constraint(line: &str) -> ParityConstraint {
    line.parse().expect("catalog constraints are well formed")
}

pub fn fourteen_equalities() -> Vec<ParityConstraint> {
    FOURTEEN.iter().map(|l| constraint(l)).collect()
}

pub fn contradiction_subset() -> Vec<ParityConstraint> {
    CONTRADICTION_SUBSET.iter().map(|i| constraint(FOURTEEN[*i])).collect()
}

fn uniform(n: usize) -> Prob {
    Prob::new(1, n as i64)
}

fn question(label: &str, kinds: &[ObservableKind]) -> Question {
    Question::new(label, kinds.iter().map(|k| Some(*k)).collect())
}

/// Two photons, two qubits each. Alice picks `1a = (X1, X2)` or
/// `2a = (Y1, X2)`; Bob picks one of `1b..4b`. All eight pairs are asked
/// with equal weight; only four of them carry a parity test.
pub fn cabello_restricted() -> NonlocalGame {
    let alice = Party {
        name: "alice".into(),
        qubits: vec![1, 2],
        questions: vec![question("1a", &[X, X]), question("2a", &[Y, X])],
    };
    let bob = Party {
        name: "bob".into(),
        qubits: vec![3, 4],
        questions: vec![
            question("1b", &[X, Y]),
            question("2b", &[X, Z]),
            question("3b", &[Y, Y]),
            question("4b", &[Y, Z]),
        ],
    };
    let tested = |a: usize, b: usize| -> Option<usize> {
        match (a, b) {
            (0, 1) => Some(2),
            (1, 3) => Some(6),
            (0, 2) => Some(10),
            (1, 0) => Some(12),
            _ => None,
        }
    };
    let mut contexts = Vec::new();
    for a in 0..2 {
        for b in 0..4 {
            let predicate = match tested(a, b) {
                Some(i) => Predicate::Parity(constraint(FOURTEEN[i])),
                None => Predicate::AlwaysWin,
            };
            contexts.push(Context {
                label: format!("{}/{}", alice.questions[a].label, bob.questions[b].label),
                questions: vec![a, b],
                predicate,
                weight: uniform(8),
            });
        }
    }
    NonlocalGame::new(CABELLO_RESTRICTED, 4, vec![alice, bob], contexts)
        .expect("restricted game is well formed")
}

/// Question on `qubits` measuring exactly the constraint's variables there.
fn question_for(c: &ParityConstraint, qubits: &[usize]) -> Question {
    let kinds: Vec<Option<ObservableKind>> = qubits
        .iter()
        .map(|q| c.vars().iter().find(|v| v.qubit == *q).map(|v| v.kind))
        .collect();
    let q = Question::new(String::new(), kinds);
    Question { label: q.pattern(), ..q }
}

fn intern(set: &mut Vec<Question>, q: Question) -> usize {
    match set.iter().position(|existing| existing.kinds == q.kinds) {
        Some(i) => i,
        None => {
            set.push(q);
            set.len() - 1
        }
    }
}

/// Two-party game testing each of the fourteen relations in its own context.
///
/// The question for each side measures exactly that side's variables of the
/// relation and leaves the other slot unmeasured.
pub fn cabello_extended() -> NonlocalGame {
    let mut alice_qs = Vec::new();
    let mut bob_qs = Vec::new();
    let mut contexts = Vec::new();
    for (i, c) in fourteen_equalities().into_iter().enumerate() {
        let a = intern(&mut alice_qs, question_for(&c, &[1, 2]));
        let b = intern(&mut bob_qs, question_for(&c, &[3, 4]));
        contexts.push(Context {
            label: format!("eq{}", i + 1),
            questions: vec![a, b],
            predicate: Predicate::Parity(c),
            weight: uniform(FOURTEEN.len()),
        });
    }
    let alice = Party { name: "alice".into(), qubits: vec![1, 2], questions: alice_qs };
    let bob = Party { name: "bob".into(), qubits: vec![3, 4], questions: bob_qs };
    NonlocalGame::new(CABELLO_EXTENDED, 4, vec![alice, bob], contexts)
        .expect("extended game is well formed")
}

const PLAYER_NAMES: [&str; 4] = ["alice", "bob", "charlie", "didier"];

fn pauli_party(name: &str, qubit: usize, kinds: &[ObservableKind]) -> Party {
    Party {
        name: name.into(),
        qubits: vec![qubit],
        questions: kinds.iter().map(|k| question(&k.to_string(), &[*k])).collect(),
    }
}

/// One qubit per player, questions `{X, Y, Z}`, one context per relation.
/// Players not involved in a relation are asked `Z` and their answer is ignored.
pub fn four_party_game() -> NonlocalGame {
    let parties: Vec<Party> = PLAYER_NAMES
        .iter()
        .enumerate()
        .map(|(i, name)| pauli_party(name, i + 1, &ObservableKind::ALL))
        .collect();
    let index_of = |k: ObservableKind| ObservableKind::ALL.iter().position(|x| *x == k).unwrap();
    let contexts = fourteen_equalities()
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            let questions = (1..=4)
                .map(|q| {
                    let kind = c.vars().iter().find(|v| v.qubit == q).map_or(Z, |v| v.kind);
                    index_of(kind)
                })
                .collect();
            Context {
                label: format!("eq{}", i + 1),
                questions,
                predicate: Predicate::Parity(c),
                weight: uniform(FOURTEEN.len()),
            }
        })
        .collect();
    NonlocalGame::new(FOUR_PARTY, 4, parties, contexts).expect("four-party game is well formed")
}

/// Three players, questions `{X, Y}`: `XXX` must give parity `+1`, and
/// `XYY`, `YXY`, `YYX` parity `-1`.
pub fn mermin_ghz() -> NonlocalGame {
    let parties: Vec<Party> = PLAYER_NAMES[..3]
        .iter()
        .enumerate()
        .map(|(i, name)| pauli_party(name, i + 1, &[X, Y]))
        .collect();
    let rows: [(&str, &str); 4] = [
        ("XXX", "+1 x1 x2 x3"),
        ("XYY", "-1 x1 y2 y3"),
        ("YXY", "-1 y1 x2 y3"),
        ("YYX", "-1 y1 y2 x3"),
    ];
    let contexts = rows
        .iter()
        .map(|(label, line)| Context {
            label: label.to_string(),
            questions: label.chars().map(|c| usize::from(c == 'Y')).collect(),
            predicate: Predicate::Parity(constraint(line)),
            weight: uniform(rows.len()),
        })
        .collect();
    NonlocalGame::new(MERMIN_GHZ, 3, parties, contexts).expect("GHZ game is well formed")
}

/// The three-player game played by qubits 1, 3 and 4 once the holder of
/// qubit 2 has produced `x2 = selector`.
pub fn nested_ghz_contexts(selector: i64) -> Result<Vec<ParityConstraint>, GameError> {
    let flip = match selector {
        1 => "+1",
        -1 => "-1",
        other => return Err(GameError::BadSelector(other)),
    };
    Ok(vec![
        constraint("+1 x1 x3 z4"),
        constraint("-1 y1 y3 z4"),
        constraint(&format!("{flip} x1 y3 y4")),
        constraint(&format!("{flip} y1 x3 y4")),
    ])
}

pub fn by_name(name: &str) -> Result<NonlocalGame, GameError> {
    match name {
        CABELLO_RESTRICTED => Ok(cabello_restricted()),
        CABELLO_EXTENDED => Ok(cabello_extended()),
        FOUR_PARTY => Ok(four_party_game()),
        MERMIN_GHZ => Ok(mermin_ghz()),
        other => Err(GameError::UnknownGame { name: other.into(), known: GAME_NAMES.join(", ") }),
    }
}

/// The state whose measurements win the named game with certainty.
pub fn native_state(game_id: &str) -> Statevector {
    if game_id == MERMIN_GHZ {
        make_ghz(3).expect("3 qubits")
    } else {
        make_psi()
    }
}
