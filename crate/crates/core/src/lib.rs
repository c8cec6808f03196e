//! Nonlocal games as executable objects.
//!
//! The crate is split along the lines of the workflow it supports:
//!
//! * [`qsim`] builds small statevectors and evaluates joint measurements of
//!   commuting single-qubit Pauli observables exactly.
//! * [`gamedef`] describes nonlocal games (parties, questions, weighted
//!   contexts with parity predicates) and ships a catalog of concrete games.
//! * [`lhvsolve`] evaluates classical strategies and computes exact classical
//!   values by exhaustive search.
//! * [`harness`] runs seeded trials, either in-process or with one process
//!   per player over a newline-delimited JSON protocol.
//! * [`verify`] bundles the end-to-end checks exposed by `nonlocal verify`.

pub mod exact;
pub mod gamedef;
pub mod harness;
pub mod lhvsolve;
pub mod qsim;
pub mod verify;

pub use exact::Prob;
pub use gamedef::{Context, NonlocalGame, ParityConstraint, Party, Predicate, Question};
pub use qsim::{ObservableKind, OutcomeTuple, Sign, SiteObservable, Statevector};
