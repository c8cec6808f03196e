//! Exact statevector predictions for commuting single-qubit Pauli measurements.
//!
//! Qubit 1 is the leftmost tensor factor, so in a basis label such as
//! `|0101⟩` the first character belongs to qubit 1. Outcome `+1` is the
//! `+1` eigenvalue; for `Z` that is `|0⟩`.

mod state;
mod types;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::gamedef::ParityConstraint;

pub use state::{make_ghz, make_psi, Statevector, MAX_QUBITS};
pub use types::{ObservableKind, OutcomeTuple, Sign, SiteObservable};

/// Probabilities below this are treated as zero when deciding "never happens".
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QsimError {
    #[error("amplitude vector has length {got}, expected {expected}")]
    InvalidLength { expected: usize, got: usize },
    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error("{0} qubits requested; supported range is 1..={MAX_QUBITS}")]
    UnsupportedSize(usize),
    #[error("GHZ states need at least 2 qubits, got {0}")]
    GhzTooSmall(usize),
    #[error("qubit {qubit} is outside 1..={num_qubits}")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("qubit {0} is measured more than once")]
    DuplicateQubit(usize),
    #[error("reduced state must keep a non-empty proper subset of qubits")]
    BadSubset,
    #[error("{0}")]
    Parse(String),
}

/// Joint outcome distribution of a list of single-site observables.
///
/// Probabilities are indexed by outcome tuple, with the first observable in
/// the most significant position and `-1` encoded as a set bit.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    observables: Vec<SiteObservable>,
    probabilities: Vec<f64>,
}

impl JointDistribution {
    pub fn observables(&self) -> &[SiteObservable] {
        &self.observables
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    fn index_of(&self, values: &[Sign]) -> Option<usize> {
        if values.len() != self.observables.len() {
            return None;
        }
        Some(values.iter().fold(0usize, |acc, s| (acc << 1) | usize::from(s.is_minus())))
    }

    fn values_at(&self, index: usize) -> Vec<Sign> {
        let k = self.observables.len();
        (0..k).map(|i| Sign::from_bit((index >> (k - 1 - i)) & 1 == 1)).collect()
    }

    /// Probability of an outcome tuple given in observable order.
    pub fn probability(&self, values: &[Sign]) -> f64 {
        self.index_of(values).map_or(0.0, |i| self.probabilities[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec<Sign>, f64)> + '_ {
        self.probabilities.iter().enumerate().map(|(i, p)| (self.values_at(i), *p))
    }

    pub fn to_map(&self) -> BTreeMap<Vec<Sign>, f64> {
        self.iter().collect()
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// `E[∏ values]`.
    pub fn expectation(&self) -> f64 {
        self.iter()
            .map(|(vals, p)| f64::from(Sign::product(vals).value()) * p)
            .sum()
    }

    /// Marginal of observable `position` as `(P(+1), P(-1))`.
    pub fn marginal(&self, position: usize) -> (f64, f64) {
        let k = self.observables.len();
        let mut plus = 0.0;
        let mut minus = 0.0;
        for (i, p) in self.probabilities.iter().enumerate() {
            if (i >> (k - 1 - position)) & 1 == 1 {
                minus += p;
            } else {
                plus += p;
            }
        }
        (plus, minus)
    }

    /// Draws one outcome tuple.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> OutcomeTuple {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = None;
        for (i, p) in self.probabilities.iter().enumerate() {
            if *p <= 0.0 {
                continue;
            }
            acc += p;
            chosen = Some(i);
            if u < acc {
                break;
            }
        }
        // Rounding can leave `acc` a hair under 1; the last supported tuple absorbs it.
        let index = chosen.unwrap_or(0);
        let entries = self.observables.iter().copied().zip(self.values_at(index)).collect();
        OutcomeTuple { entries }
    }
}

fn check_observables(state: &Statevector, observables: &[SiteObservable]) -> Result<(), QsimError> {
    let n = state.num_qubits();
    for (i, obs) in observables.iter().enumerate() {
        if obs.qubit == 0 || obs.qubit > n {
            return Err(QsimError::QubitOutOfRange { qubit: obs.qubit, num_qubits: n });
        }
        if observables[..i].iter().any(|o| o.qubit == obs.qubit) {
            return Err(QsimError::DuplicateQubit(obs.qubit));
        }
    }
    Ok(())
}

/// Exact joint distribution of measuring `observables` on `state`.
///
/// Each measured qubit is rotated into its observable's eigenbasis, after
/// which outcome probabilities are sums of squared amplitudes; qubits not in
/// the list are marginalized.
pub fn joint_distribution(
    state: &Statevector,
    observables: &[SiteObservable],
) -> Result<JointDistribution, QsimError> {
    check_observables(state, observables)?;
    let n = state.num_qubits();
    let mut amps = state.amplitudes().to_vec();
    for obs in observables {
        let mask = 1usize << (n - obs.qubit);
        let plus = obs.kind.eigenvector(Sign::Plus);
        let minus = obs.kind.eigenvector(Sign::Minus);
        for i in 0..amps.len() {
            if i & mask != 0 {
                continue;
            }
            let (a0, a1) = (amps[i], amps[i | mask]);
            amps[i] = plus[0].conj() * a0 + plus[1].conj() * a1;
            amps[i | mask] = minus[0].conj() * a0 + minus[1].conj() * a1;
        }
    }
    let k = observables.len();
    let mut probabilities = vec![0.0; 1 << k];
    for (i, a) in amps.iter().enumerate() {
        let outcome = observables
            .iter()
            .fold(0usize, |acc, o| (acc << 1) | ((i >> (n - o.qubit)) & 1));
        probabilities[outcome] += a.norm_sqr();
    }
    Ok(JointDistribution { observables: observables.to_vec(), probabilities })
}

/// `⟨∏ O_j⟩` for commuting single-site observables.
pub fn expectation(state: &Statevector, observables: &[SiteObservable]) -> Result<f64, QsimError> {
    Ok(joint_distribution(state, observables)?.expectation())
}

/// One seeded draw from the joint distribution. Equal seeds give equal tuples.
pub fn sample(
    state: &Statevector,
    observables: &[SiteObservable],
    seed: u64,
) -> Result<OutcomeTuple, QsimError> {
    let dist = joint_distribution(state, observables)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(dist.sample(&mut rng))
}

/// Eigenvalues of the reduced density operator on `keep`, largest first.
pub fn reduced_spectrum(state: &Statevector, keep: &[usize]) -> Result<Vec<f64>, QsimError> {
    let n = state.num_qubits();
    for (i, q) in keep.iter().enumerate() {
        if *q == 0 || *q > n {
            return Err(QsimError::QubitOutOfRange { qubit: *q, num_qubits: n });
        }
        if keep[..i].contains(q) {
            return Err(QsimError::DuplicateQubit(*q));
        }
    }
    if keep.is_empty() || keep.len() == n {
        return Err(QsimError::BadSubset);
    }
    let traced: Vec<usize> = (1..=n).filter(|q| !keep.contains(q)).collect();
    let extract = |index: usize, qubits: &[usize]| {
        qubits.iter().fold(0usize, |acc, q| (acc << 1) | ((index >> (n - q)) & 1))
    };
    // Reshape ψ into a (kept × traced) matrix M, so ρ = M M†.
    let rows = 1usize << keep.len();
    let cols = 1usize << traced.len();
    let mut m = DMatrix::<Complex64>::zeros(rows, cols);
    for (i, a) in state.amplitudes().iter().enumerate() {
        m[(extract(i, keep), extract(i, &traced))] = *a;
    }
    let rho = &m * m.adjoint();
    let eig = rho.symmetric_eigen();
    let mut values: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|v| if v.abs() < 1e-14 { 0.0 } else { *v })
        .collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// Outcome of checking one parity constraint against a state.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConstraintReport {
    pub holds_surely: bool,
    pub violation_mass: f64,
}

/// For each constraint, the probability that measuring its variables yields
/// a product different from its sign.
pub fn verify_constraints(
    state: &Statevector,
    constraints: &[ParityConstraint],
) -> Result<Vec<ConstraintReport>, QsimError> {
    constraints
        .iter()
        .map(|c| {
            let dist = joint_distribution(state, c.vars())?;
            let violation_mass: f64 = dist
                .iter()
                .filter(|(vals, _)| Sign::product(vals.iter().copied()) != c.sign())
                .map(|(_, p)| p)
                .sum();
            Ok(ConstraintReport {
                holds_surely: violation_mass < PROBABILITY_TOLERANCE,
                violation_mass,
            })
        })
        .collect()
}
