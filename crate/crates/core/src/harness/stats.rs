use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::gamedef::catalog::{nested_ghz_contexts, CONTRADICTION_SUBSET, FOUR_PARTY, FOURTEEN};
use crate::gamedef::NonlocalGame;
use crate::qsim::{joint_distribution, OutcomeTuple, Sign, SiteObservable, Statevector};

use super::{HarnessError, TrialLog};

/// Per-context distribution over joint answer tuples (parties concatenated).
pub type ReferenceDistribution = Vec<BTreeMap<Vec<Sign>, f64>>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContextStats {
    pub label: String,
    pub asked: u64,
    pub won: u64,
    /// Empirical total-variation distance to the reference, when one is given.
    pub tv_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalStats {
    pub observable: SiteObservable,
    pub count: u64,
    pub plus: u64,
    pub plus_frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatReport {
    pub game: String,
    pub strategy: String,
    pub seed: u64,
    pub rounds: u64,
    pub wins: u64,
    pub win_rate: f64,
    pub contexts: Vec<ContextStats>,
    pub marginals: Vec<MarginalStats>,
    pub max_tv_distance: Option<f64>,
}

/// Exact quantum answer distributions for every context of `game`.
pub fn quantum_reference(game: &NonlocalGame, state: &Statevector) -> Result<ReferenceDistribution, HarnessError> {
    (0..game.contexts().len())
        .map(|c| Ok(joint_distribution(state, &game.context_observables(c))?.to_map()))
        .collect()
}

/// Probability that measuring `state` wins `game`, weighting each
/// context's satisfied mass.
pub fn quantum_win_probability(game: &NonlocalGame, state: &Statevector) -> Result<f64, HarnessError> {
    let mut total = 0.0;
    for (c, ctx) in game.contexts().iter().enumerate() {
        let obs = game.context_observables(c);
        let dist = joint_distribution(state, &obs)?;
        let mut won = 0.0;
        for (values, p) in dist.iter() {
            let tuple = OutcomeTuple::new(obs.iter().copied().zip(values).collect())?;
            if ctx.predicate.evaluate(&tuple)? {
                won += p;
            }
        }
        total += crate::exact::to_f64(&ctx.weight) * won;
    }
    Ok(total)
}

fn tv_distance(empirical: &BTreeMap<Vec<Sign>, u64>, total: u64, reference: &BTreeMap<Vec<Sign>, f64>) -> f64 {
    let mut keys: Vec<&Vec<Sign>> = empirical.keys().chain(reference.keys()).collect();
    keys.sort();
    keys.dedup();
    0.5 * keys
        .into_iter()
        .map(|k| {
            let p = empirical.get(k).copied().unwrap_or(0) as f64 / total as f64;
            let q = reference.get(k).copied().unwrap_or(0.0);
            (p - q).abs()
        })
        .sum::<f64>()
}

/// Summarizes a log: win rate, per-context tallies, per-observable
/// marginals and, given a reference, per-context TV distances.
pub fn statistics(
    game: &NonlocalGame,
    log: &TrialLog,
    reference: Option<&ReferenceDistribution>,
) -> Result<StatReport, HarnessError> {
    if log.records.is_empty() {
        return Err(HarnessError::EmptyLog);
    }
    if log.game != game.id() {
        return Err(HarnessError::LogFormat(format!("log is for {:?}, not {:?}", log.game, game.id())));
    }
    let n_ctx = game.contexts().len();
    if let Some(r) = reference {
        if r.len() != n_ctx {
            return Err(HarnessError::Incompatible(format!("reference covers {} contexts, game has {n_ctx}", r.len())));
        }
    }
    let mut asked = vec![0u64; n_ctx];
    let mut won = vec![0u64; n_ctx];
    let mut tuples: Vec<BTreeMap<Vec<Sign>, u64>> = vec![BTreeMap::new(); n_ctx];
    let mut marginals: BTreeMap<SiteObservable, (u64, u64)> = BTreeMap::new();
    for r in &log.records {
        let c = r.context;
        if c >= n_ctx {
            return Err(HarnessError::LogFormat(format!("round {} names context {c}", r.round)));
        }
        asked[c] += 1;
        won[c] += u64::from(r.win);
        let joint: Vec<Sign> = r.answers.iter().flatten().copied().collect();
        *tuples[c].entry(joint).or_default() += 1;
        let outcomes = game.outcomes(c, &r.answers)?;
        for (obs, value) in outcomes.entries {
            let slot = marginals.entry(obs).or_default();
            slot.0 += 1;
            slot.1 += u64::from(value == Sign::Plus);
        }
    }
    let contexts: Vec<ContextStats> = game
        .contexts()
        .iter()
        .enumerate()
        .map(|(c, ctx)| ContextStats {
            label: ctx.label.clone(),
            asked: asked[c],
            won: won[c],
            tv_distance: reference
                .filter(|_| asked[c] > 0)
                .map(|r| tv_distance(&tuples[c], asked[c], &r[c])),
        })
        .collect();
    let max_tv_distance = reference.map(|_| {
        contexts.iter().filter_map(|c| c.tv_distance).fold(0.0, f64::max)
    });
    let rounds = log.records.len() as u64;
    let wins: u64 = won.iter().sum();
    Ok(StatReport {
        game: log.game.clone(),
        strategy: log.strategy.clone(),
        seed: log.seed,
        rounds,
        wins,
        win_rate: wins as f64 / rounds as f64,
        contexts,
        marginals: marginals
            .into_iter()
            .map(|(observable, (count, plus))| MarginalStats {
                observable,
                count,
                plus,
                plus_frequency: plus as f64 / count as f64,
            })
            .collect(),
        max_tv_distance,
    })
}

impl fmt::Display for StatReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "game {}  strategy {}  seed {}", self.game, self.strategy, self.seed)?;
        writeln!(f, "rounds {}  wins {}  win rate {:.6}", self.rounds, self.wins, self.win_rate)?;
        writeln!(f)?;
        let with_tv = self.max_tv_distance.is_some();
        write!(f, "{:<12} {:>8} {:>8}", "context", "asked", "won")?;
        if with_tv {
            write!(f, " {:>10}", "tv")?;
        }
        writeln!(f)?;
        for c in &self.contexts {
            write!(f, "{:<12} {:>8} {:>8}", c.label, c.asked, c.won)?;
            if with_tv {
                match c.tv_distance {
                    Some(tv) => write!(f, " {tv:>10.6}")?,
                    None => write!(f, " {:>10}", "-")?,
                }
            }
            writeln!(f)?;
        }
        writeln!(f)?;
        writeln!(f, "{:<12} {:>8} {:>8}", "observable", "count", "P(+1)")?;
        for m in &self.marginals {
            writeln!(f, "{:<12} {:>8} {:>8.4}", m.observable.to_string(), m.count, m.plus_frequency)?;
        }
        if let Some(tv) = self.max_tv_distance {
            writeln!(f)?;
            writeln!(f, "max tv distance {tv:.6}")?;
        }
        Ok(())
    }
}

/// Rounds of the four-party game seen as nested three-player games, with
/// the holder of qubit 2 acting as co-referee whose `x2` picks the game.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NestedGhzView {
    /// Rounds testing a relation that is the same in both nested games.
    pub shared_rounds: u64,
    pub shared_satisfied: u64,
    /// `(x2, rounds, satisfied)` for relations that depend on the selector.
    pub by_selector: Vec<(Sign, u64, u64)>,
}

/// Post-hoc co-referee reading of a four-party log. Only rounds testing the
/// four relations shared with the restricted experiment contribute.
pub fn co_referee_view(game: &NonlocalGame, log: &TrialLog) -> Result<NestedGhzView, HarnessError> {
    if game.id() != FOUR_PARTY || log.game != FOUR_PARTY {
        return Err(HarnessError::Incompatible("co-referee view needs a four-party log".into()));
    }
    let mut view = NestedGhzView {
        shared_rounds: 0,
        shared_satisfied: 0,
        by_selector: vec![(Sign::Plus, 0, 0), (Sign::Minus, 0, 0)],
    };
    for r in &log.records {
        let Some(slot) = CONTRADICTION_SUBSET.iter().position(|i| {
            game.contexts()[r.context].predicate.constraint().map(|c| c.to_string()).as_deref()
                == Some(FOURTEEN[*i])
        }) else {
            continue;
        };
        let outcomes = game.outcomes(r.context, &r.answers)?;
        match outcomes.value_of(SiteObservable::x(2)) {
            Some(selector) if slot >= 2 => {
                let nested = nested_ghz_contexts(i64::from(selector.value()))?;
                let ok = nested[slot].evaluate(&outcomes)?;
                let row = view.by_selector.iter_mut().find(|(s, _, _)| *s == selector).expect("both signs");
                row.1 += 1;
                row.2 += u64::from(ok);
            }
            _ => {
                view.shared_rounds += 1;
                view.shared_satisfied += u64::from(r.win);
            }
        }
    }
    Ok(view)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamedef::catalog::{cabello_restricted, four_party_game, mermin_ghz};
    use crate::harness::{run_trials, TrialStrategy};
    use crate::lhvsolve::{automaton_model, lambda_mu_model};
    use crate::qsim::make_psi;

    #[test]
    fn all_win_log_has_rate_one() {
        let game = cabello_restricted();
        let log = run_trials(&game, &TrialStrategy::Deterministic(automaton_model()), 500, 1).unwrap();
        let report = statistics(&game, &log, None).unwrap();
        assert_eq!(report.win_rate, 1.0);
        assert_eq!(report.contexts.iter().map(|c| c.asked).sum::<u64>(), 500);
        assert_eq!(report.max_tv_distance, None);
    }

    #[test]
    fn lambda_mu_matches_quantum_statistics() {
        let game = cabello_restricted();
        let log = run_trials(&game, &TrialStrategy::HiddenVariable(lambda_mu_model()), 10_000, 17).unwrap();
        let reference = quantum_reference(&game, &make_psi()).unwrap();
        let report = statistics(&game, &log, Some(&reference)).unwrap();
        for (ctx, stats) in game.contexts().iter().zip(&report.contexts) {
            let tv = stats.tv_distance.unwrap();
            // The model only mimics the relations the referee tests.
            match ctx.predicate {
                crate::gamedef::Predicate::Parity(_) => assert!(tv <= 0.05, "{report}"),
                crate::gamedef::Predicate::AlwaysWin => assert!(tv > 0.4, "{report}"),
            }
        }
    }

    #[test]
    fn quantum_marginals_are_fair() {
        let game = four_party_game();
        let log = run_trials(&game, &TrialStrategy::Quantum(make_psi()), 10_000, 23).unwrap();
        let report = statistics(&game, &log, None).unwrap();
        assert_eq!(report.marginals.len(), 12);
        for m in &report.marginals {
            assert!((0.47..=0.53).contains(&m.plus_frequency), "{m:?}");
        }
    }

    #[test]
    fn empty_and_mismatched_logs_rejected() {
        let game = mermin_ghz();
        let mut log = run_trials(&game, &TrialStrategy::Quantum(crate::qsim::make_ghz(3).unwrap()), 5, 0).unwrap();
        assert!(matches!(statistics(&four_party_game(), &log, None), Err(HarnessError::LogFormat(_))));
        log.records.clear();
        assert!(matches!(statistics(&game, &log, None), Err(HarnessError::EmptyLog)));
    }

    #[test]
    fn co_referee_view_on_quantum_log() {
        let game = four_party_game();
        let log = run_trials(&game, &TrialStrategy::Quantum(make_psi()), 3_000, 5).unwrap();
        let view = co_referee_view(&game, &log).unwrap();
        assert!(view.shared_rounds > 0);
        assert_eq!(view.shared_rounds, view.shared_satisfied);
        for (_, rounds, satisfied) in &view.by_selector {
            assert!(*rounds > 0);
            assert_eq!(rounds, satisfied);
        }
    }
}
