use std::fs::{self, File};
use std::io::BufWriter;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use nonlocal::exact::{fraction_with_decimal, Prob};
use nonlocal::gamedef::catalog::{self, native_state, CABELLO_EXTENDED, GAME_NAMES};
use nonlocal::gamedef::{parse_constraints, GameError, NonlocalGame, ParityConstraint};
use nonlocal::harness::{
    quantum_reference, run_player, run_trials, serve_on, statistics, Dealer, HarnessError, PlayerStrategy, StatReport,
    TrialLog, TrialStrategy,
};
use nonlocal::lhvsolve::{
    automaton_model, classical_value, lambda_mu_model, noncontextual_maxsat, DeterministicStrategy, SolveError,
    SolverConfig, DEFAULT_BUDGET,
};
use nonlocal::verify;

/// `println!` that tolerates a closed stdout (e.g. piped into `head`).
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

macro_rules! out_raw {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = write!(std::io::stdout(), $($arg)*);
    }};
}

macro_rules! err {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stderr(), $($arg)*);
    }};
}

const STRATEGY_NAMES: [&str; 4] = ["quantum", "lambda-mu", "automaton", "best-classical"];

const EXIT_VERIFY: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_PROTOCOL: u8 = 4;

#[derive(Parser)]
#[command(name = "nonlocal", version, about = "Nonlocal games: quantum statistics, classical values, trials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Records,
}

#[derive(Subcommand)]
enum Command {
    /// Play seeded rounds in-process and print statistics.
    Simulate {
        game: String,
        #[arg(long, default_value = "quantum")]
        strategy: String,
        #[arg(long, default_value_t = 10_000)]
        rounds: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Compare every context against the exact quantum distribution.
        #[arg(long)]
        reference: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Also write the trial log (JSON lines) here.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Exact classical value by exhaustive best-response search.
    Solve {
        game: String,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Maximum number of outer strategy profiles to enumerate.
        #[arg(long, env = "NONLOCAL_SOLVER_BUDGET", default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        /// Optimal strategies to print.
        #[arg(long, default_value_t = 4)]
        witnesses: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Most parity constraints satisfiable by one fixed value per outcome.
    Maxsat {
        /// `fourteen`, `four`, or a file with one `<sign> <vars>` line per constraint.
        set: String,
        /// Maximizing assignments to print.
        #[arg(long, default_value_t = 4)]
        witnesses: usize,
    },
    /// Run every check and print one PASS/FAIL line each.
    Verify,
    /// Referee one distributed session over TCP.
    Serve {
        game: String,
        #[arg(long, default_value = "127.0.0.1:7878")]
        bind: String,
        #[arg(long, default_value_t = 1_000)]
        rounds: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Decides what the dealer hands out before round 0.
        #[arg(long, default_value = "quantum")]
        strategy: String,
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Connect to a referee and play one party.
    Play {
        game: String,
        #[arg(long, default_value = "127.0.0.1:7878")]
        connect: String,
        #[arg(long)]
        party: usize,
        #[arg(long, default_value = "quantum")]
        strategy: String,
    },
    /// Print a game's questions and contexts.
    Show { game: String },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Failure {
        Failure { code, message: message.into() }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Failure {
        let code = match e {
            HarnessError::Protocol { .. } | HarnessError::Disconnected { .. } => EXIT_PROTOCOL,
            HarnessError::Incompatible(_) | HarnessError::NoRounds => EXIT_USAGE,
            _ => 1,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Failure {
        Failure::new(EXIT_BUDGET, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::new(1, e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(f) => {
            err!("nonlocal: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<ExitCode, Failure> {
    match command {
        Command::Simulate { game, strategy, rounds, seed, reference, format, log } => {
            let game = game_named(&game)?;
            let strategy = strategy_named(&game, &strategy)?;
            let trials = run_trials(&game, &strategy, rounds, seed)?;
            write_log(log.as_deref(), &trials)?;
            print_report(&game, &trials, reference, format)?;
        }
        Command::Solve { game, workers, budget, witnesses, format } => {
            let game = game_named(&game)?;
            let config = SolverConfig { budget, workers: workers.max(1), witness_cap: witnesses };
            let result = classical_value(&game, &config)?;
            if format == Format::Records {
                out!("{}", to_json(&result));
                return Ok(ExitCode::SUCCESS);
            }
            out!("{}", fraction_with_decimal(&result.value));
            out!(
                "game {}  responder {}  outer profiles {}  joint strategies {}",
                result.game,
                game.parties()[result.responder].name,
                result.strategies_examined,
                result.joint_strategies
            );
            if game.id() == CABELLO_EXTENDED {
                let m = noncontextual_maxsat(&catalog::fourteen_equalities())?;
                let v = Prob::new(m.max_satisfied as i64, m.total as i64);
                out!("noncontextual assignment value {}", fraction_with_decimal(&v));
            }
            for (i, s) in result.optimal_strategies.iter().enumerate() {
                out!("optimal strategy {i}");
                print_strategy(&game, s);
            }
        }
        Command::Maxsat { set, witnesses } => {
            let constraints = constraint_set(&set)?;
            let result = noncontextual_maxsat(&constraints)?;
            out!("{}/{} satisfied", result.max_satisfied, result.total);
            out!("{} maximizing assignments over {} variables", result.witness_count(), result.vars.len());
            for w in result.witnesses().take(witnesses) {
                let values: Vec<String> = w.iter().map(|(v, s)| format!("{}={s}", v.symbol())).collect();
                let broken: Vec<String> = constraints
                    .iter()
                    .filter(|c| !c.holds_with(|v| w.get(&v).copied()).unwrap_or(false))
                    .map(|c| c.equation())
                    .collect();
                out!("{}", values.join(" "));
                out!("  violates {}", if broken.is_empty() { "nothing".into() } else { broken.join("; ") });
            }
        }
        Command::Verify => {
            let outcomes = verify::run_all();
            for o in &outcomes {
                out!("{o}");
            }
            let passed = outcomes.iter().filter(|o| o.passed).count();
            out!("{passed}/{} checks passed", outcomes.len());
            if passed != outcomes.len() {
                return Ok(ExitCode::from(EXIT_VERIFY));
            }
        }
        Command::Serve { game, bind, rounds, seed, strategy, log } => {
            let game = game_named(&game)?;
            let strategy = strategy_named(&game, &strategy)?;
            strategy.check(&game)?;
            let listener = TcpListener::bind(&bind)?;
            err!("listening on {}", listener.local_addr()?);
            let outcome = match serve_on(&listener, &game, &Dealer::for_strategy(&strategy), rounds, seed) {
                Ok(o) => o,
                Err(HarnessError::Disconnected { party, log: partial }) => {
                    write_log(log.as_deref(), &partial)?;
                    return Err(Failure::new(
                        EXIT_PROTOCOL,
                        format!("party {party} disconnected after {} rounds", partial.records.len()),
                    ));
                }
                Err(e) => return Err(e.into()),
            };
            write_log(log.as_deref(), &outcome.log)?;
            print_report(&game, &outcome.log, false, Format::Text)?;
        }
        Command::Play { game, connect, party, strategy } => {
            let game = game_named(&game)?;
            if party >= game.parties().len() {
                return Err(Failure::new(
                    EXIT_USAGE,
                    format!("{} has parties 0..{}", game.id(), game.parties().len() - 1),
                ));
            }
            let strategy = strategy_named(&game, &strategy)?;
            let rounds = run_player(&connect, &game, party, &PlayerStrategy::for_trial(&strategy))?;
            err!("party {party} answered {rounds} rounds");
        }
        Command::Show { game } => out_raw!("{}", game_named(&game)?),
    }
    Ok(ExitCode::SUCCESS)
}

fn game_named(name: &str) -> Result<NonlocalGame, Failure> {
    catalog::by_name(name).map_err(|_| {
        Failure::new(EXIT_USAGE, format!("unknown game {name:?}; known games: {}", GAME_NAMES.join(", ")))
    })
}

fn strategy_named(game: &NonlocalGame, name: &str) -> Result<TrialStrategy, Failure> {
    let strategy = match name {
        "quantum" => TrialStrategy::Quantum(native_state(game.id())),
        "lambda-mu" => TrialStrategy::HiddenVariable(lambda_mu_model()),
        "automaton" => TrialStrategy::Deterministic(automaton_model()),
        "best-classical" => {
            let config = SolverConfig { witness_cap: 1, ..SolverConfig::default() };
            let mut result = classical_value(game, &config)?;
            TrialStrategy::Deterministic(result.optimal_strategies.remove(0))
        }
        other => {
            return Err(Failure::new(
                EXIT_USAGE,
                format!("unknown strategy {other:?}; known strategies: {}", STRATEGY_NAMES.join(", ")),
            ))
        }
    };
    strategy.check(game).map_err(|e| Failure::new(EXIT_USAGE, format!("{name} on {}: {e}", game.id())))?;
    Ok(strategy)
}

fn constraint_set(set: &str) -> Result<Vec<ParityConstraint>, Failure> {
    match set {
        "fourteen" => Ok(catalog::fourteen_equalities()),
        "four" => Ok(catalog::contradiction_subset()),
        path => {
            let text = fs::read_to_string(path).map_err(|e| {
                Failure::new(EXIT_USAGE, format!("{path}: {e} (built-in sets: fourteen, four)"))
            })?;
            parse_constraints(&text).map_err(|e: GameError| Failure::new(EXIT_USAGE, format!("{path}: {e}")))
        }
    }
}

fn write_log(path: Option<&Path>, log: &TrialLog) -> Result<(), Failure> {
    if let Some(path) = path {
        log.write_to(BufWriter::new(File::create(path)?))?;
    }
    Ok(())
}

fn print_report(game: &NonlocalGame, log: &TrialLog, reference: bool, format: Format) -> Result<(), Failure> {
    let reference = if reference { Some(quantum_reference(game, &native_state(game.id()))?) } else { None };
    let report: StatReport = statistics(game, log, reference.as_ref())?;
    match format {
        Format::Text => out_raw!("{report}"),
        Format::Records => out!("{}", to_json(&report)),
    }
    Ok(())
}

fn print_strategy(game: &NonlocalGame, strategy: &DeterministicStrategy) {
    for (p, party) in game.parties().iter().enumerate() {
        let answers: Vec<String> = party
            .questions
            .iter()
            .enumerate()
            .map(|(q, question)| {
                let values: Vec<String> = strategy.answer(p, q).iter().map(|s| s.to_string()).collect();
                format!("{}={}", question.label, values.join(","))
            })
            .collect();
        out!("  {} {}", party.name, answers.join(" "));
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("reports serialize")
}
