use std::io::{BufRead, BufReader};
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn nonlocal() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nonlocal"))
}

fn run(args: &[&str]) -> Output {
    nonlocal().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(format!("{}-{name}", std::process::id()))
}

#[test]
fn show_matches_golden_files() {
    for game in ["cabello-restricted", "cabello-extended", "four-party", "mermin-ghz"] {
        let out = run(&["show", game]);
        assert!(out.status.success());
        let golden = std::fs::read_to_string(format!("{}/tests/golden/{game}.txt", env!("CARGO_MANIFEST_DIR"))).unwrap();
        assert_eq!(stdout(&out), golden, "{game}");
    }
}

#[test]
fn solve_prints_exact_value() {
    let out = run(&["solve", "four-party"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().next(), Some("6/7 ≈ 0.857143"));
    let out = run(&["solve", "mermin-ghz", "--workers", "3"]);
    assert_eq!(stdout(&out).lines().next(), Some("3/4 ≈ 0.750000"));
    let out = run(&["solve", "cabello-restricted", "--format", "records"]);
    let json: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(json["value"], "1");
}

#[test]
fn solve_reports_budget_overrun() {
    let out = nonlocal().args(["solve", "four-party"]).env("NONLOCAL_SOLVER_BUDGET", "100").output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("512"));
}

#[test]
fn maxsat_sets() {
    let out = run(&["maxsat", "fourteen"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().next(), Some("12/14 satisfied"));
    let out = run(&["maxsat", "four"]);
    assert_eq!(stdout(&out).lines().next(), Some("3/4 satisfied"));

    let path = scratch("constraints.txt");
    std::fs::write(&path, "# two copies of one relation\n+1 x1 y2\n-1 x1 y2\n+1 z3\n").unwrap();
    let out = run(&["maxsat", path.to_str().unwrap()]);
    assert_eq!(stdout(&out).lines().next(), Some("2/3 satisfied"));
    std::fs::write(&path, "+1 x1\n+2 x2\n").unwrap();
    let out = run(&["maxsat", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn simulate_lambda_mu_wins_every_round() {
    let out = run(&["simulate", "cabello-restricted", "--strategy", "lambda-mu", "--rounds", "10000"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("win rate 1.000000"));
}

#[test]
fn simulate_records_and_log() {
    let log = scratch("trials.jsonl");
    let out = run(&[
        "simulate",
        "four-party",
        "--rounds",
        "500",
        "--seed",
        "3",
        "--reference",
        "--format",
        "records",
        "--log",
        log.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(json["wins"], 500);
    assert!(json["max_tv_distance"].as_f64().unwrap() < 0.5);
    let lines = std::fs::read_to_string(&log).unwrap();
    assert_eq!(lines.lines().count(), 501);
    assert!(lines.starts_with("{\"type\":\"header\""));
}

#[test]
fn output_is_deterministic() {
    let args = ["simulate", "mermin-ghz", "--strategy", "best-classical", "--rounds", "2000", "--seed", "8"];
    assert_eq!(stdout(&run(&args)), stdout(&run(&args)));
}

#[test]
fn unknown_names_are_usage_errors() {
    let out = run(&["show", "chsh"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("cabello-restricted, cabello-extended, four-party, mermin-ghz"));
    let out = run(&["simulate", "four-party", "--strategy", "telepathy"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("best-classical"));
    let out = run(&["simulate", "mermin-ghz", "--strategy", "automaton"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn verify_prints_one_line_per_check() {
    let out = run(&["verify"]);
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).collect();
    assert_eq!(lines.len(), 11);
    let all_pass = lines.iter().all(|l| l.starts_with("PASS"));
    assert_eq!(out.status.code(), Some(if all_pass { 0 } else { 1 }));
    assert!(text.lines().last().unwrap().ends_with("checks passed"));
}

/// Starts `serve`, waits for its address, and keeps draining its stderr.
fn spawn_server(args: &[&str]) -> (std::process::Child, String, std::thread::JoinHandle<String>) {
    let mut server = nonlocal().args(args).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().unwrap();
    let mut err = BufReader::new(server.stderr.take().unwrap());
    let mut line = String::new();
    err.read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on ").expect("server announces its address").to_string();
    let rest = std::thread::spawn(move || {
        let mut text = String::new();
        let _ = std::io::Read::read_to_string(&mut err, &mut text);
        text
    });
    (server, addr, rest)
}

#[test]
fn serve_and_play_over_tcp() {
    let log = scratch("served.jsonl");
    let (server, addr, _) = spawn_server(&[
        "serve",
        "cabello-restricted",
        "--bind",
        "127.0.0.1:0",
        "--rounds",
        "300",
        "--seed",
        "4",
        "--strategy",
        "lambda-mu",
        "--log",
        log.to_str().unwrap(),
    ]);
    let players: Vec<_> = (0..2)
        .map(|p| {
            nonlocal()
                .args(["play", "cabello-restricted", "--connect", &addr, "--party", &p.to_string()])
                .args(["--strategy", "lambda-mu"])
                .stderr(Stdio::null())
                .spawn()
                .unwrap()
        })
        .collect();
    for mut p in players {
        assert!(p.wait().unwrap().success());
    }
    let out = server.wait_with_output().unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("win rate 1.000000"));

    let local = scratch("local.jsonl");
    let args = ["simulate", "cabello-restricted", "--strategy", "lambda-mu", "--rounds", "300", "--seed", "4"];
    assert!(nonlocal().args(args).arg("--log").arg(&local).output().unwrap().status.success());
    assert_eq!(std::fs::read_to_string(&log).unwrap(), std::fs::read_to_string(&local).unwrap());
}

#[test]
fn rogue_client_gets_protocol_exit_code() {
    let (server, addr, err) =
        spawn_server(&["serve", "mermin-ghz", "--bind", "127.0.0.1:0", "--rounds", "10", "--strategy", "quantum"]);
    let honest: Vec<_> = (0..2)
        .map(|p| {
            nonlocal()
                .args(["play", "mermin-ghz", "--connect", &addr, "--party", &p.to_string()])
                .stderr(Stdio::null())
                .spawn()
                .unwrap()
        })
        .collect();
    let mut rogue = std::net::TcpStream::connect(&addr).unwrap();
    std::io::Write::write_all(&mut rogue, b"{\"type\":\"hello\",\"party\":2,\"protocol_version\":1}\n{\"type\":\"boo\"}\n")
        .unwrap();
    let out = server.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(4));
    assert!(err.join().unwrap().contains("party 2"));
    for mut h in honest {
        assert_eq!(h.wait().unwrap().code(), Some(4));
    }
}
