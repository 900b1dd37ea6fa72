use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use jbw_core::{presets, Action, Simulator};
use jbw_server::protocol::{decode, encode, Reply, Request};

fn jbw(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jbw")).current_dir(dir).args(args).output().expect("spawn jbw")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn word_after(text: &str, key: &str) -> String {
    let mut words = text.split_whitespace();
    while let Some(w) = words.next() {
        if w == key {
            return words.next().expect("value after key").to_string();
        }
    }
    panic!("no `{key}` in {text}");
}

#[test]
fn one_step_run_writes_a_row_and_a_loadable_save() {
    let dir = tempfile::tempdir().unwrap();
    let o = jbw(dir.path(), &["run", "--steps", "1", "--window", "10", "--log", "a.log"]);
    assert!(o.status.success(), "{o:?}");
    let csv = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2, "{csv}");
    assert_eq!(lines[0], "time,reward,reward_rate");
    assert!(lines[1].starts_with("1,"));
    let sim = Simulator::load_from(dir.path().join("final.jbw")).unwrap();
    assert_eq!(sim.time(), 1);
    assert_eq!(sim.digest(), word_after(&stdout(&o), "digest"));
}

#[test]
fn greedy_run_collects_jelly_beans() {
    let dir = tempfile::tempdir().unwrap();
    let o = jbw(dir.path(), &["run", "--steps", "200000", "--reward", "Collect[JellyBean]"]);
    assert!(o.status.success(), "{o:?}");
    let csv = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 200_000);
    let rate: f64 = rows.last().unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!(rate > 0.0, "final reward rate {rate}");
    assert_eq!(word_after(&stdout(&o), "final_reward_rate").parse::<f64>().unwrap(), rate);
}

#[test]
fn identical_invocations_give_identical_files() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let o = jbw(d.path(), &["run", "--steps", "400", "--seed", "7", "--window", "50", "--log", "a.log"]);
        assert!(o.status.success(), "{o:?}");
    }
    for name in ["metrics.csv", "final.jbw", "a.log"] {
        let a = std::fs::read(dirs[0].path().join(name)).unwrap();
        let b = std::fs::read(dirs[1].path().join(name)).unwrap();
        assert!(a == b, "{name} differs");
    }
}

#[test]
fn replay_reproduces_the_run_digest() {
    let dir = tempfile::tempdir().unwrap();
    let run = jbw(dir.path(), &["run", "--agent", "random", "--steps", "600", "--seed", "3", "--log", "a.log"]);
    assert!(run.status.success(), "{run:?}");
    let replay = jbw(dir.path(), &["replay", "--seed", "3", "--actions", "a.log"]);
    assert!(replay.status.success(), "{replay:?}");
    assert_eq!(word_after(&stdout(&replay), "digest"), word_after(&stdout(&run), "digest"));
    assert_eq!(word_after(&stdout(&replay), "time"), "600");

    let log = std::fs::read_to_string(dir.path().join("a.log")).unwrap();
    let mut lines: Vec<&str> = log.lines().collect();
    let k = lines.iter().rposition(|l| *l == "MoveForward").unwrap();
    lines[k] = "TurnLeft";
    std::fs::write(dir.path().join("b.log"), lines.join("\n")).unwrap();
    let tampered = jbw(dir.path(), &["replay", "--seed", "3", "--actions", "b.log"]);
    assert!(tampered.status.success());
    assert_ne!(word_after(&stdout(&tampered), "digest"), word_after(&stdout(&run), "digest"));
}

#[test]
fn resumed_run_continues_the_clock() {
    let dir = tempfile::tempdir().unwrap();
    assert!(jbw(dir.path(), &["run", "--steps", "5", "--save", "a.jbw"]).status.success());
    let o = jbw(dir.path(), &["run", "--load", "a.jbw", "--steps", "3", "--save", "b.jbw", "--out", "b.csv"]);
    assert!(o.status.success(), "{o:?}");
    let csv = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("6,"), "{csv}");
    assert_eq!(Simulator::load_from(dir.path().join("b.jbw")).unwrap().time(), 8);
}

#[test]
fn batch_outputs_get_index_suffixes() {
    let dir = tempfile::tempdir().unwrap();
    let o = jbw(dir.path(), &["run", "--agent", "random", "--steps", "10", "--batch", "2"]);
    assert!(o.status.success(), "{o:?}");
    for name in ["metrics.0.csv", "metrics.1.csv", "final.0.jbw", "final.1.jbw"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let a = Simulator::load_from(dir.path().join("final.0.jbw")).unwrap();
    let b = Simulator::load_from(dir.path().join("final.1.jbw")).unwrap();
    assert_eq!((a.config().seed, b.config().seed), (0, 1));
}

#[test]
fn bench_reports_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = jbw(dir.path(), &["bench", "--patches", "1", "--mh-iterations", "500", "--json"]);
    assert!(o.status.success(), "{o:?}");
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["patches"], 1);
    assert_eq!(v["items_per_patch"].as_array().unwrap().len(), 6);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| jbw(dir.path(), args).status.code().unwrap();
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["run", "--no-such-flag"]), 1);
    assert_eq!(code(&["run", "--steps", "0"]), 1);
    assert_eq!(code(&["run", "--agent", "external"]), 1);
    assert_eq!(code(&["run", "--config", "missing.json"]), 2);
    assert_eq!(code(&["run", "--reward", "Collect[Jelly"]), 2);
    assert_eq!(code(&["run", "--reward", "Collect[Pineapple]"]), 2);
    std::fs::write(dir.path().join("bad.log"), "# jbw-actions v1\nJump\n").unwrap();
    assert_eq!(code(&["replay", "--actions", "bad.log"]), 2);
    assert_eq!(code(&["replay", "--load", "missing.jbw", "--actions", "bad.log"]), 2);
}

#[test]
fn dsl_errors_point_at_the_position() {
    let dir = tempfile::tempdir().unwrap();
    let o = jbw(dir.path(), &["run", "--reward", "Collect[JellyBean] + Avoid[Onion"]);
    let err = String::from_utf8_lossy(&o.stderr);
    let lines: Vec<&str> = err.lines().collect();
    assert_eq!(lines.len(), 3, "{err}");
    assert!(lines[2].trim_start().starts_with('^'));
}

#[cfg(unix)]
#[test]
fn interrupted_server_saves_its_world() {
    let dir = tempfile::tempdir().unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_jbw"))
        .current_dir(dir.path())
        .args(["serve", "--port", "0", "--ws-port", "0", "--save", "out.jbw", "--grace", "0"])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut out = BufReader::new(child.stdout.take().unwrap());
    let mut banner = String::new();
    out.read_line(&mut banner).unwrap();
    let tcp = word_after(&banner.replace('=', " "), "tcp");

    let mut stream = TcpStream::connect(&tcp).unwrap();
    writeln!(stream, "{}", encode(1, &Request::Hello { client: Some("test".into()) })).unwrap();
    writeln!(stream, "{}", encode(2, &Request::AddAgent { claim: None })).unwrap();
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut line = String::new();
    reader.read_line(&mut line).unwrap();
    assert!(matches!(decode::<Reply>(line.trim_end()).unwrap().message, Reply::Hello { version: 1, .. }));
    line.clear();
    reader.read_line(&mut line).unwrap();
    let agent = match decode::<Reply>(line.trim_end()).unwrap().message {
        Reply::AddAgent { agent_id, .. } => agent_id,
        other => panic!("{other:?}"),
    };
    writeln!(stream, "{}", encode(3, &Request::Act { agent_id: agent, action: Action::TurnLeft })).unwrap();
    line.clear();
    reader.read_line(&mut line).unwrap();
    assert!(matches!(decode::<Reply>(line.trim_end()).unwrap().message, Reply::Act { time: 0, .. }));

    let killed = Command::new("kill").args(["-INT", &child.id().to_string()]).status().unwrap();
    assert!(killed.success());
    let status = child.wait().unwrap();
    assert!(status.success(), "{status:?}");
    let mut saved = Simulator::load_from(dir.path().join("out.jbw")).unwrap();
    assert_eq!(saved.time(), 1);

    let mut fresh = Simulator::new(presets::load("table2_3").unwrap());
    let id = fresh.add_agent().unwrap();
    fresh.request_action(id, Action::TurnLeft).unwrap();
    assert_eq!(saved.digest(), fresh.digest());
    for action in [Action::MoveForward, Action::TurnRight, Action::MoveForward] {
        saved.request_action(agent, action).unwrap();
        fresh.request_action(id, action).unwrap();
    }
    assert_eq!(saved.digest(), fresh.digest());

    let mut child = Command::new(env!("CARGO_BIN_EXE_jbw"))
        .current_dir(dir.path())
        .args(["serve", "--load", "out.jbw", "--port", "0", "--ws-port", "0", "--save", "again.jbw"])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut out = BufReader::new(child.stdout.take().unwrap());
    banner.clear();
    out.read_line(&mut banner).unwrap();
    let tcp = word_after(&banner.replace('=', " "), "tcp");
    let mut stream = TcpStream::connect(&tcp).unwrap();
    writeln!(stream, "{}", encode(1, &Request::Hello { client: None })).unwrap();
    let mut reader = BufReader::new(stream);
    line.clear();
    reader.read_line(&mut line).unwrap();
    assert!(matches!(decode::<Reply>(line.trim_end()).unwrap().message, Reply::Hello { time: 1, .. }), "{line}");
    Command::new("kill").args(["-INT", &child.id().to_string()]).status().unwrap();
    assert!(child.wait().unwrap().success());
}
