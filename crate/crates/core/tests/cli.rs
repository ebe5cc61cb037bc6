use std::path::Path;
use std::process::{Command, Output};

use scmas::format::game_from_json;
use scmas::generators::synthetic;

fn scmas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scmas")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn generate_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let g = path(dir.path(), "g.json");
    let o = scmas(&["generate", "synthetic", "appendix_d_coordination", "--seed", "1", "--out", &g]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let game = game_from_json(&std::fs::read_to_string(&g).unwrap()).unwrap();
    assert_eq!(game, synthetic("appendix_d_coordination", 1).unwrap());

    let o = scmas(&[
        "generate",
        "random",
        "--nxl",
        "3",
        "--nxf",
        "3",
        "--topology",
        "fork",
        "--quality",
        "0.8",
        "--seed",
        "7",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let game = game_from_json(&stdout(&o)).unwrap();
    let p = game.meta.params.unwrap();
    assert_eq!((p.n_leader_actions, p.n_follower_actions, p.seed), (3, 3, 7));
    assert_eq!(p.instinct_quality, 0.8);
    assert_eq!(p.topology.name(), "fork");

    let o = scmas(&["generate", "procurement", "--type", "opportunistic", "--seed", "2"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn invalid_flags_exit_2() {
    let o = scmas(&["generate", "random", "--topology", "torus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("chain-3") && stderr(&o).contains("follower-cycle"), "{}", stderr(&o));
    assert_eq!(scmas(&["generate", "random", "--quality", "0.95"]).status.code(), Some(2));
    assert_eq!(scmas(&["generate", "synthetic", "chicken"]).status.code(), Some(2));
    let o = scmas(&["experiment", "--suite", "monte_carlo", "--n", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("at least one instance"), "{}", stderr(&o));
    assert_eq!(scmas(&["experiment", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(scmas(&["bench", "--sizes", "1"]).status.code(), Some(2));
    assert_eq!(scmas(&["qbf"]).status.code(), Some(2));
    assert_eq!(scmas(&["solve", "/nonexistent/game.json"]).status.code(), Some(1));
}

#[test]
fn help_documents_defaults() {
    let o = scmas(&["experiment", "--help"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for flag in ["--suite", "--n", "--seed", "--jobs", "--csv", "--json", "--timing", "--approx-epsilon"] {
        assert!(text.contains(flag), "{flag}");
    }
    assert!(text.contains("[default: 1]"));
}

#[test]
fn solve_methods() {
    let dir = tempfile::tempdir().unwrap();
    let g = path(dir.path(), "d.json");
    scmas(&["generate", "synthetic", "appendix_d_coordination", "--seed", "1", "--out", &g]);
    let o = scmas(&["solve", &g, "--method", "exact"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["leader"]["action"], 0);
    assert!((v["welfare"].as_f64().unwrap() - 30.0).abs() < 1e-9);
    assert_eq!(v["method"]["kind"], "exact");

    let a = scmas(&["solve", &g, "--method", "approx", "--epsilon", "0.01", "--seed", "3"]);
    let b = scmas(&["solve", &g, "--method", "approx", "--epsilon", "0.01", "--seed", "3"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);

    let o = scmas(&["solve", &g, "--method", "satisficing", "--eps-sat", "15"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let on_path = v["follower"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["observation"]["action"] == 0 && e["observation"]["layer"] == "L2")
        .unwrap();
    assert_eq!(on_path["response"]["satisfice"]["acceptable"], serde_json::json!([0, 1, 2]));

    std::fs::write(dir.path().join("bad.json"), "{\"scm\": 1}").unwrap();
    assert_eq!(scmas(&["solve", &path(dir.path(), "bad.json")]).status.code(), Some(2));
}

#[test]
fn exact_cap_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let g = path(dir.path(), "d.json");
    scmas(&["generate", "synthetic", "appendix_d_coordination", "--out", &g]);
    let run = |cap: &str| {
        Command::new(env!("CARGO_BIN_EXE_scmas")).args(["solve", &g]).env("SCMAS_EXACT_CAP", cap).output().unwrap()
    };
    assert_eq!(run("2").status.code(), Some(2));
    assert_eq!(run("3").status.code(), Some(0));
    assert_eq!(run("many").status.code(), Some(2));
}

#[test]
fn experiment_sinks() {
    let dir = tempfile::tempdir().unwrap();
    let o = scmas(&["experiment", "--suite", "synthetic", "--n", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 5);
    assert_eq!(v["aggregate"]["improvement_rate"], 0.0);

    let csv = path(dir.path(), "r.csv");
    let o = scmas(&["experiment", "--suite", "procurement", "--n", "2", "--csv", &csv]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("instance_id,seed,topology,nxl,nxf,info,payoff_dist,instinct_quality,scne_welfare,classical_welfare,welfare_delta,pareto_improved,leader_layer,t_exact_s,t_approx_s,approx_error\n"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn qbf_commands() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.qdimacs");
    std::fs::write(&f, "c sample\np cnf 2 2\ne 1 0\na 2 0\n1 2 0\n1 -2 0\n").unwrap();
    let o = scmas(&["qbf", "--verify", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "EQUIVALENT qbf=true game=true\n");

    let o = scmas(&["qbf", "--exhaustive", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("73 formulas verified"), "{}", stdout(&o));

    std::fs::write(&f, "p cnf 2 1\ne 1 0\na 2 0\n1 q 0\n").unwrap();
    let o = scmas(&["qbf", "--verify", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}
