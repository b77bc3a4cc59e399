//! End-to-end checks of the command-line surface: exit codes, file
//! round-trips, and the documented examples.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_lfkit")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("spawn lfkit")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut full: Vec<&str> = args.to_vec();
    let out = dir.to_str().unwrap();
    full.push("--out");
    full.push(out);
    run(&full)
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lfkit-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn dsep_exit_codes() {
    // separated -> 0
    let o = run(&["dsep", "A,C | Y | X"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    // not separated -> 1
    let o = run(&["dsep", "A | B |", "--builtin", "bell"]);
    assert_eq!(o.status.code(), Some(1));
    // unknown node -> 2
    let o = run(&["dsep", "A | Nope |"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sigma_differs_on_cycles() {
    let o = run(&["dsep", "B | D | A,C", "--builtin", "four-cycle"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["sigmasep", "B | D | A,C", "--builtin", "four-cycle"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn min_gamma_values_and_signaling_error() {
    let dir = tempdir("gamma");
    let o = run_in(&dir, &["min-gamma", "--pab", "pr_box"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("gamma_min = 1/2"));
    assert!(dir.join("min_gamma_extension.json").exists());

    // A signaling table is a usage error, not a verdict.
    let signaling = r#"{
        "outcomes": [{"label": "A", "cardinality": 2}, {"label": "B", "cardinality": 2}],
        "settings": [{"label": "X", "cardinality": 2}, {"label": "Y", "cardinality": 2}],
        "table": ["1", "0", "0", "0",  "0", "1", "0", "0",
                  "1", "0", "0", "0",  "1", "0", "0", "0"]
    }"#;
    let path = dir.join("signaling.json");
    std::fs::write(&path, signaling).unwrap();
    let o = run_in(&dir, &["min-gamma", "--pab", path.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn monogamy_and_membership() {
    let dir = tempdir("monogamy");
    let pac = r#"{
        "outcomes": [{"label": "A", "cardinality": 2}, {"label": "C", "cardinality": 2}],
        "settings": [],
        "table": ["1/2", "0", "0", "1/2"]
    }"#;
    let pac_path = dir.join("pac.json");
    std::fs::write(&pac_path, pac).unwrap();
    let o = run_in(
        &dir,
        &[
            "monogamy",
            "--pab",
            "pr_box",
            "--pac",
            pac_path.to_str().unwrap(),
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("= 6"));

    let o = run_in(
        &dir,
        &[
            "marginal-feasible",
            "--pab",
            "pr_box",
            "--pac",
            pac_path.to_str().unwrap(),
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    let o = run_in(
        &dir,
        &["member", "--pab", "white_noise", "--polytope", "lhv"],
    );
    assert_eq!(o.status.code(), Some(0));
    let o = run_in(
        &dir,
        &["member", "--pab", "pr_box", "--polytope", "lf-perfect"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("separating functional"));
}

#[test]
fn derive_conclusions() {
    let dir = tempdir("derive");
    let pac = r#"{
        "outcomes": [{"label": "A", "cardinality": 2}, {"label": "C", "cardinality": 2}],
        "settings": [],
        "table": ["1/2", "0", "0", "1/2"]
    }"#;
    let pac_path = dir.join("pac.json");
    std::fs::write(&pac_path, pac).unwrap();
    let o = run_in(
        &dir,
        &[
            "derive",
            "--pab",
            "tsirelson_box",
            "--pac",
            pac_path.to_str().unwrap(),
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("infeasible: fine-tuning required"));
    let o = run_in(
        &dir,
        &[
            "derive",
            "--pab",
            "white_noise",
            "--pac",
            pac_path.to_str().unwrap(),
        ],
    );
    // White noise has uniform x=1 marginals matching the perfect copy table.
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn audit_verdicts() {
    let o = run(&["audit", "--builtin", "lf"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("faithful"));
    // A graph file with an extra X -> B edge is fine-tuned w.r.t. the premises.
    let dir = tempdir("audit");
    let graph = r#"{
        "nodes": [
            {"label": "X", "kind": "observed"}, {"label": "Y", "kind": "observed"},
            {"label": "A", "kind": "observed"}, {"label": "B", "kind": "observed"},
            {"label": "C", "kind": "observed"}, {"label": "L", "kind": "latent"}
        ],
        "edges": [
            {"from": "X", "to": "A"}, {"from": "C", "to": "A"}, {"from": "L", "to": "A"},
            {"from": "L", "to": "C"}, {"from": "L", "to": "B"}, {"from": "Y", "to": "B"},
            {"from": "X", "to": "B"}
        ]
    }"#;
    let path = dir.join("graph.json");
    std::fs::write(&path, graph).unwrap();
    let o = run(&["audit", "--graph", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FINE-TUNED"));
}

#[test]
fn scm_and_ci_test() {
    let dir = tempdir("scm");
    let o = run_in(
        &dir,
        &["scm", "--builtin", "cyclic-ex1", "--condition", "A=0,C=0"],
    );
    // The d-rule violation gives exit 1.
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("9 of 16"));
    assert!(text.contains("VIOLATION"));
    let o = run_in(
        &dir,
        &["scm", "--builtin", "cyclic-ex1", "--criterion", "sigma"],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "no σ violations on the 4-cycle model"
    );

    // CI test on a product table.
    let product = r#"{
        "outcomes": [{"label": "A", "cardinality": 2}, {"label": "B", "cardinality": 2}],
        "settings": [],
        "table": ["1/4", "1/4", "1/4", "1/4"]
    }"#;
    let path = dir.join("product.json");
    std::fs::write(&path, product).unwrap();
    let o = run(&["ci-test", "A | B |", "--dist", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn veronika_from_config() {
    let dir = tempdir("veronika");
    let config = r#"{
        "m": 2,
        "epsilon": "1/4",
        "runs": [{"x": 0, "y": 0}, {"x": 0, "y": 0}, {"x": 1, "y": 1}, {"x": 1, "y": 1}],
        "amplitudes": "uniform"
    }"#;
    let path = dir.join("protocol.json");
    std::fs::write(&path, config).unwrap();
    let o = run_in(&dir, &["veronika", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("J = 6 of 16"));
}

#[test]
fn quantum_lf_scenario_round_trip() {
    let dir = tempdir("quantum");
    // First write the shipped scenario via reproduce, then run it back in.
    let o = run_in(&dir, &["reproduce", "quantum-lf"]);
    assert_eq!(o.status.code(), Some(0));
    let scenario = dir.join("quantum_scenario.json");
    assert!(scenario.exists());
    let o = run_in(
        &dir,
        &["quantum-lf", "--scenario", scenario.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("chsh value: 3.414213562373"));
    // Seeded sweep is reproducible and respects the bound.
    let o = run_in(&dir, &["quantum-lf", "--sweep", "5", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let first = stdout(&o);
    let o = run_in(&dir, &["quantum-lf", "--sweep", "5", "--seed", "7"]);
    assert_eq!(stdout(&o), first, "identical seed, identical output");
    // Sweep without a seed is a usage error.
    let o = run_in(&dir, &["quantum-lf", "--sweep", "5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn lf_facets_summary() {
    let o = run(&["lf-facets"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("8 nontrivial"));
    assert!(text.contains("nontrivial facets are the 8 CHSH symmetries: true"));
}

#[test]
fn slice_csv_written() {
    let dir = tempdir("slice");
    let o = run_in(&dir, &["slice", "--res1", "20", "--res2", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.join("slice.csv")).unwrap();
    assert!(csv.starts_with("t1,t2,label\n"));
    assert_eq!(csv.lines().count(), 22, "header + 21 grid points");
}

#[test]
fn reproduce_unknown_target_is_usage_error() {
    let o = run(&["reproduce", "not-a-target"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reproduce_outputs_are_byte_stable() {
    let dir_a = tempdir("repro-a");
    let dir_b = tempdir("repro-b");
    for dir in [&dir_a, &dir_b] {
        let o = run_in(dir, &["reproduce", "veronika-sweep"]);
        assert_eq!(o.status.code(), Some(0));
    }
    for file in ["veronika-sweep.txt", "veronika_sweep.csv"] {
        let a = std::fs::read(dir_a.join(file)).unwrap();
        let b = std::fs::read(dir_b.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between runs");
    }
}
