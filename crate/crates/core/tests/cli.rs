use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sgncl"));
    c.env("RUST_LOG", "warn");
    c
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn sgncl")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn edgeless_dataset(dir: &Path) {
    std::fs::write(dir.join("E_A.txt"), "").unwrap();
    std::fs::write(dir.join("E_graph_indicator.txt"), "1\n1\n2\n2\n2\n").unwrap();
    std::fs::write(dir.join("E_graph_labels.txt"), "0\n1\n").unwrap();
}

#[test]
fn help_matches_golden_files() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    for cmd in [
        "",
        "stats",
        "augment",
        "train",
        "embed",
        "eval",
        "sweep-q",
        "simmatrix",
    ] {
        let args: Vec<&str> = if cmd.is_empty() {
            vec!["--help"]
        } else {
            vec![cmd, "--help"]
        };
        let o = run(&args);
        assert_eq!(o.status.code(), Some(0));
        let name = if cmd.is_empty() { "sgncl" } else { cmd };
        let expected = std::fs::read_to_string(golden.join(format!("help_{name}.txt"))).unwrap();
        assert_eq!(stdout(&o), expected, "help for {name}");
    }
}

#[test]
fn help_lists_every_flag_with_defaults() {
    let text = stdout(&run(&["eval", "--help"]));
    for flag in [
        "--dataset",
        "--dir",
        "--max-degree",
        "--mode",
        "--tau",
        "--q",
        "--epochs",
        "--batch",
        "--hidden",
        "--layers",
        "--lr",
        "--seed",
        "--pool",
        "--denominator",
        "--max-nodes",
        "--max-edges",
        "--strict",
        "--folds",
        "--seeds",
        "--out",
    ] {
        assert!(text.contains(flag), "{flag} missing");
    }
    assert!(text.contains("[default: 0.5]"));
    assert!(text.contains("[default: 0,1,2,3,4]"));
}

#[test]
fn stats_on_mutag() {
    let dir = data_dir();
    let o = run(&[
        "stats",
        "--dataset",
        "MUTAG",
        "--dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o).trim(),
        "188 graphs, 2 classes, avg nodes 17.93, avg edges 19.79"
    );
}

#[test]
fn augment_edgeless_emits_empty_views_and_warns() {
    let tmp = tempfile::tempdir().unwrap();
    edgeless_dataset(tmp.path());
    let out = tmp.path().join("views.jsonl");
    let o = run(&[
        "augment",
        "--dataset",
        "E",
        "--dir",
        tmp.path().to_str().unwrap(),
        "--order",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("WARN"));
    let views = sgncl::dataset::read_interchange(&out).unwrap();
    assert_eq!(views.len(), 2);
    assert!(views.graphs.iter().all(|g| g.n_nodes() == 0));
}

fn history(args: &[&str]) -> String {
    let dir = data_dir();
    let mut full = vec![
        "train",
        "--dataset",
        "MUTAG",
        "--dir",
        dir.to_str().unwrap(),
        "--epochs",
        "3",
    ];
    full.extend_from_slice(args);
    let o = run(&full);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    stdout(&o)
}

#[test]
fn fused_at_q_one_matches_first_order_history() {
    let fused = history(&["--mode", "fused", "--q", "1.0", "--seed", "7"]);
    let sgn1 = history(&["--mode", "sgn1", "--seed", "7"]);
    assert_eq!(fused.lines().count(), 5);
    assert_eq!(fused, sgn1);
}

#[test]
fn training_is_deterministic() {
    let a = history(&["--seed", "3"]);
    assert_eq!(a, history(&["--seed", "3"]));
    assert_ne!(a, history(&["--seed", "4"]));
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = data_dir();
    let args = [
        "train",
        "--dataset",
        "MUTAG",
        "--dir",
        dir.to_str().unwrap(),
        "--epochs",
        "2",
    ];
    let one = bin().args(args).env("SGNCL_THREADS", "1").output().unwrap();
    let four = bin().args(args).env("SGNCL_THREADS", "4").output().unwrap();
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn checkpoint_round_trip_through_embed() {
    let tmp = tempfile::tempdir().unwrap();
    let ckpt = tmp.path().join("model.json");
    let dir = data_dir();
    let d = dir.to_str().unwrap();
    let o = run(&[
        "train",
        "--dataset",
        "MUTAG",
        "--dir",
        d,
        "--epochs",
        "1",
        "--hidden",
        "8",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--out",
        tmp.path().join("h.csv").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let e = run(&[
        "embed",
        "--dataset",
        "MUTAG",
        "--dir",
        d,
        "--checkpoint",
        ckpt.to_str().unwrap(),
    ]);
    assert_eq!(e.status.code(), Some(0));
    let text = stdout(&e);
    assert_eq!(text.lines().count(), 189);
    // readout width is layers * hidden
    assert_eq!(text.lines().nth(1).unwrap().split(',').count(), 2 + 24);
}

#[test]
fn exit_codes() {
    let dir = data_dir();
    let d = dir.to_str().unwrap();
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["bogus"]).status.code(), Some(1));
    assert_eq!(run(&["stats"]).status.code(), Some(1));
    assert_eq!(
        run(&[
            "augment",
            "--dataset",
            "MUTAG",
            "--order",
            "3",
            "--out",
            "x"
        ])
        .status
        .code(),
        Some(1)
    );
    assert_eq!(
        run(&["train", "--dataset", "MUTAG", "--dir", d, "--tau", "0"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&["train", "--dataset", "MUTAG", "--dir", d, "--q", "1.5"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&["stats", "--dataset", "NOPE", "--dir", d])
            .status
            .code(),
        Some(2)
    );
    let strict = run(&[
        "train",
        "--dataset",
        "MUTAG",
        "--dir",
        d,
        "--epochs",
        "1",
        "--max-nodes",
        "30",
        "--strict",
    ]);
    assert_eq!(strict.status.code(), Some(3));
}

#[test]
fn guard_skips_without_strict() {
    let dir = data_dir();
    let o = run(&[
        "train",
        "--dataset",
        "MUTAG",
        "--dir",
        dir.to_str().unwrap(),
        "--epochs",
        "1",
        "--max-nodes",
        "30",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    let skipped: usize = csv
        .lines()
        .nth(1)
        .unwrap()
        .rsplit(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(skipped > 0);
}
