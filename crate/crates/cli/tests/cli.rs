use std::process::{Command, Output};

const FIVE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/five_vertex.graph");

fn cardshuffle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cardshuffle")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('\t')))
        .unwrap_or_else(|| panic!("no {key} line in\n{text}"))
}

#[test]
fn info_five_vertex() {
    let out = cardshuffle(&["info", FIVE]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(field(&text, "vertices"), "5");
    assert_eq!(field(&text, "arrows"), "6");
    assert_eq!(field(&text, "degree-set"), "1 3 4");
    assert_eq!(field(&text, "aut0-order"), "4");
    assert_eq!(field(&text, "cards"), "22");
    assert_eq!(field(&text, "helping-cards"), "17");
}

#[test]
fn info_builtin_cycle_reports_both_protocols() {
    let text = stdout(&cardshuffle(&["info", "cycle", "4"]));
    assert_eq!(field(&text, "cards"), "16");
    assert_eq!(field(&text, "shuffles"), "2");
    assert_eq!(field(&text, "cycle-protocol-cards"), "12");
    assert_eq!(field(&text, "aut0-order"), "4");
    let text = stdout(&cardshuffle(&["info", "dihedral", "5"]));
    assert_eq!(field(&text, "aut0-order"), "10");
}

#[test]
fn edgeless_graph_has_full_symmetric_group() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.graph");
    std::fs::write(&path, "vertices 3\n").unwrap();
    let text = stdout(&cardshuffle(&["info", path.to_str().unwrap()]));
    assert_eq!(field(&text, "aut0-order"), "6");
    assert_eq!(field(&text, "arrows"), "0");
}

#[test]
fn parse_error_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.graph");
    std::fs::write(&path, "vertices 3\n1 2\n1 4\n").unwrap();
    let out = cardshuffle(&["info", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn protocol_mismatch_is_a_usage_error() {
    assert_eq!(cardshuffle(&["run", "cycle", "4", "--protocol", "dihedral"]).status.code(), Some(2));
    assert_eq!(cardshuffle(&["verify", FIVE, "--protocol", "cycle"]).status.code(), Some(2));
    assert_eq!(cardshuffle(&["verify", "cycle", "4", "--exhaustive", "--samples", "5"]).status.code(), Some(2));
}

#[test]
fn run_is_deterministic_per_seed() {
    let a = stdout(&cardshuffle(&["run", "dihedral", "5", "--seed", "11"]));
    let b = stdout(&cardshuffle(&["run", "dihedral", "5", "--seed", "11"]));
    assert_eq!(a, b);
    assert!(a.lines().any(|l| l.starts_with("qf\t")));
    let output = field(&a, "output");
    let mut xs: Vec<&str> = output.split(' ').collect();
    xs.sort();
    assert_eq!(xs, ["x1", "x2", "x3", "x4", "x5"]);
}

#[test]
fn run_general_protocol_on_builtin() {
    let out = cardshuffle(&["run", "cycle", "3", "--protocol", "general", "--seed", "2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    // every output of the general protocol on a directed cycle is a rotation
    assert!(["id", "(1 2 3)", "(1 3 2)"].contains(&field(&text, "permutation")));
}

#[test]
fn demo_replays_documented_run() {
    let text = stdout(&cardshuffle(&["run", "--demo"]));
    let q7 = text.lines().find(|l| l.starts_with("q7\t")).unwrap();
    assert_eq!(q7.split('\t').nth(1), Some("r1 ? r2 ? r3 ? r4 ? r5 ? 1 3 1 2 2 3 2 1 3 5 3 4"));
    assert_eq!(field(&text, "output"), "x2 x1 x3 x4 x5");
    assert_eq!(field(&text, "isomorphism"), "(1 2)");
}

#[test]
fn verify_directed_cycle_exhaustively() {
    let out = cardshuffle(&["verify", "cycle", "4", "--exhaustive"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("# branches\t576\n"));
    assert_eq!(field(&text, "realizes"), "pass");
    assert_eq!(field(&text, "independence"), "pass");
    assert_eq!(field(&text, "verdict"), "pass");
    assert_eq!(text.lines().filter(|l| l.ends_with("\t1/4")).count(), 4);
}

#[test]
fn verify_undirected_cycle() {
    let text = stdout(&cardshuffle(&["verify", "dihedral", "4"]));
    assert!(text.contains("# branches\t1152\n"));
    assert_eq!(text.lines().filter(|l| l.ends_with("\t1/8")).count(), 8);
    assert_eq!(field(&text, "verdict"), "pass");
}

#[test]
fn verify_general_graph_grouped() {
    let out = cardshuffle(&["verify", FIVE]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(field(&text, "factorization-precheck"), "pass");
    assert_eq!(field(&text, "verdict"), "pass");
    assert_eq!(text.lines().filter(|l| l.ends_with("\t1/4")).count(), 4);
}

#[test]
fn verify_sampled_is_statistical() {
    let out = cardshuffle(&["verify", "cycle", "3", "--samples", "600", "--seed", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("# mode\tsampled"));
    assert_eq!(field(&text, "verdict"), "statistical");
}

#[test]
fn cap_exceeded_exits_3() {
    let out = cardshuffle(&["verify", "cycle", "4", "--cap", "100"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("576"));
}

#[test]
fn out_writes_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.tsv");
    let out = cardshuffle(&["verify", "cycle", "3", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), stdout(&out));
}
