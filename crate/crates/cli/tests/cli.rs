use std::process::{Command, Output};

fn holecycle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_holecycle")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn feasible_reports_violations_with_exit_2() {
    let o = holecycle(&["feasible", "--u", "4", "--w", "10", "--lengths", "3,3,3"]);
    assert_eq!(o.status.code(), Some(2));
    let out = stdout(&o);
    assert!(out.contains("violated (i)"), "{}", out);
    assert!(out.contains("violated (iii)"), "{}", out);
}

#[test]
fn feasible_accepts_a_good_list() {
    let o = holecycle(&["feasible", "--u", "5", "--w", "10", "--lengths", "4,4,4,4,4,4,4,4,4,4,5,5,5,5,5,5,5,5,5,5,5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("constructive route applies"));
}

#[test]
fn decompose_then_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.json");
    let p = path.to_str().unwrap();
    let lengths = "3,3,3,3,3,4,4,4,4,4,5,5,5,5,5,5,5,5,5,5,5,5";
    let o = holecycle(&["decompose", "--u", "5", "--w", "10", "--lengths", lengths, "--seed", "3", "--json", p, "--trace"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = String::from_utf8_lossy(&o.stderr);
    assert!(trace.contains("route: case"), "{}", trace);

    let v = holecycle(&["verify", "--json", p, "--lengths", lengths]);
    assert_eq!(v.status.code(), Some(0));
    assert!(stdout(&v).starts_with("pass"));

    // the same file against the wrong list
    let bad = holecycle(&["verify", "--json", p, "--lengths", "3,4,5"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("lengths differ"));
}

#[test]
fn decompose_prints_json_without_a_path() {
    let o = holecycle(&["decompose", "--u", "1", "--w", "6", "--lengths", "3,3,3,3,3,3,3"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("{\"u\":1,\"w\":6,\"cycles\":["), "{}", out);
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let infeasible = holecycle(&["decompose", "--u", "5", "--w", "10", "--lengths", "3,3"]);
    assert_eq!(infeasible.status.code(), Some(2));
    // u + w = 61 is past the vertex cap, though the triangle list is feasible
    let lens: Vec<String> = std::iter::repeat("3".to_string()).take(1830 / 3).collect();
    let big = holecycle(&["decompose", "--u", "1", "--w", "60", "--lengths", &lens.join(",")]);
    assert_eq!(big.status.code(), Some(3), "{}", String::from_utf8_lossy(&big.stderr));
}

#[test]
fn verify_rejects_garbage() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.json");
    std::fs::write(&path, "{\"u\": 1, \"w\": 2, \"cycles\": [[\"U0\", \"W9\", \"W1\"]]}").unwrap();
    let o = holecycle(&["verify", "--json", path.to_str().unwrap(), "--lengths", "3"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_do_not_look_infeasible() {
    let o = holecycle(&["decompose", "--u", "5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn quick_selftest_passes() {
    let o = holecycle(&["selftest", "--quick"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("ok")).count(), 3);
}
