//! Drives the `staircase` binary end to end: file round trips, exit codes,
//! and report contents.

use std::path::PathBuf;
use std::process::{Command, Output};

use staircase_completion::io::{format_result, parse_dense, parse_result};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_staircase"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("staircase-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn generate_then_complete_recovers_the_truth() {
    let inst = scratch("gen.txt");
    let truth = scratch("gen_truth.txt");
    let res = scratch("gen_result.txt");

    let out = bin()
        .args(["generate", "--m", "9", "--n", "11", "--r", "2", "--l", "3", "--seed", "5"])
        .args(["--out", inst.to_str().unwrap(), "--truth", truth.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "generate failed: {}", stderr(&out));

    let out = bin()
        .args(["complete", inst.to_str().unwrap(), "--out", res.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "complete failed: {}", stderr(&out));

    let result = parse_result(&std::fs::read_to_string(&res).unwrap()).unwrap();
    assert_eq!(result.verdict, "unique");
    let completed = result.completed.expect("unique result carries the matrix");
    let z = parse_dense(&std::fs::read_to_string(&truth).unwrap()).unwrap();
    let rel = (completed.inner() - z.inner()).norm() / z.inner().norm();
    assert!(rel <= 1e-6, "recovery error {rel:e}");

    // determinism: identical flags, identical bytes
    let inst2 = scratch("gen_again.txt");
    let out = bin()
        .args(["generate", "--m", "9", "--n", "11", "--r", "2", "--l", "3", "--seed", "5"])
        .args(["--out", inst2.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        std::fs::read_to_string(&inst).unwrap(),
        std::fs::read_to_string(&inst2).unwrap()
    );
}

#[test]
fn deficient_corner_exits_two_with_a_witness_pair() {
    let inst = scratch("def.txt");
    let out = bin()
        .args(["generate", "--m", "10", "--n", "12", "--r", "2", "--l", "3", "--seed", "3"])
        .args(["--deficient-corner", "1", "--out", inst.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "generate failed: {}", stderr(&out));

    let out = bin().args(["complete", inst.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "want exit 2: {}", stderr(&out));
    let result = parse_result(&stdout(&out)).unwrap();
    assert_eq!(result.verdict, "non-unique");
    assert!(result.witness.is_some());
    assert_eq!(result.deficient_corner, Some(1));
    assert!(result.corners.iter().any(|c| c.rank == 1));

    // the emitted result file parses back to the same canonical text
    let text = format_result(&result);
    assert_eq!(parse_result(&text).unwrap(), result);
    assert_eq!(stdout(&out), text);
}

#[test]
fn undecided_and_infeasible_and_errors_map_to_codes() {
    // two unknown cells, corner rank 1: engine cannot witness either outcome
    let p21 = scratch("p21.txt");
    std::fs::write(
        &p21,
        "3 4 2\nband rows 1-2 cols 2-4\nband rows 2-3 cols 1-3\n\
         1 2 6\n1 3 5\n1 4 3\n2 1 1\n2 2 2\n2 3 3\n2 4 2\n3 1 3\n3 2 4\n3 3 2\n",
    )
    .unwrap();
    let out = bin().args(["complete", p21.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    let result = parse_result(&stdout(&out)).unwrap();
    assert_eq!(result.verdict, "undecided");
    assert_eq!(result.corners.len(), 1);
    assert_eq!(result.corners[0].rank, 1);

    // identity sampled at target rank 1: data above rank, no completion
    let infeasible = scratch("infeasible.txt");
    let mut text = String::from("3 3 1\n");
    for i in 1..=3 {
        for j in 1..=3 {
            text.push_str(&format!("{i} {j} {}\n", if i == j { 1.0 } else { 0.0 }));
        }
    }
    std::fs::write(&infeasible, text).unwrap();
    let out = bin().args(["complete", infeasible.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(parse_result(&stdout(&out)).unwrap().verdict, "infeasible");

    // header rank above min(m, n)
    let bad = scratch("bad.txt");
    std::fs::write(&bad, "3 4 4\n1 1 1.0\n").unwrap();
    let out = bin().args(["complete", bad.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 1"), "diagnostic: {}", stderr(&out));

    // malformed body line is named
    let bad2 = scratch("bad2.txt");
    std::fs::write(&bad2, "3 4 2\n1 2 1.0\n1 2 2.0\n").unwrap();
    let out = bin().args(["complete", bad2.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 3"), "diagnostic: {}", stderr(&out));

    // missing file
    let out = bin().args(["complete", "/nonexistent/x.txt"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    // unknown flags must not collide with the verdict exit codes
    let out = bin().args(["complete", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn analyze_reports_chain_and_chordality() {
    let inst = scratch("an.txt");
    let out = bin()
        .args(["generate", "--m", "8", "--n", "9", "--r", "2", "--l", "2", "--seed", "1"])
        .args(["--out", inst.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));

    let out = bin().args(["analyze", inst.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("chain: l=2"), "{text}");
    assert!(text.contains("chordal: true"), "{text}");
    assert!(text.contains("induced-subtree: true"), "{text}");
    assert!(text.contains("corner 1"), "{text}");

    // DOT export on stdout
    let out = bin().args(["analyze", inst.to_str().unwrap(), "--dot", "-"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("graph clique_tree"), "{}", stdout(&out));

    // a diagonal mask is not a staircase and says which condition failed
    let diag = scratch("diag.txt");
    std::fs::write(&diag, "3 3 1\n1 1 1\n2 2 1\n3 3 1\n").unwrap();
    let out = bin().args(["analyze", diag.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("NotStaircase:"), "{}", stdout(&out));

    // single fully sampled block: chain of one, no corners
    let full = scratch("full.txt");
    let mut text = String::from("2 2 1\n");
    for i in 1..=2 {
        for j in 1..=2 {
            text.push_str(&format!("{i} {j} {}\n", (i * j) as f64));
        }
    }
    std::fs::write(&full, text).unwrap();
    let out = bin().args(["analyze", full.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("chain: l=1"), "{text}");
    assert!(text.contains("corners: none"), "{text}");
}

#[test]
fn psd_demo_exit_codes_and_variants() {
    let out = bin().args(["psd-demo"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("x = -2"), "{text}");
    assert!(text.contains("rank(H) = 2"), "{text}");

    let out = bin().args(["psd-demo", "--rank", "3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("not unique at rank 3"), "{}", stdout(&out));

    let out = bin().args(["psd-demo", "--entry", "2,2=17"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("two psd completions"), "{}", stdout(&out));

    // overlap violation: h22 = 0 makes the top-left block singular
    let out = bin().args(["psd-demo", "--entry", "2,2=0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", stdout(&out));

    let out = bin().args(["psd-demo", "--entry", "1,3=9"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("unknown corner"), "{}", stderr(&out));
}

#[test]
fn generate_rejects_infeasible_shapes() {
    let out = bin()
        .args(["generate", "--m", "3", "--n", "3", "--r", "2", "--l", "5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("infeasible"), "{}", stderr(&out));

    let out = bin()
        .args(["generate", "--m", "6", "--n", "6", "--r", "9", "--l", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[cfg(unix)]
#[test]
fn broken_stdout_pipe_dies_quietly() {
    use std::io::Read;
    use std::os::unix::process::ExitStatusExt;

    let inst = scratch("pipe.txt");
    let out = bin()
        .args(["generate", "--m", "60", "--n", "60", "--r", "2", "--l", "3", "--seed", "11"])
        .args(["--out", inst.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "generate failed: {}", stderr(&out));

    // the completed 60x60 matrix exceeds the kernel pipe buffer, so the child
    // cannot finish before the reader acts; closing the read end forces EPIPE
    let mut child = bin()
        .arg("complete")
        .arg(inst.to_str().unwrap())
        .stdout(std::process::Stdio::piped())
        .stderr(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    drop(child.stdout.take());
    let status = child.wait().unwrap();
    let mut err = String::new();
    child.stderr.take().unwrap().read_to_string(&mut err).unwrap();

    assert!(!err.contains("panicked"), "panic on broken pipe:\n{err}");
    assert_eq!(status.signal(), Some(libc::SIGPIPE), "expected silent SIGPIPE death, got {status:?}");
}
