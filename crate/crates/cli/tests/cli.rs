use std::fs;
use std::path::Path;
use std::process::Command;

fn lftj() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lftj"))
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().expect("spawn lftj");
    assert!(
        out.status.success(),
        "command failed: {}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf8 output")
}

fn build_trie(csv: &Path, out: &Path) {
    run_ok(lftj()
        .args(["build-trie", "--arity", "2", "--symmetrize"])
        .arg("--input")
        .arg(csv)
        .arg("--out")
        .arg(out));
}

#[test]
fn end_to_end_triangle_count() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("e.csv");
    let trie = dir.path().join("e.tarr");
    let query = dir.path().join("q.lq");
    fs::write(&csv, "1,2\n1,3\n1,6\n2,4\n2,5\n3,6\n4,5\n4,7\n5,7\n6,7\n").unwrap();
    fs::write(&query, "T(x,y,z) <- E(x,y), E(x,z), E(y,z).\n").unwrap();
    build_trie(&csv, &trie);

    let stdout = run_ok(lftj()
        .args(["run", "--order", "x,y,z", "--mode", "vanilla", "--sink", "count"])
        .arg("--query")
        .arg(&query)
        .arg("--bind")
        .arg(format!("E={}", trie.display())));
    assert!(stdout.contains("output_count=3"), "stdout: {stdout}");
    assert!(stdout.contains("lru_block_loads="));
}

#[test]
fn boxed_list_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("e.csv");
    let trie = dir.path().join("e.tarr");
    let query = dir.path().join("q.lq");
    let results = dir.path().join("results.csv");
    fs::write(&csv, "1,2\n1,3\n1,6\n2,4\n2,5\n3,6\n4,5\n4,7\n5,7\n6,7\n").unwrap();
    fs::write(&query, "T(x,y,z) <- E(x,y), E(x,z), E(y,z).\norder x,y,z.\n").unwrap();
    build_trie(&csv, &trie);

    let stdout = run_ok(lftj()
        .args([
            "run",
            "--mode",
            "boxed",
            "--sink",
            "list",
            "--memory",
            "22",
            "--block-size",
            "4",
        ])
        .arg("--query")
        .arg(&query)
        .arg("--bind")
        .arg(format!("E={}", trie.display()))
        .arg("--out")
        .arg(&results));
    assert!(stdout.contains("boxes="));
    assert!(stdout.contains("output_count=3"));
    let text = fs::read_to_string(&results).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.sort();
    assert_eq!(lines, vec!["1,3,6", "2,4,5", "4,5,7"]);
}

#[test]
fn generators_emit_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.csv");
    run_ok(lftj()
        .args(["gen-rand", "--nodes", "20", "--edges", "30", "--seed", "5"])
        .arg("--out")
        .arg(&out));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 30);

    let stdout = run_ok(lftj().args([
        "gen-pathological",
        "--n",
        "24",
        "--memory",
        "20",
        "--block-size",
        "4",
    ]));
    assert_eq!(stdout.lines().count(), 25);
    assert!(stdout.starts_with("0,24\n1,20\n"));

    let bad = lftj()
        .args(["gen-pathological", "--n", "10", "--memory", "20", "--block-size", "4"])
        .output()
        .unwrap();
    assert!(!bad.status.success());
}

#[test]
fn ratio_and_parallel_flags() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("e.csv");
    let trie = dir.path().join("e.tarr");
    let query = dir.path().join("q.lq");
    fs::write(&csv, "1,2\n1,3\n1,6\n2,4\n2,5\n3,6\n4,5\n4,7\n5,7\n6,7\n").unwrap();
    fs::write(&query, "T(x,y,z) <- E(x,y), E(x,z), E(y,z).\norder x,y,z.\n").unwrap();
    build_trie(&csv, &trie);

    let stdout = run_ok(lftj()
        .args([
            "run",
            "--mode",
            "boxed",
            "--memory",
            "40",
            "--block-size",
            "4",
            "--ratio",
            "4:1",
            "--constraint-hook",
            "on",
        ])
        .arg("--query")
        .arg(&query)
        .arg("--bind")
        .arg(format!("E={}", trie.display())));
    assert!(stdout.contains("output_count=3"), "stdout: {stdout}");

    let stdout = run_ok(lftj()
        .args(["run", "--parallel", "3", "--sink", "list"])
        .arg("--query")
        .arg(&query)
        .arg("--bind")
        .arg(format!("E={}", trie.display())));
    assert!(stdout.contains("output_count=3"));
    assert!(stdout.contains("1,3,6"));
}
