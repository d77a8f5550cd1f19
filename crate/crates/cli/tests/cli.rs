use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Command, Output, Stdio};

const BIN: &str = env!("CARGO_BIN_EXE_secinfer");

fn run(args: &[&str]) -> Output {
    let out = Command::new(BIN).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(args: &[&str]) -> String {
    String::from_utf8(run(args).stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn params_show_and_find() {
    let show = stdout(&["params", "show"]);
    assert!(show.contains("n=2048 p=307201"), "{show}");
    assert!(show.contains("(2^60 - 2^12*63549 + 1)"), "{show}");

    let found = stdout(&["params", "find", "--log-p", "18"]);
    assert!(found.contains("p=307201"), "{found}");
    assert!(found.contains("|r|=1"), "{found}");
    assert!(found.contains("2^12*63549"), "{found}");
}

#[test]
fn bad_input_fails_cleanly() {
    let out = Command::new(BIN)
        .args([
            "reference",
            "--network",
            "/nonexistent",
            "--input",
            "/nonexistent",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn serve_and_classify_over_tcp() {
    let dir = tempfile::tempdir().unwrap();
    let (net, img) = (dir.path().join("a.json"), dir.path().join("x.json"));
    run(&["network", "a", "--seed", "3", "--out", s(&net)]);
    run(&[
        "image",
        "--network",
        s(&net),
        "--seed",
        "4",
        "--out",
        s(&img),
    ]);
    let expected: Vec<i64> = serde_json::from_str(&stdout(&[
        "reference",
        "--network",
        s(&net),
        "--input",
        s(&img),
    ]))
    .unwrap();

    let transcript = dir.path().join("server.jsonl");
    let mut server = Command::new(BIN)
        .args([
            "serve",
            "--network",
            s(&net),
            "--listen",
            "127.0.0.1:0",
            "--once",
            "--seed",
            "5",
            "--dump-transcript",
            s(&transcript),
        ])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut lines = BufReader::new(server.stderr.take().unwrap()).lines();
    let first = lines.next().unwrap().unwrap();
    let addr = first.strip_prefix("listening on ").unwrap().to_string();

    let got: Vec<i64> = serde_json::from_str(&stdout(&[
        "classify",
        "--input",
        s(&img),
        "--connect",
        &addr,
        "--seed",
        "6",
        "--json",
    ]))
    .unwrap();
    assert_eq!(got, expected);

    let rest: Vec<String> = lines.map_while(Result::ok).collect();
    assert!(server.wait().unwrap().success());
    assert!(
        rest.iter().any(|l| l.ends_with("session complete")),
        "{rest:?}"
    );
    let log = std::fs::read_to_string(&transcript).unwrap();
    assert!(log.lines().count() > 4);
    for line in log.lines() {
        serde_json::from_str::<serde_json::Value>(line).unwrap();
    }
}

#[test]
fn bench_json() {
    assert_eq!(
        stdout(&["bench", "primitives", "--trials", "0", "--json"]),
        ""
    );
    let out = stdout(&["bench", "primitives", "--trials", "1", "--json"]);
    let rows: Vec<serde_json::Value> = out
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert!(rows.len() > 2);
    assert!(rows.iter().any(|r| r.to_string().contains("ntt speed-up")));
}
