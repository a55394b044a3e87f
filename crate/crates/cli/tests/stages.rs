use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

fn sessgraph(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_sessgraph"))
        .args(args)
        .env_clear()
        .output()
        .unwrap();
    out
}

fn ok(args: &[&str]) {
    let out = sessgraph(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn piped_stages_match_run() {
    let tmp = tempfile::tempdir().unwrap();
    let log = fixture("synthetic.log");
    let bots = fixture("bots.txt");
    let whole = tmp.path().join("whole");
    ok(&["run", s(&log), "--bots-db", s(&bots), "--out", s(&whole)]);

    let staged = tmp.path().join("staged");
    ok(&["parse", s(&log), "--out", s(&staged)]);
    ok(&[
        "split",
        s(&staged.join("records.log")),
        "--bots-db",
        s(&bots),
        "--out",
        s(&staged),
    ]);
    for class in ["human", "robot"] {
        let dir = staged.join(class);
        ok(&[
            "sessionize",
            s(&staged.join(format!("{class}.log"))),
            "--cutoff",
            "1800",
            "--out",
            s(&dir),
        ]);
        ok(&["graph", s(&dir.join("session_requests.csv")), "--out", s(&dir)]);
        let nodes = dir.join("nodes.csv");
        let fits = dir.join("fits.json");
        ok(&[
            "fit",
            s(&nodes),
            "--xmin",
            "auto",
            "--direction",
            "both",
            "--out",
            s(&fits),
        ]);
        ok(&[
            "compare",
            s(&nodes),
            "--fits",
            s(&fits),
            "--out",
            s(&dir.join("comparisons.csv")),
        ]);
        ok(&[
            "export",
            "--nodes",
            s(&nodes),
            "--edges",
            s(&dir.join("edges.csv")),
            "--out",
            s(&dir),
        ]);

        let mut names: Vec<_> = fs::read_dir(whole.join(class))
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        names.sort();
        assert_eq!(names.len(), 12);
        for name in names {
            let a = fs::read(whole.join(class).join(&name)).unwrap();
            let b = fs::read(dir.join(&name)).unwrap();
            assert!(a == b, "{class}/{} differs", name.to_string_lossy());
        }
    }
    let errors = fs::read_to_string(staged.join("parse_errors.csv")).unwrap();
    assert_eq!(errors.lines().count(), 1 + 8);
}

#[test]
fn single_direction_fit() {
    let tmp = tempfile::tempdir().unwrap();
    let log = fixture("synthetic.log");
    ok(&["sessionize", s(&log), "--out", s(tmp.path())]);
    ok(&[
        "graph",
        s(&tmp.path().join("session_requests.csv")),
        "--out",
        s(tmp.path()),
    ]);
    let out = tmp.path().join("in.json");
    ok(&[
        "fit",
        s(&tmp.path().join("nodes.csv")),
        "--xmin",
        "fixed:1",
        "--direction",
        "in",
        "--out",
        s(&out),
    ]);
    let text = fs::read_to_string(out).unwrap();
    assert!(text.contains("\"in\"") && !text.contains("\"out\""));
    assert!(text.contains("\"xmin_mode\": \"fixed:1\""));
}

#[test]
fn exit_codes() {
    assert_eq!(sessgraph(&["--help"]).status.code(), Some(0));
    assert_eq!(sessgraph(&["--version"]).status.code(), Some(0));
    assert_eq!(sessgraph(&["run", "--help"]).status.code(), Some(0));
    assert_eq!(sessgraph(&[]).status.code(), Some(1));
    assert_eq!(sessgraph(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(sessgraph(&["run", "x.log", "--cutoff", "0"]).status.code(), Some(1));
    assert_eq!(sessgraph(&["run", "x.log", "--xmin", "0"]).status.code(), Some(1));
    assert_eq!(
        sessgraph(&["fit", "nodes.csv", "--direction", "sideways"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(sessgraph(&["parse", "x.log", "--format", "t q"]).status.code(), Some(1));

    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing.log");
    let out = sessgraph(&["run", s(&missing), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.log"));

    let bad_db = tmp.path().join("bots.txt");
    fs::write(&bad_db, "no section header\n").unwrap();
    let out = sessgraph(&["split", s(&fixture("synthetic.log")), "--bots-db", s(&bad_db)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flags_fall_back_to_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_sessgraph"))
        .arg("run")
        .env_clear()
        .env("SESSGRAPH_INPUTS", fixture("synthetic.log"))
        .env("SESSGRAPH_BOTS_DB", fixture("bots.txt"))
        .env("SESSGRAPH_OUT", tmp.path())
        .env("SESSGRAPH_CUTOFF", "600")
        .env("SESSGRAPH_EXPORT", "none")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(tmp.path().join("report.json")).unwrap();
    assert!(report.contains("\"cutoff_secs\": 600"));
    assert!(!tmp.path().join("human/nodes.csv").exists());
}
