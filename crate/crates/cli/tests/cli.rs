use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Command, Stdio};

fn dyntrack() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dyntrack"))
}

fn write_spec(path: &Path, snapshots: usize) {
    let spec = format!(
        r#"{{"nodes": 40, "communities": 4, "p_in": 0.4, "p_out": 0.02, "w_in": [1, 5], "w_out": [1, 2],
            "snapshots": {snapshots}, "churn": {{"node_remove": 0.05, "edge_remove": 0.05, "node_add": 0.05,
            "edge_add": 0.05, "weight_update": 0.05}}, "seed": 3}}"#
    );
    fs::write(path, spec).unwrap();
}

fn get(addr: &str, path: &str) -> (u16, String) {
    let mut stream = TcpStream::connect(addr).unwrap();
    write!(stream, "GET {path} HTTP/1.0\r\nHost: {addr}\r\n\r\n").unwrap();
    let mut raw = String::new();
    stream.read_to_string(&mut raw).unwrap();
    let status = raw.split_whitespace().nth(1).unwrap().parse().unwrap();
    let body = raw
        .split_once("\r\n\r\n")
        .map(|(_, b)| b.to_string())
        .unwrap_or_default();
    (status, body)
}

#[test]
fn synth_then_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    let data = dir.path().join("data");
    let out = dir.path().join("out");
    write_spec(&spec, 3);

    let status = dyntrack()
        .args(["synth", "--spec"])
        .arg(&spec)
        .arg("--out")
        .arg(&data)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(data.join("snapshot_2.edges").exists());
    assert!(data.join("truth_2.csv").exists());

    let output = dyntrack()
        .args(["run", "--in"])
        .arg(&data)
        .args([
            "--algo", "both", "--mode", "fixed", "--seed", "5", "--pop", "20", "--gens", "5", "--out",
        ])
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.starts_with("dyci")));
    assert!(stdout.lines().any(|l| l.starts_with("ga")));
    let reports = fs::read_to_string(out.join("reports.csv")).unwrap();
    assert_eq!(reports.lines().count(), 7);
    assert!(out.join("frames.json").exists());
    assert!(out.join("dyci/partition_0.csv").exists());
    assert!(out.join("ga/partition_2.csv").exists());
}

#[test]
fn bad_input_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let output = dyntrack()
        .args(["run", "--in"])
        .arg(dir.path().join("missing"))
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(!output.stderr.is_empty());

    let output = dyntrack()
        .args(["run", "--in", ".", "--out", ".", "--algo", "louvain"])
        .output()
        .unwrap();
    assert!(!output.status.success());

    fs::write(dir.path().join("snapshot_0.edges"), "a,b,1\n").unwrap();
    let output = dyntrack()
        .args(["run", "--in"])
        .arg(dir.path())
        .arg("--out")
        .arg(dir.path().join("out"))
        .args(["--pm", "1.5"])
        .output()
        .unwrap();
    assert!(!output.status.success());
}

#[test]
fn serve_returns_the_frames_document() {
    let dir = tempfile::tempdir().unwrap();
    let frames = dir.path().join("frames.json");
    let body = r#"{"frames":[{"t":0,"nodes":[{"id":"a","x":0.0,"y":0.0,"community":0,"presence":1,"initial":true}],"edges":[]}]}"#;
    fs::write(&frames, body).unwrap();

    let mut child = dyntrack()
        .args(["serve", "--port", "0", "--frames"])
        .arg(&frames)
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line
        .split("http://")
        .nth(1)
        .and_then(|rest| rest.split('/').next())
        .unwrap_or_else(|| panic!("unexpected banner {line:?}"))
        .to_string();

    let results = [get(&addr, "/frames.json"), get(&addr, "/"), get(&addr, "/other")];
    child.kill().unwrap();
    child.wait().unwrap();

    assert_eq!(results[0], (200, body.to_string()));
    assert_eq!(results[1].0, 200);
    assert_eq!(results[2].0, 404);
}

#[test]
fn serve_refuses_invalid_frames() {
    let dir = tempfile::tempdir().unwrap();
    let frames = dir.path().join("frames.json");
    fs::write(&frames, r#"{"frames":[{"t":0}]}"#).unwrap();
    let output = dyntrack()
        .args(["serve", "--port", "0", "--frames"])
        .arg(&frames)
        .output()
        .unwrap();
    assert!(!output.status.success());
}
