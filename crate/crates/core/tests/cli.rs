mod common;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use saracoder::cli;
use saracoder::config::EngineConfig;
use tempfile::TempDir;

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli::run(std::iter::once("saracoder").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

struct Fixture {
    dir: TempDir,
    index: PathBuf,
    context: PathBuf,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        common::write_fixture(dir.path());
        let index = dir.path().join("idx");
        let context = dir.path().join("ctx.py");
        fs::write(&context, common::QUERY).unwrap();
        let (code, out, err) = run(&["index", s(dir.path()), "--out", s(&index)]);
        assert_eq!(code, 0, "{err}");
        assert!(out.starts_with("indexed 3 files"), "{out}");
        Fixture { dir, index, context }
    }

    fn request<'a>(&'a self, cmd: &'a str) -> Vec<&'a str> {
        vec![cmd, "--index", s(&self.index), "--context", s(&self.context), "--file", "main.py"]
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn print_config_reflects_flags_and_round_trips() {
    let (code, out, _) = run(&["retrieve", "--top-k", "7", "--alpha", "0.25", "--disable-tpm", "--disable-eaid", "--print-config"]);
    assert_eq!(code, 0);
    let config = EngineConfig::from_toml(&out).unwrap();
    assert_eq!(config.pipeline.top_k, 7);
    assert_eq!(config.pipeline.alpha, 0.25);
    assert!(!config.pipeline.stages.tpm && config.pipeline.stages.sad);
    assert!(!config.eaid);

    // the printed file loads back to the same config
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    fs::write(&path, &out).unwrap();
    let (code, again, _) = run(&["--config", s(&path), "retrieve", "--print-config"]);
    assert_eq!(code, 0);
    assert_eq!(again, out);
}

#[test]
fn config_file_is_strict() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    fs::write(&path, "budget = 100\nbogus = 1\n").unwrap();
    let (code, _, err) = run(&["--config", s(&path), "retrieve", "--print-config"]);
    assert_eq!(code, 2);
    assert!(err.contains("bogus"), "{err}");

    let (code, _, err) = run(&["retrieve", "--quantile-q", "1.5", "--print-config"]);
    assert_eq!(code, 2);
    assert!(err.contains("quantile_q"), "{err}");
}

#[test]
fn config_env_var_is_read() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    fs::write(&path, "budget = 321\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_saracoder"))
        .args(["retrieve", "--print-config"])
        .env("SARACODER_CONFIG", &path)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("budget = 321"));
}

#[test]
fn exit_codes() {
    let f = Fixture::new();
    let (code, out, _) = run(&f.request("retrieve"));
    assert_eq!(code, 0);
    assert!(out.ends_with(common::QUERY));

    assert_eq!(run(&["retrieve", "--bogus-flag"]).0, 2);
    assert_eq!(run(&["complete", "--index", s(&f.index), "--context", s(&f.context)]).0, 2, "backend required");
    let missing = f.dir.path().join("nope");
    assert_eq!(run(&["retrieve", "--index", s(&missing), "--context", s(&f.context)]).0, 2);
    assert_eq!(run(&["index", s(&missing)]).0, 2);

    let (code, _, err) = run(&[&f.request("retrieve")[..], &["--budget", "0"]].concat());
    assert_eq!(code, 4, "{err}");

    let dead = ["--embedder", "remote", "--embed-endpoint", "http://127.0.0.1:9"];
    let (code, _, err) = run(&[&f.request("retrieve")[..], &dead].concat());
    assert_eq!(code, 3, "{err}");
}

#[test]
fn context_from_stdin() {
    let f = Fixture::new();
    let mut child = Command::new(env!("CARGO_BIN_EXE_saracoder"))
        .args(["retrieve", "--index", s(&f.index), "--file", "main.py", "--context", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(common::QUERY.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let (_, in_process, _) = run(&f.request("retrieve"));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), in_process);
}

#[test]
fn indexing_is_deterministic() {
    let f = Fixture::new();
    let second = f.dir.path().join("idx2");
    assert_eq!(run(&["index", s(f.dir.path()), "--out", s(&second)]).0, 0);
    let mut names: Vec<_> = fs::read_dir(&f.index).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(!names.is_empty());
    for name in names {
        assert_eq!(fs::read(f.index.join(&name)).unwrap(), fs::read(second.join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn complete_with_echo_stub() {
    let f = Fixture::new();
    let dump = f.dir.path().join("prompt.txt");
    let (code, out, err) = run(&[&f.request("complete")[..], &["--stub", "echo", "--dump-prompt", s(&dump)]].concat());
    assert_eq!(code, 0, "{err}");
    assert!(!out.trim().is_empty());
    let (_, prompt, _) = run(&f.request("retrieve"));
    assert_eq!(fs::read_to_string(dump).unwrap(), prompt);
}

#[test]
fn disable_eaid_changes_prompt() {
    let f = Fixture::new();
    let (_, with, _) = run(&f.request("retrieve"));
    let (_, without, _) = run(&[&f.request("retrieve")[..], &["--disable-eaid"]].concat());
    assert_ne!(with, without);
    assert!(with.contains("# <imports>") && !without.contains("# <imports>"));
}

fn write_samples(dir: &Path, n: usize) -> PathBuf {
    let path = dir.join("samples.jsonl");
    let mut text = String::new();
    for i in 0..n {
        let line = serde_json::json!({
            "id": format!("s{i}"),
            "context": common::QUERY,
            "groundtruth": "array(total)",
            "file": format!("pkg/new_{i}.py"),
        });
        text.push_str(&line.to_string());
        text.push('\n');
    }
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn eval_with_stub() {
    let f = Fixture::new();
    let samples = write_samples(f.dir.path(), 5);
    let out_path = f.dir.path().join("results.jsonl");
    let args = ["eval", "--index", s(&f.index), "--samples", s(&samples), "--stub", "echo", "--out", s(&out_path), "--workers", "2"];
    let (code, out, err) = run(&args);
    assert_eq!(code, 0, "{err}");
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["sample_count"], 5);
    assert_eq!(report["failed_count"], 0);
    for key in ["em", "es", "id_em", "id_f1"] {
        let v = report[key].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&v), "{key} = {v}");
    }

    let lines: Vec<serde_json::Value> =
        fs::read_to_string(&out_path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[3]["id"], "s3");
    let trace = &lines[0]["candidates"][0]["rank_trace"];
    assert_eq!(trace[0], "lexical");
    assert!(trace.as_array().unwrap().len() > 1);

    // single worker gives the same report
    let (_, serial, _) = run(&[&args[..7], &["--workers", "1"]].concat());
    assert_eq!(serial, out);
}

#[test]
fn eval_rejects_bad_samples() {
    let f = Fixture::new();
    let samples = write_samples(f.dir.path(), 2);
    let mut text = fs::read_to_string(&samples).unwrap();
    text.push_str("{\"id\": \"broken\"\n");
    fs::write(&samples, text).unwrap();
    let (code, _, err) = run(&["eval", "--index", s(&f.index), "--samples", s(&samples), "--stub", "echo"]);
    assert_eq!(code, 2);
    assert!(err.contains("samples.jsonl:3"), "{err}");

    fs::write(&samples, "\n\n").unwrap();
    let (code, _, err) = run(&["eval", "--index", s(&f.index), "--samples", s(&samples), "--stub", "echo"]);
    assert_eq!(code, 2);
    assert!(err.contains("no samples"), "{err}");
}
