mod common;

use std::path::Path;
use std::process::{Command, Output};

fn bookbot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bookbot"))
        .args(args)
        .env("BOOKBOT_TOKEN", common::TOKEN)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn bookbot")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scenario_path() -> String {
    common::campus_dir().join("scenario.toml").display().to_string()
}

#[test]
fn scenario_check_accepts_campus() {
    let out = stdout(&bookbot(&["scenario-check", &scenario_path()]));
    assert!(out.starts_with("ok: bookbot-01"));
}

#[test]
fn scenario_check_rejects_obstacle_outside_bounds() {
    let dir = tempfile::tempdir().unwrap();
    for f in ["catalog.toml", "roster.toml"] {
        std::fs::copy(common::campus_dir().join(f), dir.path().join(f)).unwrap();
    }
    let text = std::fs::read_to_string(common::campus_dir().join("scenario.toml"))
        .unwrap()
        .replace("[13.0, 8.0, 15.0, 10.0]", "[19.0, 8.0, 25.0, 10.0]");
    let path = dir.path().join("scenario.toml");
    std::fs::write(&path, text).unwrap();
    let o = bookbot(&["scenario-check", path.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn missing_token_is_a_config_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_bookbot"))
        .args(["mint-token", "--student", "grace2019", "--ttl", "60"])
        .env_remove("BOOKBOT_TOKEN")
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("BOOKBOT_TOKEN"));
}

fn run_script(dir: &Path, script: &str) -> (String, String) {
    let script_path = dir.join("run.script");
    std::fs::write(&script_path, script).unwrap();
    let store = dir.join("events.jsonl");
    let out = stdout(&bookbot(&[
        "serve",
        "--scenario",
        &scenario_path(),
        "--seed",
        "7",
        "--script",
        script_path.to_str().unwrap(),
        "--store",
        store.to_str().unwrap(),
    ]));
    (out, std::fs::read_to_string(store).unwrap_or_default())
}

#[test]
fn minted_token_verifies_at_the_kiosk() {
    let token = stdout(&bookbot(&[
        "mint-token",
        "--student",
        "alan2020",
        "--ttl",
        "600",
        "--now",
        "2024-01-12T09:00:00Z",
    ]));
    let dir = tempfile::tempdir().unwrap();
    let (replies, _) = run_script(dir.path(), &format!("@0 kiosk-qr token:{}\n@1 end\n", token.trim()));
    let reply: serde_json::Value = serde_json::from_str(replies.lines().next().unwrap()).unwrap();
    assert_eq!(reply["status"], 200, "{reply}");
    assert_eq!(reply["body"]["student"]["student_id"], "alan2020");
}

#[test]
fn replay_prints_two_submitted_loans() {
    let dir = tempfile::tempdir().unwrap();
    let script = std::fs::read_to_string(common::campus_dir().join("two_students.script"))
        .unwrap()
        .replace("@122  unload\n", "");
    let (_, log) = run_script(dir.path(), &script);
    assert_eq!(log.lines().count(), 2);
    let store = dir.path().join("events.jsonl");
    for extra in [vec![], vec!["--scenario".to_string(), scenario_path()]] {
        let mut args = vec!["replay", "--store", store.to_str().unwrap()];
        args.extend(extra.iter().map(String::as_str));
        let state: serde_json::Value = serde_json::from_str(&stdout(&bookbot(&args))).unwrap();
        let submitted: Vec<_> = state["loans"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|l| l["status"] == "submitted")
            .map(|l| l["loan_id"].as_str().unwrap().to_string())
            .collect();
        assert_eq!(submitted, ["L1", "L2"]);
        assert_eq!(state["held"].as_array().unwrap().len(), 2);
    }
}

#[test]
fn store_resumes_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (_, first) = run_script(
        dir.path(),
        "@0 kiosk-qr mint:grace2019:300\n@1 kiosk-barcode 9780262033848\n@2 kiosk-action L1 submit\n@3 end\n",
    );
    assert_eq!(first.lines().count(), 1);
    // The loan was submitted in the previous run, so it is no longer active.
    let (replies, second) = run_script(
        dir.path(),
        "@0 kiosk-qr mint:grace2019:300\n@1 kiosk-barcode 9780262033848\n@2 kiosk-action L1 submit\n@3 end\n",
    );
    assert_eq!(second, first);
    let last: serde_json::Value = serde_json::from_str(replies.lines().last().unwrap()).unwrap();
    assert_eq!(last["status"], 409);
}

#[test]
fn codec_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("b.pgm");
    stdout(&bookbot(&["codec", "encode-ean13", "9780596517984", "-o", pgm.to_str().unwrap()]));
    assert_eq!(stdout(&bookbot(&["codec", "decode-ean13", pgm.to_str().unwrap()])).trim(), "9780596517984");
    let pbm = dir.path().join("q.pbm");
    stdout(&bookbot(&["codec", "encode-qr", "BB1|ada2021|1|abc", "--version", "3", "--ec", "Q", "-o", pbm.to_str().unwrap()]));
    assert_eq!(stdout(&bookbot(&["codec", "decode-qr", pbm.to_str().unwrap()])).trim(), "BB1|ada2021|1|abc");
    assert!(!bookbot(&["codec", "encode-ean13", "9780596517985", "-o", pgm.to_str().unwrap()]).status.success());
}
