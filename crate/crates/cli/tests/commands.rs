use std::path::PathBuf;
use std::process::Command;

use taskbot_cli::checks::DataLayout;
use taskbot_cli::{augment, chat, ingest, replay_cmd};
use taskbot_core::{Resources, Settings};

fn data() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn config() -> PathBuf {
    data().join("config/taskbot.toml")
}

fn resources() -> Resources {
    Resources::load(&Settings::from_file(&config()).unwrap()).unwrap()
}

fn taskbot(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_taskbot"))
        .arg("--config")
        .arg(config())
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

#[test]
fn ingest_counts() {
    let mut out = Vec::new();
    ingest(&resources(), &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.contains("recipes: 50\n"), "{text}");
    assert!(text.contains("how-tos: 50\n"));
    assert!(text.contains("blocked: 1\n"));
    assert!(text.ends_with("100 tasks indexed\n"));
}

#[test]
fn ingest_binary_and_bad_config() {
    let ok = taskbot(&["ingest"]);
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).contains("100 tasks indexed"));
    let bad = Command::new(env!("CARGO_BIN_EXE_taskbot"))
        .args(["--config", "/nonexistent/taskbot.toml", "ingest"])
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("error"));
}

#[test]
fn augment_is_seeded() {
    let templates = data().join("nlu/templates.json");
    let run = |seed| {
        let mut out = Vec::new();
        let n = augment(&templates, seed, 0.5, &mut out).unwrap();
        (n, String::from_utf8(out).unwrap())
    };
    let (n, a) = run(7);
    assert_eq!(n, a.lines().count());
    assert_eq!(a, run(7).1);
    assert_ne!(a, run(8).1);
    for line in a.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["text"].as_str().is_some_and(|t| !t.is_empty()));
        assert!(v["labels"].as_array().is_some_and(|l| !l.is_empty()));
    }
}

#[test]
fn augment_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("aug.jsonl");
    let o = taskbot(&["augment", "--seed", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(std::fs::read_to_string(&out).unwrap().lines().count() > 50);
    let bad = taskbot(&["augment", "--noise", "2"]);
    assert!(!bad.status.success());
}

#[test]
fn chat_session() {
    let input = "I want to make chicken soup\nno preference\n:state\nthe first one\nstop\nnext\n";
    let mut out = Vec::new();
    chat(&resources(), 0, input.as_bytes(), &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let bot_lines = text.lines().filter(|l| l.starts_with("bot> ")).count();
    assert_eq!(bot_lines, 5, "{text}");
    assert!(text.contains("\"sub\""), "state dump missing: {text}");
    assert!(text.contains("Classic Chicken Soup"));
}

#[test]
fn replay_reports_and_blesses() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    for sub in ["replay", "fixtures"] {
        std::fs::create_dir_all(root.join(sub)).unwrap();
    }
    for entry in std::fs::read_dir(data().join("replay")).unwrap() {
        let p = entry.unwrap().path();
        if p.is_file() {
            std::fs::copy(&p, root.join("replay").join(p.file_name().unwrap())).unwrap();
        }
    }
    for entry in std::fs::read_dir(data().join("fixtures")).unwrap() {
        let p = entry.unwrap().path();
        std::fs::copy(&p, root.join("fixtures").join(p.file_name().unwrap())).unwrap();
    }
    let res = resources();
    let layout = DataLayout::new(root);

    let mut out = Vec::new();
    assert!(!replay_cmd(&res, &layout, false, &mut out).unwrap());
    let text = String::from_utf8(out).unwrap();
    assert!(text.contains("PASS golden_chicken_soup (12 turns)"), "{text}");
    assert!(text.contains("coverage 83/83 (100.0%)"));
    assert!(text.contains("no golden transcript"));

    let mut out = Vec::new();
    assert!(replay_cmd(&res, &layout, true, &mut out).unwrap());
    for entry in std::fs::read_dir(data().join("replay/golden")).unwrap() {
        let p = entry.unwrap().path();
        let copy = root.join("replay/golden").join(p.file_name().unwrap());
        assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(copy).unwrap(), "{}", p.display());
    }
}
