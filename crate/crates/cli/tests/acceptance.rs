use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use serde_json::{json, Value};
use taskbot_cli::checks::{self, Check, DataLayout};
use taskbot_core::dm::HelpEvent;
use taskbot_core::nlu::{IntentLabel, IntentScorer, NluError, RuleRecognizer};
use taskbot_core::replay::{load_scripts, ScriptTurn};
use taskbot_core::{Resources, Settings};
use taskbot_server::AppState;

fn data() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn resources() -> Resources {
    Resources::load(&Settings::from_file(&data().join("config/taskbot.toml")).unwrap()).unwrap()
}

/// Fails any utterance containing the trigger word, else defers to the rules.
struct FaultOn {
    trigger: &'static str,
    rules: RuleRecognizer,
}

impl IntentScorer for FaultOn {
    fn score(&self, normalized: &str, state_key: &str) -> Result<Vec<(IntentLabel, f64)>, NluError> {
        if normalized.split_whitespace().any(|w| w == self.trigger) {
            return Err(NluError::Scorer("injected fault".into()));
        }
        self.rules.score(normalized, state_key)
    }
}

fn expect_turn(turn: &ScriptTurn, r: &Value) -> Vec<String> {
    let mut problems = Vec::new();
    let snap = &r["state_snapshot"];
    if snap["sub"] != turn.state.as_str() {
        problems.push(format!("{:?}: state {} not {}", turn.user, snap["sub"], turn.state));
    }
    if let Some(c) = turn.cursor {
        if snap["cursor"] != c {
            problems.push(format!("{:?}: cursor {}", turn.user, snap["cursor"]));
        }
    }
    if let Some(want) = &turn.responder {
        if r["responder"] != want.as_str() {
            problems.push(format!("{:?}: responder {}", turn.user, r["responder"]));
        }
    }
    let speech = r["speech"].as_str().unwrap_or_default();
    for s in &turn.says {
        if !speech.contains(s.as_str()) {
            problems.push(format!("{:?}: speech lacks {s:?}", turn.user));
        }
    }
    problems
}

async fn end_to_end() -> Check {
    let base = resources();
    let rules = RuleRecognizer::new(base.nlu.lexicon().clone(), base.search.preferences().clone());
    let res = base.with_scorer(Box::new(FaultOn { trigger: "boom", rules }));
    let failure_text = res.help.event(HelpEvent::ModuleFailure).unwrap_or_default().to_string();
    let dir = tempfile::tempdir().unwrap();
    let state = AppState::new(Arc::new(res), Some(dir.path().join("sessions.snapshot.jsonl")));
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let (stop_tx, stop_rx) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(taskbot_server::serve_on(listener, state.clone(), async {
        let _ = stop_rx.await;
    }));

    let client = reqwest::Client::new();
    let url = |p: &str| format!("http://{addr}{p}");
    let scripts = load_scripts(&data().join("replay")).unwrap();
    let golden = scripts.iter().find(|s| s.name == "golden_chicken_soup").unwrap();
    let mut problems = Vec::new();

    let created = client.post(url("/sessions")).send().await.unwrap();
    if created.status() != 201 {
        problems.push(format!("create returned {}", created.status()));
    }
    let created: Value = created.json().await.unwrap();
    let id = created["session_id"].as_str().unwrap_or_default().to_string();
    let view = |id: String| {
        let client = client.clone();
        async move {
            client
                .get(format!("http://{addr}/sessions/{id}"))
                .send()
                .await
                .unwrap()
                .json::<Value>()
                .await
                .unwrap()
        }
    };

    let mut faults = 0;
    for (n, turn) in golden.turns.iter().enumerate() {
        if n % 3 == 1 {
            let before_view = view(id.clone()).await;
            let before_snapshot = state.snapshot_jsonl().await;
            let reply = client
                .post(url(&format!("/sessions/{id}/messages")))
                .json(&json!({ "text": "boom" }))
                .send()
                .await
                .unwrap();
            let status = reply.status();
            let body: Value = reply.json().await.unwrap();
            if status != 200 || body["response"]["responder"] != "help" {
                problems.push(format!("fault before turn {}: {status} {}", n + 1, body["response"]["responder"]));
            }
            if failure_text.is_empty() || !body["response"]["speech"].as_str().unwrap_or_default().starts_with(failure_text.as_str()) {
                problems.push(format!("fault before turn {}: speech {}", n + 1, body["response"]["speech"]));
            }
            if view(id.clone()).await != before_view {
                problems.push(format!("fault before turn {} changed the session view", n + 1));
            }
            if state.snapshot_jsonl().await != before_snapshot {
                problems.push(format!("fault before turn {} changed persisted state", n + 1));
            }
            faults += 1;
        }
        let reply = client
            .post(url(&format!("/sessions/{id}/messages")))
            .json(&json!({ "text": turn.user }))
            .send()
            .await
            .unwrap();
        if reply.status() != 200 {
            problems.push(format!("turn {}: status {}", n + 1, reply.status()));
            break;
        }
        let body: Value = reply.json().await.unwrap();
        problems.extend(expect_turn(turn, &body["response"]));
    }
    let after = client
        .post(url(&format!("/sessions/{id}/messages")))
        .json(&json!({ "text": "hello" }))
        .send()
        .await
        .unwrap();
    if after.status() != 410 {
        problems.push(format!("closed session answered {}", after.status()));
    }
    let final_view = view(id.clone()).await;
    let entries = final_view["transcript"].as_array().map_or(0, Vec::len);
    if entries != 1 + 2 * golden.turns.len() {
        problems.push(format!("transcript has {entries} entries"));
    }
    let _ = stop_tx.send(());
    let _ = server.await;
    let summary = format!(
        "{}-turn golden dialogue over HTTP at {addr}, {faults} injected faults left state unchanged",
        golden.turns.len()
    );
    Check::new("e2e", problems, summary)
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn acceptance_criteria() {
    let res = resources();
    let layout = DataLayout::new(data());
    let (_, mut results) = checks::offline(&res, &layout).unwrap();
    results.push(end_to_end().await);
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err);
    for c in &results {
        let _ = writeln!(err, "{c}");
    }
    let failed: Vec<&str> = results.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    assert_eq!(results.len(), 8);
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
