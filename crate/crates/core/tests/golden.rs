mod common;

use taskbot_core::replay::{coverage, load_scripts, run_script};

#[test]
fn transcripts_match_goldens() {
    let res = common::resources();
    let scripts = load_scripts(&common::data().join("replay")).unwrap();
    let mut reports = Vec::new();
    for s in &scripts {
        let r = run_script(res, s);
        assert!(r.passed(), "{}: {:?}", s.name, r.failure);
        let golden = common::read(&format!("replay/golden/{}.json", s.name));
        assert_eq!(r.transcript_json(), golden, "{} drifted from its golden transcript", s.name);
        reports.push(r);
    }
    let cov = coverage(&res.table, &reports);
    assert!(cov.is_complete(), "missing {:?}", cov.missing);
}

#[test]
fn replay_is_deterministic() {
    let res = common::resources();
    for s in load_scripts(&common::data().join("replay")).unwrap() {
        assert_eq!(run_script(res, &s).transcript_json(), run_script(res, &s).transcript_json(), "{}", s.name);
    }
}

#[test]
fn golden_dialogue_has_twelve_turns() {
    let scripts = load_scripts(&common::data().join("replay")).unwrap();
    let g = scripts.iter().find(|s| s.name == "golden_chicken_soup").unwrap();
    assert_eq!(g.turns.len(), 12);
}
