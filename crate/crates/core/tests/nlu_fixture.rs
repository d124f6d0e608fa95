mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use taskbot_core::dm::STATE_KEYS;
use taskbot_core::nlu::eval::{evaluate, load_fixture};
use taskbot_core::nlu::{
    expand_templates, filter_by_state, keys, violations, Direction, IntentLabel, IntentSet, TemplateFile,
};

fn templates() -> TemplateFile {
    serde_json::from_str(&common::read("nlu/templates.json")).unwrap()
}

#[test]
fn fixture_micro_f1() {
    let res = common::resources();
    let rows = load_fixture(&common::read("fixtures/nlu_fixture.jsonl")).unwrap();
    assert!(rows.len() >= 200, "{} rows", rows.len());
    let report = evaluate(&res.nlu, &rows, |s, i| res.table.has_row(s, i)).unwrap();
    for m in &report.mismatches {
        println!("{:>22} {:?}: gold {:?} got {:?}", m.state, m.text, m.gold, m.predicted);
    }
    for (cat, c) in &report.by_category {
        println!("{cat}: {}/{} exact", c.exact, c.total);
    }
    println!("micro-F1 {:.4}", report.micro_f1());
    assert!(report.micro_f1() >= 0.90, "micro-F1 {}", report.micro_f1());
    assert!(report.violations.is_empty(), "{:?}", report.violations);
}

#[test]
fn fixture_covers_every_state_and_label() {
    let rows = load_fixture(&common::read("fixtures/nlu_fixture.jsonl")).unwrap();
    let states: BTreeSet<&str> = rows.iter().map(|r| r.state.as_str()).collect();
    for s in STATE_KEYS.iter().filter(|s| **s != "closed") {
        assert!(states.contains(s), "no rows for {s}");
    }
    let labels: BTreeSet<&str> = rows.iter().flat_map(|r| r.labels.iter().map(String::as_str)).collect();
    for l in taskbot_core::nlu::INTENT_KEYS {
        assert!(labels.contains(l), "no rows labeled {l}");
    }
}

#[test]
fn spec_style_examples() {
    let res = common::resources();
    let rec = |t: &str, s: &str| -> BTreeSet<&'static str> { keys(&res.nlu.recognize(t, s).unwrap()) };
    assert_eq!(rec("yes next step", "exec.step"), ["affirm", "next"].into());
    assert_eq!(rec("stop", "exec.step"), ["stop"].into());
    assert_eq!(rec("how do i tie a tie", "search.welcome"), ["task_request"].into());
    assert_eq!(rec("hello", "search.welcome"), ["out_of_domain"].into());
    assert_eq!(res.nlu.normalize("uh uh yes"), "yes");
}

#[test]
fn template_count_is_product_of_fillers() {
    let file = templates();
    let re = regex::Regex::new(r"\{(\w+)\}").unwrap();
    let expected: usize = file
        .templates
        .iter()
        .map(|t| {
            let mut names: Vec<&str> = re.captures_iter(&t.template).map(|c| c.get(1).unwrap().as_str()).collect();
            names.dedup();
            names.iter().map(|n| file.slots[*n].len()).product::<usize>()
        })
        .sum();
    assert_eq!(expand_templates(&file, 0.0, 1).unwrap().len(), expected);
}

#[test]
fn augmentation_is_seed_reproducible() {
    let file = templates();
    assert_eq!(expand_templates(&file, 0.0, 1).unwrap(), expand_templates(&file, 0.0, 99).unwrap());
    let a = expand_templates(&file, 1.0, 7).unwrap();
    assert_eq!(a, expand_templates(&file, 1.0, 7).unwrap());
    assert_ne!(a, expand_templates(&file, 1.0, 8).unwrap());
}

#[test]
fn clean_augmented_utterances_are_recognized() {
    let res = common::resources();
    for ex in expand_templates(&templates(), 0.0, 1).unwrap() {
        let state = ex.state.as_deref().unwrap_or("exec.step");
        let got: BTreeSet<String> = keys(&res.nlu.recognize(&ex.text, state).unwrap())
            .into_iter()
            .map(str::to_string)
            .collect();
        let want: BTreeSet<String> = ex.labels.iter().cloned().collect();
        assert_eq!(got, want, "{:?} in {state}", ex.text);
    }
}

fn label() -> impl Strategy<Value = IntentLabel> {
    prop_oneof![
        Just(IntentLabel::Stop),
        Just(IntentLabel::TaskComplete),
        (0usize..5).prop_map(|i| IntentLabel::Navigation(Direction::ALL[i])),
        (1usize..6).prop_map(IntentLabel::Select),
        "[a-z]{1,8}".prop_map(|query| IntentLabel::TaskRequest { query }),
        Just(IntentLabel::DetailRequest),
        Just(IntentLabel::PakRequest),
        Just(IntentLabel::Question),
        Just(IntentLabel::Chat),
        Just(IntentLabel::Affirm),
        Just(IntentLabel::Negate),
        Just(IntentLabel::Neutral),
        Just(IntentLabel::OutOfDomain),
    ]
}

proptest! {
    #[test]
    fn filter_is_idempotent(set in prop::collection::btree_set(label(), 0..6), state in 0usize..11) {
        let res = common::resources();
        let state = STATE_KEYS[state];
        let rows = |s: &str, i: &str| res.table.has_row(s, i);
        let once: IntentSet = filter_by_state(&set, state, rows);
        prop_assert_eq!(filter_by_state(&once, state, rows), once.clone());
        prop_assert!(!once.is_empty());
    }

    #[test]
    fn recognizer_output_is_well_formed(words in prop::collection::vec("[a-z']{1,7}|yes|no|next|stop|the second one|how|\\?", 0..7), state in 0usize..11) {
        let res = common::resources();
        let text = words.join(" ");
        let set = res.nlu.recognize(&text, STATE_KEYS[state]).unwrap();
        prop_assert!(violations(&set).is_empty(), "{:?} -> {:?}", text, set);
    }
}
