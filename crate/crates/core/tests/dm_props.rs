mod common;

use proptest::prelude::*;
use taskbot_core::dm::{Phase, Responder, Sub, HISTORY_LIMIT};
use taskbot_core::{Resources, Session, TurnError};

const POOL: &[&str] = &[
    "I want to make chicken soup",
    "find me a lasagna recipe",
    "how do i tie a tie",
    "recommend something",
    "low fat please",
    "no preference",
    "the first one",
    "number two",
    "more options",
    "next",
    "previous",
    "repeat",
    "go back",
    "yes",
    "no",
    "maybe",
    "tell me more",
    "people also ask",
    "how long should it simmer?",
    "who invented pizza",
    "do you like pizza",
    "tell me about aliens",
    "back to the recipe",
    "i'm done",
    "hello",
    "purple elephant",
    "stop",
];

fn start(res: &Resources, seed: u64) -> Session {
    res.new_session(format!("prop-{seed}"), seed, 0).0
}

fn same_place(a: &Session, b: &Session) -> bool {
    a.state.sub == b.state.sub
        && a.state.selected_task == b.state.selected_task
        && a.state.step_cursor == b.state.step_cursor
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn random_dialogues_keep_invariants(seed in any::<u64>(), picks in prop::collection::vec(0usize..POOL.len(), 1..40)) {
        let res = common::resources();
        let mut session = start(res, seed);
        let mut aliens = 0;
        for (n, i) in picks.iter().enumerate() {
            let text = POOL[*i];
            let before = session.clone();
            let result = res.turn(&session, text, n as u64 + 1);
            if before.is_closed() {
                prop_assert!(matches!(result, Err(TurnError::Closed)));
                continue;
            }
            let outcome = result.map_err(|e| TestCaseError::fail(format!("{text:?}: {e}")))?;
            prop_assert_eq!(&session, &before, "input session mutated");
            let next = &outcome.session;
            prop_assert!(next.state.validate(&res.corpus).is_ok(), "{:?}: {:?}", text, next.state.validate(&res.corpus));
            prop_assert!(next.state.history.len() <= HISTORY_LIMIT);
            prop_assert!(!next.state.history.iter().any(|h| h.sub == Sub::Closed));
            if outcome.response.responder == "help" {
                prop_assert!(same_place(&before, next), "help moved the dialogue on {:?}", text);
            }
            if text == "stop" {
                prop_assert_eq!(next.state.phase(), Phase::Closed);
                prop_assert_eq!(outcome.response.responder.as_str(), "goodbye");
            }
            prop_assert!(!outcome.response.speech.trim().is_empty());
            prop_assert!(res.blacklist.find(&outcome.response.speech).is_none());
            if let Responder::ChitChatReply { reply } = &outcome.trace.responder {
                if let Some(p) = reply.aliens_part {
                    prop_assert_eq!(p, aliens + 1, "aliens part out of order");
                    aliens = p;
                }
            }
            session = outcome.session;
        }
    }
}

fn run(res: &Resources, session: Session, texts: &[&str]) -> Session {
    texts.iter().enumerate().fold(session, |s, (n, t)| {
        res.turn(&s, t, n as u64 + 1)
            .unwrap_or_else(|e| panic!("{t:?}: {e}"))
            .session
    })
}

#[test]
fn go_back_unwinds_phases_in_reverse() {
    let res = common::resources();
    let s = run(
        res,
        start(res, 1),
        &["I want to make chicken soup", "no preference", "the first one", "let's start", "next"],
    );
    assert_eq!((s.state.key(), s.state.step_cursor), ("exec.step", 2));
    assert_eq!(s.state.history.len(), 2);
    let s = run(res, s, &["go back"]);
    assert_eq!(s.state.key(), "prep.overview");
    let s = run(res, s, &["go back"]);
    assert_eq!(s.state.key(), "search.results");
    let s = run(res, s, &["go back"]);
    let out = res.turn(&s, "go back", 9).unwrap();
    assert_eq!(out.response.responder, "help");
    assert_eq!(out.session.state, s.state);
}

#[test]
fn stop_is_absorbing_from_every_reachable_state() {
    let res = common::resources();
    let paths: &[&[&str]] = &[
        &[],
        &["I want to make chicken soup"],
        &["I want to make chicken soup", "no preference"],
        &["I want to make chicken soup", "no preference", "the first one"],
        &["I want to make chicken soup", "no preference", "the first one", "yes"],
        &["I want to make chicken soup", "no preference", "the first one", "yes", "do you like pizza"],
        &["I want to make chicken soup", "no preference", "the first one", "yes", "next", "next"],
    ];
    for path in paths {
        let s = run(res, start(res, 3), path);
        let out = res.turn(&s, "stop", 50).unwrap();
        assert!(out.session.is_closed(), "{path:?}");
        assert!(matches!(res.turn(&out.session, "hello", 51), Err(TurnError::Closed)));
    }
}

#[test]
fn help_for_unactionable_intent_keeps_state() {
    let res = common::resources();
    let s = run(res, start(res, 4), &["I want to make chicken soup", "no preference"]);
    let out = res.turn(&s, "maybe", 3).unwrap();
    assert_eq!(out.response.responder, "help");
    assert_eq!(out.session.state, s.state);
}
