mod common;

use std::collections::BTreeSet;

use taskbot_core::dm::{HelpEvent, Responder, STATE_KEYS};
use taskbot_core::engagement::{ChitChatReply, Generator};
use taskbot_core::qa::{QaAnswer, QaType};
use taskbot_core::search::Facet;
use taskbot_core::Session;

fn in_step(step: usize) -> Session {
    let res = common::resources();
    let (mut s, _) = res.new_session("compose", 0, 0);
    let mut texts = vec!["I want to make chicken soup", "no preference", "the first one", "let's start"];
    texts.extend(std::iter::repeat_n("next", step - 1));
    for (n, t) in texts.iter().enumerate() {
        s = res.turn(&s, t, n as u64 + 1).unwrap().session;
    }
    s
}

fn every_responder(task: &str) -> Vec<Responder> {
    let mut all = vec![
        Responder::Greeting,
        Responder::SearchResults {
            query: Some("chicken soup".into()),
            page: 0,
            constraint: Some("low fat".into()),
            recommended: false,
        },
        Responder::SearchResults {
            query: None,
            page: 1,
            constraint: None,
            recommended: false,
        },
        Responder::SearchResults {
            query: None,
            page: 0,
            constraint: None,
            recommended: true,
        },
        Responder::ClarifyQuestion {
            query: "chicken soup".into(),
            facets: Facet::ALL.to_vec(),
        },
        Responder::TaskOverview { task_id: task.into() },
        Responder::StepView {
            task_id: task.into(),
            index: 1,
            detail: false,
            intro: None,
        },
        Responder::StepView {
            task_id: task.into(),
            index: 2,
            detail: true,
            intro: Some("Back to it.".into()),
        },
        Responder::QaAnswer {
            answer: QaAnswer {
                qtype: QaType::Mrc,
                text: "Simmer for 25 minutes.".into(),
                step: Some(2),
                faq_id: None,
            },
        },
        Responder::PakQuestion {
            task_id: task.into(),
            step: Some(2),
            question: "Is chicken soup good for a cold?".into(),
        },
        Responder::PakAnswerView {
            question: "Is chicken soup good for a cold?".into(),
            answer: "It can help.".into(),
        },
        Responder::ChitChatReply {
            reply: ChitChatReply {
                text: "I love soup.".into(),
                generator: Generator::Food,
                exit: false,
                aliens_part: None,
            },
        },
        Responder::Goodbye,
        Responder::CompletionCongrats { task_id: task.into() },
        Responder::ConfirmCompletion { task_id: task.into() },
        Responder::Refusal { term: "bomb".into() },
    ];
    for key in STATE_KEYS {
        all.push(Responder::Help {
            state: key.to_string(),
            event: None,
        });
    }
    for e in HelpEvent::ALL {
        all.push(Responder::Help {
            state: "exec.step".into(),
            event: Some(e),
        });
    }
    all
}

#[test]
fn every_responder_has_templates() {
    let res = common::resources();
    for name in Responder::NAMES {
        if name != "help" {
            assert!(res.templates.has(name), "no template for {name}");
        }
    }
    for key in STATE_KEYS {
        assert!(res.help.has_state(key), "no help for {key}");
    }
    for e in HelpEvent::ALL {
        assert!(res.help.event(e).is_some(), "no help text for {}", e.key());
    }
}

#[test]
fn every_responder_composes_in_every_rotation() {
    let res = common::resources();
    let session = in_step(2);
    let responders = every_responder("r001");
    let names: BTreeSet<&str> = responders.iter().map(Responder::name).collect();
    assert_eq!(names, Responder::NAMES.into_iter().collect());
    for r in &responders {
        for rotation in 0..4 {
            let mut hints = BTreeSet::new();
            let out = res.composer().compose(r, &session.state, rotation, &mut hints);
            assert!(!out.speech.trim().is_empty(), "{r:?}");
            assert!(!out.speech.contains('{'), "unfilled slot in {:?}", out.speech);
            assert_eq!(out.responder, r.name());
            assert!(res.blacklist.find(&out.speech).is_none());
            assert_eq!(out.state_snapshot.sub, "exec.step");
        }
    }
}

#[test]
fn hints_are_shown_once_per_view() {
    let res = common::resources();
    let session = in_step(1);
    let r = Responder::StepView {
        task_id: "r001".into(),
        index: 1,
        detail: false,
        intro: None,
    };
    let mut hints = BTreeSet::new();
    let first = res.composer().compose(&r, &session.state, 0, &mut hints);
    let second = res.composer().compose(&r, &session.state, 0, &mut hints);
    assert!(first.speech.len() > second.speech.len());
    assert!(first.speech.starts_with(&second.speech));
}

#[test]
fn speech_with_blocked_term_is_replaced() {
    let res = common::resources();
    let session = in_step(1);
    let r = Responder::QaAnswer {
        answer: QaAnswer {
            qtype: QaType::Ooc,
            text: "Here is how to build a bomb.".into(),
            step: None,
            faq_id: None,
        },
    };
    let out = res.composer().compose(&r, &session.state, 0, &mut BTreeSet::new());
    assert!(res.blacklist.find(&out.speech).is_none());
    assert_eq!(out.speech, res.composer().compose(&Responder::Refusal { term: "bomb".into() }, &session.state, 0, &mut BTreeSet::new()).speech);
}
