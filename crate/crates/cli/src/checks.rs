//! Pass/fail checks over the committed data, shared by `taskbot replay`
//! and the acceptance suite.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use taskbot_core::domain::TaskKind;
use taskbot_core::nlu::eval as nlu_eval;
use taskbot_core::qa::eval as qa_eval;
use taskbot_core::replay::{self, Coverage, ReplayScript, ScriptReport};
use taskbot_core::search::{indexed_fields, Facet, Level, NutritionConstraint, Term, WeightedTerms};
use taskbot_core::text::content_tokens;
use taskbot_core::{Resources, Responder, Session};

pub const REPLAY_BUDGET: Duration = Duration::from_secs(10);
pub const MIN_F1: f64 = 0.90;
pub const MIN_QA_ACCURACY: f64 = 0.90;
pub const MIN_INTENT_ROWS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    /// Passes when `problems` is empty; problems are appended to the summary.
    pub fn new(name: &'static str, problems: Vec<String>, summary: String) -> Self {
        let passed = problems.is_empty();
        let detail = if passed {
            summary
        } else {
            format!("{summary}; {}", problems.join("; "))
        };
        Self { name, passed, detail }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {:<8} {}", self.name, self.detail)
    }
}

/// Where the scripts, goldens and fixtures live under a data root.
#[derive(Debug, Clone)]
pub struct DataLayout {
    pub root: PathBuf,
}

impl DataLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    /// The data root is the parent of the config directory.
    pub fn from_config_dir(config_dir: &Path) -> Self {
        Self::new(config_dir.parent().unwrap_or(Path::new(".")))
    }

    pub fn scripts(&self) -> PathBuf {
        self.root.join("replay")
    }

    pub fn goldens(&self) -> PathBuf {
        self.root.join("replay/golden")
    }

    pub fn fixture(&self, name: &str) -> PathBuf {
        self.root.join("fixtures").join(name)
    }
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

/// Two runs of every script plus their coverage and timing.
#[derive(Debug, Clone)]
pub struct ReplayRun {
    pub reports: Vec<ScriptReport>,
    pub rerun: Vec<ScriptReport>,
    pub coverage: Coverage,
    pub elapsed: Duration,
}

pub fn run_replay(res: &Resources, scripts: &[ReplayScript]) -> ReplayRun {
    let started = Instant::now();
    let reports: Vec<ScriptReport> = scripts.iter().map(|s| replay::run_script(res, s)).collect();
    let elapsed = started.elapsed();
    let rerun = scripts.iter().map(|s| replay::run_script(res, s)).collect();
    let coverage = replay::coverage(&res.table, &reports);
    ReplayRun {
        reports,
        rerun,
        coverage,
        elapsed,
    }
}

pub fn golden_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.json"))
}

/// Writes every transcript into `dir`. Returns the files written.
pub fn bless(dir: &Path, run: &ReplayRun) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    for r in &run.reports {
        let p = golden_path(dir, &r.name);
        std::fs::write(&p, r.transcript_json())?;
        out.push(p);
    }
    Ok(out)
}

pub fn fsm(run: &ReplayRun, goldens: &Path) -> Check {
    let mut problems = Vec::new();
    for r in &run.reports {
        if let Some(f) = &r.failure {
            problems.push(format!("{}: {f}", r.name));
        }
    }
    if !run.coverage.is_complete() {
        let missing: Vec<String> = run.coverage.missing.iter().map(ToString::to_string).collect();
        problems.push(format!("uncovered edges: {}", missing.join(", ")));
    }
    for (a, b) in run.reports.iter().zip(&run.rerun) {
        if a.transcript_json() != b.transcript_json() {
            problems.push(format!("{}: rerun differs", a.name));
        }
        match std::fs::read_to_string(golden_path(goldens, &a.name)) {
            Ok(g) if g == a.transcript_json() => {}
            Ok(_) => problems.push(format!("{}: differs from golden", a.name)),
            Err(_) => problems.push(format!("{}: no golden transcript", a.name)),
        }
    }
    if run.elapsed > REPLAY_BUDGET {
        problems.push(format!("replay took {:.2?}", run.elapsed));
    }
    let passed = run.reports.iter().filter(|r| r.passed()).count();
    let summary = format!(
        "{passed}/{} scripts, coverage {}/{} ({:.1}%), {:.2?}",
        run.reports.len(),
        run.coverage.covered,
        run.coverage.total,
        run.coverage.percent(),
        run.elapsed
    );
    Check::new("fsm", problems, summary)
}

pub fn intents(res: &Resources, fixture: &Path) -> Check {
    let rows = match read(fixture).and_then(|t| nlu_eval::load_fixture(&t).map_err(|e| e.to_string())) {
        Ok(r) => r,
        Err(e) => return Check::new("intents", vec![e], "fixture unreadable".into()),
    };
    let report = match nlu_eval::evaluate(&res.nlu, &rows, |s, i| res.table.has_row(s, i)) {
        Ok(r) => r,
        Err(e) => return Check::new("intents", vec![e.to_string()], "recognizer failed".into()),
    };
    let mut problems = Vec::new();
    if rows.len() < MIN_INTENT_ROWS {
        problems.push(format!("only {} rows", rows.len()));
    }
    if report.micro_f1() < MIN_F1 {
        problems.push(format!("micro-F1 below {MIN_F1}"));
    }
    for v in &report.violations {
        problems.push(format!("{:?} in {}: {}", v.text, v.state, v.problems.join(", ")));
    }
    let summary = format!(
        "micro-F1 {:.4} over {} rows, {} exact, {} invariant violations",
        report.micro_f1(),
        report.rows,
        report.exact(),
        report.violations.len()
    );
    Check::new("intents", problems, summary)
}

#[derive(Debug, Clone, Deserialize)]
pub struct OracleQuery {
    pub query: String,
    pub domain: String,
    pub constraint: Option<BTreeMap<Facet, Level>>,
    pub top5: Vec<String>,
    pub n_results: usize,
}

fn kind(domain: &str) -> TaskKind {
    if domain == "recipe" {
        TaskKind::Recipe
    } else {
        TaskKind::HowTo
    }
}

/// Scores every document of `domain` from raw text, without the index.
pub fn brute_force_bm25(res: &Resources, terms: &WeightedTerms, domain: TaskKind, k1: f64, b: f64) -> Vec<(String, f64)> {
    let docs: Vec<_> = res.corpus.of_kind(domain).collect();
    let stats: Vec<(BTreeMap<Term, usize>, usize)> = docs
        .iter()
        .map(|d| {
            let mut tf = BTreeMap::new();
            let mut len = 0;
            for field in indexed_fields(d) {
                let toks = content_tokens(field);
                len += toks.len();
                for t in &toks {
                    *tf.entry(Term::word(t)).or_insert(0) += 1;
                }
                for p in toks.windows(2) {
                    *tf.entry(Term::phrase(&p[0], &p[1])).or_insert(0) += 1;
                }
            }
            (tf, len)
        })
        .collect();
    let n = docs.len() as f64;
    let avg = stats.iter().map(|(_, l)| *l as f64).sum::<f64>() / n;
    let mut out = Vec::new();
    for (d, (tf, len)) in docs.iter().zip(&stats) {
        let mut score = 0.0;
        for (term, w) in terms {
            let f = tf.get(term).copied().unwrap_or(0) as f64;
            if f == 0.0 {
                continue;
            }
            let df = stats.iter().filter(|(t, _)| t.contains_key(term)).count() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            score += w * idf * f * (k1 + 1.0) / (f + k1 * (1.0 - b + b * *len as f64 / avg));
        }
        if score > 0.0 && !res.blacklist.matches(&d.title) {
            out.push((d.id.clone(), score));
        }
    }
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

const SWEEP_QUERIES: &[&str] = &["soup", "cookies", "pasta", "salad", "chicken", "cake", "beef", "pancakes", "bread"];

fn within(res: &Resources, id: &str, facet: Facet, cap: Level) -> bool {
    res.corpus
        .get(id)
        .and_then(|d| d.nutrition)
        .and_then(|n| res.search.lights().level(facet, facet.value(&n)).ok())
        .is_some_and(|l| l <= cap)
}

pub fn search(res: &Resources, fixture: &Path) -> Check {
    let queries: Vec<OracleQuery> = match read(fixture).and_then(|t| {
        t.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| e.to_string()))
            .collect()
    }) {
        Ok(q) => q,
        Err(e) => return Check::new("search", vec![e], "fixture unreadable".into()),
    };
    let mut problems = Vec::new();
    let mut constrained_hits = 0;
    for q in &queries {
        let plain = res.search.query(&q.query, kind(&q.domain), None);
        let oracle = brute_force_bm25(res, &plain.terms, plain.domain, 1.2, 0.75);
        let engine: Vec<String> = res.search.lexical(&plain).into_iter().map(|h| h.id).collect();
        let want: Vec<&String> = oracle.iter().map(|(id, _)| id).take(5).collect();
        let got: Vec<&String> = engine.iter().take(5).collect();
        if got != want {
            problems.push(format!("{:?}: lexical top5 {got:?}, brute force {want:?}", q.query));
        }

        let constraint = q.constraint.clone().map(NutritionConstraint::new);
        let query = res.search.query(&q.query, kind(&q.domain), constraint);
        let r = match res.search.search(&query) {
            Ok(r) => r,
            Err(e) => {
                problems.push(format!("{:?}: {e}", q.query));
                continue;
            }
        };
        let top5: Vec<&str> = r.ids().into_iter().take(5).collect();
        if top5 != q.top5 || r.ranked.len() != q.n_results {
            problems.push(format!("{:?} {:?}: top5 {top5:?}, frozen {:?}", q.query, q.constraint, q.top5));
        }
        for (facet, cap) in q.constraint.iter().flatten() {
            for hit in &r.ranked {
                constrained_hits += 1;
                if !within(res, &hit.id, *facet, *cap) {
                    problems.push(format!("{:?}: {} breaks {facet} <= {cap}", q.query, hit.id));
                }
            }
        }
    }
    for q in SWEEP_QUERIES {
        for facet in Facet::ALL {
            for cap in [Level::Low, Level::Medium] {
                let c = NutritionConstraint::new([(facet, cap)]);
                let Ok(r) = res.search.search(&res.search.query(q, TaskKind::Recipe, Some(c))) else {
                    problems.push(format!("{q:?}: search failed"));
                    continue;
                };
                for hit in &r.ranked {
                    constrained_hits += 1;
                    if !within(res, &hit.id, facet, cap) {
                        problems.push(format!("{q:?}: {} breaks {facet} <= {cap}", hit.id));
                    }
                }
            }
        }
    }
    let summary = format!(
        "{} queries match brute force and frozen top-5, {constrained_hits} constrained hits checked",
        queries.len()
    );
    Check::new("search", problems, summary)
}

pub fn qa(res: &Resources, fixture: &Path) -> Check {
    let rows = match read(fixture).and_then(|t| qa_eval::load_fixture(&t, &res.corpus).map_err(|e| e.to_string())) {
        Ok(r) => r,
        Err(e) => return Check::new("qa", vec![e], "fixture unreadable".into()),
    };
    let report = qa_eval::evaluate(&res.qa, &res.corpus, &rows);
    let mut problems = Vec::new();
    if report.accuracy() < MIN_QA_ACCURACY {
        problems.push(format!("accuracy below {MIN_QA_ACCURACY}"));
    }
    for m in &report.outside_window {
        problems.push(format!("{:?}: MRC answer outside window", m.question));
    }
    for m in &report.recipe_only_on_howto {
        problems.push(format!("{:?}: {:?} answer on how-to {}", m.question, m.routed, m.task_id));
    }
    let summary = format!(
        "accuracy {:.4} ({}/{}), {} outside window, {} recipe-only answers on how-tos",
        report.accuracy(),
        report.correct,
        report.rows,
        report.outside_window.len(),
        report.recipe_only_on_howto.len()
    );
    Check::new("qa", problems, summary)
}

fn drive(res: &Resources, mut session: Session, texts: &[&str], clock: &mut u64) -> Result<Session, String> {
    for t in texts {
        *clock += 1;
        session = res.turn(&session, t, *clock).map_err(|e| format!("{t:?}: {e}"))?.session;
    }
    Ok(session)
}

pub const PAK_TASK: &str = "r011";

/// Walks the nine-step task forward once per reply policy and records
/// where offers land.
pub fn pak(res: &Resources) -> Check {
    let mut problems = Vec::new();
    let mut summary = String::new();
    let steps = res.corpus.get(PAK_TASK).map_or(0, |d| d.steps.len());
    if steps != 9 {
        problems.push(format!("{PAK_TASK} has {steps} steps"));
    }
    let every = res.pak.every();
    let expected: Vec<usize> = (1..=steps).filter(|c| c % every == 0).collect();
    for reply in ["no", "yes", "next"] {
        match pak_walk(res, reply) {
            Ok((cursors, keys)) => {
                if cursors != expected {
                    problems.push(format!("reply {reply:?}: offers at {cursors:?}"));
                }
                let unique: BTreeSet<_> = keys.iter().collect();
                if unique.len() != keys.len() {
                    problems.push(format!("reply {reply:?}: repeated pair"));
                }
                summary = format!("offers at steps {cursors:?} for replies no/yes/next, pairs distinct");
            }
            Err(e) => problems.push(format!("reply {reply:?}: {e}")),
        }
    }
    Check::new("pak", problems, summary)
}

/// Offer cursors and the pair keys offered there.
type Offers = (Vec<usize>, Vec<(String, String)>);

fn pak_walk(res: &Resources, reply: &str) -> Result<Offers, String> {
    let mut clock = 0;
    let (session, _) = res.new_session("pak-check", 3, clock);
    let mut session = drive(res, session, &["find classic beef lasagna", "no preference", "the first one"], &mut clock)?;
    if session.state.selected_task.as_deref() != Some(PAK_TASK) {
        return Err(format!("selected {:?}", session.state.selected_task));
    }
    let mut cursors = Vec::new();
    let mut keys = Vec::new();
    let mut text = "start";
    for _ in 0..40 {
        clock += 1;
        let out = res.turn(&session, text, clock).map_err(|e| format!("{text:?}: {e}"))?;
        if matches!(out.trace.responder, Responder::PakQuestion { .. }) {
            cursors.push(out.response.state_snapshot.cursor);
            let pair = out.session.state.pak_current.as_ref().ok_or("offer without a pair")?;
            keys.push(pair.key());
        }
        session = out.session;
        text = match session.state.key() {
            "exec.pak_offer" => reply,
            "exec.step" | "exec.pak_answer" => "next",
            "exec.confirm_complete" => return Ok((cursors, keys)),
            other => return Err(format!("unexpected state {other}")),
        };
    }
    Err("task never completed".into())
}

const CHAT_POOL: &[&str] = &[
    "tell me about aliens",
    "do you believe in ufos",
    "tell me more",
    "what else",
    "then what",
    "do you like pizza",
    "I love movies",
    "tell me about dogs",
    "who invented cheese",
    "what about martians",
    "back to the recipe",
    "continue",
    "next",
    "repeat",
    "purple elephant",
];

/// Aliens parts seen in `reports`, per script. Each must count up from 1.
fn aliens_sequences(reports: &[ScriptReport]) -> Vec<(String, Vec<usize>)> {
    reports
        .iter()
        .map(|r| (r.name.clone(), r.transcript.iter().filter_map(|t| t.aliens_part).collect()))
        .collect()
}

fn in_order(parts: &[usize]) -> bool {
    parts.iter().enumerate().all(|(i, p)| *p == i + 1)
}

/// Randomized chit-chat sessions plus the replay suite.
pub fn aliens(res: &Resources, reports: &[ScriptReport], sessions: u64, turns: usize) -> Check {
    let mut problems = Vec::new();
    let mut completed = 0;
    let mut parts_seen = 0;
    for seed in 0..sessions {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut clock = 0;
        let (session, _) = res.new_session(format!("aliens-{seed}"), seed, clock);
        let setup = ["I want to make chicken soup", "no preference", "the first one", "let's start"];
        let mut session = match drive(res, session, &setup, &mut clock) {
            Ok(s) => s,
            Err(e) => {
                problems.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        let mut parts = Vec::new();
        for _ in 0..turns {
            let text = CHAT_POOL.choose(&mut rng).copied().unwrap_or("tell me more");
            clock += 1;
            let out = match res.turn(&session, text, clock) {
                Ok(o) => o,
                Err(e) => {
                    problems.push(format!("seed {seed} {text:?}: {e}"));
                    break;
                }
            };
            if let Responder::ChitChatReply { reply } = &out.trace.responder {
                if let Some(p) = reply.aliens_part {
                    parts.push(p);
                    let expected = res.chitchat.aliens().parts.get(p - 1);
                    if expected.is_none_or(|e| !out.response.speech.contains(e.as_str())) {
                        problems.push(format!("seed {seed}: part {p} speech mismatch"));
                    }
                }
            }
            session = out.session;
            if session.is_closed() {
                break;
            }
        }
        if !in_order(&parts) {
            problems.push(format!("seed {seed}: parts {parts:?}"));
        }
        parts_seen += parts.len();
        if parts.len() == 5 {
            completed += 1;
        }
    }
    for (name, parts) in aliens_sequences(reports) {
        if !in_order(&parts) {
            problems.push(format!("{name}: parts {parts:?}"));
        }
    }
    if completed == 0 {
        problems.push("no session reached part 5".into());
    }
    let summary =
        format!("{sessions} random sessions, {parts_seen} parts delivered in order, {completed} reached part 5");
    Check::new("aliens", problems, summary)
}

pub fn safety(res: &Resources, fixture: &Path, reports: &[ScriptReport]) -> Check {
    let cases = match read(fixture).and_then(|t| replay::load_safety_cases(&t).map_err(|e| e.to_string())) {
        Ok(c) => c,
        Err(e) => return Check::new("safety", vec![e], "fixture unreadable".into()),
    };
    let mut problems = Vec::new();
    for c in &cases {
        for p in replay::check_safety_case(res, c) {
            problems.push(format!("{:?} in {}: {p}", c.text, c.state));
        }
    }
    let mut speeches = 0;
    for r in reports {
        for s in std::iter::once(&r.greeting).chain(r.transcript.iter().map(|t| &t.response.speech)) {
            speeches += 1;
            if let Some(term) = res.blacklist.find(s) {
                problems.push(format!("{}: speech contains {term:?}", r.name));
            }
        }
    }
    let refused = cases.iter().filter(|c| c.refused).count();
    let summary = format!(
        "{} fixture queries ({refused} refused as labeled), {speeches} replay speeches clean",
        cases.len()
    );
    Check::new("safety", problems, summary)
}

/// Every non-HTTP check over the data under `layout`.
pub fn offline(res: &Resources, layout: &DataLayout) -> Result<(ReplayRun, Vec<Check>), replay::ReplayError> {
    let scripts = replay::load_scripts(&layout.scripts())?;
    let run = run_replay(res, &scripts);
    let checks = vec![
        fsm(&run, &layout.goldens()),
        intents(res, &layout.fixture("nlu_fixture.jsonl")),
        search(res, &layout.fixture("queries.jsonl")),
        qa(res, &layout.fixture("qa_fixture.jsonl")),
        pak(res),
        aliens(res, &run.reports, 200, 30),
        safety(res, &layout.fixture("blacklist_queries.jsonl"), &run.reports),
    ];
    Ok((run, checks))
}
