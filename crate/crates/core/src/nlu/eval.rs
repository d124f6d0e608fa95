//! Scoring the recognizer against a hand-labeled fixture.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{filter_by_state, keys, violations, IntentLabel, Nlu, NluError, INTENT_KEYS};

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error("line {line}: unknown label {label:?}")]
    UnknownLabel { line: usize, label: String },
    #[error("line {line}: no gold labels")]
    NoLabels { line: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureRow {
    pub text: String,
    pub state: String,
    pub labels: BTreeSet<String>,
}

pub fn load_fixture(jsonl: &str) -> Result<Vec<FixtureRow>, FixtureError> {
    let mut rows = Vec::new();
    for (i, line) in jsonl.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row: FixtureRow =
            serde_json::from_str(line).map_err(|source| FixtureError::Parse { line: line_no, source })?;
        if row.labels.is_empty() {
            return Err(FixtureError::NoLabels { line: line_no });
        }
        if let Some(l) = row.labels.iter().find(|l| !INTENT_KEYS.contains(&l.as_str())) {
            return Err(FixtureError::UnknownLabel {
                line: line_no,
                label: l.clone(),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mismatch {
    pub text: String,
    pub state: String,
    pub gold: BTreeSet<String>,
    pub predicted: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub text: String,
    pub state: String,
    pub labels: Vec<String>,
    pub problems: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CategoryCount {
    pub exact: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NluReport {
    pub rows: usize,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    /// Exact-set matches, grouped by the category of the top gold label.
    pub by_category: BTreeMap<String, CategoryCount>,
    pub mismatches: Vec<Mismatch>,
    /// Checked on both the raw and the state-filtered sets.
    pub violations: Vec<Violation>,
}

impl NluReport {
    pub fn precision(&self) -> f64 {
        ratio(self.true_positives, self.true_positives + self.false_positives)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.true_positives, self.true_positives + self.false_negatives)
    }

    pub fn micro_f1(&self) -> f64 {
        ratio(
            2 * self.true_positives,
            2 * self.true_positives + self.false_positives + self.false_negatives,
        )
    }

    pub fn exact(&self) -> usize {
        self.rows - self.mismatches.len()
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        1.0
    } else {
        a as f64 / b as f64
    }
}

fn gold_category(labels: &BTreeSet<String>) -> &'static str {
    INTENT_KEYS
        .iter()
        .find(|k| labels.contains(**k))
        .map_or("utterance", |k| match *k {
            "affirm" | "negate" | "neutral" => "sentiment",
            "task_request" | "question" | "chat" | "out_of_domain" => "utterance",
            _ => "command",
        })
}

/// Scores raw recognizer labels against gold labels (micro-averaged over
/// label keys).
pub fn evaluate(
    nlu: &Nlu,
    rows: &[FixtureRow],
    has_row: impl Fn(&str, &str) -> bool,
) -> Result<NluReport, NluError> {
    let mut report = NluReport {
        rows: rows.len(),
        true_positives: 0,
        false_positives: 0,
        false_negatives: 0,
        by_category: ["command", "sentiment", "utterance"]
            .into_iter()
            .map(|c| (c.to_string(), CategoryCount::default()))
            .collect(),
        mismatches: Vec::new(),
        violations: Vec::new(),
    };
    for row in rows {
        let raw = nlu.recognize(&row.text, &row.state)?;
        let filtered = filter_by_state(&raw, &row.state, &has_row);
        for set in [&raw, &filtered] {
            let problems = violations(set);
            if !problems.is_empty() {
                report.violations.push(Violation {
                    text: row.text.clone(),
                    state: row.state.clone(),
                    labels: set.iter().map(IntentLabel::to_string).collect(),
                    problems,
                });
            }
        }
        let predicted: BTreeSet<String> = keys(&raw).into_iter().map(str::to_string).collect();
        report.true_positives += predicted.intersection(&row.labels).count();
        report.false_positives += predicted.difference(&row.labels).count();
        report.false_negatives += row.labels.difference(&predicted).count();
        let count = report
            .by_category
            .entry(gold_category(&row.labels).to_string())
            .or_default();
        count.total += 1;
        if predicted == row.labels {
            count.exact += 1;
        } else {
            report.mismatches.push(Mismatch {
                text: row.text.clone(),
                state: row.state.clone(),
                gold: row.labels.clone(),
                predicted,
            });
        }
    }
    Ok(report)
}
