//! Scoring question routing against a gold-typed fixture.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{window_text, QaRouter, QaType};
use crate::domain::Corpus;

#[derive(Debug, Error)]
pub enum QaFixtureError {
    #[error("line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error("line {line}: unknown task {id}")]
    UnknownTask { line: usize, id: String },
    #[error("line {line}: cursor {cursor} outside 1..={len}")]
    Cursor { line: usize, cursor: usize, len: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaFixtureRow {
    pub question: String,
    pub task_id: String,
    pub cursor: usize,
    #[serde(rename = "type")]
    pub qtype: QaType,
}

pub fn load_fixture(jsonl: &str, corpus: &Corpus) -> Result<Vec<QaFixtureRow>, QaFixtureError> {
    let mut rows = Vec::new();
    for (i, line) in jsonl.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row: QaFixtureRow =
            serde_json::from_str(line).map_err(|source| QaFixtureError::Parse { line: line_no, source })?;
        let doc = corpus.get(&row.task_id).ok_or_else(|| QaFixtureError::UnknownTask {
            line: line_no,
            id: row.task_id.clone(),
        })?;
        if row.cursor == 0 || row.cursor > doc.steps.len() {
            return Err(QaFixtureError::Cursor {
                line: line_no,
                cursor: row.cursor,
                len: doc.steps.len(),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QaMiss {
    pub question: String,
    pub task_id: String,
    pub cursor: usize,
    pub gold: QaType,
    pub routed: QaType,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QaReport {
    pub rows: usize,
    pub correct: usize,
    /// gold type -> routed type -> count
    pub confusion: BTreeMap<QaType, BTreeMap<QaType, usize>>,
    pub misses: Vec<QaMiss>,
    /// MRC answers not found verbatim in the step window.
    pub outside_window: Vec<QaMiss>,
    /// Ingredient or Substitute answers given for a how-to.
    pub recipe_only_on_howto: Vec<QaMiss>,
}

impl QaReport {
    pub fn accuracy(&self) -> f64 {
        if self.rows == 0 {
            1.0
        } else {
            self.correct as f64 / self.rows as f64
        }
    }
}

pub fn evaluate(router: &QaRouter, corpus: &Corpus, rows: &[QaFixtureRow]) -> QaReport {
    let mut report = QaReport {
        rows: rows.len(),
        correct: 0,
        confusion: BTreeMap::new(),
        misses: Vec::new(),
        outside_window: Vec::new(),
        recipe_only_on_howto: Vec::new(),
    };
    for row in rows {
        let Some(task) = corpus.get(&row.task_id) else { continue };
        let a = router.answer(&row.question, task, row.cursor);
        *report
            .confusion
            .entry(row.qtype)
            .or_default()
            .entry(a.qtype)
            .or_default() += 1;
        let miss = QaMiss {
            question: row.question.clone(),
            task_id: row.task_id.clone(),
            cursor: row.cursor,
            gold: row.qtype,
            routed: a.qtype,
            answer: a.text.clone(),
        };
        if a.qtype == QaType::Mrc && !window_text(task, row.cursor, router.config().window).contains(&a.text) {
            report.outside_window.push(miss.clone());
        }
        if !task.is_recipe() && matches!(a.qtype, QaType::Ingredient | QaType::Substitute) {
            report.recipe_only_on_howto.push(miss.clone());
        }
        if a.qtype == row.qtype {
            report.correct += 1;
        } else {
            report.misses.push(miss);
        }
    }
    report
}
