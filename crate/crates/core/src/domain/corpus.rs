use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use super::{
    FaqPair, Ingredient, NutritionFacts, Step, SubstituteEntry, TaskDocument, TaskKind,
    DEFAULT_MAX_INSTRUCTION_WORDS,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Parse {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}:{line}: document {id}: {reason}")]
    Invalid {
        path: PathBuf,
        line: usize,
        id: String,
        reason: String,
    },
}

#[derive(Debug, Deserialize)]
struct RawNutrition {
    sugar_g: Option<f64>,
    fat_g: Option<f64>,
    saturates_g: Option<f64>,
    salt_g: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct RawIngredient {
    name: String,
    #[serde(default)]
    quantity: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTask {
    id: String,
    kind: TaskKind,
    title: String,
    #[serde(default)]
    keywords: Vec<String>,
    steps: Vec<String>,
    #[serde(default)]
    ingredients: Vec<RawIngredient>,
    #[serde(default)]
    requirements: Vec<String>,
    #[serde(default)]
    nutrition: Option<RawNutrition>,
    #[serde(default)]
    faq: Vec<FaqPair>,
    #[serde(default)]
    image_ref: Option<String>,
}

impl RawTask {
    fn validate(self, max_words: usize) -> Result<TaskDocument, String> {
        if self.id.trim().is_empty() {
            return Err("empty id".into());
        }
        if self.title.trim().is_empty() {
            return Err("empty title".into());
        }
        if self.steps.is_empty() {
            return Err("task has no steps".into());
        }
        if let Some(i) = self.steps.iter().position(|s| s.trim().is_empty()) {
            return Err(format!("step {} is empty", i + 1));
        }
        match self.kind {
            TaskKind::Recipe if self.ingredients.is_empty() => {
                return Err("recipe has no ingredients".into());
            }
            TaskKind::HowTo if self.nutrition.is_some() => {
                return Err("how-to task carries nutrition facts".into());
            }
            TaskKind::HowTo if !self.ingredients.is_empty() => {
                return Err("how-to task carries ingredients".into());
            }
            TaskKind::Recipe if !self.requirements.is_empty() => {
                return Err("recipe carries requirements".into());
            }
            _ => {}
        }
        let nutrition = match self.nutrition {
            None => None,
            Some(n) => match (n.sugar_g, n.fat_g, n.saturates_g, n.salt_g) {
                (Some(sugar_g), Some(fat_g), Some(saturates_g), Some(salt_g)) => {
                    let facts = NutritionFacts { sugar_g, fat_g, saturates_g, salt_g };
                    if [sugar_g, fat_g, saturates_g, salt_g]
                        .iter()
                        .any(|v| !v.is_finite() || *v < 0.0)
                    {
                        return Err("nutrition values must be finite and non-negative".into());
                    }
                    Some(facts)
                }
                _ => return Err("nutrition must carry all four facets or be absent".into()),
            },
        };
        let mut ingredients = Vec::with_capacity(self.ingredients.len());
        for ing in self.ingredients {
            let name = ing.name.trim().to_lowercase();
            if name.is_empty() {
                return Err("ingredient with empty name".into());
            }
            ingredients.push(Ingredient {
                name,
                quantity: ing.quantity.filter(|q| !q.trim().is_empty()),
            });
        }
        if self
            .faq
            .iter()
            .any(|f| f.question.trim().is_empty() || f.answer.trim().is_empty())
        {
            return Err("faq pair with empty question or answer".into());
        }
        let steps = self
            .steps
            .iter()
            .enumerate()
            .map(|(i, raw)| Step::new(i + 1, raw, max_words))
            .collect();
        Ok(TaskDocument {
            id: self.id,
            kind: self.kind,
            title: self.title.trim().to_string(),
            keywords: self.keywords,
            steps,
            ingredients,
            requirements: self.requirements,
            nutrition,
            faq: self.faq,
            image_ref: self.image_ref,
        })
    }
}

/// Validated, immutable collection of task documents in load order.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    docs: Vec<TaskDocument>,
    by_id: HashMap<String, usize>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads JSON Lines files in order; ids must be unique across all of them.
    pub fn load_files<P: AsRef<Path>>(paths: &[P], max_words: usize) -> Result<Self, CorpusError> {
        let mut corpus = Corpus::new();
        for p in paths {
            corpus.extend_from_file(p.as_ref(), max_words)?;
        }
        Ok(corpus)
    }

    fn extend_from_file(&mut self, path: &Path, max_words: usize) -> Result<(), CorpusError> {
        let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawTask =
                serde_json::from_str(line).map_err(|source| CorpusError::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    source,
                })?;
            let id = raw.id.clone();
            let invalid = |reason: String| CorpusError::Invalid {
                path: path.to_path_buf(),
                line: line_no,
                id: id.clone(),
                reason,
            };
            let doc = raw.validate(max_words).map_err(invalid)?;
            if self.by_id.contains_key(&doc.id) {
                return Err(invalid("duplicate id".into()));
            }
            self.by_id.insert(doc.id.clone(), self.docs.len());
            self.docs.push(doc);
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&TaskDocument> {
        self.by_id.get(id).map(|&i| &self.docs[i])
    }

    pub fn docs(&self) -> &[TaskDocument] {
        &self.docs
    }

    pub fn iter(&self) -> impl Iterator<Item = &TaskDocument> {
        self.docs.iter()
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn of_kind(&self, kind: TaskKind) -> impl Iterator<Item = &TaskDocument> {
        self.docs.iter().filter(move |d| d.kind == kind)
    }
}

/// Loads one JSON Lines corpus file with the default instruction length.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    Corpus::load_files(&[path], DEFAULT_MAX_INSTRUCTION_WORDS)
}

/// Ingredient → substitutes, keyed by lowercase ingredient name.
#[derive(Debug, Clone, Default)]
pub struct SubstituteTable {
    entries: BTreeMap<String, SubstituteEntry>,
}

impl SubstituteTable {
    pub fn get(&self, ingredient: &str) -> Option<&SubstituteEntry> {
        self.entries.get(ingredient)
    }

    pub fn ingredients(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn load_substitutes(path: impl AsRef<Path>) -> Result<SubstituteTable, CorpusError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut entries = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut e: SubstituteEntry =
            serde_json::from_str(line).map_err(|source| CorpusError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                source,
            })?;
        e.ingredient = e.ingredient.trim().to_lowercase();
        let invalid = |reason: &str| CorpusError::Invalid {
            path: path.to_path_buf(),
            line: i + 1,
            id: e.ingredient.clone(),
            reason: reason.to_string(),
        };
        if e.ingredient.is_empty() || e.substitutes.is_empty() {
            return Err(invalid("entry needs an ingredient and at least one substitute"));
        }
        if entries.contains_key(&e.ingredient) {
            return Err(invalid("duplicate ingredient"));
        }
        entries.insert(e.ingredient.clone(), e);
    }
    Ok(SubstituteTable { entries })
}
