//! Task documents, their parts, and corpus loading.

mod corpus;
mod step;

pub use corpus::{load_corpus, load_substitutes, Corpus, CorpusError, SubstituteTable};
pub use step::{decompose_step, Step, StepParts, DEFAULT_MAX_INSTRUCTION_WORDS};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Recipe,
    #[serde(rename = "howto")]
    HowTo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskDocument {
    pub id: String,
    pub kind: TaskKind,
    pub title: String,
    pub keywords: Vec<String>,
    pub steps: Vec<Step>,
    pub ingredients: Vec<Ingredient>,
    pub requirements: Vec<String>,
    pub nutrition: Option<NutritionFacts>,
    pub faq: Vec<FaqPair>,
    pub image_ref: Option<String>,
}

impl TaskDocument {
    pub fn step(&self, index: usize) -> Option<&Step> {
        index.checked_sub(1).and_then(|i| self.steps.get(i))
    }

    pub fn is_recipe(&self) -> bool {
        self.kind == TaskKind::Recipe
    }
}

/// Per-100g values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NutritionFacts {
    pub sugar_g: f64,
    pub fat_g: f64,
    pub saturates_g: f64,
    pub salt_g: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ingredient {
    pub name: String,
    pub quantity: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaqPair {
    pub question: String,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubstituteEntry {
    pub ingredient: String,
    pub substitutes: Vec<String>,
}
