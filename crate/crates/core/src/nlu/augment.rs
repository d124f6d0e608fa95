use std::collections::BTreeMap;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AugmentError {
    #[error("template {template:?} uses unknown slot {slot:?}")]
    UnknownSlot { template: String, slot: String },
    #[error("slot {0:?} has no fillers")]
    EmptySlot(String),
    #[error("noise probability must lie in [0, 1], got {0}")]
    Noise(f64),
}

#[derive(Debug, Clone, Deserialize)]
pub struct Template {
    pub template: String,
    pub labels: Vec<String>,
    #[serde(default)]
    pub state: Option<String>,
    /// Keep at most this many expansions, drawn at random.
    #[serde(default)]
    pub sample: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct TemplateFile {
    pub slots: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub noise_words: Vec<String>,
    pub templates: Vec<Template>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentedExample {
    pub text: String,
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
}

/// Expands `{slot}` templates over every combination of slot fillers.
/// With probability `noise`, one noise word is inserted at a random
/// position. Output depends only on the inputs and `seed`.
pub fn expand_templates(
    file: &TemplateFile,
    noise: f64,
    seed: u64,
) -> Result<Vec<AugmentedExample>, AugmentError> {
    if !(0.0..=1.0).contains(&noise) {
        return Err(AugmentError::Noise(noise));
    }
    let slot_re = Regex::new(r"\{(\w+)\}").expect("static pattern");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for t in &file.templates {
        let mut names: Vec<&str> = Vec::new();
        for c in slot_re.captures_iter(&t.template) {
            let name = c.get(1).map_or("", |m| m.as_str());
            if !names.contains(&name) {
                names.push(name);
            }
        }
        let mut fillers: Vec<&[String]> = Vec::with_capacity(names.len());
        for name in &names {
            let f = file.slots.get(*name).ok_or_else(|| AugmentError::UnknownSlot {
                template: t.template.clone(),
                slot: name.to_string(),
            })?;
            if f.is_empty() {
                return Err(AugmentError::EmptySlot(name.to_string()));
            }
            fillers.push(f);
        }
        let total: usize = fillers.iter().map(|f| f.len()).product();
        let picks: Vec<usize> = match t.sample {
            Some(k) if k < total => {
                let mut v = index::sample(&mut rng, total, k).into_vec();
                v.sort_unstable();
                v
            }
            _ => (0..total).collect(),
        };
        for mut i in picks {
            let mut text = t.template.clone();
            for (name, f) in names.iter().zip(&fillers).rev() {
                let choice = &f[i % f.len()];
                i /= f.len();
                text = text.replace(&format!("{{{name}}}"), choice);
            }
            if noise > 0.0 && !file.noise_words.is_empty() && rng.gen::<f64>() < noise {
                let mut words: Vec<&str> = text.split_whitespace().collect();
                let at = rng.gen_range(0..=words.len());
                let w = &file.noise_words[rng.gen_range(0..file.noise_words.len())];
                words.insert(at, w);
                text = words.join(" ");
            }
            out.push(AugmentedExample {
                text,
                labels: t.labels.clone(),
                state: t.state.clone(),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file() -> TemplateFile {
        serde_json::from_str(
            r#"{
            "slots": {"dish": ["soup", "pie"], "adj": ["quick", "easy", "vegan"]},
            "noise_words": ["um"],
            "templates": [
                {"template": "find a {adj} {dish} recipe", "labels": ["task_request"], "state": "search.welcome"},
                {"template": "next", "labels": ["next"]},
                {"template": "{dish} {dish}", "labels": ["task_request"], "sample": 1}
            ]}"#,
        )
        .unwrap()
    }

    #[test]
    fn cartesian_product() {
        let out = expand_templates(&file(), 0.0, 7).unwrap();
        assert_eq!(out.len(), 6 + 1 + 1);
        assert_eq!(out[0].text, "find a quick soup recipe");
        assert_eq!(out[5].text, "find a vegan pie recipe");
        assert!(out[7].text == "soup soup" || out[7].text == "pie pie");
    }

    #[test]
    fn deterministic_per_seed() {
        let a = expand_templates(&file(), 0.5, 42).unwrap();
        let b = expand_templates(&file(), 0.5, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn full_noise_adds_one_word() {
        let out = expand_templates(&file(), 1.0, 3).unwrap();
        assert!(out.iter().all(|e| e.text.split_whitespace().filter(|w| *w == "um").count() == 1));
    }

    #[test]
    fn errors() {
        let mut f = file();
        f.templates[0].template = "{missing}".into();
        assert!(matches!(expand_templates(&f, 0.0, 0), Err(AugmentError::UnknownSlot { .. })));
        assert_eq!(expand_templates(&file(), 1.5, 0), Err(AugmentError::Noise(1.5)));
    }
}
