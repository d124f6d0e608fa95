use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::NutritionFacts;

#[derive(Debug, Error, PartialEq)]
pub enum NutritionError {
    #[error("unknown nutrient {0:?}")]
    UnknownFacet(String),
    #[error("unknown level {0:?}")]
    UnknownLevel(String),
    #[error("value must be a finite non-negative number, got {0}")]
    InvalidValue(f64),
    #[error("thresholds for {facet}: low_max {low_max} must not exceed high_min {high_min}")]
    BadThresholds {
        facet: Facet,
        low_max: f64,
        high_min: f64,
    },
    #[error("thresholds: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Facet {
    Sugar,
    Fat,
    Saturates,
    Salt,
}

impl Facet {
    pub const ALL: [Facet; 4] = [Facet::Sugar, Facet::Fat, Facet::Saturates, Facet::Salt];

    pub fn name(self) -> &'static str {
        match self {
            Facet::Sugar => "sugar",
            Facet::Fat => "fat",
            Facet::Saturates => "saturates",
            Facet::Salt => "salt",
        }
    }

    pub fn value(self, facts: &NutritionFacts) -> f64 {
        match self {
            Facet::Sugar => facts.sugar_g,
            Facet::Fat => facts.fat_g,
            Facet::Saturates => facts.saturates_g,
            Facet::Salt => facts.salt_g,
        }
    }
}

impl fmt::Display for Facet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Facet {
    type Err = NutritionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "sugar" | "sugars" => Ok(Facet::Sugar),
            "fat" => Ok(Facet::Fat),
            "saturates" | "saturated fat" => Ok(Facet::Saturates),
            "salt" => Ok(Facet::Salt),
            other => Err(NutritionError::UnknownFacet(other.to_string())),
        }
    }
}

/// Traffic-light level; ordered Low < Medium < High.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Low,
    Medium,
    High,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Low => "low",
            Level::Medium => "medium",
            Level::High => "high",
        })
    }
}

impl FromStr for Level {
    type Err = NutritionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "low" | "green" => Ok(Level::Low),
            "medium" | "amber" => Ok(Level::Medium),
            "high" | "red" => Ok(Level::High),
            other => Err(NutritionError::UnknownLevel(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub low_max: f64,
    pub high_min: f64,
}

impl Thresholds {
    pub fn level(&self, value: f64) -> Level {
        if value <= self.low_max {
            Level::Low
        } else if value > self.high_min {
            Level::High
        } else {
            Level::Medium
        }
    }
}

/// Per-100g thresholds for each facet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficLights {
    pub sugar: Thresholds,
    pub fat: Thresholds,
    pub saturates: Thresholds,
    pub salt: Thresholds,
}

impl Default for TrafficLights {
    fn default() -> Self {
        Self {
            sugar: Thresholds { low_max: 5.0, high_min: 22.5 },
            fat: Thresholds { low_max: 3.0, high_min: 17.5 },
            saturates: Thresholds { low_max: 1.5, high_min: 5.0 },
            salt: Thresholds { low_max: 0.3, high_min: 1.5 },
        }
    }
}

impl TrafficLights {
    /// Parses the thresholds file. Keys starting with `_` are ignored.
    pub fn from_json(json: &str) -> Result<Self, NutritionError> {
        let mut map: serde_json::Map<String, serde_json::Value> =
            serde_json::from_str(json).map_err(|e| NutritionError::Parse(e.to_string()))?;
        map.retain(|k, _| !k.starts_with('_'));
        let lights: TrafficLights = serde_json::from_value(serde_json::Value::Object(map))
            .map_err(|e| NutritionError::Parse(e.to_string()))?;
        for facet in Facet::ALL {
            let t = lights.thresholds(facet);
            if !(t.low_max.is_finite() && t.high_min.is_finite()) || t.low_max > t.high_min {
                return Err(NutritionError::BadThresholds {
                    facet,
                    low_max: t.low_max,
                    high_min: t.high_min,
                });
            }
        }
        Ok(lights)
    }

    pub fn thresholds(&self, facet: Facet) -> Thresholds {
        match facet {
            Facet::Sugar => self.sugar,
            Facet::Fat => self.fat,
            Facet::Saturates => self.saturates,
            Facet::Salt => self.salt,
        }
    }

    pub fn level(&self, facet: Facet, value: f64) -> Result<Level, NutritionError> {
        if !value.is_finite() || value < 0.0 {
            return Err(NutritionError::InvalidValue(value));
        }
        Ok(self.thresholds(facet).level(value))
    }

    /// String-keyed form of [`TrafficLights::level`].
    pub fn traffic_light(&self, value: f64, nutrient: &str) -> Result<Level, NutritionError> {
        self.level(nutrient.parse()?, value)
    }
}

/// Desired maximum level per facet. A task satisfies the constraint when
/// every listed facet is at or below its cap.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NutritionConstraint {
    caps: BTreeMap<Facet, Level>,
}

impl NutritionConstraint {
    pub fn new(caps: impl IntoIterator<Item = (Facet, Level)>) -> Self {
        Self {
            caps: caps.into_iter().collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.caps.is_empty()
    }

    pub fn caps(&self) -> &BTreeMap<Facet, Level> {
        &self.caps
    }

    pub fn get(&self, facet: Facet) -> Option<Level> {
        self.caps.get(&facet).copied()
    }

    /// Adds caps from `other`; existing facets keep the stricter level.
    pub fn merge(&mut self, other: &NutritionConstraint) {
        for (&facet, &level) in &other.caps {
            let slot = self.caps.entry(facet).or_insert(level);
            *slot = (*slot).min(level);
        }
    }

    /// Missing nutrition facts fail any non-empty constraint.
    pub fn satisfied_by(&self, facts: Option<&NutritionFacts>, lights: &TrafficLights) -> bool {
        if self.caps.is_empty() {
            return true;
        }
        let Some(facts) = facts else {
            return false;
        };
        self.caps.iter().all(|(&facet, &cap)| {
            lights
                .level(facet, facet.value(facts))
                .map(|lvl| lvl <= cap)
                .unwrap_or(false)
        })
    }

    /// Short readable form, e.g. "low fat, low sugar".
    pub fn describe(&self) -> String {
        self.caps
            .iter()
            .map(|(f, l)| format!("{l} {f}"))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_examples() {
        let tl = TrafficLights::default();
        assert_eq!(tl.traffic_light(20.0, "fat"), Ok(Level::High));
        assert_eq!(tl.traffic_light(5.0, "sugar"), Ok(Level::Low));
        assert_eq!(tl.traffic_light(1.0, "salt"), Ok(Level::Medium));
    }

    #[test]
    fn boundaries() {
        let tl = TrafficLights::default();
        assert_eq!(tl.level(Facet::Fat, 3.0), Ok(Level::Low));
        assert_eq!(tl.level(Facet::Fat, 17.5), Ok(Level::Medium));
        assert_eq!(tl.level(Facet::Fat, 17.500001), Ok(Level::High));
        assert_eq!(tl.level(Facet::Salt, 0.0), Ok(Level::Low));
    }

    #[test]
    fn rejects_bad_input() {
        let tl = TrafficLights::default();
        assert!(matches!(tl.traffic_light(-1.0, "fat"), Err(NutritionError::InvalidValue(_))));
        assert!(matches!(tl.traffic_light(f64::NAN, "fat"), Err(NutritionError::InvalidValue(_))));
        assert!(matches!(tl.traffic_light(1.0, "fibre"), Err(NutritionError::UnknownFacet(_))));
    }

    #[test]
    fn loads_config_ignoring_comment() {
        let json = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../data/config/nutrition_thresholds.json"
        ))
        .unwrap();
        assert_eq!(TrafficLights::from_json(&json).unwrap(), TrafficLights::default());
    }

    #[test]
    fn inverted_thresholds_rejected() {
        let json = r#"{"sugar":{"low_max":9,"high_min":1},"fat":{"low_max":1,"high_min":2},
            "saturates":{"low_max":1,"high_min":2},"salt":{"low_max":1,"high_min":2}}"#;
        assert!(matches!(
            TrafficLights::from_json(json),
            Err(NutritionError::BadThresholds { facet: Facet::Sugar, .. })
        ));
    }

    #[test]
    fn cap_semantics() {
        let tl = TrafficLights::default();
        let facts = NutritionFacts { sugar_g: 10.0, fat_g: 2.0, saturates_g: 0.5, salt_g: 0.2 };
        let low_fat = NutritionConstraint::new([(Facet::Fat, Level::Low)]);
        let low_sugar = NutritionConstraint::new([(Facet::Sugar, Level::Low)]);
        let med_sugar = NutritionConstraint::new([(Facet::Sugar, Level::Medium)]);
        assert!(low_fat.satisfied_by(Some(&facts), &tl));
        assert!(!low_sugar.satisfied_by(Some(&facts), &tl));
        assert!(med_sugar.satisfied_by(Some(&facts), &tl));
        assert!(!low_fat.satisfied_by(None, &tl));
        assert!(NutritionConstraint::default().satisfied_by(None, &tl));
    }

    #[test]
    fn merge_keeps_stricter() {
        let mut a = NutritionConstraint::new([(Facet::Sugar, Level::Medium)]);
        a.merge(&NutritionConstraint::new([(Facet::Sugar, Level::Low), (Facet::Fat, Level::Low)]));
        assert_eq!(a.get(Facet::Sugar), Some(Level::Low));
        assert_eq!(a.describe(), "low sugar, low fat");
    }
}
