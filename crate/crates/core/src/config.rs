//! Service settings: one TOML file plus `TACO_*` environment overrides.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("bad config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("environment variable {name}={value:?} is not valid")]
    Env { name: &'static str, value: String },
    #[error("bad config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerSettings {
    pub port: u16,
    pub snapshot_path: PathBuf,
    pub snapshot_interval_secs: u64,
}

impl Default for ServerSettings {
    fn default() -> Self {
        Self {
            port: 8080,
            snapshot_path: PathBuf::from("sessions.snapshot.jsonl"),
            snapshot_interval_secs: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathSettings {
    pub corpus_dir: PathBuf,
    pub config_dir: PathBuf,
}

impl Default for PathSettings {
    fn default() -> Self {
        Self {
            corpus_dir: PathBuf::from("data/corpus"),
            config_dir: PathBuf::from("data/config"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepSettings {
    pub max_words: usize,
}

impl Default for StepSettings {
    fn default() -> Self {
        Self {
            max_words: crate::domain::DEFAULT_MAX_INSTRUCTION_WORDS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSettings {
    pub k1: f64,
    pub b: f64,
    pub top_n: usize,
    pub page_size: usize,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            k1: 1.2,
            b: 0.75,
            top_n: crate::search::DEFAULT_TOP_N,
            page_size: crate::dm::DEFAULT_PAGE_SIZE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChitChatSettings {
    pub return_prompt_after: u32,
}

impl Default for ChitChatSettings {
    fn default() -> Self {
        Self { return_prompt_after: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PakSettings {
    pub every: usize,
}

impl Default for PakSettings {
    fn default() -> Self {
        Self { every: 3 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    pub server: ServerSettings,
    pub paths: PathSettings,
    pub steps: StepSettings,
    pub search: SearchSettings,
    pub chitchat: ChitChatSettings,
    pub pak: PakSettings,
}

impl Settings {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let s: Self = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    /// Reads `path` and resolves its relative paths against the file's
    /// directory.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut s = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        s.server.snapshot_path = rebase(base, &s.server.snapshot_path);
        s.paths.corpus_dir = rebase(base, &s.paths.corpus_dir);
        s.paths.config_dir = rebase(base, &s.paths.config_dir);
        Ok(s)
    }

    /// File (when given) then the process environment.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut s = match path {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        s.apply_env(|k| std::env::var(k).ok())?;
        Ok(s)
    }

    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        fn parse<T: std::str::FromStr>(name: &'static str, value: String) -> Result<T, ConfigError> {
            value.trim().parse().map_err(|_| ConfigError::Env { name, value })
        }
        if let Some(v) = lookup("TACO_PORT") {
            self.server.port = parse("TACO_PORT", v)?;
        }
        if let Some(v) = lookup("TACO_CORPUS_DIR") {
            self.paths.corpus_dir = PathBuf::from(v);
        }
        if let Some(v) = lookup("TACO_CONFIG_DIR") {
            self.paths.config_dir = PathBuf::from(v);
        }
        if let Some(v) = lookup("TACO_SNAPSHOT_PATH") {
            self.server.snapshot_path = PathBuf::from(v);
        }
        if let Some(v) = lookup("TACO_BM25_K1") {
            self.search.k1 = parse("TACO_BM25_K1", v)?;
        }
        if let Some(v) = lookup("TACO_BM25_B") {
            self.search.b = parse("TACO_BM25_B", v)?;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.search;
        if !(s.k1.is_finite() && s.k1 >= 0.0) {
            return Err(ConfigError::Invalid(format!("search.k1 = {}", s.k1)));
        }
        if !(0.0..=1.0).contains(&s.b) {
            return Err(ConfigError::Invalid(format!("search.b = {}", s.b)));
        }
        if s.top_n == 0 || s.page_size == 0 {
            return Err(ConfigError::Invalid("search.top_n and search.page_size must be positive".into()));
        }
        if self.pak.every == 0 {
            return Err(ConfigError::Invalid("pak.every must be positive".into()));
        }
        if self.steps.max_words == 0 {
            return Err(ConfigError::Invalid("steps.max_words must be positive".into()));
        }
        Ok(())
    }
}

fn rebase(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn committed_file_matches_defaults() {
        let path = crate::testutil::data_dir().join("config/taskbot.toml");
        let s = Settings::from_file(&path).unwrap();
        assert_eq!(s.search, SearchSettings::default());
        assert_eq!(s.pak.every, 3);
        assert!(s.paths.corpus_dir.join("recipes.jsonl").exists());
        assert!(s.paths.config_dir.join("transitions.toml").exists());
    }

    #[test]
    fn env_overrides() {
        let mut s = Settings::default();
        let env = |k: &str| match k {
            "TACO_PORT" => Some("9001".to_string()),
            "TACO_BM25_K1" => Some("1.5".to_string()),
            "TACO_CORPUS_DIR" => Some("/tmp/corpus".to_string()),
            _ => None,
        };
        s.apply_env(env).unwrap();
        assert_eq!(s.server.port, 9001);
        assert_eq!(s.search.k1, 1.5);
        assert_eq!(s.paths.corpus_dir, PathBuf::from("/tmp/corpus"));
        let bad = |k: &str| (k == "TACO_PORT").then(|| "eighty".to_string());
        assert!(matches!(s.apply_env(bad), Err(ConfigError::Env { name: "TACO_PORT", .. })));
        let bad_b = |k: &str| (k == "TACO_BM25_B").then(|| "2".to_string());
        assert!(matches!(Settings::default().apply_env(bad_b), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let s = Settings::from_toml("[search]\nk1 = 2.0\n").unwrap();
        assert_eq!(s.search.k1, 2.0);
        assert_eq!(s.search.b, 0.75);
        assert_eq!(s.server.port, 8080);
        assert!(Settings::from_toml("[pak]\nevery = 0\n").is_err());
    }
}
