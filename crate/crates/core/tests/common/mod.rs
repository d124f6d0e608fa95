#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::OnceLock;

use taskbot_core::{Resources, Settings};

pub fn data() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn read(rel: &str) -> String {
    std::fs::read_to_string(data().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn settings() -> Settings {
    Settings::from_file(&data().join("config/taskbot.toml")).expect("committed config loads")
}

pub fn resources() -> &'static Resources {
    static RES: OnceLock<Resources> = OnceLock::new();
    RES.get_or_init(|| Resources::load(&settings()).expect("committed data loads"))
}
