//! Operator commands for the taskbot engine.

pub mod checks;

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use taskbot_core::domain::TaskKind;
use taskbot_core::nlu::{expand_templates, TemplateFile};
use taskbot_core::replay::{self, ScriptReport};
use taskbot_core::{Resources, Settings};

use checks::DataLayout;

pub const DEFAULT_CONFIG: &str = "data/config/taskbot.toml";

#[derive(Debug, Parser)]
#[command(name = "taskbot", version, about = "Task-oriented dialogue engine for recipes and how-tos")]
pub struct Cli {
    /// Main config file.
    #[arg(long, global = true, default_value = DEFAULT_CONFIG)]
    pub config: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and index the corpus, then print counts.
    Ingest,
    /// Expand NLU templates into labeled utterances (JSONL).
    Augment {
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Probability of inserting one noise word per utterance.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Talk to the bot on the terminal. `:state` prints the dialogue state, `:quit` exits.
    Chat {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the replay scripts and fixture checks.
    Replay {
        /// Overwrite golden transcripts with this run.
        #[arg(long)]
        bless: bool,
        /// Data root holding replay/ and fixtures/; defaults to the config directory's parent.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        port: Option<u16>,
    },
}

pub fn load_settings(config: &Path) -> anyhow::Result<Settings> {
    Settings::load(Some(config)).with_context(|| format!("loading {}", config.display()))
}

pub fn load_resources(settings: &Settings) -> anyhow::Result<Resources> {
    Resources::load(settings).context("loading resources")
}

pub fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let mut settings = load_settings(&cli.config)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Ingest => {
            let res = load_resources(&settings)?;
            ingest(&res, &mut out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Augment {
            templates,
            seed,
            noise,
            out: path,
        } => {
            let templates = templates.unwrap_or_else(|| {
                DataLayout::from_config_dir(&settings.paths.config_dir)
                    .root
                    .join("nlu/templates.json")
            });
            let n = match path {
                Some(p) => {
                    let mut f = std::io::BufWriter::new(
                        std::fs::File::create(&p).with_context(|| format!("creating {}", p.display()))?,
                    );
                    let n = augment(&templates, seed, noise, &mut f)?;
                    f.flush()?;
                    n
                }
                None => augment(&templates, seed, noise, &mut out)?,
            };
            eprintln!("{n} utterances");
            Ok(ExitCode::SUCCESS)
        }
        Command::Chat { seed } => {
            let res = load_resources(&settings)?;
            let stdin = std::io::stdin();
            chat(&res, seed, stdin.lock(), &mut out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Replay { bless, data } => {
            let res = load_resources(&settings)?;
            let layout = data.map_or_else(|| DataLayout::from_config_dir(&settings.paths.config_dir), DataLayout::new);
            let ok = replay_cmd(&res, &layout, bless, &mut out)?;
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Serve { port } => {
            if let Some(p) = port {
                settings.server.port = p;
            }
            let res = Arc::new(load_resources(&settings)?);
            tokio::runtime::Runtime::new()?.block_on(taskbot_server::serve(res))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

pub fn ingest(res: &Resources, out: &mut impl Write) -> anyhow::Result<()> {
    let recipes = res.corpus.of_kind(TaskKind::Recipe).count();
    let howtos = res.corpus.of_kind(TaskKind::HowTo).count();
    let blocked = res.corpus.iter().filter(|d| res.search.is_blocked(&d.id)).count();
    let steps: usize = res.corpus.iter().map(|d| d.steps.len()).sum();
    writeln!(out, "recipes: {recipes}")?;
    writeln!(out, "how-tos: {howtos}")?;
    writeln!(out, "steps: {steps}")?;
    writeln!(out, "blocked: {blocked}")?;
    writeln!(out, "pak pairs: {}", res.pak.store().len())?;
    writeln!(out, "transitions: {}", res.table.len())?;
    writeln!(out, "{} tasks indexed", res.corpus.len())?;
    Ok(())
}

/// Writes expanded utterances as JSONL and returns how many.
pub fn augment(templates: &Path, seed: u64, noise: f64, out: &mut impl Write) -> anyhow::Result<usize> {
    let text = std::fs::read_to_string(templates).with_context(|| format!("reading {}", templates.display()))?;
    let file: TemplateFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", templates.display()))?;
    let rows = expand_templates(&file, noise, seed)?;
    for r in &rows {
        writeln!(out, "{}", serde_json::to_string(r)?)?;
    }
    Ok(rows.len())
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

pub fn chat(res: &Resources, seed: u64, input: impl BufRead, out: &mut impl Write) -> anyhow::Result<()> {
    let (mut session, greeting) = res.new_session("cli", seed, now_ms());
    writeln!(out, "bot> {}", greeting.speech)?;
    for line in input.lines() {
        let line = line?;
        let text = line.trim();
        match text {
            "" => continue,
            ":quit" | ":q" => break,
            ":state" => {
                writeln!(out, "{}", serde_json::to_string_pretty(&session.state)?)?;
                continue;
            }
            _ => {}
        }
        match res.turn(&session, text, now_ms()) {
            Ok(o) => {
                writeln!(out, "bot> {}", o.response.speech)?;
                tracing::debug!(intents = ?o.trace.intents, edge = ?o.trace.edge, "turn");
                session = o.session;
                if session.is_closed() {
                    break;
                }
            }
            Err(e) => {
                tracing::error!(error = %e, "turn failed");
                writeln!(out, "bot> {}", res.failure_response(&session).speech)?;
            }
        }
    }
    Ok(())
}

fn script_line(r: &ScriptReport) -> String {
    match &r.failure {
        None => format!("PASS {} ({} turns)", r.name, r.transcript.len()),
        Some(f) => format!("FAIL {}: {f}", r.name),
    }
}

/// Prints per-script results and every offline check. True when all pass.
pub fn replay_cmd(res: &Resources, layout: &DataLayout, bless: bool, out: &mut impl Write) -> anyhow::Result<bool> {
    let (run, checks) = checks::offline(res, layout)?;
    for r in &run.reports {
        writeln!(out, "{}", script_line(r))?;
    }
    if bless {
        if run.reports.iter().any(|r| !r.passed()) {
            bail!("refusing to bless: some scripts fail");
        }
        let written = checks::bless(&layout.goldens(), &run)?;
        writeln!(out, "blessed {} transcripts into {}", written.len(), layout.goldens().display())?;
    }
    let coverage = replay::coverage(&res.table, &run.reports);
    writeln!(
        out,
        "coverage {}/{} ({:.1}%)",
        coverage.covered,
        coverage.total,
        coverage.percent()
    )?;
    for e in &coverage.missing {
        writeln!(out, "  missing {e}")?;
    }
    let mut ok = true;
    for c in &checks {
        if bless && c.name == "fsm" {
            let again = checks::fsm(&run, &layout.goldens());
            ok &= again.passed;
            writeln!(out, "{again}")?;
            continue;
        }
        ok &= c.passed;
        writeln!(out, "{c}")?;
    }
    Ok(ok)
}
