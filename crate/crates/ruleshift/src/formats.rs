//! On-disk formats: route files, transcript logs and SFT datasets.
//!
//! Route files are JSON objects with a `version` field. Transcript logs and
//! datasets are line-delimited JSON, one record per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ruleshift_core::nav::{InvariantError, Route};
use ruleshift_core::policy::SftRecord;
use ruleshift_core::revision::{EpisodeStatus, Transcript, Turn};
use serde::{Deserialize, Serialize};

pub const ROUTE_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{file}: field `{field}`: {message}")]
    Schema { file: String, field: String, message: String },
    #[error("{file}: unsupported version {found} (expected {expected})")]
    Version { file: String, found: u64, expected: u32 },
    #[error("{file}: {source}")]
    Invariant { file: String, source: InvariantError },
    #[error("{file}:{line}: {message}")]
    Record { file: String, line: usize, message: String },
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> FormatError + '_ {
    move |source| FormatError::Io { path: path.to_path_buf(), source }
}

/// Parses a route file body; `name` labels errors.
pub fn parse_route(text: &str, name: &str) -> Result<Route, FormatError> {
    let schema = |field: String, message: String| FormatError::Schema { file: name.to_string(), field, message };
    let mut value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| schema("<root>".into(), e.to_string()))?;
    let obj = value.as_object_mut().ok_or_else(|| schema("<root>".into(), "expected an object".into()))?;
    let version = obj
        .remove("version")
        .ok_or_else(|| schema("version".into(), "missing field".into()))?
        .as_u64()
        .ok_or_else(|| schema("version".into(), "expected an integer".into()))?;
    if version != ROUTE_VERSION as u64 {
        return Err(FormatError::Version { file: name.to_string(), found: version, expected: ROUTE_VERSION });
    }
    let route: Route = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        schema(if path == "." { "<root>".into() } else { path }, e.inner().to_string())
    })?;
    route.validate().map_err(|source| FormatError::Invariant { file: name.to_string(), source })?;
    Ok(route)
}

pub fn load_route(path: &Path) -> Result<Route, FormatError> {
    let text = std::fs::read_to_string(path).map_err(io(path))?;
    parse_route(&text, &path.display().to_string())
}

pub fn route_to_json(route: &Route) -> String {
    let mut v = serde_json::to_value(route).expect("route serializes");
    let obj = v.as_object_mut().expect("route is an object");
    let mut out = serde_json::Map::new();
    out.insert("version".into(), ROUTE_VERSION.into());
    out.append(obj);
    serde_json::to_string_pretty(&serde_json::Value::Object(out)).expect("json serializes")
}

pub fn save_route(path: &Path, route: &Route) -> Result<(), FormatError> {
    std::fs::write(path, route_to_json(route) + "\n").map_err(io(path))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    Model,
    Verifier,
}

/// One line of a transcript log. `step` is the turn index; the system record
/// uses step 0 alongside the first turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRecord {
    pub episode: u64,
    pub step: usize,
    pub role: Role,
    pub text: String,
    /// Model records: the attempt reward. Verifier records: the budget penalty.
    #[serde(default)]
    pub reward: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_hash: Option<String>,
    /// Verifier records: context that replaces the prompt base.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
    /// Last record of an episode: its final status.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<EpisodeStatus>,
}

pub fn transcript_records(episode: u64, t: &Transcript) -> Vec<LogRecord> {
    let base = LogRecord {
        episode,
        step: 0,
        role: Role::System,
        text: t.system_prompt.clone(),
        reward: 0.0,
        correct: None,
        verdict: None,
        prompt_hash: None,
        context: None,
        status: None,
    };
    let mut out = vec![base.clone()];
    for (step, turn) in t.turns.iter().enumerate() {
        out.push(LogRecord {
            step,
            role: Role::Model,
            text: turn.output.clone(),
            reward: turn.reward,
            prompt_hash: Some(turn.prompt_hash.clone()),
            ..base.clone()
        });
        out.push(LogRecord {
            step,
            role: Role::Verifier,
            text: turn.verifier.clone(),
            reward: turn.penalty,
            correct: Some(turn.correct),
            verdict: Some(turn.verdict.clone()),
            context: turn.next_context.clone(),
            ..base.clone()
        });
    }
    if let Some(last) = out.last_mut() {
        last.status = t.status;
    }
    out
}

/// Rebuilds transcripts from log records, grouped by episode in first-seen order.
pub fn transcripts_from_records(records: &[LogRecord]) -> Result<Vec<(u64, Transcript)>, String> {
    let mut out: Vec<(u64, Transcript)> = Vec::new();
    let mut pending: Option<(String, f64, String)> = None;
    for (i, r) in records.iter().enumerate() {
        match r.role {
            Role::System => {
                out.push((r.episode, Transcript::new(r.text.clone())));
            }
            Role::Model => {
                pending = Some((r.text.clone(), r.reward, r.prompt_hash.clone().unwrap_or_default()));
            }
            Role::Verifier => {
                let (output, reward, prompt_hash) =
                    pending.take().ok_or_else(|| format!("record {i}: verifier without a model record"))?;
                let (_, t) = out
                    .last_mut()
                    .filter(|(e, _)| *e == r.episode)
                    .ok_or_else(|| format!("record {i}: verifier before the system record"))?;
                t.turns.push(Turn {
                    output,
                    verifier: r.text.clone(),
                    reward,
                    penalty: r.reward,
                    correct: r.correct.unwrap_or(false),
                    verdict: r.verdict.clone().unwrap_or_default(),
                    next_context: r.context.clone(),
                    prompt_hash,
                });
            }
        }
        if let (Some(status), Some((_, t))) = (r.status, out.last_mut()) {
            t.status = Some(status);
        }
    }
    Ok(out)
}

/// Writes serializable records as JSON lines.
pub fn write_jsonl<T: Serialize>(path: &Path, records: impl IntoIterator<Item = T>) -> Result<(), FormatError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io(dir))?;
    }
    let mut w = BufWriter::new(File::create(path).map_err(io(path))?);
    for r in records {
        serde_json::to_writer(&mut w, &r).expect("records serialize");
        w.write_all(b"\n").map_err(io(path))?;
    }
    w.flush().map_err(io(path))
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, FormatError> {
    let r = BufReader::new(File::open(path).map_err(io(path))?);
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| FormatError::Record {
            file: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_transcripts(path: &Path, transcripts: &[Transcript]) -> Result<(), FormatError> {
    write_jsonl(path, transcripts.iter().enumerate().flat_map(|(i, t)| transcript_records(i as u64, t)))
}

pub fn write_dataset(path: &Path, records: &[SftRecord]) -> Result<(), FormatError> {
    write_jsonl(path, records)
}

pub fn read_dataset(path: &Path) -> Result<Vec<SftRecord>, FormatError> {
    read_jsonl(path)
}
