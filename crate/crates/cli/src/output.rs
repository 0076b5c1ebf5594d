//! Report emission: versioned JSON or CSV, to stdout or a file.

use anyhow::{Context, Result};
use serde_json::{json, Value};
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Wraps a report in the versioned envelope.
pub fn envelope(kind: &str, body: Value) -> Value {
    json!({ "schema": 1, "kind": kind, "report": body })
}

pub fn write_text(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

pub fn write_json(out: Option<&Path>, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(out, &text)
}

/// Debug chatter on stderr, gated by `MEVR_LOG`; never affects results.
pub fn debug(message: impl AsRef<str>) {
    if matches!(
        std::env::var("MEVR_LOG").as_deref(),
        Ok("debug") | Ok("info")
    ) {
        eprintln!("mevr: {}", message.as_ref());
    }
}
