//! Line-oriented JSON traces: one meta line, then events in tick order,
//! then annotations.

use std::io::{BufRead, Write};

use serde::Serialize;
use thiserror::Error;

use super::event::{Annotation, Event, HistoryTrace, TraceMeta};

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error("trace has no meta line")]
    MissingMeta,
    #[error("line {0}: second meta line")]
    DuplicateMeta(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Meta and annotation lines carry a `kind` tag; event lines already have
/// one (`invoke` or `respond`).
#[derive(Serialize)]
struct Tagged<'a, T> {
    kind: &'static str,
    #[serde(flatten)]
    inner: &'a T,
}

fn line<W: Write, T: Serialize>(w: &mut W, v: &T) -> Result<(), JsonlError> {
    serde_json::to_writer(&mut *w, v).map_err(std::io::Error::from)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn write_jsonl<W: Write>(trace: &HistoryTrace, mut w: W) -> Result<(), JsonlError> {
    line(&mut w, &Tagged { kind: "meta", inner: &trace.meta })?;
    for e in &trace.events {
        line(&mut w, e)?;
    }
    for a in &trace.annotations {
        line(&mut w, &Tagged { kind: "annotation", inner: a })?;
    }
    Ok(())
}

pub fn to_jsonl_string(trace: &HistoryTrace) -> String {
    let mut buf = Vec::new();
    write_jsonl(trace, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("json is utf-8")
}

pub fn read_jsonl<R: BufRead>(r: R) -> Result<HistoryTrace, JsonlError> {
    let mut trace: Option<HistoryTrace> = None;
    let mut events = Vec::new();
    let mut annotations = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |source| JsonlError::Parse { line: i + 1, source };
        let mut obj: serde_json::Map<String, serde_json::Value> =
            serde_json::from_str(&line).map_err(parse_err)?;
        let kind = obj.get("kind").and_then(|k| k.as_str()).unwrap_or_default().to_owned();
        match kind.as_str() {
            "meta" => {
                if trace.is_some() {
                    return Err(JsonlError::DuplicateMeta(i + 1));
                }
                obj.remove("kind");
                let m: TraceMeta = serde_json::from_value(obj.into()).map_err(parse_err)?;
                trace = Some(HistoryTrace::new(m));
            }
            "annotation" => {
                obj.remove("kind");
                annotations.push(serde_json::from_value::<Annotation>(obj.into()).map_err(parse_err)?);
            }
            _ => events.push(serde_json::from_value::<Event>(obj.into()).map_err(parse_err)?),
        }
    }
    let mut t = trace.ok_or(JsonlError::MissingMeta)?;
    t.events = events;
    t.annotations = annotations;
    Ok(t)
}
