//! Tweet-format record parsing, keyword filtering, file replay into the
//! broker and consumption back out as [`Document`]s.

use crate::broker::{Client, ClientError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::net::ToSocketAddrs;
use std::path::Path;
use thiserror::Error;

/// One ingested record flowing through the pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub created_at: String,
    pub text: String,
    pub matched_keywords: BTreeSet<String>,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed record: {0}")]
    MalformedRecord(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("broker error: {0}")]
    Broker(#[from] ClientError),
}

/// Outcome of parsing one line: a tweet worth keeping, or a benign skip.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParsedRecord {
    Tweet(Document),
    Skip(SkipReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipReason {
    DeleteNotice,
    ProfileEvent,
    NoText,
    EmptyText,
}

/// Parses one record object. Deletion notices, profile events and records
/// without a text field are skips, not errors. When both the truncated
/// text and the extended full text are present, the full text wins.
pub fn parse_record(raw: &str) -> Result<ParsedRecord, IngestError> {
    let malformed = |what: &str| IngestError::MalformedRecord(what.to_string());
    let value: serde_json::Value =
        serde_json::from_str(raw).map_err(|e| malformed(&format!("invalid JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| malformed("record is not an object"))?;
    if obj.contains_key("delete") {
        return Ok(ParsedRecord::Skip(SkipReason::DeleteNotice));
    }
    if obj.contains_key("event") {
        return Ok(ParsedRecord::Skip(SkipReason::ProfileEvent));
    }
    let full_text = obj
        .get("extended_tweet")
        .and_then(|v| v.get("full_text"))
        .and_then(|v| v.as_str());
    let text = match (full_text, obj.get("text")) {
        (Some(full), _) => full,
        (None, Some(serde_json::Value::String(t))) => t.as_str(),
        (None, Some(_)) => return Err(malformed("text field is not a string")),
        (None, None) => return Ok(ParsedRecord::Skip(SkipReason::NoText)),
    };
    if text.is_empty() {
        return Ok(ParsedRecord::Skip(SkipReason::EmptyText));
    }
    let id = match (obj.get("id_str"), obj.get("id")) {
        (Some(serde_json::Value::String(id)), _) => id.clone(),
        (None, Some(serde_json::Value::String(id))) => id.clone(),
        (None, Some(serde_json::Value::Number(id))) => id.to_string(),
        _ => return Err(malformed("record has no usable id")),
    };
    let created_at = obj
        .get("created_at")
        .and_then(|v| v.as_str())
        .unwrap_or("")
        .to_string();
    let matched_keywords = obj
        .get("matched_keywords")
        .and_then(|v| v.as_array())
        .map(|a| {
            a.iter()
                .filter_map(|v| v.as_str().map(str::to_string))
                .collect()
        })
        .unwrap_or_default();
    Ok(ParsedRecord::Tweet(Document {
        id,
        created_at,
        text: text.to_string(),
        matched_keywords,
    }))
}

/// Lowercase tracking keywords.
#[derive(Debug, Clone)]
pub struct KeywordSet {
    keywords: BTreeSet<String>,
}

static STANDARD_KEYWORDS: &str = include_str!("../../resources/keywords_health.txt");

impl KeywordSet {
    /// The bundled health-stream keyword list.
    pub fn standard() -> Self {
        Self::from_lines(STANDARD_KEYWORDS).expect("bundled keyword list is valid")
    }

    /// Reads one keyword per line; `#` comments and blank lines allowed.
    /// Entries are trimmed and lowercased; the set must be non-empty.
    pub fn load(path: &Path) -> io::Result<Self> {
        Self::from_lines(&std::fs::read_to_string(path)?)
    }

    pub fn from_lines(text: &str) -> io::Result<Self> {
        let keywords: BTreeSet<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.to_lowercase())
            .collect();
        if keywords.is_empty() {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                "keyword list is empty",
            ));
        }
        Ok(KeywordSet { keywords })
    }

    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.keywords.iter().map(String::as_str)
    }
}

/// Every keyword occurring as a case-folded substring of the text, so
/// hashtag and compound forms still match. An empty result means the
/// record is dropped.
pub fn keyword_filter(text: &str, keywords: &KeywordSet) -> BTreeSet<String> {
    let folded = text.to_lowercase();
    keywords
        .iter()
        .filter(|k| folded.contains(*k))
        .map(str::to_string)
        .collect()
}

/// Replays a record file into the broker: parses each line, drops skips
/// and keyword misses, publishes surviving documents in file order as
/// serialized [`Document`]s, and returns the published count. A malformed
/// line aborts with its line number; earlier lines stay published.
pub fn replay_produce(
    path: &Path,
    broker_addr: impl ToSocketAddrs,
    topic: &str,
    keywords: &KeywordSet,
) -> Result<u64, IngestError> {
    let reader = BufReader::new(File::open(path)?);
    let mut client = Client::connect(broker_addr).map_err(ClientError::Io)?;
    let mut published = 0u64;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = parse_record(&line).map_err(|e| match e {
            IngestError::MalformedRecord(msg) => {
                IngestError::MalformedRecord(format!("line {}: {msg}", idx + 1))
            }
            other => other,
        })?;
        let mut doc = match parsed {
            ParsedRecord::Tweet(doc) => doc,
            ParsedRecord::Skip(_) => continue,
        };
        doc.matched_keywords = keyword_filter(&doc.text, keywords);
        if doc.matched_keywords.is_empty() {
            continue;
        }
        let payload = serde_json::to_vec(&doc)
            .map_err(|e| IngestError::MalformedRecord(e.to_string()))?;
        client.publish(topic, &payload)?;
        published += 1;
    }
    Ok(published)
}

/// Fetches everything from `from_offset` on and deserializes each payload
/// into a [`Document`], preserving offset order.
pub fn consume_documents(
    broker_addr: impl ToSocketAddrs,
    topic: &str,
    from_offset: u64,
) -> Result<Vec<Document>, IngestError> {
    const BATCH: u64 = 500;
    let mut client = Client::connect(broker_addr).map_err(ClientError::Io)?;
    let mut docs = Vec::new();
    let mut offset = from_offset;
    loop {
        let batch = client.fetch(topic, offset, BATCH)?;
        let done = (batch.len() as u64) < BATCH;
        for (record_offset, payload) in batch {
            let doc: Document = serde_json::from_slice(&payload).map_err(|e| {
                IngestError::MalformedRecord(format!("offset {record_offset}: {e}"))
            })?;
            docs.push(doc);
            offset = record_offset + 1;
        }
        if done {
            return Ok(docs);
        }
    }
}
