//! Versioned JSON wrapper shared by proof traces and search reports.
//!
//! Only `metadata` may differ between two runs on identical inputs; the
//! payload is byte-stable. Output is compact since traces run to megabytes.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const KIND_PROOF_TRACE: &str = "proof-trace";
pub const KIND_SEARCH_REPORT: &str = "search-report";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub tool_version: String,
    pub generated_unix: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
}

impl Metadata {
    pub fn now(elapsed_ms: Option<u64>) -> Self {
        Metadata {
            tool: "dpn".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            generated_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            elapsed_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema_version: u32,
    pub kind: String,
    pub metadata: Metadata,
    pub payload: T,
}

#[derive(Deserialize)]
struct Header {
    schema_version: u32,
    kind: String,
}

impl<T: Serialize + DeserializeOwned> Envelope<T> {
    pub fn new(kind: &str, metadata: Metadata, payload: T) -> Self {
        Envelope {
            schema_version: SCHEMA_VERSION,
            kind: kind.to_string(),
            metadata,
            payload,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Parse an envelope of the given kind, checking the schema version first.
    pub fn from_json(bytes: &[u8], kind: &str) -> Result<Self> {
        let found = peek_kind(bytes)?;
        if found != kind {
            return Err(Error::Schema(format!("expected a {kind} artifact, found {found}")));
        }
        let mut de = serde_json::Deserializer::from_slice(bytes);
        de.disable_recursion_limit();
        let env = Envelope::deserialize(&mut de).map_err(|e| Error::Schema(e.to_string()))?;
        de.end().map_err(|e| Error::Schema(e.to_string()))?;
        Ok(env)
    }
}

/// Kind of an artifact after validating its schema version.
pub fn peek_kind(bytes: &[u8]) -> Result<String> {
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Err(Error::Schema("empty artifact".into()));
    }
    let mut de = serde_json::Deserializer::from_slice(bytes);
    de.disable_recursion_limit();
    let header = Header::deserialize(&mut de).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => Error::Schema(format!("missing envelope header: {e}")),
        _ => Error::Schema(format!("not JSON: {e}")),
    })?;
    if header.schema_version != SCHEMA_VERSION {
        return Err(Error::Schema(format!(
            "schema version {} is not supported (expected {SCHEMA_VERSION})",
            header.schema_version
        )));
    }
    Ok(header.kind)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_rejections() {
        let env = Envelope::new(KIND_SEARCH_REPORT, Metadata::now(Some(5)), vec![1u64, 2]);
        let json = env.to_json().unwrap();
        let back: Envelope<Vec<u64>> = Envelope::from_json(json.as_bytes(), KIND_SEARCH_REPORT).unwrap();
        assert_eq!(back, env);

        let wrong = Envelope::<Vec<u64>>::from_json(json.as_bytes(), KIND_PROOF_TRACE);
        assert!(matches!(wrong, Err(Error::Schema(_))));
        assert!(matches!(peek_kind(b""), Err(Error::Schema(_))));
        assert!(matches!(peek_kind(b"  \n"), Err(Error::Schema(_))));

        let bumped = json.replace("\"schema_version\":1", "\"schema_version\":2");
        let msg = peek_kind(bumped.as_bytes()).unwrap_err().to_string();
        assert!(msg.contains("schema version 2"), "{msg}");
    }
}
