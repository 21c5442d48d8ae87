//! Versioned JSON run reports with a content digest.
//!
//! The digest is the SHA-256 of the compact JSON of every field except
//! `timing_ms` and `digest`. Object keys are sorted, so equal runs give equal
//! digests and byte-identical output apart from timing.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub config: Value,
    pub records: Vec<Value>,
    pub pass: bool,
    pub anomalies: Vec<String>,
    pub timing_ms: u64,
    pub digest: String,
}

impl Report {
    pub fn new(command: &str, config: Value) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            config,
            records: Vec::new(),
            pass: true,
            anomalies: Vec::new(),
            timing_ms: 0,
            digest: String::new(),
        }
    }

    pub fn push<T: Serialize>(&mut self, record: &T) -> Result<()> {
        let v = serde_json::to_value(record).map_err(|e| Error::Invariant(e.to_string()))?;
        self.records.push(v);
        Ok(())
    }

    pub fn fail(&mut self, why: impl Into<String>) {
        self.pass = false;
        self.anomalies.push(why.into());
    }

    pub fn warn(&mut self, why: impl Into<String>) {
        self.anomalies.push(why.into());
    }

    pub fn compute_digest(&self) -> String {
        let body = json!({
            "schema_version": self.schema_version,
            "command": self.command,
            "config": self.config,
            "records": self.records,
            "pass": self.pass,
            "anomalies": self.anomalies,
        });
        hex::encode(Sha256::digest(body.to_string().as_bytes()))
    }

    /// Stamps timing and digest.
    pub fn finalize(mut self, timing_ms: u64) -> Self {
        self.timing_ms = timing_ms;
        self.digest = self.compute_digest();
        self
    }

    pub fn verify_digest(&self) -> bool {
        self.digest == self.compute_digest()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Report = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "schema version {} is not {SCHEMA_VERSION}",
                r.schema_version
            )));
        }
        if !r.verify_digest() {
            return Err(Error::Parse(format!("digest mismatch for {} report", r.command)));
        }
        Ok(r)
    }
}

/// Merges reports into one whose records are the inputs ordered by digest,
/// with duplicates dropped.
pub fn merge(reports: &[Report]) -> Report {
    let mut sorted: Vec<&Report> = reports.iter().collect();
    sorted.sort_by(|a, b| a.digest.cmp(&b.digest));
    sorted.dedup_by(|a, b| a.digest == b.digest);
    let mut out = Report::new(
        "report-merge",
        json!({ "sources": sorted.iter().map(|r| r.digest.clone()).collect::<Vec<_>>() }),
    );
    let mut timing = 0;
    for r in sorted {
        out.records.push(json!({
            "command": r.command,
            "config": r.config,
            "digest": r.digest,
            "pass": r.pass,
            "records": r.records,
        }));
        out.pass &= r.pass;
        out.anomalies
            .extend(r.anomalies.iter().map(|a| format!("{}: {a}", r.command)));
        timing += r.timing_ms;
    }
    out.finalize(timing)
}

/// JSON Schema of [`Report`].
pub fn json_schema() -> Value {
    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "Report",
        "type": "object",
        "required": ["schema_version", "command", "config", "records", "pass", "anomalies", "timing_ms", "digest"],
        "properties": {
            "schema_version": { "type": "integer", "const": SCHEMA_VERSION },
            "command": { "type": "string" },
            "config": { "type": "object" },
            "records": { "type": "array" },
            "pass": { "type": "boolean" },
            "anomalies": { "type": "array", "items": { "type": "string" } },
            "timing_ms": { "type": "integer", "minimum": 0, "description": "excluded from the digest" },
            "digest": { "type": "string", "pattern": "^[0-9a-f]{64}$" }
        },
        "additionalProperties": false
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(seed: u64, timing: u64) -> Report {
        let mut r = Report::new("demo", json!({ "seed": seed, "p": 5 }));
        r.push(&json!({ "x": 1 })).unwrap();
        r.finalize(timing)
    }

    #[test]
    fn digest_ignores_timing() {
        let (a, b) = (sample(1, 3), sample(1, 900));
        assert_eq!(a.digest, b.digest);
        assert_ne!(a.digest, sample(2, 3).digest);
        assert!(a.verify_digest());
    }

    #[test]
    fn json_round_trip() {
        let a = sample(1, 3);
        assert_eq!(Report::from_json(&a.to_json()).unwrap(), a);
        let tampered = a.to_json().replace("\"pass\": true", "\"pass\": false");
        assert!(Report::from_json(&tampered).is_err());
    }

    #[test]
    fn merge_is_order_independent() {
        let (a, b) = (sample(1, 1), sample(2, 2));
        let m1 = merge(&[a.clone(), b.clone()]);
        let m2 = merge(&[b, a.clone(), a]);
        assert_eq!(m1.digest, m2.digest);
        assert_eq!(m1.records.len(), 2);
        assert!(m1.pass);
    }
}
