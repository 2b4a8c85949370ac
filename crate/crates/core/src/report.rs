//! Machine-readable verification reports.
//!
//! The status trichotomy separates falsifiable mathematics from empirical
//! evidence: `Fail` is reserved for exact-identity violations (a wrong
//! partition-sum identity, a cross-check mismatch), while bound measurements
//! and fitted constants can only ever be `Reported`. A desk-scale run must
//! not present evidence about an asymptotic statement as proof, so no
//! empirical outcome is allowed to claim `Pass` on the statement itself;
//! it passes or fails only its own concrete, finite check.
//!
//! Determinism: identical config and toolkit version produce byte-identical
//! reports except for the one wall-clock field, which is segregated at the
//! top level so comparisons can drop exactly that field and nothing else.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::Result;

/// Schema version of the report JSON; bump on any field change.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Per-check outcome. `Fail` only for exact identities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    Reported,
}

/// One check inside a suite. Measured values are strings (exact "p/q" or
/// floats printed with enough digits to round-trip) in a sorted map, so the
/// serialization order never depends on insertion order.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub id: String,
    pub status: Status,
    pub measured: BTreeMap<String, String>,
    /// Tolerance or bound the measurement was compared against, when any.
    pub envelope: Option<String>,
    pub notes: String,
}

impl CheckRecord {
    pub fn new(id: &str, status: Status) -> Self {
        CheckRecord {
            id: id.to_string(),
            status,
            measured: BTreeMap::new(),
            envelope: None,
            notes: String::new(),
        }
    }

    pub fn pass(id: &str) -> Self {
        Self::new(id, Status::Pass)
    }

    pub fn fail(id: &str) -> Self {
        Self::new(id, Status::Fail)
    }

    pub fn reported(id: &str) -> Self {
        Self::new(id, Status::Reported)
    }

    pub fn with_measured(mut self, key: &str, value: impl ToString) -> Self {
        self.measured.insert(key.to_string(), value.to_string());
        self
    }

    pub fn with_envelope(mut self, envelope: impl ToString) -> Self {
        self.envelope = Some(envelope.to_string());
        self
    }

    pub fn with_notes(mut self, notes: impl ToString) -> Self {
        self.notes = notes.to_string();
        self
    }
}

/// A complete suite report.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub toolkit_version: String,
    pub suite: String,
    /// Echo of the effective configuration after flag/file merging.
    pub config: serde_json::Value,
    pub records: Vec<CheckRecord>,
    /// Seconds since the Unix epoch at creation; the only
    /// run-dependent field, excluded by `comparable_json`.
    pub timestamp_unix: u64,
}

impl VerificationReport {
    pub fn new(suite: &str, config: serde_json::Value) -> Self {
        VerificationReport {
            schema_version: REPORT_SCHEMA_VERSION,
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            suite: suite.to_string(),
            config,
            records: Vec::new(),
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn push(&mut self, record: CheckRecord) {
        self.records.push(record);
    }

    /// True when any record carries `Fail`; drives the exit-code contract
    /// (exit 0 iff no failure).
    pub fn has_failure(&self) -> bool {
        self.records.iter().any(|r| r.status == Status::Fail)
    }

    /// (pass, fail, reported) counts.
    pub fn counts(&self) -> (usize, usize, usize) {
        let mut c = (0, 0, 0);
        for r in &self.records {
            match r.status {
                Status::Pass => c.0 += 1,
                Status::Fail => c.1 += 1,
                Status::Reported => c.2 += 1,
            }
        }
        c
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    /// JSON with the timestamp removed: two runs of the same config and
    /// version compare byte-identical on this form.
    pub fn comparable_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        v.as_object_mut()
            .expect("report serializes to an object")
            .remove("timestamp_unix");
        let mut text = serde_json::to_string_pretty(&v)?;
        text.push('\n');
        Ok(text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(ts: u64) -> VerificationReport {
        let mut rep = VerificationReport::new("prefix", serde_json::json!({"k": 3}));
        rep.timestamp_unix = ts;
        rep.push(
            CheckRecord::pass("row-3-prefix")
                .with_measured("prefix_length", 199)
                .with_envelope("full row")
                .with_notes("no violation"),
        );
        rep.push(CheckRecord::reported("fitted-c1").with_measured("c1", "0.4907"));
        rep
    }

    #[test]
    fn status_serializes_kebab_case() {
        assert_eq!(serde_json::to_value(Status::Pass).unwrap(), "pass");
        assert_eq!(serde_json::to_value(Status::Fail).unwrap(), "fail");
        assert_eq!(serde_json::to_value(Status::Reported).unwrap(), "reported");
    }

    #[test]
    fn failure_flag_drives_exit_contract() {
        let mut rep = sample(5);
        assert!(!rep.has_failure());
        assert_eq!(rep.counts(), (1, 0, 1));
        rep.push(CheckRecord::fail("identity-check"));
        assert!(rep.has_failure());
        assert_eq!(rep.counts(), (1, 1, 1));
    }

    #[test]
    fn comparable_form_drops_only_the_timestamp() {
        let a = sample(1_000);
        let b = sample(2_000);
        assert_ne!(a.to_json().unwrap(), b.to_json().unwrap());
        assert_eq!(a.comparable_json().unwrap(), b.comparable_json().unwrap());

        // Everything else still present in the comparable form.
        let v: serde_json::Value =
            serde_json::from_str(&a.comparable_json().unwrap()).unwrap();
        assert_eq!(v["schema_version"], REPORT_SCHEMA_VERSION);
        assert_eq!(v["suite"], "prefix");
        assert_eq!(v["config"]["k"], 3);
        assert_eq!(v["records"][0]["status"], "pass");
        assert_eq!(v["records"][0]["measured"]["prefix_length"], "199");
        assert!(v.get("timestamp_unix").is_none());
    }

    #[test]
    fn measured_map_is_insertion_order_independent() {
        let r1 = CheckRecord::pass("x")
            .with_measured("alpha", 1)
            .with_measured("beta", 2);
        let r2 = CheckRecord::pass("x")
            .with_measured("beta", 2)
            .with_measured("alpha", 1);
        assert_eq!(
            serde_json::to_string(&r1).unwrap(),
            serde_json::to_string(&r2).unwrap()
        );
    }

    #[test]
    fn save_round_trips_as_json() {
        let dir = std::env::temp_dir().join("lcpow-report-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("report.json");
        sample(7).save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["timestamp_unix"], 7);
        assert_eq!(v["records"].as_array().unwrap().len(), 2);
        std::fs::remove_dir_all(&dir).ok();
    }
}
