//! Machine-readable run reports.
//!
//! Field order is declaration order, floats print in shortest round-trip
//! form, and nothing time- or host-dependent is recorded, so equal configs
//! produce byte-equal payloads.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub measured: Option<f64>,
    pub bound: Option<f64>,
    pub pass: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectionReport {
    pub name: &'static str,
    pub pass: bool,
    pub records: Vec<CheckRecord>,
}

impl SectionReport {
    pub fn from_records(name: &'static str, records: Vec<CheckRecord>) -> Self {
        let pass = records.iter().all(|r| r.pass);
        SectionReport { name, pass, records }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub version: &'static str,
    pub config_digest: String,
    pub determinism: &'static str,
    pub sections: Vec<SectionReport>,
}

impl RunReport {
    pub fn new(config_digest: String, sections: Vec<SectionReport>) -> Self {
        RunReport {
            version: env!("CARGO_PKG_VERSION"),
            config_digest,
            determinism: "payload is a pure function of the config bytes; \
                          no timestamps, seeds, or thread counts are recorded",
            sections,
        }
    }

    pub fn pass(&self) -> bool {
        self.sections.iter().all(|s| s.pass)
    }

    pub fn first_failure(&self) -> Option<(&SectionReport, &CheckRecord)> {
        self.sections
            .iter()
            .flat_map(|s| s.records.iter().filter(|r| !r.pass).map(move |r| (s, r)))
            .next()
    }

    pub fn to_json_bytes(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("report serializes");
        bytes.push(b'\n');
        bytes
    }
}

/// 0 when every check passed, 3 when a mathematical bound was violated.
pub fn outcome_exit_code(report: &RunReport) -> u8 {
    if report.pass() {
        0
    } else {
        3
    }
}
