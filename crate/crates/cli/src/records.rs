//! Experiment records and their on-disk forms: JSON-lines plus a flattened
//! CSV per experiment kind.
//!
//! Record files are a pure function of the run configuration: floats are
//! serialized in round-trip form, map keys are sorted, row order is the
//! canonical grid order, and nothing time-dependent is written here (the
//! run manifest carries the timestamp). Re-running a manifest reproduces
//! the files byte for byte.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tomo_core::designs::{Design, DesignKind};

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Ok,
    NonIdentifiable,
}

impl RecordStatus {
    fn as_str(&self) -> &'static str {
        match self {
            RecordStatus::Ok => "ok",
            RecordStatus::NonIdentifiable => "non_identifiable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignDescriptor {
    pub kind: String,
    pub k: usize,
    pub seed: u64,
    pub replacement: bool,
}

impl DesignDescriptor {
    pub fn of(design: &Design) -> Self {
        DesignDescriptor {
            kind: design_kind_name(design.kind()).to_string(),
            k: design.k(),
            seed: design.seed(),
            replacement: design.replacement(),
        }
    }
}

pub fn design_kind_name(kind: DesignKind) -> &'static str {
    match kind {
        DesignKind::Pauli => "pauli",
        DesignKind::Haar => "haar",
        DesignKind::Coarse => "coarse",
    }
}

/// One grid cell result. `value` is `None` exactly when the design was
/// flagged non-identifiable; kind-specific diagnostics go into `aux`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub experiment: String,
    pub n: Option<usize>,
    pub d: usize,
    pub r: usize,
    pub state_index: Option<usize>,
    pub state_seed: Option<u64>,
    pub design_index: Option<usize>,
    pub design: DesignDescriptor,
    pub m: Option<u64>,
    pub n_total: Option<u64>,
    pub metric: String,
    pub value: Option<f64>,
    pub status: RecordStatus,
    pub aux: BTreeMap<String, serde_json::Value>,
    pub version: String,
}

/// 17 significant digits, enough for exact `f64` round trips.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn json_value_to_cell(value: &serde_json::Value) -> String {
    match value {
        serde_json::Value::Null => String::new(),
        serde_json::Value::Bool(b) => b.to_string(),
        serde_json::Value::Number(num) => {
            if let Some(i) = num.as_i64() {
                i.to_string()
            } else if let Some(u) = num.as_u64() {
                u.to_string()
            } else {
                fmt_float(num.as_f64().unwrap_or(f64::NAN))
            }
        }
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Array(items) => items
            .iter()
            .map(json_value_to_cell)
            .collect::<Vec<_>>()
            .join(";"),
        other => other.to_string(),
    }
}

pub fn jsonl_string(records: &[ExperimentRecord]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// Shared leading columns, then the sorted union of aux keys.
pub const CSV_FIXED_COLUMNS: [&str; 16] = [
    "experiment",
    "n",
    "d",
    "r",
    "state_index",
    "state_seed",
    "design_index",
    "design_kind",
    "k",
    "design_seed",
    "replacement",
    "m",
    "n_total",
    "metric",
    "value",
    "status",
];

pub fn csv_string(records: &[ExperimentRecord]) -> String {
    let mut aux_keys: BTreeSet<&str> = BTreeSet::new();
    for record in records {
        for key in record.aux.keys() {
            aux_keys.insert(key);
        }
    }
    let mut out = String::new();
    out.push_str(&CSV_FIXED_COLUMNS.join(","));
    for key in &aux_keys {
        out.push(',');
        out.push_str(key);
    }
    out.push('\n');
    let opt = |x: Option<String>| x.unwrap_or_default();
    for record in records {
        let mut cells: Vec<String> = vec![
            record.experiment.clone(),
            opt(record.n.map(|v| v.to_string())),
            record.d.to_string(),
            record.r.to_string(),
            opt(record.state_index.map(|v| v.to_string())),
            opt(record.state_seed.map(|v| v.to_string())),
            opt(record.design_index.map(|v| v.to_string())),
            record.design.kind.clone(),
            record.design.k.to_string(),
            record.design.seed.to_string(),
            record.design.replacement.to_string(),
            opt(record.m.map(|v| v.to_string())),
            opt(record.n_total.map(|v| v.to_string())),
            record.metric.clone(),
            opt(record.value.map(fmt_float)),
            record.status.as_str().to_string(),
        ];
        for key in &aux_keys {
            cells.push(
                record
                    .aux
                    .get(*key)
                    .map(json_value_to_cell)
                    .unwrap_or_default(),
            );
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_jsonl(path: &Path, records: &[ExperimentRecord]) -> std::io::Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(jsonl_string(records).as_bytes())
}

pub fn write_csv(path: &Path, records: &[ExperimentRecord]) -> std::io::Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(csv_string(records).as_bytes())
}

pub fn read_jsonl(path: &Path) -> std::io::Result<Vec<ExperimentRecord>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .map(|line| {
            serde_json::from_str(line)
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
        })
        .collect()
}
