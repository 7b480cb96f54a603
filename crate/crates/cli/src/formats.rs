//! Design and counts file formats.
//!
//! A design serializes to one JSON object
//! `{kind, n|d, seed, replacement, settings: [...]}` where settings are
//! label strings (`"xyzz"`, `"x0zz"`) or row-major unitaries with `[re, im]`
//! entries. Counts tables serialize to a CSV with columns
//! `setting_index,outcome_index,count` plus a JSON sidecar carrying the
//! design, `m` and the sampling seed.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tomo_core::designs::{Design, DesignKind, ObservableLabel, PauliLabel, Setting};
use tomo_core::sampling::CountsTable;
use tomo_core::{CMatrix, Complex64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SettingJson {
    Label(String),
    Unitary(Vec<Vec<[f64; 2]>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignJson {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    pub seed: u64,
    pub replacement: bool,
    pub settings: Vec<SettingJson>,
}

pub fn design_to_json(design: &Design) -> DesignJson {
    let settings = design
        .settings()
        .iter()
        .map(|setting| match setting {
            Setting::Pauli(label) => SettingJson::Label(label.to_string()),
            Setting::Observable(label) => SettingJson::Label(label.to_string()),
            Setting::Basis(u) => SettingJson::Unitary(
                (0..u.nrows())
                    .map(|i| (0..u.ncols()).map(|j| [u[(i, j)].re, u[(i, j)].im]).collect())
                    .collect(),
            ),
        })
        .collect();
    let n_qubits = match design.kind() {
        DesignKind::Pauli | DesignKind::Coarse => Some(design.dim().trailing_zeros() as usize),
        DesignKind::Haar => None,
    };
    DesignJson {
        kind: crate::records::design_kind_name(design.kind()).to_string(),
        n: n_qubits,
        d: match design.kind() {
            DesignKind::Haar => Some(design.dim()),
            _ => None,
        },
        seed: design.seed(),
        replacement: design.replacement(),
        settings,
    }
}

pub fn design_from_json(json: &DesignJson) -> Result<Design, String> {
    let parse_err = |e: tomo_core::Error| e.to_string();
    let (kind, settings) = match json.kind.as_str() {
        "pauli" => {
            let settings = json
                .settings
                .iter()
                .map(|s| match s {
                    SettingJson::Label(text) => {
                        PauliLabel::parse(text).map(Setting::Pauli).map_err(parse_err)
                    }
                    SettingJson::Unitary(_) => Err("pauli designs use labels".to_string()),
                })
                .collect::<Result<Vec<_>, _>>()?;
            (DesignKind::Pauli, settings)
        }
        "coarse" => {
            let settings = json
                .settings
                .iter()
                .map(|s| match s {
                    SettingJson::Label(text) => ObservableLabel::parse(text)
                        .map(Setting::Observable)
                        .map_err(parse_err),
                    SettingJson::Unitary(_) => Err("coarse designs use labels".to_string()),
                })
                .collect::<Result<Vec<_>, _>>()?;
            (DesignKind::Coarse, settings)
        }
        "haar" => {
            let settings = json
                .settings
                .iter()
                .map(|s| match s {
                    SettingJson::Unitary(rows) => {
                        let d = rows.len();
                        if rows.iter().any(|row| row.len() != d) {
                            return Err("unitary rows have inconsistent length".to_string());
                        }
                        let mat = CMatrix::from_fn(d, d, |i, j| {
                            Complex64::new(rows[i][j][0], rows[i][j][1])
                        });
                        Ok(Setting::Basis(mat))
                    }
                    SettingJson::Label(_) => Err("haar designs use unitaries".to_string()),
                })
                .collect::<Result<Vec<_>, _>>()?;
            (DesignKind::Haar, settings)
        }
        other => return Err(format!("unknown design kind `{other}`")),
    };
    Design::new(kind, settings, json.replacement, json.seed).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsSidecar {
    pub design: DesignJson,
    pub m: u64,
    pub seed: u64,
}

pub fn counts_csv_string(table: &CountsTable) -> String {
    let mut out = String::from("setting_index,outcome_index,count\n");
    for (i, row) in table.counts().iter().enumerate() {
        for (o, &c) in row.iter().enumerate() {
            out.push_str(&format!("{i},{o},{c}\n"));
        }
    }
    out
}

/// Writes `<stem>.csv` and `<stem>.meta.json`; returns both paths.
pub fn write_counts(dir: &Path, stem: &str, table: &CountsTable) -> std::io::Result<(PathBuf, PathBuf)> {
    let csv_path = dir.join(format!("{stem}.csv"));
    let meta_path = dir.join(format!("{stem}.meta.json"));
    std::fs::File::create(&csv_path)?.write_all(counts_csv_string(table).as_bytes())?;
    let sidecar = CountsSidecar {
        design: design_to_json(table.design()),
        m: table.m(),
        seed: table.seed(),
    };
    let mut meta = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    meta.push('\n');
    std::fs::File::create(&meta_path)?.write_all(meta.as_bytes())?;
    Ok((csv_path, meta_path))
}
