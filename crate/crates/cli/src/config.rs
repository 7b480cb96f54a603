//! Run configuration: flag/config-file resolution, grid parsing and the
//! run manifest.
//!
//! Precedence is flags, then the `--config` file, then built-in defaults.
//! The config file is flat UTF-8 `key = value` text mirroring the long
//! flag names; `#` starts a comment.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::experiments::{
    CoarseParams, HaarConcentrationParams, MinEigParams, MlVsFisherParams, PauliReParams,
    SweepParams,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalConfig {
    pub out_dir: PathBuf,
    /// 0 uses the default worker pool (all cores).
    pub workers: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StateSpec {
    Diag { entries: Vec<f64> },
    Random { rank: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherConfig {
    pub n: usize,
    pub state: StateSpec,
    /// Model rank; defaults to the effective rank of the state.
    pub rank: Option<usize>,
    pub settings: Vec<String>,
    pub n_total: u64,
    pub print_mse: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsConfig {
    pub n: usize,
    pub state: StateSpec,
    pub settings: Vec<String>,
    pub m: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum CommandConfig {
    Sweep(SweepParams),
    MleCompare(MlVsFisherParams),
    HaarConcentration(HaarConcentrationParams),
    PauliRe(PauliReParams),
    MinEig(MinEigParams),
    CoarseCompare(CoarseParams),
    Fisher(FisherConfig),
    Counts(CountsConfig),
}

/// Everything needed to reproduce a run, written next to the records.
/// Only `created_unix_seconds` varies between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub created_unix_seconds: u64,
    pub globals: GlobalConfig,
    pub command: CommandConfig,
}

/// Parsed `key = value` config file.
#[derive(Debug, Default, Clone)]
pub struct ConfigMap(BTreeMap<String, String>);

impl ConfigMap {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let Some(path) = path else {
            return Ok(ConfigMap::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(format!(
                    "{}:{}: expected `key = value`, got `{raw}`",
                    path.display(),
                    lineno + 1
                ));
            };
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(ConfigMap(map))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }
}

pub fn resolve<T: FromStr>(
    flag: Option<T>,
    cfg: &ConfigMap,
    key: &str,
    default: T,
) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    if let Some(v) = flag {
        return Ok(v);
    }
    match cfg.get(key) {
        Some(text) => text
            .parse::<T>()
            .map_err(|e| format!("config key `{key}`: {e}")),
        None => Ok(default),
    }
}

pub fn resolve_opt<T: FromStr>(
    flag: Option<T>,
    cfg: &ConfigMap,
    key: &str,
) -> Result<Option<T>, String>
where
    T::Err: std::fmt::Display,
{
    if flag.is_some() {
        return Ok(flag);
    }
    match cfg.get(key) {
        Some(text) => text
            .parse::<T>()
            .map(Some)
            .map_err(|e| format!("config key `{key}`: {e}")),
        None => Ok(None),
    }
}

/// Grid syntax: comma-separated items, each `a`, `a..b` (inclusive) or
/// `a..b:step`.
pub fn parse_usize_list(text: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for item in text.split(',') {
        let item = item.trim();
        if item.is_empty() {
            return Err(format!("empty item in list `{text}`"));
        }
        match item.split_once("..") {
            None => out.push(
                item.parse::<usize>()
                    .map_err(|e| format!("`{item}`: {e}"))?,
            ),
            Some((start, rest)) => {
                let (end, step) = match rest.split_once(':') {
                    None => (rest, 1usize),
                    Some((end, step)) => (
                        end,
                        step.parse::<usize>().map_err(|e| format!("`{item}`: {e}"))?,
                    ),
                };
                let start: usize = start.parse().map_err(|e| format!("`{item}`: {e}"))?;
                let end: usize = end.parse().map_err(|e| format!("`{item}`: {e}"))?;
                if step == 0 || end < start {
                    return Err(format!("bad range `{item}`"));
                }
                let mut v = start;
                while v <= end {
                    out.push(v);
                    v += step;
                }
            }
        }
    }
    if out.is_empty() {
        return Err(format!("empty list `{text}`"));
    }
    Ok(out)
}

pub fn parse_f64_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|item| {
            item.trim()
                .parse::<f64>()
                .map_err(|e| format!("`{item}`: {e}"))
        })
        .collect()
}

pub fn resolve_list(
    flag: Option<&str>,
    cfg: &ConfigMap,
    key: &str,
    default: &str,
) -> Result<Vec<usize>, String> {
    let text = flag
        .map(str::to_string)
        .or_else(|| cfg.get(key).map(str::to_string))
        .unwrap_or_else(|| default.to_string());
    parse_usize_list(&text).map_err(|e| format!("`{key}`: {e}"))
}
