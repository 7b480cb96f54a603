//! Command-line driver: flag parsing, config resolution, dispatch, record
//! and manifest output.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use tomo_core::designs::{Design, DesignKind, PauliLabel, Setting};
use tomo_core::sampling::sample_counts;
use tomo_core::states::{random_rank_r_state, DensityMatrix, RANK_TOL};
use tomo_core::{CMatrix, Complex64};

use crate::config::{
    parse_f64_list, resolve, resolve_list, resolve_opt, CommandConfig, ConfigMap, CountsConfig,
    FisherConfig, GlobalConfig, Manifest, StateSpec,
};
use crate::experiments::{
    coarse_grained_sweep, haar_concentration, min_eigenvalue_study, ml_vs_fisher,
    pauli_relative_error, settings_sweep, CoarseParams, HaarConcentrationParams, MinEigParams,
    MlVsFisherParams, PauliReParams, SweepParams,
};
use crate::formats::write_counts;
use crate::parallel::with_workers;
use crate::records::{
    fmt_float, write_csv, write_jsonl, DesignDescriptor, ExperimentRecord, RecordStatus,
    TOOLKIT_VERSION,
};

pub const OUT_DIR_ENV: &str = "TOMO_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "tomo-out";
const DEFAULT_SEED: u64 = 42;

#[derive(Parser, Debug)]
#[command(
    name = "tomo",
    version,
    about = "Fisher-information and maximum-likelihood studies of low-rank state tomography with reduced measurement settings"
)]
struct Cli {
    /// Flat `key = value` config file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: $TOMO_OUT_DIR, then ./tomo-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 means all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Master seed; every cell derives its own sub-seed from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Asymptotic MSE of random low-rank states over reduced Pauli designs.
    Sweep(SweepArgs),
    /// Maximum-likelihood MSE against the Fisher prediction.
    MleCompare(MleCompareArgs),
    /// Whitened-spectrum concentration for Haar-random basis designs.
    HaarConcentration(HaarConcentrationArgs),
    /// Relative error of reduced Pauli designs against the full-settings
    /// average information.
    PauliRe(PauliReArgs),
    /// Minimum whitened eigenvalue of the full-Pauli mean information at
    /// rotated equal-eigenvalue states.
    MinEig(MinEigArgs),
    /// Coarse-grained (Pauli-expectation) model against the fine model.
    CoarseCompare(CoarseCompareArgs),
    /// Fisher information and asymptotic MSE of one state/design pair.
    Fisher(FisherArgs),
    /// Sample synthetic outcome counts for a state and settings.
    Counts(CountsArgs),
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    n: Option<usize>,
    /// Rank grid, e.g. `1..5` or `1,3`.
    #[arg(long)]
    ranks: Option<String>,
    /// Setting-count grid, e.g. `20..81:10` or `20,81`.
    #[arg(long)]
    k: Option<String>,
    /// Total sample budget; repetitions per setting are `floor(N/k)`.
    #[arg(long = "N")]
    n_total: Option<u64>,
    /// Random states per rank.
    #[arg(long)]
    states: Option<usize>,
    /// Random designs per setting count.
    #[arg(long)]
    designs: Option<usize>,
    /// Sample settings with replacement.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    replacement: Option<bool>,
}

#[derive(Args, Debug)]
struct MleCompareArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    k: Option<String>,
    /// Repetitions per setting (mutually exclusive with --N).
    #[arg(long)]
    m: Option<u64>,
    /// Total budget, m = floor(N/k) (mutually exclusive with --m).
    #[arg(long = "N")]
    n_total: Option<u64>,
    /// Monte-Carlo replicates per design.
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    designs: Option<usize>,
}

#[derive(Args, Debug)]
struct HaarConcentrationArgs {
    /// Hilbert-space dimension.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    ranks: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    designs: Option<usize>,
}

#[derive(Args, Debug)]
struct PauliReArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    designs: Option<usize>,
}

#[derive(Args, Debug)]
struct MinEigArgs {
    /// Qubit-count grid, e.g. `4,5`.
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    ranks: Option<String>,
    /// States per (n, rank) cell.
    #[arg(long)]
    states: Option<usize>,
}

#[derive(Args, Debug)]
struct CoarseCompareArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    ranks: Option<String>,
    /// Observable-count grid (full set is `4^n - 1`).
    #[arg(long)]
    observables: Option<String>,
    #[arg(long = "N")]
    n_total: Option<u64>,
    #[arg(long)]
    states: Option<usize>,
    #[arg(long)]
    designs: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    replacement: Option<bool>,
    /// Emit matched-budget full fine-model records alongside.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    with_fine: Option<bool>,
}

#[derive(Args, Debug)]
struct FisherArgs {
    #[arg(long)]
    n: Option<usize>,
    /// Diagonal state entries, e.g. `1,0` (must have unit trace).
    #[arg(long)]
    state_diag: Option<String>,
    /// Seed for a random rank-r state (with --rank).
    #[arg(long)]
    state_seed: Option<u64>,
    /// Model rank (default: effective rank of the state).
    #[arg(long)]
    rank: Option<usize>,
    /// Comma-separated Pauli labels, e.g. `x,y` or `xz,zy`.
    #[arg(long)]
    settings: Option<String>,
    #[arg(long = "N")]
    n_total: Option<u64>,
    /// Print the asymptotic MSE `Tr(I^{-1}G)/N`.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    print_mse: Option<bool>,
}

#[derive(Args, Debug)]
struct CountsArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    state_diag: Option<String>,
    #[arg(long)]
    state_seed: Option<u64>,
    #[arg(long)]
    rank: Option<usize>,
    /// Comma-separated Pauli labels to measure.
    #[arg(long, alias = "setting")]
    settings: Option<String>,
    /// Repetitions per setting.
    #[arg(long)]
    m: Option<u64>,
}

/// Entry point; returns the process exit code.
pub fn run(argv: Vec<OsString>) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(AppError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            2
        }
        Err(AppError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

enum AppError {
    Config(String),
    Runtime(String),
}

impl From<tomo_core::Error> for AppError {
    fn from(e: tomo_core::Error) -> Self {
        AppError::Config(e.to_string())
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Runtime(e.to_string())
    }
}

fn execute(cli: Cli) -> Result<(), AppError> {
    let cfg = ConfigMap::load(cli.config.as_deref()).map_err(AppError::Config)?;
    let out_dir = cli
        .out
        .or_else(|| cfg.get("out").map(PathBuf::from))
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let workers = resolve(cli.workers, &cfg, "workers", 0).map_err(AppError::Config)?;
    let seed = resolve(cli.seed, &cfg, "seed", DEFAULT_SEED).map_err(AppError::Config)?;
    let globals = GlobalConfig {
        out_dir: out_dir.clone(),
        workers,
        seed,
    };

    let command = resolve_command(&cli.command, &cfg, seed).map_err(AppError::Config)?;
    std::fs::create_dir_all(&out_dir)?;

    let worker_opt = if workers == 0 { None } else { Some(workers) };
    match &command {
        CommandConfig::Fisher(fisher_cfg) => run_fisher(fisher_cfg, &globals, &command)?,
        CommandConfig::Counts(counts_cfg) => run_counts(counts_cfg, &globals, &command)?,
        _ => {
            let records = with_workers(worker_opt, || run_study(&command))?;
            write_outputs(&globals, &command, &records)?;
            print_summaries(&records);
        }
    }
    Ok(())
}

fn run_study(command: &CommandConfig) -> Result<Vec<ExperimentRecord>, tomo_core::Error> {
    match command {
        CommandConfig::Sweep(p) => settings_sweep(p),
        CommandConfig::MleCompare(p) => ml_vs_fisher(p),
        CommandConfig::HaarConcentration(p) => haar_concentration(p),
        CommandConfig::PauliRe(p) => pauli_relative_error(p),
        CommandConfig::MinEig(p) => min_eigenvalue_study(p),
        CommandConfig::CoarseCompare(p) => coarse_grained_sweep(p),
        CommandConfig::Fisher(_) | CommandConfig::Counts(_) => unreachable!(),
    }
}

fn resolve_command(
    command: &Command,
    cfg: &ConfigMap,
    seed: u64,
) -> Result<CommandConfig, String> {
    Ok(match command {
        Command::Sweep(a) => CommandConfig::Sweep(SweepParams {
            n: resolve(a.n, cfg, "n", 4)?,
            ranks: resolve_list(a.ranks.as_deref(), cfg, "ranks", "1..5")?,
            k_grid: resolve_list(a.k.as_deref(), cfg, "k", "20,30,40,55,81")?,
            states_per_rank: resolve(a.states, cfg, "states", 10)?,
            designs_per_k: resolve(a.designs, cfg, "designs", 10)?,
            n_total: resolve(a.n_total, cfg, "N", 8100)?,
            replacement: resolve(a.replacement, cfg, "replacement", false)?,
            seed,
        }),
        Command::MleCompare(a) => {
            let m_fixed = resolve_opt(a.m, cfg, "m")?;
            let n_total = resolve_opt(a.n_total, cfg, "N")?;
            let (m_fixed, n_total) = match (m_fixed, n_total) {
                (None, None) => (Some(100), None),
                pair => pair,
            };
            CommandConfig::MleCompare(MlVsFisherParams {
                n: resolve(a.n, cfg, "n", 2)?,
                rank: resolve(a.rank, cfg, "rank", 1)?,
                k_grid: resolve_list(a.k.as_deref(), cfg, "k", "4,6,9")?,
                designs_per_k: resolve(a.designs, cfg, "designs", 10)?,
                reps: resolve(a.reps, cfg, "reps", 30)?,
                m_fixed,
                n_total,
                seed,
            })
        }
        Command::HaarConcentration(a) => {
            CommandConfig::HaarConcentration(HaarConcentrationParams {
                d: resolve(a.d, cfg, "d", 16)?,
                ranks: resolve_list(a.ranks.as_deref(), cfg, "ranks", "1,2,3")?,
                k_grid: resolve_list(a.k.as_deref(), cfg, "k", "10,20,40,80,160")?,
                designs_per_k: resolve(a.designs, cfg, "designs", 1)?,
                seed,
            })
        }
        Command::PauliRe(a) => CommandConfig::PauliRe(PauliReParams {
            n: resolve(a.n, cfg, "n", 4)?,
            rank: resolve(a.rank, cfg, "rank", 1)?,
            k_grid: resolve_list(a.k.as_deref(), cfg, "k", "10,20,40,81")?,
            designs_per_k: resolve(a.designs, cfg, "designs", 100)?,
            seed,
        }),
        Command::MinEig(a) => CommandConfig::MinEig(MinEigParams {
            n_grid: resolve_list(a.n.as_deref(), cfg, "n", "4,5")?,
            ranks: resolve_list(a.ranks.as_deref(), cfg, "ranks", "1,2,3")?,
            states_per_cell: resolve(a.states, cfg, "states", 25)?,
            seed,
        }),
        Command::CoarseCompare(a) => CommandConfig::CoarseCompare(CoarseParams {
            n: resolve(a.n, cfg, "n", 4)?,
            ranks: resolve_list(a.ranks.as_deref(), cfg, "ranks", "1,2,3")?,
            counts_grid: resolve_list(a.observables.as_deref(), cfg, "observables", "50,100,255")?,
            states_per_rank: resolve(a.states, cfg, "states", 10)?,
            designs_per_count: resolve(a.designs, cfg, "designs", 10)?,
            n_total: resolve(a.n_total, cfg, "N", 8100)?,
            replacement: resolve(a.replacement, cfg, "replacement", false)?,
            with_fine: resolve(a.with_fine, cfg, "with-fine", true)?,
            seed,
        }),
        Command::Fisher(a) => {
            let n = resolve(a.n, cfg, "n", 1)?;
            CommandConfig::Fisher(FisherConfig {
                n,
                state: resolve_state(a.state_diag.as_deref(), a.state_seed, a.rank, cfg)?,
                rank: resolve_opt(a.rank, cfg, "rank")?,
                settings: settings_list(a.settings.as_deref(), cfg, "x,y,z")?,
                n_total: resolve(a.n_total, cfg, "N", 1)?,
                print_mse: resolve(a.print_mse, cfg, "print-mse", false)?,
            })
        }
        Command::Counts(a) => {
            let n = resolve(a.n, cfg, "n", 1)?;
            CommandConfig::Counts(CountsConfig {
                n,
                state: resolve_state(a.state_diag.as_deref(), a.state_seed, a.rank, cfg)?,
                settings: settings_list(a.settings.as_deref(), cfg, "z")?,
                m: resolve(a.m, cfg, "m", 100)?,
            })
        }
    })
}

fn resolve_state(
    state_diag: Option<&str>,
    state_seed: Option<u64>,
    rank: Option<usize>,
    cfg: &ConfigMap,
) -> Result<StateSpec, String> {
    let diag_text = state_diag
        .map(str::to_string)
        .or_else(|| cfg.get("state-diag").map(str::to_string));
    let seed = match state_seed {
        Some(s) => Some(s),
        None => resolve_opt::<u64>(None, cfg, "state-seed")?,
    };
    match (diag_text, seed) {
        (Some(_), Some(_)) => Err("give either --state-diag or --state-seed, not both".into()),
        (Some(text), None) => Ok(StateSpec::Diag {
            entries: parse_f64_list(&text)?,
        }),
        (None, Some(seed)) => Ok(StateSpec::Random {
            rank: rank
                .or(resolve_opt::<usize>(None, cfg, "rank")?)
                .ok_or("--state-seed needs --rank")?,
            seed,
        }),
        (None, None) => Err("a state is required: --state-diag or --state-seed".into()),
    }
}

fn settings_list(
    flag: Option<&str>,
    cfg: &ConfigMap,
    default: &str,
) -> Result<Vec<String>, String> {
    let text = flag
        .map(str::to_string)
        .or_else(|| cfg.get("settings").map(str::to_string))
        .unwrap_or_else(|| default.to_string());
    let out: Vec<String> = text
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if out.is_empty() {
        return Err("no settings given".into());
    }
    Ok(out)
}

fn build_state(n: usize, spec: &StateSpec) -> Result<DensityMatrix, AppError> {
    let d = 1usize << n;
    match spec {
        StateSpec::Diag { entries } => {
            if entries.len() != d {
                return Err(AppError::Config(format!(
                    "state diagonal has {} entries, n = {n} needs {d}",
                    entries.len()
                )));
            }
            let mut m = CMatrix::zeros(d, d);
            for (i, &x) in entries.iter().enumerate() {
                m[(i, i)] = Complex64::new(x, 0.0);
            }
            DensityMatrix::new(m).map_err(|e| AppError::Config(e.to_string()))
        }
        StateSpec::Random { rank, seed } => {
            random_rank_r_state(d, *rank, *seed).map_err(|e| AppError::Config(e.to_string()))
        }
    }
}

fn effective_rank(rho: &DensityMatrix) -> usize {
    rho.eigenvalues().iter().filter(|&&v| v > RANK_TOL).count()
}

fn pauli_design_from_labels(labels: &[String]) -> Result<Design, AppError> {
    let settings = labels
        .iter()
        .map(|text| PauliLabel::parse(text).map(Setting::Pauli))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| AppError::Config(e.to_string()))?;
    Design::new(DesignKind::Pauli, settings, true, 0)
        .map_err(|e| AppError::Config(e.to_string()))
}

fn run_fisher(
    cfg: &FisherConfig,
    globals: &GlobalConfig,
    command: &CommandConfig,
) -> Result<(), AppError> {
    let rho = build_state(cfg.n, &cfg.state)?;
    let rank = cfg.rank.unwrap_or_else(|| effective_rank(&rho));
    let design = pauli_design_from_labels(&cfg.settings)?;
    let (chart, weight) = crate::experiments::chart_and_weight(&rho, rank)?;
    let info = tomo_core::fisher::fisher_design(&chart, &design)?;
    let eigs = info.eigenvalues();
    let mse = tomo_core::fisher::asymptotic_mse(&info, &weight, cfg.n_total)?;

    let mut record = ExperimentRecord {
        experiment: "fisher".to_string(),
        n: Some(cfg.n),
        d: rho.dim(),
        r: rank,
        state_index: None,
        state_seed: match cfg.state {
            StateSpec::Random { seed, .. } => Some(seed),
            StateSpec::Diag { .. } => None,
        },
        design_index: None,
        design: DesignDescriptor::of(&design),
        m: None,
        n_total: Some(cfg.n_total),
        metric: "asymptotic_mse".to_string(),
        value: None,
        status: RecordStatus::Ok,
        aux: BTreeMap::new(),
        version: TOOLKIT_VERSION.to_string(),
    };
    record.aux.insert(
        "min_info_eig".to_string(),
        serde_json::Value::from(eigs[0]),
    );
    record.aux.insert(
        "max_info_eig".to_string(),
        serde_json::Value::from(eigs[eigs.len() - 1]),
    );
    match mse {
        tomo_core::fisher::DesignMse::Value(v) => {
            record.value = Some(v);
            record.aux.insert(
                "tr_inv_g".to_string(),
                serde_json::Value::from(v * cfg.n_total as f64),
            );
        }
        tomo_core::fisher::DesignMse::NonIdentifiable { .. } => {
            record.status = RecordStatus::NonIdentifiable;
        }
    }

    println!(
        "fisher: d={} r={rank} D={} k={} min_info_eig={} max_info_eig={}",
        rho.dim(),
        chart.n_params(),
        design.k(),
        fmt_float(eigs[0]),
        fmt_float(eigs[eigs.len() - 1]),
    );
    if cfg.print_mse {
        match record.value {
            Some(v) => println!("mse = {}", fmt_float(v)),
            None => println!("mse = non-identifiable (min_info_eig = {})", fmt_float(eigs[0])),
        }
    }
    write_outputs(globals, command, std::slice::from_ref(&record))?;
    Ok(())
}

fn run_counts(
    cfg: &CountsConfig,
    globals: &GlobalConfig,
    command: &CommandConfig,
) -> Result<(), AppError> {
    let rho = build_state(cfg.n, &cfg.state)?;
    let design = pauli_design_from_labels(&cfg.settings)?;
    let table = sample_counts(&rho, &design, cfg.m, globals.seed)?;
    let (csv_path, meta_path) = write_counts(&globals.out_dir, "counts", &table)?;
    write_manifest(globals, command)?;
    for (i, row) in table.counts().iter().enumerate() {
        let cells: Vec<String> = row.iter().map(u64::to_string).collect();
        println!("setting {i} ({}): {}", cfg.settings[i], cells.join(","));
    }
    println!(
        "wrote {} and {}",
        csv_path.display(),
        meta_path.display()
    );
    Ok(())
}

fn write_manifest(globals: &GlobalConfig, command: &CommandConfig) -> Result<(), AppError> {
    let manifest = Manifest {
        version: TOOLKIT_VERSION.to_string(),
        created_unix_seconds: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        globals: globals.clone(),
        command: command.clone(),
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(globals.out_dir.join("manifest.json"), text)?;
    Ok(())
}

fn write_outputs(
    globals: &GlobalConfig,
    command: &CommandConfig,
    records: &[ExperimentRecord],
) -> Result<(), AppError> {
    write_jsonl(&globals.out_dir.join("records.jsonl"), records)?;
    if let Some(first) = records.first() {
        let csv_name = format!("{}.csv", first.experiment);
        write_csv(&globals.out_dir.join(csv_name), records)?;
    }
    write_manifest(globals, command)?;
    Ok(())
}

fn print_summaries(records: &[ExperimentRecord]) {
    let mut groups: BTreeMap<(String, usize, usize), (usize, usize, f64, usize)> = BTreeMap::new();
    for record in records {
        let entry = groups
            .entry((record.experiment.clone(), record.r, record.design.k))
            .or_insert((0, 0, 0.0, 0));
        entry.0 += 1;
        match record.value {
            Some(v) => {
                entry.2 += v;
                entry.3 += 1;
            }
            None => entry.1 += 1,
        }
    }
    for ((experiment, r, k), (total, non_id, sum, n_vals)) in groups {
        let mean = if n_vals > 0 {
            format!("mean {} = {}", records[0].metric, fmt_float(sum / n_vals as f64))
        } else {
            "no identifiable records".to_string()
        };
        println!("{experiment} r={r} k={k}: {total} records ({non_id} non-identifiable), {mean}");
    }
}

/// Used by `main`.
pub fn main_entry() -> i32 {
    run(std::env::args_os().collect())
}
