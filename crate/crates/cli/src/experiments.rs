//! The six simulation studies, each a pure function from parameters to a
//! canonical, reproducible record vector.
//!
//! Seeds: every cell of a study grid derives its own seed from the master
//! seed and its coordinates via `derive_seed` chains, so a record is a
//! function of (study, parameters, master seed) alone — splitting cells
//! across workers cannot change any result.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use tomo_core::designs::{sample_coarse_observables, sample_settings, Design};
use tomo_core::fisher::{
    asymptotic_mse, fisher_design, mean_haar_fisher, relative_error, weight_matrix, whiten,
    DesignMse, FisherMatrix,
};
use tomo_core::mle::{ml_relative_error, mse_monte_carlo, MleOptions};
use tomo_core::rng::derive_seed;
use tomo_core::states::{
    eigen_chart, equal_eigenvalue_state, haar_unitary, random_rank_r_state, LocalChart,
};
use tomo_core::{Error, Result};

use crate::parallel::ordered_par_map;
use crate::records::{DesignDescriptor, ExperimentRecord, RecordStatus, TOOLKIT_VERSION};

fn chain_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(master, |s, &i| derive_seed(s, i))
}

fn aux_f64(x: f64) -> serde_json::Value {
    serde_json::Value::from(x)
}

fn collect_cells(cells: Vec<Result<Vec<ExperimentRecord>>>) -> Result<Vec<ExperimentRecord>> {
    let mut out = Vec::new();
    for cell in cells {
        out.extend(cell?);
    }
    Ok(out)
}

fn repetitions_for(n_total: u64, k: usize) -> Result<u64> {
    let m = n_total / k as u64;
    if m == 0 {
        return Err(Error::InvalidParameter {
            name: "N (must allow at least one repetition per setting)",
            value: n_total as f64,
        });
    }
    Ok(m)
}

/// Fills value/status/aux from an MSE outcome; `tr_inv_g` is the
/// budget-free trace, `value` the budgeted MSE.
fn apply_mse(
    record: &mut ExperimentRecord,
    mse: DesignMse,
    n_eff: u64,
) {
    match mse {
        DesignMse::Value(v) => {
            record.value = Some(v);
            record
                .aux
                .insert("tr_inv_g".to_string(), aux_f64(v * n_eff as f64));
        }
        DesignMse::NonIdentifiable { min_eig } => {
            record.status = RecordStatus::NonIdentifiable;
            record
                .aux
                .insert("min_info_eig".to_string(), aux_f64(min_eig));
        }
    }
}

fn base_record(experiment: &str, d: usize, r: usize, design: &Design) -> ExperimentRecord {
    ExperimentRecord {
        experiment: experiment.to_string(),
        n: None,
        d,
        r,
        state_index: None,
        state_seed: None,
        design_index: None,
        design: DesignDescriptor::of(design),
        m: None,
        n_total: None,
        metric: String::new(),
        value: None,
        status: RecordStatus::Ok,
        aux: BTreeMap::new(),
        version: TOOLKIT_VERSION.to_string(),
    }
}

// ---------------------------------------------------------------------------
// settings sweep (asymptotic MSE over reduced Pauli designs)

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepParams {
    pub n: usize,
    pub ranks: Vec<usize>,
    pub k_grid: Vec<usize>,
    pub states_per_rank: usize,
    pub designs_per_k: usize,
    pub n_total: u64,
    pub replacement: bool,
    pub seed: u64,
}

pub fn settings_sweep(p: &SweepParams) -> Result<Vec<ExperimentRecord>> {
    let d = 1usize << p.n;
    validate_grid(&p.ranks, &p.k_grid, d, 3usize.pow(p.n as u32), p.replacement)?;
    let cells = p.ranks.len() * p.states_per_rank;
    let results = ordered_par_map(cells, |cell| -> Result<Vec<ExperimentRecord>> {
        let (ri, si) = (cell / p.states_per_rank, cell % p.states_per_rank);
        let r = p.ranks[ri];
        let state_seed = chain_seed(p.seed, &[1, ri as u64, si as u64]);
        let rho = random_rank_r_state(d, r, state_seed)?;
        let chart = eigen_chart(&rho, r)?;
        let g = weight_matrix(&chart);
        let mut records = Vec::new();
        for (ki, &k) in p.k_grid.iter().enumerate() {
            let m = repetitions_for(p.n_total, k)?;
            let n_eff = m * k as u64;
            for di in 0..p.designs_per_k {
                let design_seed = chain_seed(p.seed, &[2, ri as u64, si as u64, ki as u64, di as u64]);
                let design = sample_settings(p.n, k, p.replacement, design_seed)?;
                let info = fisher_design(&chart, &design)?;
                let mse = asymptotic_mse(&info, &g, n_eff)?;
                let mut record = base_record("settings_sweep", d, r, &design);
                record.n = Some(p.n);
                record.state_index = Some(si);
                record.state_seed = Some(state_seed);
                record.design_index = Some(di);
                record.m = Some(m);
                record.n_total = Some(n_eff);
                record.metric = "asymptotic_mse".to_string();
                apply_mse(&mut record, mse, n_eff);
                records.push(record);
            }
        }
        Ok(records)
    });
    collect_cells(results)
}

// ---------------------------------------------------------------------------
// maximum likelihood vs Fisher prediction

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlVsFisherParams {
    pub n: usize,
    pub rank: usize,
    pub k_grid: Vec<usize>,
    pub designs_per_k: usize,
    pub reps: usize,
    /// Fixed repetitions per setting; mutually exclusive with `n_total`.
    pub m_fixed: Option<u64>,
    /// Fixed total budget, `m = floor(N/k)`; mutually exclusive with `m_fixed`.
    pub n_total: Option<u64>,
    pub seed: u64,
}

pub fn ml_vs_fisher(p: &MlVsFisherParams) -> Result<Vec<ExperimentRecord>> {
    let d = 1usize << p.n;
    validate_grid(
        &[p.rank],
        &p.k_grid,
        d,
        3usize.pow(p.n as u32),
        false,
    )?;
    if p.m_fixed.is_some() == p.n_total.is_some() {
        return Err(Error::InvalidParameter {
            name: "exactly one of m / N",
            value: f64::NAN,
        });
    }
    if p.reps < 2 {
        return Err(Error::InvalidParameter {
            name: "reps",
            value: p.reps as f64,
        });
    }
    let state_seed = chain_seed(p.seed, &[3]);
    let rho = random_rank_r_state(d, p.rank, state_seed)?;
    let chart = eigen_chart(&rho, p.rank)?;
    let g = weight_matrix(&chart);
    let cells = p.k_grid.len() * p.designs_per_k;
    let results = ordered_par_map(cells, |cell| -> Result<Vec<ExperimentRecord>> {
        let (ki, di) = (cell / p.designs_per_k, cell % p.designs_per_k);
        let k = p.k_grid[ki];
        let m = match p.m_fixed {
            Some(m) => m,
            None => repetitions_for(p.n_total.unwrap(), k)?,
        };
        let n_eff = m * k as u64;
        let design_seed = chain_seed(p.seed, &[4, ki as u64, di as u64]);
        let design = sample_settings(p.n, k, false, design_seed)?;
        let info = fisher_design(&chart, &design)?;
        let mc_seed = chain_seed(p.seed, &[5, ki as u64, di as u64]);
        let mc = mse_monte_carlo(&rho, &design, m, p.reps, MleOptions::new(p.rank), mc_seed)?;

        let mut record = base_record("ml_vs_fisher", d, p.rank, &design);
        record.n = Some(p.n);
        record.state_seed = Some(state_seed);
        record.design_index = Some(di);
        record.m = Some(m);
        record.n_total = Some(n_eff);
        record.metric = "ml_relative_error".to_string();
        record
            .aux
            .insert("ml_mse_mean".to_string(), aux_f64(mc.mean));
        record
            .aux
            .insert("ml_mse_stderr".to_string(), aux_f64(mc.std_error));
        record.aux.insert(
            "ml_errors".to_string(),
            serde_json::Value::from(mc.per_replicate.clone()),
        );
        record.aux.insert(
            "failed_replicates".to_string(),
            serde_json::Value::from(mc.failures.len() as u64),
        );
        match asymptotic_mse(&info, &g, n_eff)? {
            DesignMse::Value(fisher_mse) => {
                record
                    .aux
                    .insert("fisher_mse".to_string(), aux_f64(fisher_mse));
                record.value = Some(ml_relative_error(&mc, &info, &g, n_eff)?);
            }
            DesignMse::NonIdentifiable { min_eig } => {
                record.status = RecordStatus::NonIdentifiable;
                record
                    .aux
                    .insert("min_info_eig".to_string(), aux_f64(min_eig));
            }
        }
        Ok(vec![record])
    });
    collect_cells(results)
}

// ---------------------------------------------------------------------------
// Haar-design concentration (whitened spectra and relative error)

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HaarConcentrationParams {
    pub d: usize,
    pub ranks: Vec<usize>,
    pub k_grid: Vec<usize>,
    pub designs_per_k: usize,
    pub seed: u64,
}

pub fn haar_concentration(p: &HaarConcentrationParams) -> Result<Vec<ExperimentRecord>> {
    if p.ranks.is_empty() || p.k_grid.is_empty() || p.designs_per_k == 0 {
        return Err(Error::InvalidParameter {
            name: "empty grid",
            value: f64::NAN,
        });
    }
    let results = ordered_par_map(p.ranks.len(), |ri| -> Result<Vec<ExperimentRecord>> {
        let r = p.ranks[ri];
        let rho = equal_eigenvalue_state(p.d, r, None)?;
        let chart = eigen_chart(&rho, r)?;
        let g = weight_matrix(&chart);
        let mean = mean_haar_fisher(p.d, r)?;
        let mut records = Vec::new();
        for (ki, &k) in p.k_grid.iter().enumerate() {
            for di in 0..p.designs_per_k {
                let design_seed = chain_seed(p.seed, &[6, ri as u64, ki as u64, di as u64]);
                let design = tomo_core::designs::haar_basis_design(p.d, k, design_seed)?;
                let info = fisher_design(&chart, &design)?;
                let whitened = whiten(&info, &g)?;
                let re = relative_error(&info, &mean, &g)?;

                let mut record = base_record("haar_concentration", p.d, r, &design);
                record.design_index = Some(di);
                record.metric = "relative_error".to_string();
                record.aux.insert(
                    "whitened_spectrum".to_string(),
                    serde_json::Value::from(whitened.matrix.eigenvalues()),
                );
                record
                    .aux
                    .insert("min_whitened_eig".to_string(), aux_f64(whitened.min_eig));
                record
                    .aux
                    .insert("max_whitened_eig".to_string(), aux_f64(whitened.max_eig));
                match re {
                    DesignMse::Value(v) => record.value = Some(v),
                    DesignMse::NonIdentifiable { min_eig } => {
                        record.status = RecordStatus::NonIdentifiable;
                        record
                            .aux
                            .insert("min_info_eig".to_string(), aux_f64(min_eig));
                    }
                }
                records.push(record);
            }
        }
        Ok(records)
    });
    collect_cells(results)
}

// ---------------------------------------------------------------------------
// Pauli relative error against the full-settings average information

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliReParams {
    pub n: usize,
    pub rank: usize,
    pub k_grid: Vec<usize>,
    pub designs_per_k: usize,
    pub seed: u64,
}

pub fn pauli_relative_error(p: &PauliReParams) -> Result<Vec<ExperimentRecord>> {
    let d = 1usize << p.n;
    validate_grid(&[p.rank], &p.k_grid, d, 3usize.pow(p.n as u32), false)?;
    let state_seed = chain_seed(p.seed, &[7]);
    let rho = random_rank_r_state(d, p.rank, state_seed)?;
    let chart = eigen_chart(&rho, p.rank)?;
    let g = weight_matrix(&chart);
    let full = Design::full_pauli(p.n)?;
    let info_full = fisher_design(&chart, &full)?;
    let cells = p.k_grid.len() * p.designs_per_k;
    let results = ordered_par_map(cells, |cell| -> Result<Vec<ExperimentRecord>> {
        let (ki, di) = (cell / p.designs_per_k, cell % p.designs_per_k);
        let k = p.k_grid[ki];
        let design_seed = chain_seed(p.seed, &[8, ki as u64, di as u64]);
        let design = sample_settings(p.n, k, false, design_seed)?;
        let info = fisher_design(&chart, &design)?;
        let re = relative_error(&info, &info_full, &g)?;
        let mut record = base_record("pauli_relative_error", d, p.rank, &design);
        record.n = Some(p.n);
        record.state_seed = Some(state_seed);
        record.design_index = Some(di);
        record.metric = "relative_error".to_string();
        match re {
            DesignMse::Value(v) => record.value = Some(v),
            DesignMse::NonIdentifiable { min_eig } => {
                record.status = RecordStatus::NonIdentifiable;
                record
                    .aux
                    .insert("min_info_eig".to_string(), aux_f64(min_eig));
            }
        }
        Ok(vec![record])
    });
    collect_cells(results)
}

// ---------------------------------------------------------------------------
// minimum whitened eigenvalue of the full-Pauli mean information

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinEigParams {
    pub n_grid: Vec<usize>,
    pub ranks: Vec<usize>,
    pub states_per_cell: usize,
    pub seed: u64,
}

pub fn min_eigenvalue_study(p: &MinEigParams) -> Result<Vec<ExperimentRecord>> {
    if p.n_grid.is_empty() || p.ranks.is_empty() || p.states_per_cell == 0 {
        return Err(Error::InvalidParameter {
            name: "empty grid",
            value: f64::NAN,
        });
    }
    let cells = p.n_grid.len() * p.ranks.len() * p.states_per_cell;
    let per_n = p.ranks.len() * p.states_per_cell;
    let results = ordered_par_map(cells, |cell| -> Result<Vec<ExperimentRecord>> {
        let ni = cell / per_n;
        let ri = (cell % per_n) / p.states_per_cell;
        let si = cell % p.states_per_cell;
        let n = p.n_grid[ni];
        let r = p.ranks[ri];
        let d = 1usize << n;
        let state_seed = chain_seed(p.seed, &[9, ni as u64, ri as u64, si as u64]);
        let basis = haar_unitary(d, state_seed)?;
        let rho = equal_eigenvalue_state(d, r, Some(&basis))?;
        let chart = eigen_chart(&rho, r)?;
        let g = weight_matrix(&chart);
        let full = Design::full_pauli(n)?;
        let info = fisher_design(&chart, &full)?;
        let whitened = whiten(&info, &g)?;
        let mut record = base_record("min_eigenvalue", d, r, &full);
        record.n = Some(n);
        record.state_index = Some(si);
        record.state_seed = Some(state_seed);
        record.metric = "min_whitened_eig".to_string();
        record.value = Some(whitened.min_eig);
        record
            .aux
            .insert("max_whitened_eig".to_string(), aux_f64(whitened.max_eig));
        Ok(vec![record])
    });
    collect_cells(results)
}

// ---------------------------------------------------------------------------
// coarse-grained (Pauli-expectation) model sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoarseParams {
    pub n: usize,
    pub ranks: Vec<usize>,
    /// Observable-count grid (a full set is `4^n - 1`).
    pub counts_grid: Vec<usize>,
    pub states_per_rank: usize,
    pub designs_per_count: usize,
    pub n_total: u64,
    pub replacement: bool,
    /// Also emit full fine-model records at matched budget.
    pub with_fine: bool,
    pub seed: u64,
}

pub fn coarse_grained_sweep(p: &CoarseParams) -> Result<Vec<ExperimentRecord>> {
    let d = 1usize << p.n;
    let total = 4usize.pow(p.n as u32) - 1;
    validate_grid(&p.ranks, &p.counts_grid, d, total, p.replacement)?;
    let cells = p.ranks.len() * p.states_per_rank;
    let results = ordered_par_map(cells, |cell| -> Result<Vec<ExperimentRecord>> {
        let (ri, si) = (cell / p.states_per_rank, cell % p.states_per_rank);
        let r = p.ranks[ri];
        let state_seed = chain_seed(p.seed, &[10, ri as u64, si as u64]);
        let rho = random_rank_r_state(d, r, state_seed)?;
        let chart = eigen_chart(&rho, r)?;
        let g = weight_matrix(&chart);
        let mut records = Vec::new();
        for (ci, &count) in p.counts_grid.iter().enumerate() {
            let m = repetitions_for(p.n_total, count)?;
            let n_eff = m * count as u64;
            for di in 0..p.designs_per_count {
                let design_seed =
                    chain_seed(p.seed, &[11, ri as u64, si as u64, ci as u64, di as u64]);
                let design = sample_coarse_observables(p.n, count, p.replacement, design_seed)?;
                let info = fisher_design(&chart, &design)?;
                let mse = asymptotic_mse(&info, &g, n_eff)?;
                let mut record = base_record("coarse_sweep", d, r, &design);
                record.n = Some(p.n);
                record.state_index = Some(si);
                record.state_seed = Some(state_seed);
                record.design_index = Some(di);
                record.m = Some(m);
                record.n_total = Some(n_eff);
                record.metric = "asymptotic_mse".to_string();
                record.aux.insert(
                    "model".to_string(),
                    serde_json::Value::from("coarse"),
                );
                apply_mse(&mut record, mse, n_eff);
                records.push(record);
            }
        }
        if p.with_fine {
            let full = Design::full_pauli(p.n)?;
            let m = repetitions_for(p.n_total, full.k())?;
            let n_eff = m * full.k() as u64;
            let info = fisher_design(&chart, &full)?;
            let mse = asymptotic_mse(&info, &g, n_eff)?;
            let mut record = base_record("coarse_sweep", d, r, &full);
            record.n = Some(p.n);
            record.state_index = Some(si);
            record.state_seed = Some(state_seed);
            record.m = Some(m);
            record.n_total = Some(n_eff);
            record.metric = "asymptotic_mse".to_string();
            record
                .aux
                .insert("model".to_string(), serde_json::Value::from("fine"));
            apply_mse(&mut record, mse, n_eff);
            records.push(record);
        }
        Ok(records)
    });
    collect_cells(results)
}

// ---------------------------------------------------------------------------

fn validate_grid(
    ranks: &[usize],
    k_grid: &[usize],
    d: usize,
    available: usize,
    replacement: bool,
) -> Result<()> {
    if ranks.is_empty() || k_grid.is_empty() {
        return Err(Error::InvalidParameter {
            name: "empty grid",
            value: f64::NAN,
        });
    }
    for &r in ranks {
        if r == 0 || r > d {
            return Err(Error::InvalidRank { rank: r, dim: d });
        }
    }
    for &k in k_grid {
        if k == 0 {
            return Err(Error::EmptyDesign);
        }
        if !replacement && k > available {
            return Err(Error::NotEnoughSettings {
                requested: k,
                available,
            });
        }
    }
    Ok(())
}

/// Mean Fisher over all Haar settings and the chart/weight pair for a
/// rotated equal-eigenvalue state; shared by the single-shot CLI paths.
pub fn chart_and_weight(
    rho: &tomo_core::states::DensityMatrix,
    rank: usize,
) -> Result<(LocalChart, FisherMatrix)> {
    let chart = eigen_chart(rho, rank)?;
    let g = weight_matrix(&chart);
    Ok((chart, g))
}
