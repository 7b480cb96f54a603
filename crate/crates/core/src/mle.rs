//! Rank-truncated iterative RρR maximum-likelihood estimation and its
//! Monte-Carlo error evaluation against the Fisher prediction.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::designs::{pauli_observable_projectors, pauli_setting_basis, Design, Setting};
use crate::error::{Error, Result};
use crate::fisher::{asymptotic_mse, DesignMse, FisherMatrix};
use crate::linalg;
use crate::sampling::{sample_counts, CountsTable};
use crate::scalar;
use crate::states::{frobenius_sq_dist, frobenius_sq_raw, DensityMatrix};
use crate::{CMatrix, Complex64};

/// Options of the RρR iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    /// Rank retained after each iteration; `rank = d` disables truncation.
    pub rank: usize,
    pub max_iters: usize,
    /// Stop when the Frobenius distance between iterates drops below this.
    pub conv_tol: f64,
    /// Floor applied to model probabilities inside `R` and the likelihood.
    pub prob_floor: f64,
    /// `1` is the plain undiluted iteration; smaller values damp each step
    /// with `(1 - dilution) 1 + dilution R`.
    pub dilution: f64,
}

impl MleOptions {
    pub fn new(rank: usize) -> Self {
        MleOptions {
            rank,
            max_iters: 5000,
            conv_tol: 1e-10,
            prob_floor: 1e-12,
            dilution: 1.0,
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        if self.rank == 0 || self.rank > d {
            return Err(Error::InvalidRank {
                rank: self.rank,
                dim: d,
            });
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter {
                name: "max_iters",
                value: 0.0,
            });
        }
        if !(self.conv_tol > 0.0) {
            return Err(Error::InvalidParameter {
                name: "conv_tol",
                value: self.conv_tol,
            });
        }
        if !(self.prob_floor > 0.0) {
            return Err(Error::InvalidParameter {
                name: "prob_floor",
                value: self.prob_floor,
            });
        }
        if !(self.dilution > 0.0 && self.dilution <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "dilution",
                value: self.dilution,
            });
        }
        Ok(())
    }
}

/// Convergence report of one estimate. A `converged = false` result means
/// the iteration stagnated at `max_iters` without meeting `conv_tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub log_likelihood: f64,
}

enum SettingOp {
    Basis { basis: CMatrix, counts: Vec<f64> },
    TwoOutcome { projectors: [CMatrix; 2], counts: [f64; 2] },
}

/// Precomputed RρR iteration for one counts table.
pub struct RrhorSolver {
    d: usize,
    m: f64,
    ops: Vec<SettingOp>,
    options: MleOptions,
}

impl RrhorSolver {
    pub fn new(counts: &CountsTable, options: MleOptions) -> Result<Self> {
        let d = counts.design().dim();
        options.validate(d)?;
        let ops = counts
            .design()
            .settings()
            .iter()
            .zip(counts.counts())
            .map(|(setting, row)| match setting {
                Setting::Pauli(label) => SettingOp::Basis {
                    basis: pauli_setting_basis(label),
                    counts: row.iter().map(|&c| c as f64).collect(),
                },
                Setting::Basis(u) => SettingOp::Basis {
                    basis: u.clone(),
                    counts: row.iter().map(|&c| c as f64).collect(),
                },
                Setting::Observable(label) => {
                    let (plus, minus) = pauli_observable_projectors(label);
                    SettingOp::TwoOutcome {
                        projectors: [plus, minus],
                        counts: [row[0] as f64, row[1] as f64],
                    }
                }
            })
            .collect();
        Ok(RrhorSolver {
            d,
            m: counts.m() as f64,
            ops,
            options,
        })
    }

    /// The starting iterate, the maximally mixed state (not truncated; the
    /// first data-driven step breaks the subspace tie).
    pub fn initial(&self) -> CMatrix {
        CMatrix::identity(self.d, self.d).unscale(self.d as f64)
    }

    fn response(&self, rho: &CMatrix) -> CMatrix {
        let mut r = CMatrix::zeros(self.d, self.d);
        for op in &self.ops {
            match op {
                SettingOp::Basis { basis, counts } => {
                    let x = rho * basis;
                    let mut weighted = basis.clone();
                    for o in 0..self.d {
                        let p: Complex64 = basis
                            .column(o)
                            .iter()
                            .zip(x.column(o).iter())
                            .map(|(b, xv)| b.conj() * xv)
                            .sum();
                        let c = if counts[o] > 0.0 {
                            counts[o] / (self.m * p.re.max(self.options.prob_floor))
                        } else {
                            0.0
                        };
                        for i in 0..self.d {
                            weighted[(i, o)] *= Complex64::new(c, 0.0);
                        }
                    }
                    r += weighted * basis.adjoint();
                }
                SettingOp::TwoOutcome { projectors, counts } => {
                    for (proj, &c) in projectors.iter().zip(counts.iter()) {
                        if c > 0.0 {
                            let p = (rho * proj).trace().re;
                            let w = c / (self.m * p.max(self.options.prob_floor));
                            r += proj.scale(w);
                        }
                    }
                }
            }
        }
        r
    }

    /// One iteration: `rho <- N[((1-l)1 + l R) rho ((1-l)1 + l R)]`,
    /// followed by retention of the `rank` largest eigenvalues (negatives
    /// clamped) and trace renormalization when truncation is enabled.
    pub fn step(&self, rho: &CMatrix) -> Result<CMatrix> {
        let r = self.response(rho);
        let a = if self.options.dilution >= 1.0 {
            r
        } else {
            let lambda = self.options.dilution;
            CMatrix::identity(self.d, self.d).scale(1.0 - lambda) + r.scale(lambda)
        };
        let next = linalg::hermitize(&(&a * rho * &a));
        let trace = next.trace().re;
        if !trace.is_finite() || trace <= 0.0 {
            return Err(Error::NumericalFailure { iteration: 0 });
        }
        let next = next.unscale(trace);
        if self.options.rank >= self.d {
            return Ok(next);
        }
        let (values, basis) = linalg::hermitian_eigen_desc(&next);
        let retained: Vec<f64> = values[..self.options.rank]
            .iter()
            .map(|&v| v.max(0.0))
            .collect();
        let total: f64 = retained.iter().sum();
        if !total.is_finite() || total <= 0.0 {
            return Err(Error::NumericalFailure { iteration: 0 });
        }
        let mut truncated = CMatrix::zeros(self.d, self.d);
        for (k, &v) in retained.iter().enumerate() {
            let col = basis.column(k);
            let scale = Complex64::new(v / total, 0.0);
            for i in 0..self.d {
                for j in 0..self.d {
                    truncated[(i, j)] += scale * col[i] * col[j].conj();
                }
            }
        }
        Ok(linalg::hermitize(&truncated))
    }

    /// Log-likelihood `sum_{s,o} N(o|s) ln p(o|s)` with floored
    /// probabilities.
    pub fn log_likelihood(&self, rho: &CMatrix) -> f64 {
        let mut ll = 0.0;
        for op in &self.ops {
            match op {
                SettingOp::Basis { basis, counts } => {
                    let x = rho * basis;
                    for o in 0..self.d {
                        if counts[o] > 0.0 {
                            let p: Complex64 = basis
                                .column(o)
                                .iter()
                                .zip(x.column(o).iter())
                                .map(|(b, xv)| b.conj() * xv)
                                .sum();
                            ll += counts[o] * scalar::ln(p.re.max(self.options.prob_floor));
                        }
                    }
                }
                SettingOp::TwoOutcome { projectors, counts } => {
                    for (proj, &c) in projectors.iter().zip(counts.iter()) {
                        if c > 0.0 {
                            let p = (rho * proj).trace().re;
                            ll += c * scalar::ln(p.max(self.options.prob_floor));
                        }
                    }
                }
            }
        }
        ll
    }

    /// Runs the iteration from the maximally mixed state until the iterate
    /// distance falls below `conv_tol` or `max_iters` is reached.
    pub fn estimate(&self) -> Result<(DensityMatrix, MleDiagnostics)> {
        let mut rho = self.initial();
        let mut converged = false;
        let mut iterations = 0;
        for t in 1..=self.options.max_iters {
            let next = self.step(&rho).map_err(|e| match e {
                Error::NumericalFailure { .. } => Error::NumericalFailure { iteration: t },
                other => other,
            })?;
            let dist = scalar::sqrt(frobenius_sq_raw(&next, &rho));
            rho = next;
            iterations = t;
            if dist <= self.options.conv_tol {
                converged = true;
                break;
            }
        }
        let log_likelihood = self.log_likelihood(&rho);
        if !log_likelihood.is_finite() {
            return Err(Error::NumericalFailure {
                iteration: iterations,
            });
        }
        let state = DensityMatrix::new(rho).map_err(|_| Error::NumericalFailure {
            iteration: iterations,
        })?;
        Ok((
            state,
            MleDiagnostics {
                iterations,
                converged,
                log_likelihood,
            },
        ))
    }
}

/// Rank-truncated RρR estimate from a counts table.
pub fn rrhor_estimate(
    counts: &CountsTable,
    options: MleOptions,
) -> Result<(DensityMatrix, MleDiagnostics)> {
    RrhorSolver::new(counts, options)?.estimate()
}

/// One sample-estimate cycle; returns the squared Frobenius error.
pub fn mse_replicate(
    rho: &DensityMatrix,
    design: &Design,
    m: u64,
    options: MleOptions,
    replicate_seed: u64,
) -> Result<f64> {
    let counts = sample_counts(rho, design, m, replicate_seed)?;
    let (estimate, _) = rrhor_estimate(&counts, options)?;
    frobenius_sq_dist(&estimate, rho)
}

/// Monte-Carlo estimate of the ML mean squared error.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloMse {
    pub mean: f64,
    pub std_error: f64,
    pub per_replicate: Vec<f64>,
    /// Replicates that failed, with the error text; never silently dropped.
    pub failures: Vec<(usize, String)>,
}

/// Runs `reps` independent sample-estimate cycles with per-replicate
/// sub-seeds `derive_seed(seed, rep)`.
pub fn mse_monte_carlo(
    rho: &DensityMatrix,
    design: &Design,
    m: u64,
    reps: usize,
    options: MleOptions,
    seed: u64,
) -> Result<MonteCarloMse> {
    if reps < 2 {
        return Err(Error::InvalidParameter {
            name: "reps",
            value: reps as f64,
        });
    }
    let mut per_replicate = Vec::with_capacity(reps);
    let mut failures = Vec::new();
    for rep in 0..reps {
        match mse_replicate(rho, design, m, options, crate::rng::derive_seed(seed, rep as u64)) {
            Ok(err) => per_replicate.push(err),
            Err(e) => failures.push((rep, e.to_string())),
        }
    }
    aggregate_replicates(per_replicate, failures)
}

/// Deterministic aggregation shared by the sequential and any parallel
/// driver: plain ordered sums over the replicate vector.
pub fn aggregate_replicates(
    per_replicate: Vec<f64>,
    failures: Vec<(usize, String)>,
) -> Result<MonteCarloMse> {
    if per_replicate.len() < 2 {
        return Err(Error::NoSuccessfulReplicates);
    }
    let n = per_replicate.len() as f64;
    let mean = per_replicate.iter().sum::<f64>() / n;
    let var = per_replicate.iter().map(|&e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1.0);
    Ok(MonteCarloMse {
        mean,
        std_error: scalar::sqrt(var / n),
        per_replicate,
        failures,
    })
}

/// Relative deviation of the Monte-Carlo MSE from the Fisher prediction:
/// `|1 - N E||rho_ML - rho||^2 / Tr(I^{-1} G)|`.
pub fn ml_relative_error(
    mc: &MonteCarloMse,
    info_design: &FisherMatrix,
    weight: &FisherMatrix,
    n: u64,
) -> Result<f64> {
    match asymptotic_mse(info_design, weight, n)? {
        DesignMse::Value(predicted) => Ok((1.0 - mc.mean / predicted).abs()),
        DesignMse::NonIdentifiable { min_eig } => Err(Error::NonIdentifiable {
            min_eigenvalue: min_eig,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::{sample_settings, Design, DesignKind, PauliLabel, Setting};
    use crate::fisher::{fisher_design, weight_matrix};
    use crate::states::{eigen_chart, random_rank_r_state};
    use crate::{CMatrix, Complex64};
    use approx::assert_abs_diff_eq;

    fn diag_state(entries: &[f64]) -> DensityMatrix {
        let d = entries.len();
        let mut m = CMatrix::zeros(d, d);
        for (i, &x) in entries.iter().enumerate() {
            m[(i, i)] = Complex64::new(x, 0.0);
        }
        DensityMatrix::new(m).unwrap()
    }

    #[test]
    fn exact_counts_make_truth_a_fixed_point() {
        // rho = diag(3/4, 1/4): every full-Pauli outcome probability times
        // m = 100 is an integer, so counts can match the model exactly.
        let rho = diag_state(&[0.75, 0.25]);
        let design = Design::full_pauli(1).unwrap();
        let counts = CountsTable::from_parts(
            design,
            100,
            alloc::vec![
                alloc::vec![50, 50],
                alloc::vec![50, 50],
                alloc::vec![75, 25]
            ],
            0,
        )
        .unwrap();
        let solver = RrhorSolver::new(&counts, MleOptions::new(2)).unwrap();
        let next = solver.step(rho.matrix()).unwrap();
        let dist = frobenius_sq_raw(&next, rho.matrix()).sqrt();
        assert!(dist <= 1e-12, "fixed-point drift {dist}");
    }

    #[test]
    fn truncated_output_has_rank_at_most_r() {
        let rho = random_rank_r_state(4, 1, 8).unwrap();
        let design = sample_settings(2, 9, false, 2).unwrap();
        let counts = sample_counts(&rho, &design, 500, 3).unwrap();
        let (est, diag) = rrhor_estimate(&counts, MleOptions::new(1)).unwrap();
        let evals = est.eigenvalues();
        assert!(evals[1].abs() < 1e-10, "second eigenvalue {}", evals[1]);
        assert_abs_diff_eq!(evals.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(diag.converged);
    }

    #[test]
    fn noiseless_pure_state_recovered_exactly() {
        // Measuring diag(1,0) in z is deterministic, so every replicate
        // recovers the state itself.
        let rho = diag_state(&[1.0, 0.0]);
        let design = Design::new(
            DesignKind::Pauli,
            alloc::vec![Setting::Pauli(PauliLabel::parse("z").unwrap())],
            false,
            0,
        )
        .unwrap();
        let mc = mse_monte_carlo(&rho, &design, 200, 3, MleOptions::new(1), 77).unwrap();
        assert!(mc.failures.is_empty());
        assert!(mc.mean < 1e-12, "mean error {}", mc.mean);
    }

    #[test]
    fn ml_mse_tracks_fisher_prediction() {
        // n = 2 pure state, full nine-setting design, m = 1e4, 30 replicates.
        let rho = random_rank_r_state(4, 1, 12).unwrap();
        let design = Design::full_pauli(2).unwrap();
        let m = 10_000u64;
        let reps = 30;
        let mc = mse_monte_carlo(&rho, &design, m, reps, MleOptions::new(1), 31415).unwrap();
        assert!(mc.failures.is_empty());

        let chart = eigen_chart(&rho, 1).unwrap();
        let info = fisher_design(&chart, &design).unwrap();
        let g = weight_matrix(&chart);
        let n = m * design.k() as u64;
        let re = ml_relative_error(&mc, &info, &g, n).unwrap();
        assert!(re <= 0.15, "relative error {re}");
    }

    #[test]
    fn doubling_m_roughly_halves_the_error() {
        let rho = random_rank_r_state(2, 1, 5).unwrap();
        let design = Design::full_pauli(1).unwrap();
        let opts = MleOptions::new(1);
        let lo = mse_monte_carlo(&rho, &design, 2000, 40, opts, 900).unwrap();
        let hi = mse_monte_carlo(&rho, &design, 4000, 40, opts, 901).unwrap();
        let ratio = hi.mean / lo.mean;
        assert!(
            ratio > 0.3 && ratio < 0.75,
            "mse ratio after doubling m: {ratio}"
        );
    }

    #[test]
    fn likelihood_ascends_without_truncation() {
        let rho = random_rank_r_state(4, 2, 33).unwrap();
        let design = Design::full_pauli(2).unwrap();
        let counts = sample_counts(&rho, &design, 200, 9).unwrap();
        // rank = d disables truncation: the classical RρR ascent property.
        let solver = RrhorSolver::new(&counts, MleOptions::new(4)).unwrap();
        let mut state = solver.initial();
        let mut ll = solver.log_likelihood(&state);
        let mut ascents = 0;
        let total = 200;
        for _ in 0..total {
            state = solver.step(&state).unwrap();
            let next_ll = solver.log_likelihood(&state);
            if next_ll >= ll - 1e-9 {
                ascents += 1;
            }
            ll = next_ll;
        }
        assert!(ascents * 100 >= total * 99, "{ascents}/{total} ascents");
    }

    #[test]
    fn truncated_estimate_beats_truth_likelihood() {
        let rho = random_rank_r_state(4, 1, 60).unwrap();
        let design = Design::full_pauli(2).unwrap();
        let mut wins = 0;
        let reps = 40;
        for rep in 0..reps {
            let counts =
                sample_counts(&rho, &design, 150, crate::rng::derive_seed(71, rep)).unwrap();
            let solver = RrhorSolver::new(&counts, MleOptions::new(1)).unwrap();
            let (_, diag) = solver.estimate().unwrap();
            if diag.log_likelihood >= solver.log_likelihood(rho.matrix()) - 1e-9 {
                wins += 1;
            }
        }
        assert!(wins * 100 >= reps * 95, "{wins}/{reps} replicates");
    }

    #[test]
    fn permutation_equivariance() {
        // Relabeling outcomes consistently in basis columns and counts
        // leaves the estimate unchanged.
        let rho = random_rank_r_state(4, 1, 90).unwrap();
        let bases: Vec<CMatrix> = ["zz", "xy", "yx"]
            .iter()
            .map(|t| crate::designs::pauli_setting_basis(&PauliLabel::parse(t).unwrap()))
            .collect();
        let design = Design::new(
            DesignKind::Haar,
            bases.iter().cloned().map(Setting::Basis).collect(),
            true,
            0,
        )
        .unwrap();
        let counts = sample_counts(&rho, &design, 400, 17).unwrap();

        let perm = [2usize, 0, 3, 1];
        let permuted_settings: Vec<Setting> = bases
            .iter()
            .map(|b| {
                let mut pb = CMatrix::zeros(4, 4);
                for (new, &old) in perm.iter().enumerate() {
                    pb.set_column(new, &b.column(old));
                }
                Setting::Basis(pb)
            })
            .collect();
        let permuted_design = Design::new(DesignKind::Haar, permuted_settings, true, 0).unwrap();
        let permuted_counts: Vec<Vec<u64>> = counts
            .counts()
            .iter()
            .map(|row| perm.iter().map(|&old| row[old]).collect())
            .collect();
        let permuted =
            CountsTable::from_parts(permuted_design, 400, permuted_counts, 17).unwrap();

        let (a, _) = rrhor_estimate(&counts, MleOptions::new(1)).unwrap();
        let (b, _) = rrhor_estimate(&permuted, MleOptions::new(1)).unwrap();
        let dist = frobenius_sq_dist(&a, &b).unwrap().sqrt();
        assert!(dist <= 1e-10, "estimates differ by {dist}");
    }

    #[test]
    fn options_are_validated() {
        let rho = diag_state(&[1.0, 0.0]);
        let design = Design::full_pauli(1).unwrap();
        let counts = sample_counts(&rho, &design, 10, 0).unwrap();
        let mut opts = MleOptions::new(3);
        assert!(RrhorSolver::new(&counts, opts).is_err());
        opts = MleOptions::new(1);
        opts.dilution = 0.0;
        assert!(RrhorSolver::new(&counts, opts).is_err());
        opts = MleOptions::new(1);
        opts.conv_tol = -1.0;
        assert!(RrhorSolver::new(&counts, opts).is_err());
    }
}
