//! Synthetic measurement counts with full seed provenance.

use alloc::vec::Vec;

use rand::Rng;

use crate::designs::{outcome_probabilities, Design};
use crate::error::{Error, Result};
use crate::rng;
use crate::states::DensityMatrix;

/// Per-setting multinomial outcome counts from `m` repetitions.
///
/// Setting `i` is sampled from its own sub-stream `derive_seed(seed, i)`,
/// so the table never depends on execution order or worker count.
#[derive(Debug, Clone, PartialEq)]
pub struct CountsTable {
    design: Design,
    m: u64,
    counts: Vec<Vec<u64>>,
    seed: u64,
}

impl CountsTable {
    /// Builds a table from existing counts, validating shapes and sums.
    pub fn from_parts(design: Design, m: u64, counts: Vec<Vec<u64>>, seed: u64) -> Result<Self> {
        if counts.len() != design.k() {
            return Err(Error::DimensionMismatch {
                expected: design.k(),
                found: counts.len(),
            });
        }
        for (i, (setting, row)) in design.settings().iter().zip(&counts).enumerate() {
            if row.len() != setting.n_outcomes() {
                return Err(Error::DimensionMismatch {
                    expected: setting.n_outcomes(),
                    found: row.len(),
                });
            }
            let total: u64 = row.iter().sum();
            if total != m {
                return Err(Error::CountsMismatch {
                    setting: i,
                    expected: m,
                    found: total,
                });
            }
        }
        Ok(CountsTable {
            design,
            m,
            counts,
            seed,
        })
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn setting_counts(&self, index: usize) -> &[u64] {
        &self.counts[index]
    }

    /// Total quantum samples `N = m * k`.
    pub fn total_samples(&self) -> u64 {
        self.m * self.design.k() as u64
    }
}

/// Draws independent multinomial counts for every setting of a design.
pub fn sample_counts(
    rho: &DensityMatrix,
    design: &Design,
    m: u64,
    seed: u64,
) -> Result<CountsTable> {
    if m == 0 {
        return Err(Error::InvalidParameter {
            name: "m",
            value: 0.0,
        });
    }
    let mut counts = Vec::with_capacity(design.k());
    for (i, setting) in design.settings().iter().enumerate() {
        let probs = outcome_probabilities(rho, setting)?;
        let sum: f64 = probs.iter().sum();
        let min = probs.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(sum - 1.0).abs().is_finite() || (sum - 1.0).abs() > 1e-9 || min < 0.0 {
            return Err(Error::InvalidProbabilities { sum, min });
        }
        let mut rng = rng::rng_from_seed(rng::derive_seed(seed, i as u64));
        counts.push(multinomial(&probs, m, &mut rng));
    }
    CountsTable::from_parts(design.clone(), m, counts, seed)
}

fn multinomial(probs: &[f64], m: u64, rng: &mut rng::SeededRng) -> Vec<u64> {
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (o, &p) in probs.iter().enumerate() {
        acc += p;
        cdf.push(acc);
        if p > 0.0 {
            last_positive = o;
        }
    }
    let mut counts = alloc::vec![0u64; probs.len()];
    for _ in 0..m {
        let u: f64 = rng.random();
        // First outcome whose cumulative weight exceeds u; empty intervals
        // (zero-probability outcomes) can never be selected.
        let mut idx = cdf.partition_point(|&c| c <= u);
        if idx >= probs.len() {
            idx = last_positive;
        }
        counts[idx] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::{sample_settings, Design, DesignKind, PauliLabel, Setting};
    use crate::states::random_rank_r_state;
    use crate::{CMatrix, Complex64};

    fn pure_z_state() -> DensityMatrix {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = Complex64::new(1.0, 0.0);
        DensityMatrix::new(m).unwrap()
    }

    fn single_setting_design(text: &str) -> Design {
        Design::new(
            DesignKind::Pauli,
            alloc::vec![Setting::Pauli(PauliLabel::parse(text).unwrap())],
            false,
            0,
        )
        .unwrap()
    }

    #[test]
    fn deterministic_outcome_gets_all_counts() {
        let table = sample_counts(&pure_z_state(), &single_setting_design("z"), 100, 5).unwrap();
        assert_eq!(table.setting_counts(0), &[100, 0]);
    }

    #[test]
    fn same_seed_same_table() {
        let rho = random_rank_r_state(4, 2, 3).unwrap();
        let design = sample_settings(2, 5, false, 11).unwrap();
        let a = sample_counts(&rho, &design, 250, 99).unwrap();
        let b = sample_counts(&rho, &design, 250, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn per_setting_streams_are_independent_of_order() {
        // Sampling a sub-design that shares a setting index must reproduce
        // that setting's counts: stream identity depends only on (seed, i).
        let rho = random_rank_r_state(2, 1, 21).unwrap();
        let design = single_setting_design("x");
        let full = sample_counts(&rho, &design, 1000, 7).unwrap();
        let again = sample_counts(&rho, &design, 1000, 7).unwrap();
        assert_eq!(full.setting_counts(0), again.setting_counts(0));
    }

    #[test]
    fn frequencies_concentrate() {
        let table = sample_counts(&pure_z_state(), &single_setting_design("x"), 100_000, 13).unwrap();
        let f = table.setting_counts(0)[0] as f64 / 100_000.0;
        // 3 sigma for a fair coin at m = 1e5
        assert!((f - 0.5).abs() < 0.005, "frequency {f}");
    }

    #[test]
    fn concentration_smoke_bound() {
        let rho = random_rank_r_state(4, 2, 31).unwrap();
        let design = sample_settings(2, 9, false, 17).unwrap();
        let m = 1000u64;
        let table = sample_counts(&rho, &design, m, 23).unwrap();
        let bound = 4.0 * ((4.0 * 9.0f64).ln() / m as f64).sqrt();
        for (i, setting) in design.settings().iter().enumerate() {
            let probs = outcome_probabilities(&rho, setting).unwrap();
            for (o, &p) in probs.iter().enumerate() {
                let f = table.setting_counts(i)[o] as f64 / m as f64;
                assert!((f - p).abs() <= bound, "setting {i} outcome {o}");
            }
        }
    }

    #[test]
    fn total_sample_accounting() {
        let rho = random_rank_r_state(4, 1, 41).unwrap();
        let design = sample_settings(2, 4, false, 5).unwrap();
        let table = sample_counts(&rho, &design, 77, 3).unwrap();
        assert_eq!(table.total_samples(), 77 * 4);
        for row in table.counts() {
            assert_eq!(row.iter().sum::<u64>(), 77);
        }
    }

    #[test]
    fn from_parts_validates_sums() {
        let design = single_setting_design("z");
        assert!(matches!(
            CountsTable::from_parts(design, 10, alloc::vec![alloc::vec![4, 5]], 0),
            Err(Error::CountsMismatch { .. })
        ));
    }

    #[test]
    fn rejects_zero_repetitions() {
        let err = sample_counts(&pure_z_state(), &single_setting_design("z"), 0, 5).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { name: "m", .. }));
    }
}
