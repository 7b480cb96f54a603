//! Density matrices, random low-rank states and the local chart around a
//! rank-`r` state.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg;
use crate::params::{ParamCoord, ParamSet};
use crate::rng;
use crate::{CMatrix, Complex64, RVector};

/// Max entrywise `|rho - rho^dagger|` accepted by [`DensityMatrix::new`].
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Max `|Tr rho - 1|` accepted by [`DensityMatrix::new`].
pub const TRACE_TOL: f64 = 1e-12;
/// Most negative eigenvalue accepted by [`DensityMatrix::new`].
pub const PSD_TOL: f64 = 1e-10;
/// Max entrywise `|U^dagger U - 1|` accepted for bases.
pub const UNITARY_TOL: f64 = 1e-10;
/// Eigenvalues at or below this count as zero when validating rank.
pub const RANK_TOL: f64 = 1e-10;

/// A `d x d` complex Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positive semidefiniteness.
    pub fn new(mat: CMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                found: mat.ncols(),
            });
        }
        if mat.nrows() == 0 {
            return Err(Error::InvalidDimension { dim: 0 });
        }
        let dev = linalg::hermitian_deviation(&mat);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let trace = mat.trace();
        if (trace - Complex64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::TraceNotOne { trace: trace.re });
        }
        let min_eig = linalg::min_eigenvalue(&mat);
        if min_eig < -PSD_TOL {
            return Err(Error::NotPositiveSemidefinite {
                min_eigenvalue: min_eig,
            });
        }
        Ok(DensityMatrix { mat })
    }

    /// Wraps a matrix that is Hermitian and unit-trace by construction.
    /// Used for chart embeddings, which may sit slightly outside the PSD
    /// cone (the linear chart drops the quadratic lower-right corner).
    pub(crate) fn new_unchecked(mat: CMatrix) -> Self {
        DensityMatrix { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigen_desc(&self.mat).0
    }
}

/// Local parametrization of a rank-`r` state: its support eigenvalues, the
/// eigenbasis (first `r` columns span the support) and the canonical
/// coordinate set of dimension `D = 2rd - r^2 - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalChart {
    eigenvalues: Vec<f64>,
    eigenbasis: CMatrix,
    params: ParamSet,
}

impl LocalChart {
    /// Builds a chart from raw parts, validating shapes, ordering,
    /// nonnegativity, the trace bound and unitarity of the basis.
    pub fn from_parts(eigenvalues: Vec<f64>, eigenbasis: CMatrix) -> Result<Self> {
        let d = eigenbasis.nrows();
        if eigenbasis.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: eigenbasis.ncols(),
            });
        }
        let r = eigenvalues.len();
        let params = ParamSet::new(d, r)?;
        if eigenvalues.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter {
                name: "eigenvalues (descending order required)",
                value: f64::NAN,
            });
        }
        if let Some(&bad) = eigenvalues.iter().find(|&&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "eigenvalues (nonnegative required)",
                value: bad,
            });
        }
        let sum: f64 = eigenvalues.iter().sum();
        if sum > 1.0 + TRACE_TOL {
            return Err(Error::TraceNotOne { trace: sum });
        }
        let dev = linalg::unitary_deviation(&eigenbasis);
        if dev > UNITARY_TOL {
            return Err(Error::InvalidBasis { deviation: dev });
        }
        Ok(LocalChart {
            eigenvalues,
            eigenbasis,
            params,
        })
    }

    pub fn dim(&self) -> usize {
        self.params.d()
    }

    pub fn rank(&self) -> usize {
        self.params.r()
    }

    /// Chart dimension `D`.
    pub fn n_params(&self) -> usize {
        self.params.dim()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenbasis(&self) -> &CMatrix {
        &self.eigenbasis
    }

    pub fn params(&self) -> ParamSet {
        self.params
    }

    /// The canonically ordered coordinate descriptors.
    pub fn param_index(&self) -> Vec<ParamCoord> {
        self.params.iter().collect()
    }

    /// Coordinates of the chart's own base point: the support eigenvalues
    /// below the constrained one, then zeros.
    pub fn theta0(&self) -> RVector {
        let mut theta = RVector::zeros(self.params.dim());
        for a in 0..self.params.n_diag() {
            theta[a] = self.eigenvalues[a + 1];
        }
        theta
    }

    /// The matrix of chart coordinates `theta` in the chart eigenbasis:
    /// first `r` rows/columns populated, `(0,0)` fixed by the trace
    /// constraint, lower-right corner zero.
    pub(crate) fn chart_matrix(&self, theta: &RVector) -> Result<CMatrix> {
        if theta.len() != self.params.dim() {
            return Err(Error::ParamLengthMismatch {
                expected: self.params.dim(),
                found: theta.len(),
            });
        }
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        let mut diag_sum = 0.0;
        for (a, coord) in self.params.iter().enumerate() {
            match coord {
                ParamCoord::Diag { row } => {
                    m[(row, row)] = Complex64::new(theta[a], 0.0);
                    diag_sum += theta[a];
                }
                ParamCoord::Re { row, col } => {
                    m[(row, col)] += Complex64::new(theta[a], 0.0);
                }
                ParamCoord::Im { row, col } => {
                    m[(row, col)] += Complex64::new(0.0, theta[a]);
                }
            }
        }
        m[(0, 0)] = Complex64::new(1.0 - diag_sum, 0.0);
        for row in 0..self.rank() {
            for col in (row + 1)..d {
                m[(col, row)] = m[(row, col)].conj();
            }
        }
        Ok(m)
    }
}

/// Random rank-`r` state `T^dagger T / Tr(T^dagger T)` with `T` an `r x d`
/// matrix of i.i.d. standard complex Gaussians. Deterministic in `seed`.
pub fn random_rank_r_state(d: usize, r: usize, seed: u64) -> Result<DensityMatrix> {
    if d == 0 {
        return Err(Error::InvalidDimension { dim: d });
    }
    if r == 0 || r > d {
        return Err(Error::InvalidRank { rank: r, dim: d });
    }
    let mut rng = rng::rng_from_seed(seed);
    let t = CMatrix::from_fn(r, d, |_, _| rng::standard_complex_gaussian(&mut rng));
    let m = t.adjoint() * &t;
    let trace = m.trace().re;
    let rho = linalg::hermitize(&m.unscale(trace));
    DensityMatrix::new(rho)
}

/// `U Diag(1/r, ..., 1/r, 0, ..., 0) U^dagger`; identity basis when `basis`
/// is omitted.
pub fn equal_eigenvalue_state(d: usize, r: usize, basis: Option<&CMatrix>) -> Result<DensityMatrix> {
    if d == 0 {
        return Err(Error::InvalidDimension { dim: d });
    }
    if r == 0 || r > d {
        return Err(Error::InvalidRank { rank: r, dim: d });
    }
    let mut diag = CMatrix::zeros(d, d);
    for i in 0..r {
        diag[(i, i)] = Complex64::new(1.0 / r as f64, 0.0);
    }
    let rho = match basis {
        None => diag,
        Some(u) => {
            if u.nrows() != d || u.ncols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: u.nrows(),
                });
            }
            let dev = linalg::unitary_deviation(u);
            if dev > UNITARY_TOL {
                return Err(Error::InvalidBasis { deviation: dev });
            }
            linalg::hermitize(&(u * diag * u.adjoint()))
        }
    };
    DensityMatrix::new(rho)
}

/// Eigendecomposition chart of `rho` as a rank-`r` state.
///
/// Eigenvalues are sorted in descending order with a stable tie-break, and
/// each eigenvector's global phase is fixed by making its largest-modulus
/// component real positive, so the chart is deterministic. Fails with a
/// rank mismatch if the `(r+1)`-th eigenvalue exceeds [`RANK_TOL`], and as
/// rank deficient if the `r`-th falls at or below it.
pub fn eigen_chart(rho: &DensityMatrix, r: usize) -> Result<LocalChart> {
    let d = rho.dim();
    if r == 0 || r > d {
        return Err(Error::InvalidRank { rank: r, dim: d });
    }
    let (values, basis) = linalg::hermitian_eigen_desc(rho.matrix());
    if r < d && values[r] > RANK_TOL {
        return Err(Error::RankMismatch {
            rank: r,
            index: r,
            eigenvalue: values[r],
        });
    }
    if values[r - 1] <= RANK_TOL {
        return Err(Error::RankDeficient {
            index: r - 1,
            eigenvalue: values[r - 1],
        });
    }
    LocalChart::from_parts(values[..r].to_vec(), basis)
}

/// Embeds chart coordinates back into a density matrix: populates the first
/// `r` rows/columns in the chart eigenbasis, applies the trace constraint,
/// zeroes the lower-right corner and rotates back.
///
/// The linear chart drops the `O(|theta|^2)` lower-right corner, so the
/// result may have slightly negative eigenvalues of that order. Matrices
/// more negative than the dropped-corner budget are rejected as outside
/// the model.
pub fn chart_embed(chart: &LocalChart, theta: &RVector) -> Result<DensityMatrix> {
    let m = chart.chart_matrix(theta)?;
    let rho = linalg::hermitize(&(chart.eigenbasis() * m * chart.eigenbasis().adjoint()));
    let min_eig = linalg::min_eigenvalue(&rho);
    let mut off_sq = 0.0;
    for (a, coord) in chart.params().iter().enumerate() {
        if coord.is_off_diagonal() {
            off_sq += theta[a] * theta[a];
        }
    }
    let support_min = chart.eigenvalues()[chart.rank() - 1];
    let corner_budget = if off_sq > 0.0 && support_min > 0.0 {
        2.0 * off_sq / support_min
    } else {
        0.0
    };
    if min_eig < -(1e-9 + corner_budget) {
        return Err(Error::OutOfModel {
            min_eigenvalue: min_eig,
        });
    }
    Ok(DensityMatrix::new_unchecked(rho))
}

/// Squared Frobenius distance `sum |a_ij - b_ij|^2`.
pub fn frobenius_sq_dist(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(frobenius_sq_raw(a.matrix(), b.matrix()))
}

pub(crate) fn frobenius_sq_raw(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum()
}

/// Exactly Haar-distributed `d x d` unitary: QR of a complex Ginibre matrix
/// with the R-diagonal phase correction. Deterministic in `seed`.
pub fn haar_unitary(d: usize, seed: u64) -> Result<CMatrix> {
    if d == 0 {
        return Err(Error::InvalidDimension { dim: d });
    }
    let mut rng = rng::rng_from_seed(seed);
    let g = CMatrix::from_fn(d, d, |_, _| rng::standard_complex_gaussian(&mut rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ParamCoord;
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
    fn random_state_full_rank_at_r_eq_d() {
        let rho = random_rank_r_state(2, 2, 5).unwrap();
        let evals = rho.eigenvalues();
        assert!(evals.iter().all(|&v| v > 0.0));
        assert_abs_diff_eq!(evals.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn random_state_deterministic() {
        let a = random_rank_r_state(4, 1, 7).unwrap();
        let b = random_rank_r_state(4, 1, 7).unwrap();
        assert!(a.matrix().iter().zip(b.matrix().iter()).all(|(x, y)| x == y));
    }

    #[test]
    fn random_state_rank_is_r() {
        let rho = random_rank_r_state(16, 3, 1).unwrap();
        let evals = rho.eigenvalues();
        assert!(evals[2] > 1e-6);
        assert!(evals[3].abs() < 1e-12);
    }

    #[test]
    fn random_state_rejects_bad_rank() {
        assert!(matches!(
            random_rank_r_state(2, 3, 0),
            Err(Error::InvalidRank { .. })
        ));
    }

    #[test]
    fn equal_eigenvalue_examples() {
        let rho = equal_eigenvalue_state(4, 2, None).unwrap();
        for (i, want) in [0.5, 0.5, 0.0, 0.0].iter().enumerate() {
            assert_abs_diff_eq!(rho.matrix()[(i, i)].re, want, epsilon = 1e-15);
        }
        let pure = equal_eigenvalue_state(2, 1, None).unwrap();
        assert_abs_diff_eq!(pure.matrix()[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pure.matrix()[(1, 1)].re, 0.0, epsilon = 1e-15);
        let mixed = equal_eigenvalue_state(4, 4, None).unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(mixed.matrix()[(i, i)].re, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn equal_eigenvalue_rejects_non_unitary_basis() {
        let bad = CMatrix::from_element(2, 2, Complex64::new(1.0, 0.0));
        assert!(matches!(
            equal_eigenvalue_state(2, 1, Some(&bad)),
            Err(Error::InvalidBasis { .. })
        ));
    }

    #[test]
    fn eigen_chart_examples() {
        let chart = eigen_chart(&diag_state(&[0.7, 0.3, 0.0, 0.0]), 2).unwrap();
        assert_abs_diff_eq!(chart.eigenvalues()[0], 0.7, epsilon = 1e-14);
        assert_abs_diff_eq!(chart.eigenvalues()[1], 0.3, epsilon = 1e-14);
        assert_eq!(chart.n_params(), 11);

        let pure = eigen_chart(&diag_state(&[1.0, 0.0]), 1).unwrap();
        assert_eq!(pure.n_params(), 2);

        let rho = random_rank_r_state(16, 3, 2).unwrap();
        assert_eq!(eigen_chart(&rho, 3).unwrap().n_params(), 86);
    }

    #[test]
    fn eigen_chart_rank_errors() {
        let err = eigen_chart(&diag_state(&[0.7, 0.3, 0.0, 0.0]), 1).unwrap_err();
        match err {
            Error::RankMismatch { eigenvalue, index, .. } => {
                assert_eq!(index, 1);
                assert_abs_diff_eq!(eigenvalue, 0.3, epsilon = 1e-14);
            }
            other => panic!("unexpected error {other:?}"),
        }
        assert!(matches!(
            eigen_chart(&diag_state(&[1.0, 0.0]), 2),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn chart_phase_fix_is_deterministic() {
        let rho = random_rank_r_state(8, 2, 11).unwrap();
        let a = eigen_chart(&rho, 2).unwrap();
        let b = eigen_chart(&rho, 2).unwrap();
        assert_eq!(a.eigenbasis(), b.eigenbasis());
        for c in 0..8 {
            let col = a.eigenbasis().column(c);
            let pivot = col.iter().cloned().fold(Complex64::new(0.0, 0.0), |acc, z| {
                if z.norm() > acc.norm() {
                    z
                } else {
                    acc
                }
            });
            assert!(pivot.im.abs() < 1e-12 && pivot.re > 0.0);
        }
    }

    #[test]
    fn embed_base_point_round_trips() {
        let rho = random_rank_r_state(4, 2, 3).unwrap();
        let chart = eigen_chart(&rho, 2).unwrap();
        let back = chart_embed(&chart, &chart.theta0()).unwrap();
        assert!(frobenius_sq_dist(&back, &rho).unwrap() < 1e-24);

        let rho0 = equal_eigenvalue_state(4, 2, None).unwrap();
        let chart0 = eigen_chart(&rho0, 2).unwrap();
        let back0 = chart_embed(&chart0, &chart0.theta0()).unwrap();
        assert!(frobenius_sq_dist(&back0, &rho0).unwrap() < 1e-24);
    }

    #[test]
    fn embed_pure_qubit_example() {
        let chart = eigen_chart(&diag_state(&[1.0, 0.0]), 1).unwrap();
        let theta = RVector::from_vec(alloc::vec![0.1, 0.0]);
        let rho = chart_embed(&chart, &theta).unwrap();
        assert_abs_diff_eq!(rho.matrix()[(0, 0)].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rho.matrix()[(0, 1)].re, 0.1, epsilon = 1e-14);
        assert_abs_diff_eq!(rho.matrix()[(1, 0)].re, 0.1, epsilon = 1e-14);
        assert_abs_diff_eq!(rho.matrix()[(1, 1)].re, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn embed_trace_is_exact() {
        let rho = random_rank_r_state(8, 3, 9).unwrap();
        let chart = eigen_chart(&rho, 3).unwrap();
        let mut theta = chart.theta0();
        let mut rng = crate::rng::rng_from_seed(17);
        for a in 0..theta.len() {
            theta[a] += 0.01 * (rand::Rng::random::<f64>(&mut rng) - 0.5);
        }
        let emb = chart_embed(&chart, &theta).unwrap();
        assert!((emb.matrix().trace() - Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn embed_rejects_negative_diagonal_coordinates() {
        let chart = eigen_chart(&diag_state(&[0.7, 0.3, 0.0, 0.0]), 2).unwrap();
        let mut theta = chart.theta0();
        theta[0] = -0.05;
        assert!(matches!(
            chart_embed(&chart, &theta),
            Err(Error::OutOfModel { .. })
        ));
    }

    #[test]
    fn frobenius_examples() {
        let a = diag_state(&[1.0, 0.0]);
        let b = diag_state(&[0.5, 0.5]);
        assert_abs_diff_eq!(frobenius_sq_dist(&a, &b).unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(frobenius_sq_dist(&a, &a).unwrap(), 0.0);

        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = Complex64::new(0.5, 0.0);
        m[(1, 1)] = Complex64::new(0.5, 0.0);
        m[(0, 1)] = Complex64::new(0.1, 0.0);
        m[(1, 0)] = Complex64::new(0.1, 0.0);
        let c = DensityMatrix::new(m).unwrap();
        assert_abs_diff_eq!(frobenius_sq_dist(&c, &b).unwrap(), 0.02, epsilon = 1e-15);
    }

    #[test]
    fn haar_unitary_is_unitary_and_deterministic() {
        let u = haar_unitary(4, 3).unwrap();
        assert!(linalg::unitary_deviation(&u) <= 1e-12);
        let v = haar_unitary(4, 3).unwrap();
        assert!(u.iter().zip(v.iter()).all(|(x, y)| x == y));
    }

    #[test]
    fn haar_first_entry_moment() {
        // E|U_11|^2 = 1/d; Monte-Carlo check at d = 2.
        let n = 10_000;
        let mut acc = 0.0;
        for i in 0..n {
            let u = haar_unitary(2, crate::rng::derive_seed(400, i)).unwrap();
            acc += u[(0, 0)].norm_sqr();
        }
        acc /= n as f64;
        assert!((acc - 0.5).abs() < 0.02, "mean |U11|^2 = {acc}");
    }

    #[test]
    fn param_index_matches_canonical_order() {
        let chart = eigen_chart(&diag_state(&[0.7, 0.3, 0.0, 0.0]), 2).unwrap();
        let idx = chart.param_index();
        assert_eq!(idx.len(), 11);
        assert_eq!(idx[0], ParamCoord::Diag { row: 1 });
        assert_eq!(idx[1], ParamCoord::Re { row: 0, col: 1 });
        assert_eq!(idx[6], ParamCoord::Im { row: 0, col: 1 });
    }

    #[test]
    fn density_matrix_validation() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = Complex64::new(0.9, 0.0);
        m[(1, 1)] = Complex64::new(0.2, 0.0);
        assert!(matches!(
            DensityMatrix::new(m.clone()),
            Err(Error::TraceNotOne { .. })
        ));
        m[(1, 1)] = Complex64::new(0.1, 0.0);
        m[(0, 1)] = Complex64::new(0.0, 0.4);
        m[(1, 0)] = Complex64::new(0.0, 0.4);
        assert!(matches!(
            DensityMatrix::new(m.clone()),
            Err(Error::NotHermitian { .. })
        ));
        m[(1, 0)] = Complex64::new(0.0, -0.4);
        assert!(matches!(
            DensityMatrix::new(m),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
    }
}
