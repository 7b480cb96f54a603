//! Small shared linear-algebra helpers.

use alloc::vec::Vec;

use crate::{CMatrix, Complex64};

/// Max entrywise modulus of `m - m^dagger`.
pub(crate) fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Max entrywise modulus of `u^dagger u - 1`.
pub(crate) fn unitary_deviation(u: &CMatrix) -> f64 {
    let gram = u.adjoint() * u;
    let n = gram.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((gram[(i, j)] - Complex64::new(want, 0.0)).norm());
        }
    }
    dev
}

/// `(m + m^dagger) / 2`, removing rounding asymmetry.
pub(crate) fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order and a deterministic phase fix: each eigenvector's
/// largest-modulus component is made real positive (first such component
/// wins on ties).
pub(crate) fn hermitian_eigen_desc(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let se = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        se.eigenvalues[b]
            .partial_cmp(&se.eigenvalues[a])
            .expect("eigenvalues of a Hermitian matrix are finite")
    });
    let mut basis = CMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        values.push(se.eigenvalues[src]);
        let col = se.eigenvectors.column(src);
        let mut pivot = Complex64::new(0.0, 0.0);
        let mut best = -1.0;
        for z in col.iter() {
            if z.norm() > best {
                best = z.norm();
                pivot = *z;
            }
        }
        let phase = if best > 0.0 {
            pivot.conj() / pivot.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            basis[(i, dst)] = col[i] * phase;
        }
    }
    (values, basis)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub(crate) fn min_eigenvalue(m: &CMatrix) -> f64 {
    let se = m.clone().symmetric_eigen();
    se.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_and_phase_fixed() {
        let m = CMatrix::from_diagonal(&crate::CVector::from_vec(
            [0.1, 0.5, 0.4]
                .iter()
                .map(|&x| Complex64::new(x, 0.0))
                .collect::<Vec<_>>(),
        ));
        let (vals, basis) = hermitian_eigen_desc(&m);
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        assert!((vals[0] - 0.5).abs() < 1e-14);
        for c in 0..3 {
            let col = basis.column(c);
            let mut pivot = Complex64::new(0.0, 0.0);
            let mut best = -1.0;
            for z in col.iter() {
                if z.norm() > best {
                    best = z.norm();
                    pivot = *z;
                }
            }
            assert!(pivot.im.abs() < 1e-14 && pivot.re > 0.0);
        }
    }
}
