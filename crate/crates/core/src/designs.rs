//! Measurement designs: Pauli settings, Haar-random bases and two-outcome
//! Pauli observables, with outcome probabilities and their analytic
//! gradients in a local chart.
//!
//! Conventions, fixed globally so counts tables are bit-exact:
//! eigenvectors `|z+> = (1,0)`, `|z-> = (0,1)`, `|x±> = (1,±1)/sqrt(2)`,
//! `|y±> = (1,±i)/sqrt(2)`; outcome `o in {+1,-1}^n` maps to column index
//! `sum_i b_i 2^(n-i)` with `b_i = (1-o_i)/2` and qubit 1 most significant.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::params::ParamCoord;
use crate::rng;
use crate::states::{DensityMatrix, LocalChart, UNITARY_TOL};
use crate::{CMatrix, Complex64, RMatrix, RVector};

/// Measurement axis of one qubit: `x < y < z` lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl PauliAxis {
    fn from_char(c: char) -> Result<Self> {
        match c {
            'x' => Ok(PauliAxis::X),
            'y' => Ok(PauliAxis::Y),
            'z' => Ok(PauliAxis::Z),
            other => Err(Error::InvalidLabel(alloc::format!(
                "unexpected character `{other}` in Pauli label"
            ))),
        }
    }

    fn as_char(self) -> char {
        match self {
            PauliAxis::X => 'x',
            PauliAxis::Y => 'y',
            PauliAxis::Z => 'z',
        }
    }

    /// Column `o` (0 = outcome +1, 1 = outcome -1) is the eigenvector of
    /// the axis Pauli matrix with eigenvalue `(-1)^o`.
    fn eigenvector_matrix(self) -> CMatrix {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let (c00, c01, c10, c11) = match self {
            PauliAxis::Z => (
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
            ),
            PauliAxis::X => (
                Complex64::new(h, 0.0),
                Complex64::new(h, 0.0),
                Complex64::new(h, 0.0),
                Complex64::new(-h, 0.0),
            ),
            PauliAxis::Y => (
                Complex64::new(h, 0.0),
                Complex64::new(h, 0.0),
                Complex64::new(0.0, h),
                Complex64::new(0.0, -h),
            ),
        };
        CMatrix::from_row_slice(2, 2, &[c00, c01, c10, c11])
    }

    fn pauli_matrix(self) -> CMatrix {
        let (c00, c01, c10, c11) = match self {
            PauliAxis::X => (
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
            ),
            PauliAxis::Y => (
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, 0.0),
            ),
            PauliAxis::Z => (
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(-1.0, 0.0),
            ),
        };
        CMatrix::from_row_slice(2, 2, &[c00, c01, c10, c11])
    }
}

/// A setting label `s in {x,y,z}^n`, qubit 1 first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliLabel(Vec<PauliAxis>);

impl PauliLabel {
    pub fn new(axes: Vec<PauliAxis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidLabel(String::from("empty Pauli label")));
        }
        Ok(PauliLabel(axes))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let axes = text
            .chars()
            .map(PauliAxis::from_char)
            .collect::<Result<Vec<_>>>()?;
        PauliLabel::new(axes)
    }

    /// Label at lexicographic position `index` among the `3^n` labels.
    fn from_index(n: usize, mut index: usize) -> Self {
        let mut axes = alloc::vec![PauliAxis::X; n];
        for i in (0..n).rev() {
            axes[i] = match index % 3 {
                0 => PauliAxis::X,
                1 => PauliAxis::Y,
                _ => PauliAxis::Z,
            };
            index /= 3;
        }
        PauliLabel(axes)
    }

    pub fn axes(&self) -> &[PauliAxis] {
        &self.0
    }

    pub fn n_qubits(&self) -> usize {
        self.0.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.0.len()
    }
}

impl core::fmt::Display for PauliLabel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        for axis in &self.0 {
            write!(f, "{}", axis.as_char())?;
        }
        Ok(())
    }
}

/// A coarse observable label `b in {0,x,y,z}^n`, not all identity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObservableLabel(Vec<Option<PauliAxis>>);

impl ObservableLabel {
    pub fn new(axes: Vec<Option<PauliAxis>>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidLabel(String::from("empty observable label")));
        }
        if axes.iter().all(Option::is_none) {
            return Err(Error::IdentityObservable);
        }
        Ok(ObservableLabel(axes))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let axes = text
            .chars()
            .map(|c| {
                if c == '0' {
                    Ok(None)
                } else {
                    PauliAxis::from_char(c).map(Some)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        ObservableLabel::new(axes)
    }

    /// Label at position `index` in `1..4^n` (0 is the rejected identity),
    /// base-4 big-endian with digits `0 < x < y < z`.
    fn from_index(n: usize, mut index: usize) -> Result<Self> {
        let mut axes = alloc::vec![None; n];
        for i in (0..n).rev() {
            axes[i] = match index % 4 {
                0 => None,
                1 => Some(PauliAxis::X),
                2 => Some(PauliAxis::Y),
                _ => Some(PauliAxis::Z),
            };
            index /= 4;
        }
        ObservableLabel::new(axes)
    }

    pub fn axes(&self) -> &[Option<PauliAxis>] {
        &self.0
    }

    pub fn n_qubits(&self) -> usize {
        self.0.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.0.len()
    }

    /// A fine setting compatible with this observable: `s_i = b_i` on the
    /// non-identity positions, `z` elsewhere. The spectral projectors do
    /// not depend on the filler choice.
    pub fn fine_setting(&self) -> PauliLabel {
        PauliLabel(
            self.0
                .iter()
                .map(|axis| axis.unwrap_or(PauliAxis::Z))
                .collect(),
        )
    }

    pub fn is_compatible_with(&self, setting: &PauliLabel) -> Result<()> {
        if setting.n_qubits() != self.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits(),
                found: setting.n_qubits(),
            });
        }
        for (position, (b, s)) in self.0.iter().zip(setting.axes()).enumerate() {
            if let Some(axis) = b {
                if axis != s {
                    return Err(Error::IncompatibleObservable { position });
                }
            }
        }
        Ok(())
    }

    /// The `±1` eigenvalue of `sigma_b` on fine outcome `outcome`:
    /// the product of `o_i` over non-identity positions.
    pub fn outcome_sign(&self, outcome: usize) -> i8 {
        let n = self.n_qubits();
        let mut sign = 1i8;
        for (i, axis) in self.0.iter().enumerate() {
            if axis.is_some() && (outcome >> (n - 1 - i)) & 1 == 1 {
                sign = -sign;
            }
        }
        sign
    }
}

impl core::fmt::Display for ObservableLabel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        for axis in &self.0 {
            match axis {
                None => write!(f, "0")?,
                Some(a) => write!(f, "{}", a.as_char())?,
            }
        }
        Ok(())
    }
}

/// One measurement setting.
#[derive(Debug, Clone, PartialEq)]
pub enum Setting {
    /// Tensor-product Pauli eigenbasis.
    Pauli(PauliLabel),
    /// Explicit orthonormal basis; columns are the outcome vectors.
    Basis(CMatrix),
    /// Two-outcome Pauli observable.
    Observable(ObservableLabel),
}

impl Setting {
    pub fn dim(&self) -> usize {
        match self {
            Setting::Pauli(label) => label.dim(),
            Setting::Basis(u) => u.nrows(),
            Setting::Observable(label) => label.dim(),
        }
    }

    pub fn n_outcomes(&self) -> usize {
        match self {
            Setting::Observable(_) => 2,
            other => other.dim(),
        }
    }

    pub fn kind(&self) -> DesignKind {
        match self {
            Setting::Pauli(_) => DesignKind::Pauli,
            Setting::Basis(_) => DesignKind::Haar,
            Setting::Observable(_) => DesignKind::Coarse,
        }
    }
}

/// Which family a design draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignKind {
    Pauli,
    Haar,
    Coarse,
}

/// An ordered collection of settings of one kind and dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    kind: DesignKind,
    settings: Vec<Setting>,
    replacement: bool,
    seed: u64,
}

impl Design {
    pub fn new(
        kind: DesignKind,
        settings: Vec<Setting>,
        replacement: bool,
        seed: u64,
    ) -> Result<Self> {
        if settings.is_empty() {
            return Err(Error::EmptyDesign);
        }
        let dim = settings[0].dim();
        for s in &settings {
            if s.kind() != kind || s.dim() != dim {
                return Err(Error::MixedSettingKinds);
            }
            if let Setting::Basis(u) = s {
                let dev = linalg::unitary_deviation(u);
                if dev > UNITARY_TOL {
                    return Err(Error::InvalidBasis { deviation: dev });
                }
            }
        }
        if !replacement {
            match kind {
                DesignKind::Pauli => {
                    let mut labels: Vec<&PauliLabel> = settings
                        .iter()
                        .map(|s| match s {
                            Setting::Pauli(l) => l,
                            _ => unreachable!(),
                        })
                        .collect();
                    labels.sort();
                    if labels.windows(2).any(|w| w[0] == w[1]) {
                        return Err(Error::MixedSettingKinds);
                    }
                }
                DesignKind::Coarse => {
                    let mut labels: Vec<&ObservableLabel> = settings
                        .iter()
                        .map(|s| match s {
                            Setting::Observable(l) => l,
                            _ => unreachable!(),
                        })
                        .collect();
                    labels.sort();
                    if labels.windows(2).any(|w| w[0] == w[1]) {
                        return Err(Error::MixedSettingKinds);
                    }
                }
                // Haar bases are distinct almost surely.
                DesignKind::Haar => {}
            }
        }
        Ok(Design {
            kind,
            settings,
            replacement,
            seed,
        })
    }

    /// All `3^n` Pauli settings in lexicographic order.
    pub fn full_pauli(n: usize) -> Result<Self> {
        let settings = enumerate_pauli_settings(n)?
            .into_iter()
            .map(Setting::Pauli)
            .collect();
        Design::new(DesignKind::Pauli, settings, false, 0)
    }

    /// All `4^n - 1` non-identity coarse observables in lexicographic order.
    pub fn full_coarse(n: usize) -> Result<Self> {
        let settings = enumerate_coarse_observables(n)?
            .into_iter()
            .map(Setting::Observable)
            .collect();
        Design::new(DesignKind::Coarse, settings, false, 0)
    }

    pub fn kind(&self) -> DesignKind {
        self.kind
    }

    pub fn settings(&self) -> &[Setting] {
        &self.settings
    }

    pub fn k(&self) -> usize {
        self.settings.len()
    }

    pub fn dim(&self) -> usize {
        self.settings[0].dim()
    }

    pub fn replacement(&self) -> bool {
        self.replacement
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// The `d` orthonormal outcome vectors of a Pauli setting, as the columns
/// of a unitary (tensor product of single-qubit eigenvector matrices).
pub fn pauli_setting_basis(label: &PauliLabel) -> CMatrix {
    let mut basis = CMatrix::identity(1, 1);
    for axis in label.axes() {
        basis = basis.kronecker(&axis.eigenvector_matrix());
    }
    basis
}

/// All `3^n` Pauli labels in lexicographic order (`x < y < z`).
pub fn enumerate_pauli_settings(n: usize) -> Result<Vec<PauliLabel>> {
    if n == 0 {
        return Err(Error::InvalidDimension { dim: 0 });
    }
    let total = 3usize.pow(n as u32);
    Ok((0..total).map(|i| PauliLabel::from_index(n, i)).collect())
}

/// All `4^n - 1` non-identity observable labels in lexicographic order.
pub fn enumerate_coarse_observables(n: usize) -> Result<Vec<ObservableLabel>> {
    if n == 0 {
        return Err(Error::InvalidDimension { dim: 0 });
    }
    let total = 4usize.pow(n as u32);
    (1..total)
        .map(|i| ObservableLabel::from_index(n, i))
        .collect()
}

fn sample_indices(
    total: usize,
    k: usize,
    replacement: bool,
    seed: u64,
) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::EmptyDesign);
    }
    let mut rng = rng::rng_from_seed(seed);
    if replacement {
        Ok((0..k).map(|_| rng.random_range(0..total)).collect())
    } else {
        if k > total {
            return Err(Error::NotEnoughSettings {
                requested: k,
                available: total,
            });
        }
        if k == total {
            // the unique exhaustive design, in canonical enumeration order
            return Ok((0..total).collect());
        }
        // Partial Fisher-Yates: the first k slots are a uniform sample.
        let mut pool: Vec<usize> = (0..total).collect();
        for i in 0..k {
            let j = rng.random_range(i..total);
            pool.swap(i, j);
        }
        pool.truncate(k);
        Ok(pool)
    }
}

/// Uniformly sampled Pauli design; deterministic in `seed`.
pub fn sample_settings(n: usize, k: usize, replacement: bool, seed: u64) -> Result<Design> {
    if n == 0 {
        return Err(Error::InvalidDimension { dim: 0 });
    }
    let total = 3usize.pow(n as u32);
    let settings = sample_indices(total, k, replacement, seed)?
        .into_iter()
        .map(|i| Setting::Pauli(PauliLabel::from_index(n, i)))
        .collect();
    Design::new(DesignKind::Pauli, settings, replacement, seed)
}

/// Design of `k` independent Haar-random orthonormal bases.
pub fn haar_basis_design(d: usize, k: usize, seed: u64) -> Result<Design> {
    if k == 0 {
        return Err(Error::EmptyDesign);
    }
    let settings = (0..k)
        .map(|i| {
            crate::states::haar_unitary(d, rng::derive_seed(seed, i as u64)).map(Setting::Basis)
        })
        .collect::<Result<Vec<_>>>()?;
    Design::new(DesignKind::Haar, settings, true, seed)
}

/// Uniformly sampled non-identity coarse observables; deterministic in `seed`.
pub fn sample_coarse_observables(
    n: usize,
    k: usize,
    replacement: bool,
    seed: u64,
) -> Result<Design> {
    if n == 0 {
        return Err(Error::InvalidDimension { dim: 0 });
    }
    let total = 4usize.pow(n as u32) - 1;
    let settings = sample_indices(total, k, replacement, seed)?
        .into_iter()
        .map(|i| ObservableLabel::from_index(n, i + 1).map(Setting::Observable))
        .collect::<Result<Vec<_>>>()?;
    Design::new(DesignKind::Coarse, settings, replacement, seed)
}

/// The two spectral projectors `(P+, P-)` of `sigma_b`.
pub fn pauli_observable_projectors(label: &ObservableLabel) -> (CMatrix, CMatrix) {
    let mut sigma = CMatrix::identity(1, 1);
    for axis in label.axes() {
        let block = match axis {
            None => CMatrix::identity(2, 2),
            Some(a) => a.pauli_matrix(),
        };
        sigma = sigma.kronecker(&block);
    }
    let id = CMatrix::identity(label.dim(), label.dim());
    let plus = (&id + &sigma).scale(0.5);
    let minus = (id - sigma).scale(0.5);
    (plus, minus)
}

/// Outcome probabilities and their `D x n_outcomes` gradient matrix at the
/// chart point `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTable {
    pub probs: RVector,
    pub grads: RMatrix,
}

/// Probabilities `p(o) = <v_o| rho_theta |v_o>` and the analytic gradients
/// `d p(o) / d theta_a` for one setting.
///
/// Gradients are evaluated from the outcome vectors expressed in the chart
/// eigenbasis; the trace constraint is folded into the diagonal
/// derivatives. For coarse observables the fine-setting table is folded
/// into the two spectral outcomes (`+1` first).
pub fn probabilities(
    chart: &LocalChart,
    theta: &RVector,
    setting: &Setting,
) -> Result<ProbabilityTable> {
    if setting.dim() != chart.dim() {
        return Err(Error::DimensionMismatch {
            expected: chart.dim(),
            found: setting.dim(),
        });
    }
    match setting {
        Setting::Pauli(label) => basis_probabilities(chart, theta, &pauli_setting_basis(label)),
        Setting::Basis(u) => basis_probabilities(chart, theta, u),
        Setting::Observable(label) => {
            let fine =
                basis_probabilities(chart, theta, &pauli_setting_basis(&label.fine_setting()))?;
            let d = chart.dim();
            let n_params = chart.n_params();
            let mut probs = RVector::zeros(2);
            let mut grads = RMatrix::zeros(n_params, 2);
            for o in 0..d {
                let slot = if label.outcome_sign(o) == 1 { 0 } else { 1 };
                probs[slot] += fine.probs[o];
                for a in 0..n_params {
                    grads[(a, slot)] += fine.grads[(a, o)];
                }
            }
            Ok(ProbabilityTable { probs, grads })
        }
    }
}

fn basis_probabilities(
    chart: &LocalChart,
    theta: &RVector,
    basis: &CMatrix,
) -> Result<ProbabilityTable> {
    let d = chart.dim();
    let r = chart.rank();
    let n_params = chart.n_params();
    let m = chart.chart_matrix(theta)?;
    // Outcome vectors in the chart eigenbasis.
    let w = chart.eigenbasis().adjoint() * basis;
    let mut probs = RVector::zeros(d);
    let mut grads = RMatrix::zeros(n_params, d);
    for o in 0..d {
        let col = w.column(o);
        let mut p = 0.0;
        for i in 0..r {
            p += m[(i, i)].re * col[i].norm_sqr();
            for j in (i + 1)..d {
                p += 2.0 * (m[(i, j)] * col[i].conj() * col[j]).re;
            }
        }
        probs[o] = p.max(0.0);
        for (a, coord) in chart.params().iter().enumerate() {
            grads[(a, o)] = match coord {
                ParamCoord::Diag { row } => col[row].norm_sqr() - col[0].norm_sqr(),
                ParamCoord::Re { row, col: c } => 2.0 * (col[row] * col[c].conj()).re,
                ParamCoord::Im { row, col: c } => 2.0 * (col[row] * col[c].conj()).im,
            };
        }
    }
    Ok(ProbabilityTable { probs, grads })
}

/// Outcome probabilities of a setting at a full density matrix (no chart).
pub fn outcome_probabilities(rho: &DensityMatrix, setting: &Setting) -> Result<Vec<f64>> {
    if setting.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: setting.dim(),
        });
    }
    let fine = |basis: &CMatrix| -> Vec<f64> {
        let x = rho.matrix() * basis;
        (0..basis.ncols())
            .map(|o| {
                let p: Complex64 = basis
                    .column(o)
                    .iter()
                    .zip(x.column(o).iter())
                    .map(|(b, xv)| b.conj() * xv)
                    .sum();
                p.re.max(0.0)
            })
            .collect()
    };
    match setting {
        Setting::Pauli(label) => Ok(fine(&pauli_setting_basis(label))),
        Setting::Basis(u) => Ok(fine(u)),
        Setting::Observable(label) => {
            let ps = fine(&pauli_setting_basis(&label.fine_setting()));
            let mut out = alloc::vec![0.0; 2];
            for (o, p) in ps.iter().enumerate() {
                let slot = if label.outcome_sign(o) == 1 { 0 } else { 1 };
                out[slot] += p;
            }
            Ok(out)
        }
    }
}

/// Empirical Pauli expectation `sum_o (prod_{i: b_i != 0} o_i) N(o|s) / m`
/// from the counts of a compatible fine setting.
pub fn pauli_expectation_from_counts(
    setting: &PauliLabel,
    counts: &[u64],
    observable: &ObservableLabel,
) -> Result<f64> {
    observable.is_compatible_with(setting)?;
    if counts.len() != setting.dim() {
        return Err(Error::DimensionMismatch {
            expected: setting.dim(),
            found: counts.len(),
        });
    }
    let m: u64 = counts.iter().sum();
    if m == 0 {
        return Err(Error::InvalidParameter {
            name: "counts total",
            value: 0.0,
        });
    }
    let mut acc = 0.0;
    for (o, &c) in counts.iter().enumerate() {
        acc += f64::from(observable.outcome_sign(o)) * c as f64;
    }
    Ok(acc / m as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{eigen_chart, random_rank_r_state};
    use approx::assert_abs_diff_eq;

    fn pure_qubit_chart() -> LocalChart {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = Complex64::new(1.0, 0.0);
        eigen_chart(&DensityMatrix::new(m).unwrap(), 1).unwrap()
    }

    #[test]
    fn z_basis_is_standard() {
        let b = pauli_setting_basis(&PauliLabel::parse("z").unwrap());
        assert_eq!(b, CMatrix::identity(2, 2));
        let b2 = pauli_setting_basis(&PauliLabel::parse("zz").unwrap());
        assert_eq!(b2, CMatrix::identity(4, 4));
    }

    #[test]
    fn x_basis_eigenvector_check() {
        let b = pauli_setting_basis(&PauliLabel::parse("x").unwrap());
        let sx = PauliAxis::X.pauli_matrix();
        let v = b.column(0).clone_owned();
        let expect: Complex64 = (v.adjoint() * &sx * &v)[(0, 0)];
        assert_abs_diff_eq!(expect.re, 1.0, epsilon = 1e-15);
        let v1 = b.column(1).clone_owned();
        let expect1: Complex64 = (v1.adjoint() * sx * v1)[(0, 0)];
        assert_abs_diff_eq!(expect1.re, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn setting_completeness() {
        for text in ["xy", "yz", "xyz"] {
            let b = pauli_setting_basis(&PauliLabel::parse(text).unwrap());
            assert!(linalg::unitary_deviation(&b) <= 1e-12);
        }
    }

    #[test]
    fn enumerate_counts_and_order() {
        let one = enumerate_pauli_settings(1).unwrap();
        assert_eq!(
            one.iter().map(|l| alloc::format!("{l}")).collect::<Vec<_>>(),
            ["x", "y", "z"]
        );
        let two = enumerate_pauli_settings(2).unwrap();
        assert_eq!(two.len(), 9);
        assert_eq!(alloc::format!("{}", two[0]), "xx");
        assert_eq!(alloc::format!("{}", two[8]), "zz");
        assert_eq!(enumerate_pauli_settings(4).unwrap().len(), 81);
    }

    #[test]
    fn sample_without_replacement_is_permutation() {
        let design = sample_settings(1, 3, false, 9).unwrap();
        let mut labels: Vec<String> = design
            .settings()
            .iter()
            .map(|s| match s {
                Setting::Pauli(l) => alloc::format!("{l}"),
                _ => unreachable!(),
            })
            .collect();
        labels.sort();
        assert_eq!(labels, ["x", "y", "z"]);
    }

    #[test]
    fn sample_settings_deterministic() {
        let a = sample_settings(4, 20, false, 123).unwrap();
        let b = sample_settings(4, 20, false, 123).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.k(), 20);
    }

    #[test]
    fn sample_with_replacement_is_uniform() {
        let k = 10_000;
        let design = sample_settings(2, k, true, 31).unwrap();
        let mut freq = [0usize; 9];
        for s in design.settings() {
            if let Setting::Pauli(l) = s {
                let idx = l
                    .axes()
                    .iter()
                    .fold(0usize, |acc, a| acc * 3 + *a as usize);
                freq[idx] += 1;
            }
        }
        let expected = k as f64 / 9.0;
        let sigma = (k as f64 * (1.0 / 9.0) * (8.0 / 9.0)).sqrt();
        for (i, &f) in freq.iter().enumerate() {
            assert!(
                (f as f64 - expected).abs() <= 3.0 * sigma,
                "setting {i}: {f} vs {expected}"
            );
        }
    }

    #[test]
    fn sample_rejects_oversized_requests() {
        assert!(matches!(
            sample_settings(1, 4, false, 0),
            Err(Error::NotEnoughSettings { .. })
        ));
    }

    #[test]
    fn haar_design_members_are_unitary_and_deterministic() {
        let design = haar_basis_design(4, 3, 5).unwrap();
        for s in design.settings() {
            if let Setting::Basis(u) = s {
                assert!(linalg::unitary_deviation(u) <= 1e-12);
            }
        }
        assert_eq!(design, haar_basis_design(4, 3, 5).unwrap());
    }

    #[test]
    fn haar_design_first_outcome_moment() {
        // p(o=0) for rho = diag(1,0) is |U_11|^2, mean 1/d.
        let mut rho = CMatrix::zeros(2, 2);
        rho[(0, 0)] = Complex64::new(1.0, 0.0);
        let rho = DensityMatrix::new(rho).unwrap();
        let mut acc = 0.0;
        let n = 10_000;
        for i in 0..n {
            let design = haar_basis_design(2, 1, rng::derive_seed(77, i)).unwrap();
            let p = outcome_probabilities(&rho, &design.settings()[0]).unwrap();
            acc += p[0];
        }
        acc /= n as f64;
        assert!((acc - 0.5).abs() < 0.02, "mean p(0) = {acc}");
    }

    #[test]
    fn observable_projectors_examples() {
        let (p, m) = pauli_observable_projectors(&ObservableLabel::parse("z").unwrap());
        assert_abs_diff_eq!(p[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[(1, 1)].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m[(1, 1)].re, 1.0, epsilon = 1e-15);

        let (pzz, _) = pauli_observable_projectors(&ObservableLabel::parse("zz").unwrap());
        for (i, want) in [1.0, 0.0, 0.0, 1.0].iter().enumerate() {
            assert_abs_diff_eq!(pzz[(i, i)].re, want, epsilon = 1e-15);
        }

        let (px0, mx0) = pauli_observable_projectors(&ObservableLabel::parse("x0").unwrap());
        assert_abs_diff_eq!(px0.trace().re, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mx0.trace().re, 2.0, epsilon = 1e-12);
        let id = CMatrix::identity(4, 4);
        assert!((&px0 + &mx0 - id).iter().all(|z| z.norm() < 1e-12));
        // idempotent
        assert!((&px0 * &px0 - &px0).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn projectors_reject_identity() {
        assert!(matches!(
            ObservableLabel::parse("00"),
            Err(Error::IdentityObservable)
        ));
    }

    #[test]
    fn probabilities_pure_state_z() {
        let chart = pure_qubit_chart();
        let table = probabilities(
            &chart,
            &chart.theta0(),
            &Setting::Pauli(PauliLabel::parse("z").unwrap()),
        )
        .unwrap();
        assert_abs_diff_eq!(table.probs[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(table.probs[1], 0.0, epsilon = 1e-15);
        // both chart coordinates are off-diagonal; every gradient vanishes
        assert!(table.grads.iter().all(|g| g.abs() < 1e-15));
    }

    #[test]
    fn probabilities_pure_state_x_gradients() {
        let chart = pure_qubit_chart();
        let table = probabilities(
            &chart,
            &chart.theta0(),
            &Setting::Pauli(PauliLabel::parse("x").unwrap()),
        )
        .unwrap();
        assert_abs_diff_eq!(table.probs[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(table.probs[1], 0.5, epsilon = 1e-15);
        // params: (Re rho_01, Im rho_01)
        assert_abs_diff_eq!(table.grads[(0, 0)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(table.grads[(1, 0)], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(table.grads[(0, 1)], -1.0, epsilon = 1e-15);
    }

    #[test]
    fn standard_basis_gradients_collapse() {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = Complex64::new(0.7, 0.0);
        m[(1, 1)] = Complex64::new(0.3, 0.0);
        let chart = eigen_chart(&DensityMatrix::new(m).unwrap(), 2).unwrap();
        let table = probabilities(
            &chart,
            &chart.theta0(),
            &Setting::Pauli(PauliLabel::parse("zz").unwrap()),
        )
        .unwrap();
        for (a, coord) in chart.params().iter().enumerate() {
            for o in 0..4 {
                let want = match coord {
                    ParamCoord::Diag { row } => {
                        (if o == row { 1.0 } else { 0.0 }) - (if o == 0 { 1.0 } else { 0.0 })
                    }
                    _ => 0.0,
                };
                assert_abs_diff_eq!(table.grads[(a, o)], want, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn gradient_columns_sum_to_zero() {
        let rho = random_rank_r_state(8, 2, 21).unwrap();
        let chart = eigen_chart(&rho, 2).unwrap();
        for seed in 0..3 {
            let design = haar_basis_design(8, 1, seed).unwrap();
            let table = probabilities(&chart, &chart.theta0(), &design.settings()[0]).unwrap();
            assert_abs_diff_eq!(table.probs.sum(), 1.0, epsilon = 1e-12);
            for a in 0..chart.n_params() {
                let row_sum: f64 = (0..8).map(|o| table.grads[(a, o)]).sum();
                assert!(row_sum.abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn coarse_graining_consistency() {
        // Tr(rho sigma_b) from folded fine probabilities vs the projector route.
        let rho = random_rank_r_state(4, 2, 33).unwrap();
        for text in ["zz", "x0", "yx"] {
            let label = ObservableLabel::parse(text).unwrap();
            let coarse = outcome_probabilities(&rho, &Setting::Observable(label.clone())).unwrap();
            let expect_from_fold = coarse[0] - coarse[1];
            let (p_plus, p_minus) = pauli_observable_projectors(&label);
            let direct = (rho.matrix() * (p_plus - p_minus)).trace().re;
            assert_abs_diff_eq!(expect_from_fold, direct, epsilon = 1e-12);
        }
    }

    #[test]
    fn expectation_from_counts_examples() {
        let s = PauliLabel::parse("z").unwrap();
        let b = ObservableLabel::parse("z").unwrap();
        assert_abs_diff_eq!(
            pauli_expectation_from_counts(&s, &[75, 25], &b).unwrap(),
            0.5,
            epsilon = 1e-15
        );

        let s2 = PauliLabel::parse("zz").unwrap();
        let b2 = ObservableLabel::parse("zz").unwrap();
        // all counts on the ++ outcome
        assert_abs_diff_eq!(
            pauli_expectation_from_counts(&s2, &[40, 0, 0, 0], &b2).unwrap(),
            1.0,
            epsilon = 1e-15
        );

        // z0 marginalizes qubit 2; uniform counts give 0
        let b3 = ObservableLabel::parse("z0").unwrap();
        assert_abs_diff_eq!(
            pauli_expectation_from_counts(&s2, &[10, 10, 10, 10], &b3).unwrap(),
            0.0,
            epsilon = 1e-15
        );

        let incompatible = ObservableLabel::parse("x0").unwrap();
        assert!(matches!(
            pauli_expectation_from_counts(&s2, &[1, 1, 1, 1], &incompatible),
            Err(Error::IncompatibleObservable { position: 0 })
        ));
    }

    #[test]
    fn design_validation() {
        assert!(matches!(
            Design::new(DesignKind::Pauli, alloc::vec![], false, 0),
            Err(Error::EmptyDesign)
        ));
        let dup = alloc::vec![
            Setting::Pauli(PauliLabel::parse("x").unwrap()),
            Setting::Pauli(PauliLabel::parse("x").unwrap()),
        ];
        assert!(Design::new(DesignKind::Pauli, dup.clone(), false, 0).is_err());
        assert!(Design::new(DesignKind::Pauli, dup, true, 0).is_ok());
    }
}
