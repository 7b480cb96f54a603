//! Information-matrix functionals: the weight matrix `G`, classical Fisher
//! information per setting and per design, the quantum Fisher bound, the
//! closed-form mean Fisher over Haar-random bases, whitening, asymptotic
//! mean squared error and the concentration sample-size bound.

use alloc::vec::Vec;

use crate::designs::{self, Design, ObservableLabel, Setting};
use crate::error::{Error, Result};
use crate::params::{ParamCoord, ParamSet};
use crate::scalar;
use crate::states::LocalChart;
use crate::RMatrix;

/// Outcomes with probability below this are skipped (their gradient must
/// vanish, otherwise the setting sits on a model-boundary singularity).
pub const PROB_FLOOR: f64 = 1e-12;
/// Gradient norm above which a below-floor outcome is an error.
pub const GRAD_TOL: f64 = 1e-9;
/// Relative eigenvalue cutoff below which a Fisher matrix counts as
/// singular and the design as non-identifiable.
pub const RCOND: f64 = 1e-10;

/// A `D x D` real symmetric information matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix {
    mat: RMatrix,
}

impl FisherMatrix {
    /// Validates shape and symmetry (to `1e-10`), then symmetrizes exactly.
    pub fn new(mat: RMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                found: mat.ncols(),
            });
        }
        let mut dev: f64 = 0.0;
        for i in 0..mat.nrows() {
            for j in (i + 1)..mat.ncols() {
                dev = dev.max((mat[(i, j)] - mat[(j, i)]).abs());
            }
        }
        if dev > 1e-10 {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let sym = (&mat + mat.transpose()).scale(0.5);
        Ok(FisherMatrix { mat: sym })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.mat
    }

    pub fn into_inner(self) -> RMatrix {
        self.mat
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let se = self.mat.clone().symmetric_eigen();
        let mut v: Vec<f64> = se.eigenvalues.iter().cloned().collect();
        v.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        v
    }
}

/// Weight matrix of the squared Frobenius distance in chart coordinates:
/// `G[a][b] = Tr[(d rho/d theta_a)(d rho/d theta_b)]`, which is `1 + delta`
/// on the diagonal block and `2 delta` on the Re/Im blocks.
pub fn weight_matrix(chart: &LocalChart) -> FisherMatrix {
    weight_matrix_for(chart.params())
}

/// The weight matrix for a `(d, r)` coordinate set without a chart.
pub fn weight_matrix_for(params: ParamSet) -> FisherMatrix {
    let n_diag = params.n_diag();
    let dim = params.dim();
    let mut g = RMatrix::zeros(dim, dim);
    for a in 0..n_diag {
        for b in 0..n_diag {
            g[(a, b)] = if a == b { 2.0 } else { 1.0 };
        }
    }
    for a in n_diag..dim {
        g[(a, a)] = 2.0;
    }
    FisherMatrix { mat: g }
}

/// Classical Fisher information of one setting at the chart point:
/// `I[a][b] = sum_o (1/p_o) (dp_o/d theta_a)(dp_o/d theta_b)`.
///
/// Outcomes below [`PROB_FLOOR`] contribute nothing when their gradient
/// vanishes and raise [`Error::BoundarySingularity`] otherwise.
pub fn fisher_single(chart: &LocalChart, setting: &Setting) -> Result<FisherMatrix> {
    FisherMatrix::new(fisher_single_raw(chart, setting)?)
}

fn fisher_single_raw(chart: &LocalChart, setting: &Setting) -> Result<RMatrix> {
    let table = designs::probabilities(chart, &chart.theta0(), setting)?;
    let dim = chart.n_params();
    let n_out = table.probs.len();
    let mut kept = Vec::with_capacity(n_out);
    for o in 0..n_out {
        let p = table.probs[o];
        if p < PROB_FLOOR {
            let gnorm = table.grads.column(o).norm();
            if gnorm > GRAD_TOL {
                return Err(Error::BoundarySingularity {
                    outcome: o,
                    probability: p,
                    gradient_norm: gnorm,
                });
            }
            continue;
        }
        kept.push(o);
    }
    let mut scaled = RMatrix::zeros(dim, n_out);
    for (slot, &o) in kept.iter().enumerate() {
        let inv_sqrt_p = 1.0 / scalar::sqrt(table.probs[o]);
        for a in 0..dim {
            scaled[(a, slot)] = table.grads[(a, o)] * inv_sqrt_p;
        }
    }
    let scaled = scaled.columns(0, kept.len()).clone_owned();
    let info = &scaled * scaled.transpose();
    Ok((&info + info.transpose()).scale(0.5))
}

/// Mean Fisher information of a design, `(1/k) sum_s I(rho|s)`, accumulated
/// with a fixed pairwise reduction tree so the result never depends on
/// evaluation order.
pub fn fisher_design(chart: &LocalChart, design: &Design) -> Result<FisherMatrix> {
    if design.dim() != chart.dim() {
        return Err(Error::DimensionMismatch {
            expected: chart.dim(),
            found: design.dim(),
        });
    }
    let sum = sum_tree(chart, design.settings(), 0, design.k())?;
    FisherMatrix::new(sum.unscale(design.k() as f64))
}

fn sum_tree(chart: &LocalChart, settings: &[Setting], lo: usize, hi: usize) -> Result<RMatrix> {
    if hi - lo == 1 {
        return fisher_single_raw(chart, &settings[lo]);
    }
    let mid = lo + (hi - lo) / 2;
    Ok(sum_tree(chart, settings, lo, mid)? + sum_tree(chart, settings, mid, hi)?)
}

/// Mean two-outcome Fisher information over a list of coarse observables.
pub fn fisher_coarse(chart: &LocalChart, observables: &[ObservableLabel]) -> Result<FisherMatrix> {
    if observables.is_empty() {
        return Err(Error::EmptyDesign);
    }
    let settings: Vec<Setting> = observables
        .iter()
        .cloned()
        .map(Setting::Observable)
        .collect();
    let sum = sum_tree(chart, &settings, 0, settings.len())?;
    FisherMatrix::new(sum.unscale(settings.len() as f64))
}

/// Quantum Fisher information of the chart: the double sum
/// `F[a][b] = sum_{i<=r} sum_{j<=d} 4 p_i / (p_i + p_j)^2
///            Re[(d_a rho)_ij (d_b rho)_ji]`
/// over the sparse derivative matrices, with the trace constraint folded in.
pub fn quantum_fisher(chart: &LocalChart) -> Result<FisherMatrix> {
    let r = chart.rank();
    for (index, &p) in chart.eigenvalues().iter().enumerate() {
        if p <= 0.0 {
            return Err(Error::SingularState {
                index,
                eigenvalue: p,
            });
        }
    }
    let params = chart.params();
    let dim = params.dim();
    let eig = |i: usize| -> f64 {
        if i < r {
            chart.eigenvalues()[i]
        } else {
            0.0
        }
    };
    let mut f = RMatrix::zeros(dim, dim);
    for a in 0..dim {
        let da = params.coord(a).derivative_entries();
        for b in a..dim {
            let db = params.coord(b).derivative_entries();
            let mut acc = 0.0;
            for &(i, j, va) in da.iter() {
                if i >= r {
                    continue;
                }
                for &(bi, bj, vb) in db.iter() {
                    if bi == j && bj == i {
                        let (pi, pj) = (eig(i), eig(j));
                        acc += 4.0 * pi / ((pi + pj) * (pi + pj)) * (va * vb).re;
                    }
                }
            }
            f[(a, b)] = acc;
            f[(b, a)] = acc;
        }
    }
    Ok(FisherMatrix { mat: f })
}

/// Closed-form mean Fisher information over Haar-random bases at the
/// equal-eigenvalue state `rho_0` of rank `r`: `2r/(r+1)` / `r/(r+1)` on
/// the diagonal block; `2r/(r+1)` for support pairs and `2` for cross
/// pairs on the Re/Im diagonals.
pub fn mean_haar_fisher(d: usize, r: usize) -> Result<FisherMatrix> {
    if d == 0 {
        return Err(Error::InvalidDimension { dim: d });
    }
    if r == 0 || r >= d {
        return Err(Error::InvalidRank { rank: r, dim: d });
    }
    let params = ParamSet::new(d, r)?;
    let dim = params.dim();
    let rf = r as f64;
    let mut m = RMatrix::zeros(dim, dim);
    for a in 0..params.n_diag() {
        for b in 0..params.n_diag() {
            m[(a, b)] = if a == b {
                2.0 * rf / (rf + 1.0)
            } else {
                rf / (rf + 1.0)
            };
        }
    }
    for a in params.n_diag()..dim {
        let value = match params.coord(a) {
            ParamCoord::Re { col, .. } | ParamCoord::Im { col, .. } => {
                if col < r {
                    2.0 * rf / (rf + 1.0)
                } else {
                    2.0
                }
            }
            ParamCoord::Diag { .. } => unreachable!(),
        };
        m[(a, a)] = value;
    }
    Ok(FisherMatrix { mat: m })
}

/// `G^{-1/2} I G^{-1/2}` with its extreme eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct Whitened {
    pub matrix: FisherMatrix,
    pub min_eig: f64,
    pub max_eig: f64,
}

/// Whitens an information matrix by a positive-definite weight matrix via
/// the symmetric eigendecomposition of `G`.
pub fn whiten(info: &FisherMatrix, weight: &FisherMatrix) -> Result<Whitened> {
    if info.dim() != weight.dim() {
        return Err(Error::DimensionMismatch {
            expected: weight.dim(),
            found: info.dim(),
        });
    }
    let se = weight.mat.clone().symmetric_eigen();
    let max = se.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = se.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if max <= 0.0 || min <= 1e-12 * max {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: min,
        });
    }
    let dim = weight.dim();
    let mut inv_sqrt = RMatrix::zeros(dim, dim);
    for k in 0..dim {
        let scale = 1.0 / scalar::sqrt(se.eigenvalues[k]);
        let v = se.eigenvectors.column(k);
        for i in 0..dim {
            for j in 0..dim {
                inv_sqrt[(i, j)] += scale * v[i] * v[j];
            }
        }
    }
    let w = &inv_sqrt * &info.mat * &inv_sqrt;
    let w = FisherMatrix::new((&w + w.transpose()).scale(0.5))?;
    let eigs = w.eigenvalues();
    Ok(Whitened {
        min_eig: eigs[0],
        max_eig: eigs[eigs.len() - 1],
        matrix: w,
    })
}

/// Result of an asymptotic MSE evaluation: either the value or an explicit
/// non-identifiability marker carrying the smallest Fisher eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DesignMse {
    Value(f64),
    NonIdentifiable { min_eig: f64 },
}

impl DesignMse {
    pub fn value(&self) -> Option<f64> {
        match *self {
            DesignMse::Value(v) => Some(v),
            DesignMse::NonIdentifiable { .. } => None,
        }
    }

    pub fn is_identifiable(&self) -> bool {
        matches!(self, DesignMse::Value(_))
    }
}

/// Asymptotic mean squared error `Tr(I^{-1} G) / N`.
///
/// Eigenvalues of `I` below `RCOND` times its largest eigenvalue mark the
/// design non-identifiable instead of silently pseudo-inverting.
pub fn asymptotic_mse(info: &FisherMatrix, weight: &FisherMatrix, n: u64) -> Result<DesignMse> {
    if info.dim() != weight.dim() {
        return Err(Error::DimensionMismatch {
            expected: weight.dim(),
            found: info.dim(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "N",
            value: 0.0,
        });
    }
    Ok(match trace_inv_weighted(info, weight) {
        DesignMse::Value(t) => DesignMse::Value(t / n as f64),
        other => other,
    })
}

fn trace_inv_weighted(info: &FisherMatrix, weight: &FisherMatrix) -> DesignMse {
    let se = info.mat.clone().symmetric_eigen();
    let max = se.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = se.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if max <= 0.0 || min < RCOND * max {
        return DesignMse::NonIdentifiable { min_eig: min };
    }
    let mut trace = 0.0;
    for k in 0..info.dim() {
        let v = se.eigenvectors.column(k);
        let gv = &weight.mat * v;
        let quad: f64 = v.iter().zip(gv.iter()).map(|(a, b)| a * b).sum();
        trace += quad / se.eigenvalues[k];
    }
    DesignMse::Value(trace)
}

/// Relative error `RE = Tr(I_S^{-1} G) / Tr(I_bar^{-1} G)`.
pub fn relative_error(
    info_design: &FisherMatrix,
    info_mean: &FisherMatrix,
    weight: &FisherMatrix,
) -> Result<DesignMse> {
    let numer = asymptotic_mse(info_design, weight, 1)?;
    let denom = asymptotic_mse(info_mean, weight, 1)?;
    Ok(match (numer, denom) {
        (DesignMse::Value(a), DesignMse::Value(b)) => DesignMse::Value(a / b),
        (DesignMse::NonIdentifiable { min_eig }, _)
        | (_, DesignMse::NonIdentifiable { min_eig }) => DesignMse::NonIdentifiable { min_eig },
    })
}

/// Number of Haar-random settings that keeps the whitened design Fisher
/// within `1 ± epsilon` of its mean with probability `1 - delta`:
/// `ceil( (4 ln 2 / epsilon^2) (r+1) ln(2D/delta) )`, `D = 2rd - r^2 - 1`,
/// natural logarithms throughout.
pub fn chernoff_k(epsilon: f64, delta: f64, r: usize, d: usize) -> Result<u64> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            value: epsilon,
        });
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter {
            name: "delta",
            value: delta,
        });
    }
    if d == 0 {
        return Err(Error::InvalidDimension { dim: d });
    }
    if r == 0 || r > d {
        return Err(Error::InvalidRank { rank: r, dim: d });
    }
    let big_d = (2 * r * d - r * r - 1) as f64;
    let c = 4.0 * core::f64::consts::LN_2 / (epsilon * epsilon);
    let k = c * (r as f64 + 1.0) * scalar::ln(2.0 * big_d / delta);
    Ok(scalar::ceil(k) as u64)
}
