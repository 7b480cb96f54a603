//! Canonical coordinates of the local rank-`r` chart.
//!
//! A rank-`r` state in its own eigenbasis is determined by its first `r`
//! rows. With the trace constraint folded into the `(0,0)` entry the free
//! real coordinates are, in canonical order:
//!
//! 1. the diagonal entries `rho[i][i]` for rows `1..r`,
//! 2. the real parts of `rho[i][j]` for `i < r`, `i < j < d`, lexicographic,
//! 3. the imaginary parts of the same entries in the same order,
//!
//! giving `D = 2rd - r^2 - 1` coordinates. Indices here are 0-based; the
//! constrained entry is `rho[0][0] = 1 - sum of diagonal coordinates`.

use crate::error::{Error, Result};
use crate::Complex64;

/// One real coordinate of the chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamCoord {
    /// Diagonal entry `rho[row][row]`, `1 <= row < r`.
    Diag { row: usize },
    /// `Re rho[row][col]`, `row < r`, `row < col < d`.
    Re { row: usize, col: usize },
    /// `Im rho[row][col]`, `row < r`, `row < col < d`.
    Im { row: usize, col: usize },
}

impl ParamCoord {
    /// Is this an off-diagonal (`Re`/`Im`) coordinate?
    pub fn is_off_diagonal(&self) -> bool {
        !matches!(self, ParamCoord::Diag { .. })
    }

    /// The two nonzero entries of the derivative matrix `d rho / d theta`
    /// in the chart basis, as `(row, col, value)` triples.
    pub fn derivative_entries(&self) -> [(usize, usize, Complex64); 2] {
        match *self {
            ParamCoord::Diag { row } => [
                (row, row, Complex64::new(1.0, 0.0)),
                (0, 0, Complex64::new(-1.0, 0.0)),
            ],
            ParamCoord::Re { row, col } => [
                (row, col, Complex64::new(1.0, 0.0)),
                (col, row, Complex64::new(1.0, 0.0)),
            ],
            ParamCoord::Im { row, col } => [
                (row, col, Complex64::new(0.0, 1.0)),
                (col, row, Complex64::new(0.0, -1.0)),
            ],
        }
    }
}

/// The full canonically ordered coordinate set for a `(d, r)` chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamSet {
    d: usize,
    r: usize,
}

impl ParamSet {
    pub fn new(d: usize, r: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension { dim: d });
        }
        if r == 0 || r > d {
            return Err(Error::InvalidRank { rank: r, dim: d });
        }
        Ok(ParamSet { d, r })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Number of diagonal coordinates, `r - 1`.
    pub fn n_diag(&self) -> usize {
        self.r - 1
    }

    /// Number of `(row, col)` pairs with `row < r`, `row < col < d`.
    pub fn n_pairs(&self) -> usize {
        self.r * self.d - self.r * (self.r + 1) / 2
    }

    /// Chart dimension `D = 2rd - r^2 - 1`.
    pub fn dim(&self) -> usize {
        2 * self.r * self.d - self.r * self.r - 1
    }

    /// Coordinate at canonical index `a`.
    pub fn coord(&self, a: usize) -> ParamCoord {
        debug_assert!(a < self.dim());
        if a < self.n_diag() {
            return ParamCoord::Diag { row: a + 1 };
        }
        let a = a - self.n_diag();
        let (pair, is_im) = if a < self.n_pairs() {
            (a, false)
        } else {
            (a - self.n_pairs(), true)
        };
        let (row, col) = self.pair_at(pair);
        if is_im {
            ParamCoord::Im { row, col }
        } else {
            ParamCoord::Re { row, col }
        }
    }

    /// Canonical index of a coordinate.
    pub fn index(&self, coord: ParamCoord) -> usize {
        match coord {
            ParamCoord::Diag { row } => {
                debug_assert!(row >= 1 && row < self.r);
                row - 1
            }
            ParamCoord::Re { row, col } => self.n_diag() + self.pair_index(row, col),
            ParamCoord::Im { row, col } => {
                self.n_diag() + self.n_pairs() + self.pair_index(row, col)
            }
        }
    }

    fn pair_index(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.r && row < col && col < self.d);
        // pairs before row `row`: sum_{t<row} (d - 1 - t)
        row * (self.d - 1) - row * (row.saturating_sub(1)) / 2 + (col - row - 1)
    }

    fn pair_at(&self, mut pair: usize) -> (usize, usize) {
        for row in 0..self.r {
            let in_row = self.d - 1 - row;
            if pair < in_row {
                return (row, row + 1 + pair);
            }
            pair -= in_row;
        }
        unreachable!("pair index out of range")
    }

    /// Canonically ordered list of all coordinates.
    pub fn iter(&self) -> impl Iterator<Item = ParamCoord> + '_ {
        (0..self.dim()).map(move |a| self.coord(a))
    }
}
