//! Dense complex unitaries acting on optical modes.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Default tolerance for `max |U^dagger U - I|`.
pub const DEFAULT_UNITARY_TOL: f64 = 1e-10;

/// An `m x m` complex matrix checked to be unitary within `tol`.
///
/// Entry `(out, in)` is the amplitude for a photon entering mode `in` to leave
/// in mode `out`, i.e. `a_in^dagger -> sum_out U[out, in] a_out^dagger`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    entries: Array2<Complex64>,
    tol: f64,
}

impl UnitaryMatrix {
    pub fn new(entries: Array2<Complex64>) -> Result<Self> {
        Self::with_tolerance(entries, DEFAULT_UNITARY_TOL)
    }

    pub fn with_tolerance(entries: Array2<Complex64>, tol: f64) -> Result<Self> {
        let (r, c) = entries.dim();
        if r != c {
            return Err(invalid(format!("matrix must be square, got {r}x{c}")));
        }
        if r == 0 {
            return Err(invalid("matrix must have at least one mode"));
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(invalid("matrix has non-finite entries"));
        }
        let deviation = unitarity_deviation(&entries);
        if deviation > tol {
            return Err(Error::NotUnitary { deviation, tol });
        }
        Ok(Self { entries, tol })
    }

    /// Wraps a matrix that is unitary by construction (products, embeddings).
    pub(crate) fn from_trusted(entries: Array2<Complex64>) -> Self {
        debug_assert!(unitarity_deviation(&entries) < 1e-8);
        Self {
            entries,
            tol: DEFAULT_UNITARY_TOL,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_trusted(Array2::eye(dim))
    }

    /// Permutation matrix with `P[sigma[j], j] = 1`: mode `j` is routed to `sigma[j]`.
    pub fn permutation(sigma: &[usize]) -> Result<Self> {
        let n = sigma.len();
        let mut seen = vec![false; n];
        for &s in sigma {
            if s >= n || seen[s] {
                return Err(invalid(format!("{sigma:?} is not a permutation")));
            }
            seen[s] = true;
        }
        let mut m = Array2::zeros((n, n));
        for (j, &s) in sigma.iter().enumerate() {
            m[(s, j)] = Complex64::new(1.0, 0.0);
        }
        Ok(Self::from_trusted(m))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> Array2<Complex64> {
        self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    /// `self * rhs`: `rhs` acts first.
    pub fn mul(&self, rhs: &UnitaryMatrix) -> Result<Self> {
        if self.dim() != rhs.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: rhs.dim(),
            });
        }
        Ok(Self::from_trusted(self.entries.dot(&rhs.entries)))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_trusted(self.entries.t().mapv(|z| z.conj()))
    }

    pub fn unitarity_deviation(&self) -> f64 {
        unitarity_deviation(&self.entries)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &UnitaryMatrix) -> f64 {
        max_abs_diff(&self.entries, &other.entries)
    }

    /// Entrywise `|U_jk|^2`.
    pub fn modulus_squared(&self) -> Array2<f64> {
        self.entries.mapv(|z| z.norm_sqr())
    }

    /// Block-diagonal `self (+) other`.
    pub fn direct_sum(&self, other: &UnitaryMatrix) -> Self {
        let (a, b) = (self.dim(), other.dim());
        let mut m = Array2::zeros((a + b, a + b));
        m.slice_mut(ndarray::s![..a, ..a]).assign(&self.entries);
        m.slice_mut(ndarray::s![a.., a..]).assign(&other.entries);
        Self::from_trusted(m)
    }

    /// Embeds `block` on the listed modes of a `dim`-mode identity.
    pub fn embed(block: &UnitaryMatrix, modes: &[usize], dim: usize) -> Result<Self> {
        if modes.len() != block.dim() {
            return Err(Error::DimensionMismatch {
                expected: block.dim(),
                actual: modes.len(),
            });
        }
        let mut seen = vec![false; dim];
        for &m in modes {
            if m >= dim || seen[m] {
                return Err(invalid(format!(
                    "mode list {modes:?} is invalid for {dim} modes"
                )));
            }
            seen[m] = true;
        }
        let mut out = Array2::eye(dim);
        for (a, &ma) in modes.iter().enumerate() {
            for (b, &mb) in modes.iter().enumerate() {
                out[(ma, mb)] = block.entries[(a, b)];
            }
        }
        Ok(Self::from_trusted(out))
    }
}

pub(crate) fn unitarity_deviation(m: &Array2<Complex64>) -> f64 {
    let n = m.nrows();
    let adj = m.t().mapv(|z| z.conj());
    let prod = adj.dot(m);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((prod[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

pub(crate) fn max_abs_diff(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
