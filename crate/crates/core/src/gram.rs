//! Hermitian Gram matrices of packet overlaps and the small dense linear
//! algebra built on them.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{inner_product, WavePacket};

/// `G_ab = ⟨φ_a|φ_b⟩`: Hermitian, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix(DMatrix<Complex64>);

impl GramMatrix {
    /// Wrap a square matrix, rejecting anything visibly non-Hermitian.
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Usage(format!(
                "Gram matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
        for i in 0..m.nrows() {
            for j in 0..=i {
                if (m[(i, j)] - m[(j, i)].conj()).norm() > 1e-10 * scale {
                    return Err(Error::Usage(format!(
                        "Gram matrix is not Hermitian at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self(m))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_real(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::Usage(format!(
                "{} entries for a {n}x{n} matrix",
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_iterator(
            n,
            n,
            entries.iter().map(|v| Complex64::new(*v, 0.0)),
        ))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    /// Principal submatrix on the given indices.
    pub fn principal(&self, idx: &[usize]) -> GramMatrix {
        GramMatrix(DMatrix::from_fn(idx.len(), idx.len(), |i, j| {
            self.0[(idx[i], idx[j])]
        }))
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.0).0
    }

    pub fn max_abs_diff(&self, other: &GramMatrix) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Entrywise power `G^{∘n}`.
    pub fn hadamard_power(&self, n: u32) -> GramMatrix {
        GramMatrix(self.0.map(|z| z.powu(n)))
    }
}

/// Pairwise inner products; upper triangle computed and mirrored.
pub fn gram_matrix<'a>(packets: impl IntoIterator<Item = &'a WavePacket>) -> Result<GramMatrix> {
    let packets: Vec<&WavePacket> = packets.into_iter().collect();
    let n = packets.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let s = inner_product(packets[i], packets[j])?;
            if i == j {
                m[(i, i)] = Complex64::new(s.re, 0.0);
            } else {
                m[(i, j)] = s;
                m[(j, i)] = s.conj();
            }
        }
    }
    Ok(GramMatrix(m))
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending with
/// matching eigenvector columns.
///
/// Solved through the real symmetric embedding `[[A, -B], [B, A]]` of
/// `A + iB`: each eigenvalue appears twice there, with real eigenvectors
/// `[u; v]` and `[-v; u]` that both map to multiples of `u + iv`. The complex
/// solver's stopping rule leaves residuals near 1e-12 even for well-conditioned
/// matrices; the real one reaches roundoff.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = m.nrows();
    let real = DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = m[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let eig = real.symmetric_eigen();
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|a, b| eig.eigenvalues[*a].total_cmp(&eig.eigenvalues[*b]));

    // Greedy Gram-Schmidt over the doubled spectrum keeps one complex vector
    // per pair, including inside degenerate eigenspaces.
    let mut values = Vec::with_capacity(n);
    let mut kept: Vec<DVector<Complex64>> = Vec::with_capacity(n);
    for &i in &order {
        if kept.len() == n {
            break;
        }
        let col = eig.eigenvectors.column(i);
        let mut z = DVector::from_fn(n, |r, _| Complex64::new(col[r], col[r + n]));
        for k in &kept {
            let p = k.dotc(&z);
            z -= k * p;
        }
        let norm = z.norm();
        if norm > 0.5 {
            kept.push(z / Complex64::new(norm, 0.0));
            values.push(eig.eigenvalues[i]);
        }
    }
    if kept.is_empty() {
        return (values, DMatrix::zeros(n, 0));
    }
    (values, DMatrix::from_columns(&kept))
}

/// `V f(Λ) V†` for Hermitian `m`.
pub fn hermitian_function(m: &DMatrix<Complex64>, f: impl Fn(f64) -> f64) -> DMatrix<Complex64> {
    let (values, vectors) = hermitian_eigen(m);
    let scaled = DMatrix::from_fn(vectors.nrows(), vectors.ncols(), |r, c| {
        vectors[(r, c)] * f(values[c])
    });
    &scaled * vectors.adjoint()
}

/// Singular values, descending.
pub fn singular_values(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut s: Vec<f64> = m
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_hermitian() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.3, 0.1),
                Complex64::new(0.3, 0.1),
                Complex64::new(1.0, 0.0),
            ],
        );
        assert!(GramMatrix::new(m).is_err());
        assert!(GramMatrix::new(DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn function_of_identity() {
        let id = DMatrix::<Complex64>::identity(3, 3);
        let r = hermitian_function(&id, |x| 2.0 * x);
        assert!((r - id * Complex64::new(2.0, 0.0)).norm() < 1e-14);
    }
}
