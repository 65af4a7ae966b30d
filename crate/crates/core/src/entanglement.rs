//! Pure-state entanglement between subsystems 1 and 2.
//!
//! Both routes end in the same place: a coefficient matrix `C` whose rows
//! index an orthonormal basis of subsystem 1 and whose columns index one of
//! subsystem 2. Its singular values are the Schmidt coefficients.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{nboson_overlap, FockExpansion};
use crate::gram::{hermitian_eigen, singular_values, GramMatrix};
use crate::grid::{Branch, Subsystem};

/// Eigenvalues of a branch Gram matrix below this (relative to the largest)
/// are treated as roundoff zeros.
const ROUNDOFF_EIGENVALUE: f64 = 1e-14;
/// Eigenvalues more negative than this make a Gram matrix indefinite.
pub const INDEFINITE_TOLERANCE: f64 = 1e-8;
/// Minimum eigenvalue (relative) for which the Cholesky route is used.
const CHOLESKY_MIN_EIGENVALUE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    OccupationExact,
    BranchGram,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::OccupationExact => "occupation-exact",
            Method::BranchGram => "branch-gram",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementReport {
    /// Von Neumann entropy of either reduced state, in bits.
    pub von_neumann_entropy: f64,
    /// Pure-state logarithmic negativity `2·log₂ Σσ_k`, in bits.
    pub log_negativity: f64,
    pub cross_block_overlap_norm: f64,
    pub method: Method,
    /// Schmidt coefficients, descending, `Σσ² = 1`.
    pub schmidt: Vec<f64>,
}

impl EntanglementReport {
    pub fn with_cross_block(mut self, norm: f64) -> Self {
        self.cross_block_overlap_norm = norm;
        self
    }

    pub fn schmidt_rank(&self, tol: f64) -> usize {
        self.schmidt.iter().filter(|s| **s > tol).count()
    }
}

/// Entropy and negativity from an (unnormalized) coefficient matrix.
pub fn schmidt_report(c: &DMatrix<Complex64>, method: Method) -> Result<EntanglementReport> {
    let fro = c.norm();
    if !(fro > 0.0) || !fro.is_finite() {
        return Err(Error::Degenerate(format!(
            "coefficient matrix has norm {fro}"
        )));
    }
    let schmidt: Vec<f64> = singular_values(c).into_iter().map(|s| s / fro).collect();
    let entropy = schmidt
        .iter()
        .map(|s| s * s)
        .filter(|p| *p > 0.0)
        .map(|p| -p * libm::log2(p))
        .sum::<f64>()
        .max(0.0);
    let negativity = (2.0 * libm::log2(schmidt.iter().sum::<f64>())).max(0.0);
    Ok(EntanglementReport {
        von_neumann_entropy: entropy,
        log_negativity: negativity,
        cross_block_overlap_norm: 0.0,
        method,
        schmidt,
    })
}

/// Reshape a partitioned occupation-basis state into its 1|2 coefficient
/// matrix and report its Schmidt decomposition.
pub fn block_entropy(state: &FockExpansion) -> Result<EntanglementReport> {
    let partition = state
        .partition()
        .ok_or_else(|| Error::Usage("state carries no subsystem partition".into()))?;
    let split = |occ: &[u32]| {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (n, part) in occ.iter().zip(partition) {
            match part {
                Subsystem::One => a.push(*n),
                Subsystem::Two => b.push(*n),
            }
        }
        (a, b)
    };
    let mut rows: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
    let mut cols: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
    for occ in state.terms().keys() {
        let (a, b) = split(occ);
        let r = rows.len();
        rows.entry(a).or_insert(r);
        let c = cols.len();
        cols.entry(b).or_insert(c);
    }
    let mut c = DMatrix::zeros(rows.len(), cols.len());
    for (occ, amp) in state.terms() {
        let (a, b) = split(occ);
        c[(rows[&a], cols[&b])] += amp;
    }
    schmidt_report(&c, Method::OccupationExact)
}

/// `X` with `X†X = M` for a PSD matrix `M`: Cholesky when well conditioned,
/// otherwise from the eigendecomposition with roundoff eigenvalues dropped.
fn gram_factor(m: &GramMatrix) -> Result<DMatrix<Complex64>> {
    let (values, vectors) = hermitian_eigen(m.matrix());
    let max = values.last().copied().unwrap_or(0.0).max(0.0);
    let min = values.first().copied().unwrap_or(0.0);
    if min < -INDEFINITE_TOLERANCE {
        return Err(Error::IndefiniteGram { eigenvalue: min });
    }
    if min > CHOLESKY_MIN_EIGENVALUE * max {
        if let Some(chol) = m.matrix().clone().cholesky() {
            // M = L L†  =>  X = L†
            return Ok(chol.l().adjoint());
        }
    }
    let keep: Vec<usize> = (0..values.len())
        .filter(|i| values[*i] > ROUNDOFF_EIGENVALUE * max)
        .collect();
    // M = V Λ V†  =>  X = Λ^{1/2} V†
    Ok(DMatrix::from_fn(keep.len(), values.len(), |r, c| {
        vectors[(c, keep[r])].conj() * libm::sqrt(values[keep[r]])
    }))
}

/// Entanglement of `Σ_b a_b |N; φ_{1,b}⟩ ⊗ |N; φ_{2,b}⟩` from the single-particle
/// branch Gram matrices of each subsystem (branch order LL, LR, RL, RR).
pub fn branch_entanglement(
    g1: &GramMatrix,
    g2: &GramMatrix,
    n: u32,
    amplitudes: &[Complex64; 4],
) -> Result<EntanglementReport> {
    for g in [g1, g2] {
        if g.dim() != 4 {
            return Err(Error::Usage(format!(
                "branch Gram matrices must be 4x4, got {0}x{0}",
                g.dim()
            )));
        }
    }
    let lift = |g: &GramMatrix| GramMatrix::new(g.matrix().map(|z| nboson_overlap(z, n)));
    let x1 = gram_factor(&lift(g1)?)?;
    let x2 = gram_factor(&lift(g2)?)?;
    let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(amplitudes));
    let c = &x1 * diag * x2.transpose();
    schmidt_report(&c, Method::BranchGram)
}

/// Amplitude `½` on every branch.
pub fn equal_amplitudes() -> [Complex64; 4] {
    [Complex64::new(0.5, 0.0); 4]
}

/// Branch Gram matrices when the L and R packets of each subsystem are
/// orthonormal and do not depend on the branch: entries are 1 when the
/// subsystem sits on the same side in both branches, 0 otherwise.
pub fn ideal_branch_grams() -> (GramMatrix, GramMatrix) {
    let build = |side: fn(Branch) -> crate::grid::Side| {
        let m = DMatrix::from_fn(4, 4, |i, j| {
            let same = side(Branch::ALL[i]) == side(Branch::ALL[j]);
            Complex64::new(if same { 1.0 } else { 0.0 }, 0.0)
        });
        GramMatrix::new(m).expect("0/1 symmetric matrix")
    };
    (build(|b| b.first), build(|b| b.second))
}

/// Frobenius norm of both off-diagonal 2×2 blocks of the packet Gram matrix
/// (order 1L, 1R, 2L, 2R).
pub fn cross_block_diagnostic(g: &GramMatrix) -> Result<f64> {
    if g.dim() != 4 {
        return Err(Error::Usage(format!(
            "expected a 4x4 packet Gram matrix, got {0}x{0}",
            g.dim()
        )));
    }
    let mut sum = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            if (i < 2) != (j < 2) {
                sum += g.get(i, j).norm_sqr();
            }
        }
    }
    Ok(libm::sqrt(sum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{pair_block_state, tensor_blocks, ModeCoefficients};
    use alloc::vec;

    fn state(terms: &[([u32; 4], f64)]) -> FockExpansion {
        let mut e = FockExpansion::vacuum_of(4).scaled(Complex64::new(0.0, 0.0));
        let mut acc: Option<FockExpansion> = None;
        for (occ, amp) in terms {
            let mut t = FockExpansion::vacuum_of(4);
            for (j, n) in occ.iter().enumerate() {
                for _ in 0..*n {
                    let mut c = vec![0.0; 4];
                    c[j] = 1.0;
                    t = crate::fock::apply_creation(&t, &ModeCoefficients::from_real(&c)).unwrap();
                }
            }
            let t = t.scaled(Complex64::new(*amp, 0.0));
            acc = Some(match acc {
                None => t,
                Some(a) => a.superpose(&t).unwrap(),
            });
        }
        e = acc.unwrap_or(e);
        e.with_partition(vec![
            Subsystem::One,
            Subsystem::One,
            Subsystem::Two,
            Subsystem::Two,
        ])
        .unwrap()
    }

    #[test]
    fn product_state_has_no_entanglement() {
        let l = ModeCoefficients::from_real(&[1.0, 0.0]);
        let r = ModeCoefficients::from_real(&[0.6, 0.8]);
        let b = pair_block_state(&l, &r, 2).unwrap();
        let t = tensor_blocks(&b, &b.clone().with_modes(vec![2, 3]).unwrap()).unwrap();
        let rep = block_entropy(&t).unwrap();
        assert!(rep.von_neumann_entropy < 1e-12 && rep.log_negativity < 1e-12);
    }

    #[test]
    fn bell_pair_one_bit() {
        let s = 0.5f64.sqrt();
        let rep = block_entropy(&state(&[([1, 0, 1, 0], s), ([0, 1, 0, 1], s)])).unwrap();
        assert!((rep.von_neumann_entropy - 1.0).abs() < 1e-12);
        assert!((rep.log_negativity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_partition() {
        let e = FockExpansion::vacuum_of(2);
        assert!(matches!(block_entropy(&e), Err(Error::Usage(_))));
    }

    #[test]
    fn ideal_branches() {
        let (g1, g2) = ideal_branch_grams();
        let rep = branch_entanglement(&g1, &g2, 1, &equal_amplitudes()).unwrap();
        assert!(rep.von_neumann_entropy < 1e-12);
        let h = Complex64::new(0.5, 0.0);
        let rep = branch_entanglement(&g1, &g2, 3, &[h, h, h, -h]).unwrap();
        assert!((rep.von_neumann_entropy - 1.0).abs() < 1e-12);
        assert!((rep.log_negativity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn indistinguishable_branches() {
        let ones = GramMatrix::from_real(4, &[1.0; 16]).unwrap();
        let h = Complex64::new(0.5, 0.0);
        let rep = branch_entanglement(&ones, &ones, 2, &[h, h, h, -h]).unwrap();
        assert!(rep.von_neumann_entropy < 1e-12);
        assert_eq!(rep.schmidt_rank(1e-12), 1);
    }

    #[test]
    fn indefinite_gram_rejected() {
        let g = GramMatrix::from_real(
            4,
            &[
                1.0, 2.0, 0.0, 0.0, //
                2.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, 1.0, 0.0, //
                0.0, 0.0, 0.0, 1.0,
            ],
        )
        .unwrap();
        let id = GramMatrix::identity(4);
        assert!(matches!(
            branch_entanglement(&g, &id, 1, &equal_amplitudes()),
            Err(Error::IndefiniteGram { .. })
        ));
    }

    #[test]
    fn cross_block_examples() {
        assert_eq!(
            cross_block_diagnostic(&GramMatrix::identity(4)).unwrap(),
            0.0
        );
        let mut m = DMatrix::<Complex64>::identity(4, 4);
        m[(0, 1)] = Complex64::new(0.3, 0.0);
        m[(1, 0)] = Complex64::new(0.3, 0.0);
        assert_eq!(
            cross_block_diagnostic(&GramMatrix::new(m.clone()).unwrap()).unwrap(),
            0.0
        );
        m[(1, 2)] = Complex64::new(0.1, 0.0);
        m[(2, 1)] = Complex64::new(0.1, 0.0);
        let d = cross_block_diagnostic(&GramMatrix::new(m).unwrap()).unwrap();
        assert!((d - 0.1 * 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            cross_block_diagnostic(&GramMatrix::identity(3)),
            Err(Error::Usage(_))
        ));
    }
}
