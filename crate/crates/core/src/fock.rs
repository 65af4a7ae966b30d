//! Many-boson states over an orthonormal mode basis.
//!
//! A physical mode `φ` (a normalized packet) enters through its creation
//! operator `â†[φ] = Σ_j c_j b̂†_j`, where `b_j` is an orthonormal basis of
//! the span of the packets and `c_j = ⟨b_j|φ⟩`. States are stored sparsely as
//! occupation vectors over the `b_j`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gram::{hermitian_eigen, hermitian_function, GramMatrix};
use crate::grid::Subsystem;

/// Smallest admissible Gram eigenvalue for symmetric orthonormalization.
pub const LOWDIN_MIN_EIGENVALUE: f64 = 1e-10;

/// Expansion coefficients of one physical mode over an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCoefficients(pub Vec<Complex64>);

impl ModeCoefficients {
    pub fn new(c: Vec<Complex64>) -> Self {
        Self(c)
    }

    pub fn from_real(c: &[f64]) -> Self {
        Self(c.iter().map(|x| Complex64::new(*x, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm_squared(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `⟨self|other⟩ = Σ conj(a_j) b_j`.
    pub fn overlap(&self, other: &ModeCoefficients) -> Complex64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum()
    }
}

/// Sparse occupation-basis expansion with a fixed total boson number.
#[derive(Debug, Clone, PartialEq)]
pub struct FockExpansion {
    modes: Vec<u32>,
    partition: Option<Vec<Subsystem>>,
    bosons: u32,
    terms: BTreeMap<Vec<u32>, Complex64>,
}

impl FockExpansion {
    /// Vacuum over basis modes labeled `modes`.
    pub fn vacuum(modes: Vec<u32>) -> Self {
        let zeros = vec![0; modes.len()];
        let mut terms = BTreeMap::new();
        terms.insert(zeros, Complex64::new(1.0, 0.0));
        Self {
            modes,
            partition: None,
            bosons: 0,
            terms,
        }
    }

    /// Vacuum over `k` modes labeled `0..k`.
    pub fn vacuum_of(k: usize) -> Self {
        Self::vacuum((0..k as u32).collect())
    }

    pub fn modes(&self) -> &[u32] {
        &self.modes
    }

    pub fn bosons(&self) -> u32 {
        self.bosons
    }

    pub fn partition(&self) -> Option<&[Subsystem]> {
        self.partition.as_deref()
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, Complex64> {
        &self.terms
    }

    pub fn coefficient(&self, occupation: &[u32]) -> Complex64 {
        self.terms
            .get(occupation)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Rename the basis modes (same count).
    pub fn with_modes(mut self, modes: Vec<u32>) -> Result<Self> {
        if modes.len() != self.modes.len() {
            return Err(Error::Usage(format!(
                "relabeling {} modes with {} labels",
                self.modes.len(),
                modes.len()
            )));
        }
        self.modes = modes;
        Ok(self)
    }

    pub fn with_partition(mut self, partition: Vec<Subsystem>) -> Result<Self> {
        if partition.len() != self.modes.len() {
            return Err(Error::Usage(format!(
                "partition has {} entries for {} modes",
                partition.len(),
                self.modes.len()
            )));
        }
        self.partition = Some(partition);
        Ok(self)
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.terms.values().map(|z| z.norm_sqr()).sum())
    }

    pub fn scaled(mut self, factor: Complex64) -> Self {
        self.terms.values_mut().for_each(|z| *z *= factor);
        self
    }

    pub fn normalized(self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Degenerate(format!("Fock expansion has norm {n}")));
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    fn check_compatible(&self, other: &FockExpansion) -> Result<()> {
        if self.modes != other.modes {
            return Err(Error::Usage(
                "Fock expansions use different basis modes".into(),
            ));
        }
        if self.bosons != other.bosons && !(self.terms.is_empty() || other.terms.is_empty()) {
            return Err(Error::Usage(format!(
                "adding states with {} and {} bosons",
                self.bosons, other.bosons
            )));
        }
        Ok(())
    }

    /// Coefficient-wise sum of two states on the same basis.
    pub fn superpose(mut self, other: &FockExpansion) -> Result<Self> {
        self.check_compatible(other)?;
        for (occ, c) in &other.terms {
            *self
                .terms
                .entry(occ.clone())
                .or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        if self.partition.is_none() {
            self.partition = other.partition.clone();
        }
        Ok(self)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &FockExpansion) -> Result<Complex64> {
        self.check_compatible(other)?;
        Ok(self
            .terms
            .iter()
            .filter_map(|(occ, a)| other.terms.get(occ).map(|b| a.conj() * b))
            .sum())
    }

    /// Largest coefficient-wise difference, over the union of supports.
    pub fn max_coefficient_diff(&self, other: &FockExpansion) -> f64 {
        let mut worst: f64 = 0.0;
        for (occ, a) in &self.terms {
            worst = worst.max((a - other.coefficient(occ)).norm());
        }
        for (occ, b) in &other.terms {
            if !self.terms.contains_key(occ) {
                worst = worst.max(b.norm());
            }
        }
        worst
    }
}

/// Apply `Σ_j c_j b̂†_j` with ladder factors `√(n_j+1)`; not renormalized.
pub fn apply_creation(e: &FockExpansion, c: &ModeCoefficients) -> Result<FockExpansion> {
    if c.len() != e.modes.len() {
        return Err(Error::Usage(format!(
            "mode coefficients of length {} on a {}-mode basis",
            c.len(),
            e.modes.len()
        )));
    }
    let mut terms = BTreeMap::new();
    for (occ, amp) in &e.terms {
        for (j, cj) in c.0.iter().enumerate() {
            if *cj == Complex64::new(0.0, 0.0) {
                continue;
            }
            let mut next = occ.clone();
            next[j] += 1;
            let ladder = libm::sqrt(next[j] as f64);
            *terms.entry(next).or_insert(Complex64::new(0.0, 0.0)) += amp * cj * ladder;
        }
    }
    Ok(FockExpansion {
        modes: e.modes.clone(),
        partition: e.partition.clone(),
        bosons: e.bosons + 1,
        terms,
    })
}

/// All occupation vectors of `k` modes holding `n` bosons in total.
pub fn compositions(n: u32, k: usize) -> Vec<Vec<u32>> {
    fn rec(remaining: u32, slots: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if slots == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=remaining).rev() {
            prefix.push(first);
            rec(remaining - first, slots - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if k == 0 {
        if n == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

fn sqrt_factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, j| acc * libm::sqrt(j as f64))
}

/// Normalized N-boson Fock state `(â†[c])^N |0⟩ / √N!` in closed form:
/// amplitude `√N! · Π_j c_j^{n_j} / √(n_j!)` on each occupation `n`.
pub fn nboson_state(c: &ModeCoefficients, n: u32) -> FockExpansion {
    let k = c.len();
    let prefactor = sqrt_factorial(n);
    let mut terms = BTreeMap::new();
    for occ in compositions(n, k) {
        let mut amp = Complex64::new(prefactor, 0.0);
        for (cj, nj) in c.0.iter().zip(&occ) {
            amp *= cj.powu(*nj) / sqrt_factorial(*nj);
        }
        if amp != Complex64::new(0.0, 0.0) {
            terms.insert(occ, amp);
        }
    }
    FockExpansion {
        modes: (0..k as u32).collect(),
        partition: None,
        bosons: n,
        terms,
    }
}

/// Normalization `𝒩 = 1 + Re(⟨φ_L|φ_R⟩^N)` of an L/R block built from normalized modes.
pub fn pair_block_normalization(cl: &ModeCoefficients, cr: &ModeCoefficients, n: u32) -> f64 {
    1.0 + nboson_overlap(cl.overlap(cr), n).re
}

/// One subsystem block `((â†_L)^N + (â†_R)^N)|0⟩`, normalized, over basis modes `0..k`.
pub fn pair_block_state(
    cl: &ModeCoefficients,
    cr: &ModeCoefficients,
    n: u32,
) -> Result<FockExpansion> {
    if n < 1 {
        return Err(Error::Usage("a pair block needs N >= 1".into()));
    }
    if cl.len() != cr.len() {
        return Err(Error::Usage(format!(
            "L and R coefficients on different bases ({} vs {})",
            cl.len(),
            cr.len()
        )));
    }
    nboson_state(cl, n)
        .superpose(&nboson_state(cr, n))?
        .normalized()
}

/// Product of two block states on the common vacuum; mode labels must be disjoint.
/// `e1` supplies the subsystem-1 modes, `e2` the subsystem-2 modes.
pub fn tensor_blocks(e1: &FockExpansion, e2: &FockExpansion) -> Result<FockExpansion> {
    if let Some(m) = e1.modes.iter().find(|m| e2.modes.contains(m)) {
        return Err(Error::Usage(format!(
            "mode label {m} appears in both blocks"
        )));
    }
    let mut modes = e1.modes.clone();
    modes.extend_from_slice(&e2.modes);
    let mut partition = vec![Subsystem::One; e1.modes.len()];
    partition.extend(core::iter::repeat_n(Subsystem::Two, e2.modes.len()));
    let mut terms = BTreeMap::new();
    for (o1, a) in &e1.terms {
        for (o2, b) in &e2.terms {
            let mut occ = o1.clone();
            occ.extend_from_slice(o2);
            terms.insert(occ, a * b);
        }
    }
    Ok(FockExpansion {
        modes,
        partition: Some(partition),
        bosons: e1.bosons + e2.bosons,
        terms,
    })
}

/// Overlap of normalized N-boson Fock states built on modes with single-particle overlap `s`.
pub fn nboson_overlap(s: Complex64, n: u32) -> Complex64 {
    s.powu(n)
}

/// Symmetric orthonormalization of a nonorthogonal mode set.
#[derive(Debug, Clone)]
pub struct Lowdin {
    /// `T = G^{-1/2}`; `T·G·T† = 1`.
    pub transform: DMatrix<Complex64>,
    /// `G^{1/2}`; column `a` holds the coefficients of mode `a` over the orthonormal basis.
    pub coefficients: DMatrix<Complex64>,
}

impl Lowdin {
    pub fn mode(&self, a: usize) -> ModeCoefficients {
        ModeCoefficients(self.coefficients.column(a).iter().copied().collect())
    }
}

pub fn lowdin_orthonormalize(g: &GramMatrix) -> Result<Lowdin> {
    let (values, _) = hermitian_eigen(g.matrix());
    if let Some(min) = values.first() {
        if !(*min > LOWDIN_MIN_EIGENVALUE) {
            return Err(Error::SingularGram { eigenvalue: *min });
        }
    }
    Ok(Lowdin {
        transform: hermitian_function(g.matrix(), |x| 1.0 / libm::sqrt(x)),
        coefficients: hermitian_function(g.matrix(), libm::sqrt),
    })
}

/// State `⊗_i ((â†_{iL})^N + (â†_{iR})^N)|0⟩` from the 4×4 packet Gram matrix
/// (order 1L, 1R, 2L, 2R), orthonormalizing within each subsystem block only.
/// Basis modes 0,1 belong to subsystem 1 and 2,3 to subsystem 2.
pub fn block_product_state(g: &GramMatrix, n: u32) -> Result<FockExpansion> {
    if g.dim() != 4 {
        return Err(Error::Usage(format!(
            "expected the 4x4 packet Gram matrix, got {0}x{0}",
            g.dim()
        )));
    }
    let one = lowdin_orthonormalize(&g.principal(&[0, 1]))?;
    let two = lowdin_orthonormalize(&g.principal(&[2, 3]))?;
    let e1 = pair_block_state(&one.mode(0), &one.mode(1), n)?;
    let e2 = pair_block_state(&two.mode(0), &two.mode(1), n)?.with_modes(vec![2, 3])?;
    tensor_blocks(&e1, &e2)
}
