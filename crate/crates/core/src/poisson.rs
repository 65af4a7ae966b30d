//! Newton potential of a mass density with isolated (free-space) boundaries.
//!
//! The density is zero-padded to twice the box on every axis and convolved
//! with a Green's-function table through the FFT (Hockney's method), so no
//! periodic images enter the potential inside the box.
//!
//! Kernels:
//! - 1D: softened line kernel `-G/sqrt(x² + a²)`, point sampled.
//! - 3D [`ThreeDKernel::CellAveraged`]: `-G/r` point sampled, the `r = 0` cell
//!   replaced by the exact average of `-G/r` over one cell. Second order in `h`.
//! - 3D [`ThreeDKernel::Spectral`]: `-G/r` split as `erf(r/η)/r + erfc(r/η)/r`.
//!   The smooth long-range part is point sampled; the short-range part is
//!   added analytically in Fourier space, `-4πG(1 - exp(-k²η²/4))/k²`. For
//!   densities resolved by the grid this is accurate to near machine precision.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::FftNd;
use crate::grid::{DensityField, Dimension, Grid, PhysicalParams};

/// Average of `1/r` over the unit cube centered on the origin, `3 ln(2+√3) - π/2`.
pub fn unit_cube_inverse_distance_average() -> f64 {
    3.0 * libm::log(2.0 + libm::sqrt(3.0)) - 0.5 * PI
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThreeDKernel {
    CellAveraged,
    #[default]
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    Softened {
        softening: f64,
    },
    CellAveraged,
    /// Ewald-split kernel with splitting length `eta`.
    Spectral {
        eta: f64,
    },
}

/// Real Newton potential (energy per mass) on the grid.
#[derive(Debug, Clone)]
pub struct PotentialField {
    pub values: Vec<f64>,
    grid: Arc<Grid>,
}

impl PotentialField {
    pub fn zeros(grid: Arc<Grid>) -> Self {
        Self {
            values: vec![0.0; grid.len()],
            grid,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Precomputed transform of the padded Green's-function table.
#[derive(Debug, Clone)]
pub struct GravityKernel {
    grid: Arc<Grid>,
    kind: KernelKind,
    newton_g: f64,
    padded: FftNd,
    /// Multiplier such that `Φ = IFFT(spectrum · FFT(ρ_padded))` on the box.
    spectrum: Vec<Complex64>,
}

/// Default kernel for the grid dimension (softened in 1D, spectral in 3D).
pub fn build_kernel(grid: &Arc<Grid>, params: &PhysicalParams) -> Result<GravityKernel> {
    build_kernel_with(grid, params, ThreeDKernel::default())
}

pub fn build_kernel_with(
    grid: &Arc<Grid>,
    params: &PhysicalParams,
    three_d: ThreeDKernel,
) -> Result<GravityKernel> {
    let h = grid.spacing();
    let kind = match grid.spec().dimension {
        Dimension::One => {
            if !(params.softening > 0.0) || !params.softening.is_finite() {
                return Err(Error::Config(format!(
                    "1D gravity needs a positive softening length, got {}",
                    params.softening
                )));
            }
            KernelKind::Softened {
                softening: params.softening,
            }
        }
        Dimension::Three => match three_d {
            ThreeDKernel::CellAveraged => KernelKind::CellAveraged,
            ThreeDKernel::Spectral => KernelKind::Spectral { eta: 3.0 * h },
        },
    };
    let n = grid.points_per_axis();
    let m = 2 * n;
    let axes = grid.axes();
    let padded = FftNd::new(m, axes)?;
    let total = padded.total_len();
    let g = params.newton_g;

    let separation = |j: usize| -> f64 {
        let s = if j < n { j as f64 } else { j as f64 - m as f64 };
        s * h
    };
    let wavenumber = |j: usize| -> f64 {
        let s = if j < n { j as f64 } else { j as f64 - m as f64 };
        2.0 * PI * s / (m as f64 * h)
    };
    let unravel = |flat: usize| -> [usize; 3] {
        match axes {
            1 => [flat, 0, 0],
            _ => [flat / (m * m), (flat / m) % m, flat % m],
        }
    };

    let mut table: Vec<Complex64> = (0..total)
        .map(|flat| {
            let idx = unravel(flat);
            let r2: f64 = (0..axes)
                .map(|a| separation(idx[a]) * separation(idx[a]))
                .sum();
            Complex64::new(real_space_value(kind, g, h, libm::sqrt(r2)), 0.0)
        })
        .collect();
    padded.forward(&mut table);
    let dv = grid.cell_volume();
    for z in table.iter_mut() {
        *z *= dv;
    }
    if let KernelKind::Spectral { eta } = kind {
        for (flat, z) in table.iter_mut().enumerate() {
            let idx = unravel(flat);
            let k2: f64 = (0..axes)
                .map(|a| wavenumber(idx[a]) * wavenumber(idx[a]))
                .sum();
            let short = if k2 == 0.0 {
                -PI * g * eta * eta
            } else {
                -4.0 * PI * g * (-libm::expm1(-0.25 * k2 * eta * eta)) / k2
            };
            *z += short;
        }
    }
    Ok(GravityKernel {
        grid: grid.clone(),
        kind,
        newton_g: g,
        padded,
        spectrum: table,
    })
}

/// Tabulated real-space kernel at distance `r` (the long-range part only for the spectral kind).
fn real_space_value(kind: KernelKind, g: f64, h: f64, r: f64) -> f64 {
    match kind {
        KernelKind::Softened { softening } => -g / libm::sqrt(r * r + softening * softening),
        KernelKind::CellAveraged => {
            if r == 0.0 {
                -g * unit_cube_inverse_distance_average() / h
            } else {
                -g / r
            }
        }
        KernelKind::Spectral { eta } => {
            if r == 0.0 {
                -2.0 * g / (eta * libm::sqrt(PI))
            } else {
                -g * libm::erf(r / eta) / r
            }
        }
    }
}

impl GravityKernel {
    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn newton_g(&self) -> f64 {
        self.newton_g
    }

    /// Green's function the kernel represents, at separation `r`.
    ///
    /// For the cell-averaged kind `r = 0` gives the cell average; for the
    /// spectral kind the full `-G/r` is returned (singular at the origin).
    pub fn value_at(&self, r: f64) -> f64 {
        match self.kind {
            KernelKind::Spectral { .. } => -self.newton_g / r,
            kind => real_space_value(kind, self.newton_g, self.grid.spacing(), r),
        }
    }

    /// Scale the whole kernel by `1 + relative`; used to check that oracle
    /// comparisons detect a corrupted Green's function.
    pub fn perturb(&mut self, relative: f64) {
        for z in self.spectrum.iter_mut() {
            *z *= 1.0 + relative;
        }
    }

    /// Solve into `out`, reusing `work` as the padded buffer.
    pub fn solve_into(
        &self,
        density: &[f64],
        out: &mut [f64],
        work: &mut Vec<Complex64>,
    ) -> Result<()> {
        let grid = &self.grid;
        if density.len() != grid.len() || out.len() != grid.len() {
            return Err(Error::Usage(format!(
                "density/potential sizes {}/{} do not match grid size {}",
                density.len(),
                out.len(),
                grid.len()
            )));
        }
        if self.newton_g == 0.0 {
            out.iter_mut().for_each(|v| *v = 0.0);
            return Ok(());
        }
        let n = grid.points_per_axis();
        let m = 2 * n;
        work.clear();
        work.resize(self.padded.total_len(), Complex64::new(0.0, 0.0));
        let padded_index = |flat: usize| -> usize {
            let idx = grid.unravel(flat);
            match grid.axes() {
                1 => idx[0],
                _ => (idx[0] * m + idx[1]) * m + idx[2],
            }
        };
        for (flat, rho) in density.iter().enumerate() {
            work[padded_index(flat)] = Complex64::new(*rho, 0.0);
        }
        self.padded.forward(work);
        for (z, k) in work.iter_mut().zip(&self.spectrum) {
            *z *= k;
        }
        self.padded.inverse(work);
        for (flat, phi) in out.iter_mut().enumerate() {
            *phi = work[padded_index(flat)].re;
        }
        Ok(())
    }
}

/// `Φ = K ⊛ ρ` with isolated boundaries.
pub fn solve_potential(density: &DensityField, kernel: &GravityKernel) -> Result<PotentialField> {
    if density.grid().spec() != kernel.grid.spec() {
        return Err(Error::Usage(
            "density and kernel live on different grids".into(),
        ));
    }
    let mut field = PotentialField::zeros(kernel.grid.clone());
    let mut work = Vec::new();
    kernel.solve_into(&density.values, &mut field.values, &mut work)?;
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridSpec};

    fn params(g: f64, a: f64) -> PhysicalParams {
        PhysicalParams {
            newton_g: g,
            softening: a,
            ..Default::default()
        }
    }

    #[test]
    fn kernel_values() {
        let g3 = Arc::new(build_grid(GridSpec::new(Dimension::Three, 8, 8.0)).unwrap());
        let k = build_kernel_with(&g3, &params(1.0, 1.0), ThreeDKernel::CellAveraged).unwrap();
        assert!((k.value_at(2.0) + 0.5).abs() < 1e-15);
        let k = build_kernel(&g3, &params(1.0, 1.0)).unwrap();
        assert!((k.value_at(2.0) + 0.5).abs() < 1e-15);

        let g1 = Arc::new(build_grid(GridSpec::new(Dimension::One, 64, 32.0)).unwrap());
        let k = build_kernel(&g1, &params(1.0, 1.0)).unwrap();
        assert!((k.value_at(0.0) + 1.0).abs() < 1e-15);
        let k = build_kernel(&g1, &params(1.0, 4.0)).unwrap();
        assert!((k.value_at(3.0) + 0.2).abs() < 1e-15);
    }

    #[test]
    fn cube_average_constant() {
        // midpoint rule over the unit cube, excluding nothing: the singularity is integrable
        let m = 120;
        let d = 1.0 / m as f64;
        let mut sum = 0.0;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let x = -0.5 + (i as f64 + 0.5) * d;
                    let y = -0.5 + (j as f64 + 0.5) * d;
                    let z = -0.5 + (k as f64 + 0.5) * d;
                    sum += 1.0 / libm::sqrt(x * x + y * y + z * z);
                }
            }
        }
        sum *= d * d * d;
        assert!((sum - unit_cube_inverse_distance_average()).abs() < 2e-3);
        assert!((unit_cube_inverse_distance_average() - 2.380_077_363_979_55).abs() < 1e-12);
    }

    #[test]
    fn zero_softening_rejected() {
        let g1 = Arc::new(build_grid(GridSpec::new(Dimension::One, 64, 32.0)).unwrap());
        assert!(matches!(
            build_kernel(&g1, &params(1.0, 0.0)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn zero_density_zero_potential() {
        let g1 = Arc::new(build_grid(GridSpec::new(Dimension::One, 64, 32.0)).unwrap());
        let k = build_kernel(&g1, &params(1.0, 1.0)).unwrap();
        let rho = DensityField::new(vec![0.0; 64], g1).unwrap();
        let phi = solve_potential(&rho, &k).unwrap();
        assert!(phi.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn one_d_matches_direct_sum() {
        let grid = Arc::new(build_grid(GridSpec::new(Dimension::One, 64, 16.0)).unwrap());
        let k = build_kernel(&grid, &params(0.7, 1.3)).unwrap();
        let rho: Vec<f64> = (0..64).map(|j| 1.0 + libm::sin(j as f64)).collect();
        let phi =
            solve_potential(&DensityField::new(rho.clone(), grid.clone()).unwrap(), &k).unwrap();
        let h = grid.spacing();
        for i in 0..64 {
            let direct: f64 = (0..64)
                .map(|j| {
                    let x = (i as f64 - j as f64) * h;
                    -0.7 / libm::sqrt(x * x + 1.3 * 1.3) * rho[j] * h
                })
                .sum();
            assert!((phi.values[i] - direct).abs() < 1e-12 * direct.abs());
        }
    }

    #[test]
    fn mismatched_grid_rejected() {
        let a = Arc::new(build_grid(GridSpec::new(Dimension::One, 64, 32.0)).unwrap());
        let b = Arc::new(build_grid(GridSpec::new(Dimension::One, 128, 32.0)).unwrap());
        let k = build_kernel(&a, &params(1.0, 1.0)).unwrap();
        let rho = DensityField::new(vec![1.0; 128], b).unwrap();
        assert!(matches!(solve_potential(&rho, &k), Err(Error::Usage(_))));
    }
}
