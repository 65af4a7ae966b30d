//! The bundled oracle battery run by `semigrav verify`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use semigrav_core::entanglement::branch_entanglement;
use semigrav_core::fock::{
    lowdin_orthonormalize, nboson_overlap, pair_block_state, ModeCoefficients,
};
use semigrav_core::grid::{
    build_grid, gaussian_packet, DensityField, Grid, Label, PacketSpec, WavePacket,
};
use semigrav_core::poisson::{build_kernel_with, solve_potential};
use semigrav_core::{
    evolve, AnalysisOptions, GramMatrix, ModeSet, PhysicalParams, Propagator, Schedule,
    SourcingMode, SystemState,
};

use crate::config::ScenarioConfig;
use crate::error::AppError;
use crate::oracles;

/// Deliberate corruption used to check that the battery notices a broken solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Fault {
    /// Scale the Green's function by 1 + 10⁻³.
    Kernel,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyItem {
    pub name: &'static str,
    pub error: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl VerifyItem {
    fn new(name: &'static str, error: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self {
            name,
            error,
            tolerance,
            passed: error <= tolerance,
            detail: detail.into(),
        }
    }

    fn failed(name: &'static str, tolerance: f64, why: impl fmt::Display) -> Self {
        Self {
            name,
            error: f64::NAN,
            tolerance,
            passed: false,
            detail: format!("error: {why}"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub suite: String,
    pub items: Vec<VerifyItem>,
}

impl VerifyReport {
    pub fn failures(&self) -> usize {
        self.items.iter().filter(|i| !i.passed).count()
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "suite {}", self.suite)?;
        for i in &self.items {
            let mark = if i.passed { "PASS" } else { "FAIL" };
            writeln!(
                f,
                "  {mark} {:<20} error {:.3e} (tolerance {:.0e})  {}",
                i.name, i.error, i.tolerance, i.detail
            )?;
        }
        Ok(())
    }
}

pub const POTENTIAL_TOLERANCE_1D: f64 = 1e-8;
pub const POTENTIAL_TOLERANCE_3D: f64 = 1e-6;
pub const SPREADING_TOLERANCE: f64 = 1e-6;
pub const LOWDIN_TOLERANCE: f64 = 1e-12;
pub const FOCK_TOLERANCE: f64 = 1e-12;
pub const BRANCH_TOLERANCE: f64 = 1e-10;

/// Run every oracle item on the grid and physics of `config`.
pub fn verify(config: &ScenarioConfig, fault: Option<Fault>) -> Result<VerifyReport, AppError> {
    let grid = Arc::new(build_grid(config.grid_spec()).map_err(AppError::from_setup)?);
    let n = grid.points_per_axis();
    let suite = match grid.axes() {
        1 => format!("{} (1D, {n} points)", config.run.name),
        _ => format!("{} (3D, {n}^3)", config.run.name),
    };
    let items = vec![
        gaussian_potential(config, &grid, fault),
        free_spreading(config, &grid),
        lowdin_item(),
        nboson_item(),
        pair_block_item(),
        branch_item(),
    ];
    Ok(VerifyReport { suite, items })
}

/// Solved potential of a Gaussian density against quadrature, on the config grid.
pub fn gaussian_potential(
    config: &ScenarioConfig,
    grid: &Arc<Grid>,
    fault: Option<Fault>,
) -> VerifyItem {
    let name = "gaussian-potential";
    let mut params = config.physical_params();
    if params.newton_g == 0.0 {
        params.newton_g = 1.0;
    }
    let sigma = config.packets["1L"].width;
    let mass = 1.0;
    let three_d = grid.axes() == 3;
    let tol = if three_d {
        POTENTIAL_TOLERANCE_3D
    } else {
        POTENTIAL_TOLERANCE_1D
    };
    let run = || -> semigrav_core::Result<(f64, usize)> {
        let norm = if three_d {
            (2.0 * std::f64::consts::PI * sigma * sigma).powf(1.5)
        } else {
            (2.0 * std::f64::consts::PI * sigma * sigma).sqrt()
        };
        let values = (0..grid.len())
            .map(|i| {
                let x = grid.position(i);
                let r2: f64 = x[..grid.axes()].iter().map(|c| c * c).sum();
                mass * (-r2 / (2.0 * sigma * sigma)).exp() / norm
            })
            .collect();
        let density = DensityField::new(values, grid.clone())?;
        let mut kernel =
            build_kernel_with(grid, &params, config.propagator_options().three_d_kernel)?;
        if fault == Some(Fault::Kernel) {
            kernel.perturb(1e-3);
        }
        let phi = solve_potential(&density, &kernel)?;
        let h2 = grid.spacing() * grid.spacing();
        let mut cache: HashMap<u64, f64> = HashMap::new();
        let (mut worst, mut count) = (0.0f64, 0usize);
        for i in 0..grid.len() {
            let x = grid.position(i);
            let r2: f64 = x[..grid.axes()].iter().map(|c| c * c).sum();
            let r = r2.sqrt();
            let want = if three_d {
                if r < 0.5 * sigma || r > 4.0 * sigma {
                    continue;
                }
                *cache.entry((r2 / h2).round() as u64).or_insert_with(|| {
                    oracles::gaussian_potential_quadrature(params.newton_g, mass, sigma, r)
                })
            } else {
                if r > 4.0 * sigma {
                    continue;
                }
                oracles::softened_line_potential(
                    params.newton_g,
                    mass,
                    sigma,
                    0.0,
                    params.softening,
                    x[0],
                )
            };
            worst = worst.max(((phi.values[i] - want) / want).abs());
            count += 1;
        }
        Ok((worst, count))
    };
    match run() {
        Ok((worst, count)) => {
            let region = if three_d {
                "r in [σ/2, 4σ]"
            } else {
                "|x| <= 4σ"
            };
            VerifyItem::new(
                name,
                worst,
                tol,
                format!("max relative error over {count} points, {region}"),
            )
        }
        Err(e) => VerifyItem::failed(name, tol, e),
    }
}

/// Width of a free Gaussian against `σ₀·sqrt(1+(ħt/2mσ₀²)²)`.
pub fn free_spreading(config: &ScenarioConfig, grid: &Arc<Grid>) -> VerifyItem {
    let name = "free-spreading";
    let params = PhysicalParams {
        newton_g: 0.0,
        ..config.physical_params()
    };
    let sigma = config.packets["1L"].width;
    let run = || -> semigrav_core::Result<(f64, f64, usize)> {
        let mut dt = config.schedule.dt;
        let mut prop = match Propagator::new(grid.clone(), params, dt, config.propagator_options())
        {
            Err(semigrav_core::Error::StepSize { suggested_dt, .. }) => {
                dt = suggested_dt;
                Propagator::new(grid.clone(), params, dt, config.propagator_options())?
            }
            other => other?,
        };
        let packet = gaussian_packet(
            grid,
            &PacketSpec {
                label: Label::ALL[0],
                center: [0.0; 3],
                width: sigma,
                momentum: [0.0; 3],
            },
            config.run.support_sigmas,
        )?;
        let packets: Vec<WavePacket> = Label::ALL
            .iter()
            .map(|l| {
                let mut p = packet.clone();
                p.label = *l;
                p
            })
            .collect();
        let mut state = SystemState::Modes(ModeSet::new(packets)?);
        // long enough for the width to grow by √2, bounded for large grids
        let t_double = 2.0 * params.mass * sigma * sigma / params.hbar;
        let cap = if grid.axes() == 1 { 4000 } else { 40 };
        let n_steps = ((t_double / dt).ceil() as usize).clamp(1, cap);
        let stride = (n_steps / 10).max(1);
        let options = AnalysisOptions {
            entanglement_stride: 0,
            ..config.analysis_options()
        };
        let records = evolve(
            &mut prop,
            &mut state,
            &Schedule {
                dt,
                n_steps,
                record_stride: stride,
            },
            SourcingMode::NoGravity,
            &options,
            |_| {},
        )?;
        let mut worst = 0.0f64;
        let mut t_end = 0.0;
        for r in records.iter().take_while(|r| r.support_ok) {
            let want = oracles::free_width(sigma, params.hbar, params.mass, r.time);
            worst = worst.max(((r.packets[0].rms_width - want) / want).abs());
            t_end = r.time;
        }
        Ok((worst, t_end, n_steps))
    };
    match run() {
        Ok((worst, t, n)) => VerifyItem::new(
            name,
            worst,
            SPREADING_TOLERANCE,
            format!("σ₀ = {sigma}, {n} steps to t = {t:.4}"),
        ),
        Err(e) => VerifyItem::failed(name, SPREADING_TOLERANCE, e),
    }
}

pub fn lowdin_item() -> VerifyItem {
    let name = "lowdin-2x2";
    let mut worst = 0.0f64;
    for s in [0.05, 0.3, -0.45, 0.8, 0.95] {
        let g = match GramMatrix::from_real(2, &[1.0, s, s, 1.0]) {
            Ok(g) => g,
            Err(e) => return VerifyItem::failed(name, LOWDIN_TOLERANCE, e),
        };
        let t = match lowdin_orthonormalize(&g) {
            Ok(l) => l.transform,
            Err(e) => return VerifyItem::failed(name, LOWDIN_TOLERANCE, e),
        };
        let (a, b) = oracles::lowdin_2x2(s);
        for (i, j, want) in [(0, 0, a), (1, 1, a), (0, 1, b), (1, 0, b)] {
            worst = worst.max((t[(i, j)] - Complex64::new(want, 0.0)).norm());
        }
    }
    VerifyItem::new(
        name,
        worst,
        LOWDIN_TOLERANCE,
        "[[1,s],[s,1]] against the closed form, 5 overlaps",
    )
}

pub fn nboson_item() -> VerifyItem {
    let name = "nboson-overlap";
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut worst = 0.0f64;
    let mut trials = 0;
    for n in 1..=4u32 {
        for k in 1..=4usize {
            for _ in 0..3 {
                let a = oracles::random_unit(&mut rng, k);
                let b = oracles::random_unit(&mut rng, k);
                let labels: Vec<u32> = (0..k as u32).collect();
                let brute = oracles::ladder_state(&a, n, labels.clone())
                    .and_then(|x| oracles::ladder_state(&b, n, labels).and_then(|y| x.inner(&y)));
                match brute {
                    Ok(v) => worst = worst.max((v - nboson_overlap(a.overlap(&b), n)).norm()),
                    Err(e) => return VerifyItem::failed(name, FOCK_TOLERANCE, e),
                }
                trials += 1;
            }
        }
    }
    VerifyItem::new(
        name,
        worst,
        FOCK_TOLERANCE,
        format!("s^N against ladder-built states, {trials} trials, N <= 4"),
    )
}

pub fn pair_block_item() -> VerifyItem {
    let name = "pair-block-state";
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let mut worst = 0.0f64;
    let mut trials = 0;
    for n in 1..=4u32 {
        for k in 1..=4usize {
            for _ in 0..3 {
                let cl = oracles::random_unit(&mut rng, k);
                let cr = oracles::random_unit(&mut rng, k);
                match (
                    pair_block_state(&cl, &cr, n),
                    oracles::ladder_pair_block(&cl, &cr, n),
                ) {
                    (Ok(fast), Ok(slow)) => worst = worst.max(fast.max_coefficient_diff(&slow)),
                    (Err(e), _) | (_, Err(e)) => {
                        return VerifyItem::failed(name, FOCK_TOLERANCE, e)
                    }
                }
                trials += 1;
            }
        }
    }
    VerifyItem::new(
        name,
        worst,
        FOCK_TOLERANCE,
        format!("closed form against ladder operators, {trials} trials"),
    )
}

pub fn branch_item() -> VerifyItem {
    let name = "branch-entanglement";
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let mut worst = 0.0f64;
    let mut trials = 0;
    for trial in 0..20 {
        let d = 2 + trial % 3;
        let v1: [ModeCoefficients; 4] = std::array::from_fn(|_| oracles::random_unit(&mut rng, d));
        let v2: [ModeCoefficients; 4] = std::array::from_fn(|_| oracles::random_unit(&mut rng, d));
        let amps: [Complex64; 4] =
            std::array::from_fn(|_| oracles::random_unit(&mut rng, 1).0[0] * 0.5);
        for n in [1, 2] {
            let fast =
                branch_entanglement(&oracles::gram_of(&v1), &oracles::gram_of(&v2), n, &amps);
            match (fast, oracles::brute_force_branches(&v1, &v2, n, &amps)) {
                (Ok(f), Ok(s)) => {
                    worst = worst
                        .max((f.von_neumann_entropy - s.von_neumann_entropy).abs())
                        .max((f.log_negativity - s.log_negativity).abs());
                }
                (Err(e), _) | (_, Err(e)) => return VerifyItem::failed(name, BRANCH_TOLERANCE, e),
            }
            trials += 1;
        }
    }
    VerifyItem::new(
        name,
        worst,
        BRANCH_TOLERANCE,
        format!("Gram route against full occupation basis, {trials} trials, N = 1, 2"),
    )
}

/// The dimension-specific suites reported when no scenario is named.
pub fn default_suites() -> Vec<&'static str> {
    vec!["paper-1d", "paper-3d"]
}
