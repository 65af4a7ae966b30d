//! Strang split-step evolution of the packets under the Schrödinger–Newton
//! equation `iħ ∂φ = (-ħ²∇²/2m + mΦ) φ`.
//!
//! One step is: half kinetic step in Fourier space, potential kick with Φ
//! computed from the half-stepped densities, half kinetic step. The kick
//! leaves |φ| unchanged pointwise, so that Φ is exactly the midpoint-density
//! potential and the scheme stays second order despite the nonlinearity.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::FftNd;
use crate::gram::{gram_matrix, GramMatrix};
use crate::grid::{
    accumulate_density, Branch, Grid, Label, ModeSet, PhysicalParams, Subsystem, WavePacket,
};
use crate::poisson::{build_kernel_with, GravityKernel, ThreeDKernel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SourcingMode {
    /// One shared Φ sourced by the expectation density `(N/2)·m·Σ|φ|²`.
    #[default]
    MeanField,
    /// Each branch gravitates under its own configuration, `N·m` per occupied packet.
    BranchResolved,
    NoGravity,
}

impl SourcingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SourcingMode::MeanField => "mean-field",
            SourcingMode::BranchResolved => "branch-resolved",
            SourcingMode::NoGravity => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub dt: f64,
    pub n_steps: usize,
    pub record_stride: usize,
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.n_steps < 1 {
            return Err(Error::Config("n_steps must be >= 1".into()));
        }
        if self.record_stride < 1 {
            return Err(Error::Config("record_stride must be >= 1".into()));
        }
        Ok(())
    }
}

/// Four superposition branches, each holding its subsystem-1 and subsystem-2 packet.
#[derive(Debug, Clone)]
pub struct BranchSet {
    branches: [[WavePacket; 2]; 4],
}

impl BranchSet {
    /// Every branch starts from copies of the matching mode-set packets.
    pub fn from_modes(modes: &ModeSet) -> Self {
        let branches = Branch::ALL.map(|b| {
            let [l1, l2] = b.labels();
            [modes.get(l1).clone(), modes.get(l2).clone()]
        });
        Self { branches }
    }

    pub fn branch(&self, b: Branch) -> &[WavePacket; 2] {
        &self.branches[b.index()]
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.branches[0][0].grid()
    }

    /// The subsystem's packet in each branch, branch order LL, LR, RL, RR.
    pub fn subsystem_packets(&self, s: Subsystem) -> [&WavePacket; 4] {
        let slot = match s {
            Subsystem::One => 0,
            Subsystem::Two => 1,
        };
        core::array::from_fn(|b| &self.branches[b][slot])
    }

    /// One representative packet per label: 1L/2L from branch LL, 1R/2R from branch RR.
    pub fn representative(&self, label: Label) -> &WavePacket {
        let b = match label.side {
            crate::grid::Side::L => 0,
            crate::grid::Side::R => 3,
        };
        match label.subsystem {
            Subsystem::One => &self.branches[b][0],
            Subsystem::Two => &self.branches[b][1],
        }
    }

    pub fn branches_mut(&mut self) -> &mut [[WavePacket; 2]; 4] {
        &mut self.branches
    }
}

/// Evolving configuration: the four modes, or four branches for the
/// branch-resolved control.
#[derive(Debug, Clone)]
pub enum SystemState {
    Modes(ModeSet),
    Branches(BranchSet),
}

impl SystemState {
    pub fn grid(&self) -> &Arc<Grid> {
        match self {
            SystemState::Modes(m) => m.grid(),
            SystemState::Branches(b) => b.grid(),
        }
    }

    pub fn packets(&self) -> Vec<&WavePacket> {
        match self {
            SystemState::Modes(m) => m.packets().iter().collect(),
            SystemState::Branches(b) => b.branches.iter().flat_map(|br| br.iter()).collect(),
        }
    }

    fn packets_mut(&mut self) -> Vec<&mut WavePacket> {
        match self {
            SystemState::Modes(m) => m.packets_mut().iter_mut().collect(),
            SystemState::Branches(b) => {
                b.branches.iter_mut().flat_map(|br| br.iter_mut()).collect()
            }
        }
    }
}

/// 4×4 packet Gram matrix in canonical label order.
pub fn mode_gram(modes: &ModeSet) -> Result<GramMatrix> {
    gram_matrix(modes.packets().iter())
}

/// Branch Gram matrices of subsystem 1 and subsystem 2 packets.
pub fn branch_grams(branches: &BranchSet) -> Result<(GramMatrix, GramMatrix)> {
    Ok((
        gram_matrix(branches.subsystem_packets(Subsystem::One))?,
        gram_matrix(branches.subsystem_packets(Subsystem::Two))?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorOptions {
    /// Largest admissible phase advance per step, in radians.
    pub phase_guard: f64,
    /// Drop each packet's own contribution from the potential it feels (mean field only).
    pub exclude_self: bool,
    pub three_d_kernel: ThreeDKernel,
    /// Per-packet expectation weights for mean-field sourcing; `None` means N/2 each.
    pub mean_field_weights: Option<[f64; 4]>,
}

impl Default for PropagatorOptions {
    fn default() -> Self {
        Self {
            phase_guard: 0.5,
            exclude_self: false,
            three_d_kernel: ThreeDKernel::Spectral,
            mean_field_weights: None,
        }
    }
}

/// Precomputed operators and scratch space for one grid, parameter set and dt.
#[derive(Debug, Clone)]
pub struct Propagator {
    grid: Arc<Grid>,
    params: PhysicalParams,
    options: PropagatorOptions,
    dt: f64,
    fft: FftNd,
    kernel: Option<GravityKernel>,
    k2: Vec<f64>,
    kinetic_half: Vec<Complex64>,
    density: Vec<f64>,
    potential: Vec<f64>,
    own_potential: Vec<f64>,
    work: Vec<Complex64>,
    steps_taken: usize,
    last_potential_min: f64,
}

impl Propagator {
    pub fn new(
        grid: Arc<Grid>,
        params: PhysicalParams,
        dt: f64,
        options: PropagatorOptions,
    ) -> Result<Self> {
        params.validate()?;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        let kinetic_phase = params.hbar * grid.max_wavenumber_squared() * dt / (2.0 * params.mass);
        if kinetic_phase >= options.phase_guard {
            return Err(Error::StepSize {
                source_term: "kinetic",
                phase: kinetic_phase,
                limit: options.phase_guard,
                suggested_dt: 0.9 * dt * options.phase_guard / kinetic_phase,
            });
        }
        let kernel = if params.newton_g > 0.0 {
            Some(build_kernel_with(&grid, &params, options.three_d_kernel)?)
        } else {
            None
        };
        let k2 = grid.wavenumber_squared();
        let kinetic_half = k2
            .iter()
            .map(|k2| Complex64::from_polar(1.0, -params.hbar * k2 * dt / (4.0 * params.mass)))
            .collect();
        let fft = FftNd::new(grid.points_per_axis(), grid.axes())?;
        let n = grid.len();
        Ok(Self {
            grid,
            params,
            options,
            dt,
            fft,
            kernel,
            k2,
            kinetic_half,
            density: vec![0.0; n],
            potential: vec![0.0; n],
            own_potential: vec![0.0; n],
            work: Vec::new(),
            steps_taken: 0,
            last_potential_min: 0.0,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn options(&self) -> &PropagatorOptions {
        &self.options
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn kernel(&self) -> Option<&GravityKernel> {
        self.kernel.as_ref()
    }

    /// Minimum of the potential applied during the most recent step.
    pub fn last_potential_min(&self) -> f64 {
        self.last_potential_min
    }

    pub fn mean_field_weights(&self) -> [f64; 4] {
        self.options
            .mean_field_weights
            .unwrap_or([self.params.mean_field_weight(); 4])
    }

    fn kinetic_half_step(&self, packet: &mut WavePacket) {
        self.fft.forward(&mut packet.amplitudes);
        for (z, u) in packet.amplitudes.iter_mut().zip(&self.kinetic_half) {
            *z *= u;
        }
        self.fft.inverse(&mut packet.amplitudes);
    }

    /// Fill `self.potential` from the given packets and weights.
    fn source_potential(&mut self, packets: &[&WavePacket], weights: &[f64]) -> Result<()> {
        let Some(kernel) = self.kernel.as_ref() else {
            self.potential.iter_mut().for_each(|v| *v = 0.0);
            return Ok(());
        };
        self.density.iter_mut().for_each(|v| *v = 0.0);
        accumulate_density(
            &mut self.density,
            packets.iter().copied().zip(weights.iter().copied()),
            self.params.mass,
        );
        kernel.solve_into(&self.density, &mut self.potential, &mut self.work)
    }

    fn own_potential(&mut self, packet: &WavePacket, weight: f64) -> Result<()> {
        let Some(kernel) = self.kernel.as_ref() else {
            self.own_potential.iter_mut().for_each(|v| *v = 0.0);
            return Ok(());
        };
        self.density.iter_mut().for_each(|v| *v = 0.0);
        accumulate_density(&mut self.density, [(packet, weight)], self.params.mass);
        kernel.solve_into(&self.density, &mut self.own_potential, &mut self.work)
    }

    fn guard_potential(&self, field: &[f64]) -> Result<()> {
        let max = field.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !max.is_finite() {
            return Err(Error::NonFinite {
                step: self.steps_taken + 1,
                what: "potential".into(),
            });
        }
        let phase = self.params.mass * max * self.dt / self.params.hbar;
        if phase >= self.options.phase_guard {
            return Err(Error::StepSize {
                source_term: "potential",
                phase,
                limit: self.options.phase_guard,
                suggested_dt: 0.9 * self.dt * self.options.phase_guard / phase,
            });
        }
        Ok(())
    }

    fn kick(&self, packet: &mut WavePacket, field: &[f64], subtract: Option<&[f64]>) {
        let scale = -self.params.mass * self.dt / self.params.hbar;
        match subtract {
            None => {
                for (z, phi) in packet.amplitudes.iter_mut().zip(field) {
                    *z *= Complex64::from_polar(1.0, scale * phi);
                }
            }
            Some(own) => {
                for ((z, phi), o) in packet.amplitudes.iter_mut().zip(field).zip(own) {
                    *z *= Complex64::from_polar(1.0, scale * (phi - o));
                }
            }
        }
    }

    /// Advance the state by one step of length `dt`.
    pub fn strang_step(&mut self, state: &mut SystemState, sourcing: SourcingMode) -> Result<()> {
        check_pairing(state, sourcing)?;
        if state.grid().spec() != self.grid.spec() {
            return Err(Error::Usage(
                "state and propagator live on different grids".into(),
            ));
        }
        for p in state.packets_mut() {
            self.kinetic_half_step(p);
        }

        let mut potential_min = 0.0f64;
        match (sourcing, &mut *state) {
            (SourcingMode::NoGravity, _) => {}
            (SourcingMode::MeanField, SystemState::Modes(modes)) => {
                let weights = self.mean_field_weights();
                {
                    let refs: Vec<&WavePacket> = modes.packets().iter().collect();
                    self.source_potential(&refs, &weights)?;
                }
                self.guard_potential(&self.potential)?;
                potential_min = self.potential.iter().copied().fold(f64::INFINITY, f64::min);
                if self.options.exclude_self {
                    for (a, w) in weights.iter().enumerate() {
                        let snapshot = modes.packets()[a].clone();
                        self.own_potential(&snapshot, *w)?;
                        let field = core::mem::take(&mut self.potential);
                        let own = core::mem::take(&mut self.own_potential);
                        self.kick(&mut modes.packets_mut()[a], &field, Some(&own));
                        self.potential = field;
                        self.own_potential = own;
                    }
                } else {
                    let field = core::mem::take(&mut self.potential);
                    for p in modes.packets_mut().iter_mut() {
                        self.kick(p, &field, None);
                    }
                    self.potential = field;
                }
            }
            (SourcingMode::BranchResolved, SystemState::Branches(branches)) => {
                let n = self.params.bosons as f64;
                potential_min = f64::INFINITY;
                for pair in branches.branches_mut().iter_mut() {
                    {
                        let refs = [&pair[0], &pair[1]];
                        self.source_potential(&refs, &[n, n])?;
                    }
                    self.guard_potential(&self.potential)?;
                    potential_min = potential_min
                        .min(self.potential.iter().copied().fold(f64::INFINITY, f64::min));
                    let field = core::mem::take(&mut self.potential);
                    for p in pair.iter_mut() {
                        self.kick(p, &field, None);
                    }
                    self.potential = field;
                }
            }
            _ => unreachable!("pairing checked above"),
        }

        for p in state.packets_mut() {
            self.kinetic_half_step(p);
        }
        self.steps_taken += 1;
        self.last_potential_min = potential_min;
        for p in state.packets() {
            let n2 = p.norm_squared();
            if !n2.is_finite() {
                return Err(Error::NonFinite {
                    step: self.steps_taken,
                    what: format!("packet {} norm", p.label),
                });
            }
        }
        Ok(())
    }

    /// `(ħ²/2m)∫|∇φ|²` by spectral differentiation.
    pub fn kinetic_energy(&mut self, packet: &WavePacket) -> f64 {
        self.work.clear();
        self.work.extend_from_slice(&packet.amplitudes);
        self.fft.forward(&mut self.work);
        let sum: f64 = self
            .work
            .iter()
            .zip(&self.k2)
            .map(|(z, k2)| k2 * z.norm_sqr())
            .sum();
        let grad2 = sum * self.grid.cell_volume() / self.grid.len() as f64;
        self.params.hbar * self.params.hbar / (2.0 * self.params.mass) * grad2
    }

    /// Potential sourced by the current configuration:
    /// the shared Φ for modes, every branch's Φ for branches.
    pub fn potentials(
        &mut self,
        state: &SystemState,
        sourcing: SourcingMode,
    ) -> Result<Vec<Vec<f64>>> {
        check_pairing(state, sourcing)?;
        let mut out = Vec::new();
        match (sourcing, state) {
            (SourcingMode::NoGravity, _) => out.push(vec![0.0; self.grid.len()]),
            (SourcingMode::MeanField, SystemState::Modes(modes)) => {
                let refs: Vec<&WavePacket> = modes.packets().iter().collect();
                let w = self.mean_field_weights();
                self.source_potential(&refs, &w)?;
                out.push(self.potential.clone());
            }
            (SourcingMode::BranchResolved, SystemState::Branches(branches)) => {
                let n = self.params.bosons as f64;
                for pair in branches.branches.iter() {
                    self.source_potential(&[&pair[0], &pair[1]], &[n, n])?;
                    out.push(self.potential.clone());
                }
            }
            _ => unreachable!("pairing checked above"),
        }
        Ok(out)
    }

    /// Conserved energy of the coupled flow,
    /// `Σ_a w_a·(ħ²/2m)∫|∇φ_a|² + ½∫Φρ`.
    ///
    /// Mean field and no gravity use the mean-field weights. For branches the
    /// branch energies (weight N per packet) are averaged.
    pub fn energy_functional(
        &mut self,
        state: &SystemState,
        sourcing: SourcingMode,
    ) -> Result<f64> {
        check_pairing(state, sourcing)?;
        let dv = self.grid.cell_volume();
        match state {
            SystemState::Modes(modes) => {
                let w = self.mean_field_weights();
                let mut kinetic = 0.0;
                for (p, wa) in modes.packets().iter().zip(w) {
                    kinetic += wa * self.kinetic_energy(p);
                }
                if sourcing == SourcingMode::NoGravity || self.kernel.is_none() {
                    return Ok(kinetic);
                }
                let refs: Vec<&WavePacket> = modes.packets().iter().collect();
                self.source_potential(&refs, &w)?;
                let mut interaction: f64 = 0.5
                    * self
                        .potential
                        .iter()
                        .zip(&self.density)
                        .map(|(f, r)| f * r)
                        .sum::<f64>()
                    * dv;
                if self.options.exclude_self {
                    for (p, wa) in modes.packets().iter().zip(w) {
                        self.own_potential(p, wa)?;
                        interaction -= 0.5
                            * self
                                .own_potential
                                .iter()
                                .zip(&self.density)
                                .map(|(f, r)| f * r)
                                .sum::<f64>()
                            * dv;
                    }
                }
                Ok(kinetic + interaction)
            }
            SystemState::Branches(branches) => {
                let n = self.params.bosons as f64;
                let mut total = 0.0;
                for pair in branches.branches.iter() {
                    let mut e = n * (self.kinetic_energy(&pair[0]) + self.kinetic_energy(&pair[1]));
                    if sourcing != SourcingMode::NoGravity && self.kernel.is_some() {
                        self.source_potential(&[&pair[0], &pair[1]], &[n, n])?;
                        e += 0.5
                            * self
                                .potential
                                .iter()
                                .zip(&self.density)
                                .map(|(f, r)| f * r)
                                .sum::<f64>()
                            * dv;
                    }
                    total += e;
                }
                Ok(total / 4.0)
            }
        }
    }
}

fn check_pairing(state: &SystemState, sourcing: SourcingMode) -> Result<()> {
    match (state, sourcing) {
        (SystemState::Modes(_), SourcingMode::BranchResolved) => Err(Error::Usage(
            "branch-resolved sourcing needs a branch set".into(),
        )),
        (SystemState::Branches(_), SourcingMode::MeanField) => Err(Error::Usage(
            "mean-field sourcing acts on the mode set, not on branches".into(),
        )),
        _ => Ok(()),
    }
}
