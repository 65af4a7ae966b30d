//! Time integration with periodic diagnostics.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::entanglement::{block_entropy, branch_entanglement, cross_block_diagnostic, Method};
use crate::error::{Error, Result};
use crate::fock::block_product_state;
use crate::gram::GramMatrix;
use crate::grid::{inner_product, packet_observables, within_support, Label, PacketObservables};
use crate::propagator::{branch_grams, mode_gram, Propagator, Schedule, SourcingMode, SystemState};

/// Initial packets must be normalized to within this.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    /// Entropy is reported only while the cross-block overlap stays at or below this.
    pub cross_block_threshold: f64,
    /// Compute entanglement on every k-th record; 0 disables it.
    pub entanglement_stride: usize,
    /// Support monitor: packets must keep `mean ± k·width` inside the box.
    pub support_sigmas: f64,
    /// Branch amplitudes in order LL, LR, RL, RR.
    pub amplitudes: [Complex64; 4],
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            cross_block_threshold: 1e-6,
            entanglement_stride: 1,
            support_sigmas: 5.0,
            amplitudes: crate::entanglement::equal_amplitudes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesRecord {
    pub step: usize,
    pub time: f64,
    /// Per-label observables in order 1L, 1R, 2L, 2R. For branches these are
    /// taken from branch LL (1L, 2L) and branch RR (1R, 2R).
    pub packets: [PacketObservables; 4],
    /// Largest entry-wise change of the Gram matrix (or both branch Grams) since t = 0.
    pub gram_drift: f64,
    pub cross_block: f64,
    pub phi_min: f64,
    pub energy: f64,
    /// `None` when not computed at this record or not certified.
    pub entropy: Option<f64>,
    pub log_negativity: Option<f64>,
    pub method: Option<Method>,
    pub certified: bool,
    pub support_ok: bool,
}

/// Initial Gram data that drift is measured against.
#[derive(Debug, Clone)]
enum Reference {
    Modes(GramMatrix),
    Branches(GramMatrix, GramMatrix),
}

fn reference(state: &SystemState) -> Result<Reference> {
    Ok(match state {
        SystemState::Modes(m) => Reference::Modes(mode_gram(m)?),
        SystemState::Branches(b) => {
            let (g1, g2) = branch_grams(b)?;
            Reference::Branches(g1, g2)
        }
    })
}

/// Largest `√2·|⟨φ_{1,b}|φ_{2,b}⟩|` over branches.
fn branch_cross_block(state: &crate::propagator::BranchSet) -> Result<f64> {
    let mut worst = 0.0f64;
    for b in crate::grid::Branch::ALL {
        let pair = state.branch(b);
        worst = worst.max(libm::sqrt(2.0) * inner_product(&pair[0], &pair[1])?.norm());
    }
    Ok(worst)
}

fn observe(
    prop: &mut Propagator,
    state: &SystemState,
    sourcing: SourcingMode,
    reference: &Reference,
    options: &AnalysisOptions,
    step: usize,
    with_entanglement: bool,
) -> Result<TimeSeriesRecord> {
    let packets = match state {
        SystemState::Modes(m) => {
            let p = m.packets();
            [
                packet_observables(&p[0])?,
                packet_observables(&p[1])?,
                packet_observables(&p[2])?,
                packet_observables(&p[3])?,
            ]
        }
        SystemState::Branches(b) => {
            let obs = |l: Label| packet_observables(b.representative(l));
            [
                obs(Label::ALL[0])?,
                obs(Label::ALL[1])?,
                obs(Label::ALL[2])?,
                obs(Label::ALL[3])?,
            ]
        }
    };
    let grid = prop.grid().clone();
    let support_ok = match state {
        SystemState::Modes(_) => packets
            .iter()
            .all(|o| within_support(o, &grid, options.support_sigmas)),
        SystemState::Branches(b) => state
            .packets()
            .into_iter()
            .map(packet_observables)
            .collect::<Result<Vec<_>>>()?
            .iter()
            .all(|o| within_support(o, b.grid(), options.support_sigmas)),
    };

    let n = prop.params().bosons;
    let (gram_drift, cross_block, report) = match (state, reference) {
        (SystemState::Modes(m), Reference::Modes(g0)) => {
            let g = mode_gram(m)?;
            let cross = cross_block_diagnostic(&g)?;
            let report = if with_entanglement && cross <= options.cross_block_threshold {
                Some(block_entropy(&block_product_state(&g, n)?)?)
            } else {
                None
            };
            (g.max_abs_diff(g0), cross, report)
        }
        (SystemState::Branches(b), Reference::Branches(g10, g20)) => {
            let (g1, g2) = branch_grams(b)?;
            let cross = branch_cross_block(b)?;
            let report = if with_entanglement && cross <= options.cross_block_threshold {
                Some(branch_entanglement(&g1, &g2, n, &options.amplitudes)?)
            } else {
                None
            };
            (
                g1.max_abs_diff(g10).max(g2.max_abs_diff(g20)),
                cross,
                report,
            )
        }
        _ => return Err(Error::Usage("state changed kind during evolution".into())),
    };

    let phi_min = prop
        .potentials(state, sourcing)?
        .iter()
        .flat_map(|f| f.iter().copied())
        .fold(f64::INFINITY, f64::min);
    let energy = prop.energy_functional(state, sourcing)?;
    Ok(TimeSeriesRecord {
        step,
        time: step as f64 * prop.dt(),
        packets,
        gram_drift,
        cross_block,
        phi_min,
        energy,
        entropy: report.as_ref().map(|r| r.von_neumann_entropy),
        log_negativity: report.as_ref().map(|r| r.log_negativity),
        method: report.as_ref().map(|r| r.method),
        certified: cross_block <= options.cross_block_threshold,
        support_ok,
    })
}

/// Evolve `state` over the schedule, emitting the t = 0 record and then one
/// every `record_stride` steps. `on_record` sees each record as it is produced.
pub fn evolve(
    prop: &mut Propagator,
    state: &mut SystemState,
    schedule: &Schedule,
    sourcing: SourcingMode,
    options: &AnalysisOptions,
    mut on_record: impl FnMut(&TimeSeriesRecord),
) -> Result<Vec<TimeSeriesRecord>> {
    if schedule.record_stride < 1 {
        return Err(Error::Config("record_stride must be >= 1".into()));
    }
    if (schedule.dt - prop.dt()).abs() > 1e-15 * schedule.dt.abs() {
        return Err(Error::Usage(format!(
            "schedule dt {} differs from propagator dt {}",
            schedule.dt,
            prop.dt()
        )));
    }
    for p in state.packets() {
        let n2 = p.norm_squared();
        if (n2 - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::Degenerate(format!(
                "packet {} has norm² {n2}, expected 1",
                p.label
            )));
        }
    }
    let reference = reference(state)?;
    let mut records = Vec::new();
    let mut emit =
        |prop: &mut Propagator, state: &SystemState, step: usize, index: usize| -> Result<()> {
            let with_ent = options.entanglement_stride > 0
                && index.is_multiple_of(options.entanglement_stride);
            let rec = observe(prop, state, sourcing, &reference, options, step, with_ent)?;
            if !rec.support_ok && records.iter().all(|r: &TimeSeriesRecord| r.support_ok) {
                log::warn!("packet support reached the box edge at step {step}");
            }
            on_record(&rec);
            records.push(rec);
            Ok(())
        };
    emit(prop, state, 0, 0)?;
    let mut index = 1;
    for step in 1..=schedule.n_steps {
        prop.strang_step(state, sourcing)?;
        if step % schedule.record_stride == 0 {
            emit(prop, state, step, index)?;
            index += 1;
        }
    }
    Ok(records)
}
