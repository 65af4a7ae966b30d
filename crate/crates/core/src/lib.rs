//! Numerical core for gravitationally interacting Gaussian packets: grids and
//! packets, a Hockney-padded Poisson solver, split-step Schrödinger–Newton
//! evolution, and bosonic mode entanglement.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;

pub mod entanglement;
pub mod error;
pub mod fft;
pub mod fock;
pub mod gram;
pub mod grid;
pub mod poisson;
pub mod propagator;
pub mod trajectory;

pub use error::{Error, Result};
pub use gram::{gram_matrix, GramMatrix};
pub use grid::{
    build_grid, Branch, Dimension, Grid, GridSpec, Label, ModeSet, PacketSpec, PhysicalParams,
    Side, Subsystem, WavePacket,
};
pub use propagator::{
    BranchSet, Propagator, PropagatorOptions, Schedule, SourcingMode, SystemState,
};
pub use trajectory::{evolve, AnalysisOptions, TimeSeriesRecord};
