//! Uniform periodic grids, sampled single-particle wavefunctions and the
//! quantities derived from them (inner products, densities, moments).

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Spatial point; components beyond the grid dimension are ignored and kept at zero.
pub type Position = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    One,
    Three,
}

impl Dimension {
    pub fn axes(self) -> usize {
        match self {
            Dimension::One => 1,
            Dimension::Three => 3,
        }
    }

    pub fn from_axes(axes: usize) -> Result<Self> {
        match axes {
            1 => Ok(Dimension::One),
            3 => Ok(Dimension::Three),
            other => Err(Error::Config(format!(
                "dimension must be 1 or 3, got {other}"
            ))),
        }
    }
}

/// Isotropic grid description: same point count and box length on every axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub dimension: Dimension,
    pub points_per_axis: usize,
    pub box_length: f64,
}

impl GridSpec {
    pub fn new(dimension: Dimension, points_per_axis: usize, box_length: f64) -> Self {
        Self {
            dimension,
            points_per_axis,
            box_length,
        }
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.points_per_axis as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.points_per_axis < 2 || !self.points_per_axis.is_power_of_two() {
            return Err(Error::Config(format!(
                "points per axis must be a power of two >= 2, got {}",
                self.points_per_axis
            )));
        }
        if !(self.box_length > 0.0) || !self.box_length.is_finite() {
            return Err(Error::Config(format!(
                "box length must be positive and finite, got {}",
                self.box_length
            )));
        }
        Ok(())
    }
}

/// Coordinates and spectral wavenumbers of a validated [`GridSpec`].
///
/// Coordinates run over `[-L/2, L/2)`; wavenumbers follow the usual FFT
/// ordering `0, 1, .., n/2-1, -n/2, .., -1` in units of `2π/L`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    spec: GridSpec,
    spacing: f64,
    coords: Vec<f64>,
    wavenumbers: Vec<f64>,
}

pub fn build_grid(spec: GridSpec) -> Result<Grid> {
    spec.validate()?;
    let n = spec.points_per_axis;
    let h = spec.spacing();
    let coords = (0..n)
        .map(|j| -0.5 * spec.box_length + j as f64 * h)
        .collect();
    let wavenumbers = (0..n)
        .map(|j| {
            let m = if j < n / 2 {
                j as f64
            } else {
                j as f64 - n as f64
            };
            2.0 * PI * m / spec.box_length
        })
        .collect();
    Ok(Grid {
        spec,
        spacing: h,
        coords,
        wavenumbers,
    })
}

impl Grid {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn axes(&self) -> usize {
        self.spec.dimension.axes()
    }

    pub fn points_per_axis(&self) -> usize {
        self.spec.points_per_axis
    }

    pub fn len(&self) -> usize {
        self.spec.points_per_axis.pow(self.axes() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Quadrature weight of one grid point, `h^d`.
    pub fn cell_volume(&self) -> f64 {
        libm::pow(self.spacing, self.axes() as f64)
    }

    pub fn coordinates(&self) -> &[f64] {
        &self.coords
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn half_box(&self) -> f64 {
        0.5 * self.spec.box_length
    }

    /// Per-axis indices of a flat (row-major) index.
    pub fn unravel(&self, flat: usize) -> [usize; 3] {
        let n = self.points_per_axis();
        match self.spec.dimension {
            Dimension::One => [flat, 0, 0],
            Dimension::Three => [flat / (n * n), (flat / n) % n, flat % n],
        }
    }

    pub fn position(&self, flat: usize) -> Position {
        let idx = self.unravel(flat);
        let mut x = [0.0; 3];
        for (axis, xi) in x.iter_mut().enumerate().take(self.axes()) {
            *xi = self.coords[idx[axis]];
        }
        x
    }

    /// |k|² at every flat index.
    pub fn wavenumber_squared(&self) -> Vec<f64> {
        (0..self.len())
            .map(|flat| {
                let idx = self.unravel(flat);
                (0..self.axes())
                    .map(|a| self.wavenumbers[idx[a]] * self.wavenumbers[idx[a]])
                    .sum()
            })
            .collect()
    }

    /// Largest |k|² representable on the grid (Nyquist on every axis).
    pub fn max_wavenumber_squared(&self) -> f64 {
        let k = PI / self.spacing;
        self.axes() as f64 * k * k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    L,
    R,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Subsystem {
    One,
    Two,
}

/// Packet label `κi`: subsystem `i ∈ {1,2}` located at side `κ ∈ {L,R}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label {
    pub subsystem: Subsystem,
    pub side: Side,
}

impl Label {
    /// Canonical ordering used everywhere: 1L, 1R, 2L, 2R.
    pub const ALL: [Label; 4] = [
        Label {
            subsystem: Subsystem::One,
            side: Side::L,
        },
        Label {
            subsystem: Subsystem::One,
            side: Side::R,
        },
        Label {
            subsystem: Subsystem::Two,
            side: Side::L,
        },
        Label {
            subsystem: Subsystem::Two,
            side: Side::R,
        },
    ];

    pub fn index(self) -> usize {
        let s = match self.subsystem {
            Subsystem::One => 0,
            Subsystem::Two => 2,
        };
        s + match self.side {
            Side::L => 0,
            Side::R => 1,
        }
    }

    pub fn parse(text: &str) -> Option<Label> {
        Label::ALL.into_iter().find(|l| {
            let mut buf = [0u8; 2];
            l.write_bytes(&mut buf);
            buf == text.as_bytes()
        })
    }

    fn write_bytes(self, buf: &mut [u8; 2]) {
        buf[0] = match self.subsystem {
            Subsystem::One => b'1',
            Subsystem::Two => b'2',
        };
        buf[1] = match self.side {
            Side::L => b'L',
            Side::R => b'R',
        };
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut buf = [0u8; 2];
        self.write_bytes(&mut buf);
        f.write_str(core::str::from_utf8(&buf).unwrap_or("??"))
    }
}

/// Joint location assignment of the two subsystems: subsystem 1 at `first`,
/// subsystem 2 at `second`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Branch {
    pub first: Side,
    pub second: Side,
}

impl Branch {
    /// Canonical ordering LL, LR, RL, RR.
    pub const ALL: [Branch; 4] = [
        Branch {
            first: Side::L,
            second: Side::L,
        },
        Branch {
            first: Side::L,
            second: Side::R,
        },
        Branch {
            first: Side::R,
            second: Side::L,
        },
        Branch {
            first: Side::R,
            second: Side::R,
        },
    ];

    pub fn index(self) -> usize {
        2 * (self.first == Side::R) as usize + (self.second == Side::R) as usize
    }

    pub fn labels(self) -> [Label; 2] {
        [
            Label {
                subsystem: Subsystem::One,
                side: self.first,
            },
            Label {
                subsystem: Subsystem::Two,
                side: self.second,
            },
        ]
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = |s: Side| if s == Side::L { 'L' } else { 'R' };
        write!(f, "{}{}", c(self.first), c(self.second))
    }
}

/// One single-particle wavefunction sampled on a shared grid.
#[derive(Debug, Clone)]
pub struct WavePacket {
    pub label: Label,
    pub amplitudes: Vec<Complex64>,
    grid: Arc<Grid>,
}

impl WavePacket {
    pub fn new(label: Label, amplitudes: Vec<Complex64>, grid: Arc<Grid>) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::Usage(format!(
                "packet {label} has {} samples, grid has {}",
                amplitudes.len(),
                grid.len()
            )));
        }
        Ok(Self {
            label,
            amplitudes,
            grid,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n2 = self.norm_squared();
        if !(n2 > 0.0) || !n2.is_finite() {
            return Err(Error::Degenerate(format!(
                "packet {} has norm² {n2}",
                self.label
            )));
        }
        let s = 1.0 / libm::sqrt(n2);
        self.amplitudes.iter_mut().for_each(|z| *z *= s);
        Ok(())
    }

    pub fn same_grid(&self, other: &WavePacket) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid.spec == other.grid.spec
    }
}

/// Geometry of one Gaussian packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketSpec {
    pub label: Label,
    pub center: Position,
    /// Position standard deviation σ of |φ|².
    pub width: f64,
    pub momentum: Position,
}

/// Normalized Gaussian `exp(-(x-c)²/4σ²)·exp(i k₀·x)`.
///
/// `support_sigmas` is the clearance (in units of σ) that must separate the
/// packet center from every box face.
pub fn gaussian_packet(
    grid: &Arc<Grid>,
    spec: &PacketSpec,
    support_sigmas: f64,
) -> Result<WavePacket> {
    let h = grid.spacing();
    if !(spec.width > h) {
        return Err(Error::Config(format!(
            "packet {}: width {} is not resolved by grid spacing {h}",
            spec.label, spec.width
        )));
    }
    let half = grid.half_box();
    for axis in 0..grid.axes() {
        let c = spec.center[axis];
        let reach = support_sigmas * spec.width;
        if c - reach < -half || c + reach > half {
            return Err(Error::Config(format!(
                "packet {}: center {c} ± {support_sigmas}σ = ±{reach} leaves the box [-{half}, {half}) on axis {axis}",
                spec.label
            )));
        }
    }
    let inv4s2 = 1.0 / (4.0 * spec.width * spec.width);
    let amplitudes = (0..grid.len())
        .map(|flat| {
            let x = grid.position(flat);
            let mut r2 = 0.0;
            let mut phase = 0.0;
            for ((&xa, &c), &k) in x
                .iter()
                .zip(&spec.center)
                .zip(&spec.momentum)
                .take(grid.axes())
            {
                let d = xa - c;
                r2 += d * d;
                phase += k * xa;
            }
            Complex64::from_polar(libm::exp(-r2 * inv4s2), phase)
        })
        .collect();
    let mut packet = WavePacket::new(spec.label, amplitudes, grid.clone())?;
    packet.normalize()?;
    Ok(packet)
}

/// Discretized L² pairing `Σ conj(a)·b·h^d`.
pub fn inner_product(a: &WavePacket, b: &WavePacket) -> Result<Complex64> {
    if !a.same_grid(b) {
        return Err(Error::Usage(format!(
            "packets {} and {} live on different grids",
            a.label, b.label
        )));
    }
    let sum = a
        .amplitudes
        .iter()
        .zip(&b.amplitudes)
        .fold(Complex64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y);
    Ok(sum * a.grid.cell_volume())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub hbar: f64,
    pub mass: f64,
    /// Bosons per occupied packet, N.
    pub bosons: u32,
    pub newton_g: f64,
    /// Softening length of the 1D effective kernel.
    pub softening: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
            bosons: 1,
            newton_g: 0.0,
            softening: 1.0,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [("hbar", self.hbar), ("mass", self.mass)];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.bosons < 1 {
            return Err(Error::Config(format!(
                "boson number must be >= 1, got {}",
                self.bosons
            )));
        }
        if !(self.newton_g >= 0.0) || !self.newton_g.is_finite() {
            return Err(Error::Config(format!(
                "G must be >= 0, got {}",
                self.newton_g
            )));
        }
        Ok(())
    }

    /// Expected occupation N/2 of each packet in the superposed state.
    pub fn mean_field_weight(&self) -> f64 {
        0.5 * self.bosons as f64
    }
}

/// Nonnegative mass density sampled on the grid.
#[derive(Debug, Clone)]
pub struct DensityField {
    pub values: Vec<f64>,
    grid: Arc<Grid>,
}

impl DensityField {
    pub fn new(values: Vec<f64>, grid: Arc<Grid>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Usage(format!(
                "density has {} samples, grid has {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { values, grid })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }
}

/// `ρ(x) = Σ_a w_a·m·|φ_a(x)|²`.
pub fn mass_density(
    packets: &[WavePacket],
    params: &PhysicalParams,
    weights: &[f64],
) -> Result<DensityField> {
    let first = packets
        .first()
        .ok_or_else(|| Error::Usage("mass density of an empty packet list".into()))?;
    if weights.len() != packets.len() {
        return Err(Error::Usage(format!(
            "{} weights for {} packets",
            weights.len(),
            packets.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
        return Err(Error::Usage(format!("negative packet weight {w}")));
    }
    if packets.iter().any(|p| !p.same_grid(first)) {
        return Err(Error::Usage("packets live on different grids".into()));
    }
    let mut values = alloc::vec![0.0; first.grid.len()];
    accumulate_density(
        &mut values,
        packets.iter().zip(weights.iter().copied()),
        params.mass,
    );
    DensityField::new(values, first.grid.clone())
}

pub(crate) fn accumulate_density<'a>(
    out: &mut [f64],
    packets: impl IntoIterator<Item = (&'a WavePacket, f64)>,
    mass: f64,
) {
    for (p, w) in packets {
        let scale = w * mass;
        if scale == 0.0 {
            continue;
        }
        for (r, z) in out.iter_mut().zip(&p.amplitudes) {
            *r += scale * z.norm_sqr();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketObservables {
    pub norm: f64,
    pub mean_position: Position,
    /// RMS position spread per axis, `sqrt(Var(x)/d)`; equals σ for an isotropic Gaussian.
    pub rms_width: f64,
}

pub fn packet_observables(p: &WavePacket) -> Result<PacketObservables> {
    let grid = &p.grid;
    let dv = grid.cell_volume();
    let mut mass = 0.0;
    let mut first = [0.0; 3];
    let mut second = 0.0;
    for (flat, z) in p.amplitudes.iter().enumerate() {
        let w = z.norm_sqr();
        if w == 0.0 {
            continue;
        }
        let x = grid.position(flat);
        mass += w;
        for a in 0..grid.axes() {
            first[a] += w * x[a];
            second += w * x[a] * x[a];
        }
    }
    if !(mass > 0.0) {
        return Err(Error::Degenerate(format!(
            "packet {} has zero norm",
            p.label
        )));
    }
    let mut mean = [0.0; 3];
    let mut mean2 = 0.0;
    for a in 0..grid.axes() {
        mean[a] = first[a] / mass;
        mean2 += mean[a] * mean[a];
    }
    let variance = (second / mass - mean2).max(0.0);
    Ok(PacketObservables {
        norm: libm::sqrt(mass * dv),
        mean_position: mean,
        rms_width: libm::sqrt(variance / grid.axes() as f64),
    })
}

/// Whether the packet's `mean ± sigmas·width` stays inside the box on every axis.
pub fn within_support(obs: &PacketObservables, grid: &Grid, sigmas: f64) -> bool {
    let half = grid.half_box();
    (0..grid.axes()).all(|a| {
        let c = obs.mean_position[a];
        let reach = sigmas * obs.rms_width;
        c - reach >= -half && c + reach <= half
    })
}

/// The four labeled packets in canonical order (1L, 1R, 2L, 2R).
#[derive(Debug, Clone)]
pub struct ModeSet {
    packets: [WavePacket; 4],
}

impl ModeSet {
    pub fn new(mut packets: Vec<WavePacket>) -> Result<Self> {
        if packets.len() != 4 {
            return Err(Error::Usage(format!(
                "a mode set needs 4 packets, got {}",
                packets.len()
            )));
        }
        packets.sort_by_key(|p| p.label.index());
        for (p, want) in packets.iter().zip(Label::ALL) {
            if p.label != want {
                return Err(Error::Usage(format!("mode set is missing packet {want}")));
            }
        }
        if packets.iter().any(|p| !p.same_grid(&packets[0])) {
            return Err(Error::Usage(
                "mode set packets live on different grids".into(),
            ));
        }
        let packets: [WavePacket; 4] = packets
            .try_into()
            .map_err(|_| Error::Usage("mode set needs 4 packets".into()))?;
        Ok(Self { packets })
    }

    pub fn from_specs(grid: &Arc<Grid>, specs: &[PacketSpec], support_sigmas: f64) -> Result<Self> {
        let packets = specs
            .iter()
            .map(|s| gaussian_packet(grid, s, support_sigmas))
            .collect::<Result<Vec<_>>>()?;
        Self::new(packets)
    }

    pub fn packets(&self) -> &[WavePacket; 4] {
        &self.packets
    }

    pub fn packets_mut(&mut self) -> &mut [WavePacket; 4] {
        &mut self.packets
    }

    pub fn get(&self, label: Label) -> &WavePacket {
        &self.packets[label.index()]
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.packets[0].grid()
    }
}
