//! Scenario documents: a sectioned TOML file with `[grid]`, `[physics]`,
//! `[packets.<label>]`, `[schedule]`, `[run]` and `[output]`.
//!
//! Every key except the four packet sections has a default. Parsing resolves
//! those defaults (and any SI input) into a [`ScenarioConfig`] in internal
//! units, which is what `print-config` and the run manifest echo.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Deserializer, Serialize};

use semigrav_core::grid::{Dimension, GridSpec, Label, PacketSpec, PhysicalParams};
use semigrav_core::poisson::ThreeDKernel;
use semigrav_core::{AnalysisOptions, PropagatorOptions, Schedule, SourcingMode};

use crate::error::AppError;

pub const PRESETS: [(&str, &str); 4] = [
    ("paper-1d", include_str!("../presets/paper-1d.toml")),
    ("paper-3d", include_str!("../presets/paper-3d.toml")),
    (
        "control-branch",
        include_str!("../presets/control-branch.toml"),
    ),
    ("free", include_str!("../presets/free.toml")),
];

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel3d {
    #[default]
    Spectral,
    CellAveraged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Units {
    #[default]
    Internal,
    /// Metres, kilograms, seconds, J·s; converted at parse time.
    Si,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sourcing {
    #[default]
    MeanField,
    BranchResolved,
    None,
}

impl From<Sourcing> for SourcingMode {
    fn from(s: Sourcing) -> Self {
        match s {
            Sourcing::MeanField => SourcingMode::MeanField,
            Sourcing::BranchResolved => SourcingMode::BranchResolved,
            Sourcing::None => SourcingMode::NoGravity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub dimension: u8,
    pub points: usize,
    #[serde(rename = "box")]
    pub box_length: f64,
    pub kernel_3d: Kernel3d,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            dimension: 1,
            points: 1024,
            box_length: 64.0,
            kernel_3d: Kernel3d::Spectral,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsSection {
    pub units: Units,
    pub hbar: f64,
    pub mass: f64,
    pub bosons: u32,
    pub newton_g: f64,
    /// 1D kernel softening; defaults to the narrowest packet width.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub softening: Option<f64>,
}

impl Default for PhysicsSection {
    fn default() -> Self {
        Self {
            units: Units::Internal,
            hbar: 1.0,
            mass: 1.0,
            bosons: 1,
            newton_g: 1.0,
            softening: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSection {
    #[serde(deserialize_with = "scalar_or_vector")]
    pub center: Vec<f64>,
    pub width: f64,
    /// Mean wavenumber; zero when omitted.
    #[serde(default, deserialize_with = "scalar_or_vector")]
    pub momentum: Vec<f64>,
}

fn scalar_or_vector<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Either {
        Scalar(f64),
        Vector(Vec<f64>),
    }
    Ok(match Either::deserialize(d)? {
        Either::Scalar(x) => vec![x],
        Either::Vector(v) => v,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleSection {
    pub dt: f64,
    pub n_steps: usize,
    pub record_stride: usize,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            n_steps: 1000,
            record_stride: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub name: String,
    pub sourcing: Sourcing,
    /// Entanglement is evaluated on every k-th record (0 = never).
    pub entanglement_stride: usize,
    pub exclude_self: bool,
    pub cross_block_threshold: f64,
    pub phase_guard: f64,
    pub support_sigmas: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            name: "custom".into(),
            sourcing: Sourcing::MeanField,
            entanglement_stride: 1,
            exclude_self: false,
            cross_block_threshold: 1e-6,
            phase_guard: 0.5,
            support_sigmas: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Defaults to `runs/<run.name>`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
}

/// Scales used to convert SI input: length ℓ = width of packet 1L,
/// mass μ = particle mass, time τ = μℓ²/ħ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitScales {
    pub length_m: f64,
    pub mass_kg: f64,
    pub time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub grid: GridSection,
    pub physics: PhysicsSection,
    pub packets: BTreeMap<String, PacketSection>,
    pub schedule: ScheduleSection,
    pub run: RunSection,
    pub output: OutputSection,
    #[serde(skip)]
    pub unit_scales: Option<UnitScales>,
}

/// Parse a scenario document and resolve all defaults.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, AppError> {
    let raw: ScenarioConfig = toml::from_str(text).map_err(|e| located(text, &e))?;
    raw.resolve()
}

/// Parse a document after applying `key.path=value` overrides.
pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<ScenarioConfig, AppError> {
    if overrides.is_empty() {
        return parse_config(text);
    }
    let mut table: toml::Table = text.parse().map_err(|e| located(text, &e))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let merged = toml::to_string(&table)
        .map_err(|e| AppError::Config(format!("cannot merge overrides: {e}")))?;
    parse_config(&merged).map_err(|e| match e {
        AppError::Config(m) => AppError::Config(format!("{m} (after applying overrides)")),
        other => other,
    })
}

/// Set `a.b.c = value` in a TOML table. The value is read as a TOML literal,
/// falling back to a bare string.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), AppError> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| {
        AppError::Usage(format!("override `{spec}` is not of the form key=value"))
    })?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(AppError::Usage(format!(
            "override `{spec}` has an empty key segment"
        )));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut cursor = table;
    for p in parents {
        let entry = cursor
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| AppError::Usage(format!("override `{spec}`: `{p}` is not a section")))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}

/// Render a TOML error as `line N in [section]: message`.
fn located(text: &str, e: &toml::de::Error) -> AppError {
    let Some(span) = e.span() else {
        return AppError::Config(e.message().to_string());
    };
    let before = &text[..span.start.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let section = before
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('[') && l.ends_with(']'))
        .unwrap_or("top level");
    AppError::Config(format!("line {line} in {section}: {}", e.message()))
}

fn check(cond: bool, section: &str, msg: impl FnOnce() -> String) -> Result<(), AppError> {
    if cond {
        Ok(())
    } else {
        Err(AppError::Config(format!("[{section}] {}", msg())))
    }
}

fn positive(x: f64) -> bool {
    x > 0.0 && x.is_finite()
}

impl ScenarioConfig {
    /// Validate, convert SI input and fill in defaults that depend on other keys.
    pub fn resolve(mut self) -> Result<Self, AppError> {
        let g = &self.grid;
        check(g.dimension == 1 || g.dimension == 3, "grid", || {
            format!("dimension must be 1 or 3, got {}", g.dimension)
        })?;
        check(g.points.is_power_of_two() && g.points >= 4, "grid", || {
            format!("points must be a power of two >= 4, got {}", g.points)
        })?;
        let dim = g.dimension as usize;

        let missing: Vec<String> = Label::ALL
            .iter()
            .map(|l| l.to_string())
            .filter(|l| !self.packets.contains_key(l))
            .collect();
        if !missing.is_empty() {
            let names: Vec<String> = missing.iter().map(|l| format!("[packets.{l}]")).collect();
            return Err(AppError::Config(format!(
                "missing packet section {}",
                names.join(", ")
            )));
        }
        if let Some(extra) = self.packets.keys().find(|k| Label::parse(k).is_none()) {
            return Err(AppError::Config(format!(
                "[packets.{extra}] is not a packet label; expected 1L, 1R, 2L, 2R"
            )));
        }
        for (label, p) in self.packets.iter_mut() {
            let section = format!("packets.{label}");
            check(p.center.len() == dim, &section, || {
                format!(
                    "center has {} components, grid dimension is {dim}",
                    p.center.len()
                )
            })?;
            if p.momentum.is_empty() {
                p.momentum = vec![0.0; dim];
            }
            check(p.momentum.len() == dim, &section, || {
                format!(
                    "momentum has {} components, grid dimension is {dim}",
                    p.momentum.len()
                )
            })?;
            check(positive(p.width), &section, || {
                format!("width must be positive, got {}", p.width)
            })?;
        }

        let ph = &self.physics;
        check(positive(ph.hbar), "physics", || {
            format!("hbar must be positive, got {}", ph.hbar)
        })?;
        check(positive(ph.mass), "physics", || {
            format!("mass must be positive, got {}", ph.mass)
        })?;
        check(ph.bosons >= 1, "physics", || "bosons must be >= 1".into())?;
        check(
            ph.newton_g >= 0.0 && ph.newton_g.is_finite(),
            "physics",
            || format!("newton_g must be non-negative, got {}", ph.newton_g),
        )?;
        if let Some(a) = ph.softening {
            check(positive(a), "physics", || {
                format!("softening must be positive, got {a}")
            })?;
        }
        check(positive(self.grid.box_length), "grid", || {
            format!("box must be positive, got {}", self.grid.box_length)
        })?;

        if self.physics.units == Units::Si {
            self.convert_si();
        }
        if dim == 1 && self.physics.softening.is_none() {
            let narrowest = self
                .packets
                .values()
                .map(|p| p.width)
                .fold(f64::INFINITY, f64::min);
            self.physics.softening = Some(narrowest);
        }
        if dim == 3 {
            self.physics.softening = None;
        }

        let s = &self.schedule;
        check(positive(s.dt), "schedule", || {
            format!("dt must be positive, got {}", s.dt)
        })?;
        check(s.n_steps >= 1, "schedule", || "n_steps must be >= 1".into())?;
        check(s.record_stride >= 1, "schedule", || {
            "record_stride must be >= 1".into()
        })?;

        let r = &self.run;
        check(!r.name.trim().is_empty(), "run", || {
            "name must not be empty".into()
        })?;
        check(positive(r.cross_block_threshold), "run", || {
            format!(
                "cross_block_threshold must be positive, got {}",
                r.cross_block_threshold
            )
        })?;
        check(positive(r.phase_guard), "run", || {
            format!("phase_guard must be positive, got {}", r.phase_guard)
        })?;
        check(positive(r.support_sigmas), "run", || {
            format!("support_sigmas must be positive, got {}", r.support_sigmas)
        })?;
        check(
            !(r.exclude_self && r.sourcing != Sourcing::MeanField),
            "run",
            || "exclude_self applies to mean-field sourcing only".into(),
        )?;

        let half = 0.5 * self.grid.box_length;
        let h = self.grid.box_length / self.grid.points as f64;
        for (label, p) in &self.packets {
            let section = format!("packets.{label}");
            check(p.width > h, &section, || {
                format!("width {} is not resolved by grid spacing {h}", p.width)
            })?;
            for (axis, c) in p.center.iter().enumerate() {
                let reach = self.run.support_sigmas * p.width;
                check(c - reach >= -half && c + reach <= half, &section, || {
                    format!(
                        "center[{axis}] = {c} ± {}σ leaves the box [{}, {}]",
                        self.run.support_sigmas, -half, half
                    )
                })?;
            }
        }

        if self.output.directory.is_none() {
            self.output.directory = Some(PathBuf::from("runs").join(&self.run.name));
        }
        Ok(self)
    }

    fn convert_si(&mut self) {
        let hbar = self.physics.hbar;
        let length = self.packets["1L"].width;
        let mass = self.physics.mass;
        let time = mass * length * length / hbar;
        self.grid.box_length /= length;
        for p in self.packets.values_mut() {
            p.center.iter_mut().for_each(|c| *c /= length);
            p.momentum.iter_mut().for_each(|k| *k *= length);
            p.width /= length;
        }
        self.physics.newton_g *= mass * time * time / length.powi(3);
        self.physics.softening = self.physics.softening.map(|a| a / length);
        self.physics.hbar = 1.0;
        self.physics.mass = 1.0;
        self.physics.units = Units::Internal;
        self.schedule.dt /= time;
        self.unit_scales = Some(UnitScales {
            length_m: length,
            mass_kg: mass,
            time_s: time,
        });
    }

    /// The resolved document, parseable back into an identical config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn dimension(&self) -> Dimension {
        if self.grid.dimension == 3 {
            Dimension::Three
        } else {
            Dimension::One
        }
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec::new(self.dimension(), self.grid.points, self.grid.box_length)
    }

    pub fn physical_params(&self) -> PhysicalParams {
        PhysicalParams {
            hbar: self.physics.hbar,
            mass: self.physics.mass,
            bosons: self.physics.bosons,
            newton_g: self.physics.newton_g,
            softening: self.physics.softening.unwrap_or(1.0),
        }
    }

    pub fn packet_specs(&self) -> Vec<PacketSpec> {
        Label::ALL
            .iter()
            .map(|l| {
                let p = &self.packets[&l.to_string()];
                let mut center = [0.0; 3];
                let mut momentum = [0.0; 3];
                center[..p.center.len()].copy_from_slice(&p.center);
                momentum[..p.momentum.len()].copy_from_slice(&p.momentum);
                PacketSpec {
                    label: *l,
                    center,
                    width: p.width,
                    momentum,
                }
            })
            .collect()
    }

    pub fn schedule(&self) -> Schedule {
        Schedule {
            dt: self.schedule.dt,
            n_steps: self.schedule.n_steps,
            record_stride: self.schedule.record_stride,
        }
    }

    pub fn sourcing(&self) -> SourcingMode {
        self.run.sourcing.into()
    }

    pub fn propagator_options(&self) -> PropagatorOptions {
        PropagatorOptions {
            phase_guard: self.run.phase_guard,
            exclude_self: self.run.exclude_self,
            three_d_kernel: match self.grid.kernel_3d {
                Kernel3d::Spectral => ThreeDKernel::Spectral,
                Kernel3d::CellAveraged => ThreeDKernel::CellAveraged,
            },
            mean_field_weights: None,
        }
    }

    pub fn analysis_options(&self) -> AnalysisOptions {
        AnalysisOptions {
            cross_block_threshold: self.run.cross_block_threshold,
            entanglement_stride: self.run.entanglement_stride,
            support_sigmas: self.run.support_sigmas,
            ..AnalysisOptions::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[packets.1L]
center = -21.0
width = 1.0
[packets.1R]
center = -7.0
width = 1.0
[packets.2L]
center = 7.0
width = 1.0
[packets.2R]
center = 21.0
width = 1.0
"#;

    #[test]
    fn minimal_document_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.physics.hbar, 1.0);
        assert_eq!(c.physics.mass, 1.0);
        assert_eq!(c.run.sourcing, Sourcing::MeanField);
        assert_eq!(c.physics.softening, Some(1.0));
        assert_eq!(c.packets["2R"].momentum, vec![0.0]);
        assert_eq!(c.output.directory, Some(PathBuf::from("runs/custom")));
    }

    #[test]
    fn missing_packet_is_named() {
        let text = MINIMAL.replace("[packets.2R]\ncenter = 21.0\nwidth = 1.0\n", "");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("[packets.2R]"), "{err}");
        assert!(!err.contains("1L"), "{err}");
    }

    #[test]
    fn unknown_key_reports_line_and_section() {
        let text = format!("{MINIMAL}\n[schedule]\ndt = 0.01\nsteps = 5\n");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(
            err.contains("[schedule]") && err.contains("steps") && err.contains("line"),
            "{err}"
        );
    }

    #[test]
    fn support_rule_is_enforced() {
        let text = MINIMAL.replace("center = 21.0", "center = 29.0");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("[packets.2R]"), "{err}");
    }

    #[test]
    fn print_config_round_trips() {
        for (name, text) in PRESETS {
            let c = parse_config(text).unwrap();
            let again = parse_config(&c.to_toml()).unwrap();
            assert_eq!(c, again, "{name}");
        }
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(parse_config(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let c = parse_with_overrides(
            MINIMAL,
            &[
                "physics.bosons=4".into(),
                "packets.1L.width=1.5".into(),
                "run.sourcing=none".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.physics.bosons, 4);
        assert_eq!(c.packets["1L"].width, 1.5);
        assert_eq!(c.run.sourcing, Sourcing::None);
        assert!(matches!(
            parse_with_overrides(MINIMAL, &["physics.bosons".into()]),
            Err(AppError::Usage(_))
        ));
        assert!(matches!(
            parse_with_overrides(MINIMAL, &["physics.colour=3".into()]),
            Err(AppError::Config(_))
        ));
    }

    #[test]
    fn si_input_is_converted() {
        // 1 µm packets of 1e-14 kg: τ = mℓ²/ħ
        let hbar = 1.054_571_817e-34;
        let text = format!(
            "[grid]\nbox = 64e-6\n[physics]\nunits = \"si\"\nhbar = {hbar:e}\nmass = 1e-14\nnewton_g = 6.674e-11\n\
             [schedule]\ndt = 1e-3\n{}",
            MINIMAL.replace("-21.0", "-21e-6").replace("-7.0", "-7e-6").replace("= 7.0", "= 7e-6")
                .replace("= 21.0", "= 21e-6").replace("width = 1.0", "width = 1e-6")
        );
        let c = parse_config(&text).unwrap();
        let s = c.unit_scales.unwrap();
        let tau = 1e-14 * 1e-12 / hbar;
        assert!((s.time_s - tau).abs() < 1e-12 * tau);
        assert!((c.grid.box_length - 64.0).abs() < 1e-9);
        assert!((c.packets["2R"].center[0] - 21.0).abs() < 1e-9);
        assert!((c.schedule.dt - 1e-3 / tau).abs() < 1e-12 * c.schedule.dt);
        let g = 6.674e-11 * 1e-14 * tau * tau / 1e-18;
        assert!((c.physics.newton_g - g).abs() < 1e-12 * g);
        assert_eq!((c.physics.hbar, c.physics.mass), (1.0, 1.0));
    }
}
