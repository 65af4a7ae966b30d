//! Scenario execution and the three run artifacts: `manifest.toml`,
//! `timeseries.csv` and `summary.json`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use semigrav_core::grid::{build_grid, Label};
use semigrav_core::poisson::KernelKind;
use semigrav_core::{
    evolve, BranchSet, ModeSet, Propagator, SourcingMode, SystemState, TimeSeriesRecord,
};

use crate::config::{ScenarioConfig, UnitScales};
use crate::error::AppError;

/// Entropy below this (bits) at every record counts as a product state.
pub const PRODUCT_ENTROPY_THRESHOLD: f64 = 1e-9;

/// Column names of `timeseries.csv`, in order.
pub fn csv_header() -> Vec<String> {
    let mut h = vec!["time".to_string()];
    for l in Label::ALL {
        for field in ["norm", "center_x", "center_y", "center_z", "width"] {
            h.push(format!("{field}_{l}"));
        }
    }
    h.extend(
        [
            "gram_drift",
            "cross_block_overlap_norm",
            "phi_min",
            "energy",
            "entropy",
            "negativity",
        ]
        .map(String::from),
    );
    h
}

fn csv_row(r: &TimeSeriesRecord) -> Vec<String> {
    let mut row = vec![r.time.to_string()];
    for p in &r.packets {
        row.push(p.norm.to_string());
        row.extend(p.mean_position.iter().map(f64::to_string));
        row.push(p.rms_width.to_string());
    }
    for v in [
        r.gram_drift,
        r.cross_block,
        r.phi_min,
        r.energy,
        r.entropy.unwrap_or(f64::NAN),
        r.log_negativity.unwrap_or(f64::NAN),
    ] {
        row.push(v.to_string());
    }
    row
}

#[derive(Debug, Clone, Serialize)]
struct Software {
    name: &'static str,
    version: &'static str,
}

#[derive(Debug, Clone, Serialize)]
struct Derived {
    grid_spacing: f64,
    kernel: String,
    mean_field_weight: f64,
    kinetic_phase_per_step: f64,
    product_entropy_threshold: f64,
}

#[derive(Debug, Clone, Serialize)]
struct Manifest<'a> {
    software: Software,
    derived: Derived,
    #[serde(skip_serializing_if = "Option::is_none")]
    unit_scales: Option<UnitScales>,
    config: &'a ScenarioConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Entropy below the product threshold at every evaluated record.
    Product,
    Entangled,
    /// Some record exceeded the cross-block threshold, so entropy was withheld.
    Uncertified,
    /// Entanglement was never evaluated.
    NotEvaluated,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub sourcing: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub records: usize,
    pub final_time: f64,
    pub verdict: Verdict,
    pub final_entropy: Option<f64>,
    pub final_log_negativity: Option<f64>,
    pub max_entropy: Option<f64>,
    pub uncertified_records: usize,
    pub max_gram_drift: f64,
    pub max_cross_block_overlap_norm: f64,
    pub min_phi: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub max_relative_energy_drift: f64,
    pub support_ok: bool,
    pub product_entropy_threshold: f64,
}

impl RunSummary {
    pub fn from_records(
        config: &ScenarioConfig,
        records: &[TimeSeriesRecord],
        error: Option<String>,
    ) -> Self {
        let evaluated: Vec<&TimeSeriesRecord> =
            records.iter().filter(|r| r.entropy.is_some()).collect();
        let uncertified = records.iter().filter(|r| !r.certified).count();
        let max_entropy = evaluated.iter().filter_map(|r| r.entropy).reduce(f64::max);
        let verdict = if uncertified > 0 {
            Verdict::Uncertified
        } else {
            match max_entropy {
                None => Verdict::NotEvaluated,
                Some(s) if s < PRODUCT_ENTROPY_THRESHOLD => Verdict::Product,
                Some(_) => Verdict::Entangled,
            }
        };
        let e0 = records.first().map_or(f64::NAN, |r| r.energy);
        let fold = |f: fn(&TimeSeriesRecord) -> f64, init: f64, op: fn(f64, f64) -> f64| {
            records.iter().map(f).fold(init, op)
        };
        RunSummary {
            scenario: config.run.name.clone(),
            sourcing: config.sourcing().as_str().to_string(),
            status: if error.is_none() {
                "completed"
            } else {
                "failed"
            }
            .into(),
            error,
            records: records.len(),
            final_time: records.last().map_or(0.0, |r| r.time),
            verdict,
            final_entropy: evaluated.last().and_then(|r| r.entropy),
            final_log_negativity: evaluated.last().and_then(|r| r.log_negativity),
            max_entropy,
            uncertified_records: uncertified,
            max_gram_drift: fold(|r| r.gram_drift, 0.0, f64::max),
            max_cross_block_overlap_norm: fold(|r| r.cross_block, 0.0, f64::max),
            min_phi: fold(|r| r.phi_min, f64::INFINITY, f64::min),
            initial_energy: e0,
            final_energy: records.last().map_or(f64::NAN, |r| r.energy),
            max_relative_energy_drift: records
                .iter()
                .map(|r| relative_drift(r.energy, e0))
                .fold(0.0, f64::max),
            support_ok: records.iter().all(|r| r.support_ok),
            product_entropy_threshold: PRODUCT_ENTROPY_THRESHOLD,
        }
    }
}

fn relative_drift(e: f64, e0: f64) -> f64 {
    if e0 == 0.0 {
        (e - e0).abs()
    } else {
        ((e - e0) / e0).abs()
    }
}

/// Propagator and initial state for a resolved config.
pub fn prepare(config: &ScenarioConfig) -> Result<(Propagator, SystemState), AppError> {
    let grid = Arc::new(build_grid(config.grid_spec()).map_err(AppError::from_setup)?);
    let modes = ModeSet::from_specs(&grid, &config.packet_specs(), config.run.support_sigmas)
        .map_err(AppError::from_setup)?;
    let state = match config.sourcing() {
        SourcingMode::BranchResolved => SystemState::Branches(BranchSet::from_modes(&modes)),
        _ => SystemState::Modes(modes),
    };
    let prop = Propagator::new(
        grid,
        config.physical_params(),
        config.schedule.dt,
        config.propagator_options(),
    )
    .map_err(|e| match e {
        semigrav_core::Error::StepSize { .. } => AppError::Numerical(e),
        other => AppError::from_setup(other),
    })?;
    Ok((prop, state))
}

/// Evolve the scenario in memory, passing each record to `on_record`.
pub fn simulate_with(
    config: &ScenarioConfig,
    on_record: impl FnMut(&TimeSeriesRecord),
) -> Result<Vec<TimeSeriesRecord>, AppError> {
    let (mut prop, mut state) = prepare(config)?;
    Ok(evolve(
        &mut prop,
        &mut state,
        &config.schedule(),
        config.sourcing(),
        &config.analysis_options(),
        on_record,
    )?)
}

pub fn simulate(config: &ScenarioConfig) -> Result<Vec<TimeSeriesRecord>, AppError> {
    simulate_with(config, |_| {})
}

fn manifest_text(config: &ScenarioConfig, prop: &Propagator) -> String {
    let kernel = match prop.kernel().map(|k| k.kind()) {
        None => "none".to_string(),
        Some(KernelKind::Softened { softening }) => format!("softened(a={softening})"),
        Some(KernelKind::CellAveraged) => "cell-averaged".to_string(),
        Some(KernelKind::Spectral { eta }) => format!("ewald-spectral(eta={eta})"),
    };
    let params = prop.params();
    let manifest = Manifest {
        software: Software {
            name: "semigrav",
            version: env!("CARGO_PKG_VERSION"),
        },
        derived: Derived {
            grid_spacing: prop.grid().spacing(),
            kernel,
            mean_field_weight: params.mean_field_weight(),
            kinetic_phase_per_step: params.hbar * prop.grid().max_wavenumber_squared() * prop.dt()
                / (2.0 * params.mass),
            product_entropy_threshold: PRODUCT_ENTROPY_THRESHOLD,
        },
        unit_scales: config.unit_scales,
        config,
    };
    toml::to_string(&manifest).expect("manifest serializes")
}

pub struct RunArtifacts {
    pub directory: PathBuf,
    pub summary: RunSummary,
}

/// Run the scenario and write its artifacts under `directory` (or the
/// configured output directory). A numerical failure still writes a summary
/// with status `failed` before the error is returned.
pub fn run(config: &ScenarioConfig, directory: Option<&Path>) -> Result<RunArtifacts, AppError> {
    let dir = directory
        .map(Path::to_path_buf)
        .or_else(|| config.output.directory.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(&config.run.name));
    let (mut prop, mut state) = prepare(config)?;
    fs::create_dir_all(&dir)
        .map_err(|e| AppError::Io(format!("cannot create {}: {e}", dir.display())))?;
    fs::write(dir.join("manifest.toml"), manifest_text(config, &prop))?;

    let mut writer = csv::Writer::from_path(dir.join("timeseries.csv"))
        .map_err(|e| AppError::Io(format!("cannot open timeseries.csv: {e}")))?;
    writer
        .write_record(csv_header())
        .map_err(|e| AppError::Io(e.to_string()))?;
    let mut write_error: Option<csv::Error> = None;
    let mut records = Vec::new();
    let result = evolve(
        &mut prop,
        &mut state,
        &config.schedule(),
        config.sourcing(),
        &config.analysis_options(),
        |r| {
            if write_error.is_none() {
                write_error = writer.write_record(csv_row(r)).err();
            }
            records.push(r.clone());
        },
    );
    writer.flush()?;
    if let Some(e) = write_error {
        return Err(AppError::Io(format!("writing timeseries.csv: {e}")));
    }
    let failure = result.as_ref().err().map(ToString::to_string);
    let summary = RunSummary::from_records(config, &records, failure);
    let mut file = fs::File::create(dir.join("summary.json"))?;
    serde_json::to_writer_pretty(&mut file, &summary).map_err(|e| AppError::Io(e.to_string()))?;
    writeln!(file)?;
    result?;
    Ok(RunArtifacts {
        directory: dir,
        summary,
    })
}
