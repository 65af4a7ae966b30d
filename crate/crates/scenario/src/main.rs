use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use semigrav_scenario::config::{parse_with_overrides, preset_names, preset_text, ScenarioConfig};
use semigrav_scenario::error::AppError;
use semigrav_scenario::run::run;
use semigrav_scenario::verify::{default_suites, verify, Fault};

/// Schrödinger–Newton packet evolution with Fock-space entanglement analysis.
///
/// Exit status: 0 success, 1 numerical or i/o failure, 2 configuration or
/// usage error, 3 verification failure.
#[derive(Debug, Parser)]
#[command(name = "semigrav", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve a scenario and write manifest.toml, timeseries.csv and summary.json.
    Run {
        #[command(flatten)]
        source: Source,
        /// Output directory (default: [output] directory, else runs/<name>).
        #[arg(long, value_name = "DIR")]
        output: Option<PathBuf>,
    },
    /// Run the oracle battery on a scenario's grid (both bundled 1D and 3D presets by default).
    Verify {
        #[command(flatten)]
        source: Source,
        /// Corrupt part of the solver to confirm the battery notices.
        #[arg(long, value_enum)]
        inject_fault: Option<Fault>,
    },
    /// Print the fully resolved scenario document.
    PrintConfig {
        #[command(flatten)]
        source: Source,
    },
}

#[derive(Debug, Args)]
struct Source {
    /// Scenario document.
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Bundled scenario: paper-1d, paper-3d, control-branch or free.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Set a key before validation, e.g. physics.bosons=4 (repeatable).
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Source {
    fn is_given(&self) -> bool {
        self.config.is_some() || self.preset.is_some()
    }

    fn load(&self, fallback: &str) -> Result<ScenarioConfig, AppError> {
        let text = match (&self.config, &self.preset) {
            (Some(path), _) => std::fs::read_to_string(path)
                .map_err(|e| AppError::Config(format!("cannot read {}: {e}", path.display())))?,
            (None, name) => {
                let name = name.as_deref().unwrap_or(fallback);
                preset_text(name)
                    .ok_or_else(|| {
                        AppError::Usage(format!(
                            "unknown preset `{name}`; available: {}",
                            preset_names().join(", ")
                        ))
                    })?
                    .to_string()
            }
        };
        parse_with_overrides(&text, &self.overrides)
    }
}

fn execute(cli: Cli, out: &mut impl Write) -> Result<(), AppError> {
    match cli.command {
        Command::Run { source, output } => {
            let config = source.load("paper-1d")?;
            log::info!("running scenario {}", config.run.name);
            let artifacts = run(&config, output.as_deref())?;
            let s = &artifacts.summary;
            writeln!(out, "wrote {}", artifacts.directory.display())?;
            writeln!(out, "records               {}", s.records)?;
            writeln!(
                out,
                "verdict               {}",
                serde_json::to_string(&s.verdict)
                    .unwrap_or_default()
                    .trim_matches('"')
            )?;
            if let Some(e) = s.max_entropy {
                writeln!(out, "max entropy (bits)    {e:.3e}")?;
            }
            if let Some(n) = s.final_log_negativity {
                writeln!(out, "final negativity      {n:.6}")?;
            }
            writeln!(out, "max Gram drift        {:.3e}", s.max_gram_drift)?;
            writeln!(
                out,
                "max cross-block norm  {:.3e}",
                s.max_cross_block_overlap_norm
            )?;
            writeln!(out, "min Φ                 {:.6e}", s.min_phi)?;
            writeln!(
                out,
                "max energy drift      {:.3e}",
                s.max_relative_energy_drift
            )?;
            if !s.support_ok {
                writeln!(out, "warning: a packet's 5σ support reached the box edge")?;
            }
            Ok(())
        }
        Command::Verify {
            source,
            inject_fault,
        } => {
            let configs = if source.is_given() {
                vec![source.load("paper-1d")?]
            } else {
                default_suites()
                    .into_iter()
                    .map(|name| {
                        Source {
                            preset: Some(name.into()),
                            config: None,
                            overrides: source.overrides.clone(),
                        }
                        .load(name)
                    })
                    .collect::<Result<_, _>>()?
            };
            let mut failures = 0;
            for config in &configs {
                let report = verify(config, inject_fault)?;
                write!(out, "{report}")?;
                failures += report.failures();
            }
            if failures > 0 {
                return Err(AppError::Verification(failures));
            }
            writeln!(out, "all items passed")?;
            Ok(())
        }
        Command::PrintConfig { source } => {
            let config = source.load("paper-1d")?;
            write!(out, "{}", config.to_toml())?;
            if let Some(s) = config.unit_scales {
                writeln!(
                    out,
                    "# converted from SI: length {} m, mass {} kg, time {} s",
                    s.length_m, s.mass_kg, s.time_s
                )?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli, &mut std::io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use std::fs;
    use std::path::Path;

    use semigrav_scenario::config::parse_config;
    use semigrav_scenario::run::csv_header;

    use super::*;

    fn call(args: &[&str]) -> (Result<(), AppError>, String) {
        let cli = Cli::try_parse_from(std::iter::once("semigrav").chain(args.iter().copied()))
            .expect("valid usage");
        let mut out = Vec::new();
        let result = execute(cli, &mut out);
        (result, String::from_utf8(out).expect("utf-8 output"))
    }

    fn code(r: &Result<(), AppError>) -> i32 {
        r.as_ref().map_or_else(AppError::exit_code, |_| 0)
    }

    fn path(p: &Path) -> &str {
        p.to_str().expect("utf-8 path")
    }

    #[test]
    fn free_run_writes_all_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let args = [
            "run",
            "--preset",
            "free",
            "--override",
            "schedule.n_steps=400",
            "--override",
            "schedule.record_stride=50",
            "--output",
            path(&out),
        ];
        let (r, stdout) = call(&args);
        assert_eq!(code(&r), 0, "{r:?}");
        assert!(stdout.contains("verdict               product"), "{stdout}");

        let mut reader = csv::Reader::from_path(out.join("timeseries.csv")).unwrap();
        let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
        assert_eq!(header, csv_header());
        let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
        assert_eq!(rows.len(), 9);
        let times: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
        assert!(times.windows(2).all(|w| w[1] > w[0]));
        let entropy = header.iter().position(|h| h == "entropy").unwrap();
        assert!(rows
            .iter()
            .all(|r| r[entropy].parse::<f64>().unwrap().abs() < 1e-9));

        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary["status"], "completed");
        assert_eq!(summary["verdict"], "product");
        assert_eq!(summary["records"], 9);

        let manifest: toml::Table = fs::read_to_string(out.join("manifest.toml"))
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(
            manifest["software"]["version"].as_str(),
            Some(env!("CARGO_PKG_VERSION"))
        );
        assert_eq!(
            manifest["config"]["physics"]["softening"].as_float(),
            Some(1.0)
        );
        assert_eq!(
            manifest["config"]["schedule"]["n_steps"].as_integer(),
            Some(400)
        );
        assert!(parse_config(&toml::to_string(&manifest["config"]).unwrap()).is_ok());
    }

    #[test]
    fn identical_configs_give_identical_csv() {
        let dir = tempfile::tempdir().unwrap();
        let mut texts = Vec::new();
        for name in ["a", "b"] {
            let out = dir.path().join(name);
            let (r, _) = call(&[
                "run",
                "--preset",
                "paper-1d",
                "--override",
                "schedule.n_steps=200",
                "--output",
                path(&out),
            ]);
            assert_eq!(code(&r), 0, "{r:?}");
            texts.push(fs::read(out.join("timeseries.csv")).unwrap());
        }
        assert_eq!(texts[0], texts[1]);
    }

    #[test]
    fn oversized_step_aborts_with_suggestion() {
        let dir = tempfile::tempdir().unwrap();
        let (r, _) = call(&[
            "run",
            "--preset",
            "paper-1d",
            "--override",
            "schedule.dt=0.05",
            "--output",
            path(dir.path()),
        ]);
        assert_eq!(code(&r), 1);
        assert!(r.unwrap_err().to_string().contains("try dt <="));
    }

    #[test]
    fn strong_gravity_trips_the_potential_guard() {
        let dir = tempfile::tempdir().unwrap();
        let (r, _) = call(&[
            "run",
            "--preset",
            "paper-1d",
            "--override",
            "physics.newton_g=40",
            "--output",
            path(dir.path()),
        ]);
        assert_eq!(code(&r), 1);
        assert!(r
            .unwrap_err()
            .to_string()
            .contains("potential phase advance"));
        let summary = fs::read_to_string(dir.path().join("summary.json")).unwrap();
        assert!(summary.contains("\"failed\""));
    }

    #[test]
    fn configuration_errors_exit_with_two() {
        let dir = tempfile::tempdir().unwrap();
        let doc =
            "[packets.1L]\ncenter = -6.0\nwidth = 1.0\n[packets.1R]\ncenter = -2.0\nwidth = 0.5\n\
                   [packets.2L]\ncenter = 2.0\nwidth = 0.5\n";
        let file = dir.path().join("s.toml");
        fs::write(&file, doc).unwrap();
        let (r, _) = call(&["print-config", "--config", path(&file)]);
        assert_eq!(code(&r), 2);
        assert!(r.unwrap_err().to_string().contains("[packets.2R]"));

        assert_eq!(code(&call(&["run", "--preset", "nonexistent"]).0), 2);
        assert_eq!(
            code(&call(&["run", "--preset", "free", "--override", "grid.points=1000"]).0),
            2
        );
        let unknown = Cli::try_parse_from(["semigrav", "frobnicate"]).unwrap_err();
        assert_eq!(unknown.exit_code(), 2);
        let both =
            Cli::try_parse_from(["semigrav", "run", "--preset", "free", "--config", "x.toml"])
                .unwrap_err();
        assert_eq!(both.exit_code(), 2);
    }

    #[test]
    fn print_config_echoes_resolved_defaults() {
        let (r, text) = call(&[
            "print-config",
            "--preset",
            "control-branch",
            "--override",
            "physics.bosons=2",
        ]);
        assert_eq!(code(&r), 0);
        let c = parse_config(&text).unwrap();
        assert_eq!(c.physics.bosons, 2);
        assert_eq!(c.physics.hbar, 1.0);
        assert!(text.contains("cross_block_threshold") && text.contains("softening"));
    }

    #[test]
    fn verify_flags_an_injected_kernel_fault() {
        let (r, out) = call(&[
            "verify",
            "--preset",
            "control-branch",
            "--inject-fault",
            "kernel",
        ]);
        assert_eq!(code(&r), 3);
        assert!(out.contains("FAIL gaussian-potential"), "{out}");
        assert!(out.contains("PASS free-spreading"), "{out}");
        let (r, out) = call(&["verify", "--preset", "control-branch"]);
        assert_eq!(code(&r), 0, "{out}");
        assert!(out.contains("all items passed"));
    }
}
