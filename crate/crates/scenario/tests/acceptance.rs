//! Acceptance suite: one PASS/FAIL line per criterion A1–A8.
//!
//! Runs the bundled presets end to end and compares against independent
//! oracles. Exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semigrav_core::entanglement::block_entropy;
use semigrav_core::fock::{pair_block_state, tensor_blocks};
use semigrav_core::grid::build_grid;
use semigrav_core::TimeSeriesRecord;
use semigrav_scenario::config::{parse_with_overrides, preset_text, ScenarioConfig};
use semigrav_scenario::oracles;
use semigrav_scenario::run::simulate;
use semigrav_scenario::verify;

struct Verdict {
    id: &'static str,
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(id: &'static str, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            id,
            pass,
            detail: detail.into(),
        }
    }
}

fn preset(name: &str, overrides: &[String]) -> ScenarioConfig {
    parse_with_overrides(preset_text(name).expect("bundled preset"), overrides)
        .expect("preset parses")
}

struct MeanFieldRun {
    bosons: u32,
    records: Vec<TimeSeriesRecord>,
    halved: Vec<TimeSeriesRecord>,
    wall: Duration,
}

/// paper-1d for N = 1, 2, 4 at the preset dt and at dt/2, all in parallel.
fn paper_runs() -> Vec<MeanFieldRun> {
    let base = preset("paper-1d", &[]);
    let s = base.schedule.clone();
    thread::scope(|scope| {
        let handles: Vec<_> = [1u32, 2, 4]
            .into_iter()
            .map(|n| {
                let full = preset("paper-1d", &[format!("physics.bosons={n}")]);
                let half = preset(
                    "paper-1d",
                    &[
                        format!("physics.bosons={n}"),
                        format!("schedule.dt={:e}", s.dt / 2.0),
                        format!("schedule.n_steps={}", 2 * s.n_steps),
                        format!("schedule.record_stride={}", 2 * s.record_stride),
                    ],
                );
                let a = scope.spawn(move || {
                    let t = Instant::now();
                    let r = simulate(&full).expect("paper-1d run");
                    (r, t.elapsed())
                });
                let b = scope.spawn(move || simulate(&half).expect("paper-1d run at dt/2"));
                (n, a, b)
            })
            .collect();
        handles
            .into_iter()
            .map(|(n, a, b)| {
                let (records, wall) = a.join().expect("run thread");
                MeanFieldRun {
                    bosons: n,
                    records,
                    halved: b.join().expect("run thread"),
                    wall,
                }
            })
            .collect()
    })
}

fn max_gram_drift(r: &[TimeSeriesRecord]) -> f64 {
    r.iter().map(|x| x.gram_drift).fold(0.0, f64::max)
}

fn max_energy_drift(r: &[TimeSeriesRecord]) -> f64 {
    let e0 = r[0].energy;
    r.iter()
        .map(|x| ((x.energy - e0) / e0).abs())
        .fold(0.0, f64::max)
}

fn a1(runs: &[MeanFieldRun]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for run in runs {
        let all_evaluated = run.records.iter().all(|r| r.entropy.is_some());
        let s_max = run
            .records
            .iter()
            .filter_map(|r| r.entropy)
            .fold(0.0, f64::max);
        let phi = run
            .records
            .iter()
            .map(|r| r.phi_min)
            .fold(f64::INFINITY, f64::min);
        pass &=
            all_evaluated && s_max < 1e-9 && phi < -1e-3 && run.wall <= Duration::from_secs(120);
        parts.push(format!(
            "N={}: max S {s_max:.1e} bits over {} records, min Φ {phi:.3}, {:.1}s",
            run.bosons,
            run.records.len(),
            run.wall.as_secs_f64()
        ));
    }
    Verdict::new("A1", pass, parts.join("; "))
}

fn a2(runs: &[MeanFieldRun]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for run in runs {
        let d1 = max_gram_drift(&run.records);
        let d2 = max_gram_drift(&run.halved);
        let ratio = d1 / d2;
        pass &= d1 < 1e-8 && ratio >= 3.0;
        parts.push(format!(
            "N={}: drift {d1:.2e} (dt), {d2:.2e} (dt/2), ratio {ratio:.2}",
            run.bosons
        ));
    }
    Verdict::new(
        "A2",
        pass,
        format!("{}; need < 1e-8 and ratio >= 3", parts.join("; ")),
    )
}

fn a3() -> Verdict {
    let config = preset("paper-3d", &["physics.newton_g=1.0".into()]);
    let grid = Arc::new(build_grid(config.grid_spec()).expect("grid"));
    let t = Instant::now();
    let item = verify::gaussian_potential(&config, &grid, None);
    let wall = t.elapsed();
    let pass = item.passed && item.error < 1e-6 && wall <= Duration::from_secs(30);
    Verdict::new(
        "A3",
        pass,
        format!(
            "64³ Gaussian: max relative error {:.2e} (< 1e-6), {}, {:.1}s",
            item.error,
            item.detail,
            wall.as_secs_f64()
        ),
    )
}

fn a4() -> Verdict {
    let config = preset("free", &[]);
    let records = simulate(&config).expect("free run");
    let sigma0 = config.packets["1L"].width;
    let (hbar, mass) = (config.physics.hbar, config.physics.mass);
    let mut worst = 0.0f64;
    let mut checked = 0;
    let mut t_last = 0.0;
    for r in records.iter().take_while(|r| r.support_ok) {
        let want = oracles::free_width(sigma0, hbar, mass, r.time);
        for p in &r.packets {
            worst = worst.max(((p.rms_width - want) / want).abs());
        }
        checked += 1;
        t_last = r.time;
    }
    let pass = worst < 1e-6 && checked >= 2;
    Verdict::new(
        "A4",
        pass,
        format!(
            "max relative width error {worst:.2e} (< 1e-6) over {checked} records up to t = {t_last}, width {:.3}σ₀",
            oracles::free_width(sigma0, hbar, mass, t_last) / sigma0
        ),
    )
}

fn a5() -> Verdict {
    let items = [
        verify::pair_block_item(),
        verify::nboson_item(),
        verify::branch_item(),
    ];
    let pass = items[0].error < 1e-12
        && items[1].error < 1e-12
        && items[2].error < 1e-10
        && items.iter().all(|i| i.passed);
    let detail = items
        .iter()
        .map(|i| format!("{} {:.1e}", i.name, i.error))
        .collect::<Vec<_>>()
        .join(", ");
    Verdict::new(
        "A5",
        pass,
        format!("{detail} (tolerances 1e-12, 1e-12, 1e-10)"),
    )
}

fn a6() -> Verdict {
    let config = preset("control-branch", &[]);
    let records = simulate(&config).expect("control-branch run");
    let specs = config.packet_specs();
    let centers: [[f64; 3]; 4] = std::array::from_fn(|i| specs[i].center);
    let (g, n, m, hbar) = (
        config.physics.newton_g,
        config.physics.bosons,
        config.physics.mass,
        config.physics.hbar,
    );
    let negativity = |r: &TimeSeriesRecord| r.log_negativity.unwrap_or(f64::NAN);
    let max_neg = records.iter().map(negativity).fold(0.0, f64::max);
    let t_end = records.last().expect("records").time;
    let n0 = negativity(&records[0]);
    // growth rate: least-squares slope through the origin over the first quarter of the run
    let (mut sim_tn, mut oracle_tn, mut tt) = (0.0, 0.0, 0.0);
    for r in records
        .iter()
        .skip(1)
        .filter(|r| r.time <= 0.25 * t_end + 1e-12)
    {
        let phases = oracles::point_mass_phases(&centers, g, n, m, hbar, r.time);
        let oracle = oracles::phase_oracle_entanglement(&phases, n)
            .expect("oracle entanglement")
            .log_negativity;
        sim_tn += r.time * (negativity(r) - n0);
        oracle_tn += r.time * oracle;
        tt += r.time * r.time;
    }
    let (sim_rate, oracle_rate) = (sim_tn / tt, oracle_tn / tt);
    let rel = (sim_rate - oracle_rate).abs() / oracle_rate.abs();
    let pass = max_neg > 0.01 && rel <= 0.2 && records.iter().all(|r| r.certified);
    Verdict::new(
        "A6",
        pass,
        format!(
            "max negativity {max_neg:.4} bits (> 0.01); early growth {sim_rate:.4} vs point-mass oracle {oracle_rate:.4} bits per unit time, deviation {:.1}% (<= 20%)",
            100.0 * rel
        ),
    )
}

fn a7(runs: &[MeanFieldRun]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for run in runs {
        let d1 = max_energy_drift(&run.records);
        let d2 = max_energy_drift(&run.halved);
        let ratio = d1 / d2;
        pass &= d1 < 1e-6 && ratio >= 3.0;
        parts.push(format!(
            "N={}: {d1:.2e} (dt), {d2:.2e} (dt/2), ratio {ratio:.2}",
            run.bosons
        ));
    }
    Verdict::new(
        "A7",
        pass,
        format!(
            "relative energy drift {}; need < 1e-6 and ratio >= 3",
            parts.join("; ")
        ),
    )
}

fn a8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa8);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(1..=4u32);
        let k1 = rng.gen_range(1..=4usize);
        let k2 = rng.gen_range(1..=4usize);
        let b1 = pair_block_state(
            &oracles::random_unit(&mut rng, k1),
            &oracles::random_unit(&mut rng, k1),
            n,
        )
        .expect("block 1");
        let b2 = pair_block_state(
            &oracles::random_unit(&mut rng, k2),
            &oracles::random_unit(&mut rng, k2),
            n,
        )
        .expect("block 2")
        .with_modes((k1 as u32..(k1 + k2) as u32).collect())
        .expect("relabel");
        let report =
            block_entropy(&tensor_blocks(&b1, &b2).expect("tensor product")).expect("entropy");
        worst = worst.max(report.schmidt.get(1).copied().unwrap_or(0.0));
    }
    Verdict::new(
        "A8",
        worst < 1e-12,
        format!("largest second Schmidt coefficient {worst:.1e} over 100 block states (< 1e-12)"),
    )
}

fn main() -> ExitCode {
    let started = Instant::now();
    let runs = paper_runs();
    let verdicts = vec![
        a1(&runs),
        a2(&runs),
        a3(),
        a4(),
        a5(),
        a6(),
        a7(&runs),
        a8(),
    ];
    let mut failed = 0;
    for v in &verdicts {
        println!(
            "{} {} {}",
            v.id,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        failed += usize::from(!v.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed ({:.0}s)",
        verdicts.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
