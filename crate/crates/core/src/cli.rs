//! Command-line front end: named experiments over a scenario file with
//! deterministic seeding, CSV/JSON emission and a run manifest per
//! invocation.

use crate::atomic::{breit_rabi_energies, field_sensitivity, find_clock_field, Transition};
use crate::budget::{budget_report, BudgetInputs, QubitSpec};
use crate::calibration::{estimate_rabi, monitor_drift, null_crosstalk, null_polarization, NullingResult, OptimizerParams};
use crate::dynamics::{scan_pulse_duration, PulseContext};
use crate::error::{Error, Result};
use crate::field::ratio_table;
use crate::scenario::{load_scenario, scenario_hash, validate_scenario, ExperimentEnv, Scenario};
use clap::{Parser, Subcommand};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(
    name = "mwaddr",
    version,
    about = "Near-field microwave addressing simulator and calibration toolkit"
)]
pub struct Cli {
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, env = "MWADDR_OUT", default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Ground-manifold energies vs static field.
    Levels {
        #[arg(long, default_value_t = 0.0)]
        bmin: f64,
        #[arg(long, default_value_t = 400.0)]
        bmax: f64,
        #[arg(long, default_value_t = 2.0)]
        bstep: f64,
    },
    /// Transition frequencies and sensitivities vs field, with clock roots.
    ClockScan {
        #[arg(long, default_value_t = 0.1)]
        bmin: f64,
        #[arg(long, default_value_t = 400.0)]
        bmax: f64,
        #[arg(long, default_value_t = 2.0)]
        bstep: f64,
    },
    /// Simulated pulse-duration scan plus Rabi fit.
    RabiScan {
        /// Zone to measure in (defaults to the experiment's driven zone).
        #[arg(long)]
        zone: Option<String>,
        /// Scan span in seconds (default covers ~2.5 flops of the driven
        /// Rabi frequency).
        #[arg(long)]
        tmax: Option<f64>,
        #[arg(long, default_value_t = 24)]
        points: u32,
        /// Shots per point (defaults to the scenario's value, or 200 for
        /// exact-mode scenarios).
        #[arg(long)]
        shots: Option<u32>,
    },
    /// Crosstalk nulling calibration.
    Null,
    /// σ⁺ polarization nulling.
    Polarization,
    /// Long-term drift monitor at frozen nulling settings.
    Drift {
        #[arg(long, default_value_t = 4000.0)]
        duration: f64,
        #[arg(long, default_value_t = 40.0)]
        interval: f64,
    },
    /// Error-budget report.
    Budget {
        /// Target qubit: "low" (scenario transition/field), "b146", "b288".
        #[arg(long, default_value = "low")]
        qubit: String,
        /// Nulled/driven ratio to budget (defaults to the scenario's
        /// reference value).
        #[arg(long)]
        ratio: Option<f64>,
    },
    /// Table-I-style single-electrode Rabi ratios.
    Ratios,
    /// Structural and physical validation of a scenario file.
    Validate,
}

#[derive(Serialize)]
struct RunManifest {
    command: Vec<String>,
    scenario_hash: String,
    seed: u64,
    tool_version: String,
    outputs: Vec<String>,
    wall_clock_s: f64,
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load(cli: &Cli) -> Result<Scenario> {
    let path = cli
        .scenario
        .as_ref()
        .ok_or_else(|| Error::config("--scenario <path> is required for this command"))?;
    let mut scn = load_scenario(path)?;
    if let Some(seed) = cli.seed {
        scn.seed = seed;
        scn.drift.seed = seed;
    }
    Ok(scn)
}

fn scenario_text_hash(cli: &Cli) -> Result<String> {
    match &cli.scenario {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            scenario_hash(&text)
        }
        None => Ok("none".into()),
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let started = std::time::Instant::now();
    std::fs::create_dir_all(&cli.out)?;
    let outputs = match &cli.command {
        Command::Levels { bmin, bmax, bstep } => levels(cli, *bmin, *bmax, *bstep)?,
        Command::ClockScan { bmin, bmax, bstep } => clock_scan(cli, *bmin, *bmax, *bstep)?,
        Command::RabiScan { zone, tmax, points, shots } => {
            rabi_scan(cli, zone.as_deref(), *tmax, *points, *shots)?
        }
        Command::Null => null_cmd(cli)?,
        Command::Polarization => polarization_cmd(cli)?,
        Command::Drift { duration, interval } => drift_cmd(cli, *duration, *interval)?,
        Command::Budget { qubit, ratio } => budget_cmd(cli, qubit, *ratio)?,
        Command::Ratios => ratios_cmd(cli)?,
        Command::Validate => {
            let path = cli
                .scenario
                .as_ref()
                .ok_or_else(|| Error::config("--scenario <path> is required"))?;
            let findings = validate_scenario(path)?;
            if findings.is_empty() {
                println!("scenario valid: {}", path.display());
            }
            for f in findings {
                println!("{f}");
            }
            Vec::new()
        }
    };
    let scn = load(cli).ok();
    let manifest = RunManifest {
        command: std::env::args().collect(),
        scenario_hash: scenario_text_hash(cli)?,
        seed: cli.seed.or(scn.map(|s| s.seed)).unwrap_or(0),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        wall_clock_s: started.elapsed().as_secs_f64(),
    };
    write_json(&cli.out.join("manifest.json"), &manifest)?;
    Ok(())
}

fn write_lines(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{header}")?;
    for row in rows {
        writeln!(f, "{row}")?;
    }
    Ok(())
}

fn write_kv(path: &Path, pairs: &[(String, String)]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for (k, v) in pairs {
        writeln!(f, "{k}: {v}")?;
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::config(format!("serialize {}: {e}", path.display())))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn field_grid(bmin: f64, bmax: f64, bstep: f64) -> Result<Vec<f64>> {
    if !(bmin >= 0.0 && bmax > bmin && bstep > 0.0) {
        return Err(Error::config("need 0 <= bmin < bmax and bstep > 0"));
    }
    let n = ((bmax - bmin) / bstep).floor() as usize;
    Ok((0..=n).map(|k| bmin + k as f64 * bstep).collect())
}

fn levels(cli: &Cli, bmin: f64, bmax: f64, bstep: f64) -> Result<Vec<PathBuf>> {
    let scn = load(cli)?;
    let mut rows = Vec::new();
    for b in field_grid(bmin, bmax, bstep)? {
        for lvl in breit_rabi_energies(&scn.constants, b)? {
            rows.push(format!("{b},{},{},{}", lvl.label.f, lvl.label.m, lvl.energy_hz));
        }
    }
    let path = cli.out.join("levels.csv");
    write_lines(&path, "b_gauss,f,m_f,energy_hz", &rows)?;
    Ok(vec![path])
}

fn all_transitions() -> Vec<Transition> {
    let mut out = Vec::new();
    for lm in -4..=4i32 {
        for dm in -1..=1i32 {
            let um = lm + dm;
            if um.abs() <= 3 {
                out.push(Transition::from_quantum_numbers(lm, um).unwrap());
            }
        }
    }
    out
}

fn clock_scan(cli: &Cli, bmin: f64, bmax: f64, bstep: f64) -> Result<Vec<PathBuf>> {
    let scn = load(cli)?;
    let transitions = all_transitions();
    let mut rows = Vec::new();
    for b in field_grid(bmin, bmax, bstep)? {
        for t in &transitions {
            let f = crate::atomic::transition_frequency(&scn.constants, t, b)?;
            let s = field_sensitivity(&scn.constants, t, b)?;
            rows.push(format!(
                "{},{},{},{},{b},{f},{s}",
                t.lower.f, t.lower.m, t.upper.f, t.upper.m
            ));
        }
    }
    let scan_path = cli.out.join("clock_scan.csv");
    write_lines(
        &scan_path,
        "lower_f,lower_m,upper_f,upper_m,b_gauss,freq_hz,dfdb_hz_per_g",
        &rows,
    )?;
    let mut root_rows = Vec::new();
    for t in &transitions {
        if let Some(b) = find_clock_field(&scn.constants, t, bmin.max(0.1), bmax)? {
            root_rows.push(format!(
                "{},{},{},{},{},{b}",
                t.lower.f, t.lower.m, t.upper.f, t.upper.m, t.polarization
            ));
        }
    }
    let roots_path = cli.out.join("clock_roots.csv");
    write_lines(&roots_path, "lower_f,lower_m,upper_f,upper_m,polarization,b_root_gauss", &root_rows)?;
    Ok(vec![scan_path, roots_path])
}

fn rabi_scan(
    cli: &Cli,
    zone: Option<&str>,
    tmax: Option<f64>,
    points: u32,
    shots: Option<u32>,
) -> Result<Vec<PathBuf>> {
    let scn = load(cli)?;
    let mut env = ExperimentEnv::new(scn)?;
    let zone_name = zone.unwrap_or(&env.scenario.experiment.driven_zone).to_string();
    let zone_idx = env.scenario.map.zone_index(&zone_name)?;
    let shots = match shots.unwrap_or(env.scenario.experiment.shots_per_point) {
        0 => 200,
        s => s,
    };
    if points < 8 {
        return Err(Error::config("rabi-scan needs at least 8 points"));
    }
    let tmax = tmax.unwrap_or(2.5 / 15.29e3);
    if !(tmax > 0.0) {
        return Err(Error::config("tmax must be positive"));
    }
    let durations: Vec<f64> = (1..=points).map(|k| tmax * k as f64 / points as f64).collect();
    let ExperimentEnv { scenario, model, drift, clock } = &mut env;
    let ctx = PulseContext {
        map: &scenario.map,
        model,
        spam: &scenario.spam,
        drives: &scenario.drives,
        zone: zone_idx,
        drive_frequency_hz: model.resonance(&scenario.qubit),
        prepared: scenario.qubit.lower,
        reference_lower: scenario.qubit.lower,
        seed: scenario.seed,
    };
    let scan = scan_pulse_duration(&ctx, drift, clock, &durations, shots)?;
    let fit = estimate_rabi(&scan);
    let scan_path = cli.out.join("rabi_scan.csv");
    let rows: Vec<String> = scan
        .durations_s
        .iter()
        .zip(&scan.dark_counts)
        .map(|(t, c)| format!("{t},{c},{}", scan.shots_per_point))
        .collect();
    write_lines(&scan_path, "duration_s,dark_count,shots", &rows)?;
    let fit_path = cli.out.join("rabi_fit.json");
    write_json(&fit_path, &fit)?;
    Ok(vec![scan_path, fit_path])
}

fn nulling_outputs(cli: &Cli, prefix: &str, result: &NullingResult) -> Result<Vec<PathBuf>> {
    let kv_path = cli.out.join(format!("{prefix}.txt"));
    write_kv(
        &kv_path,
        &[
            ("amplitude".into(), format!("{}", result.amplitude)),
            ("phase_rad".into(), format!("{}", result.phase_rad)),
            ("omega_nulled_hz".into(), format!("{}", result.omega_nulled_hz)),
            ("omega_driven_hz".into(), format!("{}", result.omega_driven_hz)),
            ("ratio".into(), format!("{}", result.ratio)),
            ("iterations".into(), format!("{}", result.iterations)),
            ("converged".into(), format!("{}", result.converged)),
        ],
    )?;
    let json_path = cli.out.join(format!("{prefix}.json"));
    write_json(&json_path, result)?;
    let trace_path = cli.out.join(format!("{prefix}_trace.csv"));
    let rows: Vec<String> = result
        .history
        .iter()
        .map(|h| format!("{},{},{},{}", h.eval, h.phase_rad, h.amplitude, h.omega_hz))
        .collect();
    write_lines(&trace_path, "iter,phase_rad,amplitude,omega_hz", &rows)?;
    Ok(vec![kv_path, json_path, trace_path])
}

fn null_cmd(cli: &Cli) -> Result<Vec<PathBuf>> {
    let scn = load(cli)?;
    let mut env = ExperimentEnv::new(scn)?;
    let result = null_crosstalk(&mut env, OptimizerParams::default())?;
    if !result.converged {
        nulling_outputs(cli, "nulling", &result)?;
        return Err(Error::non_convergence(format!(
            "nulling did not improve (R = {:.3e})",
            result.ratio
        )));
    }
    nulling_outputs(cli, "nulling", &result)
}

fn polarization_cmd(cli: &Cli) -> Result<Vec<PathBuf>> {
    let scn = load(cli)?;
    let mut env = ExperimentEnv::new(scn)?;
    let result = null_polarization(&mut env, OptimizerParams::default())?;
    if !result.converged {
        return Err(Error::non_convergence(format!(
            "polarization nulling did not improve (R = {:.3e})",
            result.ratio
        )));
    }
    nulling_outputs(cli, "polarization", &result)
}

fn drift_cmd(cli: &Cli, duration: f64, interval: f64) -> Result<Vec<PathBuf>> {
    let scn = load(cli)?;
    let mut env = ExperimentEnv::new(scn)?;
    let nulling = null_crosstalk(&mut env, OptimizerParams::default())?;
    let record = monitor_drift(&mut env, &nulling, duration, interval)?;
    let mut outputs = nulling_outputs(cli, "nulling", &nulling)?;
    let drift_path = cli.out.join("drift.csv");
    let rows: Vec<String> =
        record.samples.iter().map(|(t, r)| format!("{t},{r}")).collect();
    write_lines(&drift_path, "t_s,R", &rows)?;
    outputs.push(drift_path);
    Ok(outputs)
}

fn budget_cmd(cli: &Cli, qubit: &str, ratio: Option<f64>) -> Result<Vec<PathBuf>> {
    let scn = load(cli)?;
    let target = match qubit {
        "low" => QubitSpec { transition: scn.qubit, b_gauss: scn.b_gauss },
        "b146" => {
            let t = Transition::from_quantum_numbers(0, 1)?;
            let b = find_clock_field(&scn.constants, &t, 50.0, 250.0)?
                .ok_or_else(|| Error::physics("no 146 G clock point found"))?;
            QubitSpec { transition: t, b_gauss: b }
        }
        "b288" => {
            let t = Transition::from_quantum_numbers(1, 1)?;
            let b = find_clock_field(&scn.constants, &t, 150.0, 400.0)?
                .ok_or_else(|| Error::physics("no 288 G clock point found"))?;
            QubitSpec { transition: t, b_gauss: b }
        }
        other => {
            return Err(Error::config(format!(
                "unknown qubit '{other}' (expected low, b146 or b288)"
            )))
        }
    };
    // driven Rabi frequency from the calibrated map (single driven electrode)
    let model = crate::dynamics::ManifoldModel::new(&scn.constants, scn.b_gauss)?;
    let zone = scn.map.zone_index(&scn.experiment.driven_zone)?;
    let pol = crate::field::polarization_decompose(
        scn.map.field(scn.experiment.driven_electrode, zone)?,
        &scn.map.quantization_axis,
    )?;
    let omega_driven = crate::field::rabi_frequency(
        &pol,
        &scn.qubit,
        crate::C64::new(model.element(&scn.qubit), 0.0),
    );
    let inputs = BudgetInputs {
        ratio: ratio.unwrap_or(scn.experiment.reference_ratio),
        omega_driven_hz: omega_driven,
    };
    let report = budget_report(&scn, inputs, target)?;
    let csv_path = cli.out.join("budget.csv");
    let rows: Vec<String> = report.rows().iter().map(|(k, v)| format!("{k},{v}")).collect();
    write_lines(&csv_path, "metric,value", &rows)?;
    let json_path = cli.out.join("budget.json");
    write_json(&json_path, &report)?;
    Ok(vec![csv_path, json_path])
}

fn ratios_cmd(cli: &Cli) -> Result<Vec<PathBuf>> {
    let scn = load(cli)?;
    let rows: Vec<String> = ratio_table(&scn.map, &scn.qubit)?
        .iter()
        .map(|r| format!("{},{}", r.electrode, r.r))
        .collect();
    let path = cli.out.join("ratios.csv");
    write_lines(&path, "electrode,r_i", &rows)?;
    Ok(vec![path])
}
