//! Long-term drift monitoring: after a calibration, the nulling settings are
//! frozen and the nulled/driven Rabi ratio is re-measured on a schedule while
//! the drive-line drift evolves.

use super::{measure_omega, NullingResult, ScanSetup};
use crate::error::{Error, Result};
use crate::field::{DriveChannel, DriveSettings};
use crate::scenario::ExperimentEnv;
use serde::Serialize;

/// Time series of the nulled/driven ratio R(t); t strictly increasing.
#[derive(Debug, Clone, Serialize)]
pub struct DriftRecord {
    pub samples: Vec<(f64, f64)>,
}

impl DriftRecord {
    pub fn max_ratio(&self) -> f64 {
        self.samples.iter().map(|s| s.1).fold(0.0, f64::max)
    }
}

/// Monitor R = Ω_nulled/Ω_driven for `duration_s`, sampling every
/// `sample_interval_s`, with the nulling settings from `nulling` never
/// updated; Ω_driven is taken as constant from the calibration.
pub fn monitor_drift(
    env: &mut ExperimentEnv,
    nulling: &NullingResult,
    duration_s: f64,
    sample_interval_s: f64,
) -> Result<DriftRecord> {
    if !(duration_s > 0.0 && sample_interval_s > 0.0 && sample_interval_s <= duration_s) {
        return Err(Error::config("monitor needs 0 < interval <= duration"));
    }
    if nulling.omega_driven_hz <= 0.0 {
        return Err(Error::config("nulling result has no driven-zone Rabi frequency"));
    }
    let exp = env.scenario.experiment.clone();
    let zone = env.scenario.map.zone_index(&exp.nulled_zone)?;
    let drives = DriveSettings {
        channels: vec![
            DriveChannel::new(exp.driven_electrode, 1.0, 0.0, true).unwrap(),
            DriveChannel::new(exp.nulling_electrode, nulling.amplitude, nulling.phase_rad, true)
                .unwrap(),
        ],
    };
    let setup = ScanSetup {
        zone,
        drive_frequency_hz: env.model.resonance(&env.scenario.qubit),
        prepared: env.scenario.qubit.lower,
        spam: env.scenario.spam.clone(),
    };
    let t_origin = env.clock.t_s;
    let mut samples = Vec::new();
    let mut expect = nulling.omega_nulled_hz.max(1.0);
    let n = (duration_s / sample_interval_s).floor() as usize;
    for k in 0..=n {
        let t = k as f64 * sample_interval_s;
        env.clock.t_s = t_origin + t;
        let (omega, _fit) = measure_omega(env, &drives, &setup, expect)?;
        if omega > 0.0 {
            expect = omega;
        }
        samples.push((t, omega / nulling.omega_driven_hz));
    }
    Ok(DriftRecord { samples })
}
