//! Calibration procedures: Rabi-frequency estimation from scans, crosstalk
//! and polarization nulling by derivative-free minimization of the observed
//! Rabi frequency, and long-term drift monitoring at fixed settings.

mod fit;
mod monitor;
mod nulling;
mod optimize;

pub use fit::{estimate_rabi, fit_flip_curve, FitResult};
pub use monitor::{monitor_drift, DriftRecord};
pub use nulling::{null_crosstalk, null_polarization, NullingResult, ObjectivePoint, OptimizerParams};
pub use optimize::NelderMead;

use crate::atomic::HyperfineState;
use crate::dynamics::{
    scan_pulse_duration, scan_pulse_duration_exact, PulseContext, SpamModel,
};
use crate::error::Result;
use crate::scenario::ExperimentEnv;

/// What one measurement scan drives and reads out.
#[derive(Debug, Clone)]
pub(crate) struct ScanSetup {
    pub zone: usize,
    pub drive_frequency_hz: f64,
    pub prepared: HyperfineState,
    pub spam: SpamModel,
}

/// Fractional part of the golden ratio times k: a low-discrepancy jitter
/// applied to the scan grid so that undersampled fast flops cannot alias
/// onto a slow cosine.
fn golden_jitter(k: usize) -> f64 {
    let x = (k as f64 + 1.0) * 0.618_033_988_749_894_9;
    x - x.floor() - 0.5
}

/// One scan at the given span, returning (t, flip fraction, sigma) triples.
fn scan_triples(
    env: &mut ExperimentEnv,
    drives: &crate::field::DriveSettings,
    setup: &ScanSetup,
    span_s: f64,
    points: usize,
) -> Result<Vec<(f64, f64, f64)>> {
    let durations: Vec<f64> = (0..points)
        .map(|k| span_s * (k as f64 + 1.0 + 0.4 * golden_jitter(k)) / points as f64)
        .collect();
    let shots = env.scenario.experiment.shots_per_point;
    let ExperimentEnv { scenario, model, drift, clock } = env;
    let ctx = PulseContext {
        map: &scenario.map,
        model,
        spam: &setup.spam,
        drives,
        zone: setup.zone,
        drive_frequency_hz: setup.drive_frequency_hz,
        prepared: setup.prepared,
        reference_lower: scenario.qubit.lower,
        seed: scenario.seed,
    };
    if shots == 0 {
        let pts = scan_pulse_duration_exact(&ctx, drift, clock, &durations)?;
        Ok(pts.into_iter().map(|(t, y)| (t, y, 1e-6)).collect())
    } else {
        let scan = scan_pulse_duration(&ctx, drift, clock, &durations, shots)?;
        Ok(scan.flip_points())
    }
}

/// Measure the Rabi frequency at the given drive settings with an adaptive
/// scan: the span covers ≈1.5 expected flops; it is stretched (×4, up to a
/// cap) when the data is flat — mirroring the ms-scale scans used for deeply
/// nulled fields — and shrunk (×5) when the data shows unresolved fast
/// oscillation. Returns the omega = 0 sentinel with `converged = false` when
/// nothing is resolvable at the span cap.
pub(crate) fn measure_omega(
    env: &mut ExperimentEnv,
    drives: &crate::field::DriveSettings,
    setup: &ScanSetup,
    omega_expect_hz: f64,
) -> Result<(f64, FitResult)> {
    const MAX_SPAN_S: f64 = 4.0;
    let points = env.scenario.experiment.scan_points.max(8) as usize;
    let mut expect = omega_expect_hz.max(1.5 / MAX_SPAN_S);
    let mut last = FitResult::unconverged();
    for _ in 0..10 {
        let span = (1.5 / expect).min(MAX_SPAN_S);
        let triples = scan_triples(env, drives, setup, span, points)?;
        let fit = fit_flip_curve(&triples);
        last = fit;
        if fit.converged {
            // re-scan when the fitted frequency disagrees badly with the
            // span (under- or over-resolved)
            if fit.omega_hz > 2.0 * expect {
                expect = fit.omega_hz;
                continue;
            }
            if fit.omega_hz < 0.4 * expect && span < MAX_SPAN_S {
                expect = fit.omega_hz.max(expect / 4.0);
                continue;
            }
            return Ok((fit.omega_hz, fit));
        }
        // unconverged: decide which way to adapt from the data spread
        let y_min = triples.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let y_max = triples.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let noise = triples.iter().map(|p| p.2).sum::<f64>() / triples.len() as f64;
        if (y_max - y_min) > (8.0 * noise).max(0.2) {
            // plenty of signal that a cosine could not explain: unresolved
            // fast flops, shrink the span
            expect *= 5.0;
            continue;
        }
        if span >= MAX_SPAN_S {
            break;
        }
        expect /= 4.0;
    }
    Ok((0.0, last))
}
