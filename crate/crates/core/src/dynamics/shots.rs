//! Projection-noise-limited shot simulation with a SPAM confusion model, and
//! pulse-duration scans (the simulated counterpart of a Rabi-flop dataset).

use super::{build_hamiltonian, ManifoldModel, Propagator, SpinState};
use crate::atomic::HyperfineState;
use crate::error::{Error, Result};
use crate::field::{
    apply_drift, polarization_decompose, total_field, DriftSampler, DriveSettings,
    ElectrodeFieldMap,
};
use crate::rng::coordinate_rng;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const TAG_PREP: u64 = 0x70_72_65_70;
const TAG_READOUT: u64 = 0x72_65_61_64;

/// State preparation and readout model: preparation leak probability (the
/// leaked population is spread uniformly over the other F=4 states), a 2x2
/// readout confusion matrix, the dark-class state set, and the infidelity of
/// the optional π-pulse state swap used when preparing the upper qubit state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpamModel {
    pub prep_error: f64,
    pub p_dark_given_dark: f64,
    pub p_dark_given_bright: f64,
    pub dark_states: Vec<HyperfineState>,
    #[serde(default)]
    pub swap_error: f64,
}

impl SpamModel {
    pub fn perfect() -> Self {
        Self {
            prep_error: 0.0,
            p_dark_given_dark: 1.0,
            p_dark_given_bright: 0.0,
            dark_states: vec![HyperfineState { f: 4, m: 0 }],
            swap_error: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("prep_error", self.prep_error),
            ("p_dark_given_dark", self.p_dark_given_dark),
            ("p_dark_given_bright", self.p_dark_given_bright),
            ("swap_error", self.swap_error),
        ] {
            if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
                return Err(Error::config(format!("spam.{name} = {p} must be in [0, 1]")));
            }
        }
        if self.dark_states.is_empty() {
            return Err(Error::config("spam.dark_states must not be empty"));
        }
        Ok(())
    }

    pub fn is_dark_class(&self, s: HyperfineState) -> bool {
        self.dark_states.contains(&s)
    }
}

/// Session wall clock: monotone shot counter and elapsed time, advanced by
/// every scan so slow drift evolves across a calibration session.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExperimentClock {
    pub t_s: f64,
    pub shot_counter: u64,
}

impl ExperimentClock {
    pub fn advance(&mut self, shots: u64, elapsed_s: f64) {
        self.shot_counter += shots;
        self.t_s += elapsed_s;
    }
}

/// Everything needed to simulate one pulse: immutable references shared
/// across workers.
#[derive(Clone, Copy)]
pub struct PulseContext<'a> {
    pub map: &'a ElectrodeFieldMap,
    pub model: &'a ManifoldModel,
    pub spam: &'a SpamModel,
    pub drives: &'a DriveSettings,
    pub zone: usize,
    pub drive_frequency_hz: f64,
    pub prepared: HyperfineState,
    pub reference_lower: HyperfineState,
    pub seed: u64,
}

/// Initial-state distribution after preparation: (state, probability).
fn preparation_mixture(ctx: &PulseContext) -> Vec<(HyperfineState, f64)> {
    let pumped = HyperfineState { f: 4, m: 0 };
    let spam = ctx.spam;
    let mut dist: Vec<(HyperfineState, f64)> = Vec::new();
    let p_ok = 1.0 - spam.prep_error;
    if ctx.prepared == pumped {
        dist.push((pumped, p_ok));
    } else {
        dist.push((ctx.prepared, p_ok * (1.0 - spam.swap_error)));
        dist.push((pumped, p_ok * spam.swap_error));
    }
    if spam.prep_error > 0.0 {
        let leak: Vec<HyperfineState> =
            HyperfineState::all().filter(|s| s.f == 4 && *s != pumped).collect();
        let w = spam.prep_error / leak.len() as f64;
        for s in leak {
            dist.push((s, w));
        }
    }
    dist.retain(|(_, w)| *w > 0.0);
    dist
}

fn sample_initial(ctx: &PulseContext, shot_index: u64) -> HyperfineState {
    let mut rng = coordinate_rng(ctx.seed, TAG_PREP, 0, shot_index);
    let spam = ctx.spam;
    let pumped = HyperfineState { f: 4, m: 0 };
    if rng.random::<f64>() < spam.prep_error {
        let leak: Vec<HyperfineState> =
            HyperfineState::all().filter(|s| s.f == 4 && *s != pumped).collect();
        let idx = rng.random_range(0..leak.len());
        return leak[idx];
    }
    if ctx.prepared != pumped && rng.random::<f64>() < spam.swap_error {
        return pumped;
    }
    ctx.prepared
}

fn dark_probability(ctx: &PulseContext, psi: &SpinState) -> f64 {
    HyperfineState::all()
        .filter(|s| ctx.spam.is_dark_class(*s))
        .map(|s| psi.population(s))
        .sum()
}

fn propagator_for(
    ctx: &PulseContext,
    drift: &DriftSampler,
    t_wall_s: f64,
    shot_index: Option<u64>,
) -> Result<Propagator> {
    let drives = match shot_index {
        Some(shot) => apply_drift(ctx.drives, drift, t_wall_s, shot),
        None => {
            // exact mode: honor the slow component, no per-shot jitter
            apply_drift(ctx.drives, drift, t_wall_s, u64::MAX)
        }
    };
    let field = total_field(ctx.map, &drives, ctx.zone)?;
    let pol = polarization_decompose(&field, &ctx.map.quantization_axis)?;
    let h = build_hamiltonian(ctx.model, &pol, ctx.drive_frequency_hz, ctx.reference_lower)?;
    Ok(Propagator::new(&h))
}

/// Exact probability that a shot reports "dark" after a pulse of `duration_s`
/// at wall time `t_wall_s`. The preparation mixture is folded in exactly; no
/// per-shot jitter is sampled (exact mode).
pub fn shot_probability(
    ctx: &PulseContext,
    drift: &DriftSampler,
    duration_s: f64,
    t_wall_s: f64,
) -> Result<f64> {
    let prop = propagator_for(ctx, drift, t_wall_s, None)?;
    let mut p_dark = 0.0;
    for (state, w) in preparation_mixture(ctx) {
        let psi = prop.evolve(&SpinState::basis(state), duration_s);
        p_dark += w * dark_probability(ctx, &psi);
    }
    Ok(ctx.spam.p_dark_given_dark * p_dark + ctx.spam.p_dark_given_bright * (1.0 - p_dark))
}

/// One projective shot: drift-perturbed drives, exact propagation, confusion
/// matrix, Bernoulli draw. Deterministic in (seed, shot_index, wall time
/// grid); `true` means the shot reported dark.
pub fn simulate_shot(
    ctx: &PulseContext,
    drift: &DriftSampler,
    duration_s: f64,
    t_wall_s: f64,
    shot_index: u64,
) -> Result<bool> {
    let prop = propagator_for(ctx, drift, t_wall_s, Some(shot_index))?;
    let initial = sample_initial(ctx, shot_index);
    let psi = prop.evolve(&SpinState::basis(initial), duration_s);
    let p_dark = dark_probability(ctx, &psi);
    let p_report =
        ctx.spam.p_dark_given_dark * p_dark + ctx.spam.p_dark_given_bright * (1.0 - p_dark);
    let u: f64 = coordinate_rng(ctx.seed, TAG_READOUT, 0, shot_index).random();
    Ok(u < p_report)
}

/// A simulated pulse-duration scan: dark-outcome counts per duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RabiScan {
    pub durations_s: Vec<f64>,
    pub dark_counts: Vec<u32>,
    pub shots_per_point: u32,
    /// Whether the prepared state belongs to the dark class (determines the
    /// orientation of the flip fraction).
    pub prepared_dark: bool,
    pub drive_frequency_hz: f64,
    pub b_gauss: f64,
}

impl RabiScan {
    pub fn validate(&self) -> Result<()> {
        if self.durations_s.is_empty() {
            return Err(Error::config("scan has no durations"));
        }
        if self.durations_s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("scan durations must be strictly ascending"));
        }
        if self.dark_counts.len() != self.durations_s.len() {
            return Err(Error::config("counts and durations must have equal length"));
        }
        if self.dark_counts.iter().any(|&c| c > self.shots_per_point) {
            return Err(Error::config("dark count exceeds shots per point"));
        }
        Ok(())
    }

    /// (t, spin-flip fraction, binomial sigma) triples for fitting.
    pub fn flip_points(&self) -> Vec<(f64, f64, f64)> {
        let n = self.shots_per_point as f64;
        self.durations_s
            .iter()
            .zip(&self.dark_counts)
            .map(|(&t, &c)| {
                let dark = c as f64 / n;
                let y = if self.prepared_dark { 1.0 - dark } else { dark };
                let p = y.clamp(0.5 / n, 1.0 - 0.5 / n);
                (t, y, (p * (1.0 - p) / n).sqrt())
            })
            .collect()
    }
}

/// Run a pulse-duration scan with `shots_per_point` projective shots per
/// duration, fresh drift per shot. Shot outcomes are integers, so gathering
/// is order-independent: reruns are bit-identical for any worker count.
pub fn scan_pulse_duration(
    ctx: &PulseContext,
    drift: &DriftSampler,
    clock: &mut ExperimentClock,
    durations_s: &[f64],
    shots_per_point: u32,
) -> Result<RabiScan> {
    if durations_s.is_empty() {
        return Err(Error::config("empty duration list"));
    }
    if durations_s.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("durations must be strictly ascending"));
    }
    if shots_per_point == 0 {
        return Err(Error::config("shots_per_point must be >= 1 (use the exact scan otherwise)"));
    }
    let n_points = durations_s.len();
    let total = n_points as u64 * shots_per_point as u64;
    let period = drift.process.shot_period_s;
    let t0 = clock.t_s;
    let base = clock.shot_counter;
    // each shot occupies its pulse duration plus the fixed prep/readout slot
    let point_start: Vec<f64> = durations_s
        .iter()
        .scan(0.0, |acc, &d| {
            let start = *acc;
            *acc += shots_per_point as f64 * (d + period);
            Some(start)
        })
        .collect();
    let total_elapsed: f64 =
        durations_s.iter().map(|&d| shots_per_point as f64 * (d + period)).sum();
    let channels: Vec<u8> =
        ctx.drives.channels.iter().filter(|c| c.enabled).map(|c| c.electrode).collect();
    drift.ensure_time(&channels, t0 + total_elapsed);

    let outcomes: Result<Vec<bool>> = (0..total)
        .into_par_iter()
        .map(|k| {
            let point = (k / shots_per_point as u64) as usize;
            let j = (k % shots_per_point as u64) as f64;
            let t_wall = t0 + point_start[point] + j * (durations_s[point] + period);
            simulate_shot(ctx, drift, durations_s[point], t_wall, base + k)
        })
        .collect();
    let outcomes = outcomes?;

    let mut dark_counts = vec![0u32; n_points];
    for (k, &dark) in outcomes.iter().enumerate() {
        if dark {
            dark_counts[k / shots_per_point as usize] += 1;
        }
    }
    clock.advance(total, total_elapsed);
    Ok(RabiScan {
        durations_s: durations_s.to_vec(),
        dark_counts,
        shots_per_point,
        prepared_dark: ctx.spam.is_dark_class(ctx.prepared),
        drive_frequency_hz: ctx.drive_frequency_hz,
        b_gauss: ctx.model.b_gauss,
    })
}

/// Exact-probability scan (the shots → ∞ limit): (t, flip fraction) pairs.
/// Slow drift is evaluated at the scan start; per-shot jitter does not apply.
pub fn scan_pulse_duration_exact(
    ctx: &PulseContext,
    drift: &DriftSampler,
    clock: &mut ExperimentClock,
    durations_s: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if durations_s.is_empty() {
        return Err(Error::config("empty duration list"));
    }
    let prepared_dark = ctx.spam.is_dark_class(ctx.prepared);
    let t0 = clock.t_s;
    let prop = propagator_for(ctx, drift, t0, None)?;
    let mixture = preparation_mixture(ctx);
    let mut out = Vec::with_capacity(durations_s.len());
    for &t in durations_s {
        let mut p_dark = 0.0;
        for (state, w) in &mixture {
            let psi = prop.evolve(&SpinState::basis(*state), t);
            p_dark += w * dark_probability(ctx, &psi);
        }
        let p_report =
            ctx.spam.p_dark_given_dark * p_dark + ctx.spam.p_dark_given_bright * (1.0 - p_dark);
        let y = if prepared_dark { 1.0 - p_report } else { p_report };
        out.push((t, y));
    }
    let elapsed: f64 =
        durations_s.iter().map(|&d| d + drift.process.shot_period_s).sum();
    clock.advance(durations_s.len() as u64, elapsed);
    Ok(out)
}
