//! C ABI for the mwaddr toolkit: opaque scenario handles, status codes, and
//! flat structs for results. The matching header is maintained at
//! `include/mwaddr.h`.
//!
//! Conventions: every fallible function returns an `MwStatus` code and writes
//! its result through out-pointers; a thread-local message describing the
//! last error is available via [`mw_last_error_message`].

use mwaddr::atomic::Transition;
use mwaddr::budget::{budget_report, BudgetInputs, QubitSpec};
use mwaddr::calibration::{fit_flip_curve, null_crosstalk, OptimizerParams};
use mwaddr::scenario::{load_scenario, ExperimentEnv, Scenario};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Physics = 4,
    NonConvergence = 5,
    Io = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &mwaddr::Error) -> MwStatus {
    match err {
        mwaddr::Error::Config(_) => MwStatus::Config,
        mwaddr::Error::Physics(_) => MwStatus::Physics,
        mwaddr::Error::NonConvergence(_) => MwStatus::NonConvergence,
        mwaddr::Error::Io(_) => MwStatus::Io,
    }
}

/// Opaque scenario handle.
pub struct MwScenario {
    inner: Scenario,
}

/// Copy the last error message into `buf` (NUL-terminated, truncated to
/// `cap`); returns the full message length.
///
/// # Safety
/// `buf` must point to at least `cap` writable bytes, or be NULL (the call
/// then only reports the length).
#[no_mangle]
pub unsafe extern "C" fn mw_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            // always NUL-terminate
            *buf.add(n - 1) = 0;
        }
        bytes.len() - 1
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Load a scenario file. On success writes an owned handle to `out`; release
/// it with [`mw_scenario_free`].
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mw_scenario_load(path: *const c_char, out: *mut *mut MwScenario) -> MwStatus {
    if path.is_null() || out.is_null() {
        set_error("null pointer argument");
        return MwStatus::NullPointer;
    }
    let path = match CStr::from_ptr(path).to_str() {
        Ok(s) => s,
        Err(_) => {
            set_error("path is not valid UTF-8");
            return MwStatus::InvalidUtf8;
        }
    };
    match load_scenario(Path::new(path)) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(MwScenario { inner }));
            MwStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Release a scenario handle (NULL is a no-op).
///
/// # Safety
/// `scn` must have been produced by [`mw_scenario_load`] and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mw_scenario_free(scn: *mut MwScenario) {
    if !scn.is_null() {
        drop(Box::from_raw(scn));
    }
}

unsafe fn transition(lower_m: i32, upper_m: i32) -> Result<Transition, MwStatus> {
    Transition::from_quantum_numbers(lower_m, upper_m).map_err(|e| {
        set_error(&e.to_string());
        MwStatus::Config
    })
}

/// Transition frequency in Hz for the F=4,lower_m -> F=3,upper_m line.
///
/// # Safety
/// `scn` must be a live handle, `out_hz` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mw_transition_frequency(
    scn: *const MwScenario,
    lower_m: i32,
    upper_m: i32,
    b_gauss: f64,
    out_hz: *mut f64,
) -> MwStatus {
    if scn.is_null() || out_hz.is_null() {
        set_error("null pointer argument");
        return MwStatus::NullPointer;
    }
    let t = match transition(lower_m, upper_m) {
        Ok(t) => t,
        Err(s) => return s,
    };
    match mwaddr::atomic::transition_frequency(&(*scn).inner.constants, &t, b_gauss) {
        Ok(f) => {
            *out_hz = f;
            MwStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// df/dB in Hz/G.
///
/// # Safety
/// As for [`mw_transition_frequency`].
#[no_mangle]
pub unsafe extern "C" fn mw_field_sensitivity(
    scn: *const MwScenario,
    lower_m: i32,
    upper_m: i32,
    b_gauss: f64,
    out_hz_per_g: *mut f64,
) -> MwStatus {
    if scn.is_null() || out_hz_per_g.is_null() {
        set_error("null pointer argument");
        return MwStatus::NullPointer;
    }
    let t = match transition(lower_m, upper_m) {
        Ok(t) => t,
        Err(s) => return s,
    };
    match mwaddr::atomic::field_sensitivity(&(*scn).inner.constants, &t, b_gauss) {
        Ok(s) => {
            *out_hz_per_g = s;
            MwStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Clock-field root of df/dB in [b_min, b_max] gauss. `found` is 0 when the
/// sensitivity does not change sign in the range.
///
/// # Safety
/// As for [`mw_transition_frequency`].
#[no_mangle]
pub unsafe extern "C" fn mw_find_clock_field(
    scn: *const MwScenario,
    lower_m: i32,
    upper_m: i32,
    b_min: f64,
    b_max: f64,
    out_b_gauss: *mut f64,
    found: *mut i32,
) -> MwStatus {
    if scn.is_null() || out_b_gauss.is_null() || found.is_null() {
        set_error("null pointer argument");
        return MwStatus::NullPointer;
    }
    let t = match transition(lower_m, upper_m) {
        Ok(t) => t,
        Err(s) => return s,
    };
    match mwaddr::atomic::find_clock_field(&(*scn).inner.constants, &t, b_min, b_max) {
        Ok(Some(b)) => {
            *out_b_gauss = b;
            *found = 1;
            MwStatus::Ok
        }
        Ok(None) => {
            *out_b_gauss = 0.0;
            *found = 0;
            MwStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// The 16 manifold energies (Hz, canonical (F, m_F) order) at `b_gauss`.
///
/// # Safety
/// `out_energies` must point to 16 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mw_breit_rabi_energies(
    scn: *const MwScenario,
    b_gauss: f64,
    out_energies: *mut f64,
) -> MwStatus {
    if scn.is_null() || out_energies.is_null() {
        set_error("null pointer argument");
        return MwStatus::NullPointer;
    }
    match mwaddr::atomic::breit_rabi_energies(&(*scn).inner.constants, b_gauss) {
        Ok(levels) => {
            for (k, lvl) in levels.iter().enumerate() {
                *out_energies.add(k) = lvl.energy_hz;
            }
            MwStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Spin-flip probability for a nulled/driven ratio: exact sin²(πR/2) plus the
/// small-R approximation π²R²/4.
///
/// # Safety
/// Out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mw_spin_flip_error(
    ratio: f64,
    out_exact: *mut f64,
    out_small_r: *mut f64,
) -> MwStatus {
    if out_exact.is_null() || out_small_r.is_null() {
        set_error("null pointer argument");
        return MwStatus::NullPointer;
    }
    match mwaddr::budget::spin_flip_error(ratio) {
        Ok(e) => {
            *out_exact = e.exact;
            *out_small_r = e.small_r;
            MwStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Worst-case off-resonant transfer Ω²/(Ω²+Δ²).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mw_off_resonant_error(
    omega_hz: f64,
    delta_hz: f64,
    out: *mut f64,
) -> MwStatus {
    if out.is_null() {
        set_error("null pointer argument");
        return MwStatus::NullPointer;
    }
    match mwaddr::budget::off_resonant_error(omega_hz, delta_hz) {
        Ok(v) => {
            *out = v;
            MwStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Phase error π·shift/Ω accumulated during a π-pulse.
///
/// # Safety
/// `out_rad` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mw_phase_error(
    shift_hz: f64,
    omega_driven_hz: f64,
    out_rad: *mut f64,
) -> MwStatus {
    if out_rad.is_null() {
        set_error("null pointer argument");
        return MwStatus::NullPointer;
    }
    match mwaddr::budget::phase_error(shift_hz, omega_driven_hz) {
        Ok(v) => {
            *out_rad = v;
            MwStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Fidelity loss (δφ)² from phase jitter.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mw_fidelity_loss(jitter_rad: f64, out: *mut f64) -> MwStatus {
    if out.is_null() {
        set_error("null pointer argument");
        return MwStatus::NullPointer;
    }
    match mwaddr::budget::fidelity_loss(jitter_rad) {
        Ok(v) => {
            *out = v;
            MwStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Rabi fit over a scan: flat C view of a [`mwaddr::calibration::FitResult`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MwFitResult {
    pub omega_hz: f64,
    pub contrast: f64,
    /// Negative when no decay was fitted.
    pub decay_time_s: f64,
    pub offset: f64,
    pub omega_std_hz: f64,
    pub converged: i32,
}

/// Fit a Rabi flop dataset (durations in seconds, dark counts out of `shots`
/// per point). `prepared_dark` states whether the prepared state belongs to
/// the dark class.
///
/// # Safety
/// `durations_s` and `dark_counts` must point to `n` readable elements;
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mw_estimate_rabi(
    durations_s: *const f64,
    dark_counts: *const u32,
    n: usize,
    shots: u32,
    prepared_dark: i32,
    out: *mut MwFitResult,
) -> MwStatus {
    if durations_s.is_null() || dark_counts.is_null() || out.is_null() {
        set_error("null pointer argument");
        return MwStatus::NullPointer;
    }
    if shots == 0 {
        set_error("shots must be >= 1");
        return MwStatus::Config;
    }
    let ts = std::slice::from_raw_parts(durations_s, n);
    let cs = std::slice::from_raw_parts(dark_counts, n);
    let nshots = shots as f64;
    let points: Vec<(f64, f64, f64)> = ts
        .iter()
        .zip(cs)
        .map(|(&t, &c)| {
            let dark = c as f64 / nshots;
            let y = if prepared_dark != 0 { 1.0 - dark } else { dark };
            let p = y.clamp(0.5 / nshots, 1.0 - 0.5 / nshots);
            (t, y, (p * (1.0 - p) / nshots).sqrt())
        })
        .collect();
    let fit = fit_flip_curve(&points);
    *out = MwFitResult {
        omega_hz: fit.omega_hz,
        contrast: fit.contrast,
        decay_time_s: fit.decay_time_s.unwrap_or(-1.0),
        offset: fit.offset,
        omega_std_hz: fit.omega_std_hz,
        converged: fit.converged as i32,
    };
    MwStatus::Ok
}

/// Crosstalk-nulling outcome, flat C view of
/// [`mwaddr::calibration::NullingResult`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MwNullingResult {
    pub amplitude: f64,
    pub phase_rad: f64,
    pub omega_nulled_hz: f64,
    pub omega_driven_hz: f64,
    pub ratio: f64,
    pub iterations: usize,
    pub converged: i32,
}

/// Run the full crosstalk-nulling calibration on a scenario. `seed_override`
/// < 0 keeps the scenario's seed.
///
/// # Safety
/// `scn` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mw_null_crosstalk(
    scn: *const MwScenario,
    seed_override: i64,
    out: *mut MwNullingResult,
) -> MwStatus {
    if scn.is_null() || out.is_null() {
        set_error("null pointer argument");
        return MwStatus::NullPointer;
    }
    let scenario = (*scn).inner.clone();
    let env = if seed_override >= 0 {
        ExperimentEnv::with_seed(scenario, seed_override as u64)
    } else {
        ExperimentEnv::new(scenario)
    };
    let mut env = match env {
        Ok(e) => e,
        Err(e) => {
            set_error(&e.to_string());
            return status_of(&e);
        }
    };
    match null_crosstalk(&mut env, OptimizerParams::default()) {
        Ok(r) => {
            *out = MwNullingResult {
                amplitude: r.amplitude,
                phase_rad: r.phase_rad,
                omega_nulled_hz: r.omega_nulled_hz,
                omega_driven_hz: r.omega_driven_hz,
                ratio: r.ratio,
                iterations: r.iterations,
                converged: r.converged as i32,
            };
            MwStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Error-budget totals for a target qubit, using the scenario's calibrated
/// field data. `target`: 0 = scenario qubit/field, 1 = 146 G σ⁺ clock qubit,
/// 2 = 288 G π clock qubit.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MwErrorBudget {
    pub ratio: f64,
    pub spin_flip_exact: f64,
    pub spin_flip_small_r: f64,
    pub off_resonant_min: f64,
    pub off_resonant_max: f64,
    pub ac_zeeman_hz: f64,
    pub phase_error_rad: f64,
    pub phase_error_stability_rad: f64,
    pub fidelity_loss: f64,
    pub total_addressing_error: f64,
    pub b_gauss: f64,
}

/// # Safety
/// `scn` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mw_budget_report(
    scn: *const MwScenario,
    target: i32,
    ratio: f64,
    omega_driven_hz: f64,
    out: *mut MwErrorBudget,
) -> MwStatus {
    if scn.is_null() || out.is_null() {
        set_error("null pointer argument");
        return MwStatus::NullPointer;
    }
    let scenario = &(*scn).inner;
    let spec = match target {
        0 => Ok(QubitSpec { transition: scenario.qubit, b_gauss: scenario.b_gauss }),
        1 => Transition::from_quantum_numbers(0, 1).and_then(|t| {
            mwaddr::atomic::find_clock_field(&scenario.constants, &t, 50.0, 250.0)?
                .map(|b| QubitSpec { transition: t, b_gauss: b })
                .ok_or_else(|| mwaddr::Error::physics("no 146 G clock point"))
        }),
        2 => Transition::from_quantum_numbers(1, 1).and_then(|t| {
            mwaddr::atomic::find_clock_field(&scenario.constants, &t, 150.0, 400.0)?
                .map(|b| QubitSpec { transition: t, b_gauss: b })
                .ok_or_else(|| mwaddr::Error::physics("no 288 G clock point"))
        }),
        _ => Err(mwaddr::Error::config("target must be 0, 1 or 2")),
    };
    let spec = match spec {
        Ok(s) => s,
        Err(e) => {
            set_error(&e.to_string());
            return status_of(&e);
        }
    };
    match budget_report(scenario, BudgetInputs { ratio, omega_driven_hz }, spec) {
        Ok(b) => {
            *out = MwErrorBudget {
                ratio: b.ratio,
                spin_flip_exact: b.spin_flip.exact,
                spin_flip_small_r: b.spin_flip.small_r,
                off_resonant_min: b.off_resonant_min,
                off_resonant_max: b.off_resonant_max,
                ac_zeeman_hz: b.ac_zeeman_hz,
                phase_error_rad: b.phase_error_rad,
                phase_error_stability_rad: b.phase_error_stability_rad,
                fidelity_loss: b.fidelity_loss,
                total_addressing_error: b.total_addressing_error,
                b_gauss: b.qubit.b_gauss,
            };
            MwStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}
