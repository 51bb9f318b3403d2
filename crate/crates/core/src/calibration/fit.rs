//! Rabi-frequency extraction from noisy flop data: weighted nonlinear least
//! squares of P(t) = offset + (contrast/2)(1 − cos(2πΩt)·e^{−t/τ}) against
//! the spin-flip fraction, seeded by a discrete spectral peak.

use super::optimize::NelderMead;
use crate::dynamics::RabiScan;
use serde::Serialize;

/// Result of a Rabi-flop fit. `omega_hz = 0` with `converged = false` is the
/// sentinel for flat or unfittable data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub omega_hz: f64,
    pub contrast: f64,
    pub decay_time_s: Option<f64>,
    pub offset: f64,
    pub omega_std_hz: f64,
    pub converged: bool,
}

impl FitResult {
    pub fn unconverged() -> Self {
        FitResult {
            omega_hz: 0.0,
            contrast: 0.0,
            decay_time_s: None,
            offset: 0.0,
            omega_std_hz: 0.0,
            converged: false,
        }
    }
}

/// Fit a simulated scan (binomial weights from the shot counts).
pub fn estimate_rabi(scan: &RabiScan) -> FitResult {
    if scan.validate().is_err() {
        return FitResult::unconverged();
    }
    fit_flip_curve(&scan.flip_points())
}

fn model(t: f64, omega: f64, offset: f64, contrast: f64, inv_tau: f64) -> f64 {
    offset + 0.5 * contrast * (1.0 - (std::f64::consts::TAU * omega * t).cos() * (-t * inv_tau).exp())
}

/// Discrete power spectrum of the mean-subtracted data on an oversampled
/// frequency grid; returns (peak frequency, peak power / median power).
fn spectral_peak(points: &[(f64, f64, f64)]) -> (f64, f64) {
    let n = points.len();
    let t_max = points[n - 1].0;
    let min_dt = points
        .windows(2)
        .map(|w| w[1].0 - w[0].0)
        .fold(f64::INFINITY, f64::min)
        .max(t_max.max(1e-12) * 1e-6);
    let mean = points.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let df = 0.25 / t_max.max(1e-12);
    let f_max = 0.5 / min_dt;
    let n_freq = ((f_max / df) as usize).clamp(8, 4096);
    let mut best = (df, 0.0f64);
    let mut powers = Vec::with_capacity(n_freq);
    for j in 1..=n_freq {
        let f = j as f64 * df;
        let (mut re, mut im) = (0.0, 0.0);
        for &(t, y, _) in points {
            let a = std::f64::consts::TAU * f * t;
            re += (y - mean) * a.cos();
            im += (y - mean) * a.sin();
        }
        let p = re * re + im * im;
        powers.push(p);
        if p > best.1 {
            best = (f, p);
        }
    }
    powers.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let median = powers[powers.len() / 2].max(1e-300);
    (best.0, best.1 / median)
}

/// Core fitter over (t, flip fraction, sigma) triples.
pub fn fit_flip_curve(points: &[(f64, f64, f64)]) -> FitResult {
    if points.len() < 8 {
        return FitResult::unconverged();
    }
    let n = points.len();
    let t_span = points[n - 1].0;
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let y_min = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let y_max = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sigma_mean = points.iter().map(|p| p.2).sum::<f64>() / n as f64;

    // flat-data gates: no amplitude beyond noise, or no distinct spectral peak
    if (y_max - y_min) < 4.0 * sigma_mean {
        return FitResult::unconverged();
    }
    let (f_peak, peak_ratio) = spectral_peak(points);
    if peak_ratio < 6.0 {
        return FitResult::unconverged();
    }

    let chi2 = |omega: f64, offset: f64, contrast: f64, inv_tau: f64| -> f64 {
        let mut acc = 0.0;
        for &(t, y, s) in points {
            let r = (y - model(t, omega, offset, contrast, inv_tau)) / s;
            acc += r * r;
        }
        acc
    };
    let penalty = |omega: f64, offset: f64, contrast: f64| -> f64 {
        let mut p = 0.0;
        if omega < 0.0 {
            p += 1e6 * (1.0 + omega * omega);
        }
        if !(-0.1..=1.1).contains(&offset) {
            p += 1e6;
        }
        if !(0.0..=1.5).contains(&contrast) {
            p += 1e6;
        }
        p
    };

    let offset0 = y_min.clamp(0.0, 1.0);
    let contrast0 = (y_max - y_min).clamp(0.02, 1.0);
    let omega0 = f_peak;

    // stage 1: no decay
    let nm = NelderMead { max_iter: 600, x_tol: 1e-9, f_tol: 1e-12 };
    let res = nm.minimize(
        |x| chi2(x[0], x[1], x[2], 0.0) + penalty(x[0], x[1], x[2]),
        &[omega0, offset0, contrast0],
        &[0.05 * omega0, 0.05, 0.1],
    );
    let (mut omega, mut offset, mut contrast) = (res.x[0], res.x[1], res.x[2]);
    let mut inv_tau = 0.0;
    let mut fitted_tau = false;

    // stage 2: include the decay when the data spans at least one flop
    if t_span * omega > 1.0 {
        let res2 = nm.minimize(
            |x| chi2(x[0], x[1], x[2], x[3].max(0.0)) + penalty(x[0], x[1], x[2]),
            &[omega, offset, contrast, 0.2 / t_span],
            &[0.02 * omega, 0.03, 0.05, 0.3 / t_span],
        );
        if res2.fx < res.fx {
            omega = res2.x[0];
            offset = res2.x[1];
            contrast = res2.x[2];
            inv_tau = res2.x[3].max(0.0);
            fitted_tau = true;
        }
    }

    // curvature-based uncertainty on Ω: Var ≈ 2/(∂²χ²/∂Ω²)
    let h = (1e-6 * omega).max(1e-9);
    let c0 = chi2(omega, offset, contrast, inv_tau);
    let cp = chi2(omega + h, offset, contrast, inv_tau);
    let cm = chi2(omega - h, offset, contrast, inv_tau);
    let curv = (cp + cm - 2.0 * c0) / (h * h);
    let omega_std = if curv > 0.0 { (2.0 / curv).sqrt() } else { omega };

    // the oscillation must beat the best constant fit decisively
    let wsum: f64 = points.iter().map(|p| 1.0 / (p.2 * p.2)).sum();
    let wmean: f64 = points.iter().map(|p| p.1 / (p.2 * p.2)).sum::<f64>() / wsum;
    let chi2_const: f64 =
        points.iter().map(|p| ((p.1 - wmean) / p.2).powi(2)).sum();
    let converged = omega > 0.25 / t_span
        && contrast > 0.01
        && c0 < 0.8 * chi2_const
        && omega.is_finite()
        && omega_std.is_finite();
    if !converged {
        return FitResult::unconverged();
    }
    FitResult {
        omega_hz: omega,
        contrast: contrast.clamp(0.0, 1.5),
        decay_time_s: if fitted_tau && inv_tau > 0.0 { Some(1.0 / inv_tau) } else { None },
        offset: offset.clamp(-0.1, 1.1),
        omega_std_hz: omega_std,
        converged: true,
    }
}
