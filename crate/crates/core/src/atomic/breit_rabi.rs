//! Closed-form Breit-Rabi eigenvalues and eigenvectors for the J = 1/2,
//! I = 7/2 ground manifold, plus transition frequencies, field sensitivities
//! and clock-field root finding.

use super::{AtomicConstants, HyperfineState, Transition, MANIFOLD_DIM};
use crate::error::{Error, Result};
use crate::C64;

/// A field-dressed level carrying its adiabatic low-field label, its energy
/// (E/h relative to the manifold centre of gravity) and the mixing amplitudes
/// over the uncoupled pair [|m_J=+1/2, m_I=m-1/2⟩, |m_J=-1/2, m_I=m+1/2⟩]
/// that shares its m_F.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenLevel {
    pub label: HyperfineState,
    pub energy_hz: f64,
    pub mixing: [C64; 2],
}

impl EigenLevel {
    /// Amplitudes over the 16-dim uncoupled basis; see [`uncoupled_index`].
    pub fn uncoupled_vector(&self) -> [C64; MANIFOLD_DIM] {
        let mut v = [C64::new(0.0, 0.0); MANIFOLD_DIM];
        let m2 = 2 * self.label.m as i64;
        if let Some(i) = uncoupled_index(1, m2 - 1) {
            v[i] = self.mixing[0];
        }
        if let Some(i) = uncoupled_index(-1, m2 + 1) {
            v[i] = self.mixing[1];
        }
        v
    }
}

/// Index of |m_J, m_I⟩ in the uncoupled basis (doubled quantum numbers:
/// mj2 = ±1, mi2 ∈ {-7, -5, ..., 7}); m_J = +1/2 block first.
pub fn uncoupled_index(mj2: i64, mi2: i64) -> Option<usize> {
    if mi2.abs() > 7 || (mi2 & 1) == 0 {
        return None;
    }
    let block = match mj2 {
        1 => 0,
        -1 => 8,
        _ => return None,
    };
    Some(block + ((mi2 + 7) / 2) as usize)
}

/// All 16 ground-manifold levels at static field `b_gauss`, in canonical
/// (F, m_F) order. Closed-form J = 1/2 Breit-Rabi expression; stretched
/// states use the explicit linear form.
pub fn breit_rabi_energies(c: &AtomicConstants, b_gauss: f64) -> Result<Vec<EigenLevel>> {
    c.validate()?;
    if !(b_gauss.is_finite() && b_gauss >= 0.0) {
        return Err(Error::config(format!("B = {b_gauss} G must be finite and >= 0")));
    }
    Ok(energies_unchecked(c, b_gauss))
}

/// Internal variant without the B >= 0 gate, used for symmetric finite
/// differences at small fields (the closed form continues smoothly to B < 0).
pub(crate) fn energies_unchecked(c: &AtomicConstants, b_gauss: f64) -> Vec<EigenLevel> {
    let a = c.a_hz;
    let zeeman = c.mu_b_hz_per_g * b_gauss;
    let i_spin = c.nuclear_spin();
    let mut levels = vec![
        EigenLevel {
            label: HyperfineState { f: 3, m: 0 },
            energy_hz: 0.0,
            mixing: [C64::new(0.0, 0.0); 2]
        };
        MANIFOLD_DIM
    ];
    let mut put = |lvl: EigenLevel| {
        let idx = lvl.label.index();
        levels[idx] = lvl;
    };

    for m in -4..=4i32 {
        let mf = m as f64;
        if m.abs() == 4 {
            // stretched |m_J = ±1/2, m_I = ±7/2⟩: single uncoupled state
            let sgn = if m > 0 { 1.0 } else { -1.0 };
            let energy = a * i_spin / 2.0 + sgn * zeeman * (c.g_j / 2.0 + c.g_i * i_spin);
            let mixing = if m > 0 {
                [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
            } else {
                [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]
            };
            put(EigenLevel { label: HyperfineState { f: 4, m }, energy_hz: energy, mixing });
            continue;
        }
        // 2x2 block over [|+1/2, m-1/2⟩, |-1/2, m+1/2⟩]
        let h_pp = 0.5 * a * (mf - 0.5) + zeeman * (0.5 * c.g_j + c.g_i * (mf - 0.5));
        let h_mm = -0.5 * a * (mf + 0.5) + zeeman * (-0.5 * c.g_j + c.g_i * (mf + 0.5));
        let h_pm = 0.5 * a * (i_spin * (i_spin + 1.0) - (mf * mf - 0.25)).sqrt();
        let mean = 0.5 * (h_pp + h_mm);
        let delta = 0.5 * (h_pp - h_mm);
        let s = delta.hypot(h_pm);
        // F = I + 1/2 branch takes the root with the sign of A (adiabatic
        // continuity from B = 0; the gap 2s never closes for |m| <= 3).
        let sign4 = a.signum();
        for (f, root) in [(4, sign4), (3, -sign4)] {
            let energy = mean + root * s;
            // eigenvector of [[h_pp, h_pm], [h_pm, h_mm]] for eigenvalue `energy`
            let v = if (energy - h_pp).abs() > (energy - h_mm).abs() {
                [h_pm, energy - h_pp]
            } else {
                [energy - h_mm, h_pm]
            };
            let norm = v[0].hypot(v[1]);
            let mut v = [v[0] / norm, v[1] / norm];
            // fixed sign convention, continuous in B: F=4 keeps both
            // components positive, F=3 keeps the m_J=-1/2 component positive
            let flip = if f == 4 { v[0] < 0.0 } else { v[1] < 0.0 };
            if flip {
                v = [-v[0], -v[1]];
            }
            put(EigenLevel {
                label: HyperfineState { f, m },
                energy_hz: energy,
                mixing: [C64::new(v[0], 0.0), C64::new(v[1], 0.0)],
            });
        }
    }
    levels
}

/// Transition frequency E_upper − E_lower (positive for F=4 → F=3 microwave
/// transitions, ≈3.2 GHz).
pub fn transition_frequency(c: &AtomicConstants, t: &Transition, b_gauss: f64) -> Result<f64> {
    let levels = breit_rabi_energies(c, b_gauss)?;
    Ok(levels[t.upper.index()].energy_hz - levels[t.lower.index()].energy_hz)
}

fn frequency_unchecked(c: &AtomicConstants, t: &Transition, b_gauss: f64) -> f64 {
    let levels = energies_unchecked(c, b_gauss);
    levels[t.upper.index()].energy_hz - levels[t.lower.index()].energy_hz
}

/// df/dB in Hz/G by central finite difference with step max(1 mG, 1e-4·B).
pub fn field_sensitivity(c: &AtomicConstants, t: &Transition, b_gauss: f64) -> Result<f64> {
    c.validate()?;
    if !(b_gauss.is_finite() && b_gauss >= 0.0) {
        return Err(Error::config(format!("B = {b_gauss} G must be finite and >= 0")));
    }
    let h = (1e-3f64).max(1e-4 * b_gauss);
    let f_plus = frequency_unchecked(c, t, b_gauss + h);
    let f_minus = frequency_unchecked(c, t, b_gauss - h);
    Ok((f_plus - f_minus) / (2.0 * h))
}

/// Root of df/dB in `[b_min, b_max]` gauss: sign scan on a grid of at most
/// 1 G, then bracketed bisection. `None` when the sensitivity does not change
/// sign in the range.
pub fn find_clock_field(
    c: &AtomicConstants,
    t: &Transition,
    b_min: f64,
    b_max: f64,
) -> Result<Option<f64>> {
    if !(b_min.is_finite() && b_max.is_finite() && b_min >= 0.0 && b_max > b_min) {
        return Err(Error::config(format!("invalid field range [{b_min}, {b_max}] G")));
    }
    let n = (((b_max - b_min) / 1.0).ceil() as usize).clamp(64, 4000);
    let step = (b_max - b_min) / n as f64;
    let mut b_lo = b_min;
    let mut s_lo = field_sensitivity(c, t, b_lo)?;
    let mut bracket = None;
    for k in 1..=n {
        let b_hi = b_min + step * k as f64;
        let s_hi = field_sensitivity(c, t, b_hi)?;
        if s_lo == 0.0 {
            return Ok(Some(b_lo));
        }
        if s_lo * s_hi < 0.0 {
            bracket = Some((b_lo, b_hi, s_lo));
            break;
        }
        b_lo = b_hi;
        s_lo = s_hi;
    }
    let (mut lo, mut hi, s_lo) = match bracket {
        Some(x) => x,
        None => return Ok(None),
    };
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        let s_mid = field_sensitivity(c, t, mid)?;
        if s_mid == 0.0 {
            return Ok(Some(mid));
        }
        if s_mid * s_lo > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-8 {
            break;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ca43_constants;

    #[test]
    fn zero_field_degeneracy_and_splitting() {
        let c = ca43_constants();
        let levels = breit_rabi_energies(&c, 0.0).unwrap();
        let e4: Vec<f64> =
            levels.iter().filter(|l| l.label.f == 4).map(|l| l.energy_hz).collect();
        let e3: Vec<f64> =
            levels.iter().filter(|l| l.label.f == 3).map(|l| l.energy_hz).collect();
        assert_eq!(e4.len(), 9);
        assert_eq!(e3.len(), 7);
        for e in &e4 {
            assert!((e - e4[0]).abs() < 1e-6);
        }
        for e in &e3 {
            assert!((e - e3[0]).abs() < 1e-6);
        }
        let split = e3[0] - e4[0];
        let expect = c.manifold_splitting_hz();
        assert!((split - expect).abs() < 1.0, "split {split} vs {expect}");
        // B -> 0 limit of the paper's 3.226 GHz, within 1 MHz
        assert!((split - 3.226e9).abs() < 1e6, "split {split}");
        // F=4 below F=3 for A < 0
        assert!(e4[0] < e3[0]);
    }

    #[test]
    fn energy_trace_is_field_independent() {
        let c = ca43_constants();
        let trace0: f64 =
            breit_rabi_energies(&c, 0.0).unwrap().iter().map(|l| l.energy_hz).sum();
        for b in [0.5, 2.8, 50.0, 146.0, 288.0, 450.0] {
            let tr: f64 = breit_rabi_energies(&c, b).unwrap().iter().map(|l| l.energy_hz).sum();
            assert!(
                (tr - trace0).abs() <= 1e-9 * c.manifold_splitting_hz(),
                "trace at {b} G: {tr} vs {trace0}"
            );
        }
    }

    #[test]
    fn mixing_normalized_and_stretched_pure() {
        let c = ca43_constants();
        for b in [0.0, 2.8, 146.0, 400.0] {
            for lvl in breit_rabi_energies(&c, b).unwrap() {
                let norm2 = lvl.mixing[0].norm_sqr() + lvl.mixing[1].norm_sqr();
                assert!((norm2 - 1.0).abs() < 1e-12);
                if lvl.label.m.abs() == 4 {
                    assert!(lvl.mixing[0].norm() == 1.0 || lvl.mixing[1].norm() == 1.0);
                }
            }
        }
    }

    #[test]
    fn qubit_frequency_anchor() {
        let c = ca43_constants();
        let t = Transition::from_quantum_numbers(0, 0).unwrap();
        let f = transition_frequency(&c, &t, 2.8).unwrap();
        assert!((f - 3.226e9).abs() < 1e6, "f = {f}");
    }

    #[test]
    fn sigma_splitting_anchor_1p6_khz() {
        // f((4,0)<->(3,+1)) − f((4,+1)<->(3,0)) = 2 gI muB B: 1.6 kHz at 2.8 G
        let c = ca43_constants();
        let sp = Transition::from_quantum_numbers(0, 1).unwrap();
        let sm = Transition::from_quantum_numbers(1, 0).unwrap();
        let d = transition_frequency(&c, &sp, 2.8).unwrap()
            - transition_frequency(&c, &sm, 2.8).unwrap();
        assert!((d - 1.6e3).abs() < 0.1e3, "splitting = {d}");
    }

    #[test]
    fn adjacent_m_splitting_anchor() {
        let c = ca43_constants();
        let pi = Transition::from_quantum_numbers(0, 0).unwrap();
        let sp = Transition::from_quantum_numbers(0, 1).unwrap();
        let d = (transition_frequency(&c, &pi, 2.8).unwrap()
            - transition_frequency(&c, &sp, 2.8).unwrap())
        .abs();
        assert!((d - 0.98e6).abs() < 0.01e6, "delta = {d}");
    }

    #[test]
    fn sensitivity_anchor_6p8_hz_per_mg() {
        let c = ca43_constants();
        let t = Transition::from_quantum_numbers(0, 0).unwrap();
        let s = field_sensitivity(&c, &t, 2.8).unwrap();
        assert!((s - 6800.0).abs() < 0.02 * 6800.0, "df/dB = {s} Hz/G");
    }

    #[test]
    fn clock_transition_flat_at_zero_field() {
        let c = ca43_constants();
        let t = Transition::from_quantum_numbers(0, 0).unwrap();
        let s = field_sensitivity(&c, &t, 0.0).unwrap();
        assert!(s.abs() < 1e-6, "df/dB at 0 G = {s}");
    }

    #[test]
    fn clock_roots_146_and_288() {
        let c = ca43_constants();
        let t = Transition::from_quantum_numbers(0, 1).unwrap();
        let b = find_clock_field(&c, &t, 50.0, 250.0).unwrap().unwrap();
        assert!((b - 146.0).abs() < 2.0, "root {b}");
        let t = Transition::from_quantum_numbers(1, 1).unwrap();
        let b = find_clock_field(&c, &t, 150.0, 400.0).unwrap().unwrap();
        assert!((b - 288.0).abs() < 2.0, "root {b}");
    }

    #[test]
    fn qubit_transition_has_no_clock_point_above_zero() {
        let c = ca43_constants();
        let t = Transition::from_quantum_numbers(0, 0).unwrap();
        assert!(find_clock_field(&c, &t, 0.1, 400.0).unwrap().is_none());
    }

    #[test]
    fn mirrored_labels_agree_under_field_reversal() {
        // E(F, m; B) = E(F, -m; -B): transition frequencies computed from
        // mirrored labels agree.
        let c = ca43_constants();
        let t = Transition::from_quantum_numbers(1, 2).unwrap();
        let tm = Transition::from_quantum_numbers(-1, -2).unwrap();
        for b in [0.7, 2.8, 33.0, 144.4] {
            let f = transition_frequency(&c, &t, b).unwrap();
            let lv = energies_unchecked(&c, -b);
            let fm = lv[tm.upper.index()].energy_hz - lv[tm.lower.index()].energy_hz;
            assert!((f - fm).abs() < 1e-6 * f, "B={b}: {f} vs {fm}");
        }
    }

    #[test]
    fn rejects_invalid_constants() {
        let mut c = ca43_constants();
        c.a_hz = 0.0;
        assert!(breit_rabi_energies(&c, 1.0).is_err());
        let mut c = ca43_constants();
        c.i2 = 0;
        assert!(breit_rabi_energies(&c, 1.0).is_err());
        let c = ca43_constants();
        assert!(breit_rabi_energies(&c, -1.0).is_err());
        assert!(breit_rabi_energies(&c, f64::NAN).is_err());
    }
}
