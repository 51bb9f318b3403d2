//! Magnetic-dipole matrix elements of the spherical moment components
//! μ_q = g_J·J_q + g_I·I_q between field-dressed eigenstates, normalized so
//! the B→0 (4,0)↔(3,0) π element is 1.

use super::breit_rabi::{energies_unchecked, EigenLevel};
use super::{uncoupled_index, AtomicConstants, Transition, MANIFOLD_DIM};
use crate::error::Result;
use crate::C64;
use nalgebra::DMatrix;

/// Spherical component q of an angular-momentum operator in the uncoupled
/// |m_J, m_I⟩ basis: T_0 = A_z, T_{±1} = ∓(A_x ± iA_y)/√2 = ∓A_±/√2.
fn moment_operator(c: &AtomicConstants, q: i32) -> DMatrix<C64> {
    let mut m = DMatrix::from_element(MANIFOLD_DIM, MANIFOLD_DIM, C64::new(0.0, 0.0));
    let i_spin = c.nuclear_spin();
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for mj2 in [-1i64, 1] {
        for mi2 in (-7..=7i64).step_by(2) {
            let col = uncoupled_index(mj2, mi2).unwrap();
            let mj = mj2 as f64 / 2.0;
            let mi = mi2 as f64 / 2.0;
            match q {
                0 => {
                    m[(col, col)] += C64::new(c.g_j * mj + c.g_i * mi, 0.0);
                }
                1 => {
                    // J_+: only m_J = -1/2 → +1/2, amplitude 1 for J = 1/2
                    if mj2 == -1 {
                        let row = uncoupled_index(1, mi2).unwrap();
                        m[(row, col)] += C64::new(-c.g_j * inv_sqrt2, 0.0);
                    }
                    if let Some(row) = uncoupled_index(mj2, mi2 + 2) {
                        let amp = (i_spin * (i_spin + 1.0) - mi * (mi + 1.0)).sqrt();
                        m[(row, col)] += C64::new(-c.g_i * amp * inv_sqrt2, 0.0);
                    }
                }
                -1 => {
                    if mj2 == 1 {
                        let row = uncoupled_index(-1, mi2).unwrap();
                        m[(row, col)] += C64::new(c.g_j * inv_sqrt2, 0.0);
                    }
                    if let Some(row) = uncoupled_index(mj2, mi2 - 2) {
                        let amp = (i_spin * (i_spin + 1.0) - mi * (mi - 1.0)).sqrt();
                        m[(row, col)] += C64::new(c.g_i * amp * inv_sqrt2, 0.0);
                    }
                }
                _ => unreachable!("|q| <= 1 enforced by Transition"),
            }
        }
    }
    m
}

fn element_between(op: &DMatrix<C64>, upper: &EigenLevel, lower: &EigenLevel) -> C64 {
    let u = upper.uncoupled_vector();
    let l = lower.uncoupled_vector();
    let mut acc = C64::new(0.0, 0.0);
    for (row, urow) in u.iter().enumerate() {
        if urow.norm_sqr() == 0.0 {
            continue;
        }
        for (col, lcol) in l.iter().enumerate() {
            if lcol.norm_sqr() == 0.0 {
                continue;
            }
            acc += urow.conj() * op[(row, col)] * lcol;
        }
    }
    acc
}

/// B→0 normalization: the (4,0)↔(3,0) π element, (g_I − g_J)/2 in raw units.
fn normalization(c: &AtomicConstants) -> C64 {
    let levels0 = energies_unchecked(c, 0.0);
    let op = moment_operator(c, 0);
    let upper = &levels0[super::HyperfineState { f: 3, m: 0 }.index()];
    let lower = &levels0[super::HyperfineState { f: 4, m: 0 }.index()];
    element_between(&op, upper, lower)
}

/// ⟨upper| μ_q |lower⟩ / N₀ for q = Δm of the transition, using precomputed
/// dressed levels (canonical order).
pub fn dipole_matrix_element_from_levels(
    c: &AtomicConstants,
    levels: &[EigenLevel],
    t: &Transition,
) -> Result<C64> {
    let q = t.polarization.delta_m();
    let op = moment_operator(c, q);
    let upper = &levels[t.upper.index()];
    let lower = &levels[t.lower.index()];
    Ok(element_between(&op, upper, lower) / normalization(c))
}

/// Normalized matrix element of μ_q (q = Δm) between the field-dressed states
/// of `t` at static field `b_gauss`.
pub fn dipole_matrix_element(c: &AtomicConstants, t: &Transition, b_gauss: f64) -> Result<C64> {
    let levels = super::breit_rabi_energies(c, b_gauss)?;
    dipole_matrix_element_from_levels(c, &levels, t)
}

/// Raw (unnormalized) element of μ_q between two dressed levels; q = m_upper
/// − m_lower must satisfy |q| ≤ 1, else the element is zero by construction.
/// Used by tests and the Hermiticity checks.
pub fn raw_moment_element(
    c: &AtomicConstants,
    q: i32,
    upper: &EigenLevel,
    lower: &EigenLevel,
) -> C64 {
    if q.abs() > 1 {
        return C64::new(0.0, 0.0);
    }
    element_between(&moment_operator(c, q), upper, lower)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic::{breit_rabi_energies, HyperfineState, Polarization};
    use crate::scenario::ca43_constants;

    #[test]
    fn normalization_is_one_at_zero_field() {
        let c = ca43_constants();
        let t = Transition::from_quantum_numbers(0, 0).unwrap();
        let m = dipole_matrix_element(&c, &t, 0.0).unwrap();
        assert!((m - C64::new(1.0, 0.0)).norm() < 1e-12, "m = {m}");
    }

    #[test]
    fn pi_operator_cannot_drive_sigma_transition() {
        // π (q=0) element between states with Δm = 1 vanishes for all B:
        // checked through the raw operator since the Transition type carries
        // its own polarization.
        let c = ca43_constants();
        for b in [0.0, 2.8, 144.0] {
            let levels = breit_rabi_energies(&c, b).unwrap();
            let upper = levels[HyperfineState::new(3, 1).unwrap().index()];
            let lower = levels[HyperfineState::new(4, 0).unwrap().index()];
            let m = raw_moment_element(&c, 0, &upper, &lower);
            assert!(m.norm() < 1e-15, "B = {b}: {m}");
        }
    }

    #[test]
    fn low_field_sigma_elements_match_angular_algebra() {
        // At B→0 the electron part gives |M((4,0)→(3,±1))| = sqrt(3/8) and
        // |M((4,∓1)→(3,0))| = sqrt(5/8); the nuclear term shifts these at the
        // few-1e-4 level, hence the loose tolerance (the exact oracle check
        // lives in the integration tests).
        let c = ca43_constants();
        let m1 = dipole_matrix_element(&c, &Transition::from_quantum_numbers(0, 1).unwrap(), 0.0)
            .unwrap()
            .norm();
        assert!((m1 - (3.0f64 / 8.0).sqrt()).abs() < 1e-3, "σ+ from m=0: {m1}");
        let m2 = dipole_matrix_element(&c, &Transition::from_quantum_numbers(-1, 0).unwrap(), 0.0)
            .unwrap()
            .norm();
        assert!((m2 - (5.0f64 / 8.0).sqrt()).abs() < 1e-3, "σ+ to m=0: {m2}");
        let m3 = dipole_matrix_element(&c, &Transition::from_quantum_numbers(1, 0).unwrap(), 0.0)
            .unwrap()
            .norm();
        assert!((m3 - (5.0f64 / 8.0).sqrt()).abs() < 1e-3, "σ-: {m3}");
    }

    #[test]
    fn spherical_tensor_hermiticity() {
        // ⟨u|μ_q|l⟩ = (−1)^q ⟨l|μ_{−q}|u⟩* for a Hermitian vector operator's
        // spherical components.
        let c = ca43_constants();
        let levels = breit_rabi_energies(&c, 2.8).unwrap();
        for (lm, um) in [(0i32, 1i32), (1, 0), (0, 0), (-2, -1), (2, 2)] {
            let q = um - lm;
            let upper = levels[HyperfineState::new(3, um).unwrap().index()];
            let lower = levels[HyperfineState::new(4, lm).unwrap().index()];
            let fwd = raw_moment_element(&c, q, &upper, &lower);
            let back = raw_moment_element(&c, -q, &lower, &upper);
            let sign = if q.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            assert!(
                (fwd - back.conj() * sign).norm() < 1e-12 * fwd.norm().max(1e-6),
                "q={q}: {fwd} vs {back}"
            );
        }
    }

    #[test]
    fn selection_rule_rejected_at_type_level() {
        assert!(Transition::from_quantum_numbers(0, 2).is_err());
        let _ = Polarization::from_delta_m(2).is_none();
    }
}
