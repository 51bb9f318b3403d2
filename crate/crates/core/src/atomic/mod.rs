//! ⁴³Ca⁺ 4S₁/₂ ground-manifold structure: hyperfine/Zeeman energies, transition
//! frequencies and sensitivities, clock fields, and magnetic-dipole matrix
//! elements. The manifold is I = 7/2, J = 1/2 (16 states, F ∈ {3, 4}).

mod angular;
mod breit_rabi;
mod moment;

pub use angular::clebsch_gordan;
pub use breit_rabi::{
    breit_rabi_energies, field_sensitivity, find_clock_field, transition_frequency, uncoupled_index,
    EigenLevel,
};
pub use moment::{dipole_matrix_element, dipole_matrix_element_from_levels, raw_moment_element};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Number of states in the ground manifold.
pub const MANIFOLD_DIM: usize = 16;

/// A ground-manifold state labelled by its low-field quantum numbers (F, m_F).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HyperfineState {
    pub f: i32,
    pub m: i32,
}

impl HyperfineState {
    pub fn new(f: i32, m: i32) -> Result<Self> {
        if !(f == 3 || f == 4) {
            return Err(Error::config(format!("F must be 3 or 4, got {f}")));
        }
        if m.abs() > f {
            return Err(Error::config(format!("|m_F| = {} exceeds F = {f}", m.abs())));
        }
        Ok(Self { f, m })
    }

    /// Canonical manifold index: (F=3, m=-3..3) then (F=4, m=-4..4).
    pub fn index(&self) -> usize {
        if self.f == 3 {
            (self.m + 3) as usize
        } else {
            7 + (self.m + 4) as usize
        }
    }

    /// Inverse of [`HyperfineState::index`].
    pub fn from_index(idx: usize) -> Self {
        if idx < 7 {
            Self { f: 3, m: idx as i32 - 3 }
        } else {
            Self { f: 4, m: (idx - 7) as i32 - 4 }
        }
    }

    /// All 16 states in canonical order.
    pub fn all() -> impl Iterator<Item = HyperfineState> {
        (0..MANIFOLD_DIM).map(Self::from_index)
    }
}

impl std::fmt::Display for HyperfineState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{:+})", self.f, self.m)
    }
}

/// Spherical polarization component of the microwave magnetic field relative
/// to the quantization axis; drives Δm = 0 / +1 / −1 respectively.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    Pi,
    SigmaPlus,
    SigmaMinus,
}

impl Polarization {
    pub fn delta_m(&self) -> i32 {
        match self {
            Polarization::Pi => 0,
            Polarization::SigmaPlus => 1,
            Polarization::SigmaMinus => -1,
        }
    }

    pub fn from_delta_m(dm: i32) -> Option<Self> {
        match dm {
            0 => Some(Polarization::Pi),
            1 => Some(Polarization::SigmaPlus),
            -1 => Some(Polarization::SigmaMinus),
            _ => None,
        }
    }
}

impl std::fmt::Display for Polarization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Polarization::Pi => write!(f, "pi"),
            Polarization::SigmaPlus => write!(f, "sigma+"),
            Polarization::SigmaMinus => write!(f, "sigma-"),
        }
    }
}

/// A microwave transition between the manifolds: lower state in F=4, upper in
/// F=3 (F=4 lies below F=3 for the negative hyperfine constant of ⁴³Ca⁺).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub lower: HyperfineState,
    pub upper: HyperfineState,
    pub polarization: Polarization,
}

impl Transition {
    pub fn new(lower: HyperfineState, upper: HyperfineState) -> Result<Self> {
        if lower.f != 4 || upper.f != 3 {
            return Err(Error::config(format!(
                "transition must go F=4 -> F=3, got {} -> {}",
                lower, upper
            )));
        }
        let dm = upper.m - lower.m;
        let polarization = Polarization::from_delta_m(dm).ok_or_else(|| {
            Error::config(format!("selection rule violated: Δm = {dm} for {lower} -> {upper}"))
        })?;
        Ok(Self { lower, upper, polarization })
    }

    /// Convenience constructor from raw quantum numbers.
    pub fn from_quantum_numbers(lower_m: i32, upper_m: i32) -> Result<Self> {
        Self::new(HyperfineState::new(4, lower_m)?, HyperfineState::new(3, upper_m)?)
    }
}

impl std::fmt::Display for Transition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}<->{} [{}]", self.lower, self.upper, self.polarization)
    }
}

/// Ground-level atomic constants. Energies are E/h in Hz; the Zeeman
/// convention is H/h = A·(I·J) + muB_hz_per_G · B · (gJ·J_z + gI·I_z) with gI
/// the nuclear g-factor expressed in Bohr magnetons (sign included).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomicConstants {
    #[serde(rename = "A_hz")]
    pub a_hz: f64,
    #[serde(rename = "gJ")]
    pub g_j: f64,
    #[serde(rename = "gI")]
    pub g_i: f64,
    /// Doubled nuclear spin, 2I.
    #[serde(rename = "I2")]
    pub i2: u32,
    #[serde(rename = "muB_hz_per_G")]
    pub mu_b_hz_per_g: f64,
}

impl AtomicConstants {
    pub fn nuclear_spin(&self) -> f64 {
        self.i2 as f64 / 2.0
    }

    /// Zero-field hyperfine splitting |A|(I + 1/2).
    pub fn manifold_splitting_hz(&self) -> f64 {
        self.a_hz.abs() * (self.i2 as f64 + 1.0) / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a_hz.is_finite() && self.a_hz != 0.0) {
            return Err(Error::config("hyperfine constant A must be finite and nonzero"));
        }
        if self.i2 != 7 {
            return Err(Error::config(format!(
                "this manifold model requires I = 7/2 (I2 = 7), got I2 = {}",
                self.i2
            )));
        }
        if !(self.g_j.is_finite() && self.g_j > 0.0) {
            return Err(Error::config("gJ must be finite and positive"));
        }
        if !self.g_i.is_finite() {
            return Err(Error::config("gI must be finite"));
        }
        if !(self.mu_b_hz_per_g.is_finite() && self.mu_b_hz_per_g > 0.0) {
            return Err(Error::config("muB_hz_per_G must be finite and positive"));
        }
        Ok(())
    }
}

/// Load a constants file (TOML keys A_hz, gJ, gI, I2, muB_hz_per_G; comment
/// lines allowed). Applies the ⁴³Ca⁺ consistency gates: the zero-field
/// splitting must sit within 1% of 3.226 GHz, and the adiabatic (F, m_F)
/// labelling must be crossing-free below 500 G.
pub fn load_constants(path: &std::path::Path) -> Result<AtomicConstants> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read constants file {}: {e}", path.display())))?;
    let c: AtomicConstants =
        toml::from_str(&text).map_err(|e| Error::config(format!("constants file: {e}")))?;
    c.validate()?;
    let split = c.manifold_splitting_hz();
    let gate = 3.226e9;
    if (split - gate).abs() > 0.01 * gate {
        return Err(Error::physics(format!(
            "zero-field splitting {split:.4e} Hz is not within 1% of 3.226 GHz; wrong constants?"
        )));
    }
    assert_no_crossings(&c, 500.0)?;
    Ok(c)
}

/// Verify that the two Breit-Rabi branches never touch for any m on a grid up
/// to `b_max` gauss, so adiabatic (F, m_F) labels are well defined.
fn assert_no_crossings(c: &AtomicConstants, b_max: f64) -> Result<()> {
    let steps = 200;
    for k in 0..=steps {
        let b = b_max * k as f64 / steps as f64;
        let levels = breit_rabi_energies(c, b)?;
        for m in -3..=3 {
            let e3 = levels[HyperfineState { f: 3, m }.index()].energy_hz;
            let e4 = levels[HyperfineState { f: 4, m }.index()].energy_hz;
            if e3 - e4 <= 0.0 {
                return Err(Error::physics(format!(
                    "branch crossing at B = {b} G for m = {m}; adiabatic labels invalid"
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_index_round_trip() {
        for (k, s) in HyperfineState::all().enumerate() {
            assert_eq!(s.index(), k);
            assert_eq!(HyperfineState::from_index(k), s);
        }
    }

    #[test]
    fn rejects_bad_states() {
        assert!(HyperfineState::new(5, 0).is_err());
        assert!(HyperfineState::new(3, 4).is_err());
        assert!(HyperfineState::new(4, -5).is_err());
    }

    #[test]
    fn transition_polarization_consistency() {
        let t = Transition::from_quantum_numbers(0, 1).unwrap();
        assert_eq!(t.polarization, Polarization::SigmaPlus);
        let t = Transition::from_quantum_numbers(1, 0).unwrap();
        assert_eq!(t.polarization, Polarization::SigmaMinus);
        let t = Transition::from_quantum_numbers(0, 0).unwrap();
        assert_eq!(t.polarization, Polarization::Pi);
        assert!(Transition::from_quantum_numbers(0, 2).is_err());
        // F=3 state cannot be the lower level
        assert!(Transition::new(
            HyperfineState::new(3, 0).unwrap(),
            HyperfineState::new(4, 0).unwrap()
        )
        .is_err());
    }
}
