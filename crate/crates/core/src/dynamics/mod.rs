//! Rotating-frame Hamiltonians over the 16-level ground manifold and exact
//! unitary propagation by Hermitian eigendecomposition.

mod shots;

pub use shots::{
    scan_pulse_duration, scan_pulse_duration_exact, shot_probability, simulate_shot,
    ExperimentClock, PulseContext, RabiScan, SpamModel,
};

use crate::atomic::{
    dipole_matrix_element_from_levels, AtomicConstants, EigenLevel, HyperfineState, Transition,
    MANIFOLD_DIM,
};
use crate::error::{Error, Result};
use crate::field::PolarizationComponents;
use crate::C64;
use nalgebra::{DMatrix, DVector};

/// Precomputed level structure at fixed (constants, B): dressed energies and
/// every allowed inter-manifold dipole element. Immutable once built; shared
/// freely across workers.
#[derive(Debug, Clone)]
pub struct ManifoldModel {
    pub constants: AtomicConstants,
    pub b_gauss: f64,
    pub levels: Vec<EigenLevel>,
    /// (upper index, lower index, Δm, normalized element), F=4 → F=3 only.
    pub couplings: Vec<(usize, usize, i32, f64)>,
}

impl ManifoldModel {
    pub fn new(constants: &AtomicConstants, b_gauss: f64) -> Result<Self> {
        let levels = crate::atomic::breit_rabi_energies(constants, b_gauss)?;
        let mut couplings = Vec::new();
        for lower in HyperfineState::all().filter(|s| s.f == 4) {
            for dm in -1..=1i32 {
                let um = lower.m + dm;
                if um.abs() > 3 {
                    continue;
                }
                let upper = HyperfineState { f: 3, m: um };
                let t = Transition::new(lower, upper)?;
                let me = dipole_matrix_element_from_levels(constants, &levels, &t)?;
                couplings.push((upper.index(), lower.index(), dm, me.re));
            }
        }
        Ok(Self { constants: *constants, b_gauss, levels, couplings })
    }

    pub fn energy(&self, s: HyperfineState) -> f64 {
        self.levels[s.index()].energy_hz
    }

    /// Resonant drive frequency for a transition at this field.
    pub fn resonance(&self, t: &Transition) -> f64 {
        self.energy(t.upper) - self.energy(t.lower)
    }

    /// Normalized dipole element for a transition at this field.
    pub fn element(&self, t: &Transition) -> f64 {
        let (u, l) = (t.upper.index(), t.lower.index());
        self.couplings
            .iter()
            .find(|(uu, ll, _, _)| *uu == u && *ll == l)
            .map(|(_, _, _, m)| *m)
            .unwrap_or(0.0)
    }
}

/// Rotating-frame Hamiltonian (entries in ordinary-frequency Hz).
#[derive(Debug, Clone)]
pub struct RotatingFrameHamiltonian {
    pub matrix: DMatrix<C64>,
    pub drive_frequency_hz: f64,
    pub b_gauss: f64,
}

/// Assemble the rotating-wave Hamiltonian: diagonal detunings (F=3 levels
/// offset by −drive frequency, everything shifted so `reference_lower` sits
/// at zero) and ½·Ω·e^{iθ} couplings between the manifolds only. Couplings
/// with ΔF = 0 and counter-rotating terms are dropped.
pub fn build_hamiltonian(
    model: &ManifoldModel,
    pol: &PolarizationComponents,
    drive_frequency_hz: f64,
    reference_lower: HyperfineState,
) -> Result<RotatingFrameHamiltonian> {
    let split = model.constants.manifold_splitting_hz();
    if !(drive_frequency_hz.is_finite() && (drive_frequency_hz - split).abs() <= 1.0e9) {
        return Err(Error::physics(format!(
            "drive frequency {drive_frequency_hz:.3e} Hz is more than 1 GHz from the \
             {split:.3e} Hz manifold splitting; rotating-wave approximation invalid"
        )));
    }
    let e_ref = model.energy(reference_lower);
    let mut h = DMatrix::from_element(MANIFOLD_DIM, MANIFOLD_DIM, C64::new(0.0, 0.0));
    for s in HyperfineState::all() {
        let mut e = model.energy(s) - e_ref;
        if s.f == 3 {
            e -= drive_frequency_hz;
        }
        h[(s.index(), s.index())] = C64::new(e, 0.0);
    }
    for &(u, l, dm, me) in &model.couplings {
        let pol_component = match dm {
            0 => pol.pi,
            1 => pol.sigma_plus,
            -1 => pol.sigma_minus,
            _ => unreachable!(),
        };
        let c = pol_component * me * 0.5;
        h[(u, l)] += c;
        h[(l, u)] += c.conj();
    }
    Ok(RotatingFrameHamiltonian { matrix: h, drive_frequency_hz, b_gauss: model.b_gauss })
}

/// A pure state over the 16 dressed levels (canonical order), unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinState(pub DVector<C64>);

impl SpinState {
    pub fn basis(s: HyperfineState) -> Self {
        let mut v = DVector::from_element(MANIFOLD_DIM, C64::new(0.0, 0.0));
        v[s.index()] = C64::new(1.0, 0.0);
        SpinState(v)
    }

    pub fn population(&self, s: HyperfineState) -> f64 {
        self.0[s.index()].norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

/// Eigendecomposition of a (Hermitian) rotating-frame Hamiltonian, reusable
/// across many evolution times.
pub struct Propagator {
    eigenvectors: DMatrix<C64>,
    eigenvalues_hz: DVector<f64>,
}

impl Propagator {
    pub fn new(h: &RotatingFrameHamiltonian) -> Self {
        let se = nalgebra::SymmetricEigen::new(h.matrix.clone());
        Propagator { eigenvectors: se.eigenvectors, eigenvalues_hz: se.eigenvalues }
    }

    /// |ψ(t)⟩ = V·exp(−i·2π·λ·t)·V†|ψ(0)⟩.
    pub fn evolve(&self, state: &SpinState, t_s: f64) -> SpinState {
        let mut coeffs = self.eigenvectors.adjoint() * &state.0;
        for (k, lambda) in self.eigenvalues_hz.iter().enumerate() {
            let phase = -std::f64::consts::TAU * lambda * t_s;
            coeffs[k] *= C64::new(phase.cos(), phase.sin());
        }
        SpinState(&self.eigenvectors * coeffs)
    }
}

/// Evolve `state` under `h` for `t_s` seconds by exp(−i·2π·H·t).
pub fn propagate(h: &RotatingFrameHamiltonian, state: &SpinState, t_s: f64) -> Result<SpinState> {
    if !(t_s.is_finite() && t_s >= 0.0) {
        return Err(Error::config(format!("evolution time {t_s} must be finite and >= 0")));
    }
    Ok(Propagator::new(h).evolve(state, t_s))
}

/// Two-level Rabi transfer probability (analytic oracle):
/// P = Ω²/(Ω²+Δ²)·sin²(π·√(Ω²+Δ²)·t), ordinary frequencies.
pub fn two_level_rabi(omega_hz: f64, delta_hz: f64, t_s: f64) -> f64 {
    if omega_hz == 0.0 {
        return 0.0;
    }
    let w2 = omega_hz * omega_hz + delta_hz * delta_hz;
    (omega_hz * omega_hz / w2) * (std::f64::consts::PI * w2.sqrt() * t_s).sin().powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ca43_constants;

    fn pure_pi(amp: f64) -> PolarizationComponents {
        PolarizationComponents {
            pi: C64::new(amp, 0.0),
            sigma_plus: C64::new(0.0, 0.0),
            sigma_minus: C64::new(0.0, 0.0),
        }
    }

    fn qubit() -> Transition {
        Transition::from_quantum_numbers(0, 0).unwrap()
    }

    #[test]
    fn pure_pi_field_couples_only_delta_m_zero() {
        let c = ca43_constants();
        let model = ManifoldModel::new(&c, 2.8).unwrap();
        let h = build_hamiltonian(&model, &pure_pi(1e4), model.resonance(&qubit()), qubit().lower)
            .unwrap();
        for u in HyperfineState::all().filter(|s| s.f == 3) {
            for l in HyperfineState::all().filter(|s| s.f == 4) {
                let v = h.matrix[(u.index(), l.index())].norm();
                if u.m == l.m {
                    assert!(v > 0.0, "π coupling missing for m={}", u.m);
                } else {
                    assert!(v == 0.0, "unexpected coupling {} -> {}", l, u);
                }
            }
        }
    }

    #[test]
    fn zero_field_gives_diagonal_hamiltonian() {
        let c = ca43_constants();
        let model = ManifoldModel::new(&c, 2.8).unwrap();
        let h = build_hamiltonian(
            &model,
            &PolarizationComponents::default(),
            model.resonance(&qubit()),
            qubit().lower,
        )
        .unwrap();
        for i in 0..MANIFOLD_DIM {
            for j in 0..MANIFOLD_DIM {
                if i != j {
                    assert_eq!(h.matrix[(i, j)].norm(), 0.0);
                }
            }
        }
        // addressed lower state sits at zero
        assert_eq!(h.matrix[(qubit().lower.index(), qubit().lower.index())].norm(), 0.0);
    }

    #[test]
    fn no_intra_manifold_couplings_ever() {
        let c = ca43_constants();
        let model = ManifoldModel::new(&c, 2.8).unwrap();
        let pol = PolarizationComponents {
            pi: C64::new(1e4, 3e3),
            sigma_plus: C64::new(5e4, -1e4),
            sigma_minus: C64::new(2e4, 2e4),
        };
        let h = build_hamiltonian(&model, &pol, model.resonance(&qubit()), qubit().lower).unwrap();
        for a in HyperfineState::all() {
            for b in HyperfineState::all() {
                if a.f == b.f && a != b {
                    assert_eq!(h.matrix[(a.index(), b.index())].norm(), 0.0);
                }
            }
        }
        // Hermitian
        let diff = (&h.matrix - h.matrix.adjoint()).norm();
        assert!(diff < 1e-12 * h.matrix.norm());
    }

    #[test]
    fn sigma_neighbours_detuned_by_0p98_mhz() {
        let c = ca43_constants();
        let model = ManifoldModel::new(&c, 2.8).unwrap();
        let h = build_hamiltonian(&model, &pure_pi(1e4), model.resonance(&qubit()), qubit().lower)
            .unwrap();
        let d31 = h.matrix[(HyperfineState { f: 3, m: 1 }.index(), HyperfineState { f: 3, m: 1 }.index())]
            .re;
        assert!((d31.abs() - 0.98e6).abs() < 0.01e6, "σ-coupled neighbour detuning {d31:.1}");
    }

    #[test]
    fn rwa_gate_rejects_far_off_drive() {
        let c = ca43_constants();
        let model = ManifoldModel::new(&c, 2.8).unwrap();
        let err =
            build_hamiltonian(&model, &pure_pi(1e4), 1.0e9, qubit().lower).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn propagation_identity_and_unitarity() {
        let c = ca43_constants();
        let model = ManifoldModel::new(&c, 2.8).unwrap();
        let pol = PolarizationComponents {
            pi: C64::new(1.5e4, 0.0),
            sigma_plus: C64::new(6.3e4, 1.0e4),
            sigma_minus: C64::new(3.9e4, -2.0e4),
        };
        let h = build_hamiltonian(&model, &pol, model.resonance(&qubit()), qubit().lower).unwrap();
        let psi0 = SpinState::basis(qubit().lower);
        let same = propagate(&h, &psi0, 0.0).unwrap();
        assert!((&same.0 - &psi0.0).norm() < 1e-12);
        for t in [1e-6, 3.3e-5, 2.7e-4, 8.1e-3] {
            let psi = propagate(&h, &psi0, t).unwrap();
            assert!((psi.norm() - 1.0).abs() < 1e-12, "norm at t={t}");
        }
    }

    #[test]
    fn resonant_pi_pulse_on_isolated_pair_matches_two_level() {
        let c = ca43_constants();
        let model = ManifoldModel::new(&c, 2.8).unwrap();
        // isolate the qubit pair by zeroing every other coupling
        let mut isolated = model.clone();
        isolated.couplings.retain(|&(u, l, _, _)| {
            u == qubit().upper.index() && l == qubit().lower.index()
        });
        let omega = 15.29e3;
        let me = model.element(&qubit());
        let pol = pure_pi(omega / me);
        let h =
            build_hamiltonian(&isolated, &pol, isolated.resonance(&qubit()), qubit().lower).unwrap();
        let t_pi = 1.0 / (2.0 * omega);
        let psi = propagate(&h, &SpinState::basis(qubit().lower), t_pi).unwrap();
        let p = psi.population(qubit().upper);
        assert!((p - 1.0).abs() < 1e-9, "π-pulse transfer {p}");
        assert!((p - two_level_rabi(omega, 0.0, t_pi)).abs() < 1e-9);
    }

    #[test]
    fn two_level_formula_basics() {
        assert!((two_level_rabi(100.0, 0.0, 1.0 / 200.0) - 1.0).abs() < 1e-12);
        // Ω = 27.7 Hz at Δ = 0.98 MHz: worst-case transfer ~8e-10
        let max = two_level_rabi(27.7, 0.98e6, 0.5 / (0.98e6));
        assert!(max < 2e-9 && max > 2e-10, "suppressed transfer {max:.2e}");
        assert_eq!(two_level_rabi(0.0, 1.0, 1.0), 0.0);
    }

    #[test]
    fn populations_sum_to_one_after_propagation() {
        let c = ca43_constants();
        let model = ManifoldModel::new(&c, 2.8).unwrap();
        let pol = PolarizationComponents {
            pi: C64::new(1.5e4, 2e3),
            sigma_plus: C64::new(9e4, 0.0),
            sigma_minus: C64::new(4e4, 4e4),
        };
        let h = build_hamiltonian(&model, &pol, model.resonance(&qubit()), qubit().lower).unwrap();
        let prop = Propagator::new(&h);
        let psi = prop.evolve(&SpinState::basis(qubit().lower), 7.7e-4);
        let total: f64 = HyperfineState::all().map(|s| psi.population(s)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
