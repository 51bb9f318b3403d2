//! The eight-electrode, two-zone microwave field network: per-electrode
//! complex field vectors, drive channels, linear superposition, π/σ±
//! polarization decomposition, analytic nulls and drive-line drift.
//!
//! Field components are stored in effective-coupling units of Hz: the Rabi
//! frequency produced on a unit-matrix-element transition per unit drive
//! amplitude.

mod drift;

pub use drift::{apply_drift, DriftProcess, DriftSampler, OuParams};

use crate::atomic::{Polarization, Transition};
use crate::error::{Error, Result};
use crate::C64;
use serde::{Deserialize, Serialize};

/// A complex magnetic-field 3-vector at a zone, in effective-coupling Hz.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComplexField3 {
    pub x: C64,
    pub y: C64,
    pub z: C64,
}

impl ComplexField3 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.x.norm_sqr() + self.y.norm_sqr() + self.z.norm_sqr()
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self { x: self.x * c, y: self.y * c, z: self.z * c }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { x: self.x + other.x, y: self.y + other.y, z: self.z + other.z }
    }

    pub fn is_finite(&self) -> bool {
        [self.x, self.y, self.z].iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// π/σ± decomposition of a field relative to the quantization axis.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PolarizationComponents {
    pub pi: C64,
    pub sigma_plus: C64,
    pub sigma_minus: C64,
}

impl PolarizationComponents {
    pub fn component(&self, pol: Polarization) -> C64 {
        match pol {
            Polarization::Pi => self.pi,
            Polarization::SigmaPlus => self.sigma_plus,
            Polarization::SigmaMinus => self.sigma_minus,
        }
    }

    pub fn power(&self) -> f64 {
        self.pi.norm_sqr() + self.sigma_plus.norm_sqr() + self.sigma_minus.norm_sqr()
    }
}

/// Right-handed transverse frame (e1, e2, axis) completing the quantization
/// axis: e1 is the lab x-axis projected orthogonal to the axis, falling back
/// to lab y when the axis is (anti)parallel to x.
pub fn transverse_frame(axis: &[f64; 3]) -> Result<([f64; 3], [f64; 3])> {
    let n = norm3(axis);
    if n < 1e-12 {
        return Err(Error::config("quantization_axis must be nonzero"));
    }
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::config(format!("quantization_axis must be unit length, |n| = {n}")));
    }
    let mut e1 = project_out([1.0, 0.0, 0.0], axis);
    if norm3(&e1) < 1e-6 {
        e1 = project_out([0.0, 1.0, 0.0], axis);
    }
    let n1 = norm3(&e1);
    let e1 = [e1[0] / n1, e1[1] / n1, e1[2] / n1];
    let e2 = cross(axis, &e1);
    Ok((e1, e2))
}

fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn project_out(v: [f64; 3], n: &[f64; 3]) -> [f64; 3] {
    let d = v[0] * n[0] + v[1] * n[1] + v[2] * n[2];
    [v[0] - d * n[0], v[1] - d * n[1], v[2] - d * n[2]]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Decompose a complex field into π/σ± relative to `axis`:
/// π is the projection on the axis, σ± = ∓(f1 ± i·f2)/√2 in the right-handed
/// frame (e1, e2, axis) from [`transverse_frame`].
pub fn polarization_decompose(
    field: &ComplexField3,
    axis: &[f64; 3],
) -> Result<PolarizationComponents> {
    let (e1, e2) = transverse_frame(axis)?;
    let dot = |u: &[f64; 3]| field.x * u[0] + field.y * u[1] + field.z * u[2];
    let f1 = dot(&e1);
    let f2 = dot(&e2);
    let pi = dot(axis);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    Ok(PolarizationComponents {
        pi,
        sigma_plus: -(f1 + C64::i() * f2) * inv_sqrt2,
        sigma_minus: (f1 - C64::i() * f2) * inv_sqrt2,
    })
}

/// Inverse of [`polarization_decompose`].
pub fn polarization_recompose(pol: &PolarizationComponents, axis: &[f64; 3]) -> Result<ComplexField3> {
    let (e1, e2) = transverse_frame(axis)?;
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let f1 = (pol.sigma_minus - pol.sigma_plus) * inv_sqrt2;
    let f2 = C64::i() * (pol.sigma_plus + pol.sigma_minus) * inv_sqrt2;
    let comp = |k: usize| pol.pi * axis[k] + f1 * e1[k] + f2 * e2[k];
    Ok(ComplexField3 { x: comp(0), y: comp(1), z: comp(2) })
}

/// Per-electrode, per-zone field map plus the quantization axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ElectrodeFieldMap {
    pub zones: Vec<String>,
    pub electrodes: Vec<u8>,
    /// `fields[e][z]` is the field of `electrodes[e]` at `zones[z]`.
    pub fields: Vec<Vec<ComplexField3>>,
    /// Home zone index per electrode (the zone "near" that electrode).
    pub home_zone: Vec<usize>,
    pub quantization_axis: [f64; 3],
}

impl ElectrodeFieldMap {
    pub fn validate(&self) -> Result<()> {
        transverse_frame(&self.quantization_axis)?;
        if self.fields.len() != self.electrodes.len() || self.home_zone.len() != self.electrodes.len()
        {
            return Err(Error::config("field map rows must match electrode list"));
        }
        for (e, row) in self.electrodes.iter().zip(&self.fields) {
            if row.len() != self.zones.len() {
                return Err(Error::config(format!(
                    "electrode {e} must define a field for every zone"
                )));
            }
            if row.iter().any(|f| !f.is_finite()) {
                return Err(Error::config(format!("electrode {e} has non-finite field entries")));
            }
        }
        if self.home_zone.iter().any(|&z| z >= self.zones.len()) {
            return Err(Error::config("home zone out of range"));
        }
        Ok(())
    }

    pub fn zone_index(&self, zone: &str) -> Result<usize> {
        self.zones
            .iter()
            .position(|z| z == zone)
            .ok_or_else(|| Error::config(format!("unknown zone '{zone}'")))
    }

    pub fn electrode_index(&self, electrode: u8) -> Result<usize> {
        self.electrodes
            .iter()
            .position(|&e| e == electrode)
            .ok_or_else(|| Error::config(format!("unknown electrode id {electrode}")))
    }

    pub fn field(&self, electrode: u8, zone: usize) -> Result<&ComplexField3> {
        let e = self.electrode_index(electrode)?;
        self.fields[e]
            .get(zone)
            .ok_or_else(|| Error::config(format!("zone index {zone} out of range")))
    }
}

/// One drive channel: electrode id, dimensionless amplitude, phase in
/// [0, 2π), on/off flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveChannel {
    pub electrode: u8,
    pub amplitude: f64,
    pub phase_rad: f64,
    pub enabled: bool,
}

impl DriveChannel {
    pub fn new(electrode: u8, amplitude: f64, phase_rad: f64, enabled: bool) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::config(format!("amplitude {amplitude} must be >= 0")));
        }
        if !phase_rad.is_finite() {
            return Err(Error::config("phase must be finite"));
        }
        Ok(Self { electrode, amplitude, phase_rad: wrap_phase(phase_rad), enabled })
    }

    pub fn complex_gain(&self) -> C64 {
        C64::from_polar(self.amplitude, self.phase_rad)
    }
}

/// Wrap a phase to [0, 2π).
pub fn wrap_phase(phi: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut p = phi % tau;
    if p < 0.0 {
        p += tau;
    }
    if p >= tau {
        p = 0.0;
    }
    p
}

/// Per-channel drive settings.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DriveSettings {
    pub channels: Vec<DriveChannel>,
}

impl DriveSettings {
    pub fn validate(&self, map: &ElectrodeFieldMap) -> Result<()> {
        for ch in &self.channels {
            map.electrode_index(ch.electrode)?;
            if !(ch.amplitude.is_finite() && ch.amplitude >= 0.0) {
                return Err(Error::config(format!(
                    "channel {} amplitude must be >= 0",
                    ch.electrode
                )));
            }
        }
        Ok(())
    }

    pub fn channel_mut(&mut self, electrode: u8) -> Option<&mut DriveChannel> {
        self.channels.iter_mut().find(|c| c.electrode == electrode)
    }

    pub fn channel(&self, electrode: u8) -> Option<&DriveChannel> {
        self.channels.iter().find(|c| c.electrode == electrode)
    }
}

/// Superpose the enabled channels' fields at `zone`:
/// Σ_i a_i·e^{iφ_i}·field(i, zone), summed in ascending electrode-id order.
pub fn total_field(
    map: &ElectrodeFieldMap,
    drives: &DriveSettings,
    zone: usize,
) -> Result<ComplexField3> {
    let mut order: Vec<&DriveChannel> = drives.channels.iter().filter(|c| c.enabled).collect();
    order.sort_by_key(|c| c.electrode);
    let mut acc = ComplexField3::zero();
    for ch in order {
        let f = map.field(ch.electrode, zone)?;
        acc = acc.add(&f.scaled(ch.complex_gain()));
    }
    Ok(acc)
}

/// Rabi frequency in Hz for the component selected by the transition's
/// polarization: Ω = |matrix_element| × |component|. The complex coupling
/// (phase retained) is [`complex_coupling`].
pub fn rabi_frequency(
    components: &PolarizationComponents,
    transition: &Transition,
    matrix_element: C64,
) -> f64 {
    complex_coupling(components, transition, matrix_element).norm()
}

/// Complex coupling c = matrix_element × component(Δm), for Hamiltonian
/// assembly.
pub fn complex_coupling(
    components: &PolarizationComponents,
    transition: &Transition,
    matrix_element: C64,
) -> C64 {
    matrix_element * components.component(transition.polarization)
}

/// One row of the Table-I-style ratio table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElectrodeRatio {
    pub electrode: u8,
    /// Ω_near/Ω_far; infinity when the far-zone component vanishes.
    pub r: f64,
    pub far_field_zero: bool,
}

/// r_i = Ω_near/Ω_far for each electrode driven alone at unit amplitude, on
/// the component selected by `transition`. Requires exactly two zones.
pub fn ratio_table(map: &ElectrodeFieldMap, transition: &Transition) -> Result<Vec<ElectrodeRatio>> {
    if map.zones.len() != 2 {
        return Err(Error::config(format!(
            "ratio table needs exactly two zones, map has {}",
            map.zones.len()
        )));
    }
    let mut rows = Vec::with_capacity(map.electrodes.len());
    for (k, &e) in map.electrodes.iter().enumerate() {
        let near = map.home_zone[k];
        let far = 1 - near;
        let comp = |z: usize| -> Result<f64> {
            let pol = polarization_decompose(&map.fields[k][z], &map.quantization_axis)?;
            Ok(pol.component(transition.polarization).norm())
        };
        let near_amp = comp(near)?;
        let far_amp = comp(far)?;
        if far_amp == 0.0 {
            rows.push(ElectrodeRatio { electrode: e, r: f64::INFINITY, far_field_zero: true });
        } else {
            rows.push(ElectrodeRatio { electrode: e, r: near_amp / far_amp, far_field_zero: false });
        }
    }
    Ok(rows)
}

/// Closed-form null: the (amplitude, phase) for the nulling electrode that
/// exactly cancels the driven electrode's selected component at `zone`.
/// c = −(selected comp of driven)/(selected comp of nulling), returned as
/// (|c|, arg c in [0, 2π)).
pub fn analytic_null(
    map: &ElectrodeFieldMap,
    driven: u8,
    nulling: u8,
    zone: usize,
    selector: Polarization,
) -> Result<(f64, f64)> {
    let axis = &map.quantization_axis;
    let d = polarization_decompose(map.field(driven, zone)?, axis)?.component(selector);
    let n = polarization_decompose(map.field(nulling, zone)?, axis)?.component(selector);
    if n.norm() == 0.0 {
        return Err(Error::physics(format!(
            "electrode {nulling} has no {selector} component at zone index {zone}; cannot null"
        )));
    }
    let c = -d / n;
    Ok((c.norm(), wrap_phase(c.arg())))
}
