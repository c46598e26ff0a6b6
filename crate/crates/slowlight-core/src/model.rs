//! Parameter sets, unit normalization, lattices, and state containers.
//!
//! Working units: Rabi frequencies and the coupling constant ν₀ are measured
//! in inverse pulse lengths, and both light-cone coordinates (the propagation
//! coordinate ζ = z/c and the retarded time τ = t − z/c) are measured in
//! pulse lengths, so every quantity in the equations is O(1) for a resonant
//! pulse. [`normalize_units`] maps laboratory numbers into these units and
//! keeps the scale factors needed to translate results back.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in m/s, used only to translate normalized results back to
/// laboratory lengths.
pub const SPEED_OF_LIGHT_M_PER_S: f64 = 2.997_924_58e8;

/// Reference group-velocity fraction v/c for the slow-light scale metadata.
pub const REFERENCE_VELOCITY_FRACTION: f64 = 1e-7;

/// Coupling constant k = ν₀ / (8 (ε₀² + Δ²)) tying the Liouville sector to
/// the soliton spectral parameter.
///
/// ε₀ is the soliton amplitude (imaginary part of the spectral parameter)
/// and Δ the one-photon detuning; at least one must be nonzero. ν₀ must be
/// positive: the zero-coupling medium has no soliton sector.
pub fn k_from_amplitude(nu0: f64, eps0: f64, delta: f64) -> Result<f64> {
    if !(nu0.is_finite() && eps0.is_finite() && delta.is_finite()) {
        return Err(Error::InvalidParameter(
            "k_from_amplitude arguments must be finite".into(),
        ));
    }
    if nu0 <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "coupling constant needs ν₀ > 0, got {nu0}"
        )));
    }
    let denom = eps0 * eps0 + delta * delta;
    if denom == 0.0 {
        return Err(Error::InvalidParameter(
            "soliton spectral point ε₀ + iΔ must not be the origin".into(),
        ));
    }
    Ok(nu0 / (8.0 * denom))
}

/// Laboratory scale factors attached to a normalized parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitScales {
    /// Pulse length t_p in microseconds; the unit of τ and ζ.
    pub pulse_length_us: f64,
    /// Reference group-velocity fraction v/c used for the length scale.
    pub velocity_fraction: f64,
    /// In-medium pulse extent l_p = (v/c)·c·t_p in micrometers.
    pub pulse_extent_um: f64,
    /// Free-space length c·t_p in meters; one unit of ζ in the lab frame.
    pub zeta_unit_m: f64,
}

/// Result of [`normalize_units`]: the coupling strength in working units
/// plus the scale factors to undo the normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedUnits {
    /// ν₀ = Ω₀²/2 in inverse pulse lengths.
    pub nu0: f64,
    /// True when Ω₀ = 0: the medium decouples and has no soliton sector.
    pub degenerate: bool,
    pub scales: UnitScales,
}

/// Normalize a laboratory drive amplitude and pulse length.
///
/// `omega0` is the peak Rabi frequency in units of the inverse pulse length
/// (a dimensionless number once t_p is chosen); `pulse_length_us` is t_p in
/// microseconds and must be positive. Ω₀ = 0 is allowed and flagged as
/// degenerate so callers can reject it where a soliton is required.
pub fn normalize_units(omega0: f64, pulse_length_us: f64) -> Result<NormalizedUnits> {
    if !(omega0.is_finite() && pulse_length_us.is_finite()) {
        return Err(Error::InvalidParameter(
            "normalize_units arguments must be finite".into(),
        ));
    }
    if pulse_length_us <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "pulse length must be positive, got {pulse_length_us} µs"
        )));
    }
    let zeta_unit_m = SPEED_OF_LIGHT_M_PER_S * pulse_length_us * 1e-6;
    Ok(NormalizedUnits {
        nu0: 0.5 * omega0 * omega0,
        degenerate: omega0 == 0.0,
        scales: UnitScales {
            pulse_length_us,
            velocity_fraction: REFERENCE_VELOCITY_FRACTION,
            pulse_extent_um: REFERENCE_VELOCITY_FRACTION * zeta_unit_m * 1e6,
            zeta_unit_m,
        },
    })
}

/// Physical parameters of one run: coupling strength, soliton amplitude,
/// excited-state decay, detuning, and the Liouville coupling constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Atom-field coupling ν₀ = Ω₀²/2 ≥ 0 (zero means a transparent medium).
    pub nu0: f64,
    /// Soliton amplitude ε₀ ≠ 0 (sign selects the phase-front direction).
    pub eps0: f64,
    /// Excited-level population decay rate γ ≥ 0.
    pub gamma: f64,
    /// One-photon detuning Δ.
    pub delta: f64,
    /// Liouville coupling constant k.
    pub k: f64,
    /// True when k was derived from (ν₀, ε₀, Δ); false for explicit
    /// overrides, which decouple the Liouville sector from the field sector.
    pub k_constrained: bool,
}

impl PhysicalParams {
    /// Parameters with k tied to the amplitude, k = ν₀/(8(ε₀² + Δ²)).
    ///
    /// ν₀ = 0 is accepted (transparent medium, k = 0) so propagation
    /// scenarios without coupling remain expressible; soliton construction
    /// rejects such parameters separately.
    pub fn new(nu0: f64, eps0: f64, gamma: f64, delta: f64) -> Result<Self> {
        if !(nu0.is_finite() && eps0.is_finite() && gamma.is_finite() && delta.is_finite()) {
            return Err(Error::InvalidParameter(
                "physical parameters must be finite".into(),
            ));
        }
        if nu0 < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "coupling ν₀ must be nonnegative, got {nu0}"
            )));
        }
        if eps0 == 0.0 {
            return Err(Error::InvalidParameter(
                "soliton amplitude ε₀ must be nonzero".into(),
            ));
        }
        if gamma < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "decay rate γ must be nonnegative, got {gamma}"
            )));
        }
        let k = if nu0 == 0.0 {
            0.0
        } else {
            k_from_amplitude(nu0, eps0, delta)?
        };
        Ok(PhysicalParams {
            nu0,
            eps0,
            gamma,
            delta,
            k,
            k_constrained: true,
        })
    }

    /// Replace k with an explicit value, breaking the amplitude constraint.
    ///
    /// Used to probe how the Liouville sector responds to a mismatched
    /// coupling constant; field/atom consistency checks will flag the result.
    pub fn with_k_override(mut self, k: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "k override must be positive and finite, got {k}"
            )));
        }
        self.k = k;
        self.k_constrained = false;
        Ok(self)
    }

    /// Peak Rabi frequency Ω₀ = √(2ν₀) implied by the coupling.
    pub fn omega0(&self) -> f64 {
        (2.0 * self.nu0).sqrt()
    }
}

/// Uniform lattice in the light-cone coordinates: τ spans the retarded-time
/// window, ζ the propagation depth starting at the medium entry face ζ = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationGrid {
    pub tau_min: f64,
    pub tau_max: f64,
    pub n_tau: usize,
    pub zeta_max: f64,
    pub n_zeta: usize,
}

impl SimulationGrid {
    pub fn new(
        tau_min: f64,
        tau_max: f64,
        n_tau: usize,
        zeta_max: f64,
        n_zeta: usize,
    ) -> Result<Self> {
        if !(tau_min.is_finite() && tau_max.is_finite() && zeta_max.is_finite()) {
            return Err(Error::InvalidParameter("grid bounds must be finite".into()));
        }
        if tau_max <= tau_min {
            return Err(Error::InvalidParameter(format!(
                "grid needs tau_max > tau_min, got [{tau_min}, {tau_max}]"
            )));
        }
        if zeta_max <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "grid needs zeta_max > 0, got {zeta_max}"
            )));
        }
        if n_tau < 2 || n_zeta < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 2 nodes per axis, got {n_tau} × {n_zeta}"
            )));
        }
        Ok(SimulationGrid {
            tau_min,
            tau_max,
            n_tau,
            zeta_max,
            n_zeta,
        })
    }

    /// Grid with spacings at most the defaults h_τ = 0.02/max(|ε₀|, s, 1)
    /// and h_ζ = h_τ/(4 v_max), where `field_scale` s is the largest Rabi
    /// amplitude in play and `v_max` the largest group velocity on the
    /// window. Node counts are rounded up so the spans are covered exactly.
    pub fn with_default_resolution(
        tau_min: f64,
        tau_max: f64,
        zeta_max: f64,
        eps0: f64,
        field_scale: f64,
        v_max: f64,
    ) -> Result<Self> {
        if !(v_max.is_finite() && v_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "default resolution needs v_max > 0, got {v_max}"
            )));
        }
        let h_tau = 0.02 / eps0.abs().max(field_scale.abs()).max(1.0);
        let h_zeta = h_tau / (4.0 * v_max);
        let n_tau = ((tau_max - tau_min) / h_tau).ceil() as usize + 1;
        let n_zeta = (zeta_max / h_zeta).ceil() as usize + 1;
        SimulationGrid::new(tau_min, tau_max, n_tau.max(2), zeta_max, n_zeta.max(2))
    }

    pub fn h_tau(&self) -> f64 {
        (self.tau_max - self.tau_min) / (self.n_tau - 1) as f64
    }

    pub fn h_zeta(&self) -> f64 {
        self.zeta_max / (self.n_zeta - 1) as f64
    }

    /// Retarded time of column j.
    pub fn tau(&self, j: usize) -> f64 {
        self.tau_min + j as f64 * self.h_tau()
    }

    /// Propagation depth of row i.
    pub fn zeta(&self, i: usize) -> f64 {
        i as f64 * self.h_zeta()
    }

    /// All τ nodes in order.
    pub fn taus(&self) -> Vec<f64> {
        (0..self.n_tau).map(|j| self.tau(j)).collect()
    }

    /// All ζ nodes in order.
    pub fn zetas(&self) -> Vec<f64> {
        (0..self.n_zeta).map(|i| self.zeta(i)).collect()
    }

    /// Same window with both spacings halved (n → 2n − 1): every node of
    /// the coarse grid is a node of the refined grid.
    pub fn refined(&self) -> SimulationGrid {
        SimulationGrid {
            tau_min: self.tau_min,
            tau_max: self.tau_max,
            n_tau: 2 * self.n_tau - 1,
            zeta_max: self.zeta_max,
            n_zeta: 2 * self.n_zeta - 1,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n_tau * self.n_zeta
    }
}

/// Amplitudes of the three atomic levels at one point: the two ground
/// levels ψ₁, ψ₂ and the excited level ψ₃.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomState {
    pub psi1: C64,
    pub psi2: C64,
    pub psi3: C64,
}

impl AtomState {
    /// Dark state (1, 0, 0): all population in ground level 1.
    pub const DARK: AtomState = AtomState {
        psi1: C64::new(1.0, 0.0),
        psi2: C64::new(0.0, 0.0),
        psi3: C64::new(0.0, 0.0),
    };

    pub fn new(psi1: C64, psi2: C64, psi3: C64) -> Self {
        AtomState { psi1, psi2, psi3 }
    }

    /// Total population |ψ₁|² + |ψ₂|² + |ψ₃|².
    pub fn norm_sq(&self) -> f64 {
        self.psi1.norm_sqr() + self.psi2.norm_sqr() + self.psi3.norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        [self.psi1, self.psi2, self.psi3]
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Probe and control envelopes at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldPair {
    pub omega_a: C64,
    pub omega_b: C64,
}

impl FieldPair {
    pub const ZERO: FieldPair = FieldPair {
        omega_a: C64::new(0.0, 0.0),
        omega_b: C64::new(0.0, 0.0),
    };

    pub fn new(omega_a: C64, omega_b: C64) -> Self {
        FieldPair { omega_a, omega_b }
    }

    /// Combined intensity |Ω_a|² + |Ω_b|².
    pub fn intensity(&self) -> f64 {
        self.omega_a.norm_sqr() + self.omega_b.norm_sqr()
    }
}
