//! The excited-level lock |ψ₃|² = (2k/ν₀)|Ω_a|² and its amplitude-level
//! refinement ψ₃ = ĝ·√(2k/ν₀)·Ω_a with a single grid-wide unit phase ĝ.
//!
//! The intensity ratio is linear in k: data generated at one k and checked
//! at another report a deviation of |k_check/k_data − 1|, so a doubled
//! coupling constant reads as a deviation of exactly one.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PhysicalParams;
use crate::solver::SolutionGrids;

use super::residual::Accumulator;
use super::{EquationId, ResidualEntry};

/// Probe support: points with |Ω_a| at or below this fraction of the grid
/// peak carry no lock information and are excluded.
const SUPPORT_FLOOR: f64 = 1e-6;

/// Result of the excited-level lock check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CentralCheck {
    /// Worst |2k|Ω_a|²/(ν₀|ψ₃|²) − 1| over the probe support.
    pub amplitude_deviation: f64,
    /// Worst |ψ₃ − ĝ·√(2k/ν₀)·Ω_a| over the probe support, normalized by
    /// the peak of √(2k/ν₀)|Ω_a|.
    pub phase_deviation: f64,
    /// Fitted grid-wide unit phase ĝ.
    pub fitted_phase: C64,
    /// Points excluded for lying outside the probe support.
    pub masked_points: usize,
    pub total_points: usize,
}

/// Checks the lock between the excited-level population and the probe
/// intensity on matching Ω_a and ψ₃ grids.
pub fn check_central(
    omega_a: &Array2<C64>,
    psi3: &Array2<C64>,
    params: &PhysicalParams,
) -> Result<CentralCheck> {
    if omega_a.dim() != psi3.dim() {
        return Err(Error::InvalidParameter(format!(
            "Ω_a grid is {:?} but ψ₃ grid is {:?}",
            omega_a.dim(),
            psi3.dim()
        )));
    }
    if params.nu0 <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "the excited-level lock divides by ν₀, got ν₀ = {}",
            params.nu0
        )));
    }
    let peak = omega_a.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    if peak <= 0.0 {
        return Err(Error::InvalidParameter(
            "the probe envelope vanishes everywhere: the lock has no support".into(),
        ));
    }
    let floor = SUPPORT_FLOOR * peak;
    let scale = (2.0 * params.k / params.nu0).sqrt();

    let mut overlap = C64::new(0.0, 0.0);
    let mut supported = 0usize;
    for (oa, p3) in omega_a.iter().zip(psi3.iter()) {
        if oa.norm() > floor {
            overlap += p3 * oa.conj();
            supported += 1;
        }
    }
    if supported == 0 {
        return Err(Error::InvalidParameter(
            "the probe support is empty at the 1e-6 peak floor".into(),
        ));
    }
    let fitted_phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        C64::new(1.0, 0.0)
    };

    let ratio_factor = 2.0 * params.k / params.nu0;
    let phase_floor = scale * peak;
    let mut amplitude_deviation = 0.0f64;
    let mut phase_deviation = 0.0f64;
    for (oa, p3) in omega_a.iter().zip(psi3.iter()) {
        if oa.norm() <= floor {
            continue;
        }
        let ratio = ratio_factor * oa.norm_sqr() / p3.norm_sqr();
        amplitude_deviation = amplitude_deviation.max((ratio - 1.0).abs());
        let gap = (p3 - fitted_phase * scale * oa).norm();
        phase_deviation = phase_deviation.max(gap / phase_floor);
    }
    let total_points = omega_a.len();
    Ok(CentralCheck {
        amplitude_deviation,
        phase_deviation,
        fitted_phase,
        masked_points: total_points - supported,
        total_points,
    })
}

/// Lock metrics as residual entries over the full lattice, alongside the
/// summary check. Grids without probe support get no lock entries.
pub(super) fn central_entries(
    grids: &SolutionGrids,
) -> Result<(Option<CentralCheck>, Vec<ResidualEntry>)> {
    let peak = grids.omega_a.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    if peak <= 0.0 {
        return Ok((None, Vec::new()));
    }
    let check = check_central(&grids.omega_a, &grids.psi3, &grids.params)?;
    let h_zeta = grids.grid.h_zeta();
    let h_tau = grids.grid.h_tau();
    let n = grids.omega_a.len();
    let ratio_factor = 2.0 * grids.params.k / grids.params.nu0;
    let scale = ratio_factor.sqrt();
    let mut acc_population = Accumulator::new(EquationId::PopulationLock, h_zeta, h_tau, n);
    let mut acc_spectral = Accumulator::new(EquationId::SpectralLock, h_zeta, h_tau, n);
    for (oa, p3) in grids.omega_a.iter().zip(grids.psi3.iter()) {
        let predicted = ratio_factor * oa.norm_sqr();
        let measured = p3.norm_sqr();
        acc_population.push(predicted - measured, predicted.max(measured));
        let locked = check.fitted_phase * scale * oa;
        acc_spectral.push((p3 - locked).norm(), locked.norm().max(p3.norm()));
    }
    Ok((Some(check), vec![acc_population.finish(), acc_spectral.finish()]))
}
