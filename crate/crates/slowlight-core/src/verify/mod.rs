//! Residual suites, convention adjudication, trajectory measurement, and
//! grid-convergence studies.
//!
//! Every reduced equation of the model gets a finite-difference residual:
//! centered second-order stencils on the interior of the lattice, so a
//! field set that solves an equation shows residuals shrinking as O(h²)
//! under refinement, while a non-solution pins its residual at the
//! equation's own scale. Relative statistics normalize each point by the
//! largest participating term and mask points where every term is far
//! below the grid peak (the soliton tails), avoiding 0/0 verdicts.

mod adjudicate;
mod central;
mod convergence;
mod residual;
mod trajectory;

pub use adjudicate::{adjudicate_conventions, Adjudication, ConventionScore};
pub use central::{check_central, CentralCheck};
pub use convergence::{convergence_study, ConvergenceLevel, ConvergenceReport, ConvergenceSubject};
pub use residual::{
    dissipation_witness_deviation, residual_constraints, residual_liouville, residual_mb,
};
pub use trajectory::{measure_trajectory, TrajectoryEstimate};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SimulationGrid;
use crate::soliton::SolitonSolution;
use crate::solver::{from_analytic, SolutionGrids};

/// Reduced equations covered by the residual suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquationId {
    /// ∂_ζ∂_τρ + k e^{−2ρ}: the log-envelope field equation.
    Liouville,
    /// ∂_ζ∂_τρ − (∂_ηV/4) e^{−2ρ} with V(η) = 4k(𝒜 − η): the same
    /// relation written through the dilaton potential.
    DilatonRho,
    /// ∂_ζ∂_τη + ∂_τρ·∂_ζη − k η e^{−2ρ}: the control-envelope
    /// constraint coupled to ρ.
    EtaConstraint,
    /// ∂_ζ∂_τη + (V/2) e^{−2ρ}: the dilaton equation for η with the
    /// modulation source 𝒜 = ∂_τm.
    DilatonEta,
    /// ∂_ζ∂_τη + 2∂_τρ·∂_ζη − 2k𝒜 e^{−2ρ}: the sourced dilaton
    /// constraint.
    DilatonSource,
    /// (4k(∂_τ + γ) + ∂_ζ) e^{−2ρ} + ∂_ζη²: the auxiliary flux relation
    /// that carries the relaxation term.
    DissipationFlux,
    /// ∂_τ|ψ₃|² + γ|ψ₃|² + (1/2ν₀)∂_ζ(|Ω_a|² + |Ω_b|²): excited-level
    /// population balance against the field-intensity flux.
    IntensityFlux,
    /// Im(ψ₃*∂_τψ₃) + (1/2ν₀)(Im(Ω_a*∂_ζΩ_a) + Im(Ω_b*∂_ζΩ_b)): the
    /// phase-balance law; identically zero under the real-envelope
    /// convention, so it fires only on phase-corrupted data.
    PhaseFlux,
    /// |ψ₃|² − (2k/ν₀)|Ω_a|²: the population lock between the excited
    /// level and the probe intensity.
    PopulationLock,
    /// |ψ₃ − ĝ·√(2k/ν₀)·Ω_a| with a grid-fitted unit phase ĝ: the
    /// amplitude-level lock behind the population one.
    SpectralLock,
    /// Field equations ∂_ζΩ_a = iν₀ψ₃ψ₁*, ∂_ζΩ_b = iν₀ψ₃ψ₂*, worst
    /// channel per point.
    Maxwell,
    /// The three amplitude equations, worst component per point.
    Schrodinger,
}

impl EquationId {
    pub fn as_str(self) -> &'static str {
        match self {
            EquationId::Liouville => "liouville",
            EquationId::DilatonRho => "dilaton-rho",
            EquationId::EtaConstraint => "eta-constraint",
            EquationId::DilatonEta => "dilaton-eta",
            EquationId::DilatonSource => "dilaton-source",
            EquationId::DissipationFlux => "dissipation-flux",
            EquationId::IntensityFlux => "intensity-flux",
            EquationId::PhaseFlux => "phase-flux",
            EquationId::PopulationLock => "population-lock",
            EquationId::SpectralLock => "spectral-lock",
            EquationId::Maxwell => "maxwell",
            EquationId::Schrodinger => "schrodinger",
        }
    }
}

/// Residual statistics for one equation on one lattice.
///
/// Absolute statistics run over every interior point. Relative ones
/// divide by the largest participating term at each point and skip
/// points where that local scale is below 1e−6 of its grid peak, so
/// tails where every term vanishes don't report 0/0 noise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualEntry {
    pub equation: EquationId,
    pub max_abs: f64,
    pub rms_abs: f64,
    pub max_rel: f64,
    pub rms_rel: f64,
    /// Grid peak of the local term scale; the mask threshold is 1e−6 of
    /// this.
    pub scale_peak: f64,
    /// Interior points evaluated.
    pub points: usize,
    /// Points excluded from the relative statistics.
    pub masked: usize,
    pub h_zeta: f64,
    pub h_tau: f64,
}

/// Full residual sweep over one solution data set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualReport {
    /// Sign-convention label of the data, when known.
    pub convention: Option<String>,
    pub n_zeta: usize,
    pub n_tau: usize,
    pub h_zeta: f64,
    pub h_tau: f64,
    pub entries: Vec<ResidualEntry>,
    /// Lock metrics behind the population/spectral entries, when the
    /// probe support is non-empty.
    pub central: Option<CentralCheck>,
}

impl ResidualReport {
    /// Entry lookup by equation.
    pub fn entry(&self, equation: EquationId) -> Option<&ResidualEntry> {
        self.entries.iter().find(|e| e.equation == equation)
    }
}

/// Residual sweep of the field–atom equations on marched or reference
/// grids: field, amplitude, flux, and lock residuals.
pub fn mb_residual_report(grids: &SolutionGrids) -> Result<ResidualReport> {
    let mut entries = residual_mb(grids)?;
    let (central, lock_entries) = central::central_entries(grids)?;
    entries.extend(lock_entries);
    Ok(ResidualReport {
        convention: grids.convention.clone(),
        n_zeta: grids.grid.n_zeta,
        n_tau: grids.grid.n_tau,
        h_zeta: grids.grid.h_zeta(),
        h_tau: grids.grid.h_tau(),
        entries,
        central,
    })
}

/// Complete residual sweep of the exact solution on a lattice: the
/// Liouville sector evaluated from the closed form, plus the field–atom
/// sector on the reference grids.
pub fn analytic_residual_report(
    sol: &SolitonSolution,
    grid: &SimulationGrid,
) -> Result<ResidualReport> {
    if grid.n_zeta < 3 || grid.n_tau < 4 {
        return Err(Error::InvalidParameter(format!(
            "residual sweep needs at least 3×4 nodes, got {}×{}",
            grid.n_zeta, grid.n_tau
        )));
    }
    let k = sol.params().k;
    let gamma = sol.params().gamma;
    let (rho, eta, source) = sol.liouville_grids(grid)?;
    let h_zeta = grid.h_zeta();
    let h_tau = grid.h_tau();
    let mut entries = vec![residual_liouville(&rho, k, h_zeta, h_tau)?];
    entries.extend(residual_constraints(&rho, &eta, &source, k, gamma, h_zeta, h_tau)?);
    let grids = from_analytic(sol, grid)?;
    let mb = mb_residual_report(&grids)?;
    entries.extend(mb.entries);
    Ok(ResidualReport {
        convention: Some(sol.convention().label()),
        n_zeta: grid.n_zeta,
        n_tau: grid.n_tau,
        h_zeta,
        h_tau,
        entries,
        central: mb.central,
    })
}
