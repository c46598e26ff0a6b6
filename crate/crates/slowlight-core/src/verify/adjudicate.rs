//! Selection of the field convention by residual evidence.
//!
//! The competing closed forms for the control envelope (and the sign
//! choices inside them) are scored by evaluating each candidate's fields
//! and amplitudes on a lattice and measuring the field-equation and
//! amplitude-equation residuals. The genuine solution's residuals are
//! pure stencil error and contract by four under refinement; a wrong
//! candidate carries an equation-level defect that refinement cannot
//! shrink. Static modulations cannot separate the two envelope forms
//! (their difference rides on ∂_τm), so a tie on a static profile is
//! re-scored on a dynamic probe profile.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PhysicalParams, SimulationGrid};
use crate::modulation::ModulationProfile;
use crate::soliton::{FieldConvention, SolitonSolution};
use crate::solver::from_analytic;

use super::{analytic_residual_report, residual_mb, ResidualReport};

/// A candidate only counts as consistent below this worst-equation
/// relative residual on the fine lattice.
const SCORE_CEILING: f64 = 0.02;
/// Refinement must shrink the score at least this much (second-order
/// stencils contract by four; defects contract by one).
const CONTRACTION: f64 = 3.0;
/// Scores at this floor are round-off; no contraction is demanded.
const SCORE_FLOOR: f64 = 1e-10;

/// Residual score of one candidate convention on the scoring lattices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConventionScore {
    pub label: String,
    /// Field-equation relative rms on the fine lattice.
    pub maxwell_rms_rel: f64,
    /// Amplitude-equation relative rms on the fine lattice.
    pub schrodinger_rms_rel: f64,
    /// Worst of the two families on the coarse lattice.
    pub coarse_score: f64,
    /// Worst of the two families on the fine lattice.
    pub fine_score: f64,
    /// True when the fine score is small and shrank like stencil error.
    pub converged: bool,
}

/// Outcome of the convention adjudication.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Adjudication {
    pub winner: FieldConvention,
    /// Scores from the decisive lattice: the caller's grid when it
    /// separates the candidates, the dynamic probe's otherwise.
    pub scores: Vec<ConventionScore>,
    /// True when a static profile tied and the dynamic probe decided.
    pub probed: bool,
    /// Full residual sweep of the winner on the caller's profile and grid.
    pub report: ResidualReport,
}

enum Pick {
    Winner(usize),
    Tie(usize),
    NoneConsistent(f64),
}

fn centered_phi0(
    params: PhysicalParams,
    profile: &ModulationProfile,
    grid: &SimulationGrid,
) -> Result<f64> {
    let probe = SolitonSolution::with_convention(
        params,
        profile.clone(),
        0.0,
        FieldConvention::adjudicated(),
    )?;
    let mid = probe.phase(0.5 * grid.zeta_max, 0.5 * (grid.tau_min + grid.tau_max))?;
    Ok(-mid)
}

fn score_candidates(
    params: PhysicalParams,
    profile: &ModulationProfile,
    grid: &SimulationGrid,
) -> Result<(Vec<FieldConvention>, Vec<ConventionScore>)> {
    let phi0 = centered_phi0(params, profile, grid)?;
    let fine_grid = grid.refined();
    let candidates = FieldConvention::candidates();
    let mut scores = Vec::with_capacity(candidates.len());
    for &candidate in &candidates {
        let sol = SolitonSolution::with_convention(params, profile.clone(), phi0, candidate)?;
        let coarse = worst_equation_score(&sol, grid)?;
        let (maxwell, schrodinger) = equation_scores(&sol, &fine_grid)?;
        let fine = maxwell.max(schrodinger);
        let converged =
            fine <= SCORE_CEILING && (fine <= coarse / CONTRACTION || fine <= SCORE_FLOOR);
        scores.push(ConventionScore {
            label: candidate.label(),
            maxwell_rms_rel: maxwell,
            schrodinger_rms_rel: schrodinger,
            coarse_score: coarse,
            fine_score: fine,
            converged,
        });
    }
    Ok((candidates, scores))
}

fn equation_scores(sol: &SolitonSolution, grid: &SimulationGrid) -> Result<(f64, f64)> {
    let grids = from_analytic(sol, grid)?;
    let entries = residual_mb(&grids)?;
    Ok((entries[0].rms_rel, entries[1].rms_rel))
}

fn worst_equation_score(sol: &SolitonSolution, grid: &SimulationGrid) -> Result<f64> {
    let (maxwell, schrodinger) = equation_scores(sol, grid)?;
    Ok(maxwell.max(schrodinger))
}

fn pick(scores: &[ConventionScore]) -> Pick {
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        if s.converged && best.is_none_or(|b| s.fine_score < scores[b].fine_score) {
            best = Some(i);
        }
    }
    let Some(best_idx) = best else {
        let floor = scores.iter().map(|s| s.fine_score).fold(f64::INFINITY, f64::min);
        return Pick::NoneConsistent(floor);
    };
    let best_score = scores[best_idx].fine_score;
    let tied = scores
        .iter()
        .filter(|s| s.converged && s.fine_score < CONTRACTION * best_score + 1e-15)
        .count();
    if tied > 1 {
        Pick::Tie(tied)
    } else {
        Pick::Winner(best_idx)
    }
}

/// Standard lattice for the dynamic probe: the exponential ramp crosses
/// m = 1 inside a τ window of ±3 and the phase sweeps four units in ζ.
fn probe_grid(params: &PhysicalParams) -> Result<SimulationGrid> {
    let zeta_max = 1.0 / (params.k * params.eps0.abs());
    SimulationGrid::new(-3.0, 3.0, 81, zeta_max, 81)
}

/// Scores every candidate convention on the given profile and grid and
/// returns the single consistent one.
///
/// Candidates whose residuals neither reach the score ceiling nor
/// contract under refinement are ruled out. A tie between surviving
/// candidates on a static profile is settled by re-scoring on the
/// exponential probe profile; a tie that survives the probe, or a tie on
/// an already-dynamic profile, is reported as ambiguous, and an empty
/// surviving set as inconsistent.
pub fn adjudicate_conventions(
    params: PhysicalParams,
    profile: &ModulationProfile,
    grid: &SimulationGrid,
) -> Result<Adjudication> {
    let (candidates, scores) = score_candidates(params, profile, grid)?;
    let (winner, probed, final_scores) = match pick(&scores) {
        Pick::Winner(i) => (candidates[i], false, scores),
        Pick::NoneConsistent(best) => return Err(Error::NoConsistentConvention { best }),
        Pick::Tie(tied) => {
            if !profile.is_static() {
                return Err(Error::AmbiguousConvention { tied });
            }
            let dynamic = ModulationProfile::exponential(1.0)?;
            let dynamic_grid = probe_grid(&params)?;
            let (probe_candidates, probe_scores) =
                score_candidates(params, &dynamic, &dynamic_grid)?;
            match pick(&probe_scores) {
                Pick::Winner(i) => (probe_candidates[i], true, probe_scores),
                Pick::Tie(tied) => return Err(Error::AmbiguousConvention { tied }),
                Pick::NoneConsistent(best) => {
                    return Err(Error::NoConsistentConvention { best })
                }
            }
        }
    };
    let sol = SolitonSolution::with_convention(
        params,
        profile.clone(),
        centered_phi0(params, profile, grid)?,
        winner,
    )?;
    let report = analytic_residual_report(&sol, grid)?;
    Ok(Adjudication { winner, scores: final_scores, probed, report })
}
