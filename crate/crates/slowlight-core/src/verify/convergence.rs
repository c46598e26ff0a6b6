//! Grid-convergence studies against the analytic oracle.
//!
//! The scenario's lattice is refined by node doubling (2n−1 per axis, so
//! every coarse node persists) and the marched fields are compared with
//! the exact solution at each level. The observed order between levels
//! is p = log₂(e_h/e_{h/2}): the predictor–corrector march sits at two,
//! the first-order control scheme at one, and feeding the reference back
//! in as the subject pins the error to the floor, which is flagged
//! rather than reported as an order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{field_sup_error, from_analytic, simulate, BoundarySpec, Scenario, SolutionGrids};

/// Errors at or below this level are round-off, not discretization.
const ERROR_FLOOR: f64 = 1e-11;
/// Error growth beyond this factor between levels breaks monotonicity.
const MONOTONE_SLACK: f64 = 1.2;

/// What produces the fields under study at each level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ConvergenceSubject {
    /// March the scenario at each level.
    #[default]
    March,
    /// Evaluate the analytic reference as the subject; errors sit at the
    /// floor, exercising the flag paths.
    AnalyticReference,
}

/// One refinement level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceLevel {
    pub n_zeta: usize,
    pub n_tau: usize,
    pub h_zeta: f64,
    pub h_tau: f64,
    /// Worst envelope deviation from the oracle over the lattice,
    /// relative to the oracle's peak probe amplitude.
    pub sup_error: f64,
}

/// Outcome of a refinement sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub subject: ConvergenceSubject,
    pub levels: Vec<ConvergenceLevel>,
    /// Observed order between consecutive levels; `None` where either
    /// error is zero or not finite.
    pub orders: Vec<Option<f64>>,
    /// False when some level grew the error by more than 20%.
    pub monotone: bool,
    /// True when any level reached the round-off floor.
    pub at_floor: bool,
}

/// Runs `levels` refinement levels of the scenario against its analytic
/// boundary oracle.
pub fn convergence_study(
    scenario: &Scenario,
    levels: usize,
    subject: ConvergenceSubject,
) -> Result<ConvergenceReport> {
    if levels < 3 {
        return Err(Error::InvalidParameter(format!(
            "a convergence study needs at least 3 levels to confirm a trend, got {levels}"
        )));
    }
    let BoundarySpec::Analytic(sol) = &scenario.boundary else {
        return Err(Error::InvalidParameter(
            "convergence studies need an analytic boundary as the error oracle".into(),
        ));
    };
    let mut grid = scenario.grid;
    let mut out = Vec::with_capacity(levels);
    for level in 0..levels {
        if level > 0 {
            grid = grid.refined();
        }
        let reference = from_analytic(sol, &grid)?;
        let test: SolutionGrids = match subject {
            ConvergenceSubject::March => {
                let scenario_level = Scenario { grid, ..scenario.clone() };
                simulate(&scenario_level)?
            }
            ConvergenceSubject::AnalyticReference => from_analytic(sol, &grid)?,
        };
        let sup_error = field_sup_error(&test, &reference)?;
        out.push(ConvergenceLevel {
            n_zeta: grid.n_zeta,
            n_tau: grid.n_tau,
            h_zeta: grid.h_zeta(),
            h_tau: grid.h_tau(),
            sup_error,
        });
    }
    let mut orders = Vec::with_capacity(levels - 1);
    let mut monotone = true;
    let mut at_floor = false;
    for pair in out.windows(2) {
        let (coarse, fine) = (pair[0].sup_error, pair[1].sup_error);
        if fine > MONOTONE_SLACK * coarse {
            monotone = false;
        }
        let p = (coarse / fine).log2();
        orders.push(p.is_finite().then_some(p));
    }
    for level in &out {
        if level.sup_error <= ERROR_FLOOR {
            at_floor = true;
        }
    }
    Ok(ConvergenceReport { subject, levels: out, orders, monotone, at_floor })
}
