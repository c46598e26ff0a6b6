//! Pulse-center tracking on solution grids.
//!
//! Each τ column gets a center depth ζ_c(τ) from the ζ-argmax of |Ω_a|
//! refined by a parabolic fit through the neighboring nodes. Columns are
//! dropped when the peak is too dim to localize (below 1e−4 of the grid
//! peak), sits on the ζ boundary, or has no downward curvature; the
//! surviving columns must form a run of at least five so the slope fits
//! are conditioned.

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{linear_fit, parabolic_peak_offset};
use crate::solver::SolutionGrids;

/// Columns dimmer than this fraction of the grid peak are not tracked.
const AMPLITUDE_FLOOR: f64 = 1e-4;
/// Slope window: five columns, clamped at the ends of the valid run.
const VELOCITY_WINDOW: usize = 5;

/// Measured pulse-center trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryEstimate {
    /// τ of each tracked column.
    pub taus: Vec<f64>,
    /// Interpolated center depth per tracked column.
    pub zeta_c: Vec<f64>,
    /// Center velocity dζ_c/dτ per tracked column, from a five-column
    /// least-squares window.
    pub velocity: Vec<f64>,
    /// Least-squares slope through the whole tracked run.
    pub mean_velocity: f64,
    /// ζ_c at the end of the run minus ζ_c at its start.
    pub travel: f64,
    /// Distance between the travel above and the same measurement with
    /// every other ζ row: a step-halving error estimate. Infinite when
    /// the halved lattice cannot localize the endpoints.
    pub travel_uncertainty: f64,
    /// τ index of the first tracked column.
    pub first_index: usize,
    /// True when tracking ends before the τ window does.
    pub truncated: bool,
}

/// Center of one intensity column by argmax plus parabolic refinement.
/// `positions` maps a row index to ζ; `stride` walks the column.
fn column_center(
    amps: ArrayView1<'_, f64>,
    stride: usize,
    zeta_of: impl Fn(usize) -> f64,
    h_zeta: f64,
    floor_sq: f64,
) -> Option<f64> {
    let n = amps.len().div_ceil(stride);
    if n < 3 {
        return None;
    }
    let at = |r: usize| amps[r * stride];
    let mut best = 0usize;
    for r in 1..n {
        if at(r) > at(best) {
            best = r;
        }
    }
    if at(best) <= floor_sq || best == 0 || best == n - 1 {
        return None;
    }
    let offset = parabolic_peak_offset(at(best - 1), at(best), at(best + 1)).ok()?;
    Some(zeta_of(best) + offset * h_zeta)
}

/// Tracks the probe peak across the grid and fits center velocities.
pub fn measure_trajectory(grids: &SolutionGrids) -> Result<TrajectoryEstimate> {
    let (n_zeta, n_tau) = grids.omega_a.dim();
    if n_zeta < 7 {
        return Err(Error::InvalidParameter(format!(
            "center tracking needs at least 7 ζ rows, got {n_zeta}"
        )));
    }
    let amps = grids.omega_a.mapv(|z| z.norm_sqr());
    let peak_sq = amps.iter().fold(0.0f64, |acc, &a| acc.max(a));
    if peak_sq <= 0.0 {
        return Err(Error::FitFailed("the probe envelope vanishes on the whole grid".into()));
    }
    let floor_sq = (AMPLITUDE_FLOOR * AMPLITUDE_FLOOR) * peak_sq;
    let grid = &grids.grid;
    let h_zeta = grid.h_zeta();

    let centers: Vec<Option<f64>> = (0..n_tau)
        .map(|j| {
            column_center(amps.column(j), 1, |r| grid.zeta(r), h_zeta, floor_sq)
        })
        .collect();
    let Some(first_index) = centers.iter().position(|c| c.is_some()) else {
        return Err(Error::FitFailed(format!(
            "no column has a localizable peak above {AMPLITUDE_FLOOR:.0e} of the grid peak"
        )));
    };
    let mut last_index = first_index;
    while last_index + 1 < n_tau && centers[last_index + 1].is_some() {
        last_index += 1;
    }
    let len = last_index - first_index + 1;
    if len < VELOCITY_WINDOW {
        return Err(Error::FitFailed(format!(
            "only {len} consecutive columns are trackable; slope fits need {VELOCITY_WINDOW}"
        )));
    }

    let taus: Vec<f64> = (first_index..=last_index).map(|j| grid.tau(j)).collect();
    let zeta_c: Vec<f64> =
        (first_index..=last_index).map(|j| centers[j].unwrap()).collect();
    let mut velocity = Vec::with_capacity(len);
    for p in 0..len {
        let lo = p.saturating_sub(VELOCITY_WINDOW / 2).min(len - VELOCITY_WINDOW);
        let hi = lo + VELOCITY_WINDOW;
        let (slope, _) = linear_fit(&taus[lo..hi], &zeta_c[lo..hi])?;
        velocity.push(slope);
    }
    let (mean_velocity, _) = linear_fit(&taus, &zeta_c)?;
    let travel = zeta_c[len - 1] - zeta_c[0];

    // Step-halving estimate: re-localize on every other ζ row and compare
    // the travel between the outermost columns both lattices can track.
    let mut halved_first: Option<(f64, f64)> = None;
    let mut halved_last: Option<(f64, f64)> = None;
    for (p, j) in (first_index..=last_index).enumerate() {
        let halved = column_center(
            amps.column(j),
            2,
            |r| grid.zeta(2 * r),
            2.0 * h_zeta,
            floor_sq,
        );
        if let Some(zc) = halved {
            if halved_first.is_none() {
                halved_first = Some((zeta_c[p], zc));
            }
            halved_last = Some((zeta_c[p], zc));
        }
    }
    let travel_uncertainty = match (halved_first, halved_last) {
        (Some((fine_a, coarse_a)), Some((fine_b, coarse_b))) if fine_a != fine_b => {
            ((fine_b - fine_a) - (coarse_b - coarse_a)).abs()
        }
        _ => f64::INFINITY,
    };

    Ok(TrajectoryEstimate {
        taus,
        zeta_c,
        velocity,
        mean_velocity,
        travel,
        travel_uncertainty,
        first_index,
        truncated: last_index < n_tau - 1,
    })
}
