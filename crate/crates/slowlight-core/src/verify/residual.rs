//! Finite-difference residual evaluation for every reduced equation.
//!
//! All stencils are centered and second order: first derivatives from the
//! two-point difference, the mixed derivative from the four corner points.
//! Residuals are evaluated on the interior of the lattice only, so each
//! entry covers (n_ζ − 2)·(n_τ − 2) points.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::solver::SolutionGrids;

use super::{EquationId, ResidualEntry};

/// Points whose local term scale falls below this fraction of the grid
/// peak scale are excluded from relative statistics.
const MASK_FLOOR: f64 = 1e-6;

/// Collects |residual| and local-scale pairs for one equation, then
/// reduces them to a [`ResidualEntry`].
pub(super) struct Accumulator {
    equation: EquationId,
    h_zeta: f64,
    h_tau: f64,
    samples: Vec<(f64, f64)>,
}

impl Accumulator {
    pub(super) fn new(equation: EquationId, h_zeta: f64, h_tau: f64, capacity: usize) -> Self {
        Accumulator { equation, h_zeta, h_tau, samples: Vec::with_capacity(capacity) }
    }

    pub(super) fn push(&mut self, residual: f64, scale: f64) {
        self.samples.push((residual.abs(), scale));
    }

    pub(super) fn finish(self) -> ResidualEntry {
        let points = self.samples.len();
        let scale_peak = self.samples.iter().fold(0.0f64, |acc, &(_, s)| acc.max(s));
        let threshold = MASK_FLOOR * scale_peak;
        let mut max_abs = 0.0f64;
        let mut sum_sq_abs = 0.0;
        let mut max_rel = 0.0f64;
        let mut sum_sq_rel = 0.0;
        let mut kept = 0usize;
        for &(r, s) in &self.samples {
            max_abs = max_abs.max(r);
            sum_sq_abs += r * r;
            if s > threshold {
                let rel = r / s;
                max_rel = max_rel.max(rel);
                sum_sq_rel += rel * rel;
                kept += 1;
            }
        }
        let rms_abs = if points > 0 { (sum_sq_abs / points as f64).sqrt() } else { 0.0 };
        let rms_rel = if kept > 0 { (sum_sq_rel / kept as f64).sqrt() } else { 0.0 };
        ResidualEntry {
            equation: self.equation,
            max_abs,
            rms_abs,
            max_rel,
            rms_rel,
            scale_peak,
            points,
            masked: points - kept,
            h_zeta: self.h_zeta,
            h_tau: self.h_tau,
        }
    }
}

fn check_interior(n_zeta: usize, n_tau: usize) -> Result<()> {
    if n_zeta < 3 || n_tau < 3 {
        return Err(Error::InvalidParameter(format!(
            "residual stencils need at least a 3×3 lattice, got {n_zeta}×{n_tau}"
        )));
    }
    Ok(())
}

fn check_shapes(name: &str, a: &Array2<f64>, b: &Array2<f64>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::InvalidParameter(format!(
            "{name} grid is {:?} but ρ grid is {:?}",
            b.dim(),
            a.dim()
        )));
    }
    Ok(())
}

fn d_tau(f: &Array2<f64>, i: usize, j: usize, h: f64) -> f64 {
    (f[[i, j + 1]] - f[[i, j - 1]]) / (2.0 * h)
}

fn d_zeta(f: &Array2<f64>, i: usize, j: usize, h: f64) -> f64 {
    (f[[i + 1, j]] - f[[i - 1, j]]) / (2.0 * h)
}

fn d_mixed(f: &Array2<f64>, i: usize, j: usize, h_zeta: f64, h_tau: f64) -> f64 {
    (f[[i + 1, j + 1]] - f[[i + 1, j - 1]] - f[[i - 1, j + 1]] + f[[i - 1, j - 1]])
        / (4.0 * h_zeta * h_tau)
}

fn d_tau_c(f: &Array2<C64>, i: usize, j: usize, h: f64) -> C64 {
    (f[[i, j + 1]] - f[[i, j - 1]]) / (2.0 * h)
}

fn d_zeta_c(f: &Array2<C64>, i: usize, j: usize, h: f64) -> C64 {
    (f[[i + 1, j]] - f[[i - 1, j]]) / (2.0 * h)
}

/// Residual of the log-envelope field equation ∂_ζ∂_τρ + k e^{−2ρ}.
///
/// A constant grid ρ ≡ c has an exactly vanishing mixed stencil, so its
/// residual is the source term k e^{−2c} at every point and the relative
/// deviation is exactly one.
pub fn residual_liouville(rho: &Array2<f64>, k: f64, h_zeta: f64, h_tau: f64) -> Result<ResidualEntry> {
    let (n_zeta, n_tau) = rho.dim();
    check_interior(n_zeta, n_tau)?;
    let mut acc = Accumulator::new(EquationId::Liouville, h_zeta, h_tau, (n_zeta - 2) * (n_tau - 2));
    for i in 1..n_zeta - 1 {
        for j in 1..n_tau - 1 {
            let mixed = d_mixed(rho, i, j, h_zeta, h_tau);
            let source = k * (-2.0 * rho[[i, j]]).exp();
            acc.push(mixed + source, mixed.abs().max(source.abs()));
        }
    }
    Ok(acc.finish())
}

/// Residuals of the constraint sector on (ρ, η) grids with the modulation
/// source 𝒜 = ∂_τm broadcast down each column: the η-constraint, the
/// relaxation flux relation, and the three dilaton-potential forms.
pub fn residual_constraints(
    rho: &Array2<f64>,
    eta: &Array2<f64>,
    source: &Array2<f64>,
    k: f64,
    gamma: f64,
    h_zeta: f64,
    h_tau: f64,
) -> Result<Vec<ResidualEntry>> {
    let (n_zeta, n_tau) = rho.dim();
    check_interior(n_zeta, n_tau)?;
    check_shapes("η", rho, eta)?;
    check_shapes("source", rho, source)?;
    let exp_m2rho = rho.mapv(|r| (-2.0 * r).exp());
    let eta_sq = eta.mapv(|e| e * e);
    let capacity = (n_zeta - 2) * (n_tau - 2);
    let mut acc_constraint =
        Accumulator::new(EquationId::EtaConstraint, h_zeta, h_tau, capacity);
    let mut acc_flux = Accumulator::new(EquationId::DissipationFlux, h_zeta, h_tau, capacity);
    let mut acc_rho = Accumulator::new(EquationId::DilatonRho, h_zeta, h_tau, capacity);
    let mut acc_eta = Accumulator::new(EquationId::DilatonEta, h_zeta, h_tau, capacity);
    let mut acc_source = Accumulator::new(EquationId::DilatonSource, h_zeta, h_tau, capacity);
    for i in 1..n_zeta - 1 {
        for j in 1..n_tau - 1 {
            let e = exp_m2rho[[i, j]];
            let a = source[[i, j]];
            let mixed_eta = d_mixed(eta, i, j, h_zeta, h_tau);
            let dt_rho = d_tau(rho, i, j, h_tau);
            let dz_eta = d_zeta(eta, i, j, h_zeta);

            let advect = dt_rho * dz_eta;
            let pull = k * eta[[i, j]] * e;
            acc_constraint.push(
                mixed_eta + advect - pull,
                mixed_eta.abs().max(advect.abs()).max(pull.abs()),
            );

            let dt_e = 4.0 * k * d_tau(&exp_m2rho, i, j, h_tau);
            let relax = 4.0 * k * gamma * e;
            let dz_e = d_zeta(&exp_m2rho, i, j, h_zeta);
            let dz_eta_sq = d_zeta(&eta_sq, i, j, h_zeta);
            acc_flux.push(
                dt_e + relax + dz_e + dz_eta_sq,
                dt_e.abs().max(relax.abs()).max(dz_e.abs()).max(dz_eta_sq.abs()),
            );

            let mixed_rho = d_mixed(rho, i, j, h_zeta, h_tau);
            let curvature = k * e;
            acc_rho.push(mixed_rho + curvature, mixed_rho.abs().max(curvature.abs()));

            let drive = 2.0 * k * a * e;
            let restore = 2.0 * k * eta[[i, j]] * e;
            acc_eta.push(
                mixed_eta + drive - restore,
                mixed_eta.abs().max(drive.abs()).max(restore.abs()),
            );

            acc_source.push(
                mixed_eta + 2.0 * advect - drive,
                mixed_eta.abs().max(2.0 * advect.abs()).max(drive.abs()),
            );
        }
    }
    Ok(vec![
        acc_constraint.finish(),
        acc_flux.finish(),
        acc_rho.finish(),
        acc_eta.finish(),
        acc_source.finish(),
    ])
}

/// How far the relaxation-flux residual of a loss-free (ρ, η) pair sits
/// from its leading-order prediction 4kγe^{−2ρ} once the relaxation rate
/// γ is switched on: max |R − 4kγe^{−2ρ}| over the interior, normalized
/// by the peak of 4kγe^{−2ρ}.
pub fn dissipation_witness_deviation(
    rho: &Array2<f64>,
    eta: &Array2<f64>,
    k: f64,
    gamma: f64,
    h_zeta: f64,
    h_tau: f64,
) -> Result<f64> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "relaxation witness needs γ > 0, got γ = {gamma}"
        )));
    }
    let (n_zeta, n_tau) = rho.dim();
    check_interior(n_zeta, n_tau)?;
    check_shapes("η", rho, eta)?;
    let exp_m2rho = rho.mapv(|r| (-2.0 * r).exp());
    let eta_sq = eta.mapv(|e| e * e);
    let mut worst = 0.0f64;
    let mut witness_peak = 0.0f64;
    let mut gaps = Vec::with_capacity((n_zeta - 2) * (n_tau - 2));
    for i in 1..n_zeta - 1 {
        for j in 1..n_tau - 1 {
            let witness = 4.0 * k * gamma * exp_m2rho[[i, j]];
            let residual = 4.0 * k * d_tau(&exp_m2rho, i, j, h_tau)
                + witness
                + d_zeta(&exp_m2rho, i, j, h_zeta)
                + d_zeta(&eta_sq, i, j, h_zeta);
            witness_peak = witness_peak.max(witness);
            gaps.push((residual - witness).abs());
        }
    }
    if witness_peak <= 0.0 {
        return Err(Error::InvalidParameter(
            "relaxation witness vanishes on the whole interior".into(),
        ));
    }
    for gap in gaps {
        worst = worst.max(gap / witness_peak);
    }
    Ok(worst)
}

/// Residuals of the field–atom sector on solution grids: the two field
/// equations, the three amplitude equations, and the intensity and phase
/// balance laws. The worst channel per point feeds the statistics.
pub fn residual_mb(grids: &SolutionGrids) -> Result<Vec<ResidualEntry>> {
    let nu0 = grids.params.nu0;
    if nu0 == 0.0 {
        return Err(Error::InvalidParameter(
            "field–atom residuals are undefined at ν₀ = 0: the flux laws divide by ν₀".into(),
        ));
    }
    let gamma = grids.params.gamma;
    let (n_zeta, n_tau) = grids.omega_a.dim();
    check_interior(n_zeta, n_tau)?;
    let h_zeta = grids.grid.h_zeta();
    let h_tau = grids.grid.h_tau();
    let capacity = (n_zeta - 2) * (n_tau - 2);
    let mut acc_maxwell = Accumulator::new(EquationId::Maxwell, h_zeta, h_tau, capacity);
    let mut acc_schrodinger =
        Accumulator::new(EquationId::Schrodinger, h_zeta, h_tau, capacity);
    let mut acc_intensity = Accumulator::new(EquationId::IntensityFlux, h_zeta, h_tau, capacity);
    let mut acc_phase = Accumulator::new(EquationId::PhaseFlux, h_zeta, h_tau, capacity);

    let p3_sq = grids.psi3.mapv(|z| z.norm_sqr());
    let intensity = ndarray::Zip::from(&grids.omega_a)
        .and(&grids.omega_b)
        .map_collect(|a, b| a.norm_sqr() + b.norm_sqr());

    let half_i = C64::new(0.0, 0.5);
    let i_nu0 = C64::new(0.0, nu0);
    let inv_2nu0 = 1.0 / (2.0 * nu0);
    for i in 1..n_zeta - 1 {
        for j in 1..n_tau - 1 {
            let oa = grids.omega_a[[i, j]];
            let ob = grids.omega_b[[i, j]];
            let p1 = grids.psi1[[i, j]];
            let p2 = grids.psi2[[i, j]];
            let p3 = grids.psi3[[i, j]];

            let dz_oa = d_zeta_c(&grids.omega_a, i, j, h_zeta);
            let dz_ob = d_zeta_c(&grids.omega_b, i, j, h_zeta);
            let src_a = i_nu0 * p3 * p1.conj();
            let src_b = i_nu0 * p3 * p2.conj();
            let res_maxwell = (dz_oa - src_a).norm().max((dz_ob - src_b).norm());
            let scale_maxwell = dz_oa
                .norm()
                .max(src_a.norm())
                .max(dz_ob.norm())
                .max(src_b.norm());
            acc_maxwell.push(res_maxwell, scale_maxwell);

            let dt_p1 = d_tau_c(&grids.psi1, i, j, h_tau);
            let dt_p2 = d_tau_c(&grids.psi2, i, j, h_tau);
            let dt_p3 = d_tau_c(&grids.psi3, i, j, h_tau);
            let pump_1 = half_i * oa.conj() * p3;
            let pump_2 = half_i * ob.conj() * p3;
            let decay = p3 * (0.5 * gamma);
            let drive = half_i * (oa * p1 + ob * p2);
            let res_schrodinger = (dt_p1 - pump_1)
                .norm()
                .max((dt_p2 - pump_2).norm())
                .max((dt_p3 + decay - drive).norm());
            let scale_schrodinger = dt_p1
                .norm()
                .max(pump_1.norm())
                .max(dt_p2.norm())
                .max(pump_2.norm())
                .max(dt_p3.norm())
                .max(decay.norm())
                .max(0.5 * (oa * p1).norm())
                .max(0.5 * (ob * p2).norm());
            acc_schrodinger.push(res_schrodinger, scale_schrodinger);

            let dt_pop = d_tau(&p3_sq, i, j, h_tau);
            let loss = gamma * p3_sq[[i, j]];
            let flux = inv_2nu0 * d_zeta(&intensity, i, j, h_zeta);
            acc_intensity.push(
                dt_pop + loss + flux,
                dt_pop.abs().max(loss.abs()).max(flux.abs()),
            );

            let rotation = p3.conj() * dt_p3;
            let twist_a = oa.conj() * dz_oa * inv_2nu0;
            let twist_b = ob.conj() * dz_ob * inv_2nu0;
            acc_phase.push(
                rotation.im + twist_a.im + twist_b.im,
                rotation.norm().max(twist_a.norm()).max(twist_b.norm()),
            );
        }
    }
    Ok(vec![
        acc_maxwell.finish(),
        acc_schrodinger.finish(),
        acc_intensity.finish(),
        acc_phase.finish(),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AtomState, FieldPair, PhysicalParams, SimulationGrid};
    use crate::modulation::ModulationProfile;
    use crate::soliton::SolitonSolution;
    use crate::solver::{simulate, AtomInit, BoundarySpec, FieldScheme, Scenario};

    #[test]
    fn constant_rho_residual_is_the_exact_source_term() {
        let c = 0.3;
        let k = 0.0625;
        let rho = Array2::from_elem((9, 9), c);
        let entry = residual_liouville(&rho, k, 0.1, 0.1).unwrap();
        let source = k * (-2.0 * c).exp();
        assert_eq!(entry.max_abs, source);
        assert_eq!(entry.max_rel, 1.0);
        assert_eq!(entry.masked, 0);
        assert_eq!(entry.points, 49);
    }

    #[test]
    fn static_dark_constraint_sector_vanishes_identically() {
        let c = -0.2;
        let k = 0.0625;
        let rho = Array2::from_elem((7, 8), c);
        let eta = Array2::zeros((7, 8));
        let source = Array2::zeros((7, 8));
        let entries = residual_constraints(&rho, &eta, &source, k, 0.0, 0.05, 0.05).unwrap();
        assert_eq!(entries.len(), 5);
        for entry in &entries {
            if entry.equation == EquationId::DilatonRho {
                assert_eq!(entry.max_abs, k * (-2.0 * c).exp());
            } else {
                assert_eq!(entry.max_abs, 0.0, "{}", entry.equation.as_str());
            }
        }
    }

    #[test]
    fn tiny_lattices_are_rejected() {
        let rho = Array2::zeros((2, 9));
        assert!(residual_liouville(&rho, 0.1, 0.1, 0.1).is_err());
        let rho = Array2::zeros((9, 2));
        let eta = Array2::zeros((9, 2));
        let source = Array2::zeros((9, 2));
        assert!(residual_constraints(&rho, &eta, &source, 0.1, 0.0, 0.1, 0.1).is_err());
    }

    #[test]
    fn mismatched_grid_shapes_are_rejected() {
        let rho = Array2::zeros((9, 9));
        let eta = Array2::zeros((9, 8));
        let source = Array2::zeros((9, 9));
        let err = residual_constraints(&rho, &eta, &source, 0.1, 0.0, 0.1, 0.1).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn control_only_march_has_vanishing_field_atom_residuals() {
        let params = PhysicalParams::new(4.5, 3.0, 0.0, 0.0).unwrap();
        let grid = SimulationGrid::new(0.0, 2.0, 21, 1.0, 9).unwrap();
        let scenario = Scenario {
            params,
            grid,
            boundary: BoundarySpec::ControlOnly { omega0: 3.0 },
            atom_init: AtomInit::UniformDark,
            scheme: FieldScheme::Heun,
        };
        let grids = simulate(&scenario).unwrap();
        let entries = residual_mb(&grids).unwrap();
        for entry in &entries {
            assert!(
                entry.max_abs <= 1e-14,
                "{}: {:.3e}",
                entry.equation.as_str(),
                entry.max_abs
            );
        }
        // Every participating term vanishes, so the mask drops all points
        // rather than reporting 0/0 deviations.
        let maxwell = &entries[0];
        assert_eq!(maxwell.masked, maxwell.points);
        assert_eq!(maxwell.max_rel, 0.0);
    }

    #[test]
    fn zero_carrier_coupling_is_rejected_for_field_residuals() {
        let params = PhysicalParams::new(0.0, 3.0, 0.0, 0.0).unwrap();
        let grid = SimulationGrid::new(0.0, 1.0, 9, 1.0, 9).unwrap();
        let scenario = Scenario {
            params,
            grid,
            boundary: BoundarySpec::Samples(vec![FieldPair::ZERO; 9]),
            atom_init: AtomInit::Uniform(AtomState::DARK),
            scheme: FieldScheme::Heun,
        };
        let grids = simulate(&scenario).unwrap();
        let err = residual_mb(&grids).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn relaxation_witness_matches_leading_order_on_loss_free_grids() {
        let params = PhysicalParams::new(4.5, 3.0, 0.0, 0.0).unwrap();
        let profile = ModulationProfile::exponential(1.0).unwrap();
        let sol = SolitonSolution::new(params, profile, 2.0).unwrap();
        let grid = SimulationGrid::new(-3.0, 3.0, 601, 6.0, 601).unwrap();
        let (rho, eta, _) = sol.liouville_grids(&grid).unwrap();
        let h_zeta = grid.h_zeta();
        let h_tau = grid.h_tau();
        let dev = dissipation_witness_deviation(&rho, &eta, params.k, 0.1, h_zeta, h_tau).unwrap();
        assert!(dev < 0.02, "witness deviation {dev:.3e}");
        // The gap is pure stencil error, so a stronger relaxation rate
        // only grows the witness and shrinks the deviation.
        let dev_strong =
            dissipation_witness_deviation(&rho, &eta, params.k, 1.0, h_zeta, h_tau).unwrap();
        assert!(dev_strong < dev);
    }

    #[test]
    fn relaxation_witness_requires_positive_rate() {
        let rho = Array2::zeros((5, 5));
        let eta = Array2::zeros((5, 5));
        assert!(dissipation_witness_deviation(&rho, &eta, 0.0625, 0.0, 0.1, 0.1).is_err());
        assert!(dissipation_witness_deviation(&rho, &eta, 0.0625, -0.1, 0.1, 0.1).is_err());
    }
}
