//! Direct numerical integration of the coupled field–atom system on the
//! characteristic (ζ, τ) lattice.
//!
//! The probe and control envelopes obey ∂_ζΩ_a = iν₀ψ₃ψ₁* and
//! ∂_ζΩ_b = iν₀ψ₃ψ₂*, while the amplitudes obey ∂_τψ₁ = (i/2)Ω_a*ψ₃,
//! ∂_τψ₂ = (i/2)Ω_b*ψ₃, ∂_τψ₃ = −(γ/2)ψ₃ + (i/2)(Ω_aψ₁ + Ω_bψ₂). The
//! march walks outward in ζ: each row is a full τ sweep of the atomic
//! equations (classical Runge–Kutta, driving fields interpolated to the
//! half steps), and the field update between rows is a Heun
//! predictor–corrector whose corrector re-integrates the atoms at the
//! predicted row. The ζ direction carries the stiff coupling, so the
//! field order sets the scheme order; a first-order Euler update is kept
//! as a test control for convergence studies.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AtomState, FieldPair, PhysicalParams, SimulationGrid};
use crate::modulation::ControlWaveform;
use crate::numeric::cubic_midpoints;
use crate::soliton::{rk4_atom_step, SolitonSolution};

/// Marching-scheme identifier stamped into export manifests. Bump on any
/// change that alters computed bytes.
pub const SCHEME_VERSION: &str = "mb-march/1";

/// Largest tolerated |Ω_a(ζ=0, τ_min)| relative to the boundary peak when
/// every row starts from the uniform dark state: beyond this the probe is
/// already inside the window at the τ edge and the dark start is wrong.
pub const DARK_COMPAT_LIMIT: f64 = 1e-8;

/// Probe/control boundary condition: the field column at ζ = 0.
#[derive(Debug, Clone)]
pub enum BoundarySpec {
    /// Exact soliton envelopes evaluated on the boundary column.
    Analytic(SolitonSolution),
    /// No probe, constant control Ω_b = Ω₀: the transparency scenario.
    ControlOnly { omega0: f64 },
    /// No probe, tabulated real control Ω_b(τ) on the grid's τ lattice.
    ControlSamples(ControlWaveform),
    /// Arbitrary tabulated field pairs on the grid's τ lattice.
    Samples(Vec<FieldPair>),
}

/// Atomic state at τ = tau_min for each ζ row.
#[derive(Debug, Clone)]
pub enum AtomInit {
    /// Dark state (1, 0, 0) everywhere; requires a dark-compatible
    /// boundary (the probe must not yet have entered the window).
    UniformDark,
    /// One fixed state for every row.
    Uniform(AtomState),
    /// Exact asymptotic state of the analytic soliton at (ζ_i, tau_min),
    /// obtained by integrating in from the dark region below the window.
    Analytic(SolitonSolution),
}

/// Field-update order between ζ rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FieldScheme {
    /// Heun predictor–corrector, second order in h_ζ.
    #[default]
    Heun,
    /// Forward Euler, first order; convergence-study control only.
    EulerFirstOrder,
}

impl FieldScheme {
    pub fn label(self) -> &'static str {
        match self {
            FieldScheme::Heun => "heun-2",
            FieldScheme::EulerFirstOrder => "euler-1",
        }
    }
}

/// How a grid set was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridSource {
    /// ζ-marched by [`simulate`].
    Simulated,
    /// Evaluated from the exact solution by [`from_analytic`].
    AnalyticReference,
}

impl GridSource {
    pub fn label(self) -> &'static str {
        match self {
            GridSource::Simulated => "simulated",
            GridSource::AnalyticReference => "analytic-reference",
        }
    }
}

/// Complete description of one marching run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub params: PhysicalParams,
    pub grid: SimulationGrid,
    pub boundary: BoundarySpec,
    pub atom_init: AtomInit,
    pub scheme: FieldScheme,
}

/// Per-run health numbers recorded alongside the grids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnostics {
    /// max ||ψ|² − 1| over each ζ row.
    pub norm_deviation: Vec<f64>,
    /// Largest |Im Ω| anywhere; zero to round-off under the real-field
    /// convention.
    pub field_imag_max: f64,
    /// Largest field magnitude anywhere, the scale for relative bounds.
    pub field_scale: f64,
    /// |Ω_a(0, τ_min)| relative to the boundary peak (the dark-start
    /// mismatch actually present, whatever the atom init).
    pub boundary_dark_mismatch: f64,
}

/// Field and amplitude grids over the full (ζ, τ) lattice, ζ-major.
#[derive(Debug, Clone)]
pub struct SolutionGrids {
    pub grid: SimulationGrid,
    pub params: PhysicalParams,
    pub scheme: FieldScheme,
    pub source: GridSource,
    /// Sign-convention label when the producer knows it.
    pub convention: Option<String>,
    pub omega_a: Array2<C64>,
    pub omega_b: Array2<C64>,
    pub psi1: Array2<C64>,
    pub psi2: Array2<C64>,
    pub psi3: Array2<C64>,
    pub diagnostics: Diagnostics,
}

impl SolutionGrids {
    /// Field pair at lattice node (i, j).
    pub fn field_at(&self, i: usize, j: usize) -> FieldPair {
        FieldPair::new(self.omega_a[[i, j]], self.omega_b[[i, j]])
    }

    /// Atomic state at lattice node (i, j).
    pub fn atom_at(&self, i: usize, j: usize) -> AtomState {
        AtomState::new(self.psi1[[i, j]], self.psi2[[i, j]], self.psi3[[i, j]])
    }
}

fn maxwell_rhs(nu0: f64, atom: &AtomState) -> (C64, C64) {
    let i_nu = C64::new(0.0, nu0);
    (i_nu * atom.psi3 * atom.psi1.conj(), i_nu * atom.psi3 * atom.psi2.conj())
}

/// τ sweep of the atomic equations along one ζ row.
///
/// Classical Runge–Kutta from `init` at the first sample; the half-step
/// driving fields come from cubic four-point interpolation, so the local
/// error stays O(h⁵) despite the discrete field row.
pub fn advance_atoms(
    fields: &[FieldPair],
    init: AtomState,
    gamma: f64,
    h: f64,
) -> Result<Vec<AtomState>> {
    if fields.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "atom sweep needs at least 4 field samples for cubic midpoints, got {}",
            fields.len()
        )));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidParameter(format!("atom sweep needs h > 0, got {h}")));
    }
    let oa: Vec<C64> = fields.iter().map(|f| f.omega_a).collect();
    let ob: Vec<C64> = fields.iter().map(|f| f.omega_b).collect();
    let oa_mid = cubic_midpoints(&oa);
    let ob_mid = cubic_midpoints(&ob);
    let mut out = Vec::with_capacity(fields.len());
    out.push(init);
    let mut state = init;
    for j in 0..fields.len() - 1 {
        let mid = FieldPair::new(oa_mid[j], ob_mid[j]);
        state = rk4_atom_step(state, &fields[j], &mid, &fields[j + 1], gamma, h);
        if !state.is_finite() {
            return Err(Error::Numeric(format!(
                "atomic sweep lost finiteness at τ index {}",
                j + 1
            )));
        }
        out.push(state);
    }
    Ok(out)
}

/// Field update from one ζ row to the next.
///
/// With `atoms_predicted` absent this is the forward-Euler predictor
/// Ω + h·RHS(atoms); with it, the Heun corrector averaging the right-hand
/// sides at the current and predicted rows.
pub fn advance_fields(
    fields: &[FieldPair],
    atoms: &[AtomState],
    atoms_predicted: Option<&[AtomState]>,
    params: &PhysicalParams,
    h_zeta: f64,
) -> Vec<FieldPair> {
    let nu0 = params.nu0;
    match atoms_predicted {
        None => fields
            .iter()
            .zip(atoms)
            .map(|(f, a)| {
                let (ra, rb) = maxwell_rhs(nu0, a);
                FieldPair::new(f.omega_a + ra * h_zeta, f.omega_b + rb * h_zeta)
            })
            .collect(),
        Some(pred) => fields
            .iter()
            .zip(atoms)
            .zip(pred)
            .map(|((f, a), p)| {
                let (ra0, rb0) = maxwell_rhs(nu0, a);
                let (ra1, rb1) = maxwell_rhs(nu0, p);
                FieldPair::new(
                    f.omega_a + (ra0 + ra1) * (0.5 * h_zeta),
                    f.omega_b + (rb0 + rb1) * (0.5 * h_zeta),
                )
            })
            .collect(),
    }
}

fn boundary_row(scenario: &Scenario) -> Result<Vec<FieldPair>> {
    let grid = &scenario.grid;
    let n = grid.n_tau;
    let row = match &scenario.boundary {
        BoundarySpec::Analytic(sol) => {
            let taus = grid.taus();
            let fs = sol.phase_values(&taus)?;
            let mut row = Vec::with_capacity(n);
            for (tau, f) in taus.iter().zip(&fs) {
                let (m, dm) = sol.profile().eval(*tau)?;
                row.push(sol.fields_from_phase(sol.phase_from_integral(0.0, *f), m, dm));
            }
            row
        }
        BoundarySpec::ControlOnly { omega0 } => {
            if !omega0.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "control boundary needs finite Ω₀, got {omega0}"
                )));
            }
            vec![FieldPair::new(C64::new(0.0, 0.0), C64::new(*omega0, 0.0)); n]
        }
        BoundarySpec::ControlSamples(waveform) => {
            if waveform.len() != n {
                return Err(Error::InvalidParameter(format!(
                    "control waveform has {} samples but the grid has {} τ nodes",
                    waveform.len(),
                    n
                )));
            }
            let scale = grid.h_tau().abs().max(grid.tau_min.abs()).max(1.0);
            if (waveform.tau0 - grid.tau_min).abs() > 1e-9 * scale
                || (waveform.spacing - grid.h_tau()).abs() > 1e-9 * grid.h_tau()
            {
                return Err(Error::InvalidParameter(format!(
                    "control waveform lattice (τ₀ = {}, h = {}) does not match the grid \
                     (τ₀ = {}, h = {})",
                    waveform.tau0,
                    waveform.spacing,
                    grid.tau_min,
                    grid.h_tau()
                )));
            }
            waveform
                .omega
                .iter()
                .map(|w| FieldPair::new(C64::new(0.0, 0.0), C64::new(*w, 0.0)))
                .collect()
        }
        BoundarySpec::Samples(samples) => {
            if samples.len() != n {
                return Err(Error::InvalidParameter(format!(
                    "boundary has {} samples but the grid has {} τ nodes",
                    samples.len(),
                    n
                )));
            }
            samples.clone()
        }
    };
    for (j, f) in row.iter().enumerate() {
        if !(f.omega_a.is_finite() && f.omega_b.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "boundary field at τ index {j} is not finite"
            )));
        }
    }
    Ok(row)
}

fn initial_states(scenario: &Scenario) -> Result<Vec<AtomState>> {
    let grid = &scenario.grid;
    match &scenario.atom_init {
        AtomInit::UniformDark => Ok(vec![AtomState::DARK; grid.n_zeta]),
        AtomInit::Uniform(state) => {
            if !state.is_finite() {
                return Err(Error::InvalidParameter(
                    "uniform atomic initial state is not finite".into(),
                ));
            }
            Ok(vec![*state; grid.n_zeta])
        }
        AtomInit::Analytic(sol) => {
            let f_min = sol.phase_values(&[grid.tau_min])?[0];
            let (m_min, _) = sol.profile().eval(grid.tau_min)?;
            Ok(grid
                .zetas()
                .iter()
                .map(|&zeta| {
                    sol.atoms_from_phase(sol.phase_from_integral(zeta, f_min), m_min)
                })
                .collect())
        }
    }
}

fn dark_mismatch(boundary: &[FieldPair]) -> f64 {
    let peak = boundary.iter().map(|f| f.omega_a.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        0.0
    } else {
        boundary[0].omega_a.norm() / peak
    }
}

/// March the coupled system across the full grid.
///
/// Deterministic: the ζ loop is sequential, the per-row maps preserve
/// index order, so outputs are bitwise independent of thread count.
pub fn simulate(scenario: &Scenario) -> Result<SolutionGrids> {
    let grid = scenario.grid;
    let params = scenario.params;
    if grid.n_tau < 4 {
        return Err(Error::InvalidParameter(format!(
            "marching needs at least 4 τ nodes, got {}",
            grid.n_tau
        )));
    }
    let boundary = boundary_row(scenario)?;
    let mismatch = dark_mismatch(&boundary);
    if matches!(scenario.atom_init, AtomInit::UniformDark) && mismatch > DARK_COMPAT_LIMIT {
        return Err(Error::InvalidParameter(format!(
            "boundary is not dark-compatible: |Ω_a| at τ_min is {mismatch:.3e} of the \
             boundary peak (limit {DARK_COMPAT_LIMIT:.0e}); start the window earlier or \
             use an analytic atom init"
        )));
    }
    let inits = initial_states(scenario)?;
    let (nz, nt) = (grid.n_zeta, grid.n_tau);
    let h_tau = grid.h_tau();
    let h_zeta = grid.h_zeta();
    let gamma = params.gamma;

    let mut omega_a = Array2::zeros((nz, nt));
    let mut omega_b = Array2::zeros((nz, nt));
    let mut psi1 = Array2::zeros((nz, nt));
    let mut psi2 = Array2::zeros((nz, nt));
    let mut psi3 = Array2::zeros((nz, nt));
    let mut norm_dev = vec![0.0f64; nz];

    let store_fields = |arr_a: &mut Array2<C64>, arr_b: &mut Array2<C64>,
                        i: usize,
                        row: &[FieldPair]| {
        for (j, f) in row.iter().enumerate() {
            arr_a[[i, j]] = f.omega_a;
            arr_b[[i, j]] = f.omega_b;
        }
    };
    let store_atoms = |p1: &mut Array2<C64>, p2: &mut Array2<C64>, p3: &mut Array2<C64>,
                       i: usize,
                       row: &[AtomState]| {
        for (j, s) in row.iter().enumerate() {
            p1[[i, j]] = s.psi1;
            p2[[i, j]] = s.psi2;
            p3[[i, j]] = s.psi3;
        }
    };

    let mut fields = boundary;
    let mut atoms = advance_atoms(&fields, inits[0], gamma, h_tau)
        .map_err(|e| Error::Numeric(format!("row 0: {e}")))?;
    store_fields(&mut omega_a, &mut omega_b, 0, &fields);
    store_atoms(&mut psi1, &mut psi2, &mut psi3, 0, &atoms);
    norm_dev[0] = atoms.iter().map(|s| (s.norm_sq() - 1.0).abs()).fold(0.0, f64::max);

    for i in 0..nz - 1 {
        let predictor = advance_fields(&fields, &atoms, None, &params, h_zeta);
        let next_fields = match scenario.scheme {
            FieldScheme::EulerFirstOrder => predictor,
            FieldScheme::Heun => {
                let atoms_pred = advance_atoms(&predictor, inits[i + 1], gamma, h_tau)
                    .map_err(|e| {
                        Error::Numeric(format!(
                            "predictor at ζ index {} (last stable row {}): {e}",
                            i + 1,
                            i
                        ))
                    })?;
                advance_fields(&fields, &atoms, Some(&atoms_pred), &params, h_zeta)
            }
        };
        let next_atoms =
            advance_atoms(&next_fields, inits[i + 1], gamma, h_tau).map_err(|e| {
                Error::Numeric(format!(
                    "corrector at ζ index {} (last stable row {}): {e}",
                    i + 1,
                    i
                ))
            })?;
        store_fields(&mut omega_a, &mut omega_b, i + 1, &next_fields);
        store_atoms(&mut psi1, &mut psi2, &mut psi3, i + 1, &next_atoms);
        norm_dev[i + 1] =
            next_atoms.iter().map(|s| (s.norm_sq() - 1.0).abs()).fold(0.0, f64::max);
        fields = next_fields;
        atoms = next_atoms;
    }

    let mut imag_max = 0.0f64;
    let mut scale = 0.0f64;
    for z in omega_a.iter().chain(omega_b.iter()) {
        imag_max = imag_max.max(z.im.abs());
        scale = scale.max(z.norm());
    }
    let convention = match &scenario.boundary {
        BoundarySpec::Analytic(sol) => Some(sol.convention().label()),
        _ => None,
    };
    Ok(SolutionGrids {
        grid,
        params,
        scheme: scenario.scheme,
        source: GridSource::Simulated,
        convention,
        omega_a,
        omega_b,
        psi1,
        psi2,
        psi3,
        diagnostics: Diagnostics {
            norm_deviation: norm_dev,
            field_imag_max: imag_max,
            field_scale: scale,
            boundary_dark_mismatch: mismatch,
        },
    })
}

/// Evaluate the exact solution on a lattice in the same container the
/// solver produces, for oracle comparisons and residual sweeps.
pub fn from_analytic(sol: &SolitonSolution, grid: &SimulationGrid) -> Result<SolutionGrids> {
    let (omega_a, omega_b) = sol.fields_grid(grid)?;
    let (psi1, psi2, psi3) = sol.atoms_grid(grid)?;
    let (nz, nt) = (grid.n_zeta, grid.n_tau);
    let mut norm_dev = vec![0.0f64; nz];
    for i in 0..nz {
        for j in 0..nt {
            let n = psi1[[i, j]].norm_sqr() + psi2[[i, j]].norm_sqr() + psi3[[i, j]].norm_sqr();
            norm_dev[i] = norm_dev[i].max((n - 1.0).abs());
        }
    }
    let mut imag_max = 0.0f64;
    let mut scale = 0.0f64;
    for z in omega_a.iter().chain(omega_b.iter()) {
        imag_max = imag_max.max(z.im.abs());
        scale = scale.max(z.norm());
    }
    let mismatch = {
        let first_col_peak = (0..nt).map(|j| omega_a[[0, j]].norm()).fold(0.0, f64::max);
        if first_col_peak == 0.0 {
            0.0
        } else {
            omega_a[[0, 0]].norm() / first_col_peak
        }
    };
    Ok(SolutionGrids {
        grid: *grid,
        params: *sol.params(),
        scheme: FieldScheme::Heun,
        source: GridSource::AnalyticReference,
        convention: Some(sol.convention().label()),
        omega_a,
        omega_b,
        psi1,
        psi2,
        psi3,
        diagnostics: Diagnostics {
            norm_deviation: norm_dev,
            field_imag_max: imag_max,
            field_scale: scale,
            boundary_dark_mismatch: mismatch,
        },
    })
}

/// Relative sup-norm field distance between co-located grids, normalized
/// by the reference peak |Ω_a|.
pub fn field_sup_error(test: &SolutionGrids, reference: &SolutionGrids) -> Result<f64> {
    if test.omega_a.dim() != reference.omega_a.dim() {
        return Err(Error::InvalidParameter(format!(
            "grid shapes differ: {:?} vs {:?}",
            test.omega_a.dim(),
            reference.omega_a.dim()
        )));
    }
    let peak = reference.omega_a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::InvalidParameter(
            "reference grid has no probe field to normalize against".into(),
        ));
    }
    let mut err = 0.0f64;
    for (t, r) in test.omega_a.iter().zip(reference.omega_a.iter()) {
        err = err.max((t - r).norm());
    }
    for (t, r) in test.omega_b.iter().zip(reference.omega_b.iter()) {
        err = err.max((t - r).norm());
    }
    Ok(err / peak)
}

/// [`field_sup_error`] restricted to the shared nodes of a once-refined
/// pair: `fine` must be the 2n−1 refinement of `coarse` on both axes.
pub fn field_sup_error_nested(coarse: &SolutionGrids, fine: &SolutionGrids) -> Result<f64> {
    let (cz, ct) = coarse.omega_a.dim();
    let (fz, ft) = fine.omega_a.dim();
    if fz != 2 * cz - 1 || ft != 2 * ct - 1 {
        return Err(Error::InvalidParameter(format!(
            "({fz} × {ft}) is not the node-doubled refinement of ({cz} × {ct})"
        )));
    }
    let peak = fine.omega_a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::InvalidParameter(
            "fine grid has no probe field to normalize against".into(),
        ));
    }
    let mut err = 0.0f64;
    for i in 0..cz {
        for j in 0..ct {
            err = err.max((coarse.omega_a[[i, j]] - fine.omega_a[[2 * i, 2 * j]]).norm());
            err = err.max((coarse.omega_b[[i, j]] - fine.omega_b[[2 * i, 2 * j]]).norm());
        }
    }
    Ok(err / peak)
}
