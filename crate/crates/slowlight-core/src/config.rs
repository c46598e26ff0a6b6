//! Run configuration: the TOML schema, strict parsing, and resolution into
//! the domain objects the run modes consume.
//!
//! A config is a flat document with one required key, `mode`, and optional
//! sections `[params]`, `[profile]`, `[soliton]`, `[grid]`, `[scenario]`,
//! `[convergence]`, `[output]`. Unknown keys are rejected with the parser's
//! line/column diagnostic. Every omitted value falls back to the
//! representative defaults (ν₀ = 4.5, ε₀ = 3, γ = 0, k tied to ν₀/(8ε₀²),
//! constant background m = −1), so `mode = "analytic"` alone is a complete
//! config. [`RunConfig::canonical_toml`] re-emits a parsed config with all
//! defaults materialized; parsing the emission reproduces the config
//! exactly.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PhysicalParams, SimulationGrid};
use crate::modulation::{
    profile_from_control, riccati_match_constant, ConstantControlRoots, ControlWaveform,
    ModulationProfile, Segment, SegmentKind,
};
use crate::soliton::{max_group_velocity, SolitonSolution};
use crate::solver::{AtomInit, BoundarySpec, FieldScheme, Scenario};
use crate::verify::ConvergenceSubject;

/// What the run computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    /// Evaluate the exact solution on the grid and export it.
    Analytic,
    /// March the coupled system and export the result.
    Simulate,
    /// Adjudicate the sign convention and run the residual suites.
    Verify,
    /// Analytic stopping distance plus a measured-travel comparison run.
    Stopping,
    /// Grid-refinement study of the marching scheme.
    Convergence,
}

impl RunMode {
    pub fn label(self) -> &'static str {
        match self {
            RunMode::Analytic => "analytic",
            RunMode::Simulate => "simulate",
            RunMode::Verify => "verify",
            RunMode::Stopping => "stopping",
            RunMode::Convergence => "convergence",
        }
    }
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// `[params]`: physical parameters. `nu0` and `omega0` are two spellings of
/// the same coupling (ν₀ = Ω₀²/2); giving both is allowed only when they
/// agree. `k` overrides the amplitude-tied value and unlocks the Liouville
/// sector from the field sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ParamsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega0: Option<f64>,
    #[serde(default = "default_eps0")]
    pub eps0: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
}

fn default_eps0() -> f64 {
    3.0
}

const DEFAULT_NU0: f64 = 4.5;

impl Default for ParamsSection {
    fn default() -> Self {
        ParamsSection {
            nu0: None,
            omega0: None,
            eps0: default_eps0(),
            gamma: 0.0,
            delta: 0.0,
            k: None,
        }
    }
}

impl ParamsSection {
    pub fn resolve(&self) -> Result<PhysicalParams> {
        let nu0 = match (self.nu0, self.omega0) {
            (None, None) => DEFAULT_NU0,
            (Some(nu0), None) => nu0,
            (None, Some(omega0)) => 0.5 * omega0 * omega0,
            (Some(nu0), Some(omega0)) => {
                let implied = 0.5 * omega0 * omega0;
                if (nu0 - implied).abs() > 1e-12 * nu0.abs().max(1.0) {
                    return Err(Error::Config(format!(
                        "params give nu0 = {nu0} and omega0 = {omega0}, but \
                         omega0²/2 = {implied}; drop one or make them agree"
                    )));
                }
                nu0
            }
        };
        let params = PhysicalParams::new(nu0, self.eps0, self.gamma, self.delta)?;
        match self.k {
            None => Ok(params),
            Some(k) => params.with_k_override(k),
        }
    }
}

/// Modulation family selector for `[profile]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    /// m ≡ m0.
    Constant,
    /// m = e^{ατ}, the switch-off ramp.
    Exponential,
    /// Continuous chain of constant/exponential segments.
    Piecewise,
    /// Constant m matched to a constant control amplitude.
    ConstantControl,
    /// m(τ) reconstructed from a sampled control waveform CSV.
    ControlSamples,
}

impl ProfileKind {
    fn label(self) -> &'static str {
        match self {
            ProfileKind::Constant => "constant",
            ProfileKind::Exponential => "exponential",
            ProfileKind::Piecewise => "piecewise",
            ProfileKind::ConstantControl => "constant-control",
            ProfileKind::ControlSamples => "control-samples",
        }
    }
}

/// Which root of the constant-control matching equation to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ControlBranch {
    /// Large-|m| slow branch, the transparency-limit root.
    #[default]
    Eit,
    /// Small-|m| fast branch.
    Fast,
}

/// One segment of a piecewise profile, flattened for the config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SegmentSpec {
    pub start: f64,
    pub end: f64,
    pub kind: SegmentSpecKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentSpecKind {
    Constant,
    Exponential,
}

impl SegmentSpec {
    fn resolve(&self, index: usize) -> Result<Segment> {
        let take = |value: Option<f64>, name: &str| {
            value.ok_or_else(|| {
                Error::Config(format!(
                    "profile segment {index} ({:?} kind) is missing '{name}'",
                    self.kind
                ))
            })
        };
        let forbid = |value: Option<f64>, name: &str| {
            if value.is_some() {
                Err(Error::Config(format!(
                    "profile segment {index} ({:?} kind) does not take '{name}'",
                    self.kind
                )))
            } else {
                Ok(())
            }
        };
        let kind = match self.kind {
            SegmentSpecKind::Constant => {
                forbid(self.scale, "scale")?;
                forbid(self.alpha, "alpha")?;
                forbid(self.reference, "reference")?;
                SegmentKind::Constant { level: take(self.level, "level")? }
            }
            SegmentSpecKind::Exponential => {
                forbid(self.level, "level")?;
                SegmentKind::Exponential {
                    scale: take(self.scale, "scale")?,
                    alpha: take(self.alpha, "alpha")?,
                    reference: self.reference.unwrap_or(0.0),
                }
            }
        };
        Ok(Segment { start: self.start, end: self.end, kind })
    }
}

/// `[profile]`: the modulation family and its parameters. Only the fields
/// belonging to the chosen kind may be present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ProfileSection {
    pub kind: ProfileKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments: Option<Vec<SegmentSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<ControlBranch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_initial: Option<f64>,
}

impl Default for ProfileSection {
    fn default() -> Self {
        ProfileSection {
            kind: ProfileKind::Constant,
            m0: Some(-1.0),
            alpha: None,
            segments: None,
            control: None,
            branch: None,
            csv: None,
            m_initial: None,
        }
    }
}

impl ProfileSection {
    /// Build the modulation profile. `eps0` feeds the constant-control
    /// matching and waveform reconstruction; `load_waveform` supplies the
    /// parsed CSV for `control-samples` so this module stays I/O-free.
    pub fn resolve(
        &self,
        eps0: f64,
        load_waveform: impl FnOnce(&str) -> Result<ControlWaveform>,
    ) -> Result<ModulationProfile> {
        self.check_fields()?;
        match self.kind {
            ProfileKind::Constant => ModulationProfile::constant(self.m0.unwrap_or(-1.0)),
            ProfileKind::Exponential => ModulationProfile::exponential(self.required_alpha()?),
            ProfileKind::Piecewise => {
                let specs = self.segments.as_ref().ok_or_else(|| {
                    Error::Config("piecewise profile needs a 'segments' list".into())
                })?;
                let mut segments = Vec::with_capacity(specs.len());
                for (i, spec) in specs.iter().enumerate() {
                    segments.push(spec.resolve(i)?);
                }
                ModulationProfile::piecewise(segments)
            }
            ProfileKind::ConstantControl => {
                let omega0 = self.control.ok_or_else(|| {
                    Error::Config("constant-control profile needs 'control'".into())
                })?;
                let m0 = match riccati_match_constant(omega0, eps0)? {
                    ConstantControlRoots::ZeroControl => 0.0,
                    ConstantControlRoots::Double(m) => m,
                    ConstantControlRoots::Pair { eit, other } => {
                        match self.branch.unwrap_or_default() {
                            ControlBranch::Eit => eit,
                            ControlBranch::Fast => other,
                        }
                    }
                };
                ModulationProfile::constant(m0)
            }
            ProfileKind::ControlSamples => {
                let path = self.csv.as_deref().ok_or_else(|| {
                    Error::Config("control-samples profile needs 'csv'".into())
                })?;
                let m_initial = self.m_initial.ok_or_else(|| {
                    Error::Config("control-samples profile needs 'm-initial'".into())
                })?;
                let waveform = load_waveform(path)?;
                profile_from_control(&waveform, m_initial, eps0)
            }
        }
    }

    fn required_alpha(&self) -> Result<f64> {
        self.alpha
            .ok_or_else(|| Error::Config("exponential profile needs 'alpha'".into()))
    }

    fn check_fields(&self) -> Result<()> {
        let (allowed, required): (&[&str], &[&str]) = match self.kind {
            ProfileKind::Constant => (&["m0"], &[]),
            ProfileKind::Exponential => (&["alpha"], &["alpha"]),
            ProfileKind::Piecewise => (&["segments"], &["segments"]),
            ProfileKind::ConstantControl => (&["control", "branch"], &["control"]),
            ProfileKind::ControlSamples => {
                (&["csv", "m-initial"], &["csv", "m-initial"])
            }
        };
        let present: &[(&str, bool)] = &[
            ("m0", self.m0.is_some()),
            ("alpha", self.alpha.is_some()),
            ("segments", self.segments.is_some()),
            ("control", self.control.is_some()),
            ("branch", self.branch.is_some()),
            ("csv", self.csv.is_some()),
            ("m-initial", self.m_initial.is_some()),
        ];
        for (name, is_set) in present {
            if *is_set && !allowed.contains(name) {
                return Err(Error::Config(format!(
                    "profile kind '{}' does not take '{name}'",
                    self.kind.label()
                )));
            }
            if !is_set && required.contains(name) {
                return Err(Error::Config(format!(
                    "profile kind '{}' needs '{name}'",
                    self.kind.label()
                )));
            }
        }
        Ok(())
    }
}

/// `[soliton]`: the phase offset φ₀ fixing where the soliton center sits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SolitonSection {
    #[serde(default = "default_phi0")]
    pub phi0: f64,
}

fn default_phi0() -> f64 {
    0.75
}

impl Default for SolitonSection {
    fn default() -> Self {
        SolitonSection { phi0: default_phi0() }
    }
}

/// `[grid]`: the (τ, ζ) window. Node counts are optional as a pair: give
/// both for an explicit lattice, or neither to get the default resolution
/// h_τ ≤ 0.02/max(|ε₀|, Ω₀, 1), h_ζ ≤ h_τ/(4 v_max).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct GridSection {
    #[serde(default)]
    pub tau_min: f64,
    #[serde(default = "default_tau_max")]
    pub tau_max: f64,
    #[serde(default = "default_zeta_max")]
    pub zeta_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_tau: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_zeta: Option<usize>,
}

fn default_tau_max() -> f64 {
    2.0
}

fn default_zeta_max() -> f64 {
    6.0
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            tau_min: 0.0,
            tau_max: default_tau_max(),
            zeta_max: default_zeta_max(),
            n_tau: None,
            n_zeta: None,
        }
    }
}

impl GridSection {
    pub fn resolve(
        &self,
        params: &PhysicalParams,
        profile: &ModulationProfile,
    ) -> Result<SimulationGrid> {
        match (self.n_tau, self.n_zeta) {
            (Some(n_tau), Some(n_zeta)) => {
                SimulationGrid::new(self.tau_min, self.tau_max, n_tau, self.zeta_max, n_zeta)
            }
            (None, None) => {
                let v_max =
                    max_group_velocity(profile, params.k, self.tau_min, self.tau_max)?;
                SimulationGrid::with_default_resolution(
                    self.tau_min,
                    self.tau_max,
                    self.zeta_max,
                    params.eps0,
                    params.omega0(),
                    v_max,
                )
            }
            _ => Err(Error::Config(
                "grid needs both n-tau and n-zeta, or neither for the default resolution"
                    .into(),
            )),
        }
    }
}

/// Boundary condition selector for `[scenario]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryKind {
    /// Exact soliton envelopes on the entry face.
    #[default]
    Analytic,
    /// No probe, constant control only.
    ControlOnly,
}

/// Atom initialization selector for `[scenario]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AtomInitKind {
    /// Exact asymptotic soliton state on the τ_min edge.
    #[default]
    Analytic,
    /// Dark state everywhere; the probe must not yet be inside the window.
    UniformDark,
}

/// `[scenario]`: how `simulate` runs are driven.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ScenarioSection {
    #[serde(default)]
    pub boundary: BoundaryKind,
    #[serde(default)]
    pub atom_init: AtomInitKind,
    #[serde(default)]
    pub scheme: FieldScheme,
    /// Control amplitude for the control-only boundary; defaults to the
    /// Ω₀ implied by the coupling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<f64>,
}

impl ScenarioSection {
    pub fn resolve(
        &self,
        params: PhysicalParams,
        grid: SimulationGrid,
        soliton: &SolitonSolution,
    ) -> Result<Scenario> {
        let boundary = match self.boundary {
            BoundaryKind::Analytic => BoundarySpec::Analytic(soliton.clone()),
            BoundaryKind::ControlOnly => BoundarySpec::ControlOnly {
                omega0: self.control.unwrap_or_else(|| params.omega0()),
            },
        };
        if self.control.is_some() && self.boundary != BoundaryKind::ControlOnly {
            return Err(Error::Config(
                "scenario 'control' only applies to the control-only boundary".into(),
            ));
        }
        let atom_init = match self.atom_init {
            AtomInitKind::Analytic => AtomInit::Analytic(soliton.clone()),
            AtomInitKind::UniformDark => AtomInit::UniformDark,
        };
        Ok(Scenario { params, grid, boundary, atom_init, scheme: self.scheme })
    }
}

/// `[convergence]`: refinement-study controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConvergenceSection {
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default)]
    pub subject: ConvergenceSubject,
}

fn default_levels() -> usize {
    3
}

impl Default for ConvergenceSection {
    fn default() -> Self {
        ConvergenceSection { levels: default_levels(), subject: ConvergenceSubject::default() }
    }
}

/// Artifact classes a run may emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExportFormat {
    /// Raw field/atom grids plus the checksum manifest.
    Binary,
    /// Fixed-ζ slice tables.
    Csv,
    /// Plot-ready text tables (heat map, trajectory, waveform).
    Plot,
    /// Structured reports.
    Json,
}

/// `[output]`: what to write and where to slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct OutputSection {
    #[serde(default = "default_formats")]
    pub formats: Vec<ExportFormat>,
    /// ζ values of the CSV slice tables (nearest grid row is used).
    #[serde(default = "default_slices")]
    pub slices: Vec<f64>,
}

fn default_formats() -> Vec<ExportFormat> {
    vec![ExportFormat::Binary, ExportFormat::Csv, ExportFormat::Plot, ExportFormat::Json]
}

fn default_slices() -> Vec<f64> {
    vec![0.0]
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { formats: default_formats(), slices: default_slices() }
    }
}

impl OutputSection {
    pub fn wants(&self, format: ExportFormat) -> bool {
        self.formats.contains(&format)
    }
}

/// A fully parsed run configuration, defaults materialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    pub mode: RunMode,
    /// Scenario name recorded in manifests and reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Output directory; the CLI's `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub profile: ProfileSection,
    #[serde(default)]
    pub soliton: SolitonSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub convergence: ConvergenceSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    /// Re-emit the config with every default spelled out. Parsing the
    /// result reproduces `self` exactly.
    pub fn canonical_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialization cannot fail")
    }
}

/// Parse and validate a TOML config document.
///
/// Schema errors (unknown keys, type mismatches) carry the parser's
/// line/column diagnostics; cross-field violations are reported as plain
/// config errors.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let config: RunConfig =
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
    // Surface cross-field mistakes at parse time rather than mid-run; the
    // waveform CSV is deliberately not touched here.
    config.params.resolve()?;
    config.profile.check_fields()?;
    if config.convergence.levels < 3 {
        return Err(Error::Config(format!(
            "convergence needs at least 3 levels, got {}",
            config.convergence.levels
        )));
    }
    if config.profile.kind == ProfileKind::ConstantControl {
        let params = config.params.resolve()?;
        if let Some(omega0) = config.profile.control {
            riccati_match_constant(omega0, params.eps0)?;
        }
    }
    Ok(config)
}
