//! Mode execution behind the `slowlight` binary: resolve a configuration,
//! run the requested mode, and write the artifact directory.
//!
//! Every artifact is staged in memory and the directory is written in one
//! pass after the mode finishes, so a failing run leaves no partial files.
//! The staging order is fixed and all numbers are printed in shortest
//! round-trip form, making identical configurations produce byte-identical
//! artifacts at any thread count. Mode reports come as a key-value text
//! table (one metric per line) always, plus a JSON twin under the `json`
//! export format. The manifest is staged last so it can checksum
//! everything else.

use std::fmt::Display;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{ExportFormat, RunConfig, RunMode};
use crate::error::Result;
use crate::export::{
    amplitude_map_table, manifest_text, nearest_row, parse_waveform_csv, push_binary_grids,
    sha256_hex, slice_csv, trajectory_table, waveform_table, ArtifactSet, ManifestInfo,
};
use crate::model::{PhysicalParams, SimulationGrid};
use crate::modulation::{control_field, ModulationProfile};
use crate::soliton::{SolitonSolution, StoppingReport};
use crate::solver::{from_analytic, simulate, SolutionGrids};
use crate::verify::{
    adjudicate_conventions, convergence_study, measure_trajectory, Adjudication,
    ConvergenceReport, ResidualReport, TrajectoryEstimate,
};

/// One headline number of a run.
#[derive(Debug, Clone, Serialize)]
pub struct Metric {
    pub name: &'static str,
    pub value: f64,
}

/// What a completed run produced; serialized as `summary.json` and echoed
/// on stdout by the command-line front end.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct RunSummary {
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Sign-convention label of the run's fields, when one is attached.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convention: Option<String>,
    pub metrics: Vec<Metric>,
    pub notes: Vec<String>,
    /// Written artifacts; filled after staging, not serialized (the
    /// manifest is the authoritative listing).
    #[serde(skip)]
    pub files: Vec<String>,
    #[serde(skip)]
    pub out_dir: PathBuf,
}

impl RunSummary {
    fn new(config: &RunConfig) -> Self {
        RunSummary {
            mode: config.mode.label().to_string(),
            label: config.label.clone(),
            convention: None,
            metrics: Vec::new(),
            notes: Vec::new(),
            files: Vec::new(),
            out_dir: PathBuf::new(),
        }
    }

    fn metric(&mut self, name: &'static str, value: f64) {
        self.metrics.push(Metric { name, value });
    }

    fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }
}

/// Everything the modes need, resolved from the config sections once.
struct Resolved {
    params: PhysicalParams,
    profile: ModulationProfile,
    soliton: SolitonSolution,
    grid: SimulationGrid,
}

fn resolve(config: &RunConfig, config_dir: &Path) -> Result<Resolved> {
    let params = config.params.resolve()?;
    let dir = config_dir.to_path_buf();
    let profile = config.profile.resolve(params.eps0, move |path| {
        let text = fs::read_to_string(dir.join(path))?;
        parse_waveform_csv(&text)
    })?;
    let soliton = SolitonSolution::new(params, profile.clone(), config.soliton.phi0)?;
    let grid = config.grid.resolve(&params, &profile)?;
    Ok(Resolved { params, profile, soliton, grid })
}

fn kv(out: &mut String, key: impl Display, value: impl Display) {
    let _ = writeln!(out, "{key} = {value}");
}

/// Key-value rendering of a residual report, one metric per line.
pub fn residual_report_text(report: &ResidualReport) -> String {
    let mut out = String::new();
    kv(&mut out, "convention", report.convention.as_deref().unwrap_or("(unknown)"));
    kv(&mut out, "n-zeta", report.n_zeta);
    kv(&mut out, "n-tau", report.n_tau);
    kv(&mut out, "h-zeta", report.h_zeta);
    kv(&mut out, "h-tau", report.h_tau);
    for entry in &report.entries {
        let id = entry.equation.as_str();
        kv(&mut out, format_args!("{id}.max-abs"), entry.max_abs);
        kv(&mut out, format_args!("{id}.rms-abs"), entry.rms_abs);
        kv(&mut out, format_args!("{id}.max-rel"), entry.max_rel);
        kv(&mut out, format_args!("{id}.rms-rel"), entry.rms_rel);
        kv(&mut out, format_args!("{id}.scale-peak"), entry.scale_peak);
        kv(&mut out, format_args!("{id}.points"), entry.points);
        kv(&mut out, format_args!("{id}.masked"), entry.masked);
    }
    if let Some(central) = &report.central {
        kv(&mut out, "central.amplitude-deviation", central.amplitude_deviation);
        kv(&mut out, "central.phase-deviation", central.phase_deviation);
        kv(&mut out, "central.masked-points", central.masked_points);
        kv(&mut out, "central.total-points", central.total_points);
    }
    out
}

/// Key-value rendering of a trajectory estimate (scalars only; the
/// per-column samples go to the plot table).
pub fn trajectory_text(estimate: &TrajectoryEstimate) -> String {
    let mut out = String::new();
    kv(&mut out, "mean-velocity", estimate.mean_velocity);
    kv(&mut out, "travel", estimate.travel);
    kv(&mut out, "travel-uncertainty", estimate.travel_uncertainty);
    kv(&mut out, "tracked-columns", estimate.taus.len());
    kv(&mut out, "first-index", estimate.first_index);
    kv(&mut out, "truncated", estimate.truncated);
    out
}

fn adjudication_text(adjudication: &Adjudication) -> String {
    let mut out = String::new();
    kv(&mut out, "winner", adjudication.winner.label());
    kv(&mut out, "probed", adjudication.probed);
    kv(&mut out, "candidates", adjudication.scores.len());
    for (i, score) in adjudication.scores.iter().enumerate() {
        kv(&mut out, format_args!("score.{i}.label"), &score.label);
        kv(&mut out, format_args!("score.{i}.maxwell-rms-rel"), score.maxwell_rms_rel);
        kv(
            &mut out,
            format_args!("score.{i}.schrodinger-rms-rel"),
            score.schrodinger_rms_rel,
        );
        kv(&mut out, format_args!("score.{i}.coarse-score"), score.coarse_score);
        kv(&mut out, format_args!("score.{i}.fine-score"), score.fine_score);
        kv(&mut out, format_args!("score.{i}.converged"), score.converged);
    }
    out.push_str(&residual_report_text(&adjudication.report));
    out
}

fn convergence_text(report: &ConvergenceReport) -> String {
    let mut out = String::new();
    let subject = match report.subject {
        crate::verify::ConvergenceSubject::March => "march",
        crate::verify::ConvergenceSubject::AnalyticReference => "analytic-reference",
    };
    kv(&mut out, "subject", subject);
    kv(&mut out, "levels", report.levels.len());
    for (i, level) in report.levels.iter().enumerate() {
        kv(&mut out, format_args!("level.{i}.n-zeta"), level.n_zeta);
        kv(&mut out, format_args!("level.{i}.n-tau"), level.n_tau);
        kv(&mut out, format_args!("level.{i}.h-zeta"), level.h_zeta);
        kv(&mut out, format_args!("level.{i}.h-tau"), level.h_tau);
        kv(&mut out, format_args!("level.{i}.sup-error"), level.sup_error);
    }
    for (i, order) in report.orders.iter().enumerate() {
        match order {
            Some(p) => kv(&mut out, format_args!("order.{i}"), p),
            None => kv(&mut out, format_args!("order.{i}"), "(at error floor)"),
        }
    }
    kv(&mut out, "monotone", report.monotone);
    kv(&mut out, "at-floor", report.at_floor);
    out
}

fn stopping_text(
    analytic: &StoppingReport,
    estimate: &TrajectoryEstimate,
    initial_velocity: f64,
) -> String {
    let mut out = String::new();
    kv(&mut out, "analytic-travel", analytic.zeta_stop);
    kv(&mut out, "analytic-truncated", analytic.truncated);
    kv(&mut out, "integrand-end", analytic.integrand_end);
    kv(&mut out, "measured-travel", estimate.travel);
    kv(
        &mut out,
        "travel-gap-rel",
        (estimate.travel - analytic.zeta_stop).abs() / analytic.zeta_stop,
    );
    kv(&mut out, "initial-group-velocity", initial_velocity);
    out.push_str(&trajectory_text(estimate));
    out
}

/// Grid products shared by the analytic, simulate, and stopping modes:
/// binary grids, slice CSVs, plot tables, and the trajectory report.
/// Returns the measured trajectory when the probe peak is trackable.
fn export_grid_products(
    grids: &SolutionGrids,
    resolved: &Resolved,
    config: &RunConfig,
    artifacts: &mut ArtifactSet,
    summary: &mut RunSummary,
) -> Result<Option<TrajectoryEstimate>> {
    let output = &config.output;
    if output.wants(ExportFormat::Binary) {
        push_binary_grids(artifacts, grids);
    }
    if output.wants(ExportFormat::Csv) {
        for (idx, &zeta) in output.slices.iter().enumerate() {
            let row = nearest_row(grids, zeta);
            artifacts.push_text(format!("slice_{idx}.csv"), slice_csv(grids, row));
        }
    }
    let trajectory = match measure_trajectory(grids) {
        Ok(estimate) => Some(estimate),
        Err(e) => {
            summary.note(format!("trajectory not tracked: {e}"));
            None
        }
    };
    if output.wants(ExportFormat::Plot) {
        artifacts.push_text("amplitude_map.dat", amplitude_map_table(grids));
        let taus = grids.grid.taus();
        let mut omegas = Vec::with_capacity(taus.len());
        for &tau in &taus {
            omegas.push(control_field(&resolved.profile, resolved.params.eps0, tau)?);
        }
        artifacts.push_text("control_waveform.dat", waveform_table(&taus, &omegas));
        if let Some(estimate) = &trajectory {
            artifacts.push_text("trajectory.dat", trajectory_table(estimate));
        }
    }
    if output.wants(ExportFormat::Json) {
        if let Some(estimate) = &trajectory {
            artifacts.push_json("trajectory.json", estimate)?;
        }
    }

    summary.convention = grids.convention.clone();
    summary.metric("k", grids.params.k);
    summary.metric("initial-group-velocity", resolved.soliton.group_velocity(grids.grid.tau_min)?);
    summary.metric("final-group-velocity", resolved.soliton.group_velocity(grids.grid.tau_max)?);
    let peak = grids.omega_a.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    summary.metric("peak-probe-amplitude", peak);
    let norm_dev =
        grids.diagnostics.norm_deviation.iter().fold(0.0f64, |acc, &d| acc.max(d));
    summary.metric("norm-deviation-max", norm_dev);
    summary.metric("field-imag-max", grids.diagnostics.field_imag_max);
    if let Some(estimate) = &trajectory {
        summary.metric("measured-mean-velocity", estimate.mean_velocity);
        summary.metric("measured-travel", estimate.travel);
    }
    Ok(trajectory)
}

/// JSON twin of the stopping report.
#[derive(Serialize)]
#[serde(rename_all = "kebab-case")]
struct StoppingProducts<'a> {
    analytic: &'a StoppingReport,
    measured_travel: f64,
    travel_uncertainty: f64,
    travel_gap_rel: f64,
    mean_velocity: f64,
    tracked_columns: usize,
    tracking_truncated: bool,
}

/// Executes `config`'s mode and writes the artifact directory.
///
/// `config_text` is the raw document whose SHA-256 identifies the run in
/// the manifest; `config_dir` anchors relative waveform-CSV paths.
pub fn run(
    config: &RunConfig,
    out_dir: &Path,
    config_text: &str,
    config_dir: &Path,
) -> Result<RunSummary> {
    let resolved = resolve(config, config_dir)?;
    let config_sha = sha256_hex(config_text.as_bytes());
    let mut artifacts = ArtifactSet::new();
    let mut summary = RunSummary::new(config);
    let mut scheme_label: Option<&'static str> = None;
    let mut source_label: Option<&'static str> = None;

    match config.mode {
        RunMode::Analytic => {
            let grids = from_analytic(&resolved.soliton, &resolved.grid)?;
            export_grid_products(&grids, &resolved, config, &mut artifacts, &mut summary)?;
            scheme_label = Some(grids.scheme.label());
            source_label = Some(grids.source.label());
        }
        RunMode::Simulate => {
            let scenario =
                config.scenario.resolve(resolved.params, resolved.grid, &resolved.soliton)?;
            let grids = simulate(&scenario)?;
            export_grid_products(&grids, &resolved, config, &mut artifacts, &mut summary)?;
            scheme_label = Some(grids.scheme.label());
            source_label = Some(grids.source.label());
        }
        RunMode::Verify => {
            let adjudication =
                adjudicate_conventions(resolved.params, &resolved.profile, &resolved.grid)?;
            artifacts.push_text("verify_report.txt", adjudication_text(&adjudication));
            if config.output.wants(ExportFormat::Json) {
                artifacts.push_json("verify_report.json", &adjudication)?;
            }
            summary.convention = Some(adjudication.winner.label());
            summary.note(if adjudication.probed {
                "static profile tied; the dynamic probe decided the convention"
            } else {
                "the caller's grid separated the candidates"
            });
            let worst_rel = adjudication
                .report
                .entries
                .iter()
                .fold(0.0f64, |acc, e| acc.max(e.max_rel));
            summary.metric("worst-max-rel-residual", worst_rel);
            if let Some(central) = &adjudication.report.central {
                summary.metric("central-amplitude-deviation", central.amplitude_deviation);
            }
            source_label = Some("analytic-reference");
        }
        RunMode::Stopping => {
            let analytic = resolved.soliton.stopping_distance()?;
            if analytic.truncated {
                summary.note(format!(
                    "modulation domain ends before the integrand vanishes \
                     (level {}); the analytic travel drops the tail",
                    analytic.integrand_end
                ));
            }
            let grids = from_analytic(&resolved.soliton, &resolved.grid)?;
            let trajectory =
                export_grid_products(&grids, &resolved, config, &mut artifacts, &mut summary)?;
            let Some(estimate) = trajectory else {
                return Err(crate::error::Error::FitFailed(
                    "stopping mode needs a trackable probe peak to measure the travel \
                     distance; widen the grid window"
                        .into(),
                ));
            };
            let initial_velocity = resolved.soliton.group_velocity(resolved.grid.tau_min)?;
            artifacts.push_text(
                "stopping_report.txt",
                stopping_text(&analytic, &estimate, initial_velocity),
            );
            if config.output.wants(ExportFormat::Json) {
                let products = StoppingProducts {
                    analytic: &analytic,
                    measured_travel: estimate.travel,
                    travel_uncertainty: estimate.travel_uncertainty,
                    travel_gap_rel: (estimate.travel - analytic.zeta_stop).abs()
                        / analytic.zeta_stop,
                    mean_velocity: estimate.mean_velocity,
                    tracked_columns: estimate.taus.len(),
                    tracking_truncated: estimate.truncated,
                };
                artifacts.push_json("stopping_report.json", &products)?;
            }
            summary.metric("analytic-travel", analytic.zeta_stop);
            summary.metric(
                "travel-gap-rel",
                (estimate.travel - analytic.zeta_stop).abs() / analytic.zeta_stop,
            );
            scheme_label = Some(grids.scheme.label());
            source_label = Some(grids.source.label());
        }
        RunMode::Convergence => {
            let scenario =
                config.scenario.resolve(resolved.params, resolved.grid, &resolved.soliton)?;
            let report = convergence_study(
                &scenario,
                config.convergence.levels,
                config.convergence.subject,
            )?;
            artifacts.push_text("convergence_report.txt", convergence_text(&report));
            if config.output.wants(ExportFormat::Json) {
                artifacts.push_json("convergence_report.json", &report)?;
            }
            if let Some(Some(p)) = report.orders.last() {
                summary.metric("final-observed-order", *p);
            }
            if let Some(level) = report.levels.last() {
                summary.metric("finest-sup-error", level.sup_error);
            }
            if !report.monotone {
                summary.note("errors did not shrink monotonically under refinement");
            }
            if report.at_floor {
                summary.note("a level reached the round-off error floor");
            }
            scheme_label = Some(scenario.scheme.label());
        }
    }

    if config.output.wants(ExportFormat::Json) {
        artifacts.push_json("summary.json", &summary)?;
    }
    let info = ManifestInfo {
        label: config.label.as_deref(),
        mode: config.mode.label(),
        config_sha256: &config_sha,
        convention: summary.convention.as_deref(),
        params: &resolved.params,
        grid: &resolved.grid,
        scheme: scheme_label,
        source: source_label,
    };
    let manifest = manifest_text(&info, &artifacts);
    artifacts.push_text("manifest.txt", manifest);
    artifacts.write_all(out_dir)?;

    summary.files = artifacts.names().into_iter().map(String::from).collect();
    summary.out_dir = out_dir.to_path_buf();
    Ok(summary)
}
