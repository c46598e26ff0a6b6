//! Artifact construction: binary grids, checksum manifests, CSV tables,
//! and plot-ready text files.
//!
//! Everything is built in memory first and written in one pass at the end
//! of a run, so a failure anywhere leaves no partial files behind. All
//! emitters are deterministic: no timestamps, fixed field order, and floats
//! printed in shortest round-trip form, so identical inputs give
//! byte-identical artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{PhysicalParams, SimulationGrid};
use crate::modulation::ControlWaveform;
use crate::solver::{SolutionGrids, SCHEME_VERSION};
use crate::verify::TrajectoryEstimate;

/// Largest number of nodes kept per axis in plot tables; finer lattices
/// are strided down to stay readable by generic plotting tools.
pub const PLOT_MAX_NODES: usize = 257;

/// A named artifact staged for writing.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Build-then-write collection of one run's artifacts.
#[derive(Debug, Default)]
pub struct ArtifactSet {
    files: Vec<Artifact>,
}

impl ArtifactSet {
    pub fn new() -> Self {
        ArtifactSet::default()
    }

    pub fn push(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push(Artifact { name: name.into(), bytes });
    }

    pub fn push_text(&mut self, name: impl Into<String>, text: String) {
        self.push(name, text.into_bytes());
    }

    pub fn push_json<T: Serialize>(&mut self, name: impl Into<String>, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)
            .map_err(|e| Error::Numeric(format!("report serialization failed: {e}")))?;
        bytes.push(b'\n');
        self.push(name, bytes);
        Ok(())
    }

    pub fn names(&self) -> Vec<&str> {
        self.files.iter().map(|f| f.name.as_str()).collect()
    }

    /// Checksum lines for the manifest: `file = <name> <sha256> <bytes>`,
    /// sorted by name.
    pub fn checksum_lines(&self) -> String {
        let mut entries: Vec<&Artifact> = self.files.iter().collect();
        entries.sort_by(|a, b| a.name.cmp(&b.name));
        let mut out = String::new();
        for artifact in entries {
            let _ = writeln!(
                out,
                "file = {} {} {}",
                artifact.name,
                sha256_hex(&artifact.bytes),
                artifact.bytes.len()
            );
        }
        out
    }

    /// Write every staged file into `dir`, creating it if needed.
    pub fn write_all(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for artifact in &self.files {
            fs::write(dir.join(&artifact.name), &artifact.bytes)?;
        }
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        let _ = write!(out, "{byte:02x}");
    }
    out
}

/// Raw bytes of one complex grid: row-major (ζ outer, τ inner), each node
/// a little-endian IEEE-754 real/imaginary pair.
pub fn grid_bytes(grid: &Array2<C64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(grid.len() * 16);
    for value in grid.iter() {
        out.extend_from_slice(&value.re.to_le_bytes());
        out.extend_from_slice(&value.im.to_le_bytes());
    }
    out
}

/// Parse a grid file produced by [`grid_bytes`] back into an array.
pub fn grid_from_bytes(bytes: &[u8], n_zeta: usize, n_tau: usize) -> Result<Array2<C64>> {
    let expected = n_zeta * n_tau * 16;
    if bytes.len() != expected {
        return Err(Error::InvalidParameter(format!(
            "grid file holds {} bytes but a {n_zeta} × {n_tau} grid needs {expected}",
            bytes.len()
        )));
    }
    let mut grid = Array2::zeros((n_zeta, n_tau));
    for (idx, chunk) in bytes.chunks_exact(16).enumerate() {
        let re = f64::from_le_bytes(chunk[..8].try_into().expect("chunk is 16 bytes"));
        let im = f64::from_le_bytes(chunk[8..].try_into().expect("chunk is 16 bytes"));
        grid[[idx / n_tau, idx % n_tau]] = C64::new(re, im);
    }
    Ok(grid)
}

/// Stage the five field/atom grids as binary files.
pub fn push_binary_grids(artifacts: &mut ArtifactSet, grids: &SolutionGrids) {
    artifacts.push("omega_a.bin", grid_bytes(&grids.omega_a));
    artifacts.push("omega_b.bin", grid_bytes(&grids.omega_b));
    artifacts.push("psi1.bin", grid_bytes(&grids.psi1));
    artifacts.push("psi2.bin", grid_bytes(&grids.psi2));
    artifacts.push("psi3.bin", grid_bytes(&grids.psi3));
}

/// Run identity recorded at the head of the manifest.
#[derive(Debug, Clone, Copy)]
pub struct ManifestInfo<'a> {
    pub label: Option<&'a str>,
    pub mode: &'a str,
    pub config_sha256: &'a str,
    pub convention: Option<&'a str>,
    pub params: &'a PhysicalParams,
    pub grid: &'a SimulationGrid,
    /// Field-update scheme of the run, when one marched.
    pub scheme: Option<&'a str>,
    /// Provenance of the exported grids, when any were exported.
    pub source: Option<&'a str>,
}

impl<'a> ManifestInfo<'a> {
    /// Identity of a run whose artifacts are grid exports.
    pub fn for_grids(
        grids: &'a SolutionGrids,
        label: Option<&'a str>,
        mode: &'a str,
        config_sha256: &'a str,
    ) -> Self {
        ManifestInfo {
            label,
            mode,
            config_sha256,
            convention: grids.convention.as_deref(),
            params: &grids.params,
            grid: &grids.grid,
            scheme: Some(grids.scheme.label()),
            source: Some(grids.source.label()),
        }
    }
}

/// Sidecar manifest: run identity, grid geometry, parameters, and the
/// checksums of every other staged artifact. Must be pushed last.
pub fn manifest_text(info: &ManifestInfo<'_>, artifacts: &ArtifactSet) -> String {
    let grid = info.grid;
    let params = info.params;
    let mut out = String::new();
    let _ = writeln!(out, "scheme-version = {SCHEME_VERSION}");
    let _ = writeln!(out, "code-version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "label = {}", info.label.unwrap_or("(none)"));
    let _ = writeln!(out, "mode = {}", info.mode);
    let _ = writeln!(out, "config-sha256 = {}", info.config_sha256);
    let _ = writeln!(
        out,
        "convention = {}",
        info.convention.unwrap_or("(not adjudicated)")
    );
    let _ = writeln!(out, "source = {}", info.source.unwrap_or("(no grids)"));
    let _ = writeln!(out, "scheme = {}", info.scheme.unwrap_or("(no march)"));
    let _ = writeln!(out, "n-zeta = {}", grid.n_zeta);
    let _ = writeln!(out, "n-tau = {}", grid.n_tau);
    let _ = writeln!(out, "h-zeta = {}", grid.h_zeta());
    let _ = writeln!(out, "h-tau = {}", grid.h_tau());
    let _ = writeln!(out, "tau-min = {}", grid.tau_min);
    let _ = writeln!(out, "tau-max = {}", grid.tau_max);
    let _ = writeln!(out, "zeta-max = {}", grid.zeta_max);
    let _ = writeln!(out, "nu0 = {}", params.nu0);
    let _ = writeln!(out, "eps0 = {}", params.eps0);
    let _ = writeln!(out, "gamma = {}", params.gamma);
    let _ = writeln!(out, "delta = {}", params.delta);
    let _ = writeln!(out, "k = {}", params.k);
    let _ = writeln!(out, "k-constrained = {}", params.k_constrained);
    out.push_str(&artifacts.checksum_lines());
    out
}

/// Fixed-ζ slice of all ten grid components as CSV.
pub fn slice_csv(grids: &SolutionGrids, row: usize) -> String {
    let grid = &grids.grid;
    let zeta = grid.zeta(row);
    let mut out = String::from(
        "tau,zeta,omega_a_re,omega_a_im,omega_b_re,omega_b_im,\
         psi1_re,psi1_im,psi2_re,psi2_im,psi3_re,psi3_im\n",
    );
    for j in 0..grid.n_tau {
        let f = grids.field_at(row, j);
        let a = grids.atom_at(row, j);
        let _ = writeln!(
            out,
            "{},{zeta},{},{},{},{},{},{},{},{},{},{}",
            grid.tau(j),
            f.omega_a.re,
            f.omega_a.im,
            f.omega_b.re,
            f.omega_b.im,
            a.psi1.re,
            a.psi1.im,
            a.psi2.re,
            a.psi2.im,
            a.psi3.re,
            a.psi3.im,
        );
    }
    out
}

/// Grid row nearest a requested ζ value.
pub fn nearest_row(grids: &SolutionGrids, zeta: f64) -> usize {
    let h = grids.grid.h_zeta();
    let idx = (zeta / h).round();
    (idx.max(0.0) as usize).min(grids.grid.n_zeta - 1)
}

fn plot_indices(n: usize) -> Vec<usize> {
    let stride = n.div_ceil(PLOT_MAX_NODES).max(1);
    let mut indices: Vec<usize> = (0..n).step_by(stride).collect();
    if *indices.last().expect("n >= 1") != n - 1 {
        indices.push(n - 1);
    }
    indices
}

/// Probe-amplitude heat map |Ω_a|(ζ, τ) as a three-column block table
/// (τ, ζ, |Ω_a|), one block per plotted ζ row.
pub fn amplitude_map_table(grids: &SolutionGrids) -> String {
    let grid = &grids.grid;
    let mut out = String::from("# probe amplitude |omega_a| over the (zeta, tau) lattice\n");
    let _ = writeln!(out, "# columns: tau zeta amplitude");
    for &i in &plot_indices(grid.n_zeta) {
        let zeta = grid.zeta(i);
        for &j in &plot_indices(grid.n_tau) {
            let _ = writeln!(out, "{} {zeta} {}", grid.tau(j), grids.omega_a[[i, j]].norm());
        }
        out.push('\n');
    }
    out
}

/// Measured soliton-center trajectory as a three-column table
/// (τ, ζ_c, fitted velocity).
pub fn trajectory_table(estimate: &TrajectoryEstimate) -> String {
    let mut out = String::from("# soliton center trajectory\n");
    let _ = writeln!(out, "# columns: tau zeta_center velocity");
    for ((tau, zeta_c), v) in
        estimate.taus.iter().zip(&estimate.zeta_c).zip(&estimate.velocity)
    {
        let _ = writeln!(out, "{tau} {zeta_c} {v}");
    }
    out
}

/// Control waveform Ω(τ) as a two-column table.
pub fn waveform_table(taus: &[f64], omegas: &[f64]) -> String {
    let mut out = String::from("# control waveform at the soliton center\n");
    let _ = writeln!(out, "# columns: tau omega");
    for (tau, omega) in taus.iter().zip(omegas) {
        let _ = writeln!(out, "{tau} {omega}");
    }
    out
}

/// Control waveform as `tau,omega` CSV.
pub fn waveform_csv(waveform: &ControlWaveform) -> String {
    let mut out = String::from("tau,omega\n");
    for (i, omega) in waveform.omega.iter().enumerate() {
        let _ = writeln!(out, "{},{omega}", waveform.tau_at(i));
    }
    out
}

/// Parse a `tau,omega` CSV into a control waveform. The τ column must be
/// a uniform ascending ladder.
pub fn parse_waveform_csv(text: &str) -> Result<ControlWaveform> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "tau,omega" => {}
        Some((_, header)) => {
            return Err(Error::Config(format!(
                "waveform CSV must start with the header 'tau,omega', found '{header}'"
            )));
        }
        None => return Err(Error::Config("waveform CSV is empty".into())),
    }
    let mut taus = Vec::new();
    let mut omegas = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (tau_text, omega_text) = line.split_once(',').ok_or_else(|| {
            Error::Config(format!("waveform CSV line {}: expected 'tau,omega'", idx + 1))
        })?;
        let parse = |field: &str, name: &str| {
            field.trim().parse::<f64>().map_err(|_| {
                Error::Config(format!(
                    "waveform CSV line {}: bad {name} value '{}'",
                    idx + 1,
                    field.trim()
                ))
            })
        };
        taus.push(parse(tau_text, "tau")?);
        omegas.push(parse(omega_text, "omega")?);
    }
    ControlWaveform::from_samples(&taus, &omegas)
}
