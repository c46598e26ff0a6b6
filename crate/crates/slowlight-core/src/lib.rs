//! Slow-light soliton laboratory for Λ-type three-level media.
//!
//! A resonant probe pulse propagating through a coherently driven Λ medium
//! obeys a Maxwell–Schrödinger system on the light-cone coordinates
//! ζ = z/c, τ = t − z/c. When the control channel is shaped by a modulation
//! function m(τ), the system carries an exact soliton whose group velocity
//! v = 1/(4k(m²+1)) can be steered down to a full stop. This crate provides
//!
//! * the parameter/model layer ([`model`]),
//! * modulation profiles and control-field algebra ([`modulation`]),
//! * the exact soliton and its Liouville sector ([`soliton`]),
//! * a characteristics-based numerical solver ([`solver`]),
//! * residual, trajectory, and convergence verification ([`verify`]),
//! * configuration, export, and the pipeline behind the `slowlight` binary
//!   ([`config`], [`export`], [`run`]).

pub mod config;
pub mod error;
pub mod export;
pub mod model;
pub mod modulation;
pub mod numeric;
pub mod run;
pub mod soliton;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
