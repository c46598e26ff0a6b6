//! Modulation profiles m(τ) and the control-field algebra built on them.
//!
//! The modulation function m(τ) = Ω_b/Ω_a at the soliton center encodes how
//! the control channel reshapes the probe soliton: the group velocity is
//! v = 1/(4k(m²+1)) and the accumulated phase uses F(τ) = ∫₀^τ ds/(m(s)²+1).
//! Four profile families are supported: constant, exponential e^{ατ},
//! piecewise (constant/exponential segments, validated continuous), and
//! profiles reconstructed from a sampled control waveform by integrating the
//! Riccati equation m′ = 2Ω(m²+1) + 4ε₀m.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{
    adaptive_simpson, cubic_midpoints_real, inv_one_plus_sq, softplus, sym_ratio,
};

/// Exponent bound for e^{ατ}-type evaluations: beyond it m² overflows f64,
/// so evaluation refuses instead of silently saturating.
const EXP_ARG_LIMIT: f64 = 350.0;

/// Runaway threshold for reconstructed profiles; the Riccati flow reaches
/// infinity in finite τ once 2Ω m² dominates, so a crossing of this level is
/// reported as a finite-time escape.
pub const ESCAPE_THRESHOLD: f64 = 1e12;

/// One piece of a piecewise profile, defined on [start, end).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub kind: SegmentKind,
}

/// Functional form of a segment, specified in global coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SegmentKind {
    /// m(τ) = level.
    Constant { level: f64 },
    /// m(τ) = scale · e^{α(τ − reference)}, scale ≠ 0, α ≠ 0.
    Exponential { scale: f64, alpha: f64, reference: f64 },
}

impl SegmentKind {
    fn eval(&self, tau: f64) -> Result<(f64, f64)> {
        match *self {
            SegmentKind::Constant { level } => Ok((level, 0.0)),
            SegmentKind::Exponential { scale, alpha, reference } => {
                let arg = alpha * (tau - reference) + scale.abs().ln();
                if arg > EXP_ARG_LIMIT {
                    return Err(Error::Domain {
                        tau,
                        lo: f64::NEG_INFINITY,
                        hi: reference + (EXP_ARG_LIMIT - scale.abs().ln()) / alpha,
                    });
                }
                let m = scale * (alpha * (tau - reference)).exp();
                Ok((m, alpha * m))
            }
        }
    }

    /// Antiderivative of 1/(m²+1) for this form, up to a constant.
    fn phase_antiderivative(&self, tau: f64) -> f64 {
        match *self {
            SegmentKind::Constant { level } => tau * inv_one_plus_sq(level),
            SegmentKind::Exponential { scale, alpha, reference } => {
                let u = tau - reference;
                u - softplus(2.0 * alpha * u + (scale * scale).ln()) / (2.0 * alpha)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            SegmentKind::Constant { level } => {
                if !level.is_finite() {
                    return Err(Error::InvalidParameter(
                        "constant segment level must be finite".into(),
                    ));
                }
            }
            SegmentKind::Exponential { scale, alpha, reference } => {
                if !(scale.is_finite() && alpha.is_finite() && reference.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "exponential segment parameters must be finite".into(),
                    ));
                }
                if scale == 0.0 {
                    return Err(Error::InvalidParameter(
                        "exponential segment scale must be nonzero (use a constant segment for m = 0)"
                            .into(),
                    ));
                }
                if alpha == 0.0 {
                    return Err(Error::InvalidParameter(
                        "exponential segment rate must be nonzero (use a constant segment)".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Uniformly sampled control waveform Ω(τ_i), τ_i = tau0 + i·spacing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlWaveform {
    pub tau0: f64,
    pub spacing: f64,
    pub omega: Vec<f64>,
}

impl ControlWaveform {
    pub fn new(tau0: f64, spacing: f64, omega: Vec<f64>) -> Result<Self> {
        if !tau0.is_finite() || !spacing.is_finite() || spacing <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "waveform needs finite tau0 and positive spacing, got tau0 = {tau0}, spacing = {spacing}"
            )));
        }
        if omega.len() < 2 {
            return Err(Error::InvalidParameter(
                "waveform needs at least two samples".into(),
            ));
        }
        if let Some(bad) = omega.iter().find(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "waveform contains a non-finite sample {bad}"
            )));
        }
        Ok(ControlWaveform { tau0, spacing, omega })
    }

    /// Build from explicit (τ, Ω) pairs, checking that τ is uniformly spaced.
    pub fn from_samples(taus: &[f64], omegas: &[f64]) -> Result<Self> {
        if taus.len() != omegas.len() {
            return Err(Error::InvalidParameter(format!(
                "waveform column lengths differ: {} vs {}",
                taus.len(),
                omegas.len()
            )));
        }
        if taus.len() < 2 {
            return Err(Error::InvalidParameter(
                "waveform needs at least two samples".into(),
            ));
        }
        let n = taus.len();
        let h = (taus[n - 1] - taus[0]) / (n - 1) as f64;
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidParameter(
                "waveform τ column must be increasing".into(),
            ));
        }
        for i in 0..n - 1 {
            let step = taus[i + 1] - taus[i];
            if (step - h).abs() > 1e-9 * h.abs().max(1.0) {
                return Err(Error::InvalidParameter(format!(
                    "waveform τ column is not uniform: step {} at row {} differs from {}",
                    step, i, h
                )));
            }
        }
        ControlWaveform::new(taus[0], h, omegas.to_vec())
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn tau_at(&self, i: usize) -> f64 {
        self.tau0 + i as f64 * self.spacing
    }

    pub fn tau_end(&self) -> f64 {
        self.tau_at(self.len() - 1)
    }
}

/// Profile reconstructed from a control waveform: node values and slopes of
/// m(τ), interpolated with cubic Hermite pieces between nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedProfile {
    pub tau0: f64,
    pub spacing: f64,
    /// m at the waveform nodes.
    pub m: Vec<f64>,
    /// ∂_τ m at the nodes, taken from the Riccati right-hand side.
    pub m_dot: Vec<f64>,
    /// Soliton amplitude the reconstruction was matched against.
    pub eps0: f64,
}

impl ReconstructedProfile {
    pub fn tau_end(&self) -> f64 {
        self.tau0 + (self.m.len() - 1) as f64 * self.spacing
    }

    fn eval(&self, tau: f64) -> Result<(f64, f64)> {
        let end = self.tau_end();
        let slack = 1e-12 * self.spacing.max(1.0);
        if tau < self.tau0 - slack || tau > end + slack {
            return Err(Error::Domain { tau, lo: self.tau0, hi: end });
        }
        let h = self.spacing;
        let pos = ((tau - self.tau0) / h).floor();
        let i = (pos.max(0.0) as usize).min(self.m.len() - 2);
        let t = ((tau - self.tau0) / h - i as f64).clamp(0.0, 1.0);
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let (d0, d1) = (self.m_dot[i], self.m_dot[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let m = (2.0 * t3 - 3.0 * t2 + 1.0) * m0
            + (t3 - 2.0 * t2 + t) * h * d0
            + (-2.0 * t3 + 3.0 * t2) * m1
            + (t3 - t2) * h * d1;
        let dm = (6.0 * t2 - 6.0 * t) * (m0 - m1) / h
            + (3.0 * t2 - 4.0 * t + 1.0) * d0
            + (3.0 * t2 - 2.0 * t) * d1;
        Ok((m, dm))
    }
}

/// Modulation profile m(τ).
#[derive(Debug, Clone, PartialEq)]
pub enum ModulationProfile {
    /// m(τ) = m₀.
    Constant { m0: f64 },
    /// m(τ) = e^{ατ}, α > 0: the pulse-stopping ramp.
    Exponential { alpha: f64 },
    /// Continuous chain of constant/exponential segments.
    PiecewiseSmooth { segments: Vec<Segment> },
    /// Numerically reconstructed from a control waveform.
    FromControl(ReconstructedProfile),
}

/// How F(τ) = ∫₀^∞-type integrals of 1/(m²+1) behave at large τ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseTail {
    /// The full integral converges to this value.
    Finite(f64),
    /// The integrand never decays; its large-τ level is `floor`.
    Divergent { floor: f64 },
    /// The profile domain ends at `tau_end`; `value` is the integral up to
    /// there and `integrand_end` the integrand level left over.
    Truncated { value: f64, integrand_end: f64, tau_end: f64 },
}

impl ModulationProfile {
    pub fn constant(m0: f64) -> Result<Self> {
        if !m0.is_finite() {
            return Err(Error::InvalidParameter("constant profile level must be finite".into()));
        }
        Ok(ModulationProfile::Constant { m0 })
    }

    pub fn exponential(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "exponential profile needs α > 0, got {alpha}"
            )));
        }
        Ok(ModulationProfile::Exponential { alpha })
    }

    /// Validated piecewise profile: segments must be nonempty, ordered,
    /// gap-free, and continuous at every junction (relative 1e-9).
    pub fn piecewise(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidParameter("piecewise profile needs at least one segment".into()));
        }
        for (i, seg) in segments.iter().enumerate() {
            seg.kind.validate()?;
            if seg.start.is_nan() || seg.end.is_nan() {
                return Err(Error::InvalidParameter(format!("segment {i} has NaN bounds")));
            }
            if seg.start >= seg.end {
                return Err(Error::InvalidParameter(format!(
                    "segment {i} has empty span [{}, {}]",
                    seg.start, seg.end
                )));
            }
            if seg.start.is_infinite() && i != 0 {
                return Err(Error::InvalidParameter(format!(
                    "only the first segment may start at -infinity (segment {i})"
                )));
            }
            if seg.end.is_infinite() && i != segments.len() - 1 {
                return Err(Error::InvalidParameter(format!(
                    "only the last segment may end at +infinity (segment {i})"
                )));
            }
        }
        for i in 0..segments.len() - 1 {
            let left = &segments[i];
            let right = &segments[i + 1];
            let junction = left.end;
            if (right.start - junction).abs() > 1e-12 * junction.abs().max(1.0) {
                return Err(Error::InvalidParameter(format!(
                    "segments {i} and {} leave a gap: {} vs {}",
                    i + 1,
                    junction,
                    right.start
                )));
            }
            let (ml, _) = left.kind.eval(junction)?;
            let (mr, _) = right.kind.eval(junction)?;
            if (ml - mr).abs() > 1e-9 * ml.abs().max(1.0) {
                return Err(Error::InvalidParameter(format!(
                    "profile is discontinuous at τ = {junction}: {ml} vs {mr}"
                )));
            }
        }
        Ok(ModulationProfile::PiecewiseSmooth { segments })
    }

    /// Domain of definition (lo, hi); unbounded axes are ±infinity.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            ModulationProfile::Constant { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            ModulationProfile::Exponential { alpha } => {
                (f64::NEG_INFINITY, EXP_ARG_LIMIT / alpha)
            }
            ModulationProfile::PiecewiseSmooth { segments } => {
                (segments[0].start, segments[segments.len() - 1].end)
            }
            ModulationProfile::FromControl(p) => (p.tau0, p.tau_end()),
        }
    }

    /// True when ∂_τ m ≡ 0, which makes the two control-envelope closed
    /// forms coincide and convention adjudication a structural tie.
    pub fn is_static(&self) -> bool {
        match self {
            ModulationProfile::Constant { .. } => true,
            ModulationProfile::Exponential { .. } => false,
            ModulationProfile::PiecewiseSmooth { segments } => segments
                .iter()
                .all(|s| matches!(s.kind, SegmentKind::Constant { .. })),
            ModulationProfile::FromControl(_) => false,
        }
    }

    /// (m, ∂_τ m) at τ.
    pub fn eval(&self, tau: f64) -> Result<(f64, f64)> {
        if !tau.is_finite() {
            return Err(Error::InvalidParameter(format!("profile evaluated at non-finite τ = {tau}")));
        }
        match self {
            ModulationProfile::Constant { m0 } => Ok((*m0, 0.0)),
            ModulationProfile::Exponential { alpha } => SegmentKind::Exponential {
                scale: 1.0,
                alpha: *alpha,
                reference: 0.0,
            }
            .eval(tau),
            ModulationProfile::PiecewiseSmooth { segments } => {
                let seg = self.segment_at(segments, tau)?;
                seg.kind.eval(tau)
            }
            ModulationProfile::FromControl(p) => p.eval(tau),
        }
    }

    fn segment_at<'a>(&self, segments: &'a [Segment], tau: f64) -> Result<&'a Segment> {
        let lo = segments[0].start;
        let hi = segments[segments.len() - 1].end;
        let slack = 1e-12 * tau.abs().max(1.0);
        if tau < lo - slack || tau > hi + slack {
            return Err(Error::Domain { tau, lo, hi });
        }
        let idx = segments.partition_point(|s| s.start <= tau);
        Ok(&segments[idx.saturating_sub(1).min(segments.len() - 1)])
    }

    /// Accumulated phase integral F(τ) = ∫₀^τ ds/(m(s)²+1), F(0) = 0.
    ///
    /// Closed forms for constant/exponential/piecewise profiles; adaptive
    /// quadrature over the Hermite interpolant for reconstructed profiles.
    /// τ = 0 must lie in the profile domain.
    pub fn phase_integral(&self, tau: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        let slack = 1e-12 * tau.abs().max(1.0);
        if !(lo <= 0.0 && 0.0 <= hi) {
            return Err(Error::Domain { tau: 0.0, lo, hi });
        }
        if tau < lo - slack || tau > hi + slack {
            return Err(Error::Domain { tau, lo, hi });
        }
        match self {
            ModulationProfile::Constant { m0 } => Ok(tau * inv_one_plus_sq(*m0)),
            ModulationProfile::Exponential { alpha } => {
                let kind = SegmentKind::Exponential { scale: 1.0, alpha: *alpha, reference: 0.0 };
                Ok(kind.phase_antiderivative(tau) - kind.phase_antiderivative(0.0))
            }
            ModulationProfile::PiecewiseSmooth { segments } => {
                Ok(self.piecewise_phase(segments, tau))
            }
            ModulationProfile::FromControl(_) => {
                let f = |s: f64| {
                    let (m, _) = self.eval(s).expect("quadrature stays inside the profile domain");
                    inv_one_plus_sq(m)
                };
                adaptive_simpson(f, 0.0, tau, 1e-12, 1e-14)
            }
        }
    }

    fn piecewise_phase(&self, segments: &[Segment], tau: f64) -> f64 {
        // Signed sum of per-segment antiderivative differences over the
        // intersection of each segment with (0, τ) or (τ, 0).
        let (a, b, sign) = if tau >= 0.0 { (0.0, tau, 1.0) } else { (tau, 0.0, -1.0) };
        let mut total = 0.0;
        for seg in segments {
            let lo = seg.start.max(a);
            let hi = seg.end.min(b);
            if lo < hi {
                total += seg.kind.phase_antiderivative(hi) - seg.kind.phase_antiderivative(lo);
            }
        }
        sign * total
    }

    /// Large-τ behavior of the phase integral; see [`PhaseTail`].
    pub fn phase_tail(&self) -> Result<PhaseTail> {
        match self {
            ModulationProfile::Constant { m0 } => Ok(PhaseTail::Divergent {
                floor: inv_one_plus_sq(*m0),
            }),
            ModulationProfile::Exponential { alpha } => {
                Ok(PhaseTail::Finite(std::f64::consts::LN_2 / (2.0 * alpha)))
            }
            ModulationProfile::PiecewiseSmooth { segments } => {
                let last = &segments[segments.len() - 1];
                if last.end.is_finite() {
                    let value = self.phase_integral(last.end)?;
                    let (m, _) = last.kind.eval(last.end)?;
                    return Ok(PhaseTail::Truncated {
                        value,
                        integrand_end: inv_one_plus_sq(m),
                        tau_end: last.end,
                    });
                }
                match last.kind {
                    SegmentKind::Constant { level } => Ok(PhaseTail::Divergent {
                        floor: inv_one_plus_sq(level),
                    }),
                    SegmentKind::Exponential { scale, alpha, reference } => {
                        if alpha < 0.0 {
                            // m decays to zero, the integrand rises to one.
                            return Ok(PhaseTail::Divergent { floor: 1.0 });
                        }
                        // The antiderivative G(τ) tends to −ln(scale²)/(2α)
                        // as τ → ∞, so F(∞) = F(t) + G(∞) − G(t) for any
                        // finite anchor t inside the segment.
                        let kind = SegmentKind::Exponential { scale, alpha, reference };
                        let t = if last.start.is_finite() { last.start } else { 0.0 };
                        let head = self.phase_integral(t)?;
                        let g_limit = -(scale * scale).ln() / (2.0 * alpha);
                        Ok(PhaseTail::Finite(head + g_limit - kind.phase_antiderivative(t)))
                    }
                }
            }
            ModulationProfile::FromControl(p) => {
                let end = p.tau_end();
                let value = self.phase_integral(end)?;
                let (m, _) = self.eval(end)?;
                Ok(PhaseTail::Truncated {
                    value,
                    integrand_end: inv_one_plus_sq(m),
                    tau_end: end,
                })
            }
        }
    }

    /// Short human-readable description for manifests and reports.
    pub fn describe(&self) -> String {
        match self {
            ModulationProfile::Constant { m0 } => format!("constant(m0={m0})"),
            ModulationProfile::Exponential { alpha } => format!("exponential(alpha={alpha})"),
            ModulationProfile::PiecewiseSmooth { segments } => {
                format!("piecewise({} segments)", segments.len())
            }
            ModulationProfile::FromControl(p) => format!(
                "from-control({} nodes on [{}, {}])",
                p.m.len(),
                p.tau0,
                p.tau_end()
            ),
        }
    }
}

/// Control envelope at the soliton center for a given profile:
/// Ω(τ) = (½ ∂_τ m − 2ε₀ m) / (m² + 1).
pub fn control_field(profile: &ModulationProfile, eps0: f64, tau: f64) -> Result<f64> {
    if !(eps0.is_finite() && eps0 != 0.0) {
        return Err(Error::InvalidParameter(format!(
            "control field needs finite nonzero ε₀, got {eps0}"
        )));
    }
    let (m, dm) = profile.eval(tau)?;
    Ok(0.5 * dm * inv_one_plus_sq(m) - 2.0 * eps0 * sym_ratio(m))
}

/// Real roots of the constant-control matching equation
/// Ω₀ m² + 2ε₀ m + Ω₀ = 0, i.e. the constant m whose control field equals Ω₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ConstantControlRoots {
    /// Ω₀ = 0: the probe-only channel, m ≡ 0.
    ZeroControl,
    /// |Ω₀| = |ε₀|: the two branches merge at m = −ε₀/Ω₀.
    Double(f64),
    /// |Ω₀| < |ε₀|: `eit` is the large-|m| slow branch matching the
    /// electromagnetically-induced-transparency limit, `other` the fast
    /// branch; eit · other = 1.
    Pair { eit: f64, other: f64 },
}

/// Solve the constant-control matching equation for m.
///
/// Fails with [`Error::NoRealRoot`] when |Ω₀| > |ε₀|: a constant control
/// stronger than the soliton amplitude supports no stationary modulation.
pub fn riccati_match_constant(omega0: f64, eps0: f64) -> Result<ConstantControlRoots> {
    if !(omega0.is_finite() && eps0.is_finite()) {
        return Err(Error::InvalidParameter(
            "matching equation needs finite Ω₀, ε₀".into(),
        ));
    }
    if eps0 == 0.0 {
        return Err(Error::InvalidParameter(
            "matching equation needs ε₀ ≠ 0".into(),
        ));
    }
    if omega0 == 0.0 {
        return Ok(ConstantControlRoots::ZeroControl);
    }
    let disc = (eps0 - omega0) * (eps0 + omega0);
    if disc < 0.0 {
        return Err(Error::NoRealRoot { omega0: omega0.abs(), eps0: eps0.abs() });
    }
    if disc == 0.0 {
        return Ok(ConstantControlRoots::Double(-eps0 / omega0));
    }
    // Citardauq-stable pairing: q carries the sign of ε₀ so neither root
    // suffers cancellation; the product of the two roots is exactly 1.
    let q = -(eps0 + eps0.signum() * disc.sqrt());
    let big = q / omega0;
    let small = omega0 / q;
    let (eit, other) = if big.abs() >= small.abs() { (big, small) } else { (small, big) };
    Ok(ConstantControlRoots::Pair { eit, other })
}

/// Reconstruct m(τ) from a sampled control waveform by integrating
/// m′ = 2Ω(τ)(m²+1) + 4ε₀m with a classical Runge–Kutta step, Ω at half
/// steps supplied by cubic interpolation of the samples.
///
/// The flow is stiffly unstable wherever 4ε₀ dominates the local decay of m
/// (relative perturbations grow like e^{(4ε₀ − ∂_τ ln m)τ}), so a start deep
/// in a flat tail amplifies roundoff beyond repair; callers should seed
/// m_initial as close to the active window as the waveform allows.
/// A crossing of [`ESCAPE_THRESHOLD`] reports finite-time escape.
pub fn profile_from_control(
    waveform: &ControlWaveform,
    m_initial: f64,
    eps0: f64,
) -> Result<ModulationProfile> {
    if waveform.len() < 4 {
        return Err(Error::InvalidParameter(
            "profile reconstruction needs at least four waveform samples".into(),
        ));
    }
    if !m_initial.is_finite() {
        return Err(Error::InvalidParameter("m_initial must be finite".into()));
    }
    if !eps0.is_finite() || eps0 == 0.0 {
        return Err(Error::InvalidParameter("reconstruction needs finite nonzero ε₀".into()));
    }
    let h = waveform.spacing;
    let n = waveform.len();
    let mid = cubic_midpoints_real(&waveform.omega);
    let rhs = |m: f64, omega: f64| 2.0 * omega * (m * m + 1.0) + 4.0 * eps0 * m;
    let mut m = Vec::with_capacity(n);
    let mut m_dot = Vec::with_capacity(n);
    m.push(m_initial);
    m_dot.push(rhs(m_initial, waveform.omega[0]));
    for i in 0..n - 1 {
        let m0 = m[i];
        let k1 = rhs(m0, waveform.omega[i]);
        let k2 = rhs(m0 + 0.5 * h * k1, mid[i]);
        let k3 = rhs(m0 + 0.5 * h * k2, mid[i]);
        let k4 = rhs(m0 + h * k3, waveform.omega[i + 1]);
        let m1 = m0 + h / 6.0 * (k1 + 2.0 * (k2 + k3) + k4);
        if !m1.is_finite() || m1.abs() > ESCAPE_THRESHOLD {
            return Err(Error::FiniteEscape {
                tau: waveform.tau_at(i + 1),
                threshold: ESCAPE_THRESHOLD,
            });
        }
        m_dot.push(rhs(m1, waveform.omega[i + 1]));
        m.push(m1);
    }
    Ok(ModulationProfile::FromControl(ReconstructedProfile {
        tau0: waveform.tau0,
        spacing: h,
        m,
        m_dot,
        eps0,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::sech;

    fn exp_profile() -> ModulationProfile {
        ModulationProfile::exponential(1.0).unwrap()
    }

    #[test]
    fn exponential_eval_matches_closed_form() {
        let p = exp_profile();
        for &tau in &[-5.0, -1.0, 0.0, 0.5, 3.0] {
            let (m, dm) = p.eval(tau).unwrap();
            assert!((m - tau.exp()).abs() <= 1e-15 * tau.exp());
            assert!((dm - tau.exp()).abs() <= 1e-15 * tau.exp());
        }
    }

    #[test]
    fn exponential_eval_refuses_overflowing_arguments() {
        let p = ModulationProfile::exponential(2.0).unwrap();
        assert!(matches!(p.eval(200.0), Err(Error::Domain { .. })));
        // Deep negative arguments are fine: m underflows to zero.
        let (m, dm) = p.eval(-400.0).unwrap();
        assert_eq!(m, 0.0);
        assert_eq!(dm, 0.0);
    }

    #[test]
    fn control_field_matches_switch_off_closed_form() {
        // For m = e^{ατ}: Ω(τ) = (α/4 − ε₀) sech(ατ).
        let p = exp_profile();
        let eps0 = 3.0;
        let omega = control_field(&p, eps0, 0.0).unwrap();
        assert!((omega - (-2.75)).abs() < 1e-14);
        for &tau in &[-6.0, -2.0, -0.3, 0.0, 0.7, 2.5, 8.0] {
            let got = control_field(&p, eps0, tau).unwrap();
            let want = (0.25 - eps0) * sech(tau);
            assert!((got - want).abs() <= 1e-13 * want.abs().max(1.0));
        }
    }

    #[test]
    fn control_field_validates_amplitude() {
        let p = exp_profile();
        assert!(control_field(&p, 0.0, 0.0).is_err());
        assert!(control_field(&p, f64::NAN, 0.0).is_err());
    }

    #[test]
    fn phase_integral_exponential_matches_quadrature() {
        let p = ModulationProfile::exponential(1.5).unwrap();
        for &tau in &[-4.0, -1.0, 0.0, 0.8, 2.0, 6.0] {
            let closed = p.phase_integral(tau).unwrap();
            let quad = adaptive_simpson(
                |s| inv_one_plus_sq((1.5 * s).exp().min(1e150)),
                0.0,
                tau,
                1e-12,
                1e-14,
            )
            .unwrap();
            assert!(
                (closed - quad).abs() <= 1e-10 * quad.abs().max(1.0),
                "τ = {tau}: closed {closed} vs quadrature {quad}"
            );
        }
    }

    #[test]
    fn phase_integral_saturates_at_half_log_two_over_alpha() {
        for &alpha in &[0.5, 1.0, 2.0] {
            let p = ModulationProfile::exponential(alpha).unwrap();
            let limit = std::f64::consts::LN_2 / (2.0 * alpha);
            assert!((p.phase_integral(60.0 / alpha).unwrap() - limit).abs() < 1e-12);
            match p.phase_tail().unwrap() {
                PhaseTail::Finite(f) => assert!((f - limit).abs() < 1e-15),
                other => panic!("expected finite tail, got {other:?}"),
            }
        }
    }

    #[test]
    fn phase_integral_constant_is_linear() {
        let p = ModulationProfile::constant(-1.0).unwrap();
        assert!((p.phase_integral(3.0).unwrap() - 1.5).abs() < 1e-15);
        assert!((p.phase_integral(-2.0).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(p.phase_integral(0.0).unwrap(), 0.0);
        match p.phase_tail().unwrap() {
            PhaseTail::Divergent { floor } => assert!((floor - 0.5).abs() < 1e-15),
            other => panic!("expected divergent tail, got {other:?}"),
        }
    }

    #[test]
    fn piecewise_profile_validates_structure() {
        let cont = vec![
            Segment { start: f64::NEG_INFINITY, end: 0.0, kind: SegmentKind::Constant { level: 1.0 } },
            Segment {
                start: 0.0,
                end: f64::INFINITY,
                kind: SegmentKind::Exponential { scale: 1.0, alpha: 2.0, reference: 0.0 },
            },
        ];
        assert!(ModulationProfile::piecewise(cont).is_ok());

        // Discontinuous at the junction: constant 2 does not meet e^{0} = 1.
        let disc = vec![
            Segment { start: -1.0, end: 0.0, kind: SegmentKind::Constant { level: 2.0 } },
            Segment {
                start: 0.0,
                end: 1.0,
                kind: SegmentKind::Exponential { scale: 1.0, alpha: 2.0, reference: 0.0 },
            },
        ];
        assert!(ModulationProfile::piecewise(disc).is_err());

        // Gap between segments.
        let gap = vec![
            Segment { start: -1.0, end: 0.0, kind: SegmentKind::Constant { level: 1.0 } },
            Segment { start: 0.5, end: 1.0, kind: SegmentKind::Constant { level: 1.0 } },
        ];
        assert!(ModulationProfile::piecewise(gap).is_err());

        assert!(ModulationProfile::piecewise(vec![]).is_err());
        let empty_span = vec![Segment { start: 1.0, end: 1.0, kind: SegmentKind::Constant { level: 0.0 } }];
        assert!(ModulationProfile::piecewise(empty_span).is_err());
    }

    #[test]
    fn piecewise_phase_matches_quadrature_across_junctions() {
        let p = ModulationProfile::piecewise(vec![
            Segment { start: -10.0, end: 0.5, kind: SegmentKind::Constant { level: 1.0 } },
            Segment {
                start: 0.5,
                end: 10.0,
                kind: SegmentKind::Exponential { scale: 1.0, alpha: 1.0, reference: 0.5 },
            },
        ])
        .unwrap();
        for &tau in &[-3.0, 0.2, 0.5, 1.0, 4.0, 9.5] {
            let closed = p.phase_integral(tau).unwrap();
            let quad = adaptive_simpson(
                |s| inv_one_plus_sq(p.eval(s).unwrap().0),
                0.0,
                tau,
                1e-12,
                1e-14,
            )
            .unwrap();
            assert!(
                (closed - quad).abs() <= 1e-9 * quad.abs().max(1.0),
                "τ = {tau}: closed {closed} vs quadrature {quad}"
            );
        }
    }

    #[test]
    fn piecewise_tail_with_growing_exponential_is_finite() {
        // Constant level 1 until 0, then e^{ατ}: the tail beyond τ = 0
        // contributes the same ln2/(2α) as the pure ramp from m = 1.
        let alpha = 1.0;
        let p = ModulationProfile::piecewise(vec![
            Segment { start: f64::NEG_INFINITY, end: 0.0, kind: SegmentKind::Constant { level: 1.0 } },
            Segment {
                start: 0.0,
                end: f64::INFINITY,
                kind: SegmentKind::Exponential { scale: 1.0, alpha, reference: 0.0 },
            },
        ])
        .unwrap();
        match p.phase_tail().unwrap() {
            PhaseTail::Finite(f) => {
                let want = std::f64::consts::LN_2 / (2.0 * alpha);
                assert!((f - want).abs() < 1e-12, "tail {f} vs {want}");
            }
            other => panic!("expected finite tail, got {other:?}"),
        }
        // Large-τ phase integral approaches the same limit.
        let far = p.phase_integral(50.0).unwrap();
        let want = std::f64::consts::LN_2 / 2.0;
        assert!((far - want).abs() < 1e-12);
    }

    #[test]
    fn riccati_examples_and_vieta() {
        match riccati_match_constant(3.0, 3.0).unwrap() {
            ConstantControlRoots::Double(m) => assert!((m + 1.0).abs() < 1e-15),
            other => panic!("expected double root, got {other:?}"),
        }
        match riccati_match_constant(1.0, 3.0).unwrap() {
            ConstantControlRoots::Pair { eit, other } => {
                // Exact roots −3 ± 2√2.
                let want_eit = -3.0 - 2.0 * 2.0_f64.sqrt();
                let want_other = -3.0 + 2.0 * 2.0_f64.sqrt();
                assert!((eit - want_eit).abs() < 1e-14);
                assert!((other - want_other).abs() < 1e-14);
                assert!((eit * other - 1.0).abs() < 1e-14);
            }
            other => panic!("expected root pair, got {other:?}"),
        }
        assert!(matches!(
            riccati_match_constant(0.0, 3.0).unwrap(),
            ConstantControlRoots::ZeroControl
        ));
        assert!(matches!(
            riccati_match_constant(4.0, 3.0),
            Err(Error::NoRealRoot { .. })
        ));
    }

    #[test]
    fn riccati_weak_control_root_matches_bisection_oracle() {
        // Independent oracle: bisect Ω₀m² + 2ε₀m + Ω₀ on a bracketing
        // interval of the slow branch.
        let (omega0, eps0) = (0.3, 3.0);
        let f = |m: f64| omega0 * m * m + 2.0 * eps0 * m + omega0;
        let (mut lo, mut hi) = (-30.0, -10.0);
        assert!(f(lo) > 0.0 && f(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        match riccati_match_constant(omega0, eps0).unwrap() {
            ConstantControlRoots::Pair { eit, other } => {
                assert!((eit - oracle).abs() < 1e-12, "eit {eit} vs oracle {oracle}");
                assert!((eit * other - 1.0).abs() < 1e-14);
                assert!((eit + other + 2.0 * eps0 / omega0).abs() < 1e-12);
            }
            other => panic!("expected root pair, got {other:?}"),
        }
    }

    #[test]
    fn waveform_uniformity_is_enforced() {
        let taus = vec![0.0, 0.1, 0.25, 0.3];
        let omegas = vec![1.0; 4];
        assert!(ControlWaveform::from_samples(&taus, &omegas).is_err());
        let taus: Vec<f64> = (0..5).map(|i| i as f64 * 0.1).collect();
        let w = ControlWaveform::from_samples(&taus, &[1.0; 5]).unwrap();
        assert!((w.spacing - 0.1).abs() < 1e-15);
        assert!((w.tau_end() - 0.4).abs() < 1e-15);
        assert!(ControlWaveform::new(0.0, -0.1, vec![1.0; 4]).is_err());
        assert!(ControlWaveform::new(0.0, 0.1, vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn reconstruction_holds_the_stationary_point() {
        // Ω ≡ ε₀ = 3 has the double root m = −1; starting exactly there the
        // reconstruction must stay put.
        let n = 2001;
        let taus: Vec<f64> = (0..n).map(|i| i as f64 * 0.005).collect();
        let omegas = vec![3.0; n];
        let w = ControlWaveform::from_samples(&taus, &omegas).unwrap();
        let p = profile_from_control(&w, -1.0, 3.0).unwrap();
        for &tau in &[0.0, 2.5, 7.0, 10.0] {
            let (m, _) = p.eval(tau).unwrap();
            assert!((m + 1.0).abs() < 1e-9, "m({tau}) = {m}");
        }
    }

    #[test]
    fn reconstruction_recovers_exponential_ramp_from_active_start() {
        // Closed-form control for m = e^τ, ε₀ = 3; seeding at τ₀ = −0.5
        // (inside the active window) the ramp is recovered to 1e-6.
        let alpha = 1.0;
        let eps0 = 3.0;
        let h = 0.002_f64;
        let tau0 = -0.5_f64;
        let n = ((1.2 - tau0) / h).round() as usize + 1;
        let taus: Vec<f64> = (0..n).map(|i| tau0 + i as f64 * h).collect();
        let omegas: Vec<f64> =
            taus.iter().map(|&t| (alpha / 4.0 - eps0) * sech(alpha * t)).collect();
        let w = ControlWaveform::from_samples(&taus, &omegas).unwrap();
        let p = profile_from_control(&w, tau0.exp(), eps0).unwrap();
        let (m1, _) = p.eval(1.0).unwrap();
        let want = 1.0_f64.exp();
        assert!(
            (m1 - want).abs() <= 1e-6 * want,
            "m(1) = {m1}, relative error {:.3e}",
            (m1 - want).abs() / want
        );
    }

    #[test]
    fn reconstruction_from_deep_tail_amplifies_roundoff_past_tolerance() {
        // Same ramp, but seeded at τ₀ = −20: relative errors grow like
        // e^{(4ε₀−α)τ} ≈ e^{11τ} until τ = 0, so double precision cannot
        // reach the 1e-6 target from that start. Pin the failure so the
        // instability documented on profile_from_control stays observable.
        let alpha = 1.0;
        let eps0 = 3.0;
        let h = 0.002_f64;
        let tau0 = -20.0_f64;
        let n = ((1.2 - tau0) / h).round() as usize + 1;
        let taus: Vec<f64> = (0..n).map(|i| tau0 + i as f64 * h).collect();
        let omegas: Vec<f64> =
            taus.iter().map(|&t| (alpha / 4.0 - eps0) * sech(alpha * t)).collect();
        let w = ControlWaveform::from_samples(&taus, &omegas).unwrap();
        match profile_from_control(&w, tau0.exp(), eps0) {
            Ok(p) => {
                let (m1, _) = p.eval(1.0).unwrap();
                let rel = (m1 - 1.0_f64.exp()).abs() / 1.0_f64.exp();
                assert!(rel > 1e-6, "deep-tail start unexpectedly accurate: {rel:.3e}");
            }
            Err(Error::FiniteEscape { .. }) => {}
            Err(other) => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn reconstruction_detects_finite_time_escape() {
        // Ω ≡ 0 with ε₀ = 3 gives pure exponential growth m = m₀e^{12τ},
        // crossing 1e12 near τ = ln(1e12/m₀)/12.
        let n = 4001;
        let h = 0.001;
        let taus: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        let omegas = vec![0.0; n];
        let w = ControlWaveform::from_samples(&taus, &omegas).unwrap();
        match profile_from_control(&w, 1.0, 3.0) {
            Err(Error::FiniteEscape { tau, .. }) => {
                let want = (1e12_f64).ln() / 12.0;
                assert!((tau - want).abs() < 0.05, "escape at {tau}, expected near {want}");
            }
            other => panic!("expected finite escape, got {other:?}"),
        }
    }

    #[test]
    fn reconstruction_nodes_interpolate_exactly() {
        let n = 101;
        let h = 0.01;
        let taus: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        let omegas: Vec<f64> = taus.iter().map(|&t| 0.3 * (2.0 * t).cos()).collect();
        let w = ControlWaveform::from_samples(&taus, &omegas).unwrap();
        let p = profile_from_control(&w, 0.1, -2.0).unwrap();
        if let ModulationProfile::FromControl(rp) = &p {
            for i in [0, 17, 50, 100] {
                let (m, dm) = p.eval(taus[i]).unwrap();
                assert!((m - rp.m[i]).abs() < 1e-12);
                assert!((dm - rp.m_dot[i]).abs() < 1e-9);
            }
            // Hermite derivative is consistent with a finite difference of
            // the interpolant between nodes.
            let tau = 0.234;
            let d = 1e-6;
            let (_, dm) = p.eval(tau).unwrap();
            let (mp, _) = p.eval(tau + d).unwrap();
            let (mm, _) = p.eval(tau - d).unwrap();
            assert!((dm - (mp - mm) / (2.0 * d)).abs() < 1e-6);
        } else {
            panic!("expected reconstructed profile");
        }
    }

    #[test]
    fn domain_errors_carry_bounds() {
        let n = 11;
        let taus: Vec<f64> = (0..n).map(|i| i as f64 * 0.1).collect();
        let w = ControlWaveform::from_samples(&taus, &vec![0.1; n]).unwrap();
        let p = profile_from_control(&w, 0.0, 1.0).unwrap();
        match p.eval(2.0) {
            Err(Error::Domain { lo, hi, .. }) => {
                assert!((lo - 0.0).abs() < 1e-15);
                assert!((hi - 1.0).abs() < 1e-12);
            }
            other => panic!("expected domain error, got {other:?}"),
        }
        // Phase integral needs 0 in the domain.
        let taus: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 * 0.1).collect();
        let w = ControlWaveform::from_samples(&taus, &vec![0.1; n]).unwrap();
        let p = profile_from_control(&w, 0.0, 1.0).unwrap();
        assert!(matches!(p.phase_integral(1.5), Err(Error::Domain { .. })));
    }
}
