//! Small numerical kernels shared across modules.
//!
//! Everything here is deterministic and allocation-light: stable scalar
//! helpers for ratios that overflow naively, adaptive Simpson quadrature,
//! cubic interpolation at grid midpoints, a parabolic sub-grid peak fit, and
//! an ordinary least-squares line fit.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// log(1 + e^x) without overflow for large |x|.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// sech(x), underflowing cleanly to zero for large |x|.
pub fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

/// m/(m²+1) evaluated without overflow for any finite m.
pub fn sym_ratio(m: f64) -> f64 {
    if m.abs() > 1.0 {
        1.0 / (m + 1.0 / m)
    } else {
        m / (m * m + 1.0)
    }
}

/// 1/(m²+1); underflow to zero for huge |m| is the correct limit.
pub fn inv_one_plus_sq(m: f64) -> f64 {
    if m.abs() > 1.0 {
        let r = 1.0 / m;
        (r * r) / (1.0 + r * r)
    } else {
        1.0 / (m * m + 1.0)
    }
}

/// Adaptive Simpson quadrature of `f` over [a, b] with relative tolerance
/// `rel_tol` (floored at `abs_floor` for integrals near zero).
///
/// Classic bisection scheme with the Richardson correction (S₂ − S₁)/15 per
/// panel; errors out instead of returning a value that missed the tolerance.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, rel_tol: f64, abs_floor: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Numeric("quadrature endpoints must be finite".into()));
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fm = f(0.5 * (a + b));
    let fb = f(b);
    let whole = simpson_panel(a, b, fa, fm, fb);
    let tol = (rel_tol * whole.abs()).max(abs_floor);
    let mut out = 0.0;
    simpson_recurse(&f, a, b, fa, fm, fb, whole, tol, 48, &mut out)?;
    Ok(out)
}

fn simpson_panel(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    out: &mut f64,
) -> Result<()>
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson_panel(a, m, fa, flm, fm);
    let right = simpson_panel(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || (b - a).abs() < f64::EPSILON * (a.abs() + b.abs()) {
        if depth == 0 && delta.abs() > 15.0 * tol {
            return Err(Error::Numeric(format!(
                "adaptive quadrature exhausted its depth near [{a:.6}, {b:.6}] \
                 (panel error {:.3e}, tolerance {:.3e})",
                delta.abs() / 15.0,
                tol
            )));
        }
        *out += left + right + delta / 15.0;
        return Ok(());
    }
    if depth == 0 {
        return Err(Error::Numeric(format!(
            "adaptive quadrature exhausted its depth near [{a:.6}, {b:.6}] \
             (panel error {:.3e}, tolerance {:.3e})",
            delta.abs() / 15.0,
            tol
        )));
    }
    simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, out)?;
    simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, out)
}

/// Values of a uniformly sampled sequence at the midpoints j+1/2,
/// j = 0..n-2, by cubic Lagrange interpolation.
///
/// Interior midpoints use the centered four-point stencil
/// (−1, 9, 9, −1)/16; the first and last midpoints use the one-sided
/// four-point stencil (5, 15, −5, 1)/16 and its mirror. Both are O(h⁴).
/// Requires at least four samples.
pub fn cubic_midpoints(samples: &[C64]) -> Vec<C64> {
    let n = samples.len();
    assert!(n >= 4, "cubic midpoint interpolation needs at least 4 samples");
    let mut mid = Vec::with_capacity(n - 1);
    mid.push(
        (samples[0] * 5.0 + samples[1] * 15.0 - samples[2] * 5.0 + samples[3]) / 16.0,
    );
    for j in 1..n - 2 {
        mid.push(
            (-samples[j - 1] + samples[j] * 9.0 + samples[j + 1] * 9.0 - samples[j + 2]) / 16.0,
        );
    }
    mid.push(
        (samples[n - 1] * 5.0 + samples[n - 2] * 15.0 - samples[n - 3] * 5.0 + samples[n - 4])
            / 16.0,
    );
    mid
}

/// Real-valued version of [`cubic_midpoints`].
pub fn cubic_midpoints_real(samples: &[f64]) -> Vec<f64> {
    let n = samples.len();
    assert!(n >= 4, "cubic midpoint interpolation needs at least 4 samples");
    let mut mid = Vec::with_capacity(n - 1);
    mid.push((5.0 * samples[0] + 15.0 * samples[1] - 5.0 * samples[2] + samples[3]) / 16.0);
    for j in 1..n - 2 {
        mid.push(
            (-samples[j - 1] + 9.0 * samples[j] + 9.0 * samples[j + 1] - samples[j + 2]) / 16.0,
        );
    }
    mid.push(
        (5.0 * samples[n - 1] + 15.0 * samples[n - 2] - 5.0 * samples[n - 3] + samples[n - 4])
            / 16.0,
    );
    mid
}

/// Sub-grid offset of a parabola through three equally spaced samples with
/// the maximum at the middle sample.
///
/// Returns the offset δ ∈ [−1/2, 1/2] of the vertex relative to the middle
/// abscissa, in units of the spacing. Fails when the three points do not
/// bend downward (flat top or edge maximum).
pub fn parabolic_peak_offset(y_minus: f64, y_0: f64, y_plus: f64) -> Result<f64> {
    let curvature = y_minus - 2.0 * y_0 + y_plus;
    if curvature >= 0.0 || curvature.is_nan() {
        return Err(Error::FitFailed(format!(
            "parabolic peak fit needs negative curvature, got {curvature:.3e}"
        )));
    }
    let delta = 0.5 * (y_minus - y_plus) / curvature;
    if delta.abs() > 0.5 + 1e-9 {
        return Err(Error::FitFailed(format!(
            "parabolic peak vertex offset {delta:.3} leaves the sample triple"
        )));
    }
    Ok(delta.clamp(-0.5, 0.5))
}

/// Ordinary least-squares line y = slope·x + intercept.
///
/// Fails for fewer than two points or degenerate abscissas.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return Err(Error::FitFailed("line fit needs at least two points".into()));
    }
    let xm = xs.iter().sum::<f64>() / n as f64;
    let ym = ys.iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - xm) * (x - xm);
        sxy += (x - xm) * (y - ym);
    }
    if sxx <= 0.0 {
        return Err(Error::FitFailed("line fit abscissas are degenerate".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, ym - slope * xm))
}
