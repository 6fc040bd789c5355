//! Small numerical utilities: stable evaluation of the exponential moments
//! that appear throughout the demography, and an adaptive Simpson integrator.

/// `phi(w) = (1 - e^{-w}) / w`, continued by `phi(0) = 1`.
///
/// Evaluated through `expm1`, which is accurate for small `w`, so no series
/// switch is needed.
#[inline]
#[must_use]
pub fn phi(w: f64) -> f64 {
    if w == 0.0 {
        1.0
    } else {
        -f64::exp_m1(-w) / w
    }
}

/// `psi(w) = (1 - (1 + w) e^{-w}) / w^2`, continued by `psi(0) = 1/2`.
///
/// The numerator loses all significant digits for small `w`, so below
/// `|w| < 1e-3` a six-term Taylor expansion is used; its truncation error
/// there is below 1e-19 relative.
#[inline]
#[must_use]
pub fn psi(w: f64) -> f64 {
    if w.abs() < 1e-3 {
        0.5 + w * (-1.0 / 3.0 + w * (1.0 / 8.0 + w * (-1.0 / 30.0 + w * (1.0 / 144.0 - w / 840.0))))
    } else {
        (1.0 - (1.0 + w) * (-w).exp()) / (w * w)
    }
}

/// `int_a^b e^{-z t} dt`, stable for any `z` including `z = 0`.
#[inline]
#[must_use]
pub fn exp_integral(z: f64, a: f64, b: f64) -> f64 {
    let width = b - a;
    width * (-z * a).exp() * phi(z * width)
}

/// Adaptive Simpson quadrature with absolute-error target `tol`.
///
/// Subdivision is forced down to 1/64 of the original interval before the
/// convergence test applies, so moderately sharp features cannot slip
/// between the initial sample points and fake early agreement.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    adaptive_simpson_seeded(f, a, b, tol, (b - a).abs() / 64.0)
}

/// Adaptive Simpson quadrature that refuses to terminate on any interval
/// wider than `seed_width`.
///
/// Use this when the integrand has structure on a known scale (for example
/// a Gaussian bump of width `sigma` in a much wider window): pass a
/// `seed_width` below that scale and the forced subdivision guarantees the
/// feature is actually sampled before the Richardson test can declare
/// convergence.
pub fn adaptive_simpson_seeded<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    seed_width: f64,
) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50, seed_width.abs())
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    seed_width: f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    let converged = (b - a) <= seed_width && delta.abs() <= 15.0 * tol;
    if depth == 0 || converged {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, seed_width)
            + simpson_step(
                f,
                m,
                b,
                fm,
                frm,
                fb,
                right,
                0.5 * tol,
                depth - 1,
                seed_width,
            )
    }
}

/// Linear interpolation of a sampled function at query time `t`.
///
/// `times` must be sorted ascending; outside the range the boundary value is
/// returned.
#[must_use]
pub fn interp_linear(times: &[f64], values: &[f64], t: f64) -> f64 {
    debug_assert_eq!(times.len(), values.len());
    match times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
        Ok(i) => values[i],
        Err(0) => values[0],
        Err(i) if i == times.len() => values[times.len() - 1],
        Err(i) => {
            let (t0, t1) = (times[i - 1], times[i]);
            let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
            values[i - 1] * (1.0 - w) + values[i] * w
        }
    }
}
