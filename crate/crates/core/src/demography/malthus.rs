//! The Malthusian parameter: the growth rate `lambda` solving
//! `int_0^tau e^{-lambda a} da = 1` with `tau = min(x_b, x_d)`, plus the
//! generation time and the fitness gradient derived from it.

use crate::life_trait::{LifeTrait, TraitRegion};
use crate::numeric::{phi, psi};
use crate::{Error, Result};

/// Below this span the root lies under -1e9 and is reported as `-inf`.
const LAMBDA_FLOOR: f64 = -1e9;

/// Left-hand side minus one of the renewal equation, `tau * phi(l * tau) - 1`;
/// strictly decreasing in `l`.
#[inline]
fn residual(tau: f64, l: f64) -> f64 {
    tau * phi(l * tau) - 1.0
}

/// d/dl of the renewal integral: `-int_0^tau a e^{-l a} da`.
#[inline]
fn residual_slope(tau: f64, l: f64) -> f64 {
    -tau * tau * psi(l * tau)
}

/// Growth rate as a function of the fertile-and-safe span alone.
///
/// Exact root of the renewal equation by safeguarded Newton within a
/// bracketing interval. `tau > 1` gives a root in `(0, 1)`; `tau = 1` gives
/// exactly `0`; `tau < 1` gives a negative root, found by expanding the
/// bracket downward (returns `-inf` once the root would fall below -1e9,
/// i.e. for spans below roughly 2e-8).
#[must_use]
pub(crate) fn span_growth_rate(tau: f64) -> f64 {
    debug_assert!(tau > 0.0);
    if tau == 1.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = if tau > 1.0 {
        (0.0, 1.0)
    } else {
        let mut lo = -10.0;
        while residual(tau, lo) <= 0.0 {
            lo *= 2.0;
            if lo < LAMBDA_FLOOR {
                return f64::NEG_INFINITY;
            }
        }
        (lo, 0.0)
    };
    // Invariant: residual(lo) > 0 > residual(hi).
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = residual(tau, x);
        if fx == 0.0 {
            return x;
        }
        if fx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / residual_slope(tau, x);
        x = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * lo.abs().max(hi.abs()).max(1.0) {
            break;
        }
    }
    x
}

/// Newton refinement from a nearby guess, for hot loops that move `tau` by a
/// small step. Falls back to the full bracketed solve whenever the iteration
/// strays or stalls, so the result is always the true root.
#[must_use]
pub(crate) fn span_growth_rate_from_guess(tau: f64, guess: f64) -> f64 {
    debug_assert!(tau > 0.0);
    if tau == 1.0 {
        return 0.0;
    }
    if !guess.is_finite() {
        return span_growth_rate(tau);
    }
    let mut x = guess;
    for _ in 0..12 {
        let fx = residual(tau, x);
        let step = fx / residual_slope(tau, x);
        let next = x - step;
        if !next.is_finite() || next >= 1.0 {
            return span_growth_rate(tau);
        }
        if (next - x).abs() <= f64::EPSILON * x.abs().max(1.0) {
            return next;
        }
        x = next;
    }
    // Did not converge quickly: the guess was poor.
    span_growth_rate(tau)
}

/// The Malthusian parameter of a trait: the unique root of the renewal
/// equation over the fertile-and-safe span.
///
/// Positive (in `(0, 1)`) exactly on viable traits, zero at span 1, negative
/// below. Errors when the span is not strictly positive.
pub fn malthusian(x: &LifeTrait) -> Result<f64> {
    let tau = x.min_span();
    if tau <= 0.0 {
        return Err(Error::NoSpan(*x));
    }
    Ok(span_growth_rate(tau))
}

/// Generation time `int_0^tau a e^{-lambda a} da` for a trait with known
/// growth rate (the mean parental age at birth under the stable profile).
pub fn generation_time(x: &LifeTrait, lambda: f64) -> Result<f64> {
    let tau = x.min_span();
    if tau <= 0.0 {
        return Err(Error::NoSpan(*x));
    }
    if !lambda.is_finite() {
        return Err(Error::Parameter {
            name: "lambda",
            value: lambda,
            requirement: "must be finite",
        });
    }
    Ok(tau * tau * psi(lambda * tau))
}

/// Gradient of the growth rate in the trait plane.
///
/// Only the coordinate realizing `min(x_b, x_d)` matters, so the gradient is
/// `(e^{-lambda tau} / G, 0)` on U1 and `(0, e^{-lambda tau} / G)` on U2; it
/// does not exist on the diagonal, and is restricted to viable traits.
pub fn fitness_gradient(x: &LifeTrait) -> Result<[f64; 2]> {
    let region = x.require_viable()?;
    let lambda = span_growth_rate(x.min_span());
    let slope = gradient_magnitude(x.min_span(), lambda);
    match region {
        TraitRegion::U1 => Ok([slope, 0.0]),
        TraitRegion::U2 => Ok([0.0, slope]),
        TraitRegion::Diagonal => Err(Error::Diagonal(*x)),
        TraitRegion::NonViable => unreachable!("require_viable filtered this"),
    }
}

/// `e^{-lambda tau} / G`: the magnitude of the fitness gradient, which is
/// also the drift factor of the inclusion limit.
#[inline]
#[must_use]
pub(crate) fn gradient_magnitude(tau: f64, lambda: f64) -> f64 {
    (-lambda * tau).exp() / (tau * tau * psi(lambda * tau))
}
