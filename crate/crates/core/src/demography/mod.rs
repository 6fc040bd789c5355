//! Closed-form demography of a fixed trait.
//!
//! Everything here derives from the two-type age-structured linear dynamics
//! of a trait `x`: type 1 are individuals carrying `(x_b, x_d)`, type 2 the
//! Lansing offspring carrying `(x_b, 0)`. The renewal ("characteristic")
//! matrix `F(z)` of that system is lower triangular, which makes the growth
//! rate, the stable age profile, the logistic equilibrium, and invasion
//! fitness all available in closed form.

mod branching;
mod malthus;

pub use branching::{survival_probability_mc, survival_probability_mc_with, SurvivalMcConfig};
pub use malthus::{fitness_gradient, generation_time, malthusian};
pub(crate) use malthus::{gradient_magnitude, span_growth_rate, span_growth_rate_from_guess};

use serde::Serialize;

use crate::life_trait::{LifeTrait, TraitRegion};
use crate::numeric::{exp_integral, phi};
use crate::{Error, Result};

/// Entries of the lower-triangular renewal matrix `F(z)`:
///
/// * `f11 = int_0^tau e^{-z a} da` — type-1 self-renewal; `f11(lambda) = 1`.
/// * `f21 = int_{x_d}^{x_b} e^{-z a - (a - x_d)} da` when `x_d < x_b`
///   (senescent-phase births, the Lansing flux), else `0`.
/// * `f22 = int_0^{x_b} e^{-(1+z) a} da` — type-2 self-renewal; `< 1` for
///   `z = lambda >= 0`, so type 2 cannot sustain itself.
pub fn char_matrix_entries(x: &LifeTrait, z: f64) -> (f64, f64, f64) {
    let tau = x.min_span();
    let f11 = exp_integral(z, 0.0, tau);
    let f22 = exp_integral(1.0 + z, 0.0, x.x_b);
    let f21 = if x.x_d < x.x_b {
        let w = x.x_b - x.x_d;
        w * (-z * x.x_d).exp() * phi((1.0 + z) * w)
    } else {
        0.0
    };
    (f11, f21, f22)
}

/// The stable age profile of a viable trait: the positive eigenfunction of
/// the linear dynamics at growth rate `lambda`, normalized so the type-1
/// boundary value is 1.
#[derive(Debug, Clone, Copy)]
pub struct StableAgeDistribution {
    pub lambda: f64,
    x_d: f64,
    /// Type-2 boundary weight `F21(lambda) / (1 - F22(lambda))`; zero when
    /// `x_b <= x_d` (no senescent-phase births).
    pub n2_coeff: f64,
}

impl StableAgeDistribution {
    /// Type-1 profile `e^{-(lambda a + max(a - x_d, 0))}`.
    #[must_use]
    pub fn n1(&self, a: f64) -> f64 {
        (-(self.lambda * a + (a - self.x_d).max(0.0))).exp()
    }

    /// Type-2 profile `n2_coeff * e^{-(1 + lambda) a}`.
    #[must_use]
    pub fn n2(&self, a: f64) -> f64 {
        self.n2_coeff * (-(1.0 + self.lambda) * a).exp()
    }

    /// `int_0^inf n1`.
    #[must_use]
    pub fn n1_total(&self) -> f64 {
        self.x_d * phi(self.lambda * self.x_d)
            + (-self.lambda * self.x_d).exp() / (1.0 + self.lambda)
    }

    /// `int_0^inf n2`.
    #[must_use]
    pub fn n2_total(&self) -> f64 {
        self.n2_coeff / (1.0 + self.lambda)
    }
}

/// Stable age profile of a viable trait.
pub fn stable_age_distribution(x: &LifeTrait) -> Result<StableAgeDistribution> {
    x.require_viable()?;
    let lambda = span_growth_rate(x.min_span());
    let (_, f21, f22) = char_matrix_entries(x, lambda);
    Ok(StableAgeDistribution {
        lambda,
        x_d: x.x_d,
        n2_coeff: f21 / (1.0 - f22),
    })
}

/// Lotka-Volterra interaction coefficients of the two types against the
/// stable profile: `a21` (fraction of type-1 births landing in type 2) and
/// `a22 = -e^{-(1+lambda) x_b}` (type-2 self-renewal deficit), with
/// `a11 = lambda` and `a12 = 0` implicit.
pub fn interaction_coeffs(x: &LifeTrait) -> Result<(f64, f64)> {
    x.require_viable()?;
    let lambda = span_growth_rate(x.min_span());
    let (_, f21, f22) = char_matrix_entries(x, lambda);
    let dist = StableAgeDistribution {
        lambda,
        x_d: x.x_d,
        n2_coeff: 0.0,
    };
    let a21 = f21 / dist.n1_total();
    let a22 = (1.0 + lambda) * f22 - 1.0;
    Ok((a21, a22))
}

/// Complete demographic description of a viable trait under logistic
/// competition with rate `eta`.
#[derive(Debug, Clone)]
pub struct DemographicProfile {
    pub life_trait: LifeTrait,
    pub region: TraitRegion,
    pub eta: f64,
    pub lambda: f64,
    /// `None` on the diagonal, where the growth rate has a corner.
    pub grad_lambda: Option<[f64; 2]>,
    pub gen_time: f64,
    pub f11: f64,
    pub f21: f64,
    pub f22: f64,
    pub n2_coeff: f64,
    pub a21: f64,
    pub a22: f64,
    /// Equilibrium masses of the two types; `eta * (rho1 + rho2) = lambda`.
    pub rho1: f64,
    pub rho2: f64,
    /// Equilibrium boundary densities (newborn flux) of the two types.
    pub n1_at_0: f64,
    pub n2_at_0: f64,
}

/// The unique positive equilibrium of the logistic age-structured dynamics
/// of a viable trait.
pub fn equilibrium(x: &LifeTrait, eta: f64) -> Result<DemographicProfile> {
    let region = x.require_viable()?;
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::Parameter {
            name: "eta",
            value: eta,
            requirement: "must be finite and > 0",
        });
    }
    let tau = x.min_span();
    let lambda = span_growth_rate(tau);
    let (f11, f21, f22) = char_matrix_entries(x, lambda);
    let n2_coeff = f21 / (1.0 - f22);
    let dist = StableAgeDistribution {
        lambda,
        x_d: x.x_d,
        n2_coeff,
    };
    let u1 = dist.n1_total();
    let u2 = 1.0 / (1.0 + lambda);
    let n1_at_0 = (lambda / eta) / (u1 + u2 * n2_coeff);
    let n2_at_0 = n1_at_0 * n2_coeff;
    let grad_lambda = match region {
        TraitRegion::U1 => Some([gradient_magnitude(tau, lambda), 0.0]),
        TraitRegion::U2 => Some([0.0, gradient_magnitude(tau, lambda)]),
        _ => None,
    };
    let (a21, a22) = (f21 / u1, (1.0 + lambda) * f22 - 1.0);
    Ok(DemographicProfile {
        life_trait: *x,
        region,
        eta,
        lambda,
        grad_lambda,
        gen_time: generation_time(x, lambda)?,
        f11,
        f21,
        f22,
        n2_coeff,
        a21,
        a22,
        rho1: n1_at_0 * u1,
        rho2: n2_at_0 * u2,
        n1_at_0,
        n2_at_0,
    })
}

/// Invasion fitness of a mutant `invader` against an established `resident`:
/// `max(lambda(invader) - lambda(resident), 0)`, the survival probability of
/// the mutant's lineage in the resident's equilibrium environment.
pub fn invasion_fitness(invader: &LifeTrait, resident: &LifeTrait) -> Result<f64> {
    resident.require_viable()?;
    if invader.min_span() <= 0.0 {
        // No fertile-and-safe span at all: the lineage is doomed.
        return Ok(0.0);
    }
    let li = span_growth_rate(invader.min_span());
    let lr = span_growth_rate(resident.min_span());
    Ok((li - lr).max(0.0))
}

/// Whether `invader` has positive invasion fitness against `resident`,
/// equivalently whether its fertile-and-safe span is strictly longer.
pub fn can_invade(invader: &LifeTrait, resident: &LifeTrait) -> Result<bool> {
    resident.require_viable()?;
    Ok(invader.min_span() > resident.min_span())
}

/// JSON-friendly summary of a trait's demography, as printed by the CLI.
/// Fields that do not exist for the trait's region are `null`.
#[derive(Debug, Clone, Serialize)]
pub struct TraitSummary {
    pub x_b: f64,
    pub x_d: f64,
    pub region: TraitRegion,
    /// `null` when the growth rate is off the representable range
    /// (fertile-and-safe span ~< 2e-8).
    pub lambda: Option<f64>,
    pub grad: Option<[f64; 2]>,
    #[serde(rename = "G")]
    pub gen_time: Option<f64>,
    #[serde(rename = "F11")]
    pub f11: Option<f64>,
    #[serde(rename = "F21")]
    pub f21: Option<f64>,
    #[serde(rename = "F22")]
    pub f22: Option<f64>,
    pub a21: Option<f64>,
    pub a22: Option<f64>,
    pub rho1: Option<f64>,
    pub rho2: Option<f64>,
    pub n1_0: Option<f64>,
    pub n2_0: Option<f64>,
}

impl TraitSummary {
    /// Compute whatever is defined for the trait: growth rate and renewal
    /// entries whenever the span is positive, equilibrium quantities only on
    /// the viable set.
    #[must_use]
    pub fn compute(x: &LifeTrait, eta: f64) -> Self {
        let region = x.region();
        let mut s = Self {
            x_b: x.x_b,
            x_d: x.x_d,
            region,
            lambda: None,
            grad: None,
            gen_time: None,
            f11: None,
            f21: None,
            f22: None,
            a21: None,
            a22: None,
            rho1: None,
            rho2: None,
            n1_0: None,
            n2_0: None,
        };
        if x.min_span() > 0.0 {
            let lambda = span_growth_rate(x.min_span());
            if lambda.is_finite() {
                let (f11, f21, f22) = char_matrix_entries(x, lambda);
                s.lambda = Some(lambda);
                s.gen_time = generation_time(x, lambda).ok();
                s.f11 = Some(f11);
                s.f21 = Some(f21);
                s.f22 = Some(f22);
            }
        }
        if let Ok(profile) = equilibrium(x, eta) {
            s.grad = profile.grad_lambda;
            s.a21 = Some(profile.a21);
            s.a22 = Some(profile.a22);
            s.rho1 = Some(profile.rho1);
            s.rho2 = Some(profile.rho2);
            s.n1_0 = Some(profile.n1_at_0);
            s.n2_0 = Some(profile.n2_at_0);
        }
        s
    }
}
