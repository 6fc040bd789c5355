//! The trait plane: pairs `(x_b, x_d)` and their partition into regions.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Half-width of the band around `x_b = x_d` classified as [`TraitRegion::Diagonal`].
pub const DELTA_DIAGONAL: f64 = 1e-12;

/// A life-history trait: reproduction is possible up to age `x_b`, and the
/// added death rate switches on past age `x_d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifeTrait {
    pub x_b: f64,
    pub x_d: f64,
}

/// Where a trait sits in the plane, which determines its demography.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraitRegion {
    /// Viable, `x_b < x_d`: reproduction always stops before senescence.
    U1,
    /// Viable, `x_d < x_b`: a senescent-but-fertile phase exists, so the
    /// Lansing effect operates.
    U2,
    /// Viable with `x_b = x_d` (within [`DELTA_DIAGONAL`]).
    Diagonal,
    /// `min(x_b, x_d) <= 1`: the population cannot sustain itself.
    NonViable,
}

impl LifeTrait {
    /// Validate and build a trait. Coordinates must be finite and `>= 0`.
    pub fn new(x_b: f64, x_d: f64) -> Result<Self> {
        if !(x_b.is_finite() && x_d.is_finite() && x_b >= 0.0 && x_d >= 0.0) {
            return Err(Error::InvalidTrait { xb: x_b, xd: x_d });
        }
        Ok(Self { x_b, x_d })
    }

    /// The fertile-and-safe span `min(x_b, x_d)`: the only part of the trait
    /// the growth rate depends on.
    #[inline]
    #[must_use]
    pub fn min_span(&self) -> f64 {
        self.x_b.min(self.x_d)
    }

    /// Region under the default diagonal tolerance [`DELTA_DIAGONAL`].
    #[must_use]
    pub fn region(&self) -> TraitRegion {
        self.region_with_tol(DELTA_DIAGONAL)
    }

    /// Region with an explicit diagonal half-width `delta`.
    #[must_use]
    pub fn region_with_tol(&self, delta: f64) -> TraitRegion {
        if self.min_span() <= 1.0 {
            TraitRegion::NonViable
        } else if (self.x_b - self.x_d).abs() <= delta {
            TraitRegion::Diagonal
        } else if self.x_b < self.x_d {
            TraitRegion::U1
        } else {
            TraitRegion::U2
        }
    }

    /// `min(x_b, x_d) > 1`, the condition for a positive growth rate.
    #[inline]
    #[must_use]
    pub fn is_viable(&self) -> bool {
        self.min_span() > 1.0
    }

    /// Require viability, returning the region.
    pub fn require_viable(&self) -> Result<TraitRegion> {
        let region = self.region();
        if region == TraitRegion::NonViable {
            Err(Error::NonViable(*self))
        } else {
            Ok(region)
        }
    }
}

impl std::fmt::Display for LifeTrait {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "x_b = {}, x_d = {}", self.x_b, self.x_d)
    }
}
