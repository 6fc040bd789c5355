//! Monte Carlo check of the invasion-fitness identity.
//!
//! A rare mutant lineage in a resident population at equilibrium is a
//! bi-type age-dependent branching process: each individual gives birth
//! while younger than `y_b`, dies at its intrinsic rate once older than its
//! inherited senescence age, and additionally dies at the resident's
//! crowding rate `lambda(x)`. Offspring of a parent past its senescence age
//! inherit a senescence age of zero (the Lansing rule). The survival
//! probability of that lineage equals `max(lambda(y) - lambda(x), 0)`
//! exactly; the simulator here estimates it independently by thinning.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::life_trait::LifeTrait;
use crate::{Error, Result};

use super::span_growth_rate;

/// Stopping rules for one replicate of the lineage simulation.
#[derive(Debug, Clone, Copy)]
pub struct SurvivalMcConfig {
    /// Population size at which the lineage is declared established.
    pub census_threshold: usize,
    /// Time at which a still-alive lineage is declared established.
    pub time_cap: f64,
}

impl Default for SurvivalMcConfig {
    fn default() -> Self {
        Self {
            census_threshold: 1000,
            time_cap: 500.0,
        }
    }
}

/// Estimate the establishment probability of an `invader` lineage in the
/// equilibrium environment of `resident`, with default stopping rules.
/// Returns `(estimate, standard_error)`.
pub fn survival_probability_mc(
    invader: &LifeTrait,
    resident: &LifeTrait,
    replicates: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    survival_probability_mc_with(
        invader,
        resident,
        replicates,
        seed,
        &SurvivalMcConfig::default(),
    )
}

/// As [`survival_probability_mc`], with explicit stopping rules.
pub fn survival_probability_mc_with(
    invader: &LifeTrait,
    resident: &LifeTrait,
    replicates: usize,
    seed: u64,
    config: &SurvivalMcConfig,
) -> Result<(f64, f64)> {
    resident.require_viable()?;
    if replicates == 0 {
        return Err(Error::Parameter {
            name: "replicates",
            value: 0.0,
            requirement: "must be >= 1",
        });
    }
    if config.census_threshold == 0 || !(config.time_cap > 0.0) {
        return Err(Error::StoppingRule(
            "census_threshold must be >= 1 and time_cap > 0".into(),
        ));
    }
    let crowding = span_growth_rate(resident.min_span());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut survivors = 0usize;
    for _ in 0..replicates {
        if lineage_survives(invader, crowding, config, &mut rng) {
            survivors += 1;
        }
    }
    let n = replicates as f64;
    let p = survivors as f64 / n;
    Ok((p, (p * (1.0 - p) / n).sqrt()))
}

/// One replicate: a single age-0 individual carrying the invader trait,
/// simulated by uniformized thinning with the per-individual event bound
/// `2 + crowding` (birth rate at most 1, death rate at most `1 + crowding`).
fn lineage_survives(
    invader: &LifeTrait,
    crowding: f64,
    config: &SurvivalMcConfig,
    rng: &mut ChaCha8Rng,
) -> bool {
    // Each individual is its birth time plus whether it is a Lansing
    // offspring (senescence age zero) rather than a full-trait carrier.
    let mut pop: Vec<(f64, bool)> = vec![(0.0, false)];
    let bound = 2.0 + crowding;
    let mut t = 0.0;
    loop {
        if pop.is_empty() {
            return false;
        }
        if pop.len() >= config.census_threshold {
            return true;
        }
        let total = bound * pop.len() as f64;
        t += -rng.random::<f64>().ln() / total;
        if t >= config.time_cap {
            return true;
        }
        let idx = rng.random_range(0..pop.len());
        let (born, lansing) = pop[idx];
        let age = t - born;
        let birth_rate = if age < invader.x_b { 1.0 } else { 0.0 };
        let senescence = if lansing { 0.0 } else { invader.x_d };
        let death_rate = if age > senescence { 1.0 } else { 0.0 } + crowding;
        let u = rng.random::<f64>() * bound;
        if u < birth_rate {
            pop.push((t, age > senescence));
        } else if u < birth_rate + death_rate {
            pop.swap_remove(idx);
        }
        // Otherwise a null event: nothing changes but the clock.
    }
}
