//! Trait substitution sequence: the jump process on viable traits that the
//! stochastic population reduces to in the rare-mutation, small-population
//! scaling. The population sits at the equilibrium of its current trait; a
//! mutant step of size `epsilon * h` on one coordinate is proposed at rate
//! proportional to the equilibrium newborn flux, and fixes with probability
//! equal to its growth-rate gain (zero unless it extends the
//! fertile-and-safe span, so only the smaller coordinate ever moves).
//!
//! Draw order per proposal (fixed for reproducibility): waiting time,
//! coordinate choice, step size, then an acceptance uniform only when the
//! growth-rate gain is positive. The subordinated variant inserts one
//! laziness uniform after the waiting time.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::demography::{equilibrium, span_growth_rate_from_guess};
use crate::inclusion::{Inclusion, InclusionConfig};
use crate::kernel::MutationKernel;
use crate::life_trait::{LifeTrait, TraitRegion};
use crate::numeric::adaptive_simpson_seeded;
use crate::{Error, Result, DELTA_DIAGONAL};

/// Mass of the positive half of the symmetric mutation kernel.
pub const POSITIVE_STEP_MASS: f64 = 0.5;

/// Consecutive rejected proposals after which a state within
/// [`DELTA_DIAGONAL`] of the diagonal is declared absorbed.
pub const ABSORPTION_REJECTIONS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TssConfig {
    pub sigma: f64,
    pub eta: f64,
    pub epsilon: f64,
}

impl Default for TssConfig {
    fn default() -> Self {
        Self {
            sigma: 0.05,
            eta: 0.0005,
            epsilon: 1.0,
        }
    }
}

impl TssConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("sigma", self.sigma),
            ("eta", self.eta),
            ("epsilon", self.epsilon),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Parameter {
                    name,
                    value,
                    requirement: "must be finite and > 0",
                });
            }
        }
        Ok(())
    }
}

/// Why a path stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TerminalReason {
    /// The time horizon was reached.
    TimeExhausted,
    /// The state is (numerically) on the diagonal and proposals stopped
    /// being accepted; evolution has halted.
    Absorbed,
    /// The requested jump budget was spent.
    JumpLimit,
}

impl TerminalReason {
    #[must_use]
    pub fn label(self) -> &'static str {
        match self {
            Self::TimeExhausted => "time_exhausted",
            Self::Absorbed => "absorbed",
            Self::JumpLimit => "jump_limit",
        }
    }
}

/// A right-continuous piecewise-constant trait path.
#[derive(Debug, Clone)]
pub struct JumpPath {
    /// Jump times; `times[0] = 0`.
    pub times: Vec<f64>,
    /// `traits[k]` is the state on `[times[k], times[k+1])`.
    pub traits: Vec<LifeTrait>,
    pub terminal_reason: TerminalReason,
    /// Time at which the path stopped (the horizon, or the absorption /
    /// jump-budget time).
    pub terminal_time: f64,
    pub epsilon: f64,
}

impl JumpPath {
    #[must_use]
    pub fn jump_count(&self) -> usize {
        self.times.len() - 1
    }

    /// State at time `t` (the initial state before the first jump, the
    /// final state after the last).
    #[must_use]
    pub fn trait_at(&self, t: f64) -> LifeTrait {
        let k = self.times.partition_point(|&s| s <= t);
        self.traits[k.saturating_sub(1)]
    }
}

/// Outcome of waiting for one substitution from a fixed state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Jump { wait: f64, to: LifeTrait },
    Absorbed { wait: f64, proposals: u64 },
    TimeExhausted,
}

fn propose_coordinate<R: Rng + ?Sized>(rng: &mut R) -> usize {
    usize::from(rng.random::<f64>() >= 0.5)
}

fn exp_wait<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    -(1.0 - rng.random::<f64>()).ln() / rate
}

fn step_inner<R: Rng + ?Sized>(
    x: &LifeTrait,
    cfg: &TssConfig,
    kernel: &MutationKernel,
    time_budget: f64,
    rng: &mut R,
) -> Result<StepOutcome> {
    let eq = equilibrium(x, cfg.eta)?;
    let rate = eq.n1_at_0 * POSITIVE_STEP_MASS / (cfg.epsilon * cfg.epsilon);
    let tau = x.min_span();
    let near_diagonal = x.region_with_tol(DELTA_DIAGONAL) == TraitRegion::Diagonal;
    let mut elapsed = 0.0;
    let mut proposals: u64 = 0;
    let mut rejections: u64 = 0;
    loop {
        elapsed += exp_wait(rate, rng);
        if elapsed > time_budget {
            return Ok(StepOutcome::TimeExhausted);
        }
        proposals += 1;
        let coord = propose_coordinate(rng);
        let step = cfg.epsilon * kernel.sample_abs(rng);
        let candidate = if coord == 0 {
            LifeTrait::new(x.x_b + step, x.x_d)?
        } else {
            LifeTrait::new(x.x_b, x.x_d + step)?
        };
        let tau_new = candidate.min_span();
        // A proposal that leaves the fertile-and-safe span unchanged has
        // zero growth-rate gain: reject it without solving for the rate.
        if tau_new > tau {
            let gain = span_growth_rate_from_guess(tau_new, eq.lambda) - eq.lambda;
            assert!(
                gain < 1.0,
                "growth-rate gain {gain} must stay below 1 to be a probability"
            );
            if gain > 0.0 && rng.random::<f64>() < gain {
                return Ok(StepOutcome::Jump {
                    wait: elapsed,
                    to: candidate,
                });
            }
        }
        rejections += 1;
        if near_diagonal && rejections >= ABSORPTION_REJECTIONS {
            return Ok(StepOutcome::Absorbed {
                wait: elapsed,
                proposals,
            });
        }
    }
}

/// Wait (at most `time_budget`) for the next substitution from state `x`.
pub fn tss_step<R: Rng + ?Sized>(
    x: &LifeTrait,
    cfg: &TssConfig,
    time_budget: f64,
    rng: &mut R,
) -> Result<StepOutcome> {
    cfg.validate()?;
    x.require_viable()?;
    let kernel = MutationKernel::new(cfg.sigma)?;
    step_inner(x, cfg, &kernel, time_budget, rng)
}

fn check_horizon(t_end: f64) -> Result<()> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::Parameter {
            name: "t_end",
            value: t_end,
            requirement: "must be finite and > 0",
        });
    }
    Ok(())
}

/// Simulate the substitution sequence from `x0` up to time `t_end` (or
/// until `max_jumps` substitutions, or absorption on the diagonal).
pub fn run_tss(
    x0: &LifeTrait,
    cfg: &TssConfig,
    t_end: f64,
    max_jumps: Option<u64>,
    seed: u64,
) -> Result<JumpPath> {
    cfg.validate()?;
    x0.require_viable()?;
    check_horizon(t_end)?;
    let kernel = MutationKernel::new(cfg.sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut times = vec![0.0];
    let mut traits = vec![*x0];
    let mut current = *x0;
    let mut t = 0.0;
    let (terminal_reason, terminal_time) = loop {
        if max_jumps.is_some_and(|limit| times.len() as u64 - 1 >= limit) {
            break (TerminalReason::JumpLimit, t);
        }
        match step_inner(&current, cfg, &kernel, t_end - t, &mut rng)? {
            StepOutcome::TimeExhausted => break (TerminalReason::TimeExhausted, t_end),
            StepOutcome::Absorbed { wait, .. } => {
                t += wait;
                break (TerminalReason::Absorbed, t);
            }
            StepOutcome::Jump { wait, to } => {
                t += wait;
                current = to;
                times.push(t);
                traits.push(to);
            }
        }
    };
    Ok(JumpPath {
        times,
        traits,
        terminal_reason,
        terminal_time,
        epsilon: cfg.epsilon,
    })
}

/// Certified upper bound on the equilibrium newborn flux over every state
/// reachable from `x0` by time `t_end` (coordinates only increase, at a
/// speed bounded by the canonical drift): 1.1x the maximum over a 50x50
/// grid on the reachable rectangle, the rectangle itself fixed by
/// iterating a drift-based speed estimate.
pub fn boundary_density_bound(x0: &LifeTrait, cfg: &TssConfig, t_end: f64) -> Result<f64> {
    cfg.validate()?;
    x0.require_viable()?;
    check_horizon(t_end)?;
    let incl = Inclusion::new(InclusionConfig {
        sigma: cfg.sigma,
        eta: cfg.eta,
        dt: 1e-3,
    })?;
    let mut speed = incl.f_drift(x0, 1.0)?;
    let mut reach = cfg.epsilon;
    for _ in 0..3 {
        reach = 1.2 * speed * t_end + cfg.epsilon;
        let mut max_f: f64 = 0.0;
        for i in 0..=10 {
            for j in 0..=10 {
                let p = LifeTrait::new(
                    x0.x_b + reach * f64::from(i) / 10.0,
                    x0.x_d + reach * f64::from(j) / 10.0,
                )?;
                max_f = max_f.max(incl.f_drift(&p, 1.0)?);
            }
        }
        speed = max_f;
    }
    let mut max_flux: f64 = 0.0;
    for i in 0..50 {
        for j in 0..50 {
            let p = LifeTrait::new(
                x0.x_b + reach * f64::from(i) / 49.0,
                x0.x_d + reach * f64::from(j) / 49.0,
            )?;
            max_flux = max_flux.max(equilibrium(&p, cfg.eta)?.n1_at_0);
        }
    }
    Ok(1.1 * max_flux)
}

/// Simulate the substitution sequence driven by a single homogeneous
/// Poisson clock: ticks arrive at the certified-bound rate and are thinned
/// by the ratio of the current state's newborn flux to the bound, which
/// reproduces the law of [`run_tss`] while keeping the clock
/// state-independent. A state whose flux exceeds the certified bound
/// aborts the run.
pub fn run_subordinated(
    x0: &LifeTrait,
    cfg: &TssConfig,
    t_end: f64,
    max_jumps: Option<u64>,
    seed: u64,
) -> Result<JumpPath> {
    cfg.validate()?;
    x0.require_viable()?;
    check_horizon(t_end)?;
    let bound = boundary_density_bound(x0, cfg, t_end)?;
    let kernel = MutationKernel::new(cfg.sigma)?;
    let tick_rate = bound * POSITIVE_STEP_MASS / (cfg.epsilon * cfg.epsilon);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut times = vec![0.0];
    let mut traits = vec![*x0];
    let mut current = *x0;
    let mut eq = equilibrium(&current, cfg.eta)?;
    let mut tau = current.min_span();
    let mut near_diagonal = current.region_with_tol(DELTA_DIAGONAL) == TraitRegion::Diagonal;
    let mut rejections: u64 = 0;
    let mut t = 0.0;
    let (terminal_reason, terminal_time) = loop {
        if max_jumps.is_some_and(|limit| times.len() as u64 - 1 >= limit) {
            break (TerminalReason::JumpLimit, t);
        }
        t += exp_wait(tick_rate, &mut rng);
        if t > t_end {
            break (TerminalReason::TimeExhausted, t_end);
        }
        if eq.n1_at_0 > bound {
            return Err(Error::SubordinationBound {
                bound,
                observed: eq.n1_at_0,
            });
        }
        if rng.random::<f64>() >= eq.n1_at_0 / bound {
            continue; // lazy tick: the thinned clock did not fire here
        }
        let coord = propose_coordinate(&mut rng);
        let step = cfg.epsilon * kernel.sample_abs(&mut rng);
        let candidate = if coord == 0 {
            LifeTrait::new(current.x_b + step, current.x_d)?
        } else {
            LifeTrait::new(current.x_b, current.x_d + step)?
        };
        let tau_new = candidate.min_span();
        let mut accepted = false;
        if tau_new > tau {
            let gain = span_growth_rate_from_guess(tau_new, eq.lambda) - eq.lambda;
            assert!(
                gain < 1.0,
                "growth-rate gain {gain} must stay below 1 to be a probability"
            );
            accepted = gain > 0.0 && rng.random::<f64>() < gain;
        }
        if accepted {
            current = candidate;
            times.push(t);
            traits.push(current);
            eq = equilibrium(&current, cfg.eta)?;
            tau = current.min_span();
            near_diagonal = current.region_with_tol(DELTA_DIAGONAL) == TraitRegion::Diagonal;
            rejections = 0;
        } else {
            rejections += 1;
            if near_diagonal && rejections >= ABSORPTION_REJECTIONS {
                break (TerminalReason::Absorbed, t);
            }
        }
    };
    Ok(JumpPath {
        times,
        traits,
        terminal_reason,
        terminal_time,
        epsilon: cfg.epsilon,
    })
}

/// Analytic rate of accepted substitutions out of state `x`: proposal rate
/// times the kernel-averaged growth-rate gain.
pub fn jump_rate(x: &LifeTrait, cfg: &TssConfig) -> Result<f64> {
    cfg.validate()?;
    x.require_viable()?;
    let eq = equilibrium(x, cfg.eta)?;
    let kernel = MutationKernel::new(cfg.sigma)?;
    let mut total = 0.0;
    for coord in 0..2 {
        let (own, other) = if coord == 0 {
            (x.x_b, x.x_d)
        } else {
            (x.x_d, x.x_b)
        };
        if own >= other {
            continue; // raising the larger coordinate never changes the span
        }
        let weighted = |h: f64| {
            let tau_new = (own + cfg.epsilon * h).min(other);
            (span_growth_rate_from_guess(tau_new, eq.lambda) - eq.lambda) * kernel.density(h)
        };
        // The gain saturates once the step crosses the other coordinate;
        // integrate the two smooth pieces separately, resolving the kernel
        // scale inside each.
        let crossing = ((other - own) / cfg.epsilon).min(1.0);
        let seed = |width: f64| (cfg.sigma / 4.0).min(width / 8.0);
        let mut integral = adaptive_simpson_seeded(&weighted, 0.0, crossing, 1e-12, seed(crossing));
        if crossing < 1.0 {
            integral +=
                adaptive_simpson_seeded(&weighted, crossing, 1.0, 1e-12, seed(1.0 - crossing));
        }
        total += eq.n1_at_0 / (2.0 * cfg.epsilon * cfg.epsilon) * integral;
    }
    Ok(total)
}

/// Expected displacement rate of the substitution sequence at state `x`:
/// substitution rate times kernel-weighted step size, per coordinate. Only
/// defined away from the diagonal (the step must not cross it).
pub fn mean_field_drift(x: &LifeTrait, cfg: &TssConfig) -> Result<[f64; 2]> {
    cfg.validate()?;
    x.require_viable()?;
    if (x.x_b - x.x_d).abs() < cfg.epsilon {
        return Err(Error::Diagonal(*x));
    }
    let eq = equilibrium(x, cfg.eta)?;
    let kernel = MutationKernel::new(cfg.sigma)?;
    let mut drift = [0.0; 2];
    for coord in 0..2 {
        let (own, other) = if coord == 0 {
            (x.x_b, x.x_d)
        } else {
            (x.x_d, x.x_b)
        };
        if own >= other {
            continue;
        }
        let weighted = |h: f64| {
            let gain = span_growth_rate_from_guess(own + cfg.epsilon * h, eq.lambda) - eq.lambda;
            gain / cfg.epsilon * h * kernel.density(h)
        };
        drift[coord] =
            eq.n1_at_0 / 2.0 * adaptive_simpson_seeded(&weighted, 0.0, 1.0, 1e-10, cfg.sigma / 4.0);
    }
    Ok(drift)
}
