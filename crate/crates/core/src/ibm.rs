//! Exact individual-based simulation of the finite-population birth-death
//! process by acceptance/rejection thinning.
//!
//! Every individual carries its own trait `(x_b, x_d)`. While younger than
//! `x_b` it gives birth at rate 1; past `x_d` it dies at rate 1; everyone
//! additionally dies at the competition rate `eta` times the number of
//! competitors. At each birth the offspring's starting trait is the
//! parent's, except that a parent already past its senescence age transmits
//! `(x_b, 0)` (the Lansing rule); each coordinate then mutates with
//! probability `p_mut` through the bounded kernel of [`crate::kernel`].
//!
//! The simulator proposes events at the dominating per-individual rate
//! `R_max = 2 + eta*C` and accepts with the ratio of true to dominating
//! rate, which reproduces the continuous-time law exactly. The proposal
//! clock advances by an exponential time on every proposal, accepted or
//! not.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::kernel::MutationKernel;
use crate::life_trait::LifeTrait;
use crate::{Error, Result};

/// One alive individual of the working population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Individual {
    pub id: u64,
    pub parent_id: Option<u64>,
    pub life_trait: LifeTrait,
    pub birth_time: f64,
    pub alive: bool,
    /// The parent was past its senescence age at conception, so the
    /// pre-mutation trait at birth was `(parent x_b, 0)`.
    pub lansing_born: bool,
}

impl Individual {
    #[must_use]
    pub fn age(&self, now: f64) -> f64 {
        now - self.birth_time
    }
}

/// The working population: alive individuals only (dead ones leave through
/// the event log), plus the simulation clock.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationState {
    pub individuals: Vec<Individual>,
    pub clock: f64,
    pub live_count: usize,
    next_id: u64,
}

impl PopulationState {
    /// A founding population of `size` age-0 copies of `life_trait`.
    #[must_use]
    pub fn founding(life_trait: LifeTrait, size: usize) -> Self {
        let individuals: Vec<Individual> = (0..size as u64)
            .map(|id| Individual {
                id,
                parent_id: None,
                life_trait,
                birth_time: 0.0,
                alive: true,
                lansing_born: false,
            })
            .collect();
        Self {
            live_count: individuals.len(),
            individuals,
            clock: 0.0,
            next_id: size as u64,
        }
    }

    /// Recount the alive individuals by scan; must equal `live_count`.
    #[must_use]
    pub fn recount(&self) -> usize {
        self.individuals.iter().filter(|i| i.alive).count()
    }
}

/// What a single proposal did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EventKind {
    /// Birth with no mutated coordinate.
    ClonalBirth,
    /// Birth with exactly one mutated coordinate.
    MutantBirthSingle,
    /// Birth with both coordinates mutated.
    MutantBirthDouble,
    Death,
    /// Rejected proposal: only the clock moved.
    Null,
}

impl EventKind {
    #[must_use]
    pub fn is_accepted(self) -> bool {
        !matches!(self, EventKind::Null)
    }

    #[must_use]
    pub fn label(self) -> &'static str {
        match self {
            EventKind::ClonalBirth => "clonal_birth",
            EventKind::MutantBirthSingle => "mutant_birth_single",
            EventKind::MutantBirthDouble => "mutant_birth_double",
            EventKind::Death => "death",
            EventKind::Null => "null",
        }
    }
}

/// One line of the event log. For births, `id`/`life_trait` describe the
/// child and `parent_id` the parent; for deaths they describe the deceased.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRecord {
    pub time: f64,
    pub kind: EventKind,
    pub id: u64,
    pub parent_id: Option<u64>,
    pub life_trait: LifeTrait,
    pub lansing: bool,
}

/// When to stop a run; at least one bound must be set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule {
    /// Stop once this many accepted events have happened.
    pub max_jumps: Option<u64>,
    /// Stop at the first event time at or beyond this.
    pub t_end: Option<f64>,
}

/// Full configuration of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct IbmConfig {
    pub eta: f64,
    pub p_mut: f64,
    pub sigma: f64,
    pub initial_trait: LifeTrait,
    pub initial_size: usize,
    pub seed: u64,
    /// Whether an individual's own presence counts toward the competition
    /// pressure it feels (`eta * n` versus `eta * (n - 1)`).
    pub self_competition: bool,
    /// Use the unbounded resample-until-nonnegative mutation variant
    /// instead of the bounded kernel.
    pub unbounded_kernel: bool,
    pub stopping: StoppingRule,
    /// Take a population snapshot every this many accepted events
    /// (0 = only at start and end).
    pub snapshot_every: u64,
}

impl IbmConfig {
    fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::Parameter {
                name: "eta",
                value: self.eta,
                requirement: "must be finite and > 0",
            });
        }
        if !(0.0..=1.0).contains(&self.p_mut) {
            return Err(Error::Parameter {
                name: "p_mut",
                value: self.p_mut,
                requirement: "must lie in [0, 1]",
            });
        }
        if self.initial_size == 0 {
            return Err(Error::Parameter {
                name: "initial_size",
                value: 0.0,
                requirement: "must be >= 1",
            });
        }
        match self.stopping {
            StoppingRule {
                max_jumps: None,
                t_end: None,
            } => Err(Error::StoppingRule("set max_jumps, t_end, or both".into())),
            StoppingRule { t_end: Some(t), .. } if !(t > 0.0) => {
                Err(Error::StoppingRule(format!("t_end = {t} must be > 0")))
            }
            _ => Ok(()),
        }
    }
}

/// Population summary at one instant (variances are population variances).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Snapshot {
    pub time: f64,
    pub n_alive: usize,
    pub mean_xb: f64,
    pub mean_xd: f64,
    pub var_xb: f64,
    pub var_xd: f64,
}

impl Snapshot {
    /// Full scan of the current population.
    #[must_use]
    pub fn measure(state: &PopulationState) -> Self {
        let n = state.individuals.len();
        if n == 0 {
            return Self {
                time: state.clock,
                n_alive: 0,
                mean_xb: f64::NAN,
                mean_xd: f64::NAN,
                var_xb: f64::NAN,
                var_xd: f64::NAN,
            };
        }
        let inv = 1.0 / n as f64;
        let (mut sb, mut sd) = (0.0, 0.0);
        for i in &state.individuals {
            sb += i.life_trait.x_b;
            sd += i.life_trait.x_d;
        }
        let (mb, md) = (sb * inv, sd * inv);
        let (mut vb, mut vd) = (0.0, 0.0);
        for i in &state.individuals {
            vb += (i.life_trait.x_b - mb).powi(2);
            vd += (i.life_trait.x_d - md).powi(2);
        }
        Self {
            time: state.clock,
            n_alive: n,
            mean_xb: mb,
            mean_xd: md,
            var_xb: vb * inv,
            var_xd: vd * inv,
        }
    }
}

/// Result of a complete run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySummary {
    pub snapshots: Vec<Snapshot>,
    pub final_time: f64,
    pub final_count: usize,
    pub accepted_events: u64,
    pub proposals: u64,
    pub extinct: bool,
    pub final_traits: Vec<LifeTrait>,
}

/// A configured simulator (the mutation kernel is prepared once).
pub struct Ibm {
    cfg: IbmConfig,
    kernel: MutationKernel,
}

impl Ibm {
    pub fn new(cfg: IbmConfig) -> Result<Self> {
        cfg.validate()?;
        let kernel = MutationKernel::new(cfg.sigma)?;
        Ok(Self { cfg, kernel })
    }

    #[must_use]
    pub fn config(&self) -> &IbmConfig {
        &self.cfg
    }

    /// The founding population of this configuration.
    #[must_use]
    pub fn initial_state(&self) -> PopulationState {
        PopulationState::founding(self.cfg.initial_trait, self.cfg.initial_size)
    }

    /// One thinning proposal: advance the clock by an exponential time at
    /// the dominating total rate, pick a uniform individual, and accept a
    /// birth, a death, or nothing according to its true rates at its
    /// current age. Draw order per proposal: clock exponential, individual
    /// index, one uniform for the event band, then any mutation draws.
    pub fn event_step<R: Rng + ?Sized>(
        &self,
        state: &mut PopulationState,
        rng: &mut R,
    ) -> Result<EventRecord> {
        let n = state.live_count;
        if n == 0 {
            return Err(Error::Extinct);
        }
        let competitors = if self.cfg.self_competition { n } else { n - 1 };
        let crowding = self.cfg.eta * competitors as f64;
        let r_max = 2.0 + crowding;
        let total = r_max * n as f64;
        state.clock += -(1.0 - rng.random::<f64>()).ln() / total;
        let idx = rng.random_range(0..n);
        let parent = state.individuals[idx];
        let age = parent.age(state.clock);
        let birth_rate = if age <= parent.life_trait.x_b {
            1.0
        } else {
            0.0
        };
        let death_rate = if age > parent.life_trait.x_d {
            1.0
        } else {
            0.0
        } + crowding;
        let p = self.cfg.p_mut;
        let u = rng.random::<f64>() * r_max;
        let clone_band = birth_rate * (1.0 - p) * (1.0 - p);
        let single_band = clone_band + birth_rate * 2.0 * p * (1.0 - p);
        let record = if u < clone_band {
            self.give_birth(state, idx, EventKind::ClonalBirth, rng)
        } else if u < single_band {
            self.give_birth(state, idx, EventKind::MutantBirthSingle, rng)
        } else if u < birth_rate {
            self.give_birth(state, idx, EventKind::MutantBirthDouble, rng)
        } else if u < birth_rate + death_rate {
            let dead = state.individuals.swap_remove(idx);
            state.live_count -= 1;
            EventRecord {
                time: state.clock,
                kind: EventKind::Death,
                id: dead.id,
                parent_id: dead.parent_id,
                life_trait: dead.life_trait,
                lansing: dead.lansing_born,
            }
        } else {
            EventRecord {
                time: state.clock,
                kind: EventKind::Null,
                id: parent.id,
                parent_id: parent.parent_id,
                life_trait: parent.life_trait,
                lansing: false,
            }
        };
        Ok(record)
    }

    fn give_birth<R: Rng + ?Sized>(
        &self,
        state: &mut PopulationState,
        parent_idx: usize,
        kind: EventKind,
        rng: &mut R,
    ) -> EventRecord {
        let parent = state.individuals[parent_idx];
        let lansing = parent.age(state.clock) > parent.life_trait.x_d;
        let base = if lansing {
            LifeTrait {
                x_b: parent.life_trait.x_b,
                x_d: 0.0,
            }
        } else {
            parent.life_trait
        };
        let mutate = |value: f64, rng: &mut R| {
            if self.cfg.unbounded_kernel {
                self.kernel.mutate_unbounded(value, rng)
            } else {
                self.kernel.mutate(value, rng)
            }
        };
        let child_trait = match kind {
            EventKind::ClonalBirth => base,
            EventKind::MutantBirthSingle => {
                if rng.random::<f64>() < 0.5 {
                    LifeTrait {
                        x_b: mutate(base.x_b, rng),
                        ..base
                    }
                } else {
                    LifeTrait {
                        x_d: mutate(base.x_d, rng),
                        ..base
                    }
                }
            }
            EventKind::MutantBirthDouble => LifeTrait {
                x_b: mutate(base.x_b, rng),
                x_d: mutate(base.x_d, rng),
            },
            _ => unreachable!("give_birth is only called for birth kinds"),
        };
        let child = Individual {
            id: state.next_id,
            parent_id: Some(parent.id),
            life_trait: child_trait,
            birth_time: state.clock,
            alive: true,
            lansing_born: lansing,
        };
        state.next_id += 1;
        state.individuals.push(child);
        state.live_count += 1;
        EventRecord {
            time: state.clock,
            kind,
            id: child.id,
            parent_id: Some(parent.id),
            life_trait: child_trait,
            lansing,
        }
    }

    /// Run to the stopping rule, collecting snapshots.
    pub fn run(&self) -> Result<TrajectorySummary> {
        self.run_with(|_| {})
    }

    /// As [`Ibm::run`], additionally streaming every accepted event to
    /// `on_event` in order.
    pub fn run_with(&self, mut on_event: impl FnMut(&EventRecord)) -> Result<TrajectorySummary> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        let mut state = self.initial_state();
        let mut snapshots = vec![Snapshot::measure(&state)];
        let mut accepted: u64 = 0;
        let mut proposals: u64 = 0;
        let mut extinct = false;
        loop {
            if state.live_count == 0 {
                extinct = true;
                break;
            }
            if let Some(max) = self.cfg.stopping.max_jumps {
                if accepted >= max {
                    break;
                }
            }
            let record = self.event_step(&mut state, &mut rng)?;
            proposals += 1;
            if let Some(t_end) = self.cfg.stopping.t_end {
                // The proposal that crosses t_end is still part of the
                // trajectory; the run ends on it.
                if record.time >= t_end {
                    if record.kind.is_accepted() {
                        accepted += 1;
                        on_event(&record);
                    }
                    break;
                }
            }
            if record.kind.is_accepted() {
                accepted += 1;
                on_event(&record);
                if self.cfg.snapshot_every > 0 && accepted % self.cfg.snapshot_every == 0 {
                    snapshots.push(Snapshot::measure(&state));
                }
            }
        }
        snapshots.push(Snapshot::measure(&state));
        Ok(TrajectorySummary {
            final_time: state.clock,
            final_count: state.live_count,
            accepted_events: accepted,
            proposals,
            extinct,
            final_traits: state.individuals.iter().map(|i| i.life_trait).collect(),
            snapshots,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demography::{equilibrium, malthusian, stable_age_distribution};
    use crate::numeric::adaptive_simpson;
    use crate::testutil::{ks_critical_one, ks_statistic_cdf};
    use std::collections::HashMap;

    fn t(b: f64, d: f64) -> LifeTrait {
        LifeTrait::new(b, d).unwrap()
    }

    fn base_config() -> IbmConfig {
        IbmConfig {
            eta: 0.0005,
            p_mut: 0.05,
            sigma: 0.05,
            initial_trait: t(1.2, 2.5),
            initial_size: 50,
            seed: 1,
            self_competition: true,
            unbounded_kernel: false,
            stopping: StoppingRule {
                max_jumps: None,
                t_end: Some(5.0),
            },
            snapshot_every: 0,
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = base_config();
        cfg.eta = 0.0;
        assert!(Ibm::new(cfg).is_err());
        let mut cfg = base_config();
        cfg.p_mut = 1.2;
        assert!(Ibm::new(cfg).is_err());
        let mut cfg = base_config();
        cfg.initial_size = 0;
        assert!(Ibm::new(cfg).is_err());
        let mut cfg = base_config();
        cfg.stopping = StoppingRule {
            max_jumps: None,
            t_end: None,
        };
        assert!(Ibm::new(cfg).is_err());
        let mut cfg = base_config();
        cfg.sigma = -1.0;
        assert!(Ibm::new(cfg).is_err());
    }

    #[test]
    fn identical_seeds_give_identical_logs() {
        let sim = Ibm::new(base_config()).unwrap();
        let mut log_a = Vec::new();
        let a = sim.run_with(|e| log_a.push(e.clone())).unwrap();
        let mut log_b = Vec::new();
        let b = sim.run_with(|e| log_b.push(e.clone())).unwrap();
        assert!(!log_a.is_empty());
        assert_eq!(log_a, log_b);
        assert_eq!(a, b);
        // A different seed diverges.
        let mut cfg = base_config();
        cfg.seed = 2;
        let mut log_c = Vec::new();
        Ibm::new(cfg)
            .unwrap()
            .run_with(|e| log_c.push(e.clone()))
            .unwrap();
        assert_ne!(log_a, log_c);
    }

    #[test]
    fn live_count_stays_consistent_and_changes_by_one() {
        let sim = Ibm::new(base_config()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut state = sim.initial_state();
        let mut prev = state.live_count;
        for _ in 0..20_000 {
            if state.live_count == 0 {
                break;
            }
            let rec = sim.event_step(&mut state, &mut rng).unwrap();
            let delta = state.live_count as i64 - prev as i64;
            match rec.kind {
                EventKind::Death => assert_eq!(delta, -1),
                EventKind::Null => assert_eq!(delta, 0),
                _ => assert_eq!(delta, 1),
            }
            assert_eq!(state.live_count, state.recount());
            prev = state.live_count;
        }
    }

    /// Replay a log and check the Lansing rule at every birth: the flag is
    /// set exactly when the parent was past its senescence age, and flagged
    /// children start from a zero senescence age before mutation.
    #[test]
    fn lansing_rule_holds_on_full_log() {
        let mut cfg = base_config();
        cfg.initial_trait = t(2.5, 1.2);
        cfg.initial_size = 200;
        cfg.eta = 0.002;
        cfg.stopping = StoppingRule {
            max_jumps: None,
            t_end: Some(30.0),
        };
        let sim = Ibm::new(cfg.clone()).unwrap();
        let mut roster: HashMap<u64, (LifeTrait, f64)> = (0..cfg.initial_size as u64)
            .map(|id| (id, (cfg.initial_trait, 0.0)))
            .collect();
        let mut births = 0u64;
        let mut lansing_births = 0u64;
        sim.run_with(|e| match e.kind {
            EventKind::Death | EventKind::Null => {}
            _ => {
                births += 1;
                let (parent_trait, parent_born) = roster[&e.parent_id.unwrap()];
                let parent_age = e.time - parent_born;
                assert_eq!(
                    e.lansing,
                    parent_age > parent_trait.x_d,
                    "Lansing flag wrong at t={}",
                    e.time
                );
                if e.lansing {
                    lansing_births += 1;
                    // Pre-mutation senescence age is 0, so even a mutated
                    // child stays within the unit mutation window.
                    assert!(e.life_trait.x_d <= 1.0);
                    if e.kind == EventKind::ClonalBirth {
                        assert_eq!(e.life_trait.x_d, 0.0);
                        assert_eq!(e.life_trait.x_b, parent_trait.x_b);
                    }
                } else {
                    assert!((e.life_trait.x_d - parent_trait.x_d).abs() <= 1.0 + 1e-12);
                }
                assert!((e.life_trait.x_b - parent_trait.x_b).abs() <= 1.0 + 1e-12);
                roster.insert(e.id, (e.life_trait, e.time));
            }
        })
        .unwrap();
        assert!(births > 500, "want a substantial birth count, got {births}");
        assert!(
            lansing_births > 50,
            "senescent parents should reproduce here, got {lansing_births}"
        );
    }

    /// On a frozen two-individual state whose rates cannot change over the
    /// horizon, the waiting time to the first accepted event is exponential
    /// with the exact total rate.
    #[test]
    fn waiting_time_to_accepted_event_is_exponential() {
        let mut cfg = base_config();
        cfg.initial_trait = t(100.0, 100.0);
        cfg.initial_size = 2;
        cfg.eta = 0.3;
        cfg.p_mut = 0.0;
        let sim = Ibm::new(cfg).unwrap();
        let frozen = sim.initial_state();
        // Both individuals: birth rate 1, death rate 0 + eta*2.
        let exact_rate = 2.0 * (1.0 + 0.3 * 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut samples: Vec<f64> = (0..10_000)
            .map(|_| {
                let mut state = frozen.clone();
                loop {
                    let rec = sim.event_step(&mut state, &mut rng).unwrap();
                    if rec.kind.is_accepted() {
                        return rec.time;
                    }
                }
            })
            .collect();
        let ks = ks_statistic_cdf(&mut samples, |x| -(-exact_rate * x).exp_m1());
        assert!(
            ks < ks_critical_one(0.01, 10_000),
            "KS statistic {ks} too large"
        );
    }

    /// Accepted-event frequencies from a frozen state match the exact
    /// per-proposal band probabilities.
    #[test]
    fn event_frequencies_match_rates() {
        let mut cfg = base_config();
        cfg.initial_trait = t(2.0, 3.0);
        cfg.initial_size = 2;
        cfg.eta = 0.25;
        cfg.p_mut = 0.05;
        let sim = Ibm::new(cfg.clone()).unwrap();
        let mut frozen = sim.initial_state();
        // Individual 0: age 0.5 (fertile, pre-senescent); individual 1:
        // age 5 (past both ages). Clock 5, birth times chosen accordingly.
        frozen.clock = 5.0;
        frozen.individuals[0].birth_time = 4.5;
        frozen.individuals[1].birth_time = 0.0;
        let crowding = 0.25 * 2.0;
        let r_max = 2.0 + crowding;
        let p = cfg.p_mut;
        // Per proposal: pick each individual with probability 1/2.
        let p_clone = 0.5 * (1.0 - p) * (1.0 - p) / r_max;
        let p_single = 0.5 * 2.0 * p * (1.0 - p) / r_max;
        let p_double = 0.5 * p * p / r_max;
        let p_death = 0.5 * (crowding / r_max) + 0.5 * ((1.0 + crowding) / r_max);
        let trials = 200_000u64;
        let mut rng = ChaCha8Rng::seed_from_u64(57);
        let mut counts: HashMap<&'static str, u64> = HashMap::new();
        for _ in 0..trials {
            let mut state = frozen.clone();
            let rec = sim.event_step(&mut state, &mut rng).unwrap();
            *counts.entry(rec.kind.label()).or_default() += 1;
        }
        let n = trials as f64;
        for (label, expected) in [
            ("clonal_birth", p_clone),
            ("mutant_birth_single", p_single),
            ("mutant_birth_double", p_double),
            ("death", p_death),
        ] {
            let observed = *counts.get(label).unwrap_or(&0) as f64 / n;
            let se = (expected * (1.0 - expected) / n).sqrt();
            assert!(
                (observed - expected).abs() < 4.0 * se + 1e-9,
                "{label}: observed {observed:.5}, expected {expected:.5}"
            );
        }
    }

    /// Without mutation the population settles at the demographic
    /// equilibrium size lambda/eta.
    #[test]
    fn monomorphic_population_tracks_equilibrium_size() {
        let trait_ = t(2.0, 3.0);
        let lambda = malthusian(&trait_).unwrap();
        let mut cfg = base_config();
        cfg.initial_trait = trait_;
        cfg.p_mut = 0.0;
        cfg.eta = lambda / 300.0;
        cfg.initial_size = 300;
        cfg.seed = 77;
        cfg.stopping = StoppingRule {
            max_jumps: None,
            t_end: Some(150.0),
        };
        let sim = Ibm::new(cfg.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut state = sim.initial_state();
        let (mut weighted, mut measured) = (0.0_f64, 0.0_f64);
        while state.clock < 150.0 && state.live_count > 0 {
            let before = state.clock;
            let count = state.live_count as f64;
            sim.event_step(&mut state, &mut rng).unwrap();
            let lo = before.max(50.0);
            let hi = state.clock.min(150.0);
            if hi > lo {
                weighted += count * (hi - lo);
                measured += hi - lo;
            }
        }
        let mean_count = weighted / measured;
        assert!(
            (mean_count - 300.0).abs() < 30.0,
            "time-averaged count {mean_count} far from 300"
        );
    }

    /// A founder with essentially no fertile-and-safe span dies out.
    #[test]
    fn hopeless_founder_goes_extinct() {
        let mut cfg = base_config();
        cfg.initial_trait = t(0.01, 0.01);
        cfg.initial_size = 1;
        cfg.p_mut = 0.0;
        cfg.seed = 3;
        cfg.stopping = StoppingRule {
            max_jumps: None,
            t_end: Some(100.0),
        };
        let summary = Ibm::new(cfg).unwrap().run().unwrap();
        assert!(summary.extinct);
        assert_eq!(summary.final_count, 0);
        let last = summary.snapshots.last().unwrap();
        assert_eq!(last.n_alive, 0);
        assert!(last.mean_xb.is_nan());
    }

    /// With the population started at the deterministic equilibrium size,
    /// the empirical age distribution at t=100 matches the analytic
    /// stationary age profile in L1 up to Monte-Carlo noise.
    #[test]
    fn age_structure_matches_stationary_profile() {
        let trait_ = t(2.0, 3.0);
        let lambda = malthusian(&trait_).unwrap();
        let k = 5000.0;
        let mut cfg = base_config();
        cfg.initial_trait = trait_;
        cfg.p_mut = 0.0;
        cfg.eta = lambda / k;
        cfg.initial_size = k as usize;
        cfg.seed = 12;
        cfg.stopping = StoppingRule {
            max_jumps: None,
            t_end: Some(100.0),
        };
        let sim = Ibm::new(cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut state = sim.initial_state();
        while state.clock < 100.0 && state.live_count > 0 {
            sim.event_step(&mut state, &mut rng).unwrap();
        }
        // Scaled equilibrium: eta*K = lambda, so the limit density has unit
        // total mass; its age profile is the stationary one.
        let profile = stable_age_distribution(&trait_).unwrap();
        let eq = equilibrium(&trait_, lambda).unwrap();
        let bin = 0.5;
        let n_bins = 40;
        let mut hist = vec![0.0_f64; n_bins];
        let mut beyond = 0.0_f64;
        for i in &state.individuals {
            let idx = (i.age(state.clock) / bin) as usize;
            if idx < n_bins {
                hist[idx] += 1.0;
            } else {
                beyond += 1.0;
            }
        }
        // Empirical bin mass (counts/K) against the analytic bin mass of
        // the unit-total-mass stationary profile; stragglers past the last
        // bin count as pure error.
        let mut l1 = beyond / k;
        for (j, count) in hist.iter().enumerate() {
            let (lo, hi) = (j as f64 * bin, (j + 1) as f64 * bin);
            let expected = adaptive_simpson(&|a: f64| eq.n1_at_0 * profile.n1(a), lo, hi, 1e-12);
            l1 += (count / k - expected).abs();
        }
        assert!(l1 < 0.05, "empirical age histogram L1 distance {l1}");
    }

    /// The unbounded kernel variant can move a coordinate further than the
    /// bounded window allows.
    #[test]
    fn unbounded_kernel_flag_changes_law() {
        let mut cfg = base_config();
        cfg.unbounded_kernel = true;
        cfg.sigma = 3.0;
        cfg.p_mut = 1.0;
        cfg.initial_trait = t(2.0, 3.0);
        cfg.initial_size = 200;
        cfg.seed = 5;
        cfg.stopping = StoppingRule {
            max_jumps: Some(4000),
            t_end: None,
        };
        let sim = Ibm::new(cfg).unwrap();
        let mut escaped = false;
        sim.run_with(|e| {
            if e.kind.is_accepted()
                && e.kind != EventKind::Death
                && (e.life_trait.x_b - 2.0).abs() > 1.0 + 1e-9
            {
                escaped = true;
            }
        })
        .unwrap();
        assert!(
            escaped,
            "sigma=3 unbounded mutations should leave the unit window"
        );
    }
}
