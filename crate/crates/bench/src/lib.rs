//! Shared fixtures for the benchmark suite: deterministic trait sets and a
//! pre-equilibrated individual-based population, so each benchmark measures
//! steady-state work rather than transients.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lansing_core::ibm::{Ibm, IbmConfig, PopulationState, StoppingRule};
use lansing_core::LifeTrait;

/// A deterministic spread of viable traits on both sides of the diagonal.
pub fn trait_grid(n: usize) -> Vec<LifeTrait> {
    (0..n)
        .map(|i| {
            let s = i as f64 / n as f64;
            let (b, d) = if i % 2 == 0 {
                (1.2 + 3.0 * s, 2.6 + 2.0 * s)
            } else {
                (2.6 + 2.0 * s, 1.2 + 3.0 * s)
            };
            LifeTrait::new(b, d).expect("grid traits are nonnegative")
        })
        .collect()
}

/// A simulator with a population burnt in to its demographic equilibrium,
/// plus the RNG positioned right after the burn-in.
pub fn ibm_fixture() -> (Ibm, PopulationState, ChaCha8Rng) {
    let x = LifeTrait::new(2.0, 3.0).expect("fixture trait");
    let cfg = IbmConfig {
        eta: 0.004,
        p_mut: 0.05,
        sigma: 0.05,
        initial_trait: x,
        initial_size: 200,
        seed: 1,
        self_competition: true,
        unbounded_kernel: false,
        stopping: StoppingRule {
            max_jumps: None,
            t_end: Some(f64::INFINITY),
        },
        snapshot_every: 0,
    };
    let sim = Ibm::new(cfg).expect("fixture config is valid");
    let mut state = sim.initial_state();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20_000 {
        sim.event_step(&mut state, &mut rng)
            .expect("burn-in population stays alive");
    }
    (sim, state, rng)
}
