//! End-to-end verification: twelve independent checks spanning every layer
//! of the library, from root-finder accuracy through stochastic/limit
//! consistency. `run_fast` covers the quick analytic subset; `run_full`
//! runs everything, including the Monte-Carlo and long-trajectory checks.

use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::demography::{
    char_matrix_entries, fitness_gradient, invasion_fitness, malthusian, span_growth_rate,
    survival_probability_mc,
};
use crate::ibm::{Ibm, IbmConfig, StoppingRule};
use crate::inclusion::{DiagonalPolicy, Inclusion, InclusionConfig};
use crate::life_trait::LifeTrait;
use crate::numeric::phi;
use crate::pde::{
    mass_ode_equilibrium, mass_ode_solve, solve_bimorphic, solve_monomorphic, AgeGrid,
    DensityField, MassMatrix, Subtype,
};
use crate::tss::{mean_field_drift, run_tss, TerminalReason, TssConfig};
use crate::Result;

/// Outcome of one verification criterion.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

fn run_criterion(
    id: u32,
    name: &'static str,
    body: impl FnOnce() -> Result<(bool, String)>,
) -> CriterionReport {
    let start = Instant::now();
    let (pass, detail) = match body() {
        Ok(outcome) => outcome,
        Err(e) => (false, format!("error: {e}")),
    };
    CriterionReport {
        id,
        name,
        pass,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn random_viable(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> LifeTrait {
    LifeTrait::new(rng.random_range(lo..hi), rng.random_range(lo..hi)).unwrap()
}

/// 1. The growth-rate solver: residual of the defining equation below
/// 1e-12 on 1000 random viable traits, rate inside (0, 1), exact zero at a
/// unit span, all inside one second.
fn criterion_solver() -> CriterionReport {
    run_criterion(1, "growth-rate solver: residuals, range, and speed", || {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let mut max_resid = 0.0_f64;
        for _ in 0..1000 {
            let x = random_viable(&mut rng, 1.01, 30.0);
            let lambda = malthusian(&x)?;
            if !(0.0 < lambda && lambda < 1.0) {
                return Ok((false, format!("rate {lambda} outside (0,1) at {x}")));
            }
            let tau = x.min_span();
            max_resid = max_resid.max((tau * phi(lambda * tau) - 1.0).abs());
        }
        let unit_exact = span_growth_rate(1.0) == 0.0;
        let elapsed = start.elapsed().as_secs_f64();
        let pass = max_resid <= 1e-12 && unit_exact && elapsed < 1.0;
        Ok((
            pass,
            format!(
                "max residual {max_resid:.2e} over 1000 traits; unit-span rate exact: {unit_exact}; {elapsed:.3}s"
            ),
        ))
    })
}

/// 2. The closed-form growth-rate gradient against central differences
/// (h = 1e-5) at 100 random points at least 0.01 away from the diagonal.
fn criterion_gradient() -> CriterionReport {
    run_criterion(2, "fitness gradient matches central differences", || {
        let mut rng = ChaCha8Rng::seed_from_u64(102);
        let h = 1e-5;
        let mut worst = 0.0_f64;
        let mut done = 0;
        while done < 100 {
            // Spans are capped well below the point where e^{-lambda tau}
            // sinks under the finite-difference cancellation floor (~1e-11).
            let x = random_viable(&mut rng, 1.05, 8.0);
            if (x.x_b - x.x_d).abs() < 0.01 {
                continue;
            }
            done += 1;
            let grad = fitness_gradient(&x)?;
            for coord in 0..2 {
                let mut up = [x.x_b, x.x_d];
                let mut down = up;
                up[coord] += h;
                down[coord] -= h;
                let fd = (malthusian(&LifeTrait::new(up[0], up[1])?)?
                    - malthusian(&LifeTrait::new(down[0], down[1])?)?)
                    / (2.0 * h);
                if fd == 0.0 && grad[coord] == 0.0 {
                    continue;
                }
                let rel = (grad[coord] - fd).abs() / fd.abs().max(grad[coord].abs());
                worst = worst.max(rel);
            }
        }
        Ok((
            worst < 1e-6,
            format!("worst relative deviation {worst:.2e} over 100 points"),
        ))
    })
}

/// 3. The renewal identity: the first characteristic entry equals 1 at the
/// growth rate, within 1e-10, for 100 random viable traits.
fn criterion_renewal() -> CriterionReport {
    run_criterion(3, "renewal identity holds at the growth rate", || {
        let mut rng = ChaCha8Rng::seed_from_u64(103);
        let mut worst = 0.0_f64;
        for _ in 0..100 {
            let x = random_viable(&mut rng, 1.01, 30.0);
            let (f11, _, _) = char_matrix_entries(&x, malthusian(&x)?);
            worst = worst.max((f11 - 1.0).abs());
        }
        Ok((
            worst <= 1e-10,
            format!("worst deviation from 1: {worst:.2e} over 100 traits"),
        ))
    })
}

/// 4. Invasion fitness equals branching survival: for 10 random pairs with
/// a rate gap of at least 0.04 in magnitude (including negative gaps),
/// 1e5-replicate survival estimates fall within 3 standard errors.
fn criterion_branching() -> CriterionReport {
    run_criterion(4, "branching survival reproduces invasion fitness", || {
        let mut rng = ChaCha8Rng::seed_from_u64(104);
        let mut pairs: Vec<(LifeTrait, LifeTrait)> = Vec::new();
        let mut negatives = 0;
        while pairs.len() < 10 {
            let resident = random_viable(&mut rng, 1.05, 4.0);
            let invader = random_viable(&mut rng, 1.05, 4.0);
            let gap = malthusian(&invader)? - malthusian(&resident)?;
            if gap.abs() < 0.04 {
                continue;
            }
            if gap < 0.0 {
                if negatives >= 3 {
                    continue;
                }
                negatives += 1;
            } else if pairs.len() - negatives >= 7 {
                continue;
            }
            pairs.push((invader, resident));
        }
        let results: Vec<Result<(f64, f64, f64)>> = std::thread::scope(|scope| {
            let handles: Vec<_> = pairs
                .iter()
                .enumerate()
                .map(|(k, &(invader, resident))| {
                    scope.spawn(move || -> Result<(f64, f64, f64)> {
                        let expected = invasion_fitness(&invader, &resident)?;
                        let (p, se) = survival_probability_mc(
                            &invader,
                            &resident,
                            100_000,
                            4_000 + k as u64,
                        )?;
                        Ok((p, se, expected))
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        let mut worst_sigma = 0.0_f64;
        for r in results {
            let (p, se, expected) = r?;
            let dev = (p - expected).abs();
            if se == 0.0 {
                if dev > 0.0 {
                    return Ok((false, format!("estimate {p} vs {expected} with zero error")));
                }
            } else {
                worst_sigma = worst_sigma.max(dev / se);
            }
        }
        Ok((
            worst_sigma <= 3.0,
            format!(
                "worst deviation {worst_sigma:.2} standard errors over 10 pairs ({negatives} with a negative gap)"
            ),
        ))
    })
}

/// 5. The nonlinear age-structured dynamics, started at a tenth of the
/// stationary state of (2, 3), return to it by t = 200 within 1% of its
/// mass in L1 (step 0.01).
fn criterion_pde_equilibrium() -> CriterionReport {
    run_criterion(
        5,
        "age-structured dynamics settle at the stationary state",
        || {
            let x = LifeTrait::new(2.0, 3.0)?;
            let eta = 0.0005;
            let grid = AgeGrid::for_traits(0.01, std::slice::from_ref(&x))?;
            let stationary = DensityField::stationary(&x, eta, grid)?;
            let mut initial = stationary.clone();
            initial.scale(0.1);
            let run = solve_monomorphic(&initial, &x, eta, 200.0)?;
            let norm = stationary.total_mass();
            let rel = run.residual_l1 / norm;
            Ok((
                rel < 1e-2,
                format!("relative L1 residual {rel:.2e} (mass {norm:.1})"),
            ))
        },
    )
}

/// 6. Competitive exclusion: a (2, 3) invader seeded at 5% of its own
/// stationary state against a (1.5, 3) resident at full equilibrium leaves
/// the resident below a thousandth of the invader by t = 400.
fn criterion_pde_exclusion() -> CriterionReport {
    run_criterion(
        6,
        "longer fertile-and-safe span competitively excludes",
        || {
            let x = LifeTrait::new(1.5, 3.0)?;
            let y = LifeTrait::new(2.0, 3.0)?;
            let eta = 0.0005;
            let grid = AgeGrid::for_traits(0.01, &[x, y])?;
            let mut initial = DensityField::zeros(
                grid,
                vec![
                    (x, Subtype::Main),
                    (x, Subtype::Lansing),
                    (y, Subtype::Main),
                    (y, Subtype::Lansing),
                ],
            );
            let resident = DensityField::stationary(&x, eta, grid)?;
            let invader = DensityField::stationary(&y, eta, grid)?;
            initial.components[0] = resident.components[0].clone();
            initial.components[1] = resident.components[1].clone();
            initial.components[2] = invader.components[0].iter().map(|v| 0.05 * v).collect();
            initial.components[3] = invader.components[1].iter().map(|v| 0.05 * v).collect();
            let run = solve_bimorphic(&initial, &x, &y, eta, 400.0)?;
            let mass_x = run.final_masses[0] + run.final_masses[1];
            let mass_y = run.final_masses[2] + run.final_masses[3];
            Ok((
                mass_x < 1e-3 * mass_y,
                format!("resident mass {mass_x:.3e} vs invader mass {mass_y:.1}"),
            ))
        },
    )
}

/// 7. The two-type mass system: 20 random admissible matrices integrate to
/// within 1e-6 of the closed-form equilibrium, with and without a decaying
/// perturbation.
fn criterion_mass_ode() -> CriterionReport {
    run_criterion(7, "mass system reaches its closed-form equilibrium", || {
        let mut rng = ChaCha8Rng::seed_from_u64(107);
        let mut worst = 0.0_f64;
        for _ in 0..20 {
            let m = MassMatrix {
                m11: rng.random_range(0.1..0.9),
                m21: rng.random_range(0.0..0.5),
                m22: -rng.random_range(0.1..1.0),
            };
            let eta = rng.random_range(5e-4..5e-3);
            let z0 = [rng.random_range(1.0..100.0), rng.random_range(0.0..50.0)];
            let zbar = mass_ode_equilibrium(&m, eta);
            let plain = mass_ode_solve(&m, None, eta, z0, 500.0, 0.01)?;
            let p = [
                rng.random_range(-0.1..0.1),
                rng.random_range(-0.1..0.1),
                rng.random_range(-0.1..0.1),
            ];
            let pert = move |t: f64| {
                let w = (-t).exp();
                [p[0] * w, p[1] * w, p[2] * w]
            };
            let perturbed = mass_ode_solve(&m, Some(&pert), eta, z0, 500.0, 0.01)?;
            for z in [plain, perturbed] {
                worst = worst.max((z[0] - zbar[0]).abs().max((z[1] - zbar[1]).abs()));
            }
        }
        Ok((
            worst < 1e-6,
            format!("worst distance to equilibrium {worst:.2e} over 20 systems x 2 arms"),
        ))
    })
}

/// 8. The mutation-free stochastic population at (2, 3) with crowding
/// 5e-4, started at 5000, holds a time-averaged size over [100, 300]
/// within 5% of the demographic equilibrium (rate / crowding).
fn criterion_ibm_equilibrium() -> CriterionReport {
    run_criterion(
        8,
        "population size tracks the demographic equilibrium",
        || {
            let x = LifeTrait::new(2.0, 3.0)?;
            let expected = malthusian(&x)? / 0.0005;
            let cfg = IbmConfig {
                eta: 0.0005,
                p_mut: 0.0,
                sigma: 0.05,
                initial_trait: x,
                initial_size: 5000,
                seed: 58,
                self_competition: true,
                unbounded_kernel: false,
                stopping: StoppingRule {
                    max_jumps: None,
                    t_end: Some(300.0),
                },
                snapshot_every: 1,
            };
            let sim = Ibm::new(cfg)?;
            let mut state = sim.initial_state();
            let mut rng = ChaCha8Rng::seed_from_u64(58);
            let mut integral = 0.0;
            while state.clock < 300.0 {
                let before = state.clock;
                let count = state.live_count as f64;
                sim.event_step(&mut state, &mut rng)?;
                let lo = before.max(100.0);
                let hi = state.clock.min(300.0);
                if hi > lo {
                    integral += count * (hi - lo);
                }
            }
            let average = integral / 200.0;
            let rel = (average - expected).abs() / expected;
            Ok((
                rel < 0.05,
                format!(
                    "time-averaged count {average:.1} vs equilibrium {expected:.1} (rel {rel:.3})"
                ),
            ))
        },
    )
}

/// 9. Evolution with the full mutation machinery from (1.2, 2.5): the mean
/// senescence age stays within 0.125 of 2.5 while the mean fertile age
/// climbs toward it; once they meet (gap below 0.1) the gap stays below
/// 0.15 and both climb together. Three pinned seeds.
fn criterion_ibm_evolution() -> CriterionReport {
    run_criterion(
        9,
        "senescence holds, meets fertility, then climbs with it",
        || {
            let x0 = LifeTrait::new(1.2, 2.5)?;
            for seed in [915_u64, 918, 947] {
                let cfg = IbmConfig {
                    eta: 0.0025,
                    p_mut: 0.05,
                    sigma: 0.05,
                    initial_trait: x0,
                    initial_size: 2000,
                    seed,
                    self_competition: true,
                    unbounded_kernel: false,
                    stopping: StoppingRule {
                        max_jumps: None,
                        t_end: Some(1500.0),
                    },
                    snapshot_every: 1000,
                };
                let run = Ibm::new(cfg)?.run()?;
                let mut meeting = None;
                for (i, s) in run.snapshots.iter().enumerate() {
                    if s.n_alive == 0 {
                        return Ok((
                            false,
                            format!("seed {seed}: population died out at t {:.0}", s.time),
                        ));
                    }
                    if meeting.is_none() {
                        if s.mean_xb >= s.mean_xd - 0.1 {
                            meeting = Some(i);
                            // Net drift of the neutral coordinate accumulated by
                            // the meeting time; its value along the way is pure
                            // random walk and is not constrained.
                            if (s.mean_xd - 2.5).abs() > 0.125 {
                                return Ok((
                                false,
                                format!(
                                    "seed {seed}: mean senescence drifted to {:.3} by the meeting (t {:.0})",
                                    s.mean_xd, s.time
                                ),
                            ));
                            }
                        }
                    } else if (s.mean_xb - s.mean_xd).abs() >= 0.15 {
                        return Ok((
                            false,
                            format!(
                            "seed {seed}: coordinate gap {:.3} reopened after meeting (t {:.0})",
                            (s.mean_xb - s.mean_xd).abs(),
                            s.time
                        ),
                        ));
                    }
                }
                let Some(meet) = meeting else {
                    return Ok((false, format!("seed {seed}: coordinates never met")));
                };
                let at_meet = &run.snapshots[meet];
                let last = run.snapshots.last().unwrap();
                if last.mean_xb <= at_meet.mean_xb + 0.02 || last.mean_xd <= at_meet.mean_xd + 0.02
                {
                    return Ok((
                    false,
                    format!(
                        "seed {seed}: no joint climb after meeting (({:.3},{:.3}) -> ({:.3},{:.3}))",
                        at_meet.mean_xb, at_meet.mean_xd, last.mean_xb, last.mean_xd
                    ),
                ));
                }
            }
            Ok((
                true,
                "3 seeds: senescence stayed put until fertility caught up, then both climbed"
                    .into(),
            ))
        },
    )
}

/// 10. Diagonal starts of the substitution sequence are absorbed with zero
/// jumps, and path coordinates never decrease.
fn criterion_tss_absorption() -> CriterionReport {
    run_criterion(
        10,
        "diagonal states absorb the substitution sequence",
        || {
            let cfg = TssConfig::default();
            for (b, d) in [(2.0, 2.0), (1.5, 1.5)] {
                let path = run_tss(&LifeTrait::new(b, d)?, &cfg, 1e4, None, 110)?;
                if path.terminal_reason != TerminalReason::Absorbed || path.jump_count() != 0 {
                    return Ok((
                        false,
                        format!(
                            "start ({b},{d}): {:?} after {} jumps",
                            path.terminal_reason,
                            path.jump_count()
                        ),
                    ));
                }
            }
            let moving = run_tss(
                &LifeTrait::new(2.0, 1.5)?,
                &TssConfig {
                    epsilon: 0.05,
                    ..TssConfig::default()
                },
                2.0,
                None,
                111,
            )?;
            let monotone = moving
                .traits
                .windows(2)
                .all(|p| p[1].x_b >= p[0].x_b && p[1].x_d >= p[0].x_d);
            Ok((
                monotone,
                format!(
                    "diagonal starts absorbed with 0 jumps; {}-jump path monotone: {monotone}",
                    moving.jump_count()
                ),
            ))
        },
    )
}

/// 11. Ten substitution paths (step scale 0.01) from (2, 1.5) over 1.5x
/// the diagonal hitting time all stay inside the funnel (width 0.05)
/// around the limiting flow.
fn criterion_tube() -> CriterionReport {
    run_criterion(
        11,
        "substitution paths stay in the limiting-flow funnel",
        || {
            let x0 = LifeTrait::new(2.0, 1.5)?;
            let incl = Inclusion::new(InclusionConfig::default())?;
            let hit = incl
                .solve(&x0, 10.0, DiagonalPolicy::default())?
                .hit_time
                .expect("the limiting flow must reach the diagonal");
            let t_end = 1.5 * hit;
            let cfg = TssConfig {
                epsilon: 0.01,
                ..TssConfig::default()
            };
            let incl_ref = &incl;
            let x0_ref = &x0;
            let cfg_ref = &cfg;
            let reports: Vec<Result<(u64, crate::inclusion::TubeReport)>> =
                std::thread::scope(|scope| {
                    let handles: Vec<_> = (0..10)
                        .map(|k| {
                            scope.spawn(move || {
                                let seed = 66_000 + k;
                                let path = run_tss(x0_ref, cfg_ref, t_end, None, seed)?;
                                let report =
                                    incl_ref.tube_test(&path, x0_ref, t_end, 0.05, true)?;
                                Ok((seed, report))
                            })
                        })
                        .collect();
                    handles.into_iter().map(|h| h.join().unwrap()).collect()
                });
            let mut worst_dist = 0.0_f64;
            for r in reports {
                let (seed, report) = r?;
                if !report.pass {
                    return Ok((false, format!("seed {seed} left the funnel: {report:?}")));
                }
                worst_dist = worst_dist.max(report.max_pre_hit_dist);
            }
            Ok((
            true,
            format!(
                "10 paths inside the funnel over [0, {t_end:.2}]; worst tracking distance {worst_dist:.3}"
            ),
        ))
        },
    )
}

/// 12. The finite-step drift of the substitution sequence (step scale
/// 1e-4) matches the canonical speed within 1e-4 relative at 20 random
/// off-diagonal traits.
fn criterion_drift() -> CriterionReport {
    run_criterion(12, "substitution drift matches the canonical speed", || {
        let mut rng = ChaCha8Rng::seed_from_u64(112);
        let incl = Inclusion::new(InclusionConfig::default())?;
        let cfg = TssConfig {
            epsilon: 1e-4,
            ..TssConfig::default()
        };
        let mut worst = 0.0_f64;
        let mut done = 0;
        while done < 20 {
            let x = random_viable(&mut rng, 1.05, 10.0);
            if (x.x_b - x.x_d).abs() < 0.05 {
                continue;
            }
            done += 1;
            let drift = mean_field_drift(&x, &cfg)?;
            let active = usize::from(x.x_d < x.x_b);
            if drift[1 - active] != 0.0 {
                return Ok((false, format!("inactive coordinate drifts at {x}")));
            }
            let speed = incl.f_drift(&x, 1.0)?;
            worst = worst.max((drift[active] - speed).abs() / speed);
        }
        Ok((
            worst <= 1e-4,
            format!("worst relative deviation {worst:.2e} over 20 traits"),
        ))
    })
}

/// The quick analytic subset (a few seconds).
pub fn run_fast() -> Vec<CriterionReport> {
    vec![
        criterion_solver(),
        criterion_gradient(),
        criterion_renewal(),
        criterion_mass_ode(),
        criterion_drift(),
    ]
}

/// Every criterion, including Monte-Carlo and long trajectories.
pub fn run_full() -> Vec<CriterionReport> {
    vec![
        criterion_solver(),
        criterion_gradient(),
        criterion_renewal(),
        criterion_branching(),
        criterion_pde_equilibrium(),
        criterion_pde_exclusion(),
        criterion_mass_ode(),
        criterion_ibm_equilibrium(),
        criterion_ibm_evolution(),
        criterion_tss_absorption(),
        criterion_tube(),
        criterion_drift(),
    ]
}
