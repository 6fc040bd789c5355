//! Implementations of the CLI subcommands: building core configurations
//! from the TOML sections, fanning replicates over worker threads, and
//! writing CSV/JSON outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use lansing_core::demography::TraitSummary;
use lansing_core::ibm::{Ibm, IbmConfig, StoppingRule};
use lansing_core::inclusion::{DiagonalPolicy, Inclusion, InclusionConfig};
use lansing_core::pde::{
    solve_bimorphic, solve_linear, solve_monomorphic, AgeGrid, DensityField, Subtype,
};
use lansing_core::tss::{run_subordinated, TssConfig};
use lansing_core::verify::{run_fast, run_full, CriterionReport};
use lansing_core::LifeTrait;

use crate::config::{IbmSection, InclusionSection, PdeMode, PdeSection, TssSection};

/// CLI failure: configuration problems exit with 2, runtime problems with 1.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

fn cfg_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn run_err(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Derive a decorrelated per-replicate seed from the base seed.
fn splitmix64(seed: u64, i: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15_u64.wrapping_mul(i.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn life_trait(xb: f64, xd: f64) -> Result<LifeTrait, CliError> {
    LifeTrait::new(xb, xd).map_err(cfg_err)
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| run_err(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| run_err(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(run_err)?;
    text.push('\n');
    write_file(path, &text)
}

/// Run `jobs` replicate jobs over at most `threads` workers; jobs run in a
/// fixed index order within each worker so output is deterministic, and the
/// collected per-replicate report lines are printed in replicate order.
fn fan_out(
    n: usize,
    threads: usize,
    job: impl Fn(usize) -> Result<String, CliError> + Sync,
) -> Result<Vec<String>, CliError> {
    let workers = threads.clamp(1, n.max(1));
    let results = std::thread::scope(|scope| {
        let job = &job;
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    let mut out = Vec::new();
                    let mut i = w;
                    while i < n {
                        out.push((i, job(i)));
                        i += workers;
                    }
                    out
                })
            })
            .collect();
        let mut all: Vec<(usize, Result<String, CliError>)> = Vec::with_capacity(n);
        for h in handles {
            all.extend(h.join().expect("replicate worker panicked"));
        }
        all
    });
    let mut ordered: Vec<Option<Result<String, CliError>>> = (0..n).map(|_| None).collect();
    for (i, r) in results {
        ordered[i] = Some(r);
    }
    ordered
        .into_iter()
        .map(|r| r.expect("replicate left no result"))
        .collect()
}

pub fn demog(xb: f64, xd: f64, eta: f64) -> Result<(), CliError> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(CliError::Config(format!(
            "eta = {eta} must be finite and > 0"
        )));
    }
    let x = life_trait(xb, xd)?;
    let summary = TraitSummary::compute(&x, eta);
    let text = serde_json::to_string_pretty(&summary).map_err(run_err)?;
    println!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct IbmRunSummary {
    seed: u64,
    final_time: f64,
    final_count: usize,
    accepted_events: u64,
    proposals: u64,
    extinct: bool,
}

pub fn run_ibm(
    section: &IbmSection,
    base_seed: u64,
    out_dir: &Path,
    replicates: usize,
    threads: usize,
) -> Result<(), CliError> {
    let x = life_trait(section.xb, section.xd)?;
    ensure_dir(out_dir)?;
    let lines = fan_out(replicates, threads, |i| {
        let seed = splitmix64(base_seed, i as u64);
        let cfg = IbmConfig {
            eta: section.eta,
            p_mut: section.p_mut,
            sigma: section.sigma,
            initial_trait: x,
            initial_size: section.initial_size,
            seed,
            self_competition: section.self_competition,
            unbounded_kernel: section.unbounded_kernel,
            stopping: StoppingRule {
                max_jumps: section.max_events,
                t_end: section.t_end,
            },
            snapshot_every: section.snapshot_every,
        };
        let sim = Ibm::new(cfg).map_err(cfg_err)?;
        let mut events = String::new();
        let summary = if section.events_csv {
            events.push_str("time,event_type,id,parent_id,xb,xd,lansing_flag\n");
            sim.run_with(|rec| {
                let parent = rec.parent_id.map(|p| p.to_string()).unwrap_or_default();
                let _ = writeln!(
                    events,
                    "{},{},{},{},{},{},{}",
                    rec.time,
                    rec.kind.label(),
                    rec.id,
                    parent,
                    rec.life_trait.x_b,
                    rec.life_trait.x_d,
                    u8::from(rec.lansing)
                );
            })
        } else {
            sim.run()
        }
        .map_err(run_err)?;
        let mut snaps = String::from("time,n_alive,mean_xb,mean_xd,var_xb,var_xd\n");
        for s in &summary.snapshots {
            let _ = writeln!(
                snaps,
                "{},{},{},{},{},{}",
                s.time, s.n_alive, s.mean_xb, s.mean_xd, s.var_xb, s.var_xd
            );
        }
        write_file(&out_dir.join(format!("ibm_snapshots_r{i}.csv")), &snaps)?;
        if section.events_csv {
            write_file(&out_dir.join(format!("ibm_events_r{i}.csv")), &events)?;
        }
        write_json(
            &out_dir.join(format!("ibm_summary_r{i}.json")),
            &IbmRunSummary {
                seed,
                final_time: summary.final_time,
                final_count: summary.final_count,
                accepted_events: summary.accepted_events,
                proposals: summary.proposals,
                extinct: summary.extinct,
            },
        )?;
        Ok(format!(
            "replicate {i}: seed {seed}, t = {:.3}, {} alive, {} events ({} proposals){}",
            summary.final_time,
            summary.final_count,
            summary.accepted_events,
            summary.proposals,
            if summary.extinct { ", extinct" } else { "" }
        ))
    })?;
    for line in lines {
        println!("{line}");
    }
    Ok(())
}

fn profile_csv(field: &DensityField) -> String {
    let k = field.components.len();
    let mut text = String::from("age");
    for c in 1..=k {
        let _ = write!(text, ",n{c}");
    }
    text.push('\n');
    for i in 0..field.grid().n_cells() {
        let _ = write!(text, "{}", field.grid().center(i));
        for comp in &field.components {
            let _ = write!(text, ",{}", comp[i]);
        }
        text.push('\n');
    }
    text
}

fn masses_csv<const K: usize>(times: &[f64], masses: &[[f64; K]]) -> String {
    let mut text = String::from("t");
    for c in 1..=K {
        let _ = write!(text, ",mass_{c}");
    }
    text.push('\n');
    for (t, row) in times.iter().zip(masses) {
        let _ = write!(text, "{t}");
        for m in row {
            let _ = write!(text, ",{m}");
        }
        text.push('\n');
    }
    text
}

#[derive(Serialize)]
struct MonomorphicSummary {
    residual_l1: f64,
    competition_integral: f64,
    final_masses: [f64; 2],
}

#[derive(Serialize)]
struct BimorphicSummary {
    final_masses: [f64; 4],
}

#[derive(Serialize)]
struct LinearSummary {
    growth_rate_est: f64,
    shape_residual: f64,
}

pub fn run_pde(section: &PdeSection, out_dir: &Path) -> Result<(), CliError> {
    let x = life_trait(section.xb, section.xd)?;
    let need_eta = || {
        section
            .eta
            .ok_or_else(|| CliError::Config("pde: eta is required outside linear mode".into()))
    };
    ensure_dir(out_dir)?;
    let grid_for = |traits: &[LifeTrait]| -> Result<AgeGrid, CliError> {
        match section.a_max {
            Some(a_max) => AgeGrid::new(section.da, a_max),
            None => AgeGrid::for_traits(section.da, traits),
        }
        .map_err(cfg_err)
    };
    match section.mode {
        PdeMode::Monomorphic => {
            let eta = need_eta()?;
            let grid = grid_for(std::slice::from_ref(&x))?;
            let mut initial = DensityField::stationary(&x, eta, grid).map_err(cfg_err)?;
            initial.scale(section.initial_scale);
            let run = solve_monomorphic(&initial, &x, eta, section.t_end).map_err(run_err)?;
            write_file(
                &out_dir.join("pde_profile.csv"),
                &profile_csv(&run.final_field),
            )?;
            write_file(
                &out_dir.join("pde_masses.csv"),
                &masses_csv(&run.times, &run.masses),
            )?;
            let last = *run.masses.last().expect("at least the initial masses");
            write_json(
                &out_dir.join("pde_summary.json"),
                &MonomorphicSummary {
                    residual_l1: run.residual_l1,
                    competition_integral: run.competition_integral,
                    final_masses: last,
                },
            )?;
            println!(
                "monomorphic: t = {}, masses = ({:.4}, {:.4}), stationary residual {:.3e}",
                section.t_end, last[0], last[1], run.residual_l1
            );
        }
        PdeMode::Bimorphic => {
            let eta = need_eta()?;
            let (xb2, xd2) = match (section.xb2, section.xd2) {
                (Some(b), Some(d)) => (b, d),
                _ => {
                    return Err(CliError::Config(
                        "pde: bimorphic mode requires xb2 and xd2".into(),
                    ))
                }
            };
            let y = life_trait(xb2, xd2)?;
            let grid = grid_for(&[x, y])?;
            let mut initial = DensityField::zeros(
                grid,
                vec![
                    (x, Subtype::Main),
                    (x, Subtype::Lansing),
                    (y, Subtype::Main),
                    (y, Subtype::Lansing),
                ],
            );
            let resident = DensityField::stationary(&x, eta, grid).map_err(cfg_err)?;
            let invader = DensityField::stationary(&y, eta, grid).map_err(cfg_err)?;
            for c in 0..2 {
                initial.components[c] = resident.components[c]
                    .iter()
                    .map(|v| section.initial_scale * v)
                    .collect();
                initial.components[2 + c] = invader.components[c]
                    .iter()
                    .map(|v| section.invader_scale * v)
                    .collect();
            }
            let run = solve_bimorphic(&initial, &x, &y, eta, section.t_end).map_err(run_err)?;
            write_file(
                &out_dir.join("pde_profile.csv"),
                &profile_csv(&run.final_field),
            )?;
            write_file(
                &out_dir.join("pde_masses.csv"),
                &masses_csv(&run.times, &run.masses),
            )?;
            write_json(
                &out_dir.join("pde_summary.json"),
                &BimorphicSummary {
                    final_masses: run.final_masses,
                },
            )?;
            println!(
                "bimorphic: t = {}, resident mass {:.4}, invader mass {:.4}",
                section.t_end,
                run.final_masses[0] + run.final_masses[1],
                run.final_masses[2] + run.final_masses[3]
            );
        }
        PdeMode::Linear => {
            let grid = grid_for(std::slice::from_ref(&x))?;
            let scale_eta = section.eta.unwrap_or(1.0);
            let mut initial = DensityField::stationary(&x, scale_eta, grid).map_err(cfg_err)?;
            initial.scale(section.initial_scale);
            let run = solve_linear(&initial, &x, section.t_end).map_err(run_err)?;
            write_file(
                &out_dir.join("pde_profile.csv"),
                &profile_csv(&run.final_field),
            )?;
            write_file(
                &out_dir.join("pde_masses.csv"),
                &masses_csv(&run.times, &run.masses),
            )?;
            write_json(
                &out_dir.join("pde_summary.json"),
                &LinearSummary {
                    growth_rate_est: run.growth_rate_est,
                    shape_residual: run.shape_residual,
                },
            )?;
            println!(
                "linear: t = {}, growth rate estimate {:.6}, shape residual {:.3e}",
                section.t_end, run.growth_rate_est, run.shape_residual
            );
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct TssRunSummary {
    seed: u64,
    epsilon: f64,
    terminal_reason: &'static str,
    terminal_time: f64,
    jumps: usize,
}

pub fn run_tss(
    section: &TssSection,
    base_seed: u64,
    out_dir: &Path,
    replicates: usize,
    threads: usize,
) -> Result<(), CliError> {
    let x0 = life_trait(section.xb, section.xd)?;
    let cfg = TssConfig {
        sigma: section.sigma,
        eta: section.eta,
        epsilon: section.epsilon,
    };
    cfg.validate().map_err(cfg_err)?;
    ensure_dir(out_dir)?;
    let lines = fan_out(replicates, threads, |i| {
        let seed = splitmix64(base_seed, i as u64);
        let path = if section.subordinated {
            run_subordinated(&x0, &cfg, section.t_end, section.max_jumps, seed)
        } else {
            lansing_core::tss::run_tss(&x0, &cfg, section.t_end, section.max_jumps, seed)
        }
        .map_err(run_err)?;
        let mut csv = String::from("t,xb,xd,event_index\n");
        for (k, (t, x)) in path.times.iter().zip(&path.traits).enumerate() {
            let _ = writeln!(csv, "{},{},{},{}", t, x.x_b, x.x_d, k);
        }
        write_file(&out_dir.join(format!("tss_path_r{i}.csv")), &csv)?;
        write_json(
            &out_dir.join(format!("tss_summary_r{i}.json")),
            &TssRunSummary {
                seed,
                epsilon: path.epsilon,
                terminal_reason: path.terminal_reason.label(),
                terminal_time: path.terminal_time,
                jumps: path.jump_count(),
            },
        )?;
        let end = path.traits.last().expect("path holds its initial state");
        Ok(format!(
            "replicate {i}: seed {seed}, {} jumps, {} at t = {:.3}, end = ({:.4}, {:.4})",
            path.jump_count(),
            path.terminal_reason.label(),
            path.terminal_time,
            end.x_b,
            end.x_d
        ))
    })?;
    for line in lines {
        println!("{line}");
    }
    Ok(())
}

#[derive(Serialize)]
struct InclusionSummary {
    hit_time: Option<f64>,
    end_point: [f64; 2],
    diagonal_policy: f64,
    t_end: f64,
}

#[derive(Serialize)]
struct TubeSummary {
    seed: u64,
    epsilon: f64,
    delta: f64,
    pass: bool,
    max_pre_hit_dist: f64,
    max_diag_gap: f64,
    monotone_ok: bool,
    speed_ok: bool,
}

pub fn run_inclusion(
    section: &InclusionSection,
    base_seed: u64,
    out_dir: &Path,
    replicates: usize,
    threads: usize,
) -> Result<(), CliError> {
    let x0 = life_trait(section.xb, section.xd)?;
    let incl = Inclusion::new(InclusionConfig {
        sigma: section.sigma,
        eta: section.eta,
        dt: section.dt,
    })
    .map_err(cfg_err)?;
    if !(0.0..=1.0).contains(&section.diagonal_policy) {
        return Err(CliError::Config(format!(
            "inclusion: diagonal_policy = {} must lie in [0, 1]",
            section.diagonal_policy
        )));
    }
    ensure_dir(out_dir)?;
    let policy = DiagonalPolicy::Constant(section.diagonal_policy);
    let sol = incl.solve(&x0, section.t_end, policy).map_err(run_err)?;
    let mut csv = String::from("t,xb,xd,phase\n");
    for (t, p) in sol.times.iter().zip(&sol.points) {
        let _ = writeln!(csv, "{},{},{},{}", t, p[0], p[1], sol.phase(*t));
    }
    write_file(&out_dir.join("inclusion_path.csv"), &csv)?;
    let end = *sol.points.last().expect("solution holds its initial point");
    write_json(
        &out_dir.join("inclusion_summary.json"),
        &InclusionSummary {
            hit_time: sol.hit_time,
            end_point: end,
            diagonal_policy: section.diagonal_policy,
            t_end: section.t_end,
        },
    )?;
    match sol.hit_time {
        Some(h) => println!(
            "flow reaches the diagonal at t = {h:.4}; end = ({:.4}, {:.4})",
            end[0], end[1]
        ),
        None => println!(
            "flow stays off the diagonal over [0, {}]; end = ({:.4}, {:.4})",
            section.t_end, end[0], end[1]
        ),
    }
    if let Some(eps) = section.tube_epsilon {
        let cfg = TssConfig {
            sigma: section.sigma,
            eta: section.eta,
            epsilon: eps,
        };
        cfg.validate().map_err(cfg_err)?;
        let incl_ref = &incl;
        let cfg_ref = &cfg;
        let lines = fan_out(replicates, threads, move |i| {
            let seed = splitmix64(base_seed, i as u64);
            let path = lansing_core::tss::run_tss(&x0, cfg_ref, section.t_end, None, seed)
                .map_err(run_err)?;
            let report = incl_ref
                .tube_test(&path, &x0, section.t_end, section.tube_delta, true)
                .map_err(run_err)?;
            write_json(
                &out_dir.join(format!("tube_r{i}.json")),
                &TubeSummary {
                    seed,
                    epsilon: eps,
                    delta: section.tube_delta,
                    pass: report.pass,
                    max_pre_hit_dist: report.max_pre_hit_dist,
                    max_diag_gap: report.max_diag_gap,
                    monotone_ok: report.monotone_ok,
                    speed_ok: report.speed_ok,
                },
            )?;
            Ok(format!(
                "tube replicate {i}: seed {seed}, {} (tracking distance {:.4}, diagonal gap {:.4})",
                if report.pass { "pass" } else { "FAIL" },
                report.max_pre_hit_dist,
                report.max_diag_gap
            ))
        })?;
        for line in lines {
            println!("{line}");
        }
    }
    Ok(())
}

fn print_reports(reports: &[CriterionReport]) -> bool {
    let mut all = true;
    for r in reports {
        let status = if r.pass { "PASS" } else { "FAIL" };
        println!(
            "[{status}] {:2}. {} ({:.1}s) — {}",
            r.id, r.name, r.seconds, r.detail
        );
        all &= r.pass;
    }
    all
}

pub fn verify(full: bool) -> Result<(), CliError> {
    let reports = if full { run_full() } else { run_fast() };
    let failed = reports.iter().filter(|r| !r.pass).count();
    if print_reports(&reports) {
        println!("all {} criteria passed", reports.len());
        Ok(())
    } else {
        Err(CliError::Runtime(format!(
            "{failed} of {} criteria failed",
            reports.len()
        )))
    }
}
