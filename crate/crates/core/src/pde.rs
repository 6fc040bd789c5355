//! Deterministic large-population dynamics: age-structured transport with a
//! birth renewal boundary and logistic competition, for one or two traits,
//! plus the two-component mass ODE that the age-structured system reduces
//! to after projection on the stable age profile.
//!
//! The scheme is characteristics-aligned: the time step equals the age step
//! `da`, so transport is an exact one-cell shift and all death terms become
//! exponential survival factors (unconditionally positive). Per step:
//! the renewal (birth) integrals are evaluated before and after the shift
//! and averaged (trapezoid in time; the step-end integral includes the
//! newborn cell itself, making the deposit implicit but still closed-form),
//! the shifted cells get the intrinsic-death factor for the cell they
//! enter, the newborn cell gets a half-step factor for its average transit,
//! and the whole field then gets the competition factor
//! `exp(-eta * M * da)` with `M` the step-start total mass. With this
//! arrangement the competition renormalization `v = exp(eta * int M) * n`
//! maps nonlinear solutions onto linear ones exactly (up to rounding), and
//! the growth-rate error of the linear scheme is second order in `da`.

use serde::Serialize;

use crate::demography::{equilibrium, stable_age_distribution};
use crate::life_trait::LifeTrait;
use crate::{Error, Result};

/// Uniform age grid over `[0, a_max]`; cell `i` covers
/// `[i*da, (i+1)*da]` and is represented by its center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgeGrid {
    da: f64,
    a_max: f64,
    n_cells: usize,
}

impl AgeGrid {
    pub fn new(da: f64, a_max: f64) -> Result<Self> {
        if !(da.is_finite() && da > 0.0) {
            return Err(Error::Parameter {
                name: "da",
                value: da,
                requirement: "must be finite and > 0",
            });
        }
        if !(a_max.is_finite() && a_max > da) {
            return Err(Error::Parameter {
                name: "a_max",
                value: a_max,
                requirement: "must be finite and > da",
            });
        }
        let n_cells = (a_max / da).round().max(2.0) as usize;
        Ok(Self {
            da,
            a_max: n_cells as f64 * da,
            n_cells,
        })
    }

    /// Grid long enough for the given traits: `a_max` is the larger of
    /// (largest coordinate + 20) and 3x the largest coordinate, so the
    /// stationary tails are negligible at the top.
    pub fn for_traits(da: f64, traits: &[LifeTrait]) -> Result<Self> {
        let max_coord = traits
            .iter()
            .flat_map(|x| [x.x_b, x.x_d])
            .fold(0.0_f64, f64::max);
        Self::new(da, (max_coord + 20.0).max(3.0 * max_coord))
    }

    #[must_use]
    pub fn da(&self) -> f64 {
        self.da
    }

    #[must_use]
    pub fn a_max(&self) -> f64 {
        self.a_max
    }

    #[must_use]
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    #[must_use]
    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.da
    }

    /// Index of the cell edge nearest to age `x` (thresholds are snapped to
    /// edges so that cell-center tests resolve indicator supports exactly).
    fn edge_index(&self, x: f64) -> usize {
        ((x / self.da).round().max(0.0) as usize).min(self.n_cells)
    }
}

/// Which sub-population a component holds: full-trait carriers or their
/// Lansing-born offspring (senescence age zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Subtype {
    Main,
    Lansing,
}

/// Densities per unit age for one or more components over a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    grid: AgeGrid,
    pub components: Vec<Vec<f64>>,
    pub labels: Vec<(LifeTrait, Subtype)>,
}

impl DensityField {
    #[must_use]
    pub fn zeros(grid: AgeGrid, labels: Vec<(LifeTrait, Subtype)>) -> Self {
        Self {
            components: labels.iter().map(|_| vec![0.0; grid.n_cells]).collect(),
            grid,
            labels,
        }
    }

    /// The analytic stationary state of a viable trait under competition
    /// `eta`, sampled at cell centers.
    pub fn stationary(x: &LifeTrait, eta: f64, grid: AgeGrid) -> Result<Self> {
        let profile = stable_age_distribution(x)?;
        let scale = equilibrium(x, eta)?.n1_at_0;
        let mut field = Self::zeros(grid, vec![(*x, Subtype::Main), (*x, Subtype::Lansing)]);
        for i in 0..grid.n_cells {
            let a = grid.center(i);
            field.components[0][i] = scale * profile.n1(a);
            field.components[1][i] = scale * profile.n2(a);
        }
        Ok(field)
    }

    #[must_use]
    pub fn grid(&self) -> &AgeGrid {
        &self.grid
    }

    /// Mass of one component: `da * sum(entries)`.
    #[must_use]
    pub fn mass(&self, component: usize) -> f64 {
        self.grid.da * self.components[component].iter().sum::<f64>()
    }

    #[must_use]
    pub fn total_mass(&self) -> f64 {
        (0..self.components.len()).map(|c| self.mass(c)).sum()
    }

    pub fn scale(&mut self, factor: f64) {
        for comp in &mut self.components {
            for v in comp.iter_mut() {
                *v *= factor;
            }
        }
    }

    /// L1 distance summed over components.
    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid || self.components.len() != other.components.len() {
            return Err(Error::Mismatch {
                what: "density fields",
                expected: format!("{} cells x {}", self.grid.n_cells, self.components.len()),
                got: format!("{} cells x {}", other.grid.n_cells, other.components.len()),
            });
        }
        Ok(self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * self.grid.da)
            .sum())
    }

    /// Relative mass in the top unit-length age band; the grid is long
    /// enough only if this stays below 1e-10.
    fn tail_fraction(&self) -> f64 {
        let band = ((1.0 / self.grid.da).ceil() as usize).clamp(1, self.grid.n_cells);
        let tail: f64 = self
            .components
            .iter()
            .map(|c| c[self.grid.n_cells - band..].iter().sum::<f64>())
            .sum::<f64>()
            * self.grid.da;
        let total = self.total_mass();
        if total > 0.0 {
            tail / total
        } else {
            0.0
        }
    }

    fn check_tail(&self) -> Result<()> {
        let tail = self.tail_fraction();
        if tail > 1e-10 {
            return Err(Error::TailMass { tail, limit: 1e-10 });
        }
        Ok(())
    }
}

/// Edge indices of one trait's indicator thresholds on a grid.
#[derive(Debug, Clone, Copy)]
struct TraitCells {
    /// Fertile-and-safe span edge: births into the main component come
    /// from main-component cells below this.
    i_tau: usize,
    /// Fertility edge `x_b`.
    i_xb: usize,
    /// Senescence edge `x_d`.
    i_xd: usize,
}

impl TraitCells {
    fn of(x: &LifeTrait, grid: &AgeGrid) -> Self {
        Self {
            i_tau: grid.edge_index(x.min_span()),
            i_xb: grid.edge_index(x.x_b),
            i_xd: grid.edge_index(x.x_d),
        }
    }
}

/// Birth integrals of one trait pair (main, lansing) from the given
/// component slices: midpoint rule with edge-snapped supports.
fn renewal(main: &[f64], lansing: &[f64], cells: &TraitCells, da: f64) -> (f64, f64) {
    let b_main: f64 = main[..cells.i_tau].iter().sum::<f64>() * da;
    let senescent_births = if cells.i_xd < cells.i_xb {
        main[cells.i_xd..cells.i_xb].iter().sum::<f64>() * da
    } else {
        0.0
    };
    let lansing_births = lansing[..cells.i_xb].iter().sum::<f64>() * da;
    (b_main, senescent_births + lansing_births)
}

/// One `dt = da` step of the system for any number of trait pairs sharing
/// one competition pool. `eta = 0` gives the linear dynamics. Returns the
/// step-start total mass.
fn step_system(field: &mut DensityField, cells: &[TraitCells], eta: f64) -> f64 {
    let da = field.grid.da;
    let n = field.grid.n_cells;
    let mass_start = field.total_mass();
    let survive = (-da).exp();
    let pairs = cells.len();
    let mut born = vec![(0.0, 0.0); pairs];
    for (p, tc) in cells.iter().enumerate() {
        let (main, lansing) = (&field.components[2 * p], &field.components[2 * p + 1]);
        born[p] = renewal(main, lansing, tc, da);
    }
    let half_step = (-da / 2.0).exp();
    for (p, tc) in cells.iter().enumerate() {
        let main = &mut field.components[2 * p];
        for i in (1..n).rev() {
            // A shift into cell `i` spans ages ((i-1/2) da, (i+1/2) da), so
            // the cell at the senescence edge gets half a step of death
            // exposure and cells beyond it a full step.
            let d = if i > tc.i_xd {
                survive
            } else if i == tc.i_xd {
                half_step
            } else {
                1.0
            };
            main[i] = main[i - 1] * d;
        }
        main[0] = 0.0;
        let lansing = &mut field.components[2 * p + 1];
        for i in (1..n).rev() {
            lansing[i] = lansing[i - 1] * survive;
        }
        lansing[0] = 0.0;
    }
    for (p, tc) in cells.iter().enumerate() {
        // Average the step-start and step-end birth integrals (trapezoid in
        // time, second-order accurate), then age the newborn cell by half a
        // step of its own death rate. The step-end integral includes the
        // newborn cell itself, which makes the deposit implicit; since the
        // dependence is linear it stays closed-form. The post-shift sums
        // below have zero in every age-zero cell, so the own-cell and
        // cross-component contributions are added back explicitly.
        let (end_main, end_lansing) = {
            let (main, lansing) = (&field.components[2 * p], &field.components[2 * p + 1]);
            renewal(main, lansing, tc, da)
        };
        let main_factor = if tc.i_xd == 0 { half_step } else { 1.0 };
        let own_main = if tc.i_tau >= 1 { da } else { 0.0 };
        let c_main =
            main_factor * 0.5 * (born[p].0 + end_main) / (1.0 - 0.5 * main_factor * own_main);
        // The main newborn cell feeds the lansing renewal only when the
        // senescent window starts at age zero.
        let cross = if tc.i_xd == 0 && tc.i_xb >= 1 {
            c_main * da
        } else {
            0.0
        };
        let own_lansing = if tc.i_xb >= 1 { da } else { 0.0 };
        let c_lansing = half_step * 0.5 * (born[p].1 + end_lansing + cross)
            / (1.0 - 0.5 * half_step * own_lansing);
        field.components[2 * p][0] = c_main;
        field.components[2 * p + 1][0] = c_lansing;
    }
    if eta != 0.0 {
        let crowd = (-eta * mass_start * da).exp();
        for comp in &mut field.components {
            for v in comp.iter_mut() {
                *v *= crowd;
            }
        }
    }
    mass_start
}

/// One step of the single-trait system; returns the step-start total mass.
pub fn step_monomorphic(field: &mut DensityField, x: &LifeTrait, eta: f64) -> Result<f64> {
    check_labels(field, &[*x])?;
    let cells = [TraitCells::of(x, &field.grid)];
    Ok(step_system(field, &cells, eta))
}

fn check_labels(field: &DensityField, traits: &[LifeTrait]) -> Result<()> {
    let expected: Vec<(LifeTrait, Subtype)> = traits
        .iter()
        .flat_map(|x| [(*x, Subtype::Main), (*x, Subtype::Lansing)])
        .collect();
    if field.labels != expected || field.components.len() != expected.len() {
        return Err(Error::Mismatch {
            what: "field labels",
            expected: format!("{expected:?}"),
            got: format!("{:?}", field.labels),
        });
    }
    Ok(())
}

/// Trajectory of the single-trait logistic system.
#[derive(Debug, Clone)]
pub struct MonomorphicRun {
    pub final_field: DensityField,
    /// L1 distance of the final field to the analytic stationary state
    /// (to the zero field when the trait is not viable).
    pub residual_l1: f64,
    pub times: Vec<f64>,
    /// Component masses (main, lansing) at each recorded time.
    pub masses: Vec<[f64; 2]>,
    /// `int_0^t_end M(s) ds` accumulated exactly as the scheme applies it.
    pub competition_integral: f64,
}

pub fn solve_monomorphic(
    initial: &DensityField,
    x: &LifeTrait,
    eta: f64,
    t_end: f64,
) -> Result<MonomorphicRun> {
    check_labels(initial, &[*x])?;
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::Parameter {
            name: "eta",
            value: eta,
            requirement: "must be finite and > 0",
        });
    }
    if initial.mass(0) <= 0.0 {
        return Err(Error::Parameter {
            name: "initial main-component mass",
            value: initial.mass(0),
            requirement: "must be > 0",
        });
    }
    initial.check_tail()?;
    let mut field = initial.clone();
    let cells = [TraitCells::of(x, &field.grid)];
    let da = field.grid.da;
    let steps = (t_end / da).round() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut masses = Vec::with_capacity(steps + 1);
    times.push(0.0);
    masses.push([field.mass(0), field.mass(1)]);
    let mut integral = 0.0;
    for k in 1..=steps {
        let m = step_system(&mut field, &cells, eta);
        integral += m * da;
        times.push(k as f64 * da);
        masses.push([field.mass(0), field.mass(1)]);
    }
    field.check_tail()?;
    let residual_l1 = if x.is_viable() {
        field.l1_distance(&DensityField::stationary(x, eta, field.grid)?)?
    } else {
        field.total_mass()
    };
    Ok(MonomorphicRun {
        final_field: field,
        residual_l1,
        times,
        masses,
        competition_integral: integral,
    })
}

/// Trajectory of two traits competing through a shared pool.
#[derive(Debug, Clone)]
pub struct BimorphicRun {
    pub final_field: DensityField,
    /// Final masses: (x main, x lansing, y main, y lansing).
    pub final_masses: [f64; 4],
    pub times: Vec<f64>,
    pub masses: Vec<[f64; 4]>,
}

pub fn solve_bimorphic(
    initial: &DensityField,
    x: &LifeTrait,
    y: &LifeTrait,
    eta: f64,
    t_end: f64,
) -> Result<BimorphicRun> {
    check_labels(initial, &[*x, *y])?;
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::Parameter {
            name: "eta",
            value: eta,
            requirement: "must be finite and > 0",
        });
    }
    initial.check_tail()?;
    let mut field = initial.clone();
    let cells = [
        TraitCells::of(x, &field.grid),
        TraitCells::of(y, &field.grid),
    ];
    let da = field.grid.da;
    let steps = (t_end / da).round() as usize;
    let record = |f: &DensityField| [f.mass(0), f.mass(1), f.mass(2), f.mass(3)];
    let mut times = vec![0.0];
    let mut masses = vec![record(&field)];
    for k in 1..=steps {
        step_system(&mut field, &cells, eta);
        times.push(k as f64 * da);
        masses.push(record(&field));
    }
    field.check_tail()?;
    Ok(BimorphicRun {
        final_masses: record(&field),
        final_field: field,
        times,
        masses,
    })
}

/// Trajectory of the competition-free (linear) single-trait system.
#[derive(Debug, Clone)]
pub struct LinearRun {
    pub final_field: DensityField,
    /// Log-mass slope over the last quarter of the run.
    pub growth_rate_est: f64,
    /// L1 distance between the final field and the stationary age profile,
    /// both normalized to unit total mass.
    pub shape_residual: f64,
    pub times: Vec<f64>,
    pub masses: Vec<[f64; 2]>,
}

pub fn solve_linear(initial: &DensityField, x: &LifeTrait, t_end: f64) -> Result<LinearRun> {
    check_labels(initial, &[*x])?;
    if initial.total_mass() <= 0.0 {
        return Err(Error::Parameter {
            name: "initial total mass",
            value: initial.total_mass(),
            requirement: "must be > 0",
        });
    }
    initial.check_tail()?;
    let mut field = initial.clone();
    let cells = [TraitCells::of(x, &field.grid)];
    let da = field.grid.da;
    let steps = (t_end / da).round() as usize;
    let mut times = vec![0.0];
    let mut masses = vec![[field.mass(0), field.mass(1)]];
    for k in 1..=steps {
        step_system(&mut field, &cells, 0.0);
        times.push(k as f64 * da);
        masses.push([field.mass(0), field.mass(1)]);
    }
    field.check_tail()?;
    let i_start = (steps * 3) / 4;
    let m_start: f64 = masses[i_start].iter().sum();
    let m_end: f64 = masses[steps].iter().sum();
    let growth_rate_est = (m_end.ln() - m_start.ln()) / (times[steps] - times[i_start]);
    let shape_residual = if x.is_viable() {
        let profile = stable_age_distribution(x)?;
        let mut reference = DensityField::zeros(
            field.grid,
            vec![(*x, Subtype::Main), (*x, Subtype::Lansing)],
        );
        for i in 0..field.grid.n_cells {
            let a = field.grid.center(i);
            reference.components[0][i] = profile.n1(a);
            reference.components[1][i] = profile.n2(a);
        }
        reference.scale(1.0 / reference.total_mass());
        let mut normalized = field.clone();
        normalized.scale(1.0 / normalized.total_mass());
        normalized.l1_distance(&reference)?
    } else {
        f64::NAN
    };
    Ok(LinearRun {
        final_field: field,
        growth_rate_est,
        shape_residual,
        times,
        masses,
    })
}

/// Lower-triangular mass matrix of the projected two-type system:
/// `m11 > 0` (growth of the main type), `m21 >= 0` (flux into the Lansing
/// type), `m22 < 0` (its self-renewal deficit); `m12` is identically 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassMatrix {
    pub m11: f64,
    pub m21: f64,
    pub m22: f64,
}

impl MassMatrix {
    fn validate(&self) -> Result<()> {
        if !(self.m11 > 0.0) {
            return Err(Error::SignPattern(format!(
                "m11 = {} must be > 0",
                self.m11
            )));
        }
        if !(self.m22 < 0.0) {
            return Err(Error::SignPattern(format!(
                "m22 = {} must be < 0",
                self.m22
            )));
        }
        if !(self.m21 >= 0.0) {
            return Err(Error::SignPattern(format!(
                "m21 = {} must be >= 0",
                self.m21
            )));
        }
        Ok(())
    }
}

/// The closed-form equilibrium of the mass ODE.
#[must_use]
pub fn mass_ode_equilibrium(m: &MassMatrix, eta: f64) -> [f64; 2] {
    let z1 = (m.m11 / eta) / (1.0 + m.m21 / (m.m11 - m.m22));
    [z1, z1 * m.m21 / (m.m11 - m.m22)]
}

/// RK4 integration of `dz/dt = (M + P(t)) z - eta * |z|_1 * z` with an
/// optional decaying lower-triangular perturbation `P(t) = [p11, p21, p22]`.
pub fn mass_ode_solve(
    m: &MassMatrix,
    perturbation: Option<&dyn Fn(f64) -> [f64; 3]>,
    eta: f64,
    z0: [f64; 2],
    t_end: f64,
    dt: f64,
) -> Result<[f64; 2]> {
    m.validate()?;
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::Parameter {
            name: "eta",
            value: eta,
            requirement: "must be finite and > 0",
        });
    }
    if !(z0[0] > 0.0) {
        return Err(Error::Parameter {
            name: "z0[0]",
            value: z0[0],
            requirement: "must be > 0",
        });
    }
    if !(dt > 0.0 && t_end > 0.0) {
        return Err(Error::Parameter {
            name: "dt",
            value: dt,
            requirement: "dt and t_end must be > 0",
        });
    }
    let deriv = |t: f64, z: [f64; 2]| -> [f64; 2] {
        let p = perturbation.map_or([0.0; 3], |f| f(t));
        let crowd = eta * (z[0].abs() + z[1].abs());
        [
            (m.m11 + p[0]) * z[0] - crowd * z[0],
            (m.m21 + p[1]) * z[0] + (m.m22 + p[2]) * z[1] - crowd * z[1],
        ]
    };
    let steps = (t_end / dt).round().max(1.0) as usize;
    let h = t_end / steps as f64;
    let mut z = z0;
    let mut t = 0.0;
    for _ in 0..steps {
        let k1 = deriv(t, z);
        let k2 = deriv(
            t + h / 2.0,
            [z[0] + h / 2.0 * k1[0], z[1] + h / 2.0 * k1[1]],
        );
        let k3 = deriv(
            t + h / 2.0,
            [z[0] + h / 2.0 * k2[0], z[1] + h / 2.0 * k2[1]],
        );
        let k4 = deriv(t + h, [z[0] + h * k3[0], z[1] + h * k3[1]]);
        z = [
            z[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            z[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        t += h;
    }
    Ok(z)
}
