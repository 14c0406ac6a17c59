//! The induction over an exhaustion of the window: at step `i` the current
//! map `f_{i-1}` is replaced by `f_i`, which is close to it on `E_{i-1}` and
//! holomorphic on a larger set `E_i = E ∪ Δ_i ∪ H_i`. The last step has no
//! outer disc inside the window, so `f_N` is the rational fit itself.

mod step;

pub use step::{map_cr_residual, step};

use rayon::prelude::*;

use crate::mergelyan::{CP1Map, RationalMap, SampledMap, TUBULAR_RADIUS};
use crate::planar_sets::{
    beh_check, build_exhaustion, holes, rasterize, ExhaustionDisc, GridSpec, RasterSet, SetDescriptor,
};
use crate::target_cp1::{dist_cp1, Spray};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances {
    /// Degree cap of each rational fit.
    pub max_degree: usize,
    /// Halvings of the fitting target `c` before a step gives up.
    pub max_retries: usize,
    /// Shrink factor of the parameter polydisc used by the splitting.
    pub r0: f64,
    /// Radius of the parameter polydisc `W`.
    pub parameter_radius: f64,
    /// Admissible disagreement of the two branches of `f_i` on `K`.
    pub branch_tolerance: f64,
    /// Sweeps of the harmonic fill used by the continuous extension.
    pub relax_iterations: usize,
    /// Initial fitting target is `2^{-i} ε / (c_divisor · c1)`.
    pub c_divisor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            max_degree: 60,
            max_retries: 8,
            r0: 0.5,
            parameter_radius: 0.5,
            branch_tolerance: 1e-8,
            relax_iterations: 3000,
            c_divisor: 4.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub grid: GridSpec,
    pub set: SetDescriptor,
    /// Initial map, continuous on the window and holomorphic on `int E`.
    pub f: CP1Map,
    pub epsilon: f64,
    pub steps: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub spray: Spray,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < TUBULAR_RADIUS) {
            return Err(Error::Config(format!(
                "epsilon = {} must satisfy 0 < epsilon < r = {TUBULAR_RADIUS} (the gluing radius)",
                self.epsilon
            )));
        }
        if self.steps == 0 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        let t = &self.tolerances;
        if !(t.r0 > 0.0 && t.r0 < 1.0) || !(t.parameter_radius > 0.0) || t.max_degree == 0 || !(t.c_divisor > 0.0) {
            return Err(Error::Config("tolerances out of range".into()));
        }
        Ok(())
    }
}

/// State after step `i` (`i = 0` is the initial data).
#[derive(Clone, Debug)]
pub struct InductionState {
    pub i: usize,
    pub disc: RasterSet,
    pub holes: RasterSet,
    /// `E_i`
    pub e: RasterSet,
    /// `f_i` on the whole window.
    pub f: SampledMap,
    /// `f_i` as a rational map when it is one.
    pub rational: Option<RationalMap>,
    /// The rational fit `h` of the step that produced this state.
    pub fit: Option<RationalMap>,
    pub spent_budget: f64,
}

/// Per-step record.
#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    pub step: usize,
    /// Fitting target used by the accepted attempt.
    pub c: f64,
    pub attempts: usize,
    pub degree: usize,
    pub fit_error: f64,
    /// No splitting was needed (`A \ B` or `K` empty).
    pub degenerate: bool,
    pub k_cells: usize,
    pub dist_to_id: f64,
    pub delta: f64,
    pub picard_iterations: usize,
    pub composition_residual: f64,
    /// `sup_K dist` between the two branches of `f_i`.
    pub branch_gap: f64,
    /// `sup_{E_{i-1}} dist(f_i, f_{i-1})`.
    pub deviation: f64,
    /// `2^{-i} ε`
    pub budget: f64,
    /// Chordal CR residual of `f_i` on `int E_i`.
    pub cr_residual: f64,
    /// Smallest norm along the gluing homotopy (0 when nothing was glued).
    pub glue_min_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub steps: Vec<StepReport>,
    pub epsilon: f64,
    /// `sup_E dist(f, F)` over the window.
    pub final_error: f64,
    pub degree: usize,
}

/// Rasterized set, exhaustion and initial state, after the admissibility checks.
#[derive(Clone, Debug)]
pub struct Plan {
    pub e: RasterSet,
    pub exhaustion: Vec<ExhaustionDisc>,
    pub initial: InductionState,
}

/// Validate the scenario and build the exhaustion.
pub fn prepare(sc: &Scenario) -> Result<Plan> {
    sc.validate()?;
    let e = rasterize(&sc.set, &sc.grid)?;
    let n_holes = holes(&e).len();
    if n_holes > 0 {
        return Err(Error::NotArakelian { holes: n_holes });
    }
    let exhaustion = build_exhaustion(&e, sc.steps)?;
    for d in &exhaustion {
        let rep = beh_check(&e, &SetDescriptor::disc(crate::C64::new(0.0, 0.0), d.radius))?;
        if !rep.holes.is_empty() && !rep.passes {
            return Err(Error::Precondition(format!(
                "bounded exhaustion hulls fail for the disc of radius {:.3}",
                d.radius
            )));
        }
    }
    let f = sc.f.sample(&sc.grid);
    let cr = map_cr_residual(&f, &e.interior(), None);
    let tol = crate::cauchy_green::dbar_tolerance(sc.grid.spacing(), 1.0);
    if cr > tol {
        return Err(Error::Precondition(format!(
            "f is not holomorphic on int E: CR residual {cr:.3e} > {tol:.3e}"
        )));
    }
    let rational = sc.f.as_rational().cloned();
    let grid = sc.grid;
    let initial = InductionState {
        i: 0,
        disc: RasterSet::empty(grid),
        holes: RasterSet::empty(grid),
        e: e.clone(),
        f,
        rational,
        fit: None,
        spent_budget: 0.0,
    };
    Ok(Plan { e, exhaustion, initial })
}

/// Run all steps and return `F = f_N` with the per-step report.
pub fn run(sc: &Scenario) -> Result<(RationalMap, RunReport)> {
    run_with(sc, |_, _| {})
}

/// [`run`] with a callback after each step (for progress output and checkpoints).
pub fn run_with(
    sc: &Scenario,
    mut on_step: impl FnMut(&InductionState, &StepReport),
) -> Result<(RationalMap, RunReport)> {
    let plan = prepare(sc)?;
    let mut state = plan.initial.clone();
    let mut reports = Vec::with_capacity(sc.steps);
    for _ in 0..sc.steps {
        let (next, rep) = step(&state, sc, &plan)?;
        on_step(&next, &rep);
        reports.push(rep);
        state = next;
    }
    let fmap = state
        .rational
        .clone()
        .ok_or_else(|| Error::Precondition("the last step did not produce a rational map".into()))?;
    let original = sc.f.sample(&sc.grid);
    let cells = plan.e.cell_list();
    let final_error = cells
        .par_iter()
        .map(|&c| dist_cp1(&original.value(c), &fmap.eval(sc.grid.center(c))))
        .reduce(|| 0.0, f64::max);
    let degree = fmap.degree();
    Ok((fmap, RunReport { steps: reports, epsilon: sc.epsilon, final_error, degree }))
}
