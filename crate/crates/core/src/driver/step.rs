use std::sync::Arc;

use rayon::prelude::*;

use super::{InductionState, Plan, Scenario, StepReport};
use crate::cauchy_green::{build_cutoff, Polydisc};
use crate::cousin::CousinOperator;
use crate::mergelyan::{
    continuous_glue, rational_approx_cp1, rational_correct, relax_extension, ApproxReport, CP1Map, FitOptions, RationalMap, SampledMap,
    TUBULAR_RADIUS,
};
use crate::planar_sets::{cartan_pair_for_step, RasterSet};
use crate::target_cp1::{dist_cp1, spray_eval, CP1Point, ChartComplement};
use crate::transition::{build_gamma, split_gamma, TransitionMap};
use crate::{Error, Result, C64};

/// Poles of `h` keep this many cells away from `E_i`.
const POLE_MARGIN_CELLS: usize = 3;

/// Chordal CR residual `|∂̄u| / (1 + |u|^2)` of a sampled map on the cells
/// of `region` whose four neighbours exist, in the chart (`0` or `∞`) where
/// the center value has `|u| <= 1`.
///
/// With a `reference` (values of a holomorphic map on the grid) the stencil
/// is applied to `u - u_ref` instead of `u`: the reference contributes no
/// `∂̄` of its own, and the difference stays resolved on the grid where the
/// reference varies too fast for the cell spacing.
pub fn map_cr_residual(f: &SampledMap, region: &RasterSet, reference: Option<&[CP1Point]>) -> f64 {
    let grid = *f.grid();
    let h = grid.spacing();
    region
        .cell_list()
        .par_iter()
        .filter_map(|&c| {
            let nb = [grid.offset(c, 1, 0)?, grid.offset(c, -1, 0)?, grid.offset(c, 0, 1)?, grid.offset(c, 0, -1)?];
            let y = f.value(c);
            let at_zero = y.chart0().norm() <= 1.0;
            let coord = |p: CP1Point| if at_zero { p.chart0() } else { p.chart_inf() };
            let u = coord(y);
            let [e, w, n, s] = nb.map(|d| {
                let v = coord(f.value(d));
                match reference {
                    Some(r) => v - coord(r[d]),
                    None => v,
                }
            });
            let d = ((e - w) + C64::i() * (n - s)) / (4.0 * h);
            let r = d.norm() / (1.0 + u.norm_sqr());
            r.is_finite().then_some(r)
        })
        .reduce(|| 0.0, f64::max)
}

/// Chart for one component of `K`: the standard charts or the rotation
/// centered at the mean value, whichever keeps `max |u|` smallest.
fn chart_for(points: &[CP1Point], component: usize) -> Result<ChartComplement> {
    let mut mean = [0.0; 3];
    for p in points {
        let s = p.to_sphere();
        for k in 0..3 {
            mean[k] += s[k];
        }
    }
    let mut charts = vec![ChartComplement::zero(), ChartComplement::infinity()];
    if let Some(c) = CP1Point::from_sphere(mean) {
        charts.push(ChartComplement::centered_at(&c));
    }
    let (worst, chart) = charts
        .into_iter()
        .map(|ch| (points.iter().map(|p| ch.coordinate(p).norm()).fold(0.0, f64::max), ch))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap();
    if worst <= chart.max_modulus() {
        Ok(chart)
    } else {
        Err(Error::ChartSpread { component })
    }
}

struct Attempt {
    values: Vec<CP1Point>,
    rational: Option<RationalMap>,
    fit: RationalMap,
    report: StepReport,
}

fn retryable(e: &Error) -> bool {
    matches!(
        e.root(),
        Error::NotContractive { .. } | Error::PointsTooFar { .. } | Error::NewtonDivergence { .. } | Error::MapsTooFar { .. }
    )
}

/// One induction step `f_{i-1} -> f_i`, retried with halved fitting target
/// while the deviation budget or the splitting precondition fails.
pub fn step(state: &InductionState, sc: &Scenario, plan: &Plan) -> Result<(InductionState, StepReport)> {
    let i = state.i + 1;
    let cur = plan
        .exhaustion
        .get(i - 1)
        .ok_or_else(|| Error::Precondition(format!("no exhaustion disc for step {i}")).at_step(i))?;
    let budget = sc.epsilon * 0.5f64.powi(i as i32);
    let mut c = budget / (sc.tolerances.c_divisor * sc.spray.c1);
    let mut fit: Option<(RationalMap, ApproxReport)> = None;
    let mut last: Option<Error> = None;
    for attempt in 1..=sc.tolerances.max_retries + 1 {
        match try_step(state, sc, plan, c, &mut fit) {
            Ok(mut out) => {
                out.report.attempts = attempt;
                out.report.budget = budget;
                if out.report.deviation < budget {
                    let next = InductionState {
                        i,
                        disc: cur.disc.clone(),
                        holes: cur.holes.clone(),
                        e: cur.set.clone(),
                        f: SampledMap::from_values(sc.grid, out.values)?,
                        rational: out.rational,
                        fit: Some(out.fit),
                        spent_budget: state.spent_budget + out.report.deviation,
                    };
                    return Ok((next, out.report));
                }
                last = Some(Error::BudgetViolation { step: i, deviation: out.report.deviation, budget });
            }
            Err(e) if retryable(&e) => last = Some(e),
            Err(e) => return Err(e.at_step(i)),
        }
        c *= 0.5;
    }
    Err(match last {
        Some(Error::NotContractive { dist, delta }) => Error::SplittingPrecondition { step: i, dist, delta },
        Some(e @ Error::BudgetViolation { .. }) => e,
        Some(e) => e.at_step(i),
        None => Error::Precondition("no attempt was made".into()).at_step(i),
    })
}

fn fit_h(
    state: &InductionState,
    sc: &Scenario,
    s: &RasterSet,
    exclusion: &RasterSet,
    c: f64,
    cache: &mut Option<(RationalMap, ApproxReport)>,
) -> Result<(RationalMap, f64, usize)> {
    if let Some(r) = &state.rational {
        let worst = s
            .cell_list()
            .par_iter()
            .map(|&cell| dist_cp1(&state.f.value(cell), &r.eval(sc.grid.center(cell))))
            .reduce(|| 0.0, f64::max);
        if worst < c {
            return Ok((r.clone(), worst, r.degree()));
        }
    }
    if let Some((h, rep)) = cache {
        if rep.sup_error < c {
            return Ok((h.clone(), rep.sup_error, rep.degree));
        }
    }
    let f = CP1Map::Sampled(state.f.clone());
    let opts = FitOptions::new(sc.tolerances.max_degree, c).with_pole_exclusion(exclusion.clone());
    let mut best: Option<(RationalMap, ApproxReport)> = None;
    if let Some(base) = state.rational.as_ref().or(state.fit.as_ref()) {
        if let Ok(fit) = rational_correct(base, &f, s, &opts) {
            best = Some(fit);
        }
    }
    if !best.as_ref().is_some_and(|(_, rep)| rep.sup_error < c) {
        let greedy = rational_approx_cp1(&f, s, &opts)?;
        if best.as_ref().is_none_or(|(_, rep)| greedy.1.sup_error < rep.sup_error) {
            best = Some(greedy);
        }
    }
    let (h, rep) = best.expect("a fit was produced");
    *cache = Some((h.clone(), rep.clone()));
    Ok((h, rep.sup_error, rep.degree))
}

fn try_step(
    state: &InductionState,
    sc: &Scenario,
    plan: &Plan,
    c: f64,
    cache: &mut Option<(RationalMap, ApproxReport)>,
) -> Result<Attempt> {
    let i = state.i + 1;
    let grid = sc.grid;
    let cur = &plan.exhaustion[i - 1];
    let next = plan.exhaustion.get(i);
    let e_prev = &state.e;
    let e_i = &cur.set;
    let window = match next {
        Some(d) => d.disc.clone(),
        None => RasterSet::full(grid),
    };
    let s = e_prev.intersection(&window);
    let exclusion = e_i.dilate(POLE_MARGIN_CELLS);
    let (h, fit_error, degree) = fit_h(state, sc, &s, &exclusion, c, cache)?;
    let h_vals: Vec<CP1Point> = (0..grid.len()).into_par_iter().map(|c| h.eval(grid.center(c))).collect();
    let f_prev = state.f.values();

    let mut report = StepReport {
        step: i,
        c,
        attempts: 0,
        degree,
        fit_error,
        degenerate: true,
        k_cells: 0,
        dist_to_id: 0.0,
        delta: f64::INFINITY,
        picard_iterations: 0,
        composition_residual: 0.0,
        branch_gap: 0.0,
        deviation: 0.0,
        budget: 0.0,
        cr_residual: 0.0,
        glue_min_norm: 0.0,
    };
    let deviation = |values: &[CP1Point]| {
        e_prev.cell_list().par_iter().map(|&c| dist_cp1(&values[c], &f_prev[c])).reduce(|| 0.0, f64::max)
    };

    // Last step, or E_i inside the intermediate disc: f_i = h.
    let outer = next.map(|d| d.radius);
    let inner = outer.map(|r| 0.5 * (cur.reach() + r));
    let pair = match (inner, outer) {
        (Some(a), Some(b)) => match cartan_pair_for_step(e_i, a, b) {
            Ok(p) => Some(p),
            Err(Error::NothingToGlue) => None,
            Err(e) => return Err(e),
        },
        _ => None,
    };
    let Some(pair) = pair else {
        report.deviation = deviation(&h_vals);
        report.cr_residual = 0.0;
        return Ok(Attempt { values: h_vals, rational: Some(h.clone()), fit: h, report });
    };
    let (inner, outer) = (inner.unwrap(), outer.unwrap());

    // f_i on E_i: A-branch on A \ B, B-branch on B.
    let mut fi: Vec<Option<CP1Point>> = vec![None; grid.len()];
    for c in pair.a_only.cells() {
        fi[c] = Some(f_prev[c]);
    }
    for c in pair.b.cells() {
        fi[c] = Some(h_vals[c]);
    }
    let mut identity = true;
    if !pair.k.is_empty() {
        report.degenerate = false;
        let chi = build_cutoff(&pair)?;
        let op = Arc::new(CousinOperator::new(pair.clone(), chi));
        let k_cells = pair.k.cell_list();
        report.k_cells = k_cells.len();
        let mut charts = vec![ChartComplement::zero(); k_cells.len()];
        let pos: std::collections::HashMap<usize, usize> = k_cells.iter().enumerate().map(|(j, &c)| (c, j)).collect();
        for (idx, comp) in pair.k.components().iter().enumerate() {
            let cells = comp.cell_list();
            let pts: Vec<CP1Point> = cells.iter().flat_map(|&c| [f_prev[c], h_vals[c]]).collect();
            let chart = chart_for(&pts, idx)?;
            for c in cells {
                charts[pos[&c]] = chart;
            }
        }
        let fk: Vec<CP1Point> = k_cells.iter().map(|&c| f_prev[c]).collect();
        let hk: Vec<CP1Point> = k_cells.iter().map(|&c| h_vals[c]).collect();
        let domain = Polydisc::uniform(3, sc.tolerances.parameter_radius);
        let gamma = build_gamma(&pair.k, &fk, &hk, &charts, TransitionMap::default(), domain)?;
        report.dist_to_id = gamma.dist_to_id();
        identity = gamma.dist_to_id() == 0.0;
        let split = split_gamma(&gamma, &op, sc.tolerances.r0)?;
        report.delta = split.delta;
        report.picard_iterations = split.iterations();
        report.composition_residual = split.composition_residual;
        let z = split.zero_sample().expect("the parameter sample contains 0");
        let mut a_branch = vec![None; grid.len()];
        for (&c, a) in split.a_cells.iter().zip(&split.a[z]) {
            a_branch[c] = Some(spray_eval(&f_prev[c], a));
        }
        for (&c, a) in split.a_cells.iter().zip(&split.a[z]) {
            if !pair.b.contains(c) {
                fi[c] = Some(spray_eval(&f_prev[c], a));
            }
        }
        for (&c, b) in split.b_cells.iter().zip(&split.b[z]) {
            fi[c] = Some(spray_eval(&h_vals[c], b));
        }
        report.branch_gap = k_cells
            .iter()
            .map(|&c| dist_cp1(&a_branch[c].unwrap(), &fi[c].unwrap()))
            .fold(0.0, f64::max);
        if report.branch_gap > sc.tolerances.branch_tolerance {
            return Err(Error::Precondition(format!(
                "branches of f_{i} disagree on K by {:.3e}",
                report.branch_gap
            )));
        }
    }

    // Fixed point: nothing moved and h already is f_{i-1}.
    if identity && h_vals.iter().zip(f_prev).all(|(a, b)| a == b) {
        report.cr_residual = 0.0;
        return Ok(Attempt { values: h_vals, rational: Some(h.clone()), fit: h, report });
    }

    // Background: h inside Δ, f_{i-1} outside Δ_{i+1}, harmonic fill on the
    // annulus between them with f_i held on E.
    let mut background: Vec<CP1Point> = (0..grid.len())
        .map(|c| if grid.center(c).norm() >= outer { f_prev[c] } else { h_vals[c] })
        .collect();
    let annulus = RasterSet::from_predicate(grid, |z| z.norm() > inner && z.norm() < outer);
    let held = annulus.intersection(e_i);
    for c in held.cells() {
        background[c] = fi[c].expect("f_i is defined on E_i");
    }
    relax_extension(&mut background, &grid, &held, &annulus, sc.tolerances.relax_iterations);
    let on_e: Vec<CP1Point> = (0..grid.len()).map(|c| fi[c].unwrap_or(background[c])).collect();
    let (glued, glue) = continuous_glue(
        &CP1Map::Sampled(SampledMap::from_values(grid, background)?),
        &CP1Map::Sampled(SampledMap::from_values(grid, on_e)?),
        e_i,
        TUBULAR_RADIUS,
    )?;
    report.glue_min_norm = glue.min_homotopy_norm;
    let values = glued.values().to_vec();
    report.deviation = deviation(&values);
    report.cr_residual = map_cr_residual(&glued, &e_i.interior(), Some(&h_vals));
    Ok(Attempt { values, rational: None, fit: h, report })
}
