use rayon::prelude::*;

use super::poly::{boundary_weights, center_and_scale};
use super::{chordal_sup, refined_points, ApproxReport, CP1Map, Pole, RationalMap};
use crate::linalg::IncrementalLsq;
use crate::planar_sets::{hull_and_h, RasterSet};
use crate::target_cp1::{mat_inv_sl2, CP1Point, ChartComplement, Mat2};
use crate::{Error, Result, C64};

/// Largest degree any fit may use.
pub const MAX_DEGREE: usize = 60;
/// Poles keep this many cells away from the hull of the fitting set.
const POLE_CLEARANCE_CELLS: usize = 2;
const FAR_CANDIDATES: usize = 32;
const MAX_REFINE_EVALS: usize = 2000;
const START_POLES: usize = 40;

#[derive(Clone, Debug)]
pub struct FitOptions {
    pub max_degree: usize,
    pub target_error: f64,
    /// Region where poles are forbidden in addition to the hull of the set.
    pub pole_exclusion: Option<RasterSet>,
    /// Move each inserted pole by compass search on the residual.
    pub refine_poles: bool,
}

impl FitOptions {
    pub fn new(max_degree: usize, target_error: f64) -> Self {
        Self { max_degree, target_error, pole_exclusion: None, refine_poles: true }
    }

    pub fn with_pole_exclusion(mut self, region: RasterSet) -> Self {
        self.pole_exclusion = Some(region);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(super) enum Term {
    Power(usize),
    Pole { at: C64, scale: f64 },
}

pub(super) fn chordal(u: C64, v: C64) -> f64 {
    (u - v).norm() / ((1.0 + u.norm_sqr()).sqrt() * (1.0 + v.norm_sqr()).sqrt())
}

/// Frame `R` (a unitary rotation) for the fit: the chart at 0 or at infinity
/// when the values fit in its unit disc, otherwise the candidate minimizing
/// `max |chart0(R y)|`.
fn choose_frame(values: &[CP1Point]) -> Option<(Mat2, Vec<C64>)> {
    let mut centers = vec![
        CP1Point::zero(),
        CP1Point::infinity(),
        CP1Point::from_chart(C64::new(1.0, 0.0)),
        CP1Point::from_chart(C64::new(-1.0, 0.0)),
        CP1Point::from_chart(C64::new(0.0, 1.0)),
        CP1Point::from_chart(C64::new(0.0, -1.0)),
    ];
    let mut mean = [0.0; 3];
    for v in values {
        let s = v.to_sphere();
        for k in 0..3 {
            mean[k] += s[k];
        }
    }
    if let Some(p) = CP1Point::from_sphere(mean) {
        centers.push(p);
    }
    let scored: Vec<(f64, Mat2, Vec<C64>)> = centers
        .iter()
        .map(|p| {
            let frame = *ChartComplement::centered_at(p).frame();
            let us: Vec<C64> = values.iter().map(|y| y.act(&frame).chart0()).collect();
            let worst = us.iter().map(|u| u.norm()).fold(0.0, f64::max);
            (worst, frame, us)
        })
        .filter(|(w, _, _)| w.is_finite())
        .collect();
    // the standard charts keep the poles of f where they are
    if let Some(i) = scored.iter().take(2).position(|s| s.0 <= 1.0) {
        let (_, f, us) = scored.into_iter().nth(i).unwrap();
        return Some((f, us));
    }
    scored.into_iter().min_by(|a, b| a.0.total_cmp(&b.0)).map(|(_, f, us)| (f, us))
}

/// Residual a candidate term would leave.
pub(super) type Score<'a> = dyn Fn(&Term) -> f64 + Sync + 'a;

pub(super) struct Problem<'a> {
    pub(super) zs: &'a [C64],
    pub(super) center: C64,
    pub(super) scale: f64,
    pub(super) excluded: RasterSet,
    pub(super) h: f64,
}

impl Problem<'_> {
    pub(super) fn column(&self, t: &Term) -> Vec<C64> {
        self.column_at(t, self.zs)
    }

    pub(super) fn column_at(&self, t: &Term, zs: &[C64]) -> Vec<C64> {
        match *t {
            Term::Power(k) => zs.iter().map(|z| ((z - self.center) / self.scale).powu(k as u32)).collect(),
            Term::Pole { at, scale } => zs.iter().map(|z| scale / (z - at)).collect(),
        }
    }

    fn distance_to_set(&self, p: C64) -> f64 {
        self.zs.iter().map(|z| (z - p).norm()).fold(f64::INFINITY, f64::min)
    }

    /// Pole term at `p` if `p` is admissible.
    pub(super) fn pole(&self, p: C64, used: &[C64]) -> Option<Term> {
        if let Some(c) = self.excluded.grid().cell_of(p) {
            if self.excluded.contains(c) {
                return None;
            }
        }
        if used.iter().any(|q| (q - p).norm() < 0.5 * self.h) {
            return None;
        }
        let d = self.distance_to_set(p);
        (d >= POLE_CLEARANCE_CELLS as f64 * self.h).then_some(Term::Pole { at: p, scale: d })
    }

    /// Compass search for the pole position minimizing the trial residual.
    fn refine(&self, score: &Score<'_>, start: Term, used: &[C64]) -> (Term, f64) {
        let mut best = start;
        let mut best_r = score(&start);
        let Term::Pole { at, .. } = start else { return (best, best_r) };
        let mut at = at;
        let mut step = 2.0 * self.h;
        let floor = 1e-10 * self.scale;
        let mut evals = 1;
        let dirs: Vec<C64> = (0..8).map(|k| C64::from_polar(1.0, k as f64 * std::f64::consts::FRAC_PI_4)).collect();
        while step > floor && evals < MAX_REFINE_EVALS {
            let trials: Vec<(Term, f64)> = dirs
                .par_iter()
                .filter_map(|d| self.pole(at + d * step, used))
                .map(|t| {
                    let r = score(&t);
                    (t, r)
                })
                .collect();
            evals += 8;
            match trials.into_iter().min_by(|a, b| a.1.total_cmp(&b.1)) {
                Some((t, r)) if r < best_r => {
                    best = t;
                    best_r = r;
                    if let Term::Pole { at: p, .. } = t {
                        at = p;
                    }
                    step = (2.0 * step).min(4.0 * self.h);
                }
                _ => step *= 0.5,
            }
        }
        (best, best_r)
    }
}

/// Spread of admissible starting positions around `zw`, sparser with
/// distance, plus the far ring; the best two by trial residual
/// are refined and the better result kept.
pub(super) fn best_pole(
    prob: &Problem<'_>,
    score: &Score<'_>,
    candidates: &[C64],
    zw: C64,
    used: &[C64],
    refine: bool,
) -> Option<(Term, f64)> {
    let mut near: Vec<(f64, C64)> = candidates.iter().map(|&p| ((p - zw).norm(), p)).collect();
    near.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut starts: Vec<Term> = Vec::new();
    let mut picked: Vec<C64> = Vec::new();
    for (d, p) in near {
        if starts.len() >= START_POLES {
            break;
        }
        // log-polar spread: spacing grows with the distance from zw
        let spacing = (2.0 * prob.h).max(0.3 * d);
        if picked.iter().any(|q| (q - p).norm() < spacing) {
            continue;
        }
        if let Some(t) = prob.pole(p, used) {
            picked.push(p);
            starts.push(t);
        }
    }
    let far = 1.5 * prob.excluded.grid().covering_radius();
    starts.extend((0..FAR_CANDIDATES).filter_map(|k| {
        prob.pole(C64::from_polar(far, 2.0 * std::f64::consts::PI * k as f64 / FAR_CANDIDATES as f64), used)
    }));
    let mut scored: Vec<(Term, f64)> =
        starts.par_iter().map(|t| (*t, score(t))).collect();
    scored.sort_by(|a, b| a.1.total_cmp(&b.1));
    if !refine {
        return scored.into_iter().next();
    }
    scored
        .iter()
        .take(2)
        .map(|(t, _)| prob.refine(score, *t, used))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

/// Greedy rational approximation of a `CP^1`-valued map on `S`.
///
/// The values are rotated into the frame that keeps them closest to 0, and
/// the scalar `u` is fitted by weighted least squares on a growing basis:
/// at each step either the next power of `(z - c)/s` or a simple pole next to
/// the worst sample (outside the hull of `S`) is added, whichever lowers the
/// residual more. The best fit seen is returned; `target_reached` in the
/// report says whether it meets `target_error`.
pub fn rational_approx_cp1(f: &CP1Map, s: &RasterSet, opts: &FitOptions) -> Result<(RationalMap, ApproxReport)> {
    if s.is_empty() {
        return Err(Error::EmptySet);
    }
    if opts.max_degree > MAX_DEGREE {
        return Err(Error::Precondition(format!("max degree {} exceeds the cap {MAX_DEGREE}", opts.max_degree)));
    }
    let grid = *s.grid();
    let h = grid.spacing();
    let cells = s.cell_list();
    let zs: Vec<C64> = cells.iter().map(|&c| grid.center(c)).collect();
    let ys = f.eval_cells(&grid, &cells);
    let (frame, us) = choose_frame(&ys)
        .ok_or_else(|| Error::Precondition("the values of f leave no frame with bounded coordinates".into()))?;
    let post = mat_inv_sl2(&frame);
    let weights: Vec<f64> = boundary_weights(s, &cells)
        .iter()
        .zip(&us)
        .map(|(w, u)| w / (1.0 + u.norm_sqr()).powi(2))
        .collect();
    let (center, scale) = center_and_scale(s, &cells);
    let mut excluded = hull_and_h(s).0;
    if let Some(x) = &opts.pole_exclusion {
        excluded = excluded.union(x);
    }
    let excluded = excluded.dilate(POLE_CLEARANCE_CELLS);
    let candidates: Vec<C64> = (0..grid.len()).filter(|&c| !excluded.contains(c)).map(|c| grid.center(c)).collect();
    let prob = Problem { zs: &zs, center, scale, excluded, h };

    let mut lsq = IncrementalLsq::new(&weights, &us);
    let mut terms = vec![Term::Power(0)];
    let mut columns = vec![prob.column(&terms[0])];
    lsq.push(&columns[0]);
    let mut used: Vec<C64> = Vec::new();
    let mut next_power = 1;

    let fit_errors = |lsq: &IncrementalLsq, columns: &[Vec<C64>]| -> (Vec<C64>, Vec<f64>) {
        let coef = lsq.solve();
        let errs: Vec<f64> = (0..us.len())
            .into_par_iter()
            .map(|i| {
                let v: C64 = columns.iter().zip(&coef).map(|(col, c)| col[i] * c).sum();
                chordal(v, us[i])
            })
            .collect();
        (coef, errs)
    };
    let (coef, mut errs) = fit_errors(&lsq, &columns);
    let mut best_err = errs.iter().copied().fold(0.0, f64::max);
    let mut best = (1, coef);
    let mut history = vec![best_err];

    while terms.len() <= opts.max_degree && best_err >= opts.target_error {
        let worst = (0..errs.len()).max_by(|&a, &b| errs[a].total_cmp(&errs[b])).unwrap();
        let zw = zs[worst];
        let power = Term::Power(next_power);
        let power_col = prob.column(&power);
        let power_r = lsq.trial_residual(&power_col);
        let score = |t: &Term| lsq.trial_residual(&prob.column(t));
        let pole = best_pole(&prob, &score, &candidates, zw, &used, opts.refine_poles);
        let mut order = vec![(power, power_r)];
        if let Some(p) = pole {
            order.push(p);
        }
        order.sort_by(|a, b| a.1.total_cmp(&b.1));
        let mut added = false;
        for (t, _) in order {
            let col = if t == power { power_col.clone() } else { prob.column(&t) };
            if lsq.push(&col) {
                match t {
                    Term::Power(_) => next_power += 1,
                    Term::Pole { at, .. } => used.push(at),
                }
                terms.push(t);
                columns.push(col);
                added = true;
                break;
            }
            // a dependent column still occupies a slot in the solver
            terms.push(t);
            columns.push(col);
            if let Term::Power(_) = t {
                next_power += 1;
            }
        }
        if !added {
            break;
        }
        let (coef, e) = fit_errors(&lsq, &columns);
        errs = e;
        let sup = errs.iter().copied().fold(0.0, f64::max);
        if sup < best_err {
            best_err = sup;
            best = (terms.len(), coef);
        }
        history.push(best_err);
    }

    let (n_terms, coef) = best;
    let mut poly = vec![C64::new(0.0, 0.0); next_power];
    let mut poles = Vec::new();
    for (t, c) in terms[..n_terms].iter().zip(&coef) {
        if *c == C64::new(0.0, 0.0) {
            continue;
        }
        match *t {
            Term::Power(k) => poly[k] += c,
            Term::Pole { at, scale } => poles.push(Pole::new(at, scale, *c)),
        }
    }
    while poly.len() > 1 && *poly.last().unwrap() == C64::new(0.0, 0.0) {
        poly.pop();
    }
    let map = RationalMap::from_fractions(post, center, scale, poly, poles);

    let sup_error = match f.continuous() {
        Some(g) => {
            let pts = refined_points(&grid, &cells);
            pts.par_iter().map(|&z| crate::target_cp1::dist_cp1(&g(z), &map.eval(z))).reduce(|| 0.0, f64::max)
        }
        None => {
            let fitted: Vec<CP1Point> = zs.par_iter().map(|&z| map.eval(z)).collect();
            chordal_sup(&fitted, &ys)
        }
    };
    let report = ApproxReport {
        sup_error,
        degree: map.degree(),
        method: "greedy-rational",
        target_reached: sup_error < opts.target_error,
        history,
    };
    Ok((map, report))
}
