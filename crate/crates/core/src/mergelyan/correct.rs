use rayon::prelude::*;

use super::fit::{best_pole, Problem, Term};
use super::poly::{boundary_weights, center_and_scale};
use super::{chordal_sup, refined_points, ApproxReport, CP1Map, FitOptions, Pole, RationalMap, MAX_DEGREE};
use crate::linalg::IncrementalLsq;
use crate::planar_sets::{hull_and_h, RasterSet};
use crate::target_cp1::{dist_cp1, mat_inv_sl2, CP1Point};
use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);
/// Reweighting rounds on the final basis.
const REWEIGHT_ROUNDS: usize = 3;
const POLE_CLEARANCE_CELLS: usize = 2;

/// Coefficients of `p(alpha + beta w)` from those of `p(v)`.
fn affine_compose(p: &[C64], alpha: C64, beta: C64) -> Vec<C64> {
    let mut out = vec![ZERO];
    for c in p.iter().rev() {
        let mut next = vec![ZERO; out.len() + 1];
        for (k, x) in out.iter().enumerate() {
            next[k] += x * alpha;
            next[k + 1] += x * beta;
        }
        next[0] += c;
        out = next;
    }
    while out.len() > 1 && *out.last().unwrap() == ZERO {
        out.pop();
    }
    out
}

struct Rows<'a> {
    prob: &'a Problem<'a>,
    /// Target in the base frame, unit homogeneous coordinates.
    ab: &'a [(C64, C64)],
    /// Base pair at the samples.
    base: &'a [(C64, C64)],
}

impl Rows<'_> {
    /// Top and bottom columns of one basis term, scaled per row.
    fn columns(&self, t: &Term, scale: &[f64]) -> (Vec<C64>, Vec<C64>) {
        let phi = self.prob.column(t);
        let top = phi.iter().zip(self.ab).zip(scale).map(|((f, (_, b)), s)| f * b * s).collect();
        let bottom = phi.iter().zip(self.ab).zip(scale).map(|((f, (a, _)), s)| -f * a * s).collect();
        (top, bottom)
    }

    /// `-(T0 b - B0 a)`, scaled per row.
    fn rhs(&self, scale: &[f64]) -> Vec<C64> {
        self.base.iter().zip(self.ab).zip(scale).map(|(((t, b0), (a, b)), s)| -(t * b - b0 * a) * s).collect()
    }

    /// Chordal errors of `[T0 + p : B0 + q]`.
    fn errors(&self, terms: &[Term], coef: &[C64]) -> (Vec<f64>, Vec<f64>) {
        let phis: Vec<Vec<C64>> = terms.iter().map(|t| self.prob.column(t)).collect();
        (0..self.ab.len())
            .into_par_iter()
            .map(|i| {
                let (mut t, mut b) = self.base[i];
                for (j, phi) in phis.iter().enumerate() {
                    t += coef[2 * j] * phi[i];
                    b += coef[2 * j + 1] * phi[i];
                }
                let n = (t.norm_sqr() + b.norm_sqr()).sqrt();
                let (a0, b0) = self.ab[i];
                ((t * b0 - b * a0).norm() / n, n)
            })
            .unzip()
    }
}

/// Greedy correction of a rational map towards `f` on `S`.
///
/// With `base = post · [T0 : B0]`, the fit is `post · [T0 + p : B0 + q]`,
/// where `p` and `q` share one basis: the powers and poles of the base,
/// then powers of `(z - c)/s` and new simple poles added greedily. The
/// coefficients solve the linearized problem `(T0 + p) b - (B0 + q) a ≈ 0`
/// for `f = [a : b]` in the base frame, which stays well posed when `f`
/// passes through infinity there. A few reweighting rounds on the final
/// basis move the residual towards the chordal one.
pub fn rational_correct(
    base: &RationalMap,
    f: &CP1Map,
    s: &RasterSet,
    opts: &FitOptions,
) -> Result<(RationalMap, ApproxReport)> {
    if s.is_empty() {
        return Err(Error::EmptySet);
    }
    if opts.max_degree > MAX_DEGREE {
        return Err(Error::Precondition(format!("max degree {} exceeds the cap {MAX_DEGREE}", opts.max_degree)));
    }
    let grid = *s.grid();
    let h = grid.spacing();
    let (center, scale) = center_and_scale(s, &s.cell_list());
    let inv = mat_inv_sl2(base.post());
    let ys_all = f.eval_cells(&grid, &s.cell_list());
    let mut cells = Vec::new();
    let mut ab = Vec::new();
    let mut base_vals = Vec::new();
    for (&c, y) in s.cell_list().iter().zip(&ys_all) {
        let z = grid.center(c);
        if let Some(p) = base.frame_pair(z) {
            cells.push(c);
            ab.push(y.act(&inv).coords());
            base_vals.push(p);
        }
    }
    if cells.is_empty() {
        return Err(Error::Precondition("the base map has a pole at every sample".into()));
    }
    let zs: Vec<C64> = cells.iter().map(|&c| grid.center(c)).collect();
    let sub = RasterSet::from_mask(grid, {
        let mut m = vec![false; grid.len()];
        for &c in &cells {
            m[c] = true;
        }
        m
    });
    let weights = boundary_weights(&sub, &cells);

    let mut excluded = hull_and_h(s).0;
    if let Some(x) = &opts.pole_exclusion {
        excluded = excluded.union(x);
    }
    let excluded = excluded.dilate(POLE_CLEARANCE_CELLS);
    let candidates: Vec<C64> = (0..grid.len()).filter(|&c| !excluded.contains(c)).map(|c| grid.center(c)).collect();
    let prob = Problem { zs: &zs, center, scale, excluded, h };
    let rows = Rows { prob: &prob, ab: &ab, base: &base_vals };

    // the base basis: its powers (rewritten in the new variable) and poles
    let alpha = (center - base.center()) / base.scale();
    let beta = C64::new(scale / base.scale(), 0.0);
    let top0 = affine_compose(base.top(), alpha, beta);
    let bottom0 = affine_compose(base.bottom(), alpha, beta);
    let base_powers = top0.len().max(bottom0.len());
    let mut terms: Vec<Term> = (0..base_powers).map(Term::Power).collect();
    terms.extend(base.pole_terms().iter().map(|p| Term::Pole { at: p.at, scale: p.scale }));
    let mut used: Vec<C64> = base.pole_terms().iter().map(|p| p.at).collect();
    let mut next_power = base_powers;
    let degree_of = |next_power: usize, poles: usize| next_power.saturating_sub(1) + poles;

    let unit = vec![1.0; zs.len()];
    let mut lsq = IncrementalLsq::new(&weights, &rows.rhs(&unit));
    for t in &terms {
        let (a, b) = rows.columns(t, &unit);
        lsq.push(&a);
        lsq.push(&b);
    }
    let (mut errs, _) = rows.errors(&terms, &lsq.solve());
    let zero_coef = vec![ZERO; 2 * terms.len()];
    let (base_errs, _) = rows.errors(&terms, &zero_coef);
    let base_err = base_errs.iter().copied().fold(0.0, f64::max);
    let mut best_err = errs.iter().copied().fold(0.0, f64::max);
    let mut best = (terms.len(), lsq.solve());
    if base_err <= best_err {
        best_err = base_err;
        best = (terms.len(), zero_coef);
    }
    let mut history = vec![best_err];

    while degree_of(next_power, used.len()) < opts.max_degree && best_err >= opts.target_error {
        let worst = (0..errs.len()).max_by(|&a, &b| errs[a].total_cmp(&errs[b])).unwrap();
        let score = |t: &Term| {
            let (a, b) = rows.columns(t, &unit);
            lsq.trial_residual(&a).min(lsq.trial_residual(&b))
        };
        let power = Term::Power(next_power);
        let mut order = vec![(power, score(&power))];
        if let Some(p) = best_pole(&prob, &score, &candidates, zs[worst], &used, opts.refine_poles) {
            order.push(p);
        }
        order.sort_by(|a, b| a.1.total_cmp(&b.1));
        let t = order[0].0;
        match t {
            Term::Power(_) => next_power += 1,
            Term::Pole { at, .. } => used.push(at),
        }
        let (a, b) = rows.columns(&t, &unit);
        let kept = lsq.push(&a) | lsq.push(&b);
        terms.push(t);
        if !kept && matches!(t, Term::Pole { .. }) {
            break;
        }
        let coef = lsq.solve();
        let (e, _) = rows.errors(&terms, &coef);
        errs = e;
        let sup = errs.iter().copied().fold(0.0, f64::max);
        if sup < best_err {
            best_err = sup;
            best = (terms.len(), coef);
        }
        history.push(best_err);
    }

    // reweight towards the chordal residual on the chosen basis
    let (n_terms, mut coef) = best;
    let basis = &terms[..n_terms];
    for _ in 0..REWEIGHT_ROUNDS {
        let (_, norms) = rows.errors(basis, &coef);
        let scale_rows: Vec<f64> = norms
            .iter()
            .zip(&base_vals)
            .map(|(n, (t, b))| (t.norm_sqr() + b.norm_sqr()).sqrt() / n.max(1e-300))
            .map(|r| if r.is_finite() { r } else { 1.0 })
            .collect();
        let mut lsq = IncrementalLsq::new(&weights, &rows.rhs(&scale_rows));
        for t in basis {
            let (a, b) = rows.columns(t, &scale_rows);
            lsq.push(&a);
            lsq.push(&b);
        }
        let c = lsq.solve();
        let (e, _) = rows.errors(basis, &c);
        let sup = e.iter().copied().fold(0.0, f64::max);
        if sup < best_err {
            best_err = sup;
            coef = c;
            history.push(best_err);
        } else {
            break;
        }
    }

    let mut top = top0;
    let mut bottom = bottom0;
    let mut poles: Vec<Pole> = Vec::new();
    for (j, t) in basis.iter().enumerate() {
        let (x, y) = (coef[2 * j], coef[2 * j + 1]);
        match *t {
            Term::Power(k) => {
                if top.len() <= k {
                    top.resize(k + 1, ZERO);
                }
                if bottom.len() <= k {
                    bottom.resize(k + 1, ZERO);
                }
                top[k] += x;
                bottom[k] += y;
            }
            Term::Pole { at: p, scale: ps } => {
                match base.pole_terms().iter().find(|q| q.at == p) {
                    // base poles are expressed with their own scale
                    Some(q) => poles.push(Pole {
                        at: p,
                        scale: q.scale,
                        coeff: q.coeff + x * ps / q.scale,
                        den_coeff: q.den_coeff + y * ps / q.scale,
                    }),
                    None if x != ZERO || y != ZERO => poles.push(Pole { at: p, scale: ps, coeff: x, den_coeff: y }),
                    None => {}
                }
            }
        }
    }
    let map = RationalMap::from_pair(*base.post(), center, scale, top, bottom, poles);

    let sup_error = match f.continuous() {
        Some(g) => {
            let pts = refined_points(&grid, &s.cell_list());
            pts.par_iter().map(|&z| dist_cp1(&g(z), &map.eval(z))).reduce(|| 0.0, f64::max)
        }
        None => {
            let fitted: Vec<CP1Point> = s.cells().map(|c| map.eval(grid.center(c))).collect();
            chordal_sup(&fitted, &ys_all)
        }
    };
    let report = ApproxReport {
        sup_error,
        degree: map.degree(),
        method: "greedy-correction",
        target_reached: sup_error < opts.target_error,
        history,
    };
    Ok((map, report))
}
