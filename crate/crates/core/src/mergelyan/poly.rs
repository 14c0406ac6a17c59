use rayon::prelude::*;

use super::{refined_points, ApproxReport, MAX_DEGREE};
use crate::cauchy_green::{cr_residual, dbar_tolerance};
use crate::linalg::IncrementalLsq;
use crate::planar_sets::{holes, RasterSet};
use crate::{Error, Result, C64};

/// Weight multiplier for boundary samples in least-squares fits.
pub(crate) const BOUNDARY_WEIGHT: f64 = 4.0;

/// `p(z) = sum_k c_k ((z - center) / scale)^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    center: C64,
    scale: f64,
    coeffs: Vec<C64>,
}

impl Polynomial {
    pub fn new(center: C64, scale: f64, coeffs: Vec<C64>) -> Self {
        assert!(scale > 0.0, "scale must be positive");
        Self { center, scale, coeffs }
    }

    pub fn center(&self) -> C64 {
        self.center
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Coefficients in the scaled variable.
    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|c| *c != C64::new(0.0, 0.0)).unwrap_or(0)
    }

    pub fn eval(&self, z: C64) -> C64 {
        let w = (z - self.center) / self.scale;
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * w + c)
    }

    /// Coefficients in `z`, constant term first.
    pub fn to_monomial(&self) -> Vec<C64> {
        shift_scale(&self.coeffs, self.center, self.scale)
    }
}

/// Expand `sum_k c_k ((z - center) / scale)^k` in powers of `z`.
pub(crate) fn shift_scale(coeffs: &[C64], center: C64, scale: f64) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); coeffs.len().max(1)];
    // basis = ((z - center) / scale)^k in monomial form
    let mut basis = vec![C64::new(1.0, 0.0)];
    let lin = [-center / scale, C64::new(1.0 / scale, 0.0)];
    for c in coeffs {
        for (o, b) in out.iter_mut().zip(&basis) {
            *o += c * b;
        }
        let mut next = vec![C64::new(0.0, 0.0); basis.len() + 1];
        for (i, b) in basis.iter().enumerate() {
            next[i] += b * lin[0];
            next[i + 1] += b * lin[1];
        }
        basis = next;
    }
    out
}

/// Center and radius of the smallest axis-aligned box around the cells.
pub(crate) fn center_and_scale(k: &RasterSet, cells: &[usize]) -> (C64, f64) {
    let g = k.grid();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &c in cells {
        let z = g.center(c);
        x0 = x0.min(z.re);
        x1 = x1.max(z.re);
        y0 = y0.min(z.im);
        y1 = y1.max(z.im);
    }
    let center = C64::new(0.5 * (x0 + x1), 0.5 * (y0 + y1));
    let scale = cells.iter().map(|&c| (g.center(c) - center).norm()).fold(g.spacing(), f64::max);
    (center, scale)
}

/// Least-squares weights: 1 inside, [`BOUNDARY_WEIGHT`] on boundary cells.
pub(crate) fn boundary_weights(k: &RasterSet, cells: &[usize]) -> Vec<f64> {
    let mut on_boundary = vec![false; k.grid().len()];
    for c in k.boundary_cells() {
        on_boundary[c] = true;
    }
    cells.iter().map(|&c| if on_boundary[c] { BOUNDARY_WEIGHT } else { 1.0 }).collect()
}

/// Weighted least-squares polynomial of the given degree on a hole-free `K`,
/// with the sup error measured on a refinement of `K`.
pub fn poly_approx(
    f: impl Fn(C64) -> C64 + Sync,
    k: &RasterSet,
    degree: usize,
) -> Result<(Polynomial, ApproxReport)> {
    if degree > MAX_DEGREE {
        return Err(Error::Precondition(format!("degree {degree} exceeds the cap {MAX_DEGREE}")));
    }
    if k.is_empty() {
        return Err(Error::EmptySet);
    }
    if !holes(k).is_empty() {
        return Err(Error::SetHasHoles);
    }
    let grid = *k.grid();
    let cells = k.cell_list();
    let values: Vec<C64> = cells.par_iter().map(|&c| f(grid.center(c))).collect();

    let mut field = vec![C64::new(0.0, 0.0); grid.len()];
    for (&c, v) in cells.iter().zip(&values) {
        field[c] = *v;
    }
    let sup = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let cr = cr_residual(&grid, &field, &k.interior().interior());
    let tol = dbar_tolerance(grid.spacing(), sup);
    if cr > tol {
        return Err(Error::Precondition(format!(
            "f is not holomorphic on the interior of K: CR residual {cr:.3e} > {tol:.3e}"
        )));
    }

    let (center, scale) = center_and_scale(k, &cells);
    let ws: Vec<C64> = cells.iter().map(|&c| (grid.center(c) - center) / scale).collect();
    let mut lsq = IncrementalLsq::new(&boundary_weights(k, &cells), &values);
    let mut column = vec![C64::new(1.0, 0.0); cells.len()];
    let mut history = Vec::with_capacity(degree + 1);
    for d in 0..=degree {
        if d > 0 {
            for (c, w) in column.iter_mut().zip(&ws) {
                *c *= w;
            }
        }
        lsq.push(&column);
        history.push(lsq.residual_norm());
    }
    let p = Polynomial::new(center, scale, lsq.solve());

    let pts = refined_points(&grid, &cells);
    let sup_error = pts.par_iter().map(|&z| (p.eval(z) - f(z)).norm()).reduce(|| 0.0, f64::max);
    let report = ApproxReport { sup_error, degree, method: "polynomial-lsq", target_reached: true, history };
    Ok((p, report))
}
