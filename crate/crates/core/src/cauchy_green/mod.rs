//! Compactly supported Cauchy-Green transform
//! `T_K g(z) = (1/π) ∫_K g(ζ) / (z - ζ) dA(ζ)` and smooth cutoffs.
//!
//! `∂̄ = (∂x + i ∂y) / 2`, so that `∂̄ T_K g = g` on `K`.

mod cutoff;
mod kernel;

pub use cutoff::{build_cutoff, CutoffFunction, CUTOFF_MIN_SEPARATION_CELLS};
pub use kernel::{cell_kernel, exact_unit_kernel, KernelTable, EXACT_RADIUS_CELLS};

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;

use crate::planar_sets::{GridSpec, RasterSet};
use crate::{Error, Result, C64};

/// Complex samples on the cells of a support set.
#[derive(Clone, Debug)]
pub struct ScalarField {
    support: RasterSet,
    cells: Vec<usize>,
    values: Vec<C64>,
    sup_norm: f64,
}

impl ScalarField {
    /// Field with values listed in the order of `support.cells()`.
    pub fn new(support: RasterSet, values: Vec<C64>) -> Result<Self> {
        let cells = support.cell_list();
        if cells.len() != values.len() {
            return Err(Error::Precondition(format!(
                "{} values for a support of {} cells",
                values.len(),
                cells.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("field values must be finite".into()));
        }
        let sup_norm = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        Ok(Self { support, cells, values, sup_norm })
    }

    /// Samples `f` at the cell centers of `support`.
    pub fn from_fn(support: RasterSet, f: impl Fn(C64) -> C64) -> Result<Self> {
        let grid = *support.grid();
        let values = support.cells().map(|i| f(grid.center(i))).collect();
        Self::new(support, values)
    }

    pub fn zeros(support: RasterSet) -> Self {
        let n = support.count();
        Self::new(support, vec![C64::new(0.0, 0.0); n]).expect("zeros are finite")
    }

    pub fn support(&self) -> &RasterSet {
        &self.support
    }

    pub fn grid(&self) -> &GridSpec {
        self.support.grid()
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// Values spread over the whole grid, zero off the support.
    pub fn to_grid(&self) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.grid().len()];
        for (&c, &v) in self.cells.iter().zip(&self.values) {
            out[c] = v;
        }
        out
    }

    /// Pointwise map keeping the support.
    pub fn map(&self, f: impl Fn(usize, C64) -> C64) -> Result<Self> {
        let values = self.cells.iter().zip(&self.values).map(|(&c, &v)| f(c, v)).collect();
        Self::new(self.support.clone(), values)
    }
}

/// Polydisc `{w : |w_k| < radii[k]}` in `C^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polydisc {
    pub radii: Vec<f64>,
}

impl Polydisc {
    pub fn new(radii: Vec<f64>) -> Self {
        Self { radii }
    }

    pub fn uniform(dim: usize, radius: f64) -> Self {
        Self { radii: vec![radius; dim] }
    }

    pub fn dim(&self) -> usize {
        self.radii.len()
    }

    /// Smallest axis radius.
    pub fn min_radius(&self) -> f64 {
        self.radii.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn check(&self, w: &[C64]) -> Result<()> {
        if w.len() != self.dim() {
            return Err(Error::Precondition(format!("parameter of dimension {} in C^{}", w.len(), self.dim())));
        }
        for (axis, (wk, &r)) in w.iter().zip(&self.radii).enumerate() {
            if !(wk.norm() < r) {
                return Err(Error::OutsideParameterDomain { axis, modulus: wk.norm(), radius: r });
            }
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { radii: self.radii.iter().map(|r| r * s).collect() }
    }
}

type ParamEval = dyn Fn(usize, &[C64]) -> C64 + Send + Sync;

/// Field depending holomorphically on a parameter `w` in a polydisc.
#[derive(Clone)]
pub struct ParamField {
    support: RasterSet,
    domain: Polydisc,
    eval: Arc<ParamEval>,
}

impl std::fmt::Debug for ParamField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ParamField").field("cells", &self.support.count()).field("domain", &self.domain).finish()
    }
}

impl ParamField {
    pub fn new(
        support: RasterSet,
        domain: Polydisc,
        eval: impl Fn(usize, &[C64]) -> C64 + Send + Sync + 'static,
    ) -> Self {
        Self { support, domain, eval: Arc::new(eval) }
    }

    pub fn support(&self) -> &RasterSet {
        &self.support
    }

    pub fn domain(&self) -> &Polydisc {
        &self.domain
    }

    /// Value at a support cell.
    pub fn value(&self, cell: usize, w: &[C64]) -> Result<C64> {
        self.domain.check(w)?;
        Ok((self.eval)(cell, w))
    }

    /// The slice `g(., w)`.
    pub fn slice(&self, w: &[C64]) -> Result<ScalarField> {
        self.domain.check(w)?;
        let values = self.support.cells().map(|c| (self.eval)(c, w)).collect();
        ScalarField::new(self.support.clone(), values)
    }
}

/// `(1/π) Σ_cells g(ζ) ∫_cell dA / (z - ζ)` at an arbitrary point.
pub fn cauchy_transform(g: &ScalarField, z: C64) -> C64 {
    let grid = g.grid();
    let h = grid.spacing();
    let s: C64 = g
        .cells
        .iter()
        .zip(&g.values)
        .map(|(&c, &v)| v * cell_kernel(z - grid.center(c), h))
        .sum();
    s / PI
}

/// Transform of the `w`-slice of a parameter field.
pub fn cauchy_transform_param(g: &ParamField, z: C64, w: &[C64]) -> Result<C64> {
    Ok(cauchy_transform(&g.slice(w)?, z))
}

/// Precomputed transform from a fixed source set to fixed evaluation cells.
#[derive(Clone, Debug)]
pub struct TransformPlan {
    table: Arc<KernelTable>,
    src: Vec<(isize, isize)>,
    dst: Vec<usize>,
}

impl TransformPlan {
    pub fn new(table: Arc<KernelTable>, src: &[usize], dst: &[usize]) -> Self {
        let grid = *table.grid();
        let src = src
            .iter()
            .map(|&c| {
                let (x, y) = grid.coords(c);
                (x as isize, y as isize)
            })
            .collect();
        Self { table, src, dst: dst.to_vec() }
    }

    pub fn dst(&self) -> &[usize] {
        &self.dst
    }

    pub fn src_len(&self) -> usize {
        self.src.len()
    }

    /// Transform several fields on the source cells at once; output `k`
    /// holds `T(fields[k])` on the evaluation cells.
    pub fn apply_many(&self, fields: &[&[C64]]) -> Vec<Vec<C64>> {
        for f in fields {
            assert_eq!(f.len(), self.src.len(), "field does not match the plan source");
        }
        let grid = *self.table.grid();
        let n1 = grid.n() as isize - 1;
        let m = fields.len();
        let per_dst: Vec<Vec<C64>> = self
            .dst
            .par_iter()
            .map(|&d| {
                let (ax, ay) = grid.coords(d);
                let (ax, ay) = (ax as isize, ay as isize);
                let mut acc = vec![C64::new(0.0, 0.0); m];
                let mut last_dy = isize::MIN;
                let mut row: &[C64] = &[];
                for (j, &(bx, by)) in self.src.iter().enumerate() {
                    let dy = ay - by;
                    if dy != last_dy {
                        row = self.table.row(dy);
                        last_dy = dy;
                    }
                    let k = row[(ax - bx + n1) as usize];
                    for (a, f) in acc.iter_mut().zip(fields) {
                        *a += f[j] * k;
                    }
                }
                acc.iter().map(|a| a / PI).collect()
            })
            .collect();
        (0..m).map(|k| per_dst.iter().map(|v| v[k]).collect()).collect()
    }

    pub fn apply(&self, field: &[C64]) -> Vec<C64> {
        self.apply_many(&[field]).pop().expect("one field")
    }
}

/// `T_K g` at the centers of the listed cells.
pub fn cauchy_transform_cells(g: &ScalarField, cells: &[usize]) -> Vec<C64> {
    let table = Arc::new(KernelTable::new(*g.grid()));
    TransformPlan::new(table, g.cells(), cells).apply(g.values())
}

/// Centered-difference `∂̄` of a whole-grid field at an interior cell.
pub fn dbar_at(grid: &GridSpec, field: &[C64], cell: usize) -> Option<C64> {
    let h = grid.spacing();
    let e = grid.offset(cell, 1, 0)?;
    let w = grid.offset(cell, -1, 0)?;
    let n = grid.offset(cell, 0, 1)?;
    let s = grid.offset(cell, 0, -1)?;
    let dx = (field[e] - field[w]) / (2.0 * h);
    let dy = (field[n] - field[s]) / (2.0 * h);
    Some((dx + C64::i() * dy) * 0.5)
}

/// Max over `region` of `|∂̄ T_K g - g|` with centered differences.
pub fn dbar_residual(g: &ScalarField, region: &RasterSet) -> f64 {
    let grid = *g.grid();
    let halo = region.dilate(1);
    let cells = halo.cell_list();
    let t = cauchy_transform_cells(g, &cells);
    let mut full = vec![C64::new(0.0, 0.0); grid.len()];
    for (&c, &v) in cells.iter().zip(&t) {
        full[c] = v;
    }
    let gv = g.to_grid();
    region
        .cells()
        .filter_map(|c| dbar_at(&grid, &full, c).map(|d| (d - gv[c]).norm()))
        .fold(0.0, f64::max)
}

/// Default pass threshold for `∂̄` residuals: `5 h (1 + sup|g|)`.
pub fn dbar_tolerance(h: f64, sup_g: f64) -> f64 {
    5.0 * h * (1.0 + sup_g)
}

/// Largest centered-difference `|∂̄ f|` over `region` for a whole-grid field.
pub fn cr_residual(grid: &GridSpec, field: &[C64], region: &RasterSet) -> f64 {
    region.cells().filter_map(|c| dbar_at(grid, field, c).map(|d| d.norm())).fold(0.0, f64::max)
}

/// Observed `sup |T_K g|` against the working bound `sqrt(Area(K)/π) sup|g|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupBound {
    pub observed: f64,
    pub bound: f64,
}

impl SupBound {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.observed <= self.bound * (1.0 + tolerance)
    }
}

/// `sup |T_K g|` over the grid. `T_K g` is holomorphic off `K` and vanishes at
/// infinity, so the supremum is attained on `K` or next to it; the search is
/// restricted to a two-cell dilation of the support.
pub fn sup_bound_check(g: &ScalarField) -> SupBound {
    let bound = (g.support().area() / PI).sqrt() * g.sup_norm();
    if g.sup_norm() == 0.0 {
        return SupBound { observed: 0.0, bound };
    }
    let cells = g.support().dilate(2).cell_list();
    let observed = cauchy_transform_cells(g, &cells).iter().map(|v| v.norm()).fold(0.0, f64::max);
    SupBound { observed, bound }
}

/// `max_k |∂̄_{w_k} f(w)|` by centered differences of step `eps` in each axis.
pub fn cr_residual_param(f: impl Fn(&[C64]) -> C64, w: &[C64], eps: f64) -> f64 {
    let mut worst: f64 = 0.0;
    let mut p = w.to_vec();
    for k in 0..w.len() {
        let mut d = |delta: C64| {
            p[k] = w[k] + delta;
            let v = f(&p);
            p[k] = w[k];
            v
        };
        let dx = (d(C64::new(eps, 0.0)) - d(C64::new(-eps, 0.0))) / (2.0 * eps);
        let dy = (d(C64::new(0.0, eps)) - d(C64::new(0.0, -eps))) / (2.0 * eps);
        worst = worst.max(((dx + C64::i() * dy) * 0.5).norm());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc(h: f64, r: f64) -> (GridSpec, RasterSet) {
        let g = GridSpec::new(2.0, h).unwrap();
        (g, RasterSet::centered_disc(g, r))
    }

    fn oracle(z: C64) -> C64 {
        if z.norm() <= 1.0 {
            z.conj()
        } else {
            1.0 / z
        }
    }

    #[test]
    fn unit_disc_examples() {
        let (_, k) = disc(0.02, 1.0);
        let g = ScalarField::from_fn(k, |_| C64::new(1.0, 0.0)).unwrap();
        let z = C64::new(0.3, 0.4);
        assert!((cauchy_transform(&g, z) - oracle(z)).norm() < 0.02);
        let z = C64::new(2.0, 0.0);
        assert!((cauchy_transform(&g, z) - 0.5).norm() < 0.01);
        let zero = ScalarField::zeros(g.support().clone());
        assert_eq!(cauchy_transform(&zero, z), C64::new(0.0, 0.0));
    }

    #[test]
    fn on_grid_plan_agrees_with_pointwise() {
        let (grid, k) = disc(0.1, 1.0);
        let g = ScalarField::from_fn(k, |z| z * z + 1.0).unwrap();
        let cells: Vec<usize> = (0..grid.len()).step_by(37).collect();
        let t = cauchy_transform_cells(&g, &cells);
        for (&c, &v) in cells.iter().zip(&t) {
            assert!((v - cauchy_transform(&g, grid.center(c))).norm() < 1e-12);
        }
    }

    #[test]
    fn linearity_and_decay() {
        let (grid, k) = disc(0.1, 1.0);
        let g1 = ScalarField::from_fn(k.clone(), |z| z).unwrap();
        let g2 = ScalarField::from_fn(k.clone(), |z| (z * 0.5).exp()).unwrap();
        let (a, b) = (C64::new(0.3, -1.0), C64::new(2.0, 0.5));
        let comb = ScalarField::new(
            k.clone(),
            g1.values().iter().zip(g2.values()).map(|(x, y)| a * x + b * y).collect(),
        )
        .unwrap();
        let cells: Vec<usize> = (0..grid.len()).step_by(11).collect();
        let (t1, t2, tc) = (
            cauchy_transform_cells(&g1, &cells),
            cauchy_transform_cells(&g2, &cells),
            cauchy_transform_cells(&comb, &cells),
        );
        for i in 0..cells.len() {
            assert!((tc[i] - (a * t1[i] + b * t2[i])).norm() < 1e-12);
        }
        let far = k.dilate(3);
        for (i, &c) in cells.iter().enumerate() {
            if far.contains(c) {
                continue;
            }
            let d = k.distance_to(grid.center(c));
            assert!(t2[i].norm() <= k.area() / PI * g2.sup_norm() / d);
        }
    }

    #[test]
    fn holomorphic_off_support() {
        let (grid, k) = disc(0.05, 1.0);
        let g = ScalarField::from_fn(k.clone(), |z| z.conj() + 2.0).unwrap();
        let t = g.support().dilate(6).cell_list();
        let vals = cauchy_transform_cells(&g, &t);
        let mut full = vec![C64::new(0.0, 0.0); grid.len()];
        for (&c, &v) in t.iter().zip(&vals) {
            full[c] = v;
        }
        let region = k.dilate(4).difference(&k.dilate(2));
        assert!(cr_residual(&grid, &full, &region) < 5.0 * 0.05);
    }

    #[test]
    fn sup_bound_examples() {
        let (_, k) = disc(0.05, 1.0);
        let g = ScalarField::from_fn(k.clone(), |_| C64::new(1.0, 0.0)).unwrap();
        let b = sup_bound_check(&g);
        assert!((b.bound - 1.0).abs() < 0.02);
        assert!((b.observed - 1.0).abs() < 0.05);
        assert!(b.passes(0.05));
        let z = sup_bound_check(&ScalarField::zeros(k));
        assert_eq!((z.observed, z.bound), (0.0, 0.0));
        let g = GridSpec::new(3.0, 0.1).unwrap();
        let k2 = RasterSet::centered_disc(g, 2.0);
        let b = sup_bound_check(&ScalarField::from_fn(k2, |_| C64::new(1.0, 0.0)).unwrap());
        assert!((b.bound - 2.0).abs() < 0.05 && (b.observed - 2.0).abs() < 0.1, "{b:?}");
    }

    #[test]
    fn param_transform_is_holomorphic_in_w() {
        let (_, k) = disc(0.1, 1.0);
        let f = ParamField::new(k, Polydisc::uniform(1, 1.0), |_, w| w[0] * w[0]);
        let z = C64::new(0.2, 0.1);
        let w = [C64::new(0.3, -0.2)];
        let v = cauchy_transform_param(&f, z, &w).unwrap();
        let one = cauchy_transform_param(&f, z, &[C64::new(1.0 - 1e-12, 0.0)]).unwrap();
        assert!((v - one * w[0] * w[0]).norm() < 1e-10);
        let r = cr_residual_param(|w| cauchy_transform_param(&f, z, w).unwrap(), &w, 1e-4);
        assert!(r < 1e-10, "{r}");
        assert!(matches!(
            cauchy_transform_param(&f, z, &[C64::new(2.0, 0.0)]),
            Err(Error::OutsideParameterDomain { .. })
        ));
    }
}
