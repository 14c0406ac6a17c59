use rayon::prelude::*;

use super::dbar_at;
use crate::planar_sets::{CartanPair, GridSpec, RasterSet};
use crate::{Error, Result, C64};

/// Minimum separation of `A \ B` and `B \ A`, in cells, for a usable cutoff.
pub const CUTOFF_MIN_SEPARATION_CELLS: f64 = 6.0;

/// Smooth `χ: window -> [0, 1]`, 0 near `A \ B` and 1 near `B \ A`.
#[derive(Clone, Debug)]
pub struct CutoffFunction {
    grid: GridSpec,
    values: Vec<f64>,
    dbar: Vec<C64>,
    sup_dbar: f64,
    separation: f64,
}

impl CutoffFunction {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn value(&self, cell: usize) -> f64 {
        self.values[cell]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `∂̄χ` at a cell; zero off `K`.
    pub fn dbar(&self, cell: usize) -> C64 {
        self.dbar[cell]
    }

    pub fn sup_dbar(&self) -> f64 {
        self.sup_dbar
    }

    /// `sup|∂̄χ| · separation`, the constant `C` in `sup|∂̄χ| <= C / separation`.
    pub fn dbar_constant(&self) -> f64 {
        if self.separation.is_finite() {
            self.sup_dbar * self.separation
        } else {
            0.0
        }
    }
}

fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (s * (6.0 * s - 15.0) + 10.0)
}

fn distances(grid: &GridSpec, set: &RasterSet) -> Vec<f64> {
    let boundary: Vec<C64> = set.boundary_cells().iter().map(|&c| grid.center(c)).collect();
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            if set.contains(i) {
                return 0.0;
            }
            let z = grid.center(i);
            boundary.iter().map(|b| (b - z).norm()).fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Quintic smoothstep of `s = (d_A - m) / (d_A + d_B - 2m)`, with `d_A`, `d_B`
/// the distances to `A \ B` and `B \ A` and `m = 1.5 h`; `∂̄χ` by centered
/// differences, kept on `K`.
pub fn build_cutoff(p: &CartanPair) -> Result<CutoffFunction> {
    let grid = *p.a.grid();
    let h = grid.spacing();
    let required = CUTOFF_MIN_SEPARATION_CELLS * h;
    if p.separation < required - 1e-9 * h {
        return Err(Error::SeparationTooSmall { separation: p.separation, required });
    }
    let values: Vec<f64> = if p.b_only.is_empty() {
        vec![0.0; grid.len()]
    } else {
        let m = 1.5 * h;
        let da = distances(&grid, &p.a_only);
        let db = distances(&grid, &p.b_only);
        da.iter().zip(&db).map(|(&a, &b)| smoothstep((a - m) / (a + b - 2.0 * m))).collect()
    };
    let as_complex: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
    let mut dbar = vec![C64::new(0.0, 0.0); grid.len()];
    let mut sup_dbar: f64 = 0.0;
    for c in p.k.cells() {
        let d = dbar_at(&grid, &as_complex, c).unwrap_or_default();
        sup_dbar = sup_dbar.max(d.norm());
        dbar[c] = d;
    }
    Ok(CutoffFunction { grid, values, dbar, sup_dbar, separation: p.separation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planar_sets::Primitive;
    use crate::planar_sets::{rasterize, SetDescriptor};

    fn strip_pair(grid: &GridSpec) -> CartanPair {
        let rect = |x0, x1| {
            rasterize(&SetDescriptor::new(vec![Primitive::Rect { x0, x1, y0: -0.5, y1: 0.5 }]), grid).unwrap()
        };
        CartanPair::new(rect(-1.5, 0.5), rect(-0.5, 1.5)).unwrap()
    }

    #[test]
    fn monotone_across_band() {
        let g = GridSpec::new(2.0, 0.05).unwrap();
        let p = strip_pair(&g);
        let chi = build_cutoff(&p).unwrap();
        let row = g.n() / 2;
        let mut prev = -1.0;
        for ix in 0..g.n() {
            let c = g.index(ix, row);
            let v = chi.value(c);
            let x = g.center(c).re;
            if x.abs() <= 1.5 {
                assert!(v >= prev - 1e-15);
                prev = v;
            }
        }
        for c in p.a_only.dilate(1).cells() {
            assert_eq!(chi.value(c), 0.0);
        }
        for c in p.b_only.dilate(1).cells() {
            assert_eq!(chi.value(c), 1.0);
        }
        for c in 0..g.len() {
            if !p.k.contains(c) {
                assert_eq!(chi.dbar(c), C64::new(0.0, 0.0));
            }
        }
        // gradient of order 1/width across a band of width 1
        assert!(chi.sup_dbar() > 0.5 && chi.sup_dbar() < 2.0, "{}", chi.sup_dbar());
    }

    #[test]
    fn disjoint_pieces_give_zero_dbar() {
        let g = GridSpec::new(2.0, 0.05).unwrap();
        let a = RasterSet::from_predicate(g, |z| z.re < -0.5 && z.im.abs() < 0.5);
        let b = RasterSet::from_predicate(g, |z| z.re > 0.5 && z.im.abs() < 0.5);
        let p = CartanPair { k: a.intersection(&b), a_only: a.clone(), b_only: b.clone(), separation: a.min_distance(&b), a, b };
        let chi = build_cutoff(&p).unwrap();
        assert_eq!(chi.sup_dbar(), 0.0);
        assert!(p.a.cells().all(|c| chi.value(c) == 0.0));
        assert!(p.b.cells().all(|c| chi.value(c) == 1.0));
    }

    #[test]
    fn too_narrow_band_is_rejected() {
        let g = GridSpec::new(2.0, 0.05).unwrap();
        let rect = |x0, x1| {
            rasterize(&SetDescriptor::new(vec![Primitive::Rect { x0, x1, y0: -0.5, y1: 0.5 }]), &g).unwrap()
        };
        let p = CartanPair::new(rect(-1.0, 0.05), rect(-0.05, 1.0)).unwrap();
        assert!(matches!(build_cutoff(&p), Err(Error::SeparationTooSmall { .. })));
    }
}
