//! Linear Cousin-I splitting on a Cartan pair:
//! `𝒜(g) = χg - T_K(g ∂̄χ)` on `A`, `ℬ(g) = (χ - 1)g - T_K(g ∂̄χ)` on `B`,
//! so that `g = 𝒜(g) - ℬ(g)` on `K`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::cauchy_green::{
    cr_residual, CutoffFunction, KernelTable, ParamField, ScalarField, TransformPlan,
};
use crate::planar_sets::CartanPair;
use crate::{Error, Result, C64};

/// Splitting operators for one pair and cutoff, with cached transform plans.
#[derive(Clone, Debug)]
pub struct CousinOperator {
    pair: CartanPair,
    chi: CutoffFunction,
    k_cells: Vec<usize>,
    chi_k: Vec<f64>,
    dchi_k: Vec<C64>,
    table: Arc<KernelTable>,
    plan_k: TransformPlan,
    c_split: f64,
}

impl CousinOperator {
    pub fn new(pair: CartanPair, chi: CutoffFunction) -> Self {
        let k_cells = pair.k.cell_list();
        let chi_k = k_cells.iter().map(|&c| chi.value(c)).collect();
        let dchi_k = k_cells.iter().map(|&c| chi.dbar(c)).collect();
        let table = Arc::new(KernelTable::new(*pair.k.grid()));
        let plan_k = TransformPlan::new(table.clone(), &k_cells, &k_cells);
        let c_split = 1.0 + 2.0 * (pair.k.area() / PI).sqrt() * chi.sup_dbar();
        Self { pair, chi, k_cells, chi_k, dchi_k, table, plan_k, c_split }
    }

    pub fn pair(&self) -> &CartanPair {
        &self.pair
    }

    pub fn cutoff(&self) -> &CutoffFunction {
        &self.chi
    }

    pub fn k_cells(&self) -> &[usize] {
        &self.k_cells
    }

    /// `C = 1 + 2 sqrt(Area(K)/π) sup|∂̄χ|`, bounding `sup|𝒜g| + sup|ℬg|` by `C sup|g|`
    /// up to the working transform bound.
    pub fn c_split(&self) -> f64 {
        self.c_split
    }

    fn sources(&self, fields: &[&[C64]]) -> Vec<Vec<C64>> {
        fields
            .iter()
            .map(|g| {
                assert_eq!(g.len(), self.k_cells.len(), "field must be given on K");
                g.iter().zip(&self.dchi_k).map(|(v, d)| v * d).collect()
            })
            .collect()
    }

    /// `(𝒜g, ℬg)` on the cells of `K` for each field given on `K`.
    pub fn split_on_k(&self, fields: &[&[C64]]) -> Vec<(Vec<C64>, Vec<C64>)> {
        let src = self.sources(fields);
        let refs: Vec<&[C64]> = src.iter().map(|v| v.as_slice()).collect();
        let t = self.plan_k.apply_many(&refs);
        fields
            .iter()
            .zip(t)
            .map(|(g, u)| {
                let a = g.iter().zip(&self.chi_k).zip(&u).map(|((g, &x), u)| g * x - u).collect();
                let b = g.iter().zip(&self.chi_k).zip(&u).map(|((g, &x), u)| g * (x - 1.0) - u).collect();
                (a, b)
            })
            .collect()
    }

    /// `𝒜g` on `a_cells ⊂ A` and `ℬg` on `b_cells ⊂ B` for fields given on `K`.
    pub fn split_on(
        &self,
        fields: &[&[C64]],
        a_cells: &[usize],
        b_cells: &[usize],
    ) -> Vec<(Vec<C64>, Vec<C64>)> {
        let grid = *self.pair.k.grid();
        let mut dst: Vec<usize> = a_cells.iter().chain(b_cells).copied().collect();
        dst.sort_unstable();
        dst.dedup();
        let mut pos = vec![usize::MAX; grid.len()];
        for (i, &c) in dst.iter().enumerate() {
            pos[c] = i;
        }
        let mut kpos = vec![usize::MAX; grid.len()];
        for (i, &c) in self.k_cells.iter().enumerate() {
            kpos[c] = i;
        }
        let plan = TransformPlan::new(self.table.clone(), &self.k_cells, &dst);
        let src = self.sources(fields);
        let refs: Vec<&[C64]> = src.iter().map(|v| v.as_slice()).collect();
        let t = plan.apply_many(&refs);
        fields
            .iter()
            .zip(t)
            .map(|(g, u)| {
                let local = |c: usize| {
                    let k = kpos[c];
                    if k == usize::MAX {
                        (C64::new(0.0, 0.0), 0.0)
                    } else {
                        (g[k], self.chi_k[k])
                    }
                };
                let a = a_cells
                    .iter()
                    .map(|&c| {
                        let (gv, x) = local(c);
                        gv * x - u[pos[c]]
                    })
                    .collect();
                let b = b_cells
                    .iter()
                    .map(|&c| {
                        let (gv, x) = local(c);
                        gv * (x - 1.0) - u[pos[c]]
                    })
                    .collect();
                (a, b)
            })
            .collect()
    }

    /// `T_K(g ∂̄χ)` at one cell, for fields evaluated lazily.
    fn transform_at(&self, cell: usize, gk: &[C64]) -> C64 {
        let s: C64 = self
            .k_cells
            .iter()
            .zip(gk)
            .zip(&self.dchi_k)
            .map(|((&k, g), d)| g * d * self.table.get(cell, k))
            .sum();
        s / PI
    }
}

/// Result of a scalar splitting with its residuals.
#[derive(Clone, Debug)]
pub struct CousinSplit {
    pub a_field: ScalarField,
    pub b_field: ScalarField,
    /// `sup_K |g - (a - b)|`
    pub identity_residual: f64,
    /// `sup |∂̄a|` over the interior of `A`.
    pub dbar_residual_a: f64,
    /// `sup |∂̄b|` over the interior of `B`.
    pub dbar_residual_b: f64,
}

/// Split a field given on `K`.
pub fn split_scalar(g: &ScalarField, op: &CousinOperator) -> Result<CousinSplit> {
    let p = op.pair();
    if g.support() != &p.k {
        return Err(Error::Precondition("field must be supported on K = A ∩ B".into()));
    }
    let a_cells = p.a.cell_list();
    let b_cells = p.b.cell_list();
    let (a, b) = op.split_on(&[g.values()], &a_cells, &b_cells).pop().expect("one field");
    let a_field = ScalarField::new(p.a.clone(), a)?;
    let b_field = ScalarField::new(p.b.clone(), b)?;
    let (ag, bg) = (a_field.to_grid(), b_field.to_grid());
    let identity_residual = g
        .cells()
        .iter()
        .zip(g.values())
        .map(|(&c, v)| (v - (ag[c] - bg[c])).norm())
        .fold(0.0, f64::max);
    let grid = *p.k.grid();
    Ok(CousinSplit {
        dbar_residual_a: cr_residual(&grid, &ag, &p.a.interior()),
        dbar_residual_b: cr_residual(&grid, &bg, &p.b.interior()),
        a_field,
        b_field,
        identity_residual,
    })
}

/// Parameter-dependent split `(𝒜g(., w), ℬg(., w))`, evaluated lazily per cell.
pub fn split_param(g: &ParamField, op: &Arc<CousinOperator>) -> Result<(ParamField, ParamField)> {
    let p = op.pair();
    if g.support() != &p.k {
        return Err(Error::Precondition("field must be supported on K = A ∩ B".into()));
    }
    let make = |shift: f64| {
        let op = op.clone();
        let g = g.clone();
        move |cell: usize, w: &[C64]| {
            let gk: Vec<C64> = op.k_cells.iter().map(|&c| g.value(c, w).unwrap_or(C64::new(f64::NAN, 0.0))).collect();
            let local = op
                .k_cells
                .binary_search(&cell)
                .map(|k| gk[k] * (op.chi_k[k] - shift))
                .unwrap_or_default();
            local - op.transform_at(cell, &gk)
        }
    };
    let a = ParamField::new(p.a.clone(), g.domain().clone(), make(0.0));
    let b = ParamField::new(p.b.clone(), g.domain().clone(), make(1.0));
    Ok((a, b))
}
