use rayon::prelude::*;

use super::TransitionMap;
use crate::cauchy_green::Polydisc;
use crate::planar_sets::RasterSet;
use crate::target_cp1::{dist_cp1, spray_eval, CP1Point, ChartComplement, LieVector};
use crate::{Error, Result, C64};

/// Deterministic parameter sample in `scale · W`: the center, four points on
/// each axis circle, and eight points on the distinguished boundary torus,
/// all at 95% of the radius.
pub fn parameter_samples(w: &Polydisc, scale: f64) -> Vec<LieVector> {
    assert_eq!(w.dim(), 3, "the spray parameter space is C^3");
    let r: Vec<f64> = w.radii.iter().map(|r| 0.95 * r * scale).collect();
    let mut out = vec![LieVector::ZERO];
    for (k, &rk) in r.iter().enumerate() {
        for j in 0..4 {
            let mut t = LieVector::ZERO;
            t.0[k] = C64::from_polar(rk, j as f64 * std::f64::consts::FRAC_PI_2 + 0.3);
            out.push(t);
        }
    }
    let golden = 2.399_963_229_728_653;
    for j in 0..8 {
        let a = j as f64 * golden;
        out.push(LieVector::new(
            C64::from_polar(r[0], a),
            C64::from_polar(r[1], 2.0 * a + 1.0),
            C64::from_polar(r[2], 3.0 * a + 2.0),
        ));
    }
    out
}

/// `γ(z, t) = (z, g(z, t))` on `K × W` with `s(f(z), t) = s(h(z), g(z, t))`.
#[derive(Clone, Debug)]
pub struct GammaMap {
    k: RasterSet,
    cells: Vec<usize>,
    f_prev: Vec<CP1Point>,
    h: Vec<CP1Point>,
    solvers: Vec<TransitionMap>,
    domain: Polydisc,
    dist_to_id: f64,
}

impl GammaMap {
    pub fn k(&self) -> &RasterSet {
        &self.k
    }

    /// Cells of `K`, in the order used by [`eval`](Self::eval).
    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn domain(&self) -> &Polydisc {
        &self.domain
    }

    /// `sup |g(z, w) - w|` (max-coordinate norm) over `K` and the parameter sample.
    pub fn dist_to_id(&self) -> f64 {
        self.dist_to_id
    }

    pub fn f_prev(&self) -> &[CP1Point] {
        &self.f_prev
    }

    pub fn h(&self) -> &[CP1Point] {
        &self.h
    }

    /// `g(z_i, t)` for the `i`-th cell of `K`.
    pub fn eval(&self, i: usize, t: &LieVector) -> Result<LieVector> {
        self.solvers[i].solve(&self.f_prev[i], &self.h[i], t).map_err(|e| e.at_cell(self.cells[i]))
    }

    /// `sup dist(s(f(z), t), s(h(z), g(z, t)))` over `K` and the given parameters.
    pub fn main1_residual(&self, ts: &[LieVector]) -> Result<f64> {
        let worst = (0..self.cells.len())
            .into_par_iter()
            .map(|i| {
                let mut m: f64 = 0.0;
                for t in ts {
                    let g = self.eval(i, t)?;
                    m = m.max(dist_cp1(&spray_eval(&self.f_prev[i], t), &spray_eval(&self.h[i], &g)));
                }
                Ok(m)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(worst.into_iter().fold(0.0, f64::max))
    }
}

/// Build `γ` from the values of `f_{i-1}` and `h` on the cells of `K`, with
/// one chart complement per cell.
pub fn build_gamma(
    k: &RasterSet,
    f_prev: &[CP1Point],
    h: &[CP1Point],
    charts: &[ChartComplement],
    base: TransitionMap,
    domain: Polydisc,
) -> Result<GammaMap> {
    let cells = k.cell_list();
    if f_prev.len() != cells.len() || h.len() != cells.len() || charts.len() != cells.len() {
        return Err(Error::Precondition("f_prev, h and charts must be given on the cells of K".into()));
    }
    for (i, (a, b)) in f_prev.iter().zip(h).enumerate() {
        let d = dist_cp1(a, b);
        if !(d < base.delta_g) {
            return Err(Error::PointsTooFar { distance: d, limit: base.delta_g }.at_cell(cells[i]));
        }
    }
    let solvers: Vec<TransitionMap> = charts.iter().map(|&c| base.with_chart(c)).collect();
    let mut gamma = GammaMap {
        k: k.clone(),
        cells,
        f_prev: f_prev.to_vec(),
        h: h.to_vec(),
        solvers,
        domain,
        dist_to_id: 0.0,
    };
    let samples = parameter_samples(&gamma.domain, 1.0);
    let per_cell = (0..gamma.cells.len())
        .into_par_iter()
        .map(|i| {
            let mut m: f64 = 0.0;
            for t in &samples {
                m = m.max((gamma.eval(i, t)? - *t).max_norm());
            }
            Ok(m)
        })
        .collect::<Result<Vec<f64>>>()?;
    gamma.dist_to_id = per_cell.into_iter().fold(0.0, f64::max);
    Ok(gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cauchy_green::cr_residual_param;
    use crate::planar_sets::GridSpec;
    use crate::target_cp1::{exp_sl2, LieVector};

    fn setup(eps: f64) -> GammaMap {
        let g = GridSpec::new(2.0, 0.1).unwrap();
        let k = RasterSet::from_predicate(g, |z| z.re.abs() < 0.5 && z.im.abs() < 0.3);
        let cells = k.cell_list();
        let f: Vec<CP1Point> = cells.iter().map(|&c| CP1Point::from_chart(g.center(c) * 0.5)).collect();
        let m = exp_sl2(&LieVector::new(C64::new(eps, 0.0), C64::new(0.0, eps), C64::new(-eps, eps)));
        let h: Vec<CP1Point> = if eps == 0.0 { f.clone() } else { f.iter().map(|p| p.act(&m)).collect() };
        let charts = vec![ChartComplement::zero(); cells.len()];
        build_gamma(&k, &f, &h, &charts, TransitionMap::default(), Polydisc::uniform(3, 0.5)).unwrap()
    }

    #[test]
    fn identity_gamma() {
        let g = setup(0.0);
        assert_eq!(g.dist_to_id(), 0.0);
        let t = LieVector::new(C64::new(0.1, 0.2), C64::new(0.0, 0.0), C64::new(0.3, 0.0));
        assert_eq!(g.eval(0, &t).unwrap(), t);
    }

    #[test]
    fn distance_is_first_order_in_perturbation() {
        let (a, b) = (setup(0.02), setup(0.01));
        let ratio = a.dist_to_id() / b.dist_to_id();
        assert!((ratio - 2.0).abs() < 0.2, "{ratio}");
        let ts = parameter_samples(a.domain(), 1.0);
        assert!(a.main1_residual(&ts).unwrap() < 1e-10);
    }

    #[test]
    fn gamma_is_holomorphic_in_w() {
        let g = setup(0.02);
        let w = [C64::new(0.1, 0.05), C64::new(-0.2, 0.1), C64::new(0.0, 0.2)];
        for i in [0, g.cells().len() / 2] {
            for comp in 0..3 {
                let r = cr_residual_param(|w| g.eval(i, &LieVector([w[0], w[1], w[2]])).unwrap().0[comp], &w, 1e-5);
                assert!(r < 1e-8, "{r}");
            }
        }
    }

    #[test]
    fn too_far_is_rejected() {
        let g = GridSpec::new(2.0, 0.1).unwrap();
        let k = RasterSet::from_predicate(g, |z| z.norm() < 0.3);
        let n = k.count();
        let r = build_gamma(
            &k,
            &vec![CP1Point::zero(); n],
            &vec![CP1Point::from_chart(C64::new(0.9, 0.0)); n],
            &vec![ChartComplement::zero(); n],
            TransitionMap::default(),
            Polydisc::uniform(3, 0.5),
        );
        assert!(matches!(r.unwrap_err().root(), Error::PointsTooFar { .. }));
    }
}
