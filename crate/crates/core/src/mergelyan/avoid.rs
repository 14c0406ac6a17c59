use rand::Rng;
use rayon::prelude::*;

use super::{ApproxReport, RationalMap};
use crate::planar_sets::GridSpec;
use crate::target_cp1::{dist_cp1, exp_sl2, random_lie, CP1Point, LieVector, Spray};
use crate::{Error, Result};

/// Number of random parameters tried after `t = 0`.
pub const AVOID_DRAWS: usize = 20;
/// Grid-minimum distance to `M` that counts as missing it.
pub const AVOID_CLEARANCE: f64 = 1e-6;

/// The accepted perturbation.
#[derive(Clone, Debug, PartialEq)]
pub struct Avoidance {
    pub t: LieVector,
    /// Random draws used (0 when `t = 0` already works).
    pub draws: usize,
    /// `min_z min_m dist(F_t(z), m)` over the grid.
    pub min_distance: f64,
    /// `sup_z dist(F_t(z), F(z))` over the grid.
    pub displacement: f64,
}

/// Generic spray perturbation `F_t = exp(t) · F` whose values on the grid
/// keep away from the finite set `M`, with `|t| <= ball_radius`.
pub fn avoid_set(
    f: &RationalMap,
    m: &[CP1Point],
    ball_radius: f64,
    grid: &GridSpec,
    spray: &Spray,
    rng: &mut impl Rng,
) -> Result<(RationalMap, ApproxReport, Avoidance)> {
    if !(ball_radius > 0.0 && ball_radius <= spray.c0) {
        return Err(Error::Precondition(format!("ball radius {ball_radius} must lie in (0, c0 = {}]", spray.c0)));
    }
    let base: Vec<CP1Point> = (0..grid.len()).into_par_iter().map(|c| f.eval(grid.center(c))).collect();
    let mut history = Vec::new();
    for draw in 0..=AVOID_DRAWS {
        let t = if draw == 0 { LieVector::ZERO } else { random_lie(rng, ball_radius) };
        let g = exp_sl2(&t);
        let moved: Vec<CP1Point> = base.par_iter().map(|p| p.act(&g)).collect();
        let min_distance = moved
            .par_iter()
            .map(|p| m.iter().map(|q| dist_cp1(p, q)).fold(f64::INFINITY, f64::min))
            .reduce(|| f64::INFINITY, f64::min);
        history.push(min_distance);
        if min_distance > AVOID_CLEARANCE {
            let displacement =
                moved.par_iter().zip(&base).map(|(a, b)| dist_cp1(a, b)).reduce(|| 0.0, f64::max);
            let out = if draw == 0 { f.clone() } else { f.post_compose(&g) };
            let report = ApproxReport {
                sup_error: displacement,
                degree: out.degree(),
                method: "spray-avoidance",
                target_reached: displacement <= spray.c1 * t.norm(),
                history,
            };
            return Ok((out, report, Avoidance { t, draws: draw, min_distance, displacement }));
        }
    }
    Err(Error::NoAvoidingPerturbation { draws: AVOID_DRAWS })
}
