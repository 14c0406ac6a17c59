//! Transition map `G`, the fibre map `γ` of an induction step, and the
//! nonlinear splitting `γ ∘ α = β`.
//!
//! `G(y1, y2, t)` is the `τ` with `s(y2, τ) = s(y1, t)` whose kernel part
//! (for the vertical derivative at `y2`) equals that of `t`; only the
//! one-dimensional complement coordinate is solved for.

mod gamma;
mod split;

pub use gamma::{build_gamma, parameter_samples, GammaMap};
pub use split::{split_gamma, split_gamma_samples, splitting_delta, SplitPair, PICARD_TOLERANCE};

use crate::target_cp1::{dexp_sl2, dist_cp1, exp_sl2, CP1Point, ChartComplement, LieVector};
use crate::{Error, Result, C64};

/// Newton solver for `G` in one chart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionMap {
    /// Chordal residual at which Newton stops.
    pub tolerance: f64,
    pub max_newton_iters: usize,
    /// Largest admissible `dist(y1, y2)`.
    pub delta_g: f64,
    pub chart: ChartComplement,
}

impl Default for TransitionMap {
    fn default() -> Self {
        Self { tolerance: 1e-12, max_newton_iters: 50, delta_g: 0.25, chart: ChartComplement::zero() }
    }
}

impl TransitionMap {
    pub fn with_chart(mut self, chart: ChartComplement) -> Self {
        self.chart = chart;
        self
    }

    /// `τ = G(y1, y2, t)`; exactly `t` when `y1 == y2`.
    pub fn solve(&self, y1: &CP1Point, y2: &CP1Point, t: &LieVector) -> Result<LieVector> {
        if y1 == y2 {
            return Ok(*t);
        }
        let d = dist_cp1(y1, y2);
        if !(d < self.delta_g) {
            return Err(Error::PointsTooFar { distance: d, limit: self.delta_g });
        }
        let (t_ker, t_comp) = self.chart.decompose(t, y2)?;
        let xi = self.chart.direction();
        let target = y1.act(&exp_sl2(t));
        let frame = self.chart.frame();
        let (y20, y21) = y2.coords();
        let (ta, tb) = target.act(frame).coords();

        // residual in homogeneous form: r(μ) = q0 * tb - q1 * ta, q = R exp(τ) y2,
        // whose zero set is exactly the target point and which stays finite.
        let eval = |mu: C64| {
            let tau = t_ker + xi.scale(mu);
            let m = exp_sl2(&tau);
            let dm = dexp_sl2(&tau, &xi);
            let p = [m[0][0] * y20 + m[0][1] * y21, m[1][0] * y20 + m[1][1] * y21];
            let dp = [dm[0][0] * y20 + dm[0][1] * y21, dm[1][0] * y20 + dm[1][1] * y21];
            let q = [frame[0][0] * p[0] + frame[0][1] * p[1], frame[1][0] * p[0] + frame[1][1] * p[1]];
            let dq = [frame[0][0] * dp[0] + frame[0][1] * dp[1], frame[1][0] * dp[0] + frame[1][1] * dp[1]];
            let scale = (q[0].norm_sqr() + q[1].norm_sqr()).sqrt();
            let r = q[0] * tb - q[1] * ta;
            let dr = dq[0] * tb - dq[1] * ta;
            (tau, r, dr, (r / scale).norm())
        };

        let lambda = if t_comp == LieVector::ZERO {
            C64::new(0.0, 0.0)
        } else {
            // t_comp = λ ξ
            let k = (0..3).max_by(|&i, &j| xi.0[i].norm().total_cmp(&xi.0[j].norm())).unwrap();
            t_comp.0[k] / xi.0[k]
        };
        let mut mu = lambda;
        let (mut tau, mut r, mut dr, mut res) = eval(mu);
        for _ in 0..self.max_newton_iters {
            if res < self.tolerance {
                return Ok(tau);
            }
            if dr.norm() == 0.0 || !dr.is_finite() {
                break;
            }
            let step = r / dr;
            let mut damp = 1.0;
            loop {
                let cand = mu - step * damp;
                let next = eval(cand);
                if next.3 < res || damp < 1e-6 {
                    mu = cand;
                    (tau, r, dr, res) = next;
                    break;
                }
                damp *= 0.5;
            }
        }
        if res < self.tolerance {
            return Ok(tau);
        }
        Err(Error::NewtonDivergence { iterations: self.max_newton_iters, residual: res })
    }
}

/// `G(z, y1, y2, t)` with the default solver in the given chart.
pub fn solve_g(chart: &ChartComplement, y1: &CP1Point, y2: &CP1Point, t: &LieVector) -> Result<LieVector> {
    TransitionMap::default().with_chart(*chart).solve(y1, y2, t)
}
