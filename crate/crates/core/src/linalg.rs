//! Weighted complex least squares with columns added one at a time.
//!
//! Columns are orthogonalized by classical Gram-Schmidt with one round of
//! re-orthogonalization. A column whose new component is negligible
//! relative to its norm is dropped, which plays the role of column pivoting
//! for the nested bases used by the fitting code.

use crate::C64;

/// Relative size below which a new column counts as dependent.
pub const DROP_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct IncrementalLsq {
    sqrt_w: Vec<f64>,
    rhs: Vec<C64>,
    q: Vec<Vec<C64>>,
    /// Column `j` of the triangular factor, length `j + 1`.
    r: Vec<Vec<C64>>,
    /// `Q^H b`
    qb: Vec<C64>,
    residual: Vec<C64>,
    /// Indices (in push order) of accepted columns.
    accepted: Vec<usize>,
    pushed: usize,
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

impl IncrementalLsq {
    /// Problem `min sum_i w_i |sum_j c_j a_ij - b_i|^2`, starting with no columns.
    pub fn new(weights: &[f64], rhs: &[C64]) -> Self {
        assert_eq!(weights.len(), rhs.len());
        let sqrt_w: Vec<f64> = weights.iter().map(|w| w.max(0.0).sqrt()).collect();
        let rhs: Vec<C64> = rhs.iter().zip(&sqrt_w).map(|(b, s)| b * s).collect();
        Self {
            residual: rhs.clone(),
            sqrt_w,
            rhs,
            q: Vec::new(),
            r: Vec::new(),
            qb: Vec::new(),
            accepted: Vec::new(),
            pushed: 0,
        }
    }

    pub fn rows(&self) -> usize {
        self.rhs.len()
    }

    /// Number of columns pushed so far, accepted or not.
    pub fn columns(&self) -> usize {
        self.pushed
    }

    pub fn rank(&self) -> usize {
        self.q.len()
    }

    /// Append a column of unweighted values; returns whether it was kept.
    pub fn push(&mut self, column: &[C64]) -> bool {
        assert_eq!(column.len(), self.rows());
        let idx = self.pushed;
        self.pushed += 1;
        let mut v: Vec<C64> = column.iter().zip(&self.sqrt_w).map(|(a, s)| a * s).collect();
        let n0 = norm(&v);
        if !(n0 > 0.0) || !n0.is_finite() {
            return false;
        }
        let mut coef = vec![C64::new(0.0, 0.0); self.q.len()];
        for _ in 0..2 {
            for (k, qk) in self.q.iter().enumerate() {
                let c = dot(qk, &v);
                coef[k] += c;
                for (vi, qi) in v.iter_mut().zip(qk) {
                    *vi -= c * qi;
                }
            }
        }
        let n1 = norm(&v);
        if n1 <= DROP_TOLERANCE * n0 {
            return false;
        }
        for vi in &mut v {
            *vi /= n1;
        }
        let beta = dot(&v, &self.residual);
        for (ri, qi) in self.residual.iter_mut().zip(&v) {
            *ri -= beta * qi;
        }
        self.qb.push(dot(&v, &self.rhs));
        coef.push(C64::new(n1, 0.0));
        self.r.push(coef);
        self.q.push(v);
        self.accepted.push(idx);
        true
    }

    /// Residual norm that pushing `column` would leave, without pushing it.
    pub fn trial_residual(&self, column: &[C64]) -> f64 {
        assert_eq!(column.len(), self.rows());
        let mut v: Vec<C64> = column.iter().zip(&self.sqrt_w).map(|(a, s)| a * s).collect();
        let n0 = norm(&v);
        if !(n0 > 0.0) || !n0.is_finite() {
            return self.residual_norm();
        }
        for _ in 0..2 {
            for qk in &self.q {
                let c = dot(qk, &v);
                for (vi, qi) in v.iter_mut().zip(qk) {
                    *vi -= c * qi;
                }
            }
        }
        let n1 = norm(&v);
        if n1 <= DROP_TOLERANCE * n0 {
            return self.residual_norm();
        }
        for vi in &mut v {
            *vi /= n1;
        }
        let beta = dot(&v, &self.residual);
        self.residual.iter().zip(&v).map(|(r, q)| (r - beta * q).norm_sqr()).sum::<f64>().sqrt()
    }

    /// Coefficients for every pushed column; dropped columns get zero.
    pub fn solve(&self) -> Vec<C64> {
        let k = self.q.len();
        let mut x = vec![C64::new(0.0, 0.0); k];
        for j in (0..k).rev() {
            let mut s = self.qb[j];
            for (l, xl) in x.iter().enumerate().skip(j + 1) {
                s -= self.r[l][j] * xl;
            }
            x[j] = s / self.r[j][j];
        }
        let mut out = vec![C64::new(0.0, 0.0); self.pushed];
        for (j, &idx) in self.accepted.iter().enumerate() {
            out[idx] = x[j];
        }
        out
    }

    /// Weighted residual norm `||W^{1/2}(A c - b)||`.
    pub fn residual_norm(&self) -> f64 {
        norm(&self.residual)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn recovers_exact_polynomial() {
        let xs: Vec<C64> = (0..40).map(|k| C64::from_polar(0.9, k as f64 * 0.3)).collect();
        let truth = [c(1.0, -2.0), c(0.5, 0.25), c(-3.0, 0.0)];
        let b: Vec<C64> = xs.iter().map(|x| truth[0] + truth[1] * x + truth[2] * x * x).collect();
        let w = vec![1.0; xs.len()];
        let mut ls = IncrementalLsq::new(&w, &b);
        for p in 0..3 {
            let col: Vec<C64> = xs.iter().map(|x| x.powi(p)).collect();
            assert!(ls.push(&col));
        }
        let sol = ls.solve();
        for (a, t) in sol.iter().zip(&truth) {
            assert!((a - t).norm() < 1e-12);
        }
        assert!(ls.residual_norm() < 1e-12);
    }

    #[test]
    fn dependent_column_is_dropped() {
        let xs: Vec<C64> = (0..10).map(|k| c(k as f64, 1.0)).collect();
        let b: Vec<C64> = xs.iter().map(|x| x * 2.0).collect();
        let mut ls = IncrementalLsq::new(&[1.0; 10], &b);
        assert!(ls.push(&xs));
        let twice: Vec<C64> = xs.iter().map(|x| x * c(0.0, 3.0)).collect();
        assert!(!ls.push(&twice));
        let sol = ls.solve();
        assert_eq!(sol.len(), 2);
        assert!((sol[0] - c(2.0, 0.0)).norm() < 1e-13);
        assert_eq!(sol[1], c(0.0, 0.0));
    }

    proptest! {
        #[test]
        fn residual_is_non_increasing(seed in 0u64..1000) {
            let m = 30;
            let xs: Vec<C64> = (0..m).map(|k| C64::from_polar(1.0, (k as f64 + seed as f64) * 0.21)).collect();
            let b: Vec<C64> = xs.iter().map(|x| (x * 0.7).exp()).collect();
            let w: Vec<f64> = (0..m).map(|k| 1.0 + (k % 3) as f64).collect();
            let mut ls = IncrementalLsq::new(&w, &b);
            let mut prev = ls.residual_norm();
            for p in 0..12 {
                let col: Vec<C64> = xs.iter().map(|x| x.powi(p)).collect();
                ls.push(&col);
                let r = ls.residual_norm();
                prop_assert!(r <= prev * (1.0 + 1e-12) + 1e-15);
                prev = r;
            }
            // tracked residual agrees with the explicit one
            let sol = ls.solve();
            let explicit: f64 = xs.iter().zip(&b).zip(&w).map(|((x, bi), wi)| {
                let v: C64 = sol.iter().enumerate().map(|(p, cp)| cp * x.powi(p as i32)).sum();
                wi * (v - bi).norm_sqr()
            }).sum::<f64>().sqrt();
            prop_assert!((explicit - ls.residual_norm()).abs() < 1e-8);
        }
    }
}
