//! The Riemann sphere `CP^1` as a homogeneous space of `SL(2,C)`.
//!
//! Points are normalized homogeneous pairs. The dominating spray is
//! `s(y, t) = exp(t) . y` for `t` in `sl(2,C) = C^3`, written in the basis
//! `e = [[0,1],[0,0]]`, `h = diag(1,-1)`, `f = [[0,0],[1,0]]`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// 2 x 2 complex matrix, row major.
pub type Mat2 = [[C64; 2]; 2];

pub const IDENTITY: Mat2 = [[ONE, ZERO], [ZERO, ONE]];

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn mat_det(a: &Mat2) -> C64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// Inverse of a matrix with determinant one.
pub fn mat_inv_sl2(a: &Mat2) -> Mat2 {
    [[a[1][1], -a[0][1]], [-a[1][0], a[0][0]]]
}

fn mat_add(a: &Mat2, b: &Mat2) -> Mat2 {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

fn mat_scale(s: C64, a: &Mat2) -> Mat2 {
    [[s * a[0][0], s * a[0][1]], [s * a[1][0], s * a[1][1]]]
}

/// Entrywise max-norm distance, used by checks.
pub fn mat_dist(a: &Mat2, b: &Mat2) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            d = d.max((a[i][j] - b[i][j]).norm());
        }
    }
    d
}

/// Point of `CP^1` with `|z0|^2 + |z1|^2 = 1`. The affine chart around 0 is
/// `u = z0 / z1`; `[0:1]` is `u = 0` and `[1:0]` is infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CP1Point {
    z0: C64,
    z1: C64,
}

impl CP1Point {
    /// Normalized point; panics on `(0, 0)` or non-finite input.
    pub fn new(z0: C64, z1: C64) -> Self {
        Self::try_new(z0, z1).expect("degenerate homogeneous coordinates")
    }

    pub fn try_new(z0: C64, z1: C64) -> Option<Self> {
        let s = z0.norm().max(z1.norm());
        if !(s > 0.0) || !s.is_finite() {
            return None;
        }
        let (a, b) = (z0 / s, z1 / s);
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        Some(Self { z0: a / n, z1: b / n })
    }

    /// Point with chart coordinate `u`; non-finite `u` gives infinity.
    pub fn from_chart(u: C64) -> Self {
        if u.is_finite() {
            Self::new(u, ONE)
        } else {
            Self::infinity()
        }
    }

    pub fn zero() -> Self {
        Self { z0: ZERO, z1: ONE }
    }

    pub fn infinity() -> Self {
        Self { z0: ONE, z1: ZERO }
    }

    pub fn coords(&self) -> (C64, C64) {
        (self.z0, self.z1)
    }

    /// `z0 / z1`, infinite at `[1:0]`.
    pub fn chart0(&self) -> C64 {
        if self.z1 == ZERO {
            C64::new(f64::INFINITY, 0.0)
        } else {
            self.z0 / self.z1
        }
    }

    /// `z1 / z0`, the coordinate around infinity.
    pub fn chart_inf(&self) -> C64 {
        if self.z0 == ZERO {
            C64::new(f64::INFINITY, 0.0)
        } else {
            self.z1 / self.z0
        }
    }

    /// Möbius action of a matrix.
    pub fn act(&self, m: &Mat2) -> Self {
        Self::new(m[0][0] * self.z0 + m[0][1] * self.z1, m[1][0] * self.z0 + m[1][1] * self.z1)
    }

    /// Unit-sphere image under the inverse stereographic projection of `u`.
    pub fn to_sphere(&self) -> [f64; 3] {
        let (a, b) = (self.z0, self.z1);
        let p = a * b.conj();
        [2.0 * p.re, 2.0 * p.im, a.norm_sqr() - b.norm_sqr()]
    }

    /// Inverse of [`to_sphere`](Self::to_sphere); the input need not be unit.
    pub fn from_sphere(v: [f64; 3]) -> Option<Self> {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !(n > 0.0) {
            return None;
        }
        let (x, y, w) = (v[0] / n, v[1] / n, v[2] / n);
        // (x + iy) / (1 - w) and (1 + w) / (x - iy) both equal u.
        if w <= 0.0 {
            Self::try_new(C64::new(x, y), C64::new(1.0 - w, 0.0))
        } else {
            Self::try_new(C64::new(1.0 + w, 0.0), C64::new(x, -y))
        }
    }
}

/// Chordal distance `|p0 q1 - p1 q0|`, in `[0, 1]`.
pub fn dist_cp1(p: &CP1Point, q: &CP1Point) -> f64 {
    (p.z0 * q.z1 - p.z1 * q.z0).norm().min(1.0)
}

/// Element `t1 e + t2 h + t3 f` of `sl(2,C)`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct LieVector(pub [C64; 3]);

impl LieVector {
    pub const ZERO: LieVector = LieVector([ZERO; 3]);
    pub const E: LieVector = LieVector([ONE, ZERO, ZERO]);
    pub const H: LieVector = LieVector([ZERO, ONE, ZERO]);
    pub const F: LieVector = LieVector([ZERO, ZERO, ONE]);

    pub fn new(t1: C64, t2: C64, t3: C64) -> Self {
        Self([t1, t2, t3])
    }

    /// Euclidean norm on `C^3`.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest coordinate modulus (the polydisc norm).
    pub fn max_norm(&self) -> f64 {
        self.0.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(self.0.map(|c| c * s))
    }

    pub fn matrix(&self) -> Mat2 {
        let [t1, t2, t3] = self.0;
        [[t2, t1], [t3, -t2]]
    }

    /// Coordinates of a traceless matrix.
    pub fn from_matrix(m: &Mat2) -> Self {
        Self([m[0][1], (m[0][0] - m[1][1]) * 0.5, m[1][0]])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl std::ops::Add for LieVector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl std::ops::Sub for LieVector {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl std::ops::Neg for LieVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self(self.0.map(|c| -c))
    }
}

/// `Ad_g(t) = g M g^{-1}` for `g` in `SL(2,C)`.
pub fn adjoint(g: &Mat2, t: &LieVector) -> LieVector {
    LieVector::from_matrix(&mat_mul(&mat_mul(g, &t.matrix()), &mat_inv_sl2(g)))
}

const SERIES_CUTOFF: f64 = 1.0;

/// `(cosh m, sinh m / m, (m cosh m - sinh m) / m^3)` as even functions of `m`,
/// taking `m^2` directly so the square-root branch never matters.
fn hyperbolic_parts(m2: C64) -> (C64, C64, C64) {
    if m2.norm() < SERIES_CUTOFF {
        // cosh = sum m^2k/(2k)!, sinhc = sum m^2k/(2k+1)!,
        // sinhc'/m = sum 2(k+1) m^2k / (2k+3)!
        let (mut ch, mut sc, mut dsc) = (ZERO, ZERO, ZERO);
        let mut p = ONE;
        let mut fact = 1.0; // (2k)!
        for k in 0..14 {
            let kf = k as f64;
            ch += p / fact;
            sc += p / (fact * (2.0 * kf + 1.0));
            dsc += p * (2.0 * (kf + 1.0)) / (fact * (2.0 * kf + 1.0) * (2.0 * kf + 2.0) * (2.0 * kf + 3.0));
            p *= m2;
            fact *= (2.0 * kf + 1.0) * (2.0 * kf + 2.0);
        }
        (ch, sc, dsc)
    } else {
        let m = m2.sqrt();
        let (ch, sh) = (m.cosh(), m.sinh());
        (ch, sh / m, (m * ch - sh) / (m2 * m))
    }
}

fn mu_squared(t: &LieVector) -> C64 {
    let [t1, t2, t3] = t.0;
    t2 * t2 + t1 * t3
}

/// Closed-form `exp(M) = cosh(mu) I + sinhc(mu) M` with `mu^2 = t2^2 + t1 t3`.
pub fn exp_sl2(t: &LieVector) -> Mat2 {
    let (ch, sc, _) = hyperbolic_parts(mu_squared(t));
    mat_add(&mat_scale(ch, &IDENTITY), &mat_scale(sc, &t.matrix()))
}

/// Directional derivative `d/ds exp(t + s x)` at `s = 0`.
pub fn dexp_sl2(t: &LieVector, x: &LieVector) -> Mat2 {
    let (_, sc, dsc) = hyperbolic_parts(mu_squared(t));
    let [t1, t2, t3] = t.0;
    let [x1, x2, x3] = x.0;
    let q = (2.0 * t2 * x2 + t1 * x3 + t3 * x1) * 0.5;
    let a = mat_scale(sc * q, &IDENTITY);
    let b = mat_scale(dsc * q, &t.matrix());
    let c = mat_scale(sc, &x.matrix());
    mat_add(&mat_add(&a, &b), &c)
}

/// The spray `s(y, t) = exp(t) . y`.
pub fn spray_eval(y: &CP1Point, t: &LieVector) -> CP1Point {
    y.act(&exp_sl2(t))
}

/// Coefficients of the vertical derivative at chart-0 coordinate `u`:
/// `Ds(t) = t1 + 2 t2 u - t3 u^2`.
pub fn vertical_derivative(u: C64) -> [C64; 3] {
    [ONE, 2.0 * u, -u * u]
}

/// Coefficients of the vertical derivative at chart-infinity coordinate `v`:
/// `Ds(t) = -t1 v^2 - 2 t2 v + t3`.
pub fn vertical_derivative_inf(v: C64) -> [C64; 3] {
    [-v * v, -2.0 * v, ONE]
}

fn apply(c: &[C64; 3], t: &LieVector) -> C64 {
    c[0] * t.0[0] + c[1] * t.0[1] + c[2] * t.0[2]
}

/// Affine chart of `CP^1` together with a complement to the kernel of the
/// vertical derivative.
///
/// The chart is `u = chart0(R . y)` for a unitary frame `R`. The identity frame
/// is the chart around 0 with complement `e`; the swap frame is the chart
/// around infinity with complement spanned by `f`. Since `R s(y,t) =
/// s(R y, Ad_R t)`, every frame gives the complement `Ad_R^{-1} e`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChartComplement {
    frame: Mat2,
    name: &'static str,
    max_modulus: f64,
}

impl ChartComplement {
    pub fn zero() -> Self {
        Self { frame: IDENTITY, name: "0", max_modulus: 1.0 }
    }

    /// Chart around infinity, `u = -1/v`.
    pub fn infinity() -> Self {
        Self { frame: [[ZERO, ONE], [-ONE, ZERO]], name: "inf", max_modulus: 1.0 }
    }

    /// Chart centered at `p`, through the unitary map sending `p` to 0.
    pub fn centered_at(p: &CP1Point) -> Self {
        let (a, b) = p.coords();
        Self { frame: [[b, -a], [a.conj(), b.conj()]], name: "rotated", max_modulus: 1.0 }
    }

    /// Same chart with a different admissible coordinate bound.
    pub fn with_max_modulus(mut self, m: f64) -> Self {
        self.max_modulus = m;
        self
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn frame(&self) -> &Mat2 {
        &self.frame
    }

    pub fn max_modulus(&self) -> f64 {
        self.max_modulus
    }

    /// Chart coordinate of `y` (may exceed the admissible bound).
    pub fn coordinate(&self, y: &CP1Point) -> C64 {
        y.act(&self.frame).chart0()
    }

    /// Coordinate of `y`, rejecting points outside `|u| <= max_modulus`.
    pub fn checked_coordinate(&self, y: &CP1Point) -> Result<C64> {
        let u = self.coordinate(y);
        let m = u.norm();
        if !(m <= self.max_modulus * (1.0 + 1e-12)) {
            return Err(Error::ChartMismatch { chart: self.name, modulus: m });
        }
        Ok(u)
    }

    /// Point with chart coordinate `u`.
    pub fn point(&self, u: C64) -> CP1Point {
        CP1Point::from_chart(u).act(&mat_inv_sl2(&self.frame))
    }

    /// Complement direction `Ad_R^{-1} e`.
    pub fn direction(&self) -> LieVector {
        adjoint(&mat_inv_sl2(&self.frame), &LieVector::E)
    }

    /// Vertical derivative at `y` as a functional on `C^3`, expressed in
    /// this chart's coordinate.
    pub fn ds(&self, y: &CP1Point) -> [C64; 3] {
        let c = vertical_derivative(self.coordinate(y));
        let basis = [LieVector::E, LieVector::H, LieVector::F];
        basis.map(|b| apply(&c, &adjoint(&self.frame, &b)))
    }

    /// `t = t' + t''` with `Ds(y) t' = 0` and `t''` along [`direction`](Self::direction).
    pub fn decompose(&self, t: &LieVector, y: &CP1Point) -> Result<(LieVector, LieVector)> {
        self.checked_coordinate(y)?;
        let ds = self.ds(y);
        let xi = self.direction();
        // Ds(xi) = 1 in every frame; keep the division for exactness of the identity.
        let lambda = apply(&ds, t) / apply(&ds, &xi);
        let t2 = xi.scale(lambda);
        Ok((*t - t2, t2))
    }
}

/// Apply a linear functional given by coefficients.
pub fn apply_functional(c: &[C64; 3], t: &LieVector) -> C64 {
    apply(c, t)
}

/// True iff at every sample point some section has nonzero vertical derivative.
pub fn flexibility_check(sections: &[LieVector], sample: &[CP1Point]) -> bool {
    if sections.is_empty() {
        return false;
    }
    sample.iter().all(|y| {
        let c = if y.chart0().norm() <= 1.0 {
            vertical_derivative(y.chart0())
        } else {
            vertical_derivative_inf(y.chart_inf())
        };
        sections.iter().any(|s| apply(&c, s).norm() > 1e-12)
    })
}

/// Spray constants: `dist(y, s(y,t)) <= c1 |t|` for `|t| <= c0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spray {
    pub c0: f64,
    pub c1: f64,
}

impl Default for Spray {
    /// Constants from [`estimate_constants`] with its default sample.
    fn default() -> Self {
        estimate_constants(DEFAULT_CONSTANT_SAMPLES, 0)
    }
}

pub const DEFAULT_CONSTANT_SAMPLES: usize = 4000;

/// Uniformly distributed point on the sphere.
pub fn random_point(rng: &mut impl Rng) -> CP1Point {
    loop {
        let v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 > 1e-6 && n2 <= 1.0 {
            if let Some(p) = CP1Point::from_sphere(v) {
                return p;
            }
        }
    }
}

/// Random Lie vector with Euclidean norm at most `radius`.
pub fn random_lie(rng: &mut impl Rng, radius: f64) -> LieVector {
    loop {
        let mut t = [ZERO; 3];
        for c in &mut t {
            *c = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let t = LieVector(t);
        let n = t.norm();
        if n > 1e-9 && n <= 6f64.sqrt() {
            let r = radius * rng.gen::<f64>().powf(1.0 / 6.0);
            return t.scale(C64::new(r / n, 0.0));
        }
    }
}

fn ratio(y: &CP1Point, t: &LieVector) -> f64 {
    dist_cp1(y, &spray_eval(y, t)) / t.norm()
}

/// Estimate `(c0, c1)` with `c0 = 1`: random sampling of `|t| <= 1` followed by
/// coordinate search around the best samples; `c1` is the observed maximum
/// ratio inflated by ten percent.
pub fn estimate_constants(samples: usize, seed: u64) -> Spray {
    let c0 = 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Vec<(f64, CP1Point, LieVector)> = Vec::new();
    for _ in 0..samples.max(1) {
        let y = random_point(&mut rng);
        let t = random_lie(&mut rng, c0);
        if t.norm() < 1e-9 {
            continue;
        }
        best.push((ratio(&y, &t), y, t));
    }
    best.sort_by(|a, b| b.0.total_cmp(&a.0));
    best.truncate(8);
    let mut top = best.first().map_or(0.0, |b| b.0);
    for (mut r, mut y, mut t) in best {
        let mut step = 0.1;
        while step > 1e-4 {
            let mut improved = false;
            for k in 0..12 {
                let d = if k % 2 == 0 { step } else { -step };
                let (mut y2, mut t2) = (y, t);
                let idx = k / 2;
                if idx < 3 {
                    t2.0[idx] += C64::new(d, 0.0);
                } else if idx < 5 {
                    t2.0[idx - 3] += C64::new(0.0, d);
                } else {
                    let u = y.chart0();
                    y2 = if u.norm() <= 1.0 {
                        CP1Point::from_chart(u + C64::new(d, d * 0.5))
                    } else {
                        let v = y.chart_inf() + C64::new(d, -d * 0.5);
                        CP1Point::new(ONE, v)
                    };
                }
                let n = t2.norm();
                if n > c0 {
                    t2 = t2.scale(C64::new(c0 / n, 0.0));
                }
                if t2.norm() < 1e-9 {
                    continue;
                }
                let r2 = ratio(&y2, &t2);
                if r2 > r {
                    (r, y, t) = (r2, y2, t2);
                    improved = true;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        top = top.max(r);
    }
    Spray { c0, c1: 1.1 * top }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn expm_oracle(m: &Mat2) -> Mat2 {
        // scaling and squaring with a Taylor series
        let s = 10;
        let a = mat_scale(c(1.0 / f64::from(1 << s), 0.0), m);
        let mut term = IDENTITY;
        let mut sum = IDENTITY;
        for k in 1..20 {
            term = mat_scale(c(1.0 / k as f64, 0.0), &mat_mul(&term, &a));
            sum = mat_add(&sum, &term);
        }
        for _ in 0..s {
            sum = mat_mul(&sum, &sum);
        }
        sum
    }

    #[test]
    fn exp_examples() {
        assert_eq!(exp_sl2(&LieVector::ZERO), IDENTITY);
        let e = exp_sl2(&LieVector::E);
        assert!(mat_dist(&e, &[[ONE, ONE], [ZERO, ONE]]) < 1e-15);
        let hm = exp_sl2(&LieVector::H);
        let d = [[c(1f64.exp(), 0.0), ZERO], [ZERO, c((-1f64).exp(), 0.0)]];
        assert!(mat_dist(&hm, &d) < 1e-14);
        for t in [LieVector::E, LieVector::H, LieVector::new(c(0.3, 1.0), c(-2.0, 0.1), c(0.5, 0.5))] {
            assert!(mat_dist(&exp_sl2(&t), &expm_oracle(&t.matrix())) < 1e-10);
        }
    }

    #[test]
    fn dexp_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let t = random_lie(&mut rng, 2.5);
            let x = random_lie(&mut rng, 1.0);
            let eps = 1e-5;
            let p = exp_sl2(&(t + x.scale(c(eps, 0.0))));
            let m = exp_sl2(&(t - x.scale(c(eps, 0.0))));
            let fd = mat_scale(c(0.5 / eps, 0.0), &mat_add(&p, &mat_scale(c(-1.0, 0.0), &m)));
            assert!(mat_dist(&fd, &dexp_sl2(&t, &x)) < 1e-8);
        }
    }

    #[test]
    fn spray_examples() {
        let y = CP1Point::zero();
        assert!((spray_eval(&y, &LieVector::E).chart0() - ONE).norm() < 1e-15);
        let y = CP1Point::infinity();
        assert!((spray_eval(&y, &LieVector::F).chart0() - ONE).norm() < 1e-15);
        let y = CP1Point::from_chart(c(0.3, -2.0));
        assert_eq!(spray_eval(&y, &LieVector::ZERO), y);
    }

    #[test]
    fn distance_examples() {
        let p = CP1Point::from_chart(c(0.2, 0.7));
        assert_eq!(dist_cp1(&p, &p), 0.0);
        assert!((dist_cp1(&CP1Point::zero(), &CP1Point::infinity()) - 1.0).abs() < 1e-15);
        let d = dist_cp1(&CP1Point::zero(), &CP1Point::from_chart(ONE));
        assert!((d - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn sphere_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let p = random_point(&mut rng);
            let q = CP1Point::from_sphere(p.to_sphere()).unwrap();
            assert!(dist_cp1(&p, &q) < 1e-14);
            let v = p.to_sphere();
            let n: f64 = v.iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-14);
        }
        // chordal distance is half the sphere chord
        let a = CP1Point::from_chart(c(0.3, 0.1));
        let b = CP1Point::from_chart(c(-1.7, 2.0));
        let (va, vb) = (a.to_sphere(), b.to_sphere());
        let chord = ((va[0] - vb[0]).powi(2) + (va[1] - vb[1]).powi(2) + (va[2] - vb[2]).powi(2)).sqrt();
        assert!((chord - 2.0 * dist_cp1(&a, &b)).abs() < 1e-14);
    }

    #[test]
    fn vertical_derivative_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let u = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let y = CP1Point::from_chart(u);
            let t = random_lie(&mut rng, 1.0);
            let eps = 1e-6;
            let up = spray_eval(&y, &t.scale(c(eps, 0.0))).chart0();
            let um = spray_eval(&y, &t.scale(c(-eps, 0.0))).chart0();
            let fd = (up - um) / (2.0 * eps);
            assert!((fd - apply(&vertical_derivative(u), &t)).norm() < 1e-8);
            let v = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let y = CP1Point::new(ONE, v);
            let vp = spray_eval(&y, &t.scale(c(eps, 0.0))).chart_inf();
            let vm = spray_eval(&y, &t.scale(c(-eps, 0.0))).chart_inf();
            let fd = (vp - vm) / (2.0 * eps);
            assert!((fd - apply(&vertical_derivative_inf(v), &t)).norm() < 1e-8);
        }
        // u = 0: kernel spanned by h, f
        let c0 = vertical_derivative(ZERO);
        assert_eq!(apply(&c0, &LieVector::H), ZERO);
        assert_eq!(apply(&c0, &LieVector::F), ZERO);
        let c1 = vertical_derivative(ONE);
        assert_eq!(apply(&c1, &LieVector::new(ONE, ONE, ONE)), c(2.0, 0.0));
    }

    #[test]
    fn chart_frames() {
        let inf = ChartComplement::infinity();
        assert!(inf.coordinate(&CP1Point::infinity()).norm() < 1e-15);
        let d = inf.direction();
        // direction spans f
        assert!(d.0[0].norm() < 1e-15 && d.0[1].norm() < 1e-15 && d.0[2].norm() > 0.5);
        assert_eq!(ChartComplement::zero().direction(), LieVector::E);
        let p = CP1Point::from_chart(c(3.0, -1.0));
        let r = ChartComplement::centered_at(&p);
        assert!(r.coordinate(&p).norm() < 1e-14);
        assert!(dist_cp1(&r.point(c(0.2, 0.1)), &p) > 0.0);
        assert!(dist_cp1(&r.point(r.coordinate(&p)), &p) < 1e-14);
    }

    #[test]
    fn decompose_examples() {
        let z = ChartComplement::zero();
        let (tp, tpp) = z.decompose(&LieVector::E, &CP1Point::zero()).unwrap();
        assert_eq!(tp, LieVector::ZERO);
        assert_eq!(tpp, LieVector::E);
        let (_, tpp) = z.decompose(&LieVector::H, &CP1Point::zero()).unwrap();
        assert_eq!(tpp, LieVector::ZERO);
        assert!(matches!(
            z.decompose(&LieVector::E, &CP1Point::from_chart(c(2.0, 0.0))),
            Err(Error::ChartMismatch { .. })
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for chart in [ChartComplement::zero(), ChartComplement::infinity()] {
            for _ in 0..50 {
                let u = c(rng.gen_range(-0.7..0.7), rng.gen_range(-0.7..0.7));
                let y = chart.point(u);
                let t = random_lie(&mut rng, 1.0);
                let (tp, tpp) = chart.decompose(&t, &y).unwrap();
                let ds = chart.ds(&y);
                assert!(apply(&ds, &tp).norm() < 1e-14);
                assert!((apply(&ds, &t) - apply(&ds, &tpp)).norm() < 1e-14);
                assert!(((tp + tpp) - t).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn flexibility() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts: Vec<_> = (0..1000).map(|_| random_point(&mut rng)).collect();
        assert!(flexibility_check(&[LieVector::E, LieVector::H, LieVector::F], &pts));
        assert!(!flexibility_check(&[LieVector::H], &[CP1Point::zero()]));
        assert!(!flexibility_check(&[], &pts));
    }

    #[test]
    fn constants() {
        let s = estimate_constants(2000, 0);
        assert_eq!(s.c0, 1.0);
        assert!(s.c1 >= 1.0);
        // small-t supremum is sqrt(3/2), attained at |u| = 1
        assert!(s.c1 >= 1.1 * 1.5f64.sqrt() * 0.99, "{}", s.c1);
        let s2 = estimate_constants(4000, 1);
        assert!((s2.c1 - s.c1).abs() / s.c1 < 0.05);
    }
}
