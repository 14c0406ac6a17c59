use std::fmt::Write as _;

use super::poly::shift_scale;
use crate::target_cp1::{mat_mul, CP1Point, Mat2, IDENTITY};
use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Simple pole `scale / (z - at)` with weights `coeff` in the top and
/// `den_coeff` in the bottom homogeneous coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pole {
    pub at: C64,
    pub scale: f64,
    pub coeff: C64,
    pub den_coeff: C64,
}

impl Pole {
    /// Pole term of the top coordinate only.
    pub fn new(at: C64, scale: f64, coeff: C64) -> Self {
        Self { at, scale, coeff, den_coeff: ZERO }
    }
}

/// Rational map `z -> post · [T(z) : B(z)]` into `CP^1` with
/// `T = sum_k top_k w^k + sum_j coeff_j s_j / (z - a_j)`, `B` likewise from
/// `bottom` and `den_coeff`, and `w = (z - center) / scale`. Fits work in a
/// rotated frame that `post` undoes.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalMap {
    post: Mat2,
    center: C64,
    scale: f64,
    top: Vec<C64>,
    bottom: Vec<C64>,
    poles: Vec<Pole>,
}

fn horner(c: &[C64], w: C64) -> C64 {
    c.iter().rev().fold(ZERO, |acc, a| acc * w + a)
}

fn trim(mut v: Vec<C64>) -> Vec<C64> {
    while v.len() > 1 && *v.last().unwrap() == ZERO {
        v.pop();
    }
    v
}

fn poly_mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![ZERO; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![ZERO; a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, x) in b.iter().enumerate() {
        out[i] += x;
    }
    out
}

fn poly_scale(a: &[C64], s: C64) -> Vec<C64> {
    a.iter().map(|x| x * s).collect()
}

impl RationalMap {
    /// `post · [u : 1]` for the partial-fraction scalar `u`.
    pub fn from_fractions(post: Mat2, center: C64, scale: f64, poly: Vec<C64>, poles: Vec<Pole>) -> Self {
        Self::from_pair(post, center, scale, poly, vec![ONE], poles)
    }

    /// `post · [T : B]` in partial-fraction form.
    pub fn from_pair(post: Mat2, center: C64, scale: f64, top: Vec<C64>, bottom: Vec<C64>, poles: Vec<Pole>) -> Self {
        let fix = |v: Vec<C64>| trim(if v.is_empty() { vec![ZERO] } else { v });
        Self { post, center, scale, top: fix(top), bottom: fix(bottom), poles }
    }

    /// `[num(z) : den(z)]` with coefficients in `z`, constant term first.
    pub fn from_coefficients(num: Vec<C64>, den: Vec<C64>) -> Result<Self> {
        Self::from_scaled_coefficients(ZERO, 1.0, num, den)
    }

    /// `[num(w) : den(w)]` in the variable `w = (z - center) / scale`.
    pub fn from_scaled_coefficients(center: C64, scale: f64, num: Vec<C64>, den: Vec<C64>) -> Result<Self> {
        let finite = num.iter().chain(&den).all(|c| c.is_finite());
        if !finite || !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Parse("non-finite rational map coefficients".into()));
        }
        if num.iter().chain(&den).all(|c| *c == ZERO) {
            return Err(Error::Parse("numerator and denominator both vanish".into()));
        }
        Ok(Self::from_pair(IDENTITY, center, scale, num, den, Vec::new()))
    }

    pub fn identity() -> Self {
        Self::from_fractions(IDENTITY, ZERO, 1.0, vec![ZERO, ONE], Vec::new())
    }

    pub fn constant(p: &CP1Point) -> Self {
        let (a, b) = p.coords();
        Self::from_pair(IDENTITY, ZERO, 1.0, vec![a], vec![b], Vec::new())
    }

    /// `m ∘ self`.
    pub fn post_compose(&self, m: &Mat2) -> Self {
        Self { post: mat_mul(m, &self.post), ..self.clone() }
    }

    pub fn post(&self) -> &Mat2 {
        &self.post
    }

    pub fn center(&self) -> C64 {
        self.center
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn top(&self) -> &[C64] {
        &self.top
    }

    pub fn bottom(&self) -> &[C64] {
        &self.bottom
    }

    pub fn pole_terms(&self) -> &[Pole] {
        &self.poles
    }

    /// `(T(z), B(z))` before post-composition; `None` at a pole or on overflow.
    pub fn frame_pair(&self, z: C64) -> Option<(C64, C64)> {
        let w = (z - self.center) / self.scale;
        let mut t = horner(&self.top, w);
        let mut b = horner(&self.bottom, w);
        for p in &self.poles {
            let d = z - p.at;
            if d == ZERO {
                return None;
            }
            let k = p.scale / d;
            t += p.coeff * k;
            b += p.den_coeff * k;
        }
        (t.is_finite() && b.is_finite()).then_some((t, b))
    }

    pub fn eval(&self, z: C64) -> CP1Point {
        let p = match self.frame_pair(z) {
            Some((t, b)) => CP1Point::try_new(t, b),
            None => None,
        };
        let p = p.unwrap_or_else(|| self.limit_at(z));
        if self.post == IDENTITY {
            p
        } else {
            p.act(&self.post)
        }
    }

    /// Value at (or numerically at) a pole: the ratio of its two weights.
    fn limit_at(&self, z: C64) -> CP1Point {
        let nearest = self.poles.iter().min_by(|a, b| (z - a.at).norm().total_cmp(&(z - b.at).norm()));
        nearest.and_then(|p| CP1Point::try_new(p.coeff, p.den_coeff)).unwrap_or_else(CP1Point::infinity)
    }

    /// Numerator and denominator in the frame, in `w = (z - center) / scale`.
    fn frame_num_den(&self) -> (C64, f64, Vec<C64>, Vec<C64>) {
        let (center, scale) = (self.center, self.scale);
        let ws: Vec<C64> = self.poles.iter().map(|p| (p.at - center) / scale).collect();
        let mut prod = vec![ONE];
        for w in &ws {
            prod = poly_mul(&prod, &[-w, ONE]);
        }
        let mut num = poly_mul(&self.top, &prod);
        let mut den = poly_mul(&self.bottom, &prod);
        for (j, p) in self.poles.iter().enumerate() {
            // s_j / (z - a_j) = (s_j / scale) / (w - w_j)
            let mut term = vec![C64::new(p.scale / scale, 0.0)];
            for (k, w) in ws.iter().enumerate() {
                if k != j {
                    term = poly_mul(&term, &[-w, ONE]);
                }
            }
            num = poly_add(&num, &poly_scale(&term, p.coeff));
            den = poly_add(&den, &poly_scale(&term, p.den_coeff));
        }
        (center, scale, num, den)
    }

    /// Denominator (in `z`) of the frame scalar `T / B`, whose roots are the
    /// poles in the fitting frame.
    pub fn frame_denominator(&self) -> Vec<C64> {
        let (c, s, _, den) = self.frame_num_den();
        trim(shift_scale(&den, c, s))
    }

    /// Denominator of the frame scalar in the variable
    /// `w = (z - center) / scale`, as `(center, scale, coefficients)`.
    pub fn frame_denominator_scaled(&self) -> (C64, f64, Vec<C64>) {
        let (c, s, _, den) = self.frame_num_den();
        (c, s, trim(den))
    }

    /// Poles in the fitting frame: the pole positions when the bottom
    /// coordinate is `1`, otherwise the roots of the denominator.
    pub fn frame_poles(&self) -> Vec<C64> {
        let plain = self.bottom == [ONE] && self.poles.iter().all(|p| p.den_coeff == ZERO);
        if plain {
            return self.poles.iter().map(|p| p.at).collect();
        }
        let (c, s, den) = self.frame_denominator_scaled();
        poly_roots(&den).into_iter().map(|w| c + w * s).collect()
    }

    /// Scaled numerator and denominator with the post matrix folded in:
    /// `(center, scale, a N + b D, c N + d D)`.
    pub fn scaled_num_den(&self) -> (C64, f64, Vec<C64>, Vec<C64>) {
        let (c, s, n, d) = self.frame_num_den();
        let m = &self.post;
        let num = poly_add(&poly_scale(&n, m[0][0]), &poly_scale(&d, m[0][1]));
        let den = poly_add(&poly_scale(&n, m[1][0]), &poly_scale(&d, m[1][1]));
        (c, s, trim(num), trim(den))
    }

    /// Numerator and denominator in powers of `z`, constant term first.
    pub fn num_den(&self) -> (Vec<C64>, Vec<C64>) {
        let (c, s, n, d) = self.scaled_num_den();
        (trim(shift_scale(&n, c, s)), trim(shift_scale(&d, c, s)))
    }

    pub fn degree(&self) -> usize {
        let deg = |v: &[C64]| v.iter().rposition(|c| *c != ZERO).unwrap_or(0);
        deg(&self.top).max(deg(&self.bottom)) + self.poles.len()
    }

    /// Smallest distance between a root of the numerator and a root of the
    /// denominator (infinite when either has none).
    pub fn common_root_gap(&self) -> f64 {
        let (_, s, n, d) = self.scaled_num_den();
        let rn = poly_roots(&n);
        let rd = poly_roots(&d);
        let mut gap = f64::INFINITY;
        for a in &rn {
            for b in &rd {
                gap = gap.min(((a - b) * s).norm());
            }
        }
        gap
    }

    /// Text form: `num:` and `den:` lines of `re,im` pairs, constant term
    /// first, in the variable `w = (z - center) / scale` given by the
    /// optional `center:` and `scale:` lines (default `w = z`).
    pub fn to_text(&self) -> String {
        let (c, s, n, d) = self.scaled_num_den();
        let mut out = String::new();
        if c != ZERO || s != 1.0 {
            let _ = writeln!(out, "center: {},{}", c.re, c.im);
            let _ = writeln!(out, "scale: {s}");
        }
        for (tag, v) in [("num", &n), ("den", &d)] {
            out.push_str(tag);
            out.push(':');
            for x in v {
                let _ = write!(out, " {},{}", x.re, x.im);
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let complex = |tok: &str| -> Result<C64> {
            let (re, im) = tok.split_once(',').ok_or_else(|| Error::Parse(format!("expected re,im, got {tok:?}")))?;
            let p = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
            Ok(C64::new(p(re)?, p(im)?))
        };
        let (mut center, mut scale, mut num, mut den) = (ZERO, 1.0, None, None);
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (key, rest) = line.split_once(':').ok_or_else(|| Error::Parse(format!("malformed line {line:?}")))?;
            let rest = rest.trim();
            match key.trim() {
                "num" => num = Some(rest.split_whitespace().map(complex).collect::<Result<Vec<_>>>()?),
                "den" => den = Some(rest.split_whitespace().map(complex).collect::<Result<Vec<_>>>()?),
                "center" => center = complex(rest)?,
                "scale" => scale = rest.parse().map_err(|e| Error::Parse(format!("scale: {e}")))?,
                other => return Err(Error::Parse(format!("unknown key {other:?}"))),
            }
        }
        let num = num.ok_or_else(|| Error::Parse("missing num line".into()))?;
        let den = den.ok_or_else(|| Error::Parse("missing den line".into()))?;
        Self::from_scaled_coefficients(center, scale, num, den)
    }
}

/// Roots of `sum_k c_k w^k` by Durand-Kerner iteration with Newton polishing.
pub fn poly_roots(c: &[C64]) -> Vec<C64> {
    let c = trim(c.to_vec());
    let n = c.len() - 1;
    if n == 0 || c[n] == ZERO {
        return Vec::new();
    }
    let monic: Vec<C64> = c.iter().map(|x| x / c[n]).collect();
    let bound = 1.0 + monic[..n].iter().map(|x| x.norm()).fold(0.0, f64::max);
    let mut roots: Vec<C64> = (0..n)
        .map(|k| C64::from_polar(0.5 * bound, 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4))
        .collect();
    for _ in 0..2000 {
        let mut moved: f64 = 0.0;
        for i in 0..n {
            let ri = roots[i];
            let mut denom = ONE;
            for (j, rj) in roots.iter().enumerate() {
                if j != i {
                    denom *= ri - rj;
                }
            }
            let step = horner(&monic, ri) / denom;
            if step.is_finite() {
                roots[i] = ri - step;
                moved = moved.max(step.norm() / (1.0 + ri.norm()));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    let deriv: Vec<C64> = monic.iter().enumerate().skip(1).map(|(k, x)| x * k as f64).collect();
    for r in &mut roots {
        for _ in 0..3 {
            let d = horner(&deriv, *r);
            if d != ZERO {
                let step = horner(&monic, *r) / d;
                if step.is_finite() {
                    *r -= step;
                }
            }
        }
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target_cp1::dist_cp1;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sample() -> RationalMap {
        let poles = vec![
            Pole::new(c(2.0, 0.5), 0.7, c(0.3, -0.1)),
            Pole::new(c(-1.5, 2.0), 1.0, c(-0.2, 0.4)),
        ];
        let rot = [[c(0.6, 0.0), c(0.0, 0.8)], [c(0.0, 0.8), c(0.6, 0.0)]];
        RationalMap::from_fractions(rot, c(0.1, 0.0), 1.3, vec![c(0.5, 0.0), c(0.2, 0.1), c(0.0, -0.3)], poles)
    }

    #[test]
    fn expanded_form_agrees_with_partial_fractions() {
        let r = sample();
        let (n, d) = r.num_den();
        for z in [c(0.0, 0.0), c(0.7, -0.4), c(-0.9, 0.3), c(1.9, 0.5)] {
            let direct = CP1Point::new(horner(&n, z), horner(&d, z));
            assert!(dist_cp1(&direct, &r.eval(z)) < 1e-12);
        }
        assert_eq!(r.degree(), 4);
        assert_eq!(n.len().max(d.len()) - 1, 4);
    }

    #[test]
    fn text_round_trip() {
        let r = sample();
        let back = RationalMap::from_text(&r.to_text()).unwrap();
        for z in [c(0.3, 0.3), c(-1.0, -1.0), c(1.5, 0.0)] {
            assert!(dist_cp1(&back.eval(z), &r.eval(z)) < 1e-12);
        }
        assert!(RationalMap::from_text("num: 1,0\nbogus: 2\n").is_err());
        assert!(RationalMap::from_text("num: 1,0\n").is_err());
    }

    #[test]
    fn frame_poles_found_by_root_finder() {
        let r = sample();
        let roots = poly_roots(&r.frame_denominator());
        for p in r.pole_terms() {
            assert!(roots.iter().any(|q| (q - p.at).norm() < 1e-9), "{roots:?}");
        }
        assert!(r.common_root_gap() > 1e-8);
    }

    #[test]
    fn roots_of_known_polynomial() {
        // (w - 1)(w + 2)(w - i)
        let p = poly_mul(&poly_mul(&[c(-1.0, 0.0), ONE], &[c(2.0, 0.0), ONE]), &[c(0.0, -1.0), ONE]);
        let mut roots = poly_roots(&p);
        roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        let want = [c(-2.0, 0.0), c(0.0, 1.0), c(1.0, 0.0)];
        for (r, w) in roots.iter().zip(&want) {
            assert!((r - w).norm() < 1e-12, "{roots:?}");
        }
    }

    #[test]
    fn pole_evaluates_to_infinity() {
        let r = RationalMap::from_fractions(IDENTITY, ZERO, 1.0, vec![ZERO], vec![Pole::new(c(1.0, 0.0), 1.0, ONE)]);
        assert_eq!(r.eval(c(1.0, 0.0)), CP1Point::infinity());
        let q = RationalMap::from_coefficients(vec![ONE], vec![c(-1.0, 0.0), ONE]).unwrap();
        assert_eq!(q.eval(c(1.0, 0.0)), CP1Point::infinity());
    }

    #[test]
    fn pair_form_with_bottom_poles() {
        // T = 1 + 0.5/(z-2), B = z + 0.25/(z-2)  =>  (z - 1.5) / (z^2 - 2z + 0.25)
        let poles = vec![Pole { at: c(2.0, 0.0), scale: 1.0, coeff: c(0.5, 0.0), den_coeff: c(0.25, 0.0) }];
        let r = RationalMap::from_pair(IDENTITY, ZERO, 1.0, vec![ONE], vec![ZERO, ONE], poles);
        for z in [c(0.3, 0.1), c(-1.0, 2.0)] {
            let want = CP1Point::new(z - 1.5, z * z - z * 2.0 + 0.25);
            assert!(dist_cp1(&r.eval(z), &want) < 1e-12);
        }
        assert_eq!(r.eval(c(2.0, 0.0)), CP1Point::new(c(0.5, 0.0), c(0.25, 0.0)));
        let mut fp = r.frame_poles();
        fp.sort_by(|a, b| a.re.total_cmp(&b.re));
        let disc = (4.0f64 - 1.0).sqrt();
        assert!((fp[0] - c(1.0 - disc / 2.0, 0.0)).norm() < 1e-10, "{fp:?}");
        assert_eq!(r.degree(), 2);
    }
}
