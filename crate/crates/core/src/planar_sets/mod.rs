//! Closed and compact planar sets sampled on a square window.
//!
//! A [`RasterSet`] is a boolean mask over the cells of a [`GridSpec`]. Cell
//! membership is decided by the cell center. The complement is labelled with
//! 4-connectivity; a complement component is treated as unbounded exactly
//! when it touches the window boundary.

mod exhaustion;
mod hull;

pub use exhaustion::{build_exhaustion, cartan_pair_for_step, CartanPair, ExhaustionDisc};
pub use hull::{beh_check, holes, hull_and_h, BehReport, BEH_MARGIN_CELLS};

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::{Error, Result, C64};

const MEMBERSHIP_FUZZ: f64 = 1e-9;

/// Square window `[-R, R]^2` split into `n x n` cells of side `spacing`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    window_radius: f64,
    spacing: f64,
    n: usize,
}

impl GridSpec {
    pub fn new(window_radius: f64, spacing: f64) -> Result<Self> {
        if !(window_radius.is_finite() && window_radius > 0.0) {
            return Err(Error::InvalidGrid(format!("window radius {window_radius} must be positive")));
        }
        if !(spacing.is_finite() && spacing > 0.0 && spacing < window_radius) {
            return Err(Error::InvalidGrid(format!(
                "spacing {spacing} must lie in (0, {window_radius})"
            )));
        }
        let cells = 2.0 * window_radius / spacing;
        let n = cells.round() as usize;
        if (cells - n as f64).abs() > 1e-6 {
            return Err(Error::InvalidGrid(format!(
                "spacing {spacing} does not divide the window width {}",
                2.0 * window_radius
            )));
        }
        if n < 16 {
            return Err(Error::InvalidGrid(format!("{n} x {n} cells; need at least 16 x 16")));
        }
        Ok(Self { window_radius, spacing: 2.0 * window_radius / n as f64, n })
    }

    pub fn window_radius(&self) -> f64 {
        self.window_radius
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Cells per side.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.n + ix
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.n, idx / self.n)
    }

    pub fn center(&self, idx: usize) -> C64 {
        let (ix, iy) = self.coords(idx);
        C64::new(self.axis(ix), self.axis(iy))
    }

    fn axis(&self, i: usize) -> f64 {
        -self.window_radius + (i as f64 + 0.5) * self.spacing
    }

    /// Cell containing `z`, if `z` lies in the window.
    pub fn cell_of(&self, z: C64) -> Option<usize> {
        let fx = (z.re + self.window_radius) / self.spacing;
        let fy = (z.im + self.window_radius) / self.spacing;
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let (ix, iy) = (fx.floor() as usize, fy.floor() as usize);
        let clamp = |i: usize, f: f64| if i == self.n && f <= self.n as f64 + 1e-12 { Some(i - 1) } else if i < self.n { Some(i) } else { None };
        Some(self.index(clamp(ix, fx)?, clamp(iy, fy)?))
    }

    pub fn on_boundary(&self, idx: usize) -> bool {
        let (ix, iy) = self.coords(idx);
        ix == 0 || iy == 0 || ix + 1 == self.n || iy + 1 == self.n
    }

    /// Cell offset by `(dx, dy)` if it stays in the window.
    pub fn offset(&self, idx: usize, dx: isize, dy: isize) -> Option<usize> {
        let (ix, iy) = self.coords(idx);
        let x = ix as isize + dx;
        let y = iy as isize + dy;
        let n = self.n as isize;
        (x >= 0 && y >= 0 && x < n && y < n).then(|| self.index(x as usize, y as usize))
    }

    pub fn neighbors4(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        [(1, 0), (-1, 0), (0, 1), (0, -1)]
            .into_iter()
            .filter_map(move |(dx, dy)| self.offset(idx, dx, dy))
    }

    pub fn neighbors8(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        (-1..=1)
            .flat_map(|dy| (-1..=1).map(move |dx| (dx, dy)))
            .filter(|&(dx, dy)| dx != 0 || dy != 0)
            .filter_map(move |(dx, dy)| self.offset(idx, dx, dy))
    }

    /// Distance from 0 to the farthest window corner.
    pub fn covering_radius(&self) -> f64 {
        self.window_radius * std::f64::consts::SQRT_2
    }
}

/// One building block of a [`SetDescriptor`].
#[derive(Clone, Debug, PartialEq)]
pub enum Primitive {
    Disc { center: C64, radius: f64 },
    Annulus { center: C64, inner: f64, outer: f64 },
    /// `|Im z - y| <= width / 2`
    HLine { y: f64, width: f64 },
    /// `|Re z - x| <= width / 2`
    VLine { x: f64, width: f64 },
    /// Axis-aligned rectangle; bounds may be infinite (half-planes, half-strips).
    Rect { x0: f64, x1: f64, y0: f64, y1: f64 },
}

impl Primitive {
    pub fn contains(&self, z: C64, fuzz: f64) -> bool {
        match *self {
            Primitive::Disc { center, radius } => (z - center).norm() <= radius + fuzz,
            Primitive::Annulus { center, inner, outer } => {
                let r = (z - center).norm();
                r >= inner - fuzz && r <= outer + fuzz
            }
            Primitive::HLine { y, width } => (z.im - y).abs() <= width / 2.0 + fuzz,
            Primitive::VLine { x, width } => (z.re - x).abs() <= width / 2.0 + fuzz,
            Primitive::Rect { x0, x1, y0, y1 } => {
                z.re >= x0 - fuzz && z.re <= x1 + fuzz && z.im >= y0 - fuzz && z.im <= y1 + fuzz
            }
        }
    }

    fn thickness(&self) -> f64 {
        match *self {
            Primitive::Disc { radius, .. } => 2.0 * radius,
            Primitive::Annulus { inner, outer, .. } => outer - inner,
            Primitive::HLine { width, .. } | Primitive::VLine { width, .. } => width,
            Primitive::Rect { x0, x1, y0, y1 } => (x1 - x0).min(y1 - y0),
        }
    }
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Primitive::Disc { center, radius } => {
                write!(f, "disc x={} y={} r={}", center.re, center.im, radius)
            }
            Primitive::Annulus { center, inner, outer } => write!(
                f,
                "annulus x={} y={} inner={} outer={}",
                center.re, center.im, inner, outer
            ),
            Primitive::HLine { y, width } => write!(f, "hline y={y} width={width}"),
            Primitive::VLine { x, width } => write!(f, "vline x={x} width={width}"),
            Primitive::Rect { x0, x1, y0, y1 } => {
                write!(f, "rect x0={x0} x1={x1} y0={y0} y1={y1}")
            }
        }
    }
}

impl FromStr for Primitive {
    type Err = Error;

    /// Parses `kind key=value ...`, e.g. `disc x=0 y=0 r=1` or
    /// `rect x0=-inf x1=0 y0=-1 y1=1`.
    fn from_str(s: &str) -> Result<Self> {
        let mut words = s.split_whitespace();
        let kind = words
            .next()
            .ok_or_else(|| Error::Parse("empty shape".into()))?
            .to_ascii_lowercase();
        let mut kv = std::collections::BTreeMap::new();
        for w in words {
            let (k, v) = w
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got '{w}'")))?;
            let v: f64 = v
                .parse()
                .map_err(|_| Error::Parse(format!("bad number '{v}' for '{k}'")))?;
            kv.insert(k.to_string(), v);
        }
        let mut take = |key: &str, default: Option<f64>| -> Result<f64> {
            kv.remove(key)
                .or(default)
                .ok_or_else(|| Error::Parse(format!("shape '{kind}' needs '{key}'")))
        };
        let prim = match kind.as_str() {
            "disc" => Primitive::Disc {
                center: C64::new(take("x", Some(0.0))?, take("y", Some(0.0))?),
                radius: take("r", None)?,
            },
            "annulus" => Primitive::Annulus {
                center: C64::new(take("x", Some(0.0))?, take("y", Some(0.0))?),
                inner: take("inner", None)?,
                outer: take("outer", None)?,
            },
            "hline" => Primitive::HLine { y: take("y", Some(0.0))?, width: take("width", None)? },
            "vline" => Primitive::VLine { x: take("x", Some(0.0))?, width: take("width", None)? },
            "rect" => Primitive::Rect {
                x0: take("x0", Some(f64::NEG_INFINITY))?,
                x1: take("x1", Some(f64::INFINITY))?,
                y0: take("y0", Some(f64::NEG_INFINITY))?,
                y1: take("y1", Some(f64::INFINITY))?,
            },
            other => return Err(Error::Parse(format!("unknown shape '{other}'"))),
        };
        if let Some(k) = kv.keys().next() {
            return Err(Error::Parse(format!("unknown key '{k}' for shape '{kind}'")));
        }
        Ok(prim)
    }
}

/// Union of primitives.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SetDescriptor {
    pub primitives: Vec<Primitive>,
}

impl SetDescriptor {
    pub fn new(primitives: Vec<Primitive>) -> Self {
        Self { primitives }
    }

    pub fn disc(center: C64, radius: f64) -> Self {
        Self::new(vec![Primitive::Disc { center, radius }])
    }

    pub fn with(mut self, p: Primitive) -> Self {
        self.primitives.push(p);
        self
    }

    pub fn contains(&self, z: C64, fuzz: f64) -> bool {
        self.primitives.iter().any(|p| p.contains(z, fuzz))
    }
}

/// Summary row for one connected component of a set's complement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ComplementComponent {
    pub id: u32,
    pub area_cells: usize,
    pub touches_boundary: bool,
}

pub const NO_LABEL: u32 = u32::MAX;

/// Boolean mask on a grid with its complement labelled (4-connectivity).
#[derive(Clone, Debug)]
pub struct RasterSet {
    grid: GridSpec,
    mask: Vec<bool>,
    labels: Vec<u32>,
    components: Vec<ComplementComponent>,
}

impl PartialEq for RasterSet {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.mask == other.mask
    }
}

/// Rasterize a descriptor: a cell belongs to the set iff its center does.
pub fn rasterize(d: &SetDescriptor, grid: &GridSpec) -> Result<RasterSet> {
    let h = grid.spacing();
    for p in &d.primitives {
        let t = p.thickness();
        if !(t >= 2.0 * h - 1e-12) {
            return Err(Error::InvalidDescriptor(format!(
                "'{p}' has thickness {t} below 2 * spacing = {}",
                2.0 * h
            )));
        }
    }
    let fuzz = MEMBERSHIP_FUZZ * h;
    let mask: Vec<bool> = (0..grid.len()).map(|i| d.contains(grid.center(i), fuzz)).collect();
    if !mask.iter().any(|&m| m) {
        return Err(Error::EmptySet);
    }
    Ok(RasterSet::from_mask(*grid, mask))
}

impl RasterSet {
    pub fn from_mask(grid: GridSpec, mask: Vec<bool>) -> Self {
        assert_eq!(mask.len(), grid.len(), "mask size does not match grid");
        let (labels, components) = label_complement(&grid, &mask);
        Self { grid, mask, labels, components }
    }

    pub fn empty(grid: GridSpec) -> Self {
        Self::from_mask(grid, vec![false; grid.len()])
    }

    pub fn full(grid: GridSpec) -> Self {
        Self::from_mask(grid, vec![true; grid.len()])
    }

    /// Cells whose centers satisfy `pred`.
    pub fn from_predicate(grid: GridSpec, pred: impl Fn(C64) -> bool) -> Self {
        let mask = (0..grid.len()).map(|i| pred(grid.center(i))).collect();
        Self::from_mask(grid, mask)
    }

    /// Closed disc `|z| <= radius` about the origin.
    pub fn centered_disc(grid: GridSpec, radius: f64) -> Self {
        let fuzz = MEMBERSHIP_FUZZ * grid.spacing();
        Self::from_predicate(grid, |z| z.norm() <= radius + fuzz)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.mask[idx]
    }

    pub fn contains_point(&self, z: C64) -> bool {
        self.grid.cell_of(z).is_some_and(|i| self.mask[i])
    }

    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter_map(|(i, &m)| m.then_some(i))
    }

    pub fn cell_list(&self) -> Vec<usize> {
        self.cells().collect()
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&m| m)
    }

    pub fn area(&self) -> f64 {
        self.count() as f64 * self.grid.spacing().powi(2)
    }

    /// Complement label of a cell, [`NO_LABEL`] for set cells.
    pub fn label(&self, idx: usize) -> u32 {
        self.labels[idx]
    }

    pub fn complement_components(&self) -> &[ComplementComponent] {
        &self.components
    }

    pub fn touches_boundary(&self) -> bool {
        self.cells().any(|i| self.grid.on_boundary(i))
    }

    fn zip(&self, other: &Self, op: impl Fn(bool, bool) -> bool) -> Self {
        assert_eq!(self.grid, other.grid, "sets live on different grids");
        let mask = self.mask.iter().zip(&other.mask).map(|(&a, &b)| op(a, b)).collect();
        Self::from_mask(self.grid, mask)
    }

    pub fn union(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a && !b)
    }

    pub fn complement(&self) -> Self {
        Self::from_mask(self.grid, self.mask.iter().map(|&m| !m).collect())
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }

    /// Dilation by `steps` rounds of the 3 x 3 neighbourhood.
    pub fn dilate(&self, steps: usize) -> Self {
        let mut mask = self.mask.clone();
        for _ in 0..steps {
            let prev = mask.clone();
            for i in 0..self.grid.len() {
                if !prev[i] && self.grid.neighbors8(i).any(|j| prev[j]) {
                    mask[i] = true;
                }
            }
        }
        Self::from_mask(self.grid, mask)
    }

    /// Cells whose four neighbours all lie in the set (and not on the window edge).
    pub fn interior(&self) -> Self {
        let mask = (0..self.grid.len())
            .map(|i| {
                self.mask[i]
                    && !self.grid.on_boundary(i)
                    && self.grid.neighbors4(i).all(|j| self.mask[j])
            })
            .collect();
        Self::from_mask(self.grid, mask)
    }

    /// Set cells with an 8-neighbour outside the set.
    pub fn boundary_cells(&self) -> Vec<usize> {
        self.cells()
            .filter(|&i| self.grid.on_boundary(i) || self.grid.neighbors8(i).any(|j| !self.mask[j]))
            .collect()
    }

    /// Distance from `z` to the nearest cell center of the set.
    pub fn distance_to(&self, z: C64) -> f64 {
        self.boundary_cells()
            .iter()
            .map(|&c| (self.grid.center(c) - z).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance from each listed cell center to the set (0 inside it).
    pub fn distance_field(&self, cells: &[usize]) -> Vec<f64> {
        let boundary: Vec<C64> = self.boundary_cells().iter().map(|&c| self.grid.center(c)).collect();
        cells
            .iter()
            .map(|&i| {
                if self.mask[i] {
                    return 0.0;
                }
                let z = self.grid.center(i);
                boundary.iter().map(|&b| (b - z).norm()).fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    /// Minimum distance between cell centers of two sets.
    pub fn min_distance(&self, other: &Self) -> f64 {
        let a: Vec<C64> = self.boundary_cells().iter().map(|&c| self.grid.center(c)).collect();
        let b: Vec<C64> = other.boundary_cells().iter().map(|&c| other.grid.center(c)).collect();
        let mut best = f64::INFINITY;
        for &p in &a {
            for &q in &b {
                best = best.min((p - q).norm());
            }
        }
        best
    }

    /// Largest `|z| + half cell diagonal` over the set; 0 when empty.
    pub fn extent(&self) -> f64 {
        let half_diag = self.grid.spacing() * std::f64::consts::FRAC_1_SQRT_2;
        self.cells().map(|i| self.grid.center(i).norm() + half_diag).fold(0.0, f64::max)
    }

    /// Connected components of the set itself (8-connectivity).
    pub fn components(&self) -> Vec<RasterSet> {
        let mut seen = vec![false; self.grid.len()];
        let mut out = Vec::new();
        for start in self.cells() {
            if seen[start] {
                continue;
            }
            let mut mask = vec![false; self.grid.len()];
            let mut queue = VecDeque::from([start]);
            seen[start] = true;
            while let Some(i) = queue.pop_front() {
                mask[i] = true;
                for j in self.grid.neighbors8(i) {
                    if self.mask[j] && !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
            out.push(RasterSet::from_mask(self.grid, mask));
        }
        out
    }

    /// Cells of complement component `id` as a set.
    pub fn complement_component(&self, id: u32) -> RasterSet {
        let mask = self.labels.iter().map(|&l| l == id).collect();
        RasterSet::from_mask(self.grid, mask)
    }
}

fn label_complement(grid: &GridSpec, mask: &[bool]) -> (Vec<u32>, Vec<ComplementComponent>) {
    let mut labels = vec![NO_LABEL; grid.len()];
    let mut components = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..grid.len() {
        if mask[start] || labels[start] != NO_LABEL {
            continue;
        }
        let id = components.len() as u32;
        let mut area = 0;
        let mut touches = false;
        labels[start] = id;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            area += 1;
            touches |= grid.on_boundary(i);
            for j in grid.neighbors4(i) {
                if !mask[j] && labels[j] == NO_LABEL {
                    labels[j] = id;
                    queue.push_back(j);
                }
            }
        }
        components.push(ComplementComponent { id, area_cells: area, touches_boundary: touches });
    }
    (labels, components)
}
