use super::{holes, hull_and_h, RasterSet};
use crate::{Error, Result};

/// Minimum gap, in cells, between `Δ_i ∪ closure(H_i)` and `∂Δ_{i+1}`.
pub const EXHAUSTION_MARGIN_CELLS: f64 = 4.0;

/// One disc of the exhaustion together with `H_i` and `E_i = E ∪ Δ_i ∪ H_i`.
#[derive(Clone, Debug)]
pub struct ExhaustionDisc {
    pub index: usize,
    pub radius: f64,
    pub disc: RasterSet,
    pub holes: RasterSet,
    pub set: RasterSet,
}

impl ExhaustionDisc {
    /// Radius reached by `Δ_i ∪ closure(H_i)`.
    pub fn reach(&self) -> f64 {
        let h = if self.holes.is_empty() { 0.0 } else { self.holes.dilate(1).extent() };
        self.radius.max(h)
    }
}

/// Concentric discs `Δ_1 ⊂ … ⊂ Δ_n` about the origin inside the window.
///
/// Target radii are evenly spaced up to `R - 4h`; each radius is pushed out
/// so that `Δ_i ∪ closure(H_i)` sits at least four cells inside `Δ_{i+1}`.
pub fn build_exhaustion(e: &RasterSet, n: usize) -> Result<Vec<ExhaustionDisc>> {
    if n == 0 {
        return Err(Error::Precondition("exhaustion needs at least one disc".into()));
    }
    let (hull, _) = hull_and_h(e);
    if hull != *e {
        return Err(Error::NotArakelian { holes: holes(e).len() });
    }
    let grid = *e.grid();
    let h = grid.spacing();
    let margin = EXHAUSTION_MARGIN_CELLS * h;
    let limit = grid.window_radius() - margin;
    let mut out: Vec<ExhaustionDisc> = Vec::with_capacity(n);
    for i in 1..=n {
        let mut radius = limit * i as f64 / n as f64;
        if let Some(prev) = out.last() {
            radius = radius.max(prev.reach() + margin);
        }
        if radius > limit + 1e-9 {
            return Err(Error::WindowExhausted { index: i, radius, limit });
        }
        let disc = RasterSet::centered_disc(grid, radius);
        let joined = e.union(&disc);
        let (hull_joined, _) = hull_and_h(&joined);
        let hole_union = hull_joined.difference(&joined);
        let set = hull_joined;
        debug_assert!(holes(&set).is_empty());
        out.push(ExhaustionDisc { index: i, radius, disc, holes: hole_union, set });
    }
    Ok(out)
}

/// Cartan pair `A = E_i \ int Δ`, `B = E_i ∩ Δ_{i+1}`, `K = A ∩ B`.
#[derive(Clone, Debug)]
pub struct CartanPair {
    pub a: RasterSet,
    pub b: RasterSet,
    pub k: RasterSet,
    /// `A \ B`
    pub a_only: RasterSet,
    /// `B \ A`
    pub b_only: RasterSet,
    /// Distance between the cell centers of `A \ B` and `B \ A`.
    pub separation: f64,
}

impl CartanPair {
    /// Build a pair from two arbitrary closed sets, checking the invariants.
    pub fn new(a: RasterSet, b: RasterSet) -> Result<Self> {
        let k = a.intersection(&b);
        if k.touches_boundary() {
            return Err(Error::Precondition("K = A ∩ B touches the window edge (not compact)".into()));
        }
        let a_only = a.difference(&b);
        let b_only = b.difference(&a);
        if a_only.is_empty() {
            return Err(Error::NothingToGlue);
        }
        let separation = if b_only.is_empty() { f64::INFINITY } else { a_only.min_distance(&b_only) };
        if separation < 1.5 * a.grid().spacing() {
            return Err(Error::SeparationFailure { distance: separation });
        }
        Ok(Self { a, b, k, a_only, b_only, separation })
    }
}

/// Cartan pair for one induction step with intermediate disc radius `inner`
/// and next exhaustion radius `outer`.
pub fn cartan_pair_for_step(e_i: &RasterSet, inner: f64, outer: f64) -> Result<CartanPair> {
    if !(inner < outer) {
        return Err(Error::Precondition(format!(
            "intermediate disc radius {inner} must be below the next disc radius {outer}"
        )));
    }
    let grid = *e_i.grid();
    let fuzz = 1e-9 * grid.spacing();
    let outside_inner = RasterSet::from_predicate(grid, |z| z.norm() >= inner - fuzz);
    let a = e_i.intersection(&outside_inner);
    if a.is_empty() {
        return Err(Error::NothingToGlue);
    }
    let b = e_i.intersection(&RasterSet::centered_disc(grid, outer));
    CartanPair::new(a, b)
}
