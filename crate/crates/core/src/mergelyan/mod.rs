//! Approximation engines: polynomial fits on hole-free compacts, greedy
//! rational approximation of `CP^1`-valued maps, continuous gluing through
//! the sphere, and generic avoidance of finite sets.

mod avoid;
mod correct;
mod fit;
mod glue;
mod poly;
mod rational;

pub use avoid::{avoid_set, Avoidance, AVOID_CLEARANCE, AVOID_DRAWS};
pub use correct::rational_correct;
pub use fit::{rational_approx_cp1, FitOptions, MAX_DEGREE};
pub use glue::{continuous_glue, relax_extension, GlueReport, GLUE_BAND_CELLS, TUBULAR_RADIUS};
pub use poly::{poly_approx, Polynomial};
pub use rational::{poly_roots, Pole, RationalMap};

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::planar_sets::GridSpec;
use crate::target_cp1::{dist_cp1, CP1Point};
use crate::{Error, Result, C64};

/// Continuous point evaluator.
pub type PointFn = Arc<dyn Fn(C64) -> CP1Point + Send + Sync>;

/// Grid samples of a map into `CP^1`, optionally backed by a continuous
/// evaluator. Without one, off-center points take the value of their cell
/// (the nearest cell outside the window).
#[derive(Clone)]
pub struct SampledMap {
    grid: GridSpec,
    values: Vec<CP1Point>,
    evaluator: Option<PointFn>,
}

impl fmt::Debug for SampledMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledMap")
            .field("grid", &self.grid)
            .field("cells", &self.values.len())
            .field("evaluator", &self.evaluator.is_some())
            .finish()
    }
}

impl SampledMap {
    pub fn from_fn(grid: GridSpec, f: impl Fn(C64) -> CP1Point + Send + Sync + 'static) -> Self {
        let f: PointFn = Arc::new(f);
        let values = (0..grid.len()).into_par_iter().map(|c| f(grid.center(c))).collect();
        Self { grid, values, evaluator: Some(f) }
    }

    pub fn from_values(grid: GridSpec, values: Vec<CP1Point>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Precondition(format!(
                "{} samples for a grid of {} cells",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values, evaluator: None })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[CP1Point] {
        &self.values
    }

    pub fn value(&self, cell: usize) -> CP1Point {
        self.values[cell]
    }

    pub fn has_evaluator(&self) -> bool {
        self.evaluator.is_some()
    }

    pub fn eval(&self, z: C64) -> CP1Point {
        if let Some(f) = &self.evaluator {
            return f(z);
        }
        let g = &self.grid;
        let r = g.window_radius();
        let h = g.spacing();
        let clamp = |t: f64| ((t + r) / h).floor().clamp(0.0, (g.n() - 1) as f64) as usize;
        self.values[g.index(clamp(z.re), clamp(z.im))]
    }
}

/// A map into `CP^1`: a global rational map or grid samples.
#[derive(Clone, Debug)]
pub enum CP1Map {
    Rational(RationalMap),
    Sampled(SampledMap),
}

impl From<RationalMap> for CP1Map {
    fn from(r: RationalMap) -> Self {
        CP1Map::Rational(r)
    }
}

impl From<SampledMap> for CP1Map {
    fn from(s: SampledMap) -> Self {
        CP1Map::Sampled(s)
    }
}

impl CP1Map {
    pub fn eval(&self, z: C64) -> CP1Point {
        match self {
            CP1Map::Rational(r) => r.eval(z),
            CP1Map::Sampled(s) => s.eval(z),
        }
    }

    /// Value at a cell of `grid`; stored samples are used when the grids agree.
    pub fn eval_cell(&self, grid: &GridSpec, cell: usize) -> CP1Point {
        match self {
            CP1Map::Sampled(s) if s.grid == *grid => s.values[cell],
            m => m.eval(grid.center(cell)),
        }
    }

    /// Values at the listed cells.
    pub fn eval_cells(&self, grid: &GridSpec, cells: &[usize]) -> Vec<CP1Point> {
        cells.par_iter().map(|&c| self.eval_cell(grid, c)).collect()
    }

    /// Values at every cell of `grid`.
    pub fn sample(&self, grid: &GridSpec) -> SampledMap {
        let values = (0..grid.len()).into_par_iter().map(|c| self.eval_cell(grid, c)).collect();
        SampledMap { grid: *grid, values, evaluator: self.continuous() }
    }

    /// Continuous evaluator, when one exists.
    pub fn continuous(&self) -> Option<PointFn> {
        match self {
            CP1Map::Rational(r) => {
                let r = r.clone();
                Some(Arc::new(move |z| r.eval(z)))
            }
            CP1Map::Sampled(s) => s.evaluator.clone(),
        }
    }

    pub fn degree(&self) -> Option<usize> {
        match self {
            CP1Map::Rational(r) => Some(r.degree()),
            CP1Map::Sampled(_) => None,
        }
    }

    pub fn as_rational(&self) -> Option<&RationalMap> {
        match self {
            CP1Map::Rational(r) => Some(r),
            CP1Map::Sampled(_) => None,
        }
    }
}

/// Outcome of an approximation.
#[derive(Clone, Debug, PartialEq)]
pub struct ApproxReport {
    /// Chordal (or absolute, for scalar fits) sup error on the evaluation sample.
    pub sup_error: f64,
    pub degree: usize,
    pub method: &'static str,
    pub target_reached: bool,
    /// One entry per degree: the least-squares residual for scalar fits, the
    /// best sup error so far for rational fits.
    pub history: Vec<f64>,
}

impl ApproxReport {
    pub fn check_target(&self, target: f64) -> Result<()> {
        if self.sup_error < target {
            Ok(())
        } else {
            Err(Error::TargetNotReached { degree: self.degree, error: self.sup_error, target })
        }
    }
}

/// `sup dist(a_i, b_i)`.
pub fn chordal_sup(a: &[CP1Point], b: &[CP1Point]) -> f64 {
    a.par_iter().zip(b).map(|(p, q)| dist_cp1(p, q)).reduce(|| 0.0, f64::max)
}

/// Evaluation points refining the given cells: each center plus the four
/// points at `(±h/4, ±h/4)`.
pub fn refined_points(grid: &GridSpec, cells: &[usize]) -> Vec<C64> {
    let q = grid.spacing() / 4.0;
    let offs = [C64::new(0.0, 0.0), C64::new(q, q), C64::new(-q, q), C64::new(q, -q), C64::new(-q, -q)];
    cells.iter().flat_map(|&c| offs.iter().map(move |o| grid.center(c) + o)).collect()
}
