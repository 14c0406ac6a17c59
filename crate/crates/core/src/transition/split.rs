use rayon::prelude::*;

use super::gamma::{parameter_samples, GammaMap};
use crate::cauchy_green::Polydisc;
use crate::cousin::CousinOperator;
use crate::target_cp1::LieVector;
use crate::{Error, Result, C64};

/// Defect (max-coordinate norm) at which the Picard iteration stops.
pub const PICARD_TOLERANCE: f64 = 1e-11;
const MAX_PICARD_ITERS: usize = 60;
const CONTRACTION_FACTOR: f64 = 0.5;
/// Below this defect, rounding in the Newton solves dominates and the
/// per-round contraction test is no longer meaningful.
const CONTRACTION_FLOOR: f64 = 1e-9;

/// Admissible `dist_to_id`: `(1 - r0) ρ_W / (4 C_split)`.
pub fn splitting_delta(r0: f64, w: &Polydisc, c_split: f64) -> f64 {
    (1.0 - r0) * w.min_radius() / (4.0 * c_split)
}

/// `α(z, w) = (z, a(z, w))` on `A` and `β(z, w) = (z, b(z, w))` on `B`,
/// sampled at fixed parameters in `r0 · W`.
#[derive(Clone, Debug)]
pub struct SplitPair {
    pub samples: Vec<LieVector>,
    pub a_cells: Vec<usize>,
    pub b_cells: Vec<usize>,
    /// `a[s][j]` is `a(z_j, samples[s])` for `z_j = a_cells[j]`.
    pub a: Vec<Vec<LieVector>>,
    pub b: Vec<Vec<LieVector>>,
    /// `sup |g(z, a(z, w)) - b(z, w)|` over `K` and the samples.
    pub composition_residual: f64,
    /// Defect before each update.
    pub history: Vec<f64>,
    pub delta: f64,
    /// `sup |a - w|` and `sup |b - w|`, the larger of the two.
    pub deviation: f64,
}

impl SplitPair {
    pub fn iterations(&self) -> usize {
        self.history.len()
    }

    /// Largest ratio of consecutive defects above the rounding floor.
    pub fn worst_decay_ratio(&self) -> f64 {
        self.history
            .windows(2)
            .filter(|w| w[1] > CONTRACTION_FLOOR)
            .map(|w| w[1] / w[0])
            .fold(0.0, f64::max)
    }

    /// Index of the zero parameter among the samples.
    pub fn zero_sample(&self) -> Option<usize> {
        self.samples.iter().position(|t| *t == LieVector::ZERO)
    }
}

/// Split `γ` on the pair of `op` at the default parameter sample in `r0 W`.
pub fn split_gamma(gamma: &GammaMap, op: &CousinOperator, r0: f64) -> Result<SplitPair> {
    let samples = parameter_samples(gamma.domain(), r0);
    split_gamma_samples(gamma, op, r0, &samples)
}

fn lie_from(fields: &[Vec<C64>], s: usize, j: usize) -> LieVector {
    LieVector([fields[3 * s][j], fields[3 * s + 1][j], fields[3 * s + 2][j]])
}

/// Picard iteration `α <- α - 𝒜(d)`, `β <- β - ℬ(d)` with defect
/// `d = g(z, α) - β`, run independently at each parameter sample.
pub fn split_gamma_samples(
    gamma: &GammaMap,
    op: &CousinOperator,
    r0: f64,
    samples: &[LieVector],
) -> Result<SplitPair> {
    if !(r0 > 0.0 && r0 < 1.0) {
        return Err(Error::Precondition(format!("r0 = {r0} must lie in (0, 1)")));
    }
    if gamma.cells() != op.k_cells() {
        return Err(Error::Precondition("γ and the splitting operator live on different K".into()));
    }
    let domain = gamma.domain().clone();
    let delta = splitting_delta(r0, &domain, op.c_split());
    if gamma.dist_to_id() > delta {
        return Err(Error::NotContractive { dist: gamma.dist_to_id(), delta });
    }
    let inner = domain.scaled(r0);
    for w in samples {
        if inner.check(&w.0).is_err() && domain.check(&w.0).is_err() {
            return Err(Error::Precondition("parameter sample outside W".into()));
        }
    }
    let nk = gamma.cells().len();
    let ns = samples.len();
    let mut acc: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); nk]; 3 * ns];
    let mut alpha: Vec<Vec<LieVector>> = samples.iter().map(|w| vec![*w; nk]).collect();
    let mut beta = alpha.clone();
    let mut history = Vec::new();
    let radii = domain.radii.clone();
    loop {
        let defects: Vec<Vec<LieVector>> = (0..ns)
            .into_par_iter()
            .map(|s| {
                (0..nk)
                    .map(|j| {
                        let a = alpha[s][j];
                        for (k, r) in radii.iter().enumerate() {
                            if !(a.0[k].norm() < *r) {
                                return Err(Error::NotContractive { dist: gamma.dist_to_id(), delta });
                            }
                        }
                        Ok(gamma.eval(j, &a)? - beta[s][j])
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let defect = defects.iter().flatten().map(|d| d.max_norm()).fold(0.0, f64::max);
        let prev = history.last().copied();
        history.push(defect);
        if defect < PICARD_TOLERANCE {
            break;
        }
        if let Some(p) = prev {
            if defect > CONTRACTION_FLOOR && defect > CONTRACTION_FACTOR * p {
                return Err(Error::NotContractive { dist: gamma.dist_to_id(), delta });
            }
        }
        if history.len() > MAX_PICARD_ITERS {
            if defect > CONTRACTION_FLOOR {
                return Err(Error::NotContractive { dist: gamma.dist_to_id(), delta });
            }
            break;
        }
        for (s, ds) in defects.iter().enumerate() {
            for (j, d) in ds.iter().enumerate() {
                for k in 0..3 {
                    acc[3 * s + k][j] += d.0[k];
                }
            }
        }
        let refs: Vec<&[C64]> = acc.iter().map(|v| v.as_slice()).collect();
        let split = op.split_on_k(&refs);
        let (a_parts, b_parts): (Vec<Vec<C64>>, Vec<Vec<C64>>) = split.into_iter().unzip();
        for (s, w) in samples.iter().enumerate() {
            for j in 0..nk {
                alpha[s][j] = *w - lie_from(&a_parts, s, j);
                beta[s][j] = *w - lie_from(&b_parts, s, j);
            }
        }
    }
    let composition_residual = *history.last().expect("at least one round");

    let pair = op.pair();
    let a_cells = pair.a.cell_list();
    let b_cells = pair.b.cell_list();
    let refs: Vec<&[C64]> = acc.iter().map(|v| v.as_slice()).collect();
    let (a_parts, b_parts): (Vec<Vec<C64>>, Vec<Vec<C64>>) =
        op.split_on(&refs, &a_cells, &b_cells).into_iter().unzip();
    let mut deviation: f64 = 0.0;
    let mut a = Vec::with_capacity(ns);
    let mut b = Vec::with_capacity(ns);
    for (s, w) in samples.iter().enumerate() {
        let av: Vec<LieVector> = (0..a_cells.len()).map(|j| *w - lie_from(&a_parts, s, j)).collect();
        let bv: Vec<LieVector> = (0..b_cells.len()).map(|j| *w - lie_from(&b_parts, s, j)).collect();
        for v in av.iter().chain(&bv) {
            deviation = deviation.max((*v - *w).max_norm());
        }
        a.push(av);
        b.push(bv);
    }
    Ok(SplitPair {
        samples: samples.to_vec(),
        a_cells,
        b_cells,
        a,
        b,
        composition_residual,
        history,
        delta,
        deviation,
    })
}
