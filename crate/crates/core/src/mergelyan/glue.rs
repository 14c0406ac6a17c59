use rayon::prelude::*;

use super::{CP1Map, SampledMap};
use crate::planar_sets::{GridSpec, RasterSet};
use crate::target_cp1::{dist_cp1, CP1Point};
use crate::{Error, Result};

/// Chordal radius within which the straight segment between two sphere
/// points stays away from the origin.
pub const TUBULAR_RADIUS: f64 = 0.5;
/// Width of the blending band around the glued set, in cells.
pub const GLUE_BAND_CELLS: f64 = 3.0;

#[derive(Clone, Debug, PartialEq)]
pub struct GlueReport {
    /// `sup_E dist(f, g)`.
    pub max_distance: f64,
    /// Smallest `|f + s χ (g - f)|` in `R^3` over the band and `s ∈ [0, 1]`.
    pub min_homotopy_norm: f64,
    /// Cells strictly between `E` and the outside of the band.
    pub band_cells: usize,
    /// Largest chordal distance between 4-neighbours of the output.
    pub max_jump: f64,
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Largest chordal jump between 4-neighbours.
pub(crate) fn max_jump(grid: &GridSpec, values: &[CP1Point]) -> f64 {
    (0..grid.len())
        .into_par_iter()
        .map(|c| grid.neighbors4(c).filter(|&d| d > c).map(|d| dist_cp1(&values[c], &values[d])).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max)
}

/// Glue `g` (given on `E`) into the total map `f`.
///
/// On the sphere, `v = f + χ · δ` with `δ` a tent-weighted average of
/// `g - f` over nearby cells of `E` and `χ = max(0, 1 - d_E / (band h))`,
/// then `v / |v|`. The output is `g` on `E` and `f` outside the band, both
/// bit-exactly.
pub fn continuous_glue(f: &CP1Map, g: &CP1Map, e: &RasterSet, r: f64) -> Result<(SampledMap, GlueReport)> {
    let grid = *e.grid();
    let h = grid.spacing();
    let fv: Vec<CP1Point> = f.sample(&grid).values().to_vec();
    let cells = e.cell_list();
    let gv: Vec<CP1Point> = g.eval_cells(&grid, &cells);
    let mut max_distance: f64 = 0.0;
    let mut g_at = vec![None; grid.len()];
    for (&c, q) in cells.iter().zip(&gv) {
        let d = dist_cp1(&fv[c], q);
        if !(d < r) {
            return Err(Error::MapsTooFar { distance: d, radius: r }.at_cell(c));
        }
        max_distance = max_distance.max(d);
        g_at[c] = Some(*q);
    }

    let band = GLUE_BAND_CELLS * h;
    let reach = GLUE_BAND_CELLS.ceil() as isize;
    let dist = e.distance_field(&(0..grid.len()).collect::<Vec<_>>());
    let blended: Vec<(CP1Point, f64, bool)> = (0..grid.len())
        .into_par_iter()
        .map(|c| {
            if let Some(q) = g_at[c] {
                return (q, 1.0, false);
            }
            let chi = (1.0 - dist[c] / band).max(0.0);
            if chi == 0.0 {
                return (fv[c], 1.0, false);
            }
            let z = grid.center(c);
            let mut acc = [0.0; 3];
            let mut wsum = 0.0;
            for dy in -reach..=reach {
                for dx in -reach..=reach {
                    let Some(o) = grid.offset(c, dx, dy) else { continue };
                    let Some(q) = g_at[o] else { continue };
                    let w = (1.0 - (grid.center(o) - z).norm() / (band + h)).max(0.0);
                    let d = sub(q.to_sphere(), fv[o].to_sphere());
                    for k in 0..3 {
                        acc[k] += w * d[k];
                    }
                    wsum += w;
                }
            }
            if wsum == 0.0 {
                return (fv[c], 1.0, false);
            }
            let a = fv[c].to_sphere();
            let b = [chi * acc[0] / wsum, chi * acc[1] / wsum, chi * acc[2] / wsum];
            let bb = dot(b, b);
            let s = if bb > 0.0 { (-dot(a, b) / bb).clamp(0.0, 1.0) } else { 0.0 };
            let m = [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
            let v = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
            let p = CP1Point::from_sphere(v).unwrap_or(fv[c]);
            (p, dot(m, m).sqrt(), true)
        })
        .collect();
    let min_homotopy_norm = blended.iter().map(|b| b.1).fold(f64::INFINITY, f64::min);
    let band_cells = blended.iter().filter(|b| b.2).count();
    let values: Vec<CP1Point> = blended.into_iter().map(|b| b.0).collect();
    let report = GlueReport { max_distance, min_homotopy_norm, band_cells, max_jump: max_jump(&grid, &values) };
    Ok((SampledMap::from_values(grid, values)?, report))
}

/// Discrete sphere-valued harmonic extension: cells of `region` outside
/// `fixed` are repeatedly replaced by the normalized sum of their
/// 4-neighbours, starting from `values`.
pub fn relax_extension(values: &mut [CP1Point], grid: &GridSpec, fixed: &RasterSet, region: &RasterSet, iterations: usize) {
    let free: Vec<usize> = region.cells().filter(|&c| !fixed.contains(c)).collect();
    let mut sphere: Vec<[f64; 3]> = values.iter().map(|p| p.to_sphere()).collect();
    for _ in 0..iterations {
        let updates: Vec<[f64; 3]> = free
            .par_iter()
            .map(|&c| {
                let mut acc = [0.0; 3];
                for d in grid.neighbors4(c) {
                    for k in 0..3 {
                        acc[k] += sphere[d][k];
                    }
                }
                let n = dot(acc, acc).sqrt();
                if n > 1e-12 {
                    [acc[0] / n, acc[1] / n, acc[2] / n]
                } else {
                    sphere[c]
                }
            })
            .collect();
        let mut change: f64 = 0.0;
        for (&c, u) in free.iter().zip(updates) {
            change = change.max(dot(sub(u, sphere[c]), sub(u, sphere[c])));
            sphere[c] = u;
        }
        if change.sqrt() < 1e-10 {
            break;
        }
    }
    for &c in &free {
        if let Some(p) = CP1Point::from_sphere(sphere[c]) {
            values[c] = p;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mergelyan::RationalMap;
    use crate::C64;

    fn setup() -> (GridSpec, RasterSet, CP1Map) {
        let g = GridSpec::new(2.0, 0.05).unwrap();
        let e = RasterSet::centered_disc(g, 1.0);
        let f: CP1Map = SampledMap::from_fn(g, |z| CP1Point::from_chart(z * 0.7)).into();
        (g, e, f)
    }

    #[test]
    fn gluing_f_into_itself_is_the_identity() {
        let (g, e, f) = setup();
        let (out, rep) = continuous_glue(&f, &f, &e, TUBULAR_RADIUS).unwrap();
        let fv = f.sample(&g);
        for c in 0..g.len() {
            let d = dist_cp1(&out.value(c), &fv.value(c));
            assert!(d < 1e-15, "{d}");
        }
        assert_eq!(rep.max_distance, 0.0);
    }

    #[test]
    fn small_perturbation_is_exact_on_e_and_outside_the_band() {
        let (g, e, f) = setup();
        let gmap: CP1Map = SampledMap::from_fn(g, |z| CP1Point::from_chart(z * 0.7 + C64::new(0.05, 0.02) * z * z)).into();
        let (out, rep) = continuous_glue(&f, &gmap, &e, TUBULAR_RADIUS).unwrap();
        let fv = f.sample(&g);
        let gv = gmap.sample(&g);
        let band = e.dilate(GLUE_BAND_CELLS as usize + 1);
        for c in 0..g.len() {
            if e.contains(c) {
                assert_eq!(out.value(c), gv.value(c));
            } else if !band.contains(c) {
                assert_eq!(out.value(c), fv.value(c));
            }
        }
        assert!(rep.band_cells > 0);
        assert!(rep.min_homotopy_norm >= 1.0 - 2.0 * rep.max_distance);
        // neighbour jumps stay at the scale of the perturbation per band cell
        let base = max_jump(&g, fv.values());
        assert!(rep.max_jump < base + rep.max_distance, "{} vs {}", rep.max_jump, base);
    }

    #[test]
    fn antipodal_maps_are_rejected() {
        let (_, e, f) = setup();
        let anti: CP1Map = RationalMap::from_coefficients(vec![C64::new(-1.0, 0.0)], vec![C64::new(0.0, 0.0), C64::new(0.7, 0.0)])
            .unwrap()
            .into();
        // [-1 : 0.7 z] is infinity at z = 0, where f vanishes
        let r = continuous_glue(&f, &anti, &e, TUBULAR_RADIUS);
        assert!(matches!(r.unwrap_err().root(), Error::MapsTooFar { .. }));
    }

    #[test]
    fn relaxation_fills_a_gap_smoothly() {
        let g = GridSpec::new(1.0, 0.05).unwrap();
        let fixed = RasterSet::from_predicate(g, |z| z.re.abs() > 0.6);
        let region = RasterSet::full(g);
        let mut values: Vec<CP1Point> = (0..g.len())
            .map(|c| {
                let z = g.center(c);
                if z.re > 0.6 { CP1Point::from_chart(C64::new(0.5, 0.0)) } else if z.re < -0.6 { CP1Point::zero() } else { CP1Point::infinity() }
            })
            .collect();
        relax_extension(&mut values, &g, &fixed, &region, 5000);
        assert!(max_jump(&g, &values) < 0.05);
    }
}
