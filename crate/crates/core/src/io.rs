//! File formats: PGM (P5) rasters, CSV tables and fields.
//!
//! PGM rows run from the top of the window (largest `y`) downwards. Floats
//! are written in Rust's shortest round-trip form so that reruns produce
//! byte-identical files.

use std::path::Path;

use crate::cauchy_green::ScalarField;
use crate::driver::StepReport;
use crate::planar_sets::{GridSpec, RasterSet};
use crate::{Error, Result, C64};

/// Binary greymap with the given row-major pixels.
pub fn pgm_bytes(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len(), width * height, "pixel count must match the image size");
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// `(width, height, pixels)` of a P5 image with maxval 255.
pub fn parse_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let bad = |m: &str| Error::Parse(format!("pgm: {m}"));
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header is not ASCII"))?);
    }
    if fields[0] != "P5" {
        return Err(bad("not a binary greymap"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header number"));
    let (w, h, max) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if max != 255 {
        return Err(bad("only maxval 255 is supported"));
    }
    let data = bytes.get(pos + 1..).ok_or_else(|| bad("missing pixel data"))?;
    if data.len() != w * h {
        return Err(bad("pixel count does not match the header"));
    }
    Ok((w, h, data.to_vec()))
}

fn raster(grid: &GridSpec, value: impl Fn(usize) -> u8) -> Vec<u8> {
    let n = grid.n();
    let mut px = Vec::with_capacity(n * n);
    for iy in (0..n).rev() {
        for ix in 0..n {
            px.push(value(grid.index(ix, iy)));
        }
    }
    pgm_bytes(n, n, &px)
}

/// Mask image: 255 inside the set, 0 outside.
pub fn mask_pgm(set: &RasterSet) -> Vec<u8> {
    raster(set.grid(), |c| if set.contains(c) { 255 } else { 0 })
}

/// Grey levels proportional to `values / max`, clamped to `[0, 255]`; cells
/// outside `region` stay black.
pub fn values_pgm(grid: &GridSpec, values: &[f64], region: &RasterSet) -> Vec<u8> {
    let max = region.cells().map(|c| values[c]).filter(|v| v.is_finite()).fold(0.0, f64::max);
    raster(grid, |c| {
        if !region.contains(c) || max == 0.0 {
            return 0;
        }
        let v = values[c];
        if !v.is_finite() {
            return 255;
        }
        (255.0 * (v / max).clamp(0.0, 1.0)).round() as u8
    })
}

/// Mask image of a set as P5, read back into a set on the same grid.
pub fn mask_from_pgm(grid: GridSpec, bytes: &[u8]) -> Result<RasterSet> {
    let (w, h, px) = parse_pgm(bytes)?;
    let n = grid.n();
    if w != n || h != n {
        return Err(Error::Parse(format!("pgm is {w}x{h}, grid is {n}x{n}")));
    }
    let mut mask = vec![false; grid.len()];
    for (row, iy) in (0..n).rev().enumerate() {
        for ix in 0..n {
            mask[grid.index(ix, iy)] = px[row * n + ix] >= 128;
        }
    }
    Ok(RasterSet::from_mask(grid, mask))
}

fn table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for r in rows {
        w.write_record(&r).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv output is UTF-8")
}

/// Complement components: `component_id, area_cells, touches_boundary`.
pub fn components_csv(set: &RasterSet) -> String {
    table(
        &["component_id", "area_cells", "touches_boundary"],
        set.complement_components()
            .iter()
            .map(|c| vec![c.id.to_string(), c.area_cells.to_string(), c.touches_boundary.to_string()]),
    )
}

/// A field on its support: `x, y, re, im` at the cell centers.
pub fn field_csv(g: &ScalarField) -> String {
    let grid = g.grid();
    table(
        &["x", "y", "re", "im"],
        g.cells().iter().zip(g.values()).map(|(&c, v)| {
            let z = grid.center(c);
            vec![z.re.to_string(), z.im.to_string(), v.re.to_string(), v.im.to_string()]
        }),
    )
}

/// Read `x, y, re, im` rows onto `grid`; each row lands in the cell holding
/// `(x, y)` and the support is the set of those cells.
pub fn field_from_csv(grid: GridSpec, text: &str) -> Result<ScalarField> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| Error::Parse(format!("field csv: {e}")))?.clone();
    if header.iter().collect::<Vec<_>>() != ["x", "y", "re", "im"] {
        return Err(Error::Parse("field csv: header must be x,y,re,im".into()));
    }
    let mut vals = vec![None; grid.len()];
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("field csv: {e}")))?;
        let num = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| Error::Parse(format!("field csv row {}: column {k} is not a number", line + 2)))
        };
        let z = C64::new(num(0)?, num(1)?);
        let cell = grid
            .cell_of(z)
            .ok_or_else(|| Error::Parse(format!("field csv row {}: ({}, {}) is outside the window", line + 2, z.re, z.im)))?;
        if vals[cell].is_some() {
            return Err(Error::Parse(format!("field csv row {}: cell {cell} given twice", line + 2)));
        }
        vals[cell] = Some(C64::new(num(2)?, num(3)?));
    }
    let support = RasterSet::from_mask(grid, vals.iter().map(Option::is_some).collect());
    let values = vals.into_iter().flatten().collect();
    ScalarField::new(support, values)
}

/// One checked quantity.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub quantity: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value < tolerance`.
    pub fn below(quantity: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { quantity: quantity.into(), value, tolerance, pass: value < tolerance }
    }
}

/// `quantity, value, tolerance, pass`
pub fn checks_csv(checks: &[Check]) -> String {
    table(
        &["quantity", "value", "tolerance", "pass"],
        checks
            .iter()
            .map(|c| vec![c.quantity.clone(), c.value.to_string(), c.tolerance.to_string(), c.pass.to_string()]),
    )
}

/// `iteration, defect`
pub fn history_csv(history: &[f64]) -> String {
    table(&["iteration", "defect"], history.iter().enumerate().map(|(i, d)| vec![i.to_string(), d.to_string()]))
}

/// Per-step table of a driver run.
pub fn steps_csv(steps: &[StepReport]) -> String {
    table(
        &[
            "step",
            "c",
            "dist_to_id",
            "deviation",
            "budget",
            "attempts",
            "degree",
            "fit_error",
            "k_cells",
            "delta",
            "picard_iterations",
            "composition_residual",
            "branch_gap",
            "cr_residual",
        ],
        steps.iter().map(|s| {
            vec![
                s.step.to_string(),
                s.c.to_string(),
                s.dist_to_id.to_string(),
                s.deviation.to_string(),
                s.budget.to_string(),
                s.attempts.to_string(),
                s.degree.to_string(),
                s.fit_error.to_string(),
                s.k_cells.to_string(),
                s.delta.to_string(),
                s.picard_iterations.to_string(),
                s.composition_residual.to_string(),
                s.branch_gap.to_string(),
                s.cr_residual.to_string(),
            ]
        }),
    )
}

/// Write `bytes` to `dir/name`, creating `dir`.
pub fn write_artifact(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), bytes)?;
    Ok(())
}
