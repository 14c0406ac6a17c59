use crate::planar_sets::GridSpec;
use crate::C64;

/// Offsets (in cells, max norm) up to which the exact cell integral is used.
pub const EXACT_RADIUS_CELLS: f64 = 2.0;

/// Mixed antiderivative of `x / (x^2 + y^2)`.
fn p_anti(x: f64, y: f64) -> f64 {
    let r2 = x * x + y * y;
    if r2 == 0.0 {
        return 0.0;
    }
    let t = if x != 0.0 { x * (y / x).atan() } else { 0.0 };
    0.5 * y * r2.ln() + t - y
}

/// `∫∫ dx dy / (x + iy)` over `[x0,x1] x [y0,y1]`.
fn rect_integral(x0: f64, x1: f64, y0: f64, y1: f64) -> C64 {
    let corner = |f: &dyn Fn(f64, f64) -> f64| f(x1, y1) - f(x0, y1) - f(x1, y0) + f(x0, y0);
    let re = corner(&p_anti);
    let im = corner(&|x, y| p_anti(y, x));
    C64::new(re, -im)
}

/// `∫∫_cell dA(ξ) / (d - ξ)` for the unit cell centered at 0.
pub fn exact_unit_kernel(d: C64) -> C64 {
    // with w = ξ - d the integrand is -1/w over the shifted cell
    -rect_integral(-0.5 - d.re, 0.5 - d.re, -0.5 - d.im, 0.5 - d.im)
}

/// `∫∫_cell dA(ξ) / (z - ξ)` for a cell of side `h` centered at `z - d`:
/// exact near the singularity, midpoint rule `h^2 / d` beyond two cells.
pub fn cell_kernel(d: C64, h: f64) -> C64 {
    let u = d / h;
    if u.re.abs() <= EXACT_RADIUS_CELLS + 0.5 && u.im.abs() <= EXACT_RADIUS_CELLS + 0.5 {
        exact_unit_kernel(u) * h
    } else {
        h * h / d
    }
}

/// Kernel values for every on-grid offset, indexed by `(dx, dy)` in
/// `[-(n-1), n-1]^2`.
#[derive(Clone, Debug)]
pub struct KernelTable {
    grid: GridSpec,
    span: usize,
    values: Vec<C64>,
}

impl KernelTable {
    pub fn new(grid: GridSpec) -> Self {
        let n = grid.n();
        let span = 2 * n - 1;
        let h = grid.spacing();
        let mut values = Vec::with_capacity(span * span);
        for iy in 0..span {
            for ix in 0..span {
                let dx = ix as f64 - (n - 1) as f64;
                let dy = iy as f64 - (n - 1) as f64;
                values.push(cell_kernel(C64::new(dx * h, dy * h), h));
            }
        }
        Self { grid, span, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Kernel for evaluation cell `dst` and source cell `src`.
    #[inline]
    pub fn get(&self, dst: usize, src: usize) -> C64 {
        let (ax, ay) = self.grid.coords(dst);
        let (bx, by) = self.grid.coords(src);
        let n1 = self.grid.n() - 1;
        let ix = ax + n1 - bx;
        let iy = ay + n1 - by;
        self.values[iy * self.span + ix]
    }

    /// Row of the table for a fixed vertical offset; used by the inner loop.
    #[inline]
    pub(crate) fn row(&self, dy: isize) -> &[C64] {
        let n1 = (self.grid.n() - 1) as isize;
        let iy = (dy + n1) as usize;
        &self.values[iy * self.span..(iy + 1) * self.span]
    }
}
