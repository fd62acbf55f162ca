//! Periodic strip `[0, Lx) x [0, Ly]` and the discrete operators shared by
//! every other module.
//!
//! Nodes sit at `(x_i, y_j) = (i dx, j dy)` for `i in 0..nx` (periodic) and
//! `j in 0..=ny`. Rows `j = 0` and `j = ny` are the two boundary circles
//! `Γ_bot` and `Γ_top`; the trace of a bulk field is simply its boundary row.
//!
//! All integrals use one quadrature: periodic rectangle rule in `x` and the
//! composite trapezoid rule in `y`. The bulk Dirichlet energy uses forward
//! differences in `x` (weighted with the same trapezoid weights) and staggered
//! differences in `y`, which makes every summation-by-parts identity used by
//! the scheme exact.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Uniform node grid on the periodic strip.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    dx: f64,
    dy: f64,
}

/// One of the two boundary circles of the strip.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Circle {
    Bottom,
    Top,
}

impl Circle {
    pub const BOTH: [Circle; 2] = [Circle::Bottom, Circle::Top];

    /// Row index of the circle in a bulk field.
    pub fn row(self, g: &Grid) -> usize {
        match self {
            Circle::Bottom => 0,
            Circle::Top => g.ny,
        }
    }

    /// Row index of the first interior row next to the circle.
    pub fn inner_row(self, g: &Grid) -> usize {
        match self {
            Circle::Bottom => 1,
            Circle::Top => g.ny - 1,
        }
    }

    /// Row index two rows in from the circle.
    pub fn second_row(self, g: &Grid) -> usize {
        match self {
            Circle::Bottom => 2,
            Circle::Top => g.ny - 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Circle::Bottom => "bot",
            Circle::Top => "top",
        }
    }
}

/// `build_grid`: validates the resolution and extents.
pub fn build_grid(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Grid> {
    Grid::new(nx, ny, lx, ly)
}

impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 8 || !nx.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "nx = {nx} must be a power of two >= 8"
            )));
        }
        if ny < 8 {
            return Err(Error::InvalidGrid(format!("ny = {ny} must be >= 8")));
        }
        if !(lx.is_finite() && lx > 0.0) {
            return Err(Error::InvalidGrid(format!("lx = {lx} must be positive")));
        }
        if !(ly.is_finite() && ly > 0.0) {
            return Err(Error::InvalidGrid(format!("ly = {ly} must be positive")));
        }
        Ok(Grid {
            nx,
            ny,
            lx,
            ly,
            dx: lx / nx as f64,
            dy: ly / ny as f64,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    /// Number of y-cells; there are `ny + 1` node rows.
    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn rows(&self) -> usize {
        self.ny + 1
    }

    pub fn node_count(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    /// `|Ω| = Lx Ly`.
    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    /// `|Γ|`: both circles together.
    pub fn boundary_length(&self) -> f64 {
        2.0 * self.lx
    }

    /// Length of a single circle.
    pub fn circle_length(&self) -> f64 {
        self.lx
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.dy
    }

    /// Trapezoid factor of row `j` (1/2 on the boundary rows, 1 otherwise).
    pub fn row_factor(&self, j: usize) -> f64 {
        if j == 0 || j == self.ny {
            0.5
        } else {
            1.0
        }
    }

    /// Quadrature weight of node `(·, j)` in the bulk inner product.
    pub fn bulk_weight(&self, j: usize) -> f64 {
        self.row_factor(j) * self.dx * self.dy
    }

    /// Symbol of the periodic second difference for Fourier index `k`:
    /// `D_xx e^{2πikx/Lx} = -σ_k e^{2πikx/Lx}` with
    /// `σ_k = 4/dx² sin²(πk/nx)`.
    pub fn symbol(&self, k: usize) -> f64 {
        let s = (PI * k as f64 / self.nx as f64).sin();
        4.0 * s * s / (self.dx * self.dx)
    }
}

/// Scalar per grid node, stored row-major (`j * nx + i`).
#[derive(Clone, Debug, PartialEq)]
pub struct BulkField {
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

impl BulkField {
    pub fn zeros(g: &Grid) -> Self {
        Self::constant(g, 0.0)
    }

    pub fn constant(g: &Grid, c: f64) -> Self {
        BulkField {
            nx: g.nx,
            ny: g.ny,
            values: vec![c; g.node_count()],
        }
    }

    pub fn from_fn(g: &Grid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut out = Self::zeros(g);
        for j in 0..=g.ny {
            for i in 0..g.nx {
                out.values[j * g.nx + i] = f(g.x(i), g.y(j));
            }
        }
        out
    }

    pub fn from_values(g: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != g.node_count() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} values", g.node_count()),
                got: format!("{}", values.len()),
            });
        }
        Ok(BulkField {
            nx: g.nx,
            ny: g.ny,
            values,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, j: usize, i: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    #[inline]
    pub fn set(&mut self, j: usize, i: usize, v: f64) {
        self.values[j * self.nx + i] = v;
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.nx..(j + 1) * self.nx]
    }

    pub fn row_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.values[j * self.nx..(j + 1) * self.nx]
    }

    /// Boundary trace on one circle.
    pub fn trace(&self, c: Circle) -> TraceField {
        let j = match c {
            Circle::Bottom => 0,
            Circle::Top => self.ny,
        };
        TraceField {
            circle: c,
            values: self.row(j).to_vec(),
        }
    }

    pub fn set_trace(&mut self, t: &TraceField) {
        let j = match t.circle {
            Circle::Bottom => 0,
            Circle::Top => self.ny,
        };
        self.row_mut(j).copy_from_slice(&t.values);
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn check_shape(&self, g: &Grid) -> Result<()> {
        if self.nx != g.nx || self.ny != g.ny {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", g.nx, g.ny + 1),
                got: format!("{}x{}", self.nx, self.ny + 1),
            });
        }
        Ok(())
    }

    /// `a·self + b·other`.
    pub fn lin_comb(&self, a: f64, other: &BulkField, b: f64) -> BulkField {
        BulkField {
            nx: self.nx,
            ny: self.ny,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(u, v)| a * u + b * v)
                .collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> BulkField {
        BulkField {
            nx: self.nx,
            ny: self.ny,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &BulkField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Scalar per node of one boundary circle.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceField {
    pub circle: Circle,
    pub values: Vec<f64>,
}

impl TraceField {
    pub fn from_fn(g: &Grid, circle: Circle, f: impl Fn(f64) -> f64) -> Self {
        TraceField {
            circle,
            values: (0..g.nx).map(|i| f(g.x(i))).collect(),
        }
    }

    pub fn constant(g: &Grid, circle: Circle, c: f64) -> Self {
        TraceField {
            circle,
            values: vec![c; g.nx],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Periodic second difference of one row, written into `out`.
pub(crate) fn second_difference_x(row: &[f64], dx: f64, out: &mut [f64]) {
    let n = row.len();
    let inv = 1.0 / (dx * dx);
    for i in 0..n {
        let l = row[(i + n - 1) % n];
        let r = row[(i + 1) % n];
        out[i] = (l - 2.0 * row[i] + r) * inv;
    }
}

/// Five-point Laplacian on interior rows `1..ny`. The boundary rows of the
/// result are not defined by the stencil and are left at zero.
pub fn bulk_laplacian(f: &BulkField, g: &Grid) -> Result<BulkField> {
    f.check_shape(g)?;
    let nx = g.nx;
    let mut out = BulkField::zeros(g);
    let mut dxx = vec![0.0; nx];
    let idy2 = 1.0 / (g.dy * g.dy);
    for j in 1..g.ny {
        second_difference_x(f.row(j), g.dx, &mut dxx);
        let (lo, mid, hi) = (f.row(j - 1), f.row(j), f.row(j + 1));
        let o = out.row_mut(j);
        for i in 0..nx {
            o[i] = dxx[i] + (lo[i] - 2.0 * mid[i] + hi[i]) * idy2;
        }
    }
    Ok(out)
}

/// Laplace–Beltrami operator on a circle: periodic three-point stencil.
pub fn surface_laplacian(t: &TraceField, g: &Grid) -> Result<TraceField> {
    if t.len() != g.nx {
        return Err(Error::ShapeMismatch {
            expected: format!("{} trace values", g.nx),
            got: format!("{}", t.len()),
        });
    }
    let mut values = vec![0.0; g.nx];
    second_difference_x(&t.values, g.dx, &mut values);
    Ok(TraceField {
        circle: t.circle,
        values,
    })
}

/// Second-order one-sided outward normal derivative on one circle.
///
/// Exact for fields that are polynomials of degree at most two in `y`.
pub fn normal_derivative(f: &BulkField, g: &Grid, c: Circle) -> Result<TraceField> {
    f.check_shape(g)?;
    let (b, n1, n2) = (f.row(c.row(g)), f.row(c.inner_row(g)), f.row(c.second_row(g)));
    let s = 1.0 / (2.0 * g.dy);
    let values = (0..g.nx)
        .map(|i| (3.0 * b[i] - 4.0 * n1[i] + n2[i]) * s)
        .collect();
    Ok(TraceField { circle: c, values })
}

/// `∫_Ω f` with the trapezoid-in-y quadrature.
pub fn bulk_integral(f: &BulkField, g: &Grid) -> f64 {
    (0..=g.ny)
        .map(|j| g.bulk_weight(j) * f.row(j).iter().sum::<f64>())
        .sum()
}

/// `⟨f⟩_Ω`.
pub fn bulk_mean(f: &BulkField, g: &Grid) -> f64 {
    bulk_integral(f, g) / g.area()
}

/// `∫` over one circle.
pub fn surface_integral(t: &TraceField, g: &Grid) -> f64 {
    g.dx * t.values.iter().sum::<f64>()
}

/// Mean over one circle.
pub fn surface_mean(t: &TraceField, g: &Grid) -> f64 {
    surface_integral(t, g) / g.circle_length()
}

/// `⟨ψ⟩_Γ` over the whole boundary (both circles, length weighted).
pub fn boundary_mean(f: &BulkField, g: &Grid) -> f64 {
    Circle::BOTH
        .iter()
        .map(|&c| surface_integral(&f.trace(c), g))
        .sum::<f64>()
        / g.boundary_length()
}

/// Bulk Dirichlet form `∫_Ω |∇f|²`: forward x-differences with trapezoid
/// weights plus staggered y-differences on each cell.
pub fn bulk_grad_norm_sq(f: &BulkField, g: &Grid) -> f64 {
    let nx = g.nx;
    let mut sx = 0.0;
    for j in 0..=g.ny {
        let r = f.row(j);
        let s: f64 = (0..nx).map(|i| (r[(i + 1) % nx] - r[i]).powi(2)).sum();
        sx += g.row_factor(j) * s;
    }
    let mut sy = 0.0;
    for j in 0..g.ny {
        let (a, b) = (f.row(j), f.row(j + 1));
        sy += a.iter().zip(b).map(|(u, v)| (v - u).powi(2)).sum::<f64>();
    }
    sx * g.dy / g.dx + sy * g.dx / g.dy
}

/// Dirichlet form over the interior rows `1..ny` only: the norm of a
/// potential that lives on interior nodes with homogeneous Neumann closure.
pub fn interior_grad_norm_sq(f: &BulkField, g: &Grid) -> f64 {
    let nx = g.nx;
    let mut sx = 0.0;
    for j in 1..g.ny {
        let r = f.row(j);
        sx += (0..nx).map(|i| (r[(i + 1) % nx] - r[i]).powi(2)).sum::<f64>();
    }
    let mut sy = 0.0;
    for j in 1..g.ny - 1 {
        let (a, b) = (f.row(j), f.row(j + 1));
        sy += a.iter().zip(b).map(|(u, v)| (v - u).powi(2)).sum::<f64>();
    }
    sx * g.dy / g.dx + sy * g.dx / g.dy
}

/// `∫_{Γ_c} |∇_Γ t|²` with forward periodic differences.
pub fn surface_grad_norm_sq(t: &TraceField, g: &Grid) -> f64 {
    let n = t.len();
    let s: f64 = (0..n)
        .map(|i| (t.values[(i + 1) % n] - t.values[i]).powi(2))
        .sum();
    s / g.dx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> Grid {
        Grid::new(n, n, 1.0, 1.0).unwrap()
    }

    #[test]
    fn measures_of_unit_strip() {
        let g = Grid::new(64, 64, 1.0, 1.0).unwrap();
        assert_eq!(g.area(), 1.0);
        assert_eq!(g.boundary_length(), 2.0);
    }

    #[test]
    fn spacings() {
        let g = Grid::new(8, 8, 2.0, 1.0).unwrap();
        assert_eq!(g.dx(), 0.25);
        assert_eq!(g.dy(), 0.125);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(10, 8, 1.0, 1.0).is_err());
        assert!(Grid::new(4, 8, 1.0, 1.0).is_err());
        assert!(Grid::new(8, 7, 1.0, 1.0).is_err());
        assert!(Grid::new(8, 8, 0.0, 1.0).is_err());
        assert!(Grid::new(8, 8, 1.0, -2.0).is_err());
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let g = unit(16);
        let f = BulkField::constant(&g, 3.7);
        let l = bulk_laplacian(&f, &g).unwrap();
        for j in 1..g.ny() {
            assert!(l.row(j).iter().all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn laplacian_of_y_squared_is_two() {
        let g = unit(16);
        let f = BulkField::from_fn(&g, |_, y| y * y);
        let l = bulk_laplacian(&f, &g).unwrap();
        for j in 1..g.ny() {
            for &v in l.row(j) {
                assert!((v - 2.0).abs() < 1e-9, "{v}");
            }
        }
    }

    fn sine_laplacian_error(n: usize) -> f64 {
        let g = Grid::new(n, n, 2.0, 1.0).unwrap();
        let k = 2.0 * PI / g.lx();
        let f = BulkField::from_fn(&g, |x, _| (k * x).sin());
        let l = bulk_laplacian(&f, &g).unwrap();
        let mut err: f64 = 0.0;
        for j in 1..g.ny() {
            for i in 0..g.nx() {
                err = err.max((l.at(j, i) + k * k * (k * g.x(i)).sin()).abs());
            }
        }
        err
    }

    #[test]
    fn laplacian_converges_second_order() {
        let e: Vec<f64> = [16, 32, 64].iter().map(|&n| sine_laplacian_error(n)).collect();
        for w in e.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 2.0).abs() < 0.2, "order {order}");
        }
    }

    #[test]
    fn surface_laplacian_of_cosine() {
        let errs: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| {
                let g = Grid::new(n, 8, 1.0, 1.0).unwrap();
                let k = 2.0 * PI;
                let t = TraceField::from_fn(&g, Circle::Top, |x| (k * x).cos());
                let l = surface_laplacian(&t, &g).unwrap();
                (0..n)
                    .map(|i| (l.values[i] + k * k * (k * g.x(i)).cos()).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        for w in errs.windows(2) {
            assert!(((w[0] / w[1]).log2() - 2.0).abs() < 0.2);
        }
    }

    #[test]
    fn surface_laplacian_constant_and_conservative() {
        let g = unit(16);
        let t = TraceField::constant(&g, Circle::Bottom, 2.5);
        assert!(surface_laplacian(&t, &g)
            .unwrap()
            .values
            .iter()
            .all(|&v| v == 0.0));
        let t = TraceField::from_fn(&g, Circle::Bottom, |x| (x * 7.3).exp() + x.sin());
        let l = surface_laplacian(&t, &g).unwrap();
        let scale: f64 = l.values.iter().map(|v| v.abs()).sum::<f64>() * g.dx();
        assert!(surface_integral(&l, &g).abs() <= 1e-14 * scale);
    }

    #[test]
    fn normal_derivative_exactness() {
        let g = unit(16);
        let c = BulkField::constant(&g, 1.3);
        assert!(normal_derivative(&c, &g, Circle::Top)
            .unwrap()
            .values
            .iter()
            .all(|v| v.abs() < 1e-12));
        let lin = BulkField::from_fn(&g, |_, y| y);
        let top = normal_derivative(&lin, &g, Circle::Top).unwrap();
        assert!(top.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
        let quad = BulkField::from_fn(&g, |_, y| y * y);
        let bot = normal_derivative(&quad, &g, Circle::Bottom).unwrap();
        let top = normal_derivative(&quad, &g, Circle::Top).unwrap();
        assert!(bot.values.iter().all(|v| v.abs() < 1e-12));
        assert!(top.values.iter().all(|v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn means() {
        let g = Grid::new(16, 12, 3.0, 2.0).unwrap();
        let f = BulkField::constant(&g, 3.0);
        assert!((bulk_mean(&f, &g) - 3.0).abs() < 1e-14);
        let t = TraceField::from_fn(&g, Circle::Top, |x| (2.0 * PI * x / 3.0).cos());
        assert!(surface_mean(&t, &g).abs() < 1e-15);
        let mut h = BulkField::zeros(&g);
        h.row_mut(0).fill(1.0);
        h.row_mut(g.ny()).fill(3.0);
        assert!((boundary_mean(&h, &g) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn gradient_norm_of_sine() {
        let errs: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| {
                let g = Grid::new(n, n, 2.0, 1.5).unwrap();
                let k = 2.0 * PI / g.lx();
                let f = BulkField::from_fn(&g, |x, _| (k * x).sin());
                (bulk_grad_norm_sq(&f, &g) - k * k * g.area() / 2.0).abs()
            })
            .collect();
        for w in errs.windows(2) {
            assert!(((w[0] / w[1]).log2() - 2.0).abs() < 0.2);
        }
    }

    #[test]
    fn operators_are_linear() {
        let g = unit(16);
        let a = BulkField::from_fn(&g, |x, y| (3.0 * x).sin() * y.exp());
        let b = BulkField::from_fn(&g, |x, y| x * x + y.cos());
        let comb = a.lin_comb(2.5, &b, -1.25);
        let la = bulk_laplacian(&a, &g).unwrap();
        let lb = bulk_laplacian(&b, &g).unwrap();
        let lc = bulk_laplacian(&comb, &g).unwrap();
        assert!(lc.max_abs_diff(&la.lin_comb(2.5, &lb, -1.25)) < 1e-9);
        for c in Circle::BOTH {
            let na = normal_derivative(&a, &g, c).unwrap();
            let nb = normal_derivative(&b, &g, c).unwrap();
            let nc = normal_derivative(&comb, &g, c).unwrap();
            for i in 0..g.nx() {
                assert!((nc.values[i] - 2.5 * na.values[i] + 1.25 * nb.values[i]).abs() < 1e-10);
            }
        }
    }
}
