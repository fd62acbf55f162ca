use chdyn::geometry::{BulkField, Circle, Grid, TraceField};
use chdyn::solver::solve_elliptic;
use std::f64::consts::PI;

/// `φ = cos(2πx/Lx) e^y`: `-Δφ = (k² - 1)φ`, `∂ₙφ = ∓φ` on the bottom/top
/// circle, so `h₂ = κk²ψ + ψ ∓ ψ`.
fn max_error(n: usize, kappa: f64) -> (f64, f64) {
    let (lx, ly) = (1.0, 0.7);
    let k = 2.0 * PI / lx;
    let exact = |x: f64, y: f64| (k * x).cos() * y.exp();
    let g = Grid::new(n, n, lx, ly).unwrap();
    let h1 = BulkField::from_fn(&g, |x, y| (k * k - 1.0) * exact(x, y));
    let h2 = |c: Circle, sign: f64| {
        let y = if c == Circle::Bottom { 0.0 } else { ly };
        TraceField::from_fn(&g, c, |x| (kappa * k * k + 1.0 + sign) * exact(x, y))
    };
    let phi = solve_elliptic(&h1, &h2(Circle::Bottom, -1.0), &h2(Circle::Top, 1.0), kappa, &g).unwrap();
    let ex = BulkField::from_fn(&g, exact);
    let bulk = phi.max_abs_diff(&ex);
    let surf = Circle::BOTH
        .iter()
        .flat_map(|&c| {
            let (a, b) = (phi.trace(c), ex.trace(c));
            a.values.into_iter().zip(b.values).map(|(u, v)| (u - v).abs())
        })
        .fold(0.0, f64::max);
    (bulk, surf)
}

#[test]
fn flux_carrying_solution_converges_at_second_order() {
    for kappa in [0.0, 0.05, 2.0] {
        let errs: Vec<(f64, f64)> = [16, 32, 64, 128].iter().map(|&n| max_error(n, kappa)).collect();
        for w in errs.windows(2) {
            let ob = (w[0].0 / w[1].0).log2();
            let os = (w[0].1 / w[1].1).log2();
            assert!((ob - 2.0).abs() < 0.2, "κ = {kappa}: bulk order {ob}");
            assert!((os - 2.0).abs() < 0.2, "κ = {kappa}: surface order {os}");
        }
    }
}

#[test]
fn superposition() {
    let g = Grid::new(16, 12, 2.0, 1.0).unwrap();
    let h1a = BulkField::from_fn(&g, |x, y| (PI * x).sin() + y);
    let h1b = BulkField::from_fn(&g, |x, y| (x * y).cos());
    let ta = TraceField::from_fn(&g, Circle::Bottom, |x| (2.0 * PI * x).cos());
    let tb = TraceField::from_fn(&g, Circle::Bottom, |x| x * x);
    let top = TraceField::constant(&g, Circle::Top, 0.3);
    let zero = TraceField::constant(&g, Circle::Top, 0.0);
    let a = solve_elliptic(&h1a, &ta, &top, 0.1, &g).unwrap();
    let b = solve_elliptic(&h1b, &tb, &zero, 0.1, &g).unwrap();
    let sum_b = TraceField {
        circle: Circle::Bottom,
        values: ta.values.iter().zip(&tb.values).map(|(u, v)| 2.0 * u - 3.0 * v).collect(),
    };
    let c = solve_elliptic(&h1a.lin_comb(2.0, &h1b, -3.0), &sum_b, &top.clone_scaled(2.0), 0.1, &g).unwrap();
    assert!(c.max_abs_diff(&a.lin_comb(2.0, &b, -3.0)) < 1e-11);
}

trait Scaled {
    fn clone_scaled(&self, s: f64) -> TraceField;
}

impl Scaled for TraceField {
    fn clone_scaled(&self, s: f64) -> TraceField {
        TraceField {
            circle: self.circle,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }
}
