//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use chdyn::energy::State;
use chdyn::geometry::{BulkField, Grid};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn quartic_d1(y: f64) -> f64 {
    y * y * y - y
}

pub fn quartic_d2(y: f64) -> f64 {
    3.0 * y * y - 1.0
}

pub struct DenseParams {
    pub dt: f64,
    pub alpha: f64,
    pub kappa: f64,
    pub s_bulk: f64,
    pub s_surf: f64,
}

/// One step of the linearly implicit scheme assembled node by node in real
/// space and solved densely. Unknowns per node: `φ` and, on interior rows,
/// `μ`; on boundary rows the second unknown is the lumped boundary potential
/// `(dy/2) μ + μ_Γ`.
pub fn dense_step(
    phi: &BulkField,
    g: &Grid,
    p: &DenseParams,
    fp: impl Fn(f64) -> f64,
    gp: impl Fn(f64) -> f64,
) -> BulkField {
    let (nx, ny) = (g.nx(), g.ny());
    let (dx, dy, dt) = (g.dx(), g.dy(), p.dt);
    let (cb, cs) = (p.s_bulk + p.alpha / dt, p.s_surf + p.alpha / dt);
    let n = nx * (ny + 1);
    let ph = |j: usize, i: usize| 2 * (j * nx + i);
    let mu = |j: usize, i: usize| 2 * (j * nx + i) + 1;
    let left = |i: usize| (i + nx - 1) % nx;
    let right = |i: usize| (i + 1) % nx;
    let (ix2, iy2) = (1.0 / (dx * dx), 1.0 / (dy * dy));

    let mut a = DMatrix::<f64>::zeros(2 * n, 2 * n);
    let mut b = DVector::<f64>::zeros(2 * n);
    for j in 0..=ny {
        for i in 0..nx {
            let old = phi.at(j, i);
            let (er, mr) = (ph(j, i), mu(j, i));
            if j > 0 && j < ny {
                // μ + Δφ - c_b φ = F'(φⁿ) - c_b φⁿ
                a[(er, mr)] = 1.0;
                a[(er, ph(j, i))] += -2.0 * ix2 - 2.0 * iy2 - cb;
                a[(er, ph(j, left(i)))] += ix2;
                a[(er, ph(j, right(i)))] += ix2;
                a[(er, ph(j - 1, i))] += iy2;
                a[(er, ph(j + 1, i))] += iy2;
                b[er] = fp(old) - cb * old;
                // φ - dt Δ_N μ = φⁿ, no flux into the boundary rows
                a[(mr, ph(j, i))] = 1.0;
                a[(mr, mu(j, i))] += 2.0 * dt * ix2;
                a[(mr, mu(j, left(i)))] -= dt * ix2;
                a[(mr, mu(j, right(i)))] -= dt * ix2;
                for jj in [j - 1, j + 1] {
                    if jj > 0 && jj < ny {
                        a[(mr, mu(j, i))] += dt * iy2;
                        a[(mr, mu(jj, i))] -= dt * iy2;
                    }
                }
                b[mr] = old;
            } else {
                let inner = if j == 0 { 1 } else { ny - 1 };
                let h = 0.5 * dy;
                // T = h(-D_xx φ + c_b(φ - φⁿ) + F'(φⁿ)) + (φ - φ_in)/dy
                //     - κ D_xx φ + φ + c_s(φ - φⁿ) + G'(φⁿ)
                let lap = (h + p.kappa) * ix2;
                a[(er, mr)] = 1.0;
                a[(er, ph(j, i))] -= 2.0 * lap + h * cb + 1.0 / dy + 1.0 + cs;
                a[(er, ph(j, left(i)))] += lap;
                a[(er, ph(j, right(i)))] += lap;
                a[(er, ph(inner, i))] += 1.0 / dy;
                b[er] = h * (fp(old) - cb * old) + gp(old) - cs * old;
                // ψ - dt D_xx T = ψⁿ
                a[(mr, ph(j, i))] = 1.0;
                a[(mr, mu(j, i))] += 2.0 * dt * ix2;
                a[(mr, mu(j, left(i)))] -= dt * ix2;
                a[(mr, mu(j, right(i)))] -= dt * ix2;
                b[mr] = old;
            }
        }
    }
    let x = a.lu().solve(&b).expect("dense system is nonsingular");
    let values = (0..n).map(|k| x[2 * k]).collect();
    BulkField::from_values(g, values).unwrap()
}

pub fn random_field(g: &Grid, seed: u64, mean: f64, amp: f64) -> BulkField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = (0..g.node_count())
        .map(|_| mean + amp * rng.gen_range(-1.0..1.0))
        .collect();
    BulkField::from_values(g, v).unwrap()
}

/// Trapezoid-in-`y` L² norm over the strip.
pub fn bulk_l2(f: &BulkField, g: &Grid) -> f64 {
    let mut s = 0.0;
    for j in 0..=g.ny() {
        let w = if j == 0 || j == g.ny() { 0.5 } else { 1.0 };
        s += w * f.row(j).iter().map(|v| v * v).sum::<f64>();
    }
    (s * g.dx() * g.dy()).sqrt()
}

pub fn diff(a: &BulkField, b: &BulkField) -> BulkField {
    a.lin_comb(1.0, b, -1.0)
}

/// Mean over interior rows and the two circle means, computed directly.
pub fn raw_means(s: &State, g: &Grid) -> (f64, f64, f64) {
    let interior: f64 = (1..g.ny()).flat_map(|j| s.phi.row(j).iter()).sum();
    let bot: f64 = s.phi.row(0).iter().sum();
    let top: f64 = s.phi.row(g.ny()).iter().sum();
    let nx = g.nx() as f64;
    (
        interior / (nx * (g.ny() - 1) as f64),
        bot / nx,
        top / nx,
    )
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
