//! Per-wavenumber implicit operator.
//!
//! Unknowns are interleaved along `y`: slot `2j` holds `φ̂_j`, slot `2j + 1`
//! holds `μ̂_j`. On the two boundary rows the second slot carries the surface
//! transport potential `μ̂_Γ + (dy/2) μ̂` instead. Equation `2j` defines the
//! chemical potential of row `j`, equation `2j + 1` its mass balance.

use super::banded::{BandLu, BandMatrix};
use super::SolverParams;
use crate::energy::Model;
use crate::error::{Error, Result};
use crate::geometry::Grid;

/// Factored implicit operator for one `x`-wavenumber.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeSystem {
    pub k: usize,
    pub sigma: f64,
    pub dt: f64,
    matrix: BandMatrix,
    lu: BandLu,
}

impl ModeSystem {
    pub fn size(&self) -> usize {
        self.matrix.n()
    }

    pub fn matrix(&self) -> &BandMatrix {
        &self.matrix
    }

    pub fn apply<T>(&self, x: &[T], out: &mut [T])
    where
        T: Copy + Default + std::ops::AddAssign + std::ops::Mul<f64, Output = T>,
    {
        self.matrix.mul_vec(x, out)
    }

    pub fn solve_in_place<T>(&self, b: &mut [T])
    where
        T: Copy
            + std::ops::SubAssign
            + std::ops::Mul<f64, Output = T>
            + std::ops::Div<f64, Output = T>,
    {
        self.lu.solve_in_place(b)
    }
}

/// Coefficients shared by the time-dependent and elliptic operators.
pub(crate) fn implicit_matrix(sigma: f64, p: &SolverParams, kappa: f64, g: &Grid) -> BandMatrix {
    let ny = g.ny();
    let n = 2 * (ny + 1);
    let dy = g.dy();
    let idy2 = 1.0 / (dy * dy);
    let (cb, cs) = (p.bulk_shift(), p.surf_shift());
    let dt = p.dt;
    let mut a = BandMatrix::zeros(n, 2, 2);

    for j in 1..ny {
        let (r, m) = (2 * j, 2 * j + 1);
        a.set(r, 2 * j + 1, 1.0);
        a.set(r, 2 * j, -(sigma + cb) - 2.0 * idy2);
        a.set(r, 2 * j - 2, idy2);
        a.set(r, 2 * j + 2, idy2);

        a.set(m, 2 * j, 1.0);
        let mut diag = dt * sigma;
        if j > 1 {
            a.set(m, 2 * j - 1, -dt * idy2);
            diag += dt * idy2;
        }
        if j + 1 < ny {
            a.set(m, 2 * j + 3, -dt * idy2);
            diag += dt * idy2;
        }
        a.set(m, 2 * j + 1, diag);
    }

    for (b, inner) in [(0, 1), (ny, ny - 1)] {
        let (r, m) = (2 * b, 2 * b + 1);
        a.set(r, 2 * b + 1, 1.0);
        a.set(
            r,
            2 * b,
            -(0.5 * dy * (sigma + cb) + 1.0 / dy + kappa * sigma + 1.0 + cs),
        );
        a.set(r, 2 * inner, 1.0 / dy);
        a.set(m, 2 * b, 1.0);
        a.set(m, 2 * b + 1, dt * sigma);
    }
    a
}

/// `assemble_mode_system`: builds and factors the operator for wavenumber
/// `k`. Modes `k` and `Nx - k` share one operator.
pub fn assemble_mode_system(
    k: usize,
    p: &SolverParams,
    model: &Model,
    g: &Grid,
) -> Result<ModeSystem> {
    if k >= g.nx() {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: format!("wavenumber {k} outside 0..{}", g.nx()),
        });
    }
    p.validate()?;
    let sigma = g.symbol(k);
    let matrix = implicit_matrix(sigma, p, model.kappa, g);
    let lu = matrix
        .clone()
        .factor()
        .map_err(|(row, pivot)| Error::SingularSystem { k, row, pivot })?;
    Ok(ModeSystem {
        k,
        sigma,
        dt: p.dt,
        matrix,
        lu,
    })
}

/// Factored operator of the stationary linear problem
/// `-Δφ = h₁`, `-κΔ_Γψ + ψ + ∂ₙφ = h₂` for one wavenumber. Unknowns are
/// `φ̂_0 ..= φ̂_Ny`.
pub(crate) fn elliptic_mode(k: usize, kappa: f64, g: &Grid) -> Result<BandLu> {
    let ny = g.ny();
    let dy = g.dy();
    let idy2 = 1.0 / (dy * dy);
    let sigma = g.symbol(k);
    let mut a = BandMatrix::zeros(ny + 1, 1, 1);
    for j in 1..ny {
        a.set(j, j - 1, -idy2);
        a.set(j, j, sigma + 2.0 * idy2);
        a.set(j, j + 1, -idy2);
    }
    for (b, inner) in [(0, 1), (ny, ny - 1)] {
        a.set(b, b, kappa * sigma + 1.0 + 1.0 / dy + 0.5 * dy * sigma);
        a.set(b, inner, -1.0 / dy);
    }
    a.factor()
        .map_err(|(row, pivot)| Error::SingularSystem { k, row, pivot })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (Grid, Model, SolverParams) {
        (
            Grid::new(16, 12, 2.0, 1.0).unwrap(),
            Model::quartic(0.1).unwrap(),
            SolverParams::default(),
        )
    }

    #[test]
    fn zero_mode_conserves_mass() {
        let (g, m, p) = setup();
        let sys = assemble_mode_system(0, &p, &m, &g).unwrap();
        let a = sys.matrix();
        let n = sys.size();
        // The interior mass rows sum to the identity on φ; the flux part cancels.
        for col in 0..n {
            let s: f64 = (1..g.ny()).map(|j| a.get(2 * j + 1, col)).sum();
            let want = if col % 2 == 0 && col / 2 >= 1 && col / 2 < g.ny() {
                1.0
            } else {
                0.0
            };
            assert!((s - want).abs() < 1e-12, "col {col}: {s}");
        }
        // constants: φ ≡ 1, μ ≡ 0 maps to φ in the mass rows
        let mut x = vec![0.0; n];
        for j in 0..=g.ny() {
            x[2 * j] = 1.0;
        }
        let mut y = vec![0.0; n];
        sys.apply(&x, &mut y);
        for j in 0..=g.ny() {
            assert!((y[2 * j + 1] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn assembly_is_deterministic() {
        let (g, m, p) = setup();
        for k in [0, 3, 8] {
            let a = assemble_mode_system(k, &p, &m, &g).unwrap();
            let b = assemble_mode_system(k, &p, &m, &g).unwrap();
            assert_eq!(a, b);
        }
        let a = assemble_mode_system(3, &p, &m, &g).unwrap();
        let b = assemble_mode_system(13, &p, &m, &g).unwrap();
        assert_eq!(a.matrix(), b.matrix());
    }

    #[test]
    fn solve_inverts_apply() {
        let (g, _, p) = setup();
        let m = Model::quartic(0.0).unwrap();
        for k in 0..g.nx() {
            let sys = assemble_mode_system(k, &p, &m, &g).unwrap();
            let x: Vec<f64> = (0..sys.size()).map(|i| (i as f64 * 0.7).sin()).collect();
            let mut b = vec![0.0; sys.size()];
            sys.apply(&x, &mut b);
            sys.solve_in_place(&mut b);
            let err = x.iter().zip(&b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
            assert!(err < 1e-9, "k = {k}: {err}");
        }
    }

    #[test]
    fn rejects_bad_wavenumber() {
        let (g, m, p) = setup();
        assert!(assemble_mode_system(16, &p, &m, &g).is_err());
    }
}
