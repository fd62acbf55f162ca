//! Time stepping via per-mode banded solves.

use std::collections::HashMap;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::mode::{assemble_mode_system, ModeSystem};
use super::SolverParams;
use crate::energy::{total_energy, Model, State};
use crate::error::{Error, Result};
use crate::geometry::{BulkField, Grid};

/// Forward and inverse DFT along `x`, applied row by row.
#[derive(Clone)]
pub(crate) struct XTransform {
    nx: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl XTransform {
    pub(crate) fn new(nx: usize) -> Self {
        let mut planner = FftPlanner::new();
        XTransform {
            nx,
            fwd: planner.plan_fft_forward(nx),
            inv: planner.plan_fft_inverse(nx),
        }
    }

    pub(crate) fn forward(&self, row: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = row.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    pub(crate) fn inverse(&self, mut buf: Vec<Complex64>, out: &mut [f64]) {
        self.inv.process(&mut buf);
        let scale = 1.0 / self.nx as f64;
        for (o, c) in out.iter_mut().zip(&buf) {
            *o = c.re * scale;
        }
    }
}

/// Outcome of one accepted step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    pub halvings: usize,
    pub energy_before: f64,
    pub energy_after: f64,
    /// Max over modes of `‖A x - b‖∞ / ‖b‖∞`.
    pub residual: f64,
    pub m_bulk: f64,
    pub m_bot: f64,
    pub m_top: f64,
}

/// Stepper for one trajectory. Factorizations are cached per time step.
pub struct Stepper {
    grid: Grid,
    model: Model,
    params: SolverParams,
    xt: XTransform,
    cache: HashMap<u64, Vec<ModeSystem>>,
}

impl Stepper {
    pub fn new(grid: Grid, model: Model, params: SolverParams) -> Result<Self> {
        params.validate()?;
        let xt = XTransform::new(grid.nx());
        Ok(Stepper {
            grid,
            model,
            params,
            xt,
            cache: HashMap::new(),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    /// Mode systems for `k = 0 ..= Nx/2` at step `dt`.
    pub fn mode_systems(&mut self, dt: f64) -> Result<&[ModeSystem]> {
        let key = dt.to_bits();
        if !self.cache.contains_key(&key) {
            if self.cache.len() >= 8 {
                self.cache.clear();
            }
            let p = self.params.with_dt(dt);
            let systems = (0..=self.grid.nx() / 2)
                .map(|k| assemble_mode_system(k, &p, &self.model, &self.grid))
                .collect::<Result<Vec<_>>>()?;
            self.cache.insert(key, systems);
        }
        Ok(&self.cache[&key])
    }

    /// One linearly implicit step of size `dt`, without the energy check.
    /// Returns the new state and the linear-solve residual.
    pub fn advance(&mut self, s: &State, dt: f64) -> Result<(State, f64)> {
        s.phi.check_shape(&self.grid)?;
        if !s.phi.is_finite() {
            return Err(Error::NonFinite("state"));
        }
        let g = self.grid.clone();
        let (nx, ny) = (g.nx(), g.ny());
        let p = self.params.with_dt(dt);
        let (cb, cs) = (p.bulk_shift(), p.surf_shift());
        let half = 0.5 * g.dy();
        let f = &self.model.bulk;
        let gs = &self.model.surface;

        let mut mu_rhs = vec![0.0; nx];
        let mut rhs_hat = Vec::with_capacity(2 * (ny + 1));
        for j in 0..=ny {
            let row = s.phi.row(j);
            let boundary = j == 0 || j == ny;
            for (o, &v) in mu_rhs.iter_mut().zip(row) {
                let bulk = f.d1(v) - cb * v;
                *o = if boundary {
                    half * bulk + gs.d1(v) - cs * v
                } else {
                    bulk
                };
            }
            rhs_hat.push(self.xt.forward(&mu_rhs));
            rhs_hat.push(self.xt.forward(row));
        }

        let xt = self.xt.clone();
        let systems = self.mode_systems(dt)?;
        let n = 2 * (ny + 1);
        let mut phi_hat = vec![vec![Complex64::default(); nx]; ny + 1];
        let mut b = vec![Complex64::default(); n];
        let mut ab = vec![Complex64::default(); n];
        let mut residual: f64 = 0.0;
        for sys in systems {
            let k = sys.k;
            for (r, v) in b.iter_mut().enumerate() {
                *v = rhs_hat[r][k];
            }
            let scale = b.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let mut x = b.clone();
            sys.solve_in_place(&mut x);
            if scale > 0.0 {
                sys.apply(&x, &mut ab);
                let r = ab
                    .iter()
                    .zip(&b)
                    .map(|(u, v)| (u - v).norm())
                    .fold(0.0, f64::max);
                residual = residual.max(r / scale);
            }
            for j in 0..=ny {
                phi_hat[j][k] = x[2 * j];
                if k != 0 && 2 * k != nx {
                    phi_hat[j][nx - k] = x[2 * j].conj();
                }
            }
        }
        if residual > p.linear_tol {
            return Err(Error::LinearResidual {
                residual,
                tol: p.linear_tol,
            });
        }

        let mut phi = BulkField::zeros(&g);
        for (j, hat) in phi_hat.into_iter().enumerate() {
            xt.inverse(hat, phi.row_mut(j));
        }
        if !phi.is_finite() {
            return Err(Error::NonFinite("step"));
        }
        Ok((State::new(phi, s.time + dt), residual))
    }

    /// One step of the configured size with energy-based halving.
    pub fn step(&mut self, s: &State) -> Result<(State, StepReport)> {
        let dt = self.params.dt;
        self.step_with(s, dt)
    }

    /// [`Stepper::step`] with an explicit step size.
    pub fn step_with(&mut self, s: &State, dt: f64) -> Result<(State, StepReport)> {
        let e0 = total_energy(s, &self.model, &self.grid)?.e_total;
        let tol = self.params.max_energy_uptick * e0.abs();
        let mut h = dt;
        let mut last = f64::NAN;
        for halvings in 0..=self.params.max_halvings {
            let (next, residual) = self.advance(s, h)?;
            let rep = total_energy(&next, &self.model, &self.grid)?;
            if rep.e_total <= e0 + tol {
                return Ok((
                    next,
                    StepReport {
                        dt: h,
                        halvings,
                        energy_before: e0,
                        energy_after: rep.e_total,
                        residual,
                        m_bulk: rep.m_bulk,
                        m_bot: rep.m_bot,
                        m_top: rep.m_top,
                    },
                ));
            }
            last = rep.e_total;
            h *= 0.5;
        }
        Err(Error::EnergyIncrease {
            halvings: self.params.max_halvings,
            energy_before: e0,
            energy_after: last,
        })
    }
}

/// `step`: one step from scratch (no factorization reuse).
pub fn step(
    s: &State,
    p: &SolverParams,
    model: &Model,
    g: &Grid,
) -> Result<(State, StepReport)> {
    Stepper::new(g.clone(), model.clone(), p.clone())?.step(s)
}
