//! Stabilized linearly implicit time stepping, decoupled per `x`-wavenumber.
//!
//! One step solves, for every Fourier mode in `x`, a banded two-point problem
//! in `y`:
//!
//! ```text
//! μ   = -Δφ + (S_b + α/dt)(φ - φⁿ) + F'(φⁿ)
//! φ   = φⁿ + dt Δμ,             ∂ₙμ = 0
//! μ_Γ = -κΔ_Γψ + ψ + ∂ₙφ + (S_s + α/dt)(ψ - ψⁿ) + G'(ψⁿ)
//! ψ   = ψⁿ + dt Δ_Γ μ_Γ,        φ|_Γ = ψ
//! ```

mod banded;
mod mode;
mod stepper;

pub use banded::{BandLu, BandMatrix};
pub use mode::{assemble_mode_system, ModeSystem};
pub use stepper::{step, StepReport, Stepper};

use crate::diagnostics::Trajectory;
use crate::energy::{energy_report, EnergyReport, State};
use crate::error::{Error, Result};
use crate::geometry::{BulkField, Grid, TraceField};
use rustfft::num_complex::Complex64;
use stepper::XTransform;

/// Time step, regularization and stabilization.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverParams {
    pub dt: f64,
    pub alpha: f64,
    pub s_bulk: f64,
    pub s_surf: f64,
    /// Relative per-step energy increase tolerated before halving.
    pub max_energy_uptick: f64,
    pub max_halvings: usize,
    /// Bound on the relative residual of every mode solve.
    pub linear_tol: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            dt: 1e-4,
            alpha: 0.0,
            s_bulk: 2.0,
            s_surf: 2.0,
            max_energy_uptick: 1e-10,
            max_halvings: 10,
            linear_tol: 1e-8,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: String| Err(Error::InvalidParameter { name, reason });
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt", format!("must be > 0, got {}", self.dt));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad("alpha", format!("must be >= 0, got {}", self.alpha));
        }
        if !(self.s_bulk >= 0.0 && self.s_surf >= 0.0) {
            return bad(
                "stabilization",
                format!("must be >= 0, got {} / {}", self.s_bulk, self.s_surf),
            );
        }
        if !(self.max_energy_uptick > 0.0 && self.linear_tol > 0.0) {
            return bad("tolerance", "tolerances must be > 0".into());
        }
        Ok(())
    }

    pub fn with_dt(&self, dt: f64) -> Self {
        SolverParams { dt, ..self.clone() }
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        SolverParams {
            alpha,
            ..self.clone()
        }
    }

    pub(crate) fn bulk_shift(&self) -> f64 {
        self.s_bulk + self.alpha / self.dt
    }

    pub(crate) fn surf_shift(&self) -> f64 {
        self.s_surf + self.alpha / self.dt
    }
}

/// Horizon, output cadence and stopping rule of [`run`].
#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub t_end: f64,
    /// Record every `cadence`-th accepted step (the first and last states are
    /// always recorded).
    pub cadence: usize,
    /// Keep a state snapshot every this many steps.
    pub snapshot_every: Option<usize>,
    /// Stop once `‖∇μ‖ + ‖∇_Γ μ_Γ‖` falls below this.
    pub eq_tol: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            t_end: 0.1,
            cadence: 1,
            snapshot_every: None,
            eq_tol: 1e-10,
        }
    }
}

/// `run`: integrate from `s0` to `t_end` or until equilibrium. The observer
/// sees every accepted state with its report.
pub fn run(
    stepper: &mut Stepper,
    s0: &State,
    opts: &RunOptions,
    observer: &mut dyn FnMut(&State, &EnergyReport),
) -> Result<Trajectory> {
    if !(opts.t_end > 0.0) {
        return Err(Error::InvalidParameter {
            name: "t_end",
            reason: format!("must be > 0, got {}", opts.t_end),
        });
    }
    let cadence = opts.cadence.max(1);
    let g = stepper.grid().clone();
    let model = stepper.model().clone();
    let p = stepper.params().clone();
    let report = |new: &State, old: &State, dt: f64| {
        energy_report(new, old, &model, p.alpha, dt, &g)
    };

    let mut tr = Trajectory::default();
    let mut s = s0.clone();
    let first = report(&s, &s, p.dt)?;
    observer(&s, &first);
    tr.push(first);
    if opts.snapshot_every.is_some() {
        tr.snapshots.push(s.clone());
    }
    if first.gradient_speed() < opts.eq_tol {
        tr.converged = true;
        tr.final_state = Some(s);
        return Ok(tr);
    }

    let t_stop = s0.time + opts.t_end;
    let eps = 1e-12 * t_stop.abs().max(1.0);
    let mut steps = 0usize;
    while s.time < t_stop - eps {
        let h = p.dt.min(t_stop - s.time);
        let (next, sr) = stepper.step_with(&s, h)?;
        steps += 1;
        tr.steps = steps;
        tr.halvings += sr.halvings;
        let rep = report(&next, &s, sr.dt)?;
        observer(&next, &rep);
        let done = rep.gradient_speed() < opts.eq_tol;
        let finished = next.time >= t_stop - eps;
        if steps % cadence == 0 || done || finished {
            tr.push(rep);
        }
        if let Some(every) = opts.snapshot_every {
            if steps % every.max(1) == 0 || done || finished {
                tr.snapshots.push(next.clone());
            }
        }
        s = next;
        if done {
            tr.converged = true;
            break;
        }
    }
    tr.final_state = Some(s);
    Ok(tr)
}

/// Solves the linear stationary problem
///
/// ```text
/// -Δφ = h₁ in Ω,    -κΔ_Γψ + ψ + ∂ₙφ = h₂ on Γ,    ψ = φ|_Γ
/// ```
///
/// `h1` must be given on every row; its boundary rows enter the normal flux.
pub fn solve_elliptic(
    h1: &BulkField,
    h2_bot: &TraceField,
    h2_top: &TraceField,
    kappa: f64,
    g: &Grid,
) -> Result<BulkField> {
    h1.check_shape(g)?;
    let (nx, ny) = (g.nx(), g.ny());
    for t in [h2_bot, h2_top] {
        if t.len() != nx {
            return Err(Error::ShapeMismatch {
                expected: format!("{nx} boundary values"),
                got: t.len().to_string(),
            });
        }
    }
    if !(kappa >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "kappa",
            reason: format!("must be >= 0, got {kappa}"),
        });
    }
    let xt = XTransform::new(nx);
    let half = 0.5 * g.dy();
    let rhs: Vec<Vec<Complex64>> = (0..=ny)
        .map(|j| {
            let row = h1.row(j);
            match j {
                0 => xt.forward(
                    &row.iter()
                        .zip(&h2_bot.values)
                        .map(|(a, b)| b + half * a)
                        .collect::<Vec<_>>(),
                ),
                _ if j == ny => xt.forward(
                    &row.iter()
                        .zip(&h2_top.values)
                        .map(|(a, b)| b + half * a)
                        .collect::<Vec<_>>(),
                ),
                _ => xt.forward(row),
            }
        })
        .collect();
    let mut hat = vec![vec![Complex64::default(); nx]; ny + 1];
    let mut b = vec![Complex64::default(); ny + 1];
    for k in 0..=nx / 2 {
        let lu = mode::elliptic_mode(k, kappa, g)?;
        for j in 0..=ny {
            b[j] = rhs[j][k];
        }
        lu.solve_in_place(&mut b);
        for j in 0..=ny {
            hat[j][k] = b[j];
            if k != 0 && 2 * k != nx {
                hat[j][nx - k] = b[j].conj();
            }
        }
    }
    let mut phi = BulkField::zeros(g);
    for (j, h) in hat.into_iter().enumerate() {
        xt.inverse(h, phi.row_mut(j));
    }
    Ok(phi)
}
