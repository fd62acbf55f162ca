//! Relaxation to equilibrium and the fitted decay of the energy gap.

use chdyn::diagnostics::{energy_gap_tail, fit_decay_rate, relaxation_onset, terminal_energy};
use chdyn::energy::{Model, State};
use chdyn::geometry::{BulkField, Grid};
use chdyn::solver::{run, RunOptions, SolverParams, Stepper};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> chdyn::Result<()> {
    let g = Grid::new(32, 32, 8.0, 8.0)?;
    let model = Model::quartic(0.1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let values = (0..g.node_count())
        .map(|_| 0.01 * rng.gen_range(-1.0..1.0))
        .collect();
    let s0 = State::new(BulkField::from_values(&g, values)?, 0.0);

    let mut st = Stepper::new(g, model, SolverParams::default().with_dt(0.01))?;
    let opts = RunOptions {
        t_end: 1000.0,
        eq_tol: 1e-7,
        ..Default::default()
    };
    let tr = run(&mut st, &s0, &opts, &mut |_, _| {})?;
    let last = tr.last().copied().unwrap_or_default();
    println!(
        "converged {} at t = {:.2}, dissipation {:.2e}",
        tr.converged,
        last.time,
        last.dissipation()
    );
    println!("E_∞ ≈ {:.12}", terminal_energy(&tr).unwrap_or(f64::NAN));

    let onset = relaxation_onset(&tr, 1e3).unwrap_or(0.0);
    let Some((t, gap)) = energy_gap_tail(&tr, onset) else {
        println!("tail too short to fit");
        return Ok(());
    };
    let fit = fit_decay_rate(&t, &gap)?;
    println!("tail from t = {onset:.2}: {} samples", t.len());
    println!(
        "power law  β = {:.4}  rms {:.3e}",
        fit.power.0, fit.power.1
    );
    println!(
        "exponential r = {:.4}  rms {:.3e}",
        fit.exponential.0, fit.exponential.1
    );
    println!("selected {:?}, θ = {:.3}", fit.model, fit.theta);
    Ok(())
}
