//! Continuous dependence on initial data: growth of a small mass-neutral
//! perturbation in the dual norm.

use chdyn::diagnostics::perturbation_sensitivity;
use chdyn::energy::{Model, State};
use chdyn::geometry::{BulkField, Grid};
use chdyn::solver::{run, RunOptions, SolverParams, Stepper};
use chdyn::stationary::mass_neutral_perturbation;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn snapshots(g: &Grid, s0: &State) -> chdyn::Result<Vec<State>> {
    let mut st = Stepper::new(g.clone(), Model::quartic(0.1)?, SolverParams::default())?;
    let opts = RunOptions {
        t_end: 0.2,
        eq_tol: 0.0,
        cadence: usize::MAX,
        snapshot_every: Some(200),
    };
    Ok(run(&mut st, s0, &opts, &mut |_, _| {})?.snapshots)
}

fn main() -> chdyn::Result<()> {
    let g = Grid::new(32, 32, 4.0, 4.0)?;
    let base = BulkField::from_fn(&g, |x, y| 0.2 * (std::f64::consts::PI * x / 2.0).sin() * (y).cos());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let z = mass_neutral_perturbation(&g, 1e-4, &mut rng);

    let a = snapshots(&g, &State::new(base.clone(), 0.0))?;
    let b = snapshots(&g, &State::new(base.lin_comb(1.0, &z, 1.0), 0.0))?;
    let r = perturbation_sensitivity(&a, &b, &g)?;
    for (t, q) in r.times.iter().zip(&r.ratios) {
        println!("t = {t:.3}  ‖δφ(t)‖/‖δφ(0)‖ = {q:.6}");
    }
    println!("growth rate K = {:.4}", r.growth_rate);
    Ok(())
}
