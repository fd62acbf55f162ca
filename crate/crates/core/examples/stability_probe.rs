//! Lyapunov stability probes: a relaxed spinodal pattern versus the unstable
//! mixed state.

use chdyn::energy::{Model, State};
use chdyn::geometry::{BulkField, Grid};
use chdyn::solver::{run, RunOptions, SolverParams, Stepper};
use chdyn::stationary::{solve_stationary_with, stability_probe, ProbeOptions, SurfaceMass};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> chdyn::Result<()> {
    let g = Grid::new(32, 32, 8.0, 8.0)?;
    let model = Model::quartic(0.1)?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let values = (0..g.node_count())
        .map(|_| 0.01 * rng.gen_range(-1.0..1.0))
        .collect();
    let mut st = Stepper::new(g.clone(), model.clone(), SolverParams::default().with_dt(0.01))?;
    let opts = RunOptions {
        t_end: 1000.0,
        cadence: usize::MAX,
        eq_tol: 1e-6,
        ..Default::default()
    };
    let tr = run(&mut st, &State::new(BulkField::from_values(&g, values)?, 0.0), &opts, &mut |_, _| {})?;
    let relaxed = tr.final_state.expect("final state");
    let (mb, mbot, mtop) = relaxed.masses(&g);
    let eq = solve_stationary_with(
        &relaxed,
        mb,
        SurfaceMass::PerCircle([mbot, mtop]),
        &model,
        &g,
        &Default::default(),
    )?;
    println!("equilibrium at t ≈ {:.1}, residual {:.1e}", relaxed.time, eq.residual());

    let stable = stability_probe(
        &eq.state,
        &model,
        &g,
        &ProbeOptions {
            trials: 8,
            eps: 1e-3,
            t_probe: 0.05,
            params: SolverParams::default(),
            escape_radius: 5e-3,
            seed: 1,
        },
    )?;
    println!(
        "pattern:    max excursion {:.3e}, escaped {}, min ΔE {:+.3e}",
        stable.max_excursion, stable.escaped, stable.energy_comparison
    );

    let unstable = stability_probe(
        &State::constant(&g, 0.0),
        &model,
        &g,
        &ProbeOptions {
            trials: 8,
            eps: 1e-3,
            t_probe: 40.0,
            params: SolverParams::default().with_dt(0.01),
            escape_radius: 1e-2,
            seed: 1,
        },
    )?;
    println!(
        "mixed 0:    max excursion {:.3e}, escaped {}, min ΔE {:+.3e}",
        unstable.max_excursion, unstable.escaped, unstable.energy_comparison
    );
    Ok(())
}
