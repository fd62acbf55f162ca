//! Mass conservation and the discrete energy law over a step-size ladder.
//!
//! The defect `|ΔE/Δt + ‖∇μ‖² + ‖∇_Γμ_Γ‖²|` is first order in `Δt`.

use chdyn::diagnostics::{check_conservation, check_energy_law, energy_defects};
use chdyn::energy::{Model, State};
use chdyn::geometry::{BulkField, Grid};
use chdyn::solver::{run, RunOptions, SolverParams, Stepper};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> chdyn::Result<()> {
    let g = Grid::new(64, 64, 8.0, 8.0)?;
    let model = Model::quartic(0.1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let values = (0..g.node_count())
        .map(|_| 0.1 * rng.gen_range(-1.0..1.0))
        .collect();
    let s0 = State::new(BulkField::from_values(&g, values)?, 0.0);

    let mut runs = Vec::new();
    for dt in [1e-4, 5e-5, 2.5e-5] {
        let mut st = Stepper::new(g.clone(), model.clone(), SolverParams::default().with_dt(dt))?;
        let opts = RunOptions {
            t_end: 0.1,
            eq_tol: 0.0,
            ..Default::default()
        };
        let tr = run(&mut st, &s0, &opts, &mut |_, _| {})?;
        let c = check_conservation(&tr, 1e-12);
        let worst = energy_defects(&tr).iter().map(|d| d.1).fold(0.0, f64::max);
        println!(
            "dt = {dt:.1e}: {:5} steps, drift bulk {:.1e} bot {:.1e} top {:.1e}, max defect {worst:.3e}",
            tr.steps, c.drift_bulk, c.drift_bot, c.drift_top
        );
        runs.push(tr);
    }

    let law = check_energy_law(&runs, 1e-10);
    println!("monotone: {:?}  worst uptick {:.2e}", law.monotone, law.worst_uptick);
    println!("late-time mean defects {:?}", law.mean_defects);
    println!("ratios under halving  {:?}", law.ratios);
    Ok(())
}
