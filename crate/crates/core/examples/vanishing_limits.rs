//! Viscous (`α`) and surface diffusion (`κ`) parameters driven to zero at a
//! fixed horizon.

use chdyn::energy::{Model, State};
use chdyn::geometry::{BulkField, Grid};
use chdyn::solver::{run, RunOptions, SolverParams, Stepper};
use chdyn::stationary::state_norm;

fn evolve(g: &Grid, s0: &State, kappa: f64, alpha: f64) -> chdyn::Result<BulkField> {
    let p = SolverParams::default().with_dt(1e-4).with_alpha(alpha);
    let mut st = Stepper::new(g.clone(), Model::quartic(kappa)?, p)?;
    let opts = RunOptions {
        t_end: 0.05,
        eq_tol: 0.0,
        cadence: usize::MAX,
        ..Default::default()
    };
    let tr = run(&mut st, s0, &opts, &mut |_, _| {})?;
    Ok(tr.final_state.expect("final state").phi)
}

fn main() -> chdyn::Result<()> {
    let g = Grid::new(32, 32, 2.0, 2.0)?;
    let s0 = State::new(
        BulkField::from_fn(&g, |x, y| {
            0.3 * (std::f64::consts::PI * x).cos() * (0.5 * y).cos() + 0.1 * (2.0 * y).sin()
        }),
        0.0,
    );

    let dist = |a: &BulkField, b: &BulkField| state_norm(&a.lin_comb(1.0, b, -1.0), &g);

    let base = evolve(&g, &s0, 0.1, 0.0)?;
    println!("α-limit at κ = 0.1");
    for a in [0.2, 0.1, 0.05] {
        let x = evolve(&g, &s0, 0.1, a)?;
        let y = evolve(&g, &s0, 0.1, a / 2.0)?;
        println!("  α = {a:<5}  ‖φ^α - φ^(α/2)‖ = {:.4e}  ‖φ^α - φ^0‖ = {:.4e}", dist(&x, &y), dist(&x, &base));
    }

    let base = evolve(&g, &s0, 0.0, 0.0)?;
    println!("κ-limit at α = 0");
    for k in [0.2, 0.1, 0.05] {
        let x = evolve(&g, &s0, k, 0.0)?;
        let y = evolve(&g, &s0, k / 2.0, 0.0)?;
        println!("  κ = {k:<5}  ‖φ^κ - φ^(κ/2)‖ = {:.4e}  ‖φ^κ - φ^0‖ = {:.4e}", dist(&x, &y), dist(&x, &base));
    }
    Ok(())
}
