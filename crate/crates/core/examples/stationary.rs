//! Equilibrium with prescribed bulk and surface masses, and the Lagrange
//! multipliers computed three ways.

use chdyn::energy::{total_energy, Model, State};
use chdyn::geometry::{BulkField, Grid};
use chdyn::stationary::{multiplier_system, multipliers, solve_stationary, StationaryOptions};

fn main() -> chdyn::Result<()> {
    let l = 2.0;
    let g = Grid::new(32, 32, l, l)?;
    let model = Model::quartic(0.1)?;
    let (m_bulk, m_surf) = (0.2, -0.3);

    let init = State::new(
        BulkField::from_fn(&g, |_, y| 0.2 + 0.3 * (std::f64::consts::PI * y / l).cos()),
        0.0,
    );
    let r = solve_stationary(&init, m_bulk, m_surf, &model, &g, &StationaryOptions::default())?;
    println!(
        "{:?} after {:.2} pseudo-time units and {} Newton iterations",
        r.verdict, r.pseudo_time, r.iterations
    );
    println!("residuals: bulk {:.2e}, surface {:.2e}", r.residual_bulk, r.residual_surf);
    println!("energy {:.12}", total_energy(&r.state, &model, &g)?.e_total);

    let (v1, v2) = multipliers(&r.state, &model, &g)?;
    let sys = multiplier_system(&r.state, &model, &g)?;
    println!("            λ₁                  λ₂");
    println!("KKT        {:+.15}  {:+.15}", r.lambda1, r.lambda2);
    println!("mean value {v1:+.15}  {v2:+.15}");
    match sys.solve() {
        Some((s1, s2)) => println!("2×2        {s1:+.15}  {s2:+.15}"),
        None => println!("2×2        singular"),
    }

    let flat = solve_stationary(&State::constant(&g, 0.5), 0.5, 0.5, &model, &g, &Default::default())?;
    println!(
        "constant 0.5: λ₁ = {:+.12}, λ₂ = {:+.12}",
        flat.lambda1, flat.lambda2
    );
    Ok(())
}
