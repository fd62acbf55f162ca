//! Manufactured-solution convergence of the linear bulk/surface problem.

use chdyn::diagnostics::manufactured_elliptic_test;

fn main() -> chdyn::Result<()> {
    for kappa in [0.0, 0.01, 0.1, 1.0] {
        let r = manufactured_elliptic_test(&[16, 32, 64, 128], kappa)?;
        println!("κ = {kappa}");
        println!("  {:>5} {:>12} {:>12}", "n", "err φ", "err ψ");
        for l in &r.levels {
            println!("  {:>5} {:>12.4e} {:>12.4e}", l.n, l.err_phi, l.err_psi);
        }
        let fmt = |v: &[f64]| v.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>().join(" ");
        println!("  orders φ: {}", fmt(&r.orders_phi));
        println!("  orders ψ: {}", fmt(&r.orders_psi));
    }
    Ok(())
}
