//! Sampled structural checks on the built-in potentials.

use chdyn::potentials::{
    contact_line_surface, quartic_double_well, validate_assumptions, AssumptionQuery, Potential,
};

fn show(name: &str, f: &Potential, g: &Potential, kappa: f64) -> chdyn::Result<()> {
    let q = AssumptionQuery {
        kappa,
        check_domination: true,
        ..Default::default()
    };
    let r = validate_assumptions(f, g, &q)?;
    println!("{name} (κ = {kappa})");
    for c in &r.checks {
        println!("  [{}] {:<12} {}", if c.passed { "ok" } else { "!!" }, c.name, c.detail);
    }
    if let Some(fit) = r.domination {
        println!("  fitted ρ₁ = {:.4}, ρ₂ = {:.4} ({})", fit.rho1, fit.rho2, if fit.passed { "holds" } else { "fails" });
    }
    Ok(())
}

fn main() -> chdyn::Result<()> {
    let quartic = quartic_double_well();
    show("quartic / quartic", &quartic, &quartic, 0.1)?;
    show("quartic / quartic", &quartic, &quartic, 0.0)?;
    show("quartic / contact line", &quartic, &contact_line_surface(1.0, 1.0)?, 0.1)?;

    let split = quartic.convex_split();
    for y in [-1.5, -0.5, 0.0, 0.5, 1.5] {
        println!(
            "y = {y:+.1}: F = {:.4}  F̃ = {:.4}  F̃'' = {:.4}",
            quartic.value(y),
            split.tilde_value(y),
            split.tilde_d2(y)
        );
    }
    Ok(())
}
