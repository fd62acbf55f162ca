//! Free energy, chemical potentials and dissipation rates.
//!
//! The discrete energy is
//!
//! ```text
//! E_h = ½ ‖∇_h φ‖²_Ω + Σ_Ω w F(φ) + Σ_c Σ_Γc dx (κ/2 |D_x⁺ψ|² + ½ψ² + G(ψ))
//! ```
//!
//! with the quadrature of [`crate::geometry`]. Its nodal gradient splits into
//! the bulk chemical potential `μ` on interior nodes and, on each boundary node,
//! the potential that drives surface transport. The latter contains the bulk
//! half cell adjacent to the circle; written as `μ_Γ + (dy/2) μ` it exposes the
//! surface chemical potential
//!
//! ```text
//! μ_Γ = -κ Δ_Γ ψ + ψ + ∂ₙφ + G'(ψ) (+ α ψ_t)
//! ```
//!
//! where the discrete normal derivative is the one-sided difference corrected
//! by the half-cell balance, `∂ₙφ ≈ (ψ - φ_in)/dy + (dy/2)(-D_xx ψ + F'(ψ) + αψ_t - μ_in)`,
//! which is second-order accurate.

use crate::error::{Error, Result};
use crate::geometry::{
    bulk_grad_norm_sq, bulk_integral, bulk_mean, interior_grad_norm_sq, second_difference_x,
    surface_grad_norm_sq, surface_mean, BulkField, Circle, Grid, TraceField,
};
use crate::potentials::{quartic_double_well, Potential};

/// Potentials and surface diffusion.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub bulk: Potential,
    pub surface: Potential,
    pub kappa: f64,
}

impl Model {
    pub fn new(bulk: Potential, surface: Potential, kappa: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "kappa",
                reason: format!("kappa must be >= 0, got {kappa}"),
            });
        }
        Ok(Model {
            bulk,
            surface,
            kappa,
        })
    }

    /// Quartic double well in the bulk and on the boundary.
    pub fn quartic(kappa: f64) -> Result<Self> {
        Self::new(quartic_double_well(), quartic_double_well(), kappa)
    }
}

/// Phase field on the grid. The traces `ψ` are the boundary rows of `phi`,
/// so `φ|_Γ = ψ` holds by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub phi: BulkField,
    pub time: f64,
}

impl State {
    pub fn new(phi: BulkField, time: f64) -> Self {
        State { phi, time }
    }

    pub fn constant(g: &Grid, m: f64) -> Self {
        State::new(BulkField::constant(g, m), 0.0)
    }

    pub fn psi(&self, c: Circle) -> TraceField {
        self.phi.trace(c)
    }

    /// `(⟨φ⟩_Ω, ⟨ψ⟩_{Γ_bot}, ⟨ψ⟩_{Γ_top})`.
    pub fn masses(&self, g: &Grid) -> (f64, f64, f64) {
        (
            bulk_mean(&self.phi, g),
            surface_mean(&self.psi(Circle::Bottom), g),
            surface_mean(&self.psi(Circle::Top), g),
        )
    }
}

/// Energies, dissipation rates and masses at one time.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyReport {
    pub time: f64,
    pub e_bulk: f64,
    pub e_surf: f64,
    pub e_total: f64,
    pub d_bulk: f64,
    pub d_surf: f64,
    pub d_visc: f64,
    pub m_bulk: f64,
    pub m_bot: f64,
    pub m_top: f64,
}

impl EnergyReport {
    pub fn dissipation(&self) -> f64 {
        self.d_bulk + self.d_surf + self.d_visc
    }

    /// `‖∇μ‖ + ‖∇_Γ μ_Γ‖`.
    pub fn gradient_speed(&self) -> f64 {
        self.d_bulk.sqrt() + self.d_surf.sqrt()
    }

    /// `⟨ψ⟩_Γ` over both circles.
    pub fn m_surf(&self) -> f64 {
        0.5 * (self.m_bot + self.m_top)
    }
}

/// `μ` on the grid and `μ_Γ` on each circle.
///
/// The boundary rows of `mu` hold copies of the adjacent interior rows (the
/// discrete `∂ₙμ = 0`).
#[derive(Clone, Debug, PartialEq)]
pub struct ChemPotentials {
    pub mu: BulkField,
    pub mu_gamma_bot: TraceField,
    pub mu_gamma_top: TraceField,
}

impl ChemPotentials {
    pub fn mu_gamma(&self, c: Circle) -> &TraceField {
        match c {
            Circle::Bottom => &self.mu_gamma_bot,
            Circle::Top => &self.mu_gamma_top,
        }
    }

    /// `μ_Γ + (dy/2) μ`: the potential whose surface gradient carries mass
    /// along the circle (surface layer plus adjacent bulk half cell).
    pub fn transport_potential(&self, c: Circle, g: &Grid) -> TraceField {
        let half = 0.5 * g.dy();
        let row = self.mu.row(c.row(g));
        let t = self.mu_gamma(c);
        TraceField {
            circle: c,
            values: t.values.iter().zip(row).map(|(a, b)| a + half * b).collect(),
        }
    }
}

/// `total_energy`: energies and masses; dissipation entries are zero.
pub fn total_energy(s: &State, model: &Model, g: &Grid) -> Result<EnergyReport> {
    s.phi.check_shape(g)?;
    let f = s.phi.map(|v| model.bulk.value(v));
    let e_bulk = 0.5 * bulk_grad_norm_sq(&s.phi, g) + bulk_integral(&f, g);
    let mut e_surf = 0.0;
    for c in Circle::BOTH {
        let psi = s.psi(c);
        let pot: f64 = psi
            .values
            .iter()
            .map(|&v| 0.5 * v * v + model.surface.value(v))
            .sum::<f64>()
            * g.dx();
        e_surf += 0.5 * model.kappa * surface_grad_norm_sq(&psi, g) + pot;
    }
    let (m_bulk, m_bot, m_top) = s.masses(g);
    Ok(EnergyReport {
        time: s.time,
        e_bulk,
        e_surf,
        e_total: e_bulk + e_surf,
        m_bulk,
        m_bot,
        m_top,
        ..Default::default()
    })
}

fn time_derivative(
    s_new: &State,
    s_old: &State,
    alpha: f64,
    dt: f64,
    g: &Grid,
) -> Result<Option<BulkField>> {
    if !(alpha >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            reason: format!("must be >= 0, got {alpha}"),
        });
    }
    if alpha == 0.0 {
        return Ok(None);
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: format!("alpha > 0 needs dt > 0, got {dt}"),
        });
    }
    s_old.phi.check_shape(g)?;
    Ok(Some(s_new.phi.lin_comb(1.0 / dt, &s_old.phi, -1.0 / dt)))
}

/// `chemical_potentials`: `μ = -Δφ + αφ_t + F'(φ)` on interior nodes and
/// `μ_Γ = -κΔ_Γψ + ψ + αψ_t + ∂ₙφ + G'(ψ)` on both circles, with `φ_t` the
/// backward difference `(s_new - s_old)/dt`.
pub fn chemical_potentials(
    s_new: &State,
    s_old: &State,
    model: &Model,
    alpha: f64,
    dt: f64,
    g: &Grid,
) -> Result<ChemPotentials> {
    s_new.phi.check_shape(g)?;
    let phi_t = time_derivative(s_new, s_old, alpha, dt, g)?;
    let phi = &s_new.phi;
    let (nx, ny) = (g.nx(), g.ny());
    let idy2 = 1.0 / (g.dy() * g.dy());

    // -D_xx φ + F'(φ) + α φ_t on every row.
    let mut local = BulkField::zeros(g);
    let mut dxx = vec![0.0; nx];
    for j in 0..=ny {
        second_difference_x(phi.row(j), g.dx(), &mut dxx);
        let r = phi.row(j);
        let out = local.row_mut(j);
        for i in 0..nx {
            out[i] = -dxx[i] + model.bulk.d1(r[i]);
        }
        if let Some(pt) = &phi_t {
            for (o, v) in out.iter_mut().zip(pt.row(j)) {
                *o += alpha * v;
            }
        }
    }

    let mut mu = BulkField::zeros(g);
    for j in 1..ny {
        let (lo, mid, hi) = (phi.row(j - 1), phi.row(j), phi.row(j + 1));
        let loc = local.row(j);
        let out = mu.row_mut(j);
        for i in 0..nx {
            out[i] = loc[i] - (lo[i] - 2.0 * mid[i] + hi[i]) * idy2;
        }
    }
    let first = mu.row(1).to_vec();
    let last = mu.row(ny - 1).to_vec();
    mu.row_mut(0).copy_from_slice(&first);
    mu.row_mut(ny).copy_from_slice(&last);

    let half = 0.5 * g.dy();
    let mut gammas = Vec::with_capacity(2);
    for c in Circle::BOTH {
        let (b, n) = (c.row(g), c.inner_row(g));
        let psi = phi.row(b);
        let inner = phi.row(n);
        second_difference_x(psi, g.dx(), &mut dxx);
        let loc = local.row(b);
        let mu_in = mu.row(n);
        let values = (0..nx)
            .map(|i| {
                let normal = (psi[i] - inner[i]) / g.dy() + half * (loc[i] - mu_in[i]);
                let mut v = -model.kappa * dxx[i] + psi[i] + normal + model.surface.d1(psi[i]);
                if let Some(pt) = &phi_t {
                    v += alpha * pt.at(b, i);
                }
                v
            })
            .collect();
        gammas.push(TraceField { circle: c, values });
    }
    let mu_gamma_top = gammas.pop().unwrap();
    let mu_gamma_bot = gammas.pop().unwrap();
    Ok(ChemPotentials {
        mu,
        mu_gamma_bot,
        mu_gamma_top,
    })
}

/// Discrete outward normal derivative entering `μ_Γ` for a state at rest
/// (`α = 0`); the companion of [`chemical_potentials`].
pub fn normal_flux(s: &State, model: &Model, g: &Grid, c: Circle) -> Result<TraceField> {
    let cp = chemical_potentials(s, s, model, 0.0, 0.0, g)?;
    let psi = s.psi(c);
    let mut dxx = vec![0.0; g.nx()];
    second_difference_x(&psi.values, g.dx(), &mut dxx);
    let mg = cp.mu_gamma(c);
    let values = (0..g.nx())
        .map(|i| {
            mg.values[i] + model.kappa * dxx[i] - psi.values[i] - model.surface.d1(psi.values[i])
        })
        .collect();
    Ok(TraceField { circle: c, values })
}

/// `dissipation`: `(‖∇μ‖², ‖∇_Γ μ_Γ‖²)`, the surface part summed over both
/// circles. Both norms are the ones for which the discrete energy law is exact.
pub fn dissipation(c: &ChemPotentials, g: &Grid) -> (f64, f64) {
    let d_bulk = interior_grad_norm_sq(&c.mu, g);
    let d_surf = Circle::BOTH
        .iter()
        .map(|&k| surface_grad_norm_sq(&c.transport_potential(k, g), g))
        .sum();
    (d_bulk, d_surf)
}

/// Full report at `s_new`, with `φ_t` taken from `s_old` (pass the same
/// state twice at rest).
pub fn energy_report(
    s_new: &State,
    s_old: &State,
    model: &Model,
    alpha: f64,
    dt: f64,
    g: &Grid,
) -> Result<EnergyReport> {
    let mut r = total_energy(s_new, model, g)?;
    let cp = chemical_potentials(s_new, s_old, model, alpha, dt, g)?;
    let (d_bulk, d_surf) = dissipation(&cp, g);
    r.d_bulk = d_bulk;
    r.d_surf = d_surf;
    if let Some(pt) = time_derivative(s_new, s_old, alpha, dt, g)? {
        let sq = pt.map(|v| v * v);
        let surf: f64 = Circle::BOTH
            .iter()
            .map(|&c| sq.row(c.row(g)).iter().sum::<f64>() * g.dx())
            .sum();
        r.d_visc = alpha * (bulk_integral(&sq, g) + surf);
    }
    Ok(r)
}
