//! Equilibria with prescribed bulk and surface masses.
//!
//! Stationary states solve
//!
//! ```text
//! -Δφ + F'(φ) = λ₁                       in Ω
//! -κΔ_Γψ + ψ + ∂ₙφ + G'(ψ) = λ₂          on Γ
//! ⟨φ⟩_Ω = m_bulk,   ⟨ψ⟩_Γ = m_surf
//! ```
//!
//! The multipliers are the Lagrange multipliers of the two mass constraints
//! of the discrete energy.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::energy::{chemical_potentials, normal_flux, total_energy, Model, State};
use crate::error::{Error, Result};
use crate::geometry::{
    boundary_mean, bulk_grad_norm_sq, bulk_integral, bulk_mean, surface_grad_norm_sq,
    surface_integral, BulkField, Circle, Grid,
};
use crate::solver::{run, RunOptions, SolverParams, Stepper};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Converged,
    Stalled,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StationaryResult {
    pub state: State,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Surface multiplier on each circle (bottom, top); both equal `lambda2`
    /// under a total surface constraint.
    pub lambda2_circles: [f64; 2],
    /// `max |μ - λ₁|` over interior nodes.
    pub residual_bulk: f64,
    /// `max |μ_Γ - λ₂|` over both circles.
    pub residual_surf: f64,
    /// Newton iterations.
    pub iterations: usize,
    /// Pseudo-time spent before Newton.
    pub pseudo_time: f64,
    pub verdict: Verdict,
}

impl StationaryResult {
    pub fn residual(&self) -> f64 {
        self.residual_bulk.max(self.residual_surf)
    }

    pub fn converged(&self) -> bool {
        self.verdict == Verdict::Converged
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StationaryOptions {
    /// Max-norm tolerance on both residuals.
    pub tol: f64,
    pub max_iter: usize,
    /// Pseudo-time integration stops once `‖∇μ‖ + ‖∇_Γ μ_Γ‖` is below this.
    pub pre_tol: f64,
    pub pseudo: SolverParams,
    pub pseudo_t_max: f64,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        StationaryOptions {
            tol: 1e-10,
            max_iter: 50,
            pre_tol: 1e-6,
            pseudo: SolverParams {
                dt: 1e-2,
                ..Default::default()
            },
            pseudo_t_max: 1e4,
        }
    }
}

/// Residuals `(max |μ - λ₁|, max |μ_Γ - λ₂|)` of the stationary system.
pub fn stationary_residual(
    s: &State,
    lambda1: f64,
    lambda2: f64,
    model: &Model,
    g: &Grid,
) -> Result<(f64, f64)> {
    stationary_residual_per_circle(s, lambda1, [lambda2; 2], model, g)
}

/// [`stationary_residual`] with one surface multiplier per circle
/// (bottom, top).
pub fn stationary_residual_per_circle(
    s: &State,
    lambda1: f64,
    lambda2: [f64; 2],
    model: &Model,
    g: &Grid,
) -> Result<(f64, f64)> {
    let cp = chemical_potentials(s, s, model, 0.0, 0.0, g)?;
    let bulk = (1..g.ny())
        .flat_map(|j| cp.mu.row(j).iter())
        .map(|v| (v - lambda1).abs())
        .fold(0.0, f64::max);
    let surf = Circle::BOTH
        .iter()
        .zip(lambda2)
        .flat_map(|(&c, l)| cp.mu_gamma(c).values.iter().map(move |v| (v - l).abs()))
        .fold(0.0, f64::max);
    Ok((bulk, surf))
}

/// `multipliers`: the mean-value formulas
/// `λ₁ = (-|Γ|⟨∂ₙφ⟩_Γ + |Ω|⟨F'(φ)⟩_Ω)/|Ω|` and
/// `λ₂ = ⟨∂ₙφ⟩_Γ + ⟨ψ⟩_Γ + ⟨G'(ψ)⟩_Γ`.
pub fn multipliers(s: &State, model: &Model, g: &Grid) -> Result<(f64, f64)> {
    let fp = s.phi.map(|v| model.bulk.d1(v));
    let mut flux = 0.0;
    let mut surf = 0.0;
    for c in Circle::BOTH {
        let dn = normal_flux(s, model, g, c)?;
        flux += surface_integral(&dn, g);
        let psi = s.psi(c);
        surf += psi
            .values
            .iter()
            .map(|&v| v + model.surface.d1(v))
            .sum::<f64>()
            * g.dx();
    }
    let lambda1 = (-flux + bulk_integral(&fp, g)) / g.area();
    let lambda2 = (flux + surf) / g.boundary_length();
    Ok((lambda1, lambda2))
}

/// `⟨∂ₙφ + ψ + G'(ψ)⟩` on each circle (bottom, top). Each circle conserves
/// its own mass under the dynamics, so a limit of the flow carries one
/// surface multiplier per circle.
pub fn circle_multipliers(s: &State, model: &Model, g: &Grid) -> Result<[f64; 2]> {
    let mut out = [0.0; 2];
    for (o, c) in out.iter_mut().zip(Circle::BOTH) {
        let dn = normal_flux(s, model, g, c)?;
        let psi = s.psi(c);
        *o = dn
            .values
            .iter()
            .zip(&psi.values)
            .map(|(d, &v)| d + v + model.surface.d1(v))
            .sum::<f64>()
            / g.nx() as f64;
    }
    Ok(out)
}

/// The 2×2 linear system satisfied by the multipliers of an equilibrium:
///
/// ```text
/// |Ω| λ₁        + |Γ| λ₂        = l₁ = ∫_Ω F'(φ) + ∫_Γ (ψ + G'(ψ))
/// |Ω|⟨φ⟩_Ω λ₁   + |Γ|⟨ψ⟩_Γ λ₂   = l₂ = ‖∇φ‖² + ∫_Ω F'(φ)φ + ∫_Γ (κ|∇_Γψ|² + ψ² + G'(ψ)ψ)
/// ```
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiplierSystem {
    pub matrix: [[f64; 2]; 2],
    pub rhs: [f64; 2],
    pub mean_bulk: f64,
    pub mean_surf: f64,
}

impl MultiplierSystem {
    pub fn determinant(&self) -> f64 {
        let m = &self.matrix;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// `None` when `⟨φ⟩_Ω = ⟨ψ⟩_Γ` (to relative `1e-12`), where the system is
    /// singular.
    pub fn solve(&self) -> Option<(f64, f64)> {
        let m = &self.matrix;
        let scale = (m[0][0] * m[1][1]).abs().max((m[0][1] * m[1][0]).abs());
        let det = self.determinant();
        if det.abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return None;
        }
        let l1 = (self.rhs[0] * m[1][1] - m[0][1] * self.rhs[1]) / det;
        let l2 = (m[0][0] * self.rhs[1] - self.rhs[0] * m[1][0]) / det;
        Some((l1, l2))
    }

    /// `l₂ - l₁⟨φ⟩_Ω`, which vanishes at an equilibrium with
    /// `⟨φ⟩_Ω = ⟨ψ⟩_Γ`.
    pub fn compatibility_gap(&self) -> f64 {
        self.rhs[1] - self.rhs[0] * self.mean_bulk
    }
}

pub fn multiplier_system(s: &State, model: &Model, g: &Grid) -> Result<MultiplierSystem> {
    s.phi.check_shape(g)?;
    let (omega, gamma) = (g.area(), g.boundary_length());
    let fp = s.phi.map(|v| model.bulk.d1(v));
    let fpphi = s.phi.map(|v| model.bulk.d1(v) * v);
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for c in Circle::BOTH {
        let psi = s.psi(c);
        for &v in &psi.values {
            let gp = model.surface.d1(v);
            s1 += (v + gp) * g.dx();
            s2 += (v * v + gp * v) * g.dx();
        }
        s2 += model.kappa * surface_grad_norm_sq(&psi, g);
    }
    let mean_bulk = bulk_mean(&s.phi, g);
    let mean_surf = boundary_mean(&s.phi, g);
    Ok(MultiplierSystem {
        matrix: [[omega, gamma], [omega * mean_bulk, gamma * mean_surf]],
        rhs: [
            bulk_integral(&fp, g) + s1,
            bulk_grad_norm_sq(&s.phi, g) + bulk_integral(&fpphi, g) + s2,
        ],
        mean_bulk,
        mean_surf,
    })
}

/// Shifts the traces, then the interior, so that both means match.
pub fn project_masses(s: &State, m_bulk: f64, m_surf: f64, g: &Grid) -> State {
    let mut phi = s.phi.clone();
    let ds = m_surf - boundary_mean(&phi, g);
    for c in Circle::BOTH {
        for v in phi.row_mut(c.row(g)) {
            *v += ds;
        }
    }
    let interior_area = g.lx() * (g.ly() - g.dy());
    let db = (m_bulk - bulk_mean(&phi, g)) * g.area() / interior_area;
    for j in 1..g.ny() {
        for v in phi.row_mut(j) {
            *v += db;
        }
    }
    State::new(phi, s.time)
}

/// Surface mass constraint of [`solve_stationary_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SurfaceMass {
    /// `⟨ψ⟩_Γ` over both circles, one multiplier.
    Total(f64),
    /// Mean on each circle (bottom, top), one multiplier each.
    PerCircle([f64; 2]),
}

impl SurfaceMass {
    fn count(&self) -> usize {
        match self {
            SurfaceMass::Total(_) => 1,
            SurfaceMass::PerCircle(_) => 2,
        }
    }
}

/// Shifts the traces, then the interior, so that the means match.
pub fn project_onto(s: &State, m_bulk: f64, surf: SurfaceMass, g: &Grid) -> State {
    match surf {
        SurfaceMass::Total(m) => project_masses(s, m_bulk, m, g),
        SurfaceMass::PerCircle(ms) => {
            let mut phi = s.phi.clone();
            for (c, m) in Circle::BOTH.into_iter().zip(ms) {
                let row = phi.row_mut(c.row(g));
                let d = m - row.iter().sum::<f64>() / row.len() as f64;
                for v in row {
                    *v += d;
                }
            }
            let mean = 0.5 * (ms[0] + ms[1]);
            project_masses(&State::new(phi, s.time), m_bulk, mean, g)
        }
    }
}

struct Kkt<'a> {
    model: &'a Model,
    g: &'a Grid,
    m_bulk: f64,
    surf: SurfaceMass,
}

impl Kkt<'_> {
    fn nodes(&self) -> usize {
        self.g.node_count()
    }

    fn size(&self) -> usize {
        self.nodes() + 1 + self.surf.count()
    }

    /// Index of the surface multiplier acting on circle `c`.
    fn l2_slot(&self, c: Circle) -> usize {
        match (self.surf, c) {
            (SurfaceMass::PerCircle(_), Circle::Top) => self.nodes() + 2,
            _ => self.nodes() + 1,
        }
    }

    fn lambda2(&self, x: &[f64]) -> [f64; 2] {
        let n = self.nodes();
        match self.surf {
            SurfaceMass::Total(_) => [x[n + 1]; 2],
            SurfaceMass::PerCircle(_) => [x[n + 1], x[n + 2]],
        }
    }

    fn residual(&self, phi: &BulkField, lam: &[f64]) -> Result<DVector<f64>> {
        let g = self.g;
        let s = State::new(phi.clone(), 0.0);
        let cp = chemical_potentials(&s, &s, self.model, 0.0, 0.0, g)?;
        let n = self.nodes();
        let l1 = lam[n];
        let mut r = DVector::zeros(self.size());
        let half = 0.5 * g.dy();
        for j in 1..g.ny() {
            for i in 0..g.nx() {
                r[j * g.nx() + i] = cp.mu.at(j, i) - l1;
            }
        }
        for c in Circle::BOTH {
            let t = cp.transport_potential(c, g);
            let b = c.row(g);
            let l2 = lam[self.l2_slot(c)];
            for i in 0..g.nx() {
                r[b * g.nx() + i] = t.values[i] - l2 - half * l1;
            }
        }
        r[n] = bulk_mean(phi, g) - self.m_bulk;
        match self.surf {
            SurfaceMass::Total(m) => r[n + 1] = boundary_mean(phi, g) - m,
            SurfaceMass::PerCircle(ms) => {
                for (k, (c, m)) in Circle::BOTH.into_iter().zip(ms).enumerate() {
                    let row = phi.row(c.row(g));
                    r[n + 1 + k] = row.iter().sum::<f64>() / row.len() as f64 - m;
                }
            }
        }
        Ok(r)
    }

    fn jacobian(&self, phi: &BulkField) -> DMatrix<f64> {
        let g = self.g;
        let (nx, ny) = (g.nx(), g.ny());
        let n = self.nodes();
        let (idx2, idy2) = (1.0 / (g.dx() * g.dx()), 1.0 / (g.dy() * g.dy()));
        let half = 0.5 * g.dy();
        let kappa = self.model.kappa;
        let id = |j: usize, i: usize| j * nx + i;
        let mut a = DMatrix::zeros(self.size(), self.size());
        for j in 1..ny {
            for i in 0..nx {
                let r = id(j, i);
                let (ip, im) = ((i + 1) % nx, (i + nx - 1) % nx);
                a[(r, r)] = 2.0 * idx2 + 2.0 * idy2 + self.model.bulk.d2(phi.at(j, i));
                a[(r, id(j, ip))] -= idx2;
                a[(r, id(j, im))] -= idx2;
                a[(r, id(j - 1, i))] -= idy2;
                a[(r, id(j + 1, i))] -= idy2;
                a[(r, n)] = -1.0;
            }
        }
        for c in Circle::BOTH {
            let (b, inner) = (c.row(g), c.inner_row(g));
            let l2 = self.l2_slot(c);
            for i in 0..nx {
                let r = id(b, i);
                let (ip, im) = ((i + 1) % nx, (i + nx - 1) % nx);
                let v = phi.at(b, i);
                a[(r, r)] = half * (2.0 * idx2 + self.model.bulk.d2(v))
                    + 1.0 / g.dy()
                    + 2.0 * kappa * idx2
                    + 1.0
                    + self.model.surface.d2(v);
                a[(r, id(b, ip))] -= (half + kappa) * idx2;
                a[(r, id(b, im))] -= (half + kappa) * idx2;
                a[(r, id(inner, i))] -= 1.0 / g.dy();
                a[(r, n)] = -half;
                a[(r, l2)] = -1.0;
            }
        }
        for j in 0..=ny {
            let w = g.bulk_weight(j) / g.area();
            for i in 0..nx {
                a[(n, id(j, i))] = w;
            }
        }
        for c in Circle::BOTH {
            let (row, w) = match self.surf {
                SurfaceMass::Total(_) => (n + 1, g.dx() / g.boundary_length()),
                SurfaceMass::PerCircle(_) => (self.l2_slot(c), 1.0 / nx as f64),
            };
            for i in 0..nx {
                a[(row, id(c.row(g), i))] = w;
            }
        }
        a
    }
}

/// `solve_stationary`: pseudo-time integration to a near-stationary state,
/// then damped Newton on the constrained system. Mass-infeasible initial
/// data is projected onto the constraint set first.
pub fn solve_stationary(
    init: &State,
    m_bulk: f64,
    m_surf: f64,
    model: &Model,
    g: &Grid,
    opts: &StationaryOptions,
) -> Result<StationaryResult> {
    solve_stationary_with(init, m_bulk, SurfaceMass::Total(m_surf), model, g, opts)
}

/// [`solve_stationary`] with a choice of surface constraint. With
/// [`SurfaceMass::PerCircle`] the reported `lambda2` is the mean of the two
/// circle multipliers.
pub fn solve_stationary_with(
    init: &State,
    m_bulk: f64,
    surf: SurfaceMass,
    model: &Model,
    g: &Grid,
    opts: &StationaryOptions,
) -> Result<StationaryResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            reason: format!("must be > 0, got {}", opts.tol),
        });
    }
    init.phi.check_shape(g)?;
    let s0 = project_onto(init, m_bulk, surf, g);

    let mut stepper = Stepper::new(g.clone(), model.clone(), opts.pseudo.with_alpha(0.0))?;
    let ro = RunOptions {
        t_end: opts.pseudo_t_max,
        cadence: usize::MAX,
        snapshot_every: None,
        eq_tol: opts.pre_tol,
    };
    let tr = run(&mut stepper, &s0, &ro, &mut |_, _| {})?;
    let relaxed = tr.final_state.expect("run returns a final state");
    let pseudo_time = relaxed.time - s0.time;

    let kkt = Kkt {
        model,
        g,
        m_bulk,
        surf,
    };
    let n = g.node_count();
    let mut phi = relaxed.phi;
    let start = State::new(phi.clone(), 0.0);
    let (l1, l2) = multipliers(&start, model, g)?;
    let mut lam = vec![0.0; kkt.size()];
    lam[n] = l1;
    match surf {
        SurfaceMass::Total(_) => lam[n + 1] = l2,
        SurfaceMass::PerCircle(_) => {
            let lc = circle_multipliers(&start, model, g)?;
            lam[n + 1] = lc[0];
            lam[n + 2] = lc[1];
        }
    }
    let mut r = kkt.residual(&phi, &lam)?;
    let mut iterations = 0;
    let mut verdict = Verdict::Stalled;

    let done = |phi: &BulkField, lam: &[f64], r: &DVector<f64>| -> Result<bool> {
        let s = State::new(phi.clone(), 0.0);
        let (rb, rs) = stationary_residual_per_circle(&s, lam[n], kkt.lambda2(lam), model, g)?;
        Ok(rb.max(rs) <= opts.tol && r.rows(n, r.len() - n).amax() <= 1e-12)
    };

    while iterations <= opts.max_iter {
        if done(&phi, &lam, &r)? {
            verdict = Verdict::Converged;
            break;
        }
        if iterations == opts.max_iter {
            break;
        }
        iterations += 1;
        let jac = kkt.jacobian(&phi);
        let norm0 = r.amax();

        let mut candidates: Vec<DVector<f64>> = Vec::new();
        if let Some(d) = jac.clone().lu().solve(&(-&r)) {
            if d.iter().all(|v| v.is_finite()) {
                candidates.push(d);
            }
        }
        let jt = jac.transpose();
        let normal = &jt * &jac;
        let grad = &jt * &r;
        let scale = normal.diagonal().amax().max(1.0);
        for p in [1e-10, 1e-7, 1e-4] {
            let mut m = normal.clone();
            for i in 0..m.nrows() {
                m[(i, i)] += p * scale;
            }
            if let Some(d) = m.cholesky().map(|c| c.solve(&(-&grad))) {
                candidates.push(d);
            }
        }

        let mut accepted = false;
        'outer: for d in candidates {
            let mut step = 1.0;
            for _ in 0..30 {
                let mut trial = phi.clone();
                for (v, dv) in trial.values_mut().iter_mut().zip(d.iter()) {
                    *v += step * dv;
                }
                let tl: Vec<f64> = lam
                    .iter()
                    .zip(d.iter())
                    .map(|(l, dl)| l + step * dl)
                    .collect();
                let rt = kkt.residual(&trial, &tl)?;
                if rt.amax() < (1.0 - 1e-4 * step) * norm0 {
                    phi = trial;
                    lam = tl;
                    r = rt;
                    accepted = true;
                    break 'outer;
                }
                step *= 0.5;
            }
        }
        if !accepted {
            break;
        }
    }

    let state = State::new(phi, relaxed.time);
    let lambda2_circles = kkt.lambda2(&lam);
    let (residual_bulk, residual_surf) =
        stationary_residual_per_circle(&state, lam[n], lambda2_circles, model, g)?;
    Ok(StationaryResult {
        state,
        lambda1: lam[n],
        lambda2: 0.5 * (lambda2_circles[0] + lambda2_circles[1]),
        lambda2_circles,
        residual_bulk,
        residual_surf,
        iterations,
        pseudo_time,
        verdict,
    })
}

/// Discrete `L²(Ω) × L²(Γ)` norm.
pub fn state_norm(f: &BulkField, g: &Grid) -> f64 {
    let sq = f.map(|v| v * v);
    let surf: f64 = Circle::BOTH
        .iter()
        .map(|&c| sq.row(c.row(g)).iter().sum::<f64>() * g.dx())
        .sum();
    (bulk_integral(&sq, g) + surf).sqrt()
}

/// Random perturbation with zero interior sum and zero mean on each circle,
/// scaled to [`state_norm`] `eps`.
pub fn mass_neutral_perturbation(g: &Grid, eps: f64, rng: &mut impl Rng) -> BulkField {
    let mut z = BulkField::from_values(
        g,
        (0..g.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
    .expect("shape matches grid");
    let interior = g.nx() * (g.ny() - 1);
    let mean: f64 = (1..g.ny()).flat_map(|j| z.row(j).to_vec()).sum::<f64>() / interior as f64;
    for j in 1..g.ny() {
        for v in z.row_mut(j) {
            *v -= mean;
        }
    }
    for c in Circle::BOTH {
        let row = z.row_mut(c.row(g));
        let m = row.iter().sum::<f64>() / row.len() as f64;
        for v in row {
            *v -= m;
        }
    }
    let norm = state_norm(&z, g);
    if eps == 0.0 || norm == 0.0 {
        return BulkField::zeros(g);
    }
    z.map(|v| v * eps / norm)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeOptions {
    pub trials: usize,
    pub eps: f64,
    pub t_probe: f64,
    pub params: SolverParams,
    /// A trajectory has escaped once its distance exceeds this.
    pub escape_radius: f64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialOutcome {
    pub max_excursion: f64,
    pub final_excursion: f64,
    pub final_energy: f64,
}

/// Empirical evidence on Lyapunov stability; not a proof.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityVerdict {
    pub n_trials: usize,
    pub max_excursion: f64,
    pub escaped: bool,
    /// Smallest final energy over all trials minus the equilibrium energy.
    pub energy_comparison: f64,
    pub trials: Vec<TrialOutcome>,
}

/// `stability_probe`: runs `trials` trajectories from mass-neutral
/// perturbations of radius `eps` for time `t_probe`.
pub fn stability_probe(
    eq: &State,
    model: &Model,
    g: &Grid,
    opts: &ProbeOptions,
) -> Result<StabilityVerdict> {
    if opts.trials == 0 {
        return Err(Error::InvalidParameter {
            name: "trials",
            reason: "need at least one trial".into(),
        });
    }
    if !(opts.eps >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "eps",
            reason: format!("must be >= 0, got {}", opts.eps),
        });
    }
    let e_star = total_energy(eq, model, g)?.e_total;
    let base = State::new(eq.phi.clone(), 0.0);
    let trials: Vec<TrialOutcome> = (0..opts.trials)
        .into_par_iter()
        .map(|t| -> Result<TrialOutcome> {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(t as u64));
            let z = mass_neutral_perturbation(g, opts.eps, &mut rng);
            let s0 = State::new(base.phi.lin_comb(1.0, &z, 1.0), 0.0);
            if opts.eps == 0.0 {
                return Ok(TrialOutcome {
                    max_excursion: 0.0,
                    final_excursion: 0.0,
                    final_energy: e_star,
                });
            }
            let mut stepper = Stepper::new(g.clone(), model.clone(), opts.params.clone())?;
            let mut max_exc: f64 = state_norm(&z, g);
            let ro = RunOptions {
                t_end: opts.t_probe,
                cadence: usize::MAX,
                snapshot_every: None,
                eq_tol: 0.0,
            };
            let tr = run(&mut stepper, &s0, &ro, &mut |s, _| {
                let d = state_norm(&s.phi.lin_comb(1.0, &base.phi, -1.0), g);
                max_exc = max_exc.max(d);
            })?;
            let fin = tr.final_state.expect("final state");
            Ok(TrialOutcome {
                max_excursion: max_exc,
                final_excursion: state_norm(&fin.phi.lin_comb(1.0, &base.phi, -1.0), g),
                final_energy: total_energy(&fin, model, g)?.e_total,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_excursion = trials.iter().map(|t| t.max_excursion).fold(0.0, f64::max);
    let energy_comparison = trials
        .iter()
        .map(|t| t.final_energy - e_star)
        .fold(f64::INFINITY, f64::min);
    Ok(StabilityVerdict {
        n_trials: opts.trials,
        max_excursion,
        escaped: max_excursion > opts.escape_radius,
        energy_comparison,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (Grid, Model) {
        (
            Grid::new(8, 8, 1.0, 1.0).unwrap(),
            Model::quartic(0.1).unwrap(),
        )
    }

    #[test]
    fn constant_multipliers() {
        let (g, m) = setup();
        for m0 in [0.0, 0.5, -0.7] {
            let s = State::constant(&g, m0);
            let (l1, l2) = multipliers(&s, &m, &g).unwrap();
            let fp = m0 * m0 * m0 - m0;
            assert!((l1 - fp).abs() < 1e-13);
            assert!((l2 - (m0 + fp)).abs() < 1e-13);
        }
        let s = State::constant(&g, 0.0);
        assert_eq!(multipliers(&s, &m, &g).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn trivial_equilibrium_needs_no_newton() {
        let (g, m) = setup();
        let s = State::constant(&g, 0.5);
        let r = solve_stationary(&s, 0.5, 0.5, &m, &g, &Default::default()).unwrap();
        assert!(r.converged());
        assert_eq!(r.iterations, 0);
        assert!((r.lambda1 + 0.375).abs() < 1e-12);
        assert!((r.lambda2 - 0.125).abs() < 1e-12);
    }

    #[test]
    fn projection_hits_masses() {
        let (g, _) = setup();
        let s = State::new(BulkField::from_fn(&g, |x, y| x * y), 0.0);
        let p = project_masses(&s, 0.3, -0.2, &g);
        assert!((bulk_mean(&p.phi, &g) - 0.3).abs() < 1e-14);
        assert!((boundary_mean(&p.phi, &g) + 0.2).abs() < 1e-14);
    }

    #[test]
    fn compatible_constant_state_has_zero_gap() {
        let (g, m) = setup();
        let sys = multiplier_system(&State::constant(&g, 0.3), &m, &g).unwrap();
        assert!(sys.solve().is_none());
        assert!(sys.compatibility_gap().abs() < 1e-13);
    }

    #[test]
    fn perturbations_are_mass_neutral() {
        let (g, _) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let z = mass_neutral_perturbation(&g, 1e-3, &mut rng);
        assert!(bulk_mean(&z, &g).abs() < 1e-18);
        for c in Circle::BOTH {
            assert!(z.row(c.row(&g)).iter().sum::<f64>().abs() < 1e-17);
        }
        assert!((state_norm(&z, &g) - 1e-3).abs() < 1e-15);
        assert_eq!(mass_neutral_perturbation(&g, 0.0, &mut rng).max_abs(), 0.0);
    }
}
