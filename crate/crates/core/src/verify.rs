//! Self-checks behind the `verify` subcommand.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{
    check_conservation, check_energy_law, fit_decay_rate, manufactured_elliptic_test, DecayModel,
};
use crate::energy::{Model, State};
use crate::error::Result;
use crate::geometry::{BulkField, Grid};
use crate::io::{parse_snapshot, snapshot_text};
use crate::potentials::{quartic_double_well, validate_assumptions, AssumptionQuery};
use crate::solver::{assemble_mode_system, run, RunOptions, SolverParams, Stepper};
use crate::stationary::{
    mass_neutral_perturbation, multiplier_system, multipliers, solve_stationary,
    StationaryOptions,
};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifySummary {
    pub checks: Vec<CheckOutcome>,
}

impl VerifySummary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn table(&self) -> String {
        let w = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
        let mut out = format!("{:<w$}  result  {:>7}  detail\n", "check", "time/s");
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{:<w$}  {:<6}  {:>7.2}  {}",
                c.name,
                if c.passed { "PASS" } else { "FAIL" },
                c.seconds,
                c.detail
            );
        }
        let n = self.checks.iter().filter(|c| c.passed).count();
        let _ = writeln!(out, "{n}/{} checks passed", self.checks.len());
        out
    }
}

type Check = fn() -> Result<(bool, String)>;

const CHECKS: [(&str, Check); 9] = [
    ("elliptic_mms", elliptic_mms),
    ("decay_fit_synthetic", decay_fit_synthetic),
    ("constant_fixed_point", constant_fixed_point),
    ("trivial_multipliers", trivial_multipliers),
    ("mode_solve_inverse", mode_solve_inverse),
    ("short_run_invariants", short_run_invariants),
    ("multiplier_routes", multiplier_routes),
    ("snapshot_round_trip", snapshot_round_trip),
    ("quartic_assumptions", quartic_assumptions),
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|(n, _)| *n).collect()
}

/// Runs every check; an `Err` from a check counts as a failure.
pub fn run_verification() -> VerifySummary {
    let checks = CHECKS
        .iter()
        .map(|(name, f)| {
            let t0 = Instant::now();
            let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
            CheckOutcome {
                name,
                passed,
                detail,
                seconds: t0.elapsed().as_secs_f64(),
            }
        })
        .collect();
    VerifySummary { checks }
}

fn elliptic_mms() -> Result<(bool, String)> {
    let mut ok = true;
    let mut parts = Vec::new();
    for kappa in [0.01, 0.1, 1.0] {
        let r = manufactured_elliptic_test(&[16, 32, 64], kappa)?;
        let good = r
            .orders_phi
            .iter()
            .chain(&r.orders_psi)
            .all(|p| (p - 2.0).abs() <= 0.2);
        ok &= good;
        parts.push(format!("κ={kappa}: min order {:.3}", r.min_order()));
    }
    Ok((ok, parts.join(", ")))
}

fn decay_fit_synthetic() -> Result<(bool, String)> {
    let t: Vec<f64> = (0..200).map(|i| 0.05 * i as f64).collect();
    let pw: Vec<f64> = t.iter().map(|t| (1.0 + t).powi(-2)).collect();
    let ex: Vec<f64> = t.iter().map(|t| (-3.0 * t).exp()).collect();
    let a = fit_decay_rate(&t, &pw)?;
    let b = fit_decay_rate(&t, &ex)?;
    let ok = a.model == DecayModel::Power
        && (a.exponent - 2.0).abs() < 1e-6
        && b.model == DecayModel::Exponential
        && (b.exponent - 3.0).abs() < 1e-6;
    Ok((ok, format!("β = {:.9}, r = {:.9}", a.exponent, b.exponent)))
}

fn constant_fixed_point() -> Result<(bool, String)> {
    let g = Grid::new(16, 16, 1.0, 1.0)?;
    let mut stepper = Stepper::new(g.clone(), Model::quartic(0.1)?, SolverParams::default())?;
    let mut worst: f64 = 0.0;
    for m in [0.0, 0.5] {
        let s = State::constant(&g, m);
        let (next, _) = stepper.step(&s)?;
        worst = worst.max(next.phi.max_abs_diff(&s.phi));
    }
    Ok((worst <= 1e-12, format!("max change {worst:.2e}")))
}

fn trivial_multipliers() -> Result<(bool, String)> {
    let g = Grid::new(16, 16, 1.0, 1.0)?;
    let model = Model::quartic(0.1)?;
    let s = State::constant(&g, 0.5);
    let r = solve_stationary(&s, 0.5, 0.5, &model, &g, &StationaryOptions::default())?;
    let ok = r.converged() && (r.lambda1 + 0.375).abs() <= 1e-10 && (r.lambda2 - 0.125).abs() <= 1e-10;
    Ok((ok, format!("λ₁ = {:.12}, λ₂ = {:.12}", r.lambda1, r.lambda2)))
}

fn mode_solve_inverse() -> Result<(bool, String)> {
    use rand::Rng;
    use rustfft::num_complex::Complex64;
    let g = Grid::new(16, 12, 2.0, 1.0)?;
    let model = Model::quartic(0.1)?;
    let p = SolverParams::default().with_alpha(0.1);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for k in [0, 1, 5, 8] {
        let sys = assemble_mode_system(k, &p, &model, &g)?;
        let x: Vec<Complex64> = (0..sys.size())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mut b = vec![Complex64::default(); x.len()];
        sys.apply(&x, &mut b);
        sys.solve_in_place(&mut b);
        let err = x.iter().zip(&b).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        worst = worst.max(err);
    }
    Ok((worst < 1e-9, format!("max error {worst:.2e}")))
}

fn short_run_invariants() -> Result<(bool, String)> {
    let g = Grid::new(32, 32, 8.0, 8.0)?;
    let model = Model::quartic(0.1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let z = mass_neutral_perturbation(&g, 0.05 * g.area().sqrt(), &mut rng);
    let s0 = State::new(z, 0.0);
    let mut st = Stepper::new(g, model, SolverParams::default().with_dt(1e-3))?;
    let opts = RunOptions {
        t_end: 0.2,
        eq_tol: 0.0,
        ..Default::default()
    };
    let tr = run(&mut st, &s0, &opts, &mut |_, _| {})?;
    let c = check_conservation(&tr, 1e-12);
    let e = check_energy_law(std::slice::from_ref(&tr), 1e-10);
    Ok((
        c.passed() && e.monotone.iter().all(|m| *m) && e.dissipation_nonnegative,
        format!(
            "{} steps, mass drift {:.1e}, worst uptick {:.1e}",
            tr.steps,
            c.max_drift(),
            e.worst_uptick
        ),
    ))
}

fn multiplier_routes() -> Result<(bool, String)> {
    let g = Grid::new(16, 16, 2.0, 2.0)?;
    let model = Model::quartic(0.1)?;
    let init = State::new(
        BulkField::from_fn(&g, |_, y| 0.2 + 0.3 * (std::f64::consts::PI * y / 2.0).cos()),
        0.0,
    );
    let r = solve_stationary(&init, 0.2, -0.3, &model, &g, &StationaryOptions::default())?;
    let (m1, m2) = multipliers(&r.state, &model, &g)?;
    let sys = multiplier_system(&r.state, &model, &g)?;
    let Some((s1, s2)) = sys.solve() else {
        return Ok((false, "2×2 system singular".into()));
    };
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-300);
    let worst = [
        rel(r.lambda1, m1),
        rel(r.lambda1, s1),
        rel(r.lambda2, m2),
        rel(r.lambda2, s2),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    Ok((
        r.converged() && worst <= 1e-6,
        format!("λ = ({:.6}, {:.6}), spread {worst:.1e}", r.lambda1, r.lambda2),
    ))
}

fn snapshot_round_trip() -> Result<(bool, String)> {
    let g = Grid::new(8, 10, 3.0, 1.7)?;
    let phi = BulkField::from_fn(&g, |x, y| (x * 1.3).sin() * (y * 0.7).exp() / 3.0);
    let s = State::new(phi, 0.123_456_789);
    let back = parse_snapshot(&snapshot_text(&s, &g), Path::new("<memory>"))?;
    let exact = back.grid == g
        && back.state.time.to_bits() == s.time.to_bits()
        && back
            .state
            .phi
            .values()
            .iter()
            .zip(s.phi.values())
            .all(|(a, b)| a.to_bits() == b.to_bits());
    Ok((exact, format!("{} values", g.node_count())))
}

fn quartic_assumptions() -> Result<(bool, String)> {
    let f = quartic_double_well();
    let r = validate_assumptions(&f, &f, &AssumptionQuery::default())?;
    let failed: Vec<&str> = r.failures().map(|c| c.name.as_str()).collect();
    Ok((
        failed.is_empty(),
        if failed.is_empty() {
            "all sampled inequalities hold".into()
        } else {
            format!("failed: {}", failed.join(", "))
        },
    ))
}
