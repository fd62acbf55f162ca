//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

mod common;

use std::time::Instant;

use chdyn::cli::run_simulation;
use chdyn::config::parse_config;
use chdyn::diagnostics::{
    check_conservation, check_energy_law, energy_gap_tail, fit_decay_rate,
    manufactured_elliptic_test, relaxation_onset, DecayModel, Trajectory,
};
use chdyn::energy::{total_energy, Model, State};
use chdyn::geometry::{BulkField, Grid};
use chdyn::io::{read_snapshot, write_snapshot};
use chdyn::solver::{run, RunOptions, SolverParams, Stepper};
use chdyn::stationary::{
    mass_neutral_perturbation, multiplier_system, multipliers, solve_stationary,
    solve_stationary_with, stability_probe, ProbeOptions, SurfaceMass,
};
use common::{bulk_l2, dense_step, diff, quartic_d1, random_field, raw_means, rel, DenseParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn require(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lib<T>(r: chdyn::Result<T>) -> Result<T, String> {
    r.map_err(|e| format!("error: {e}"))
}

fn evolve(g: &Grid, s0: &State, model: Model, p: SolverParams, t_end: f64) -> chdyn::Result<Trajectory> {
    let mut st = Stepper::new(g.clone(), model, p)?;
    let opts = RunOptions {
        t_end,
        eq_tol: 0.0,
        ..Default::default()
    };
    run(&mut st, s0, &opts, &mut |_, _| {})
}

struct Spinodal {
    runs: Vec<Trajectory>,
    seconds: f64,
}

fn spinodal_ladder() -> chdyn::Result<Spinodal> {
    let g = Grid::new(64, 64, 8.0, 8.0)?;
    let s0 = State::new(random_field(&g, 11, 0.0, 0.1), 0.0);
    let t0 = Instant::now();
    let mut runs = vec![evolve(&g, &s0, Model::quartic(0.1)?, SolverParams::default(), 0.1)?];
    let seconds = t0.elapsed().as_secs_f64();
    for dt in [5e-5, 2.5e-5] {
        runs.push(evolve(
            &g,
            &s0,
            Model::quartic(0.1)?,
            SolverParams::default().with_dt(dt),
            0.1,
        )?);
    }
    Ok(Spinodal { runs, seconds })
}

fn mass_conservation(sp: &Spinodal) -> Outcome {
    let tr = &sp.runs[0];
    let c = check_conservation(tr, 1e-12);
    require(
        tr.steps >= 1000 && c.passed() && sp.seconds <= 60.0,
        format!(
            "{} steps in {:.1} s, drift bulk {:.1e} bottom {:.1e} top {:.1e}",
            tr.steps, sp.seconds, c.drift_bulk, c.drift_bot, c.drift_top
        ),
    )
}

fn energy_dissipation(sp: &Spinodal) -> Outcome {
    let law = check_energy_law(&sp.runs, 1e-10);
    let monotone = law.monotone.iter().all(|m| *m);
    require(
        monotone && law.ratios.len() == 2 && law.ratios_within(1.7, 2.3),
        format!(
            "monotone {monotone}, worst uptick {:.1e}, defect ratios {:.4} {:.4}",
            law.worst_uptick, law.ratios[0], law.ratios[1]
        ),
    )
}

fn trivial_equilibrium() -> Outcome {
    let g = lib(Grid::new(16, 16, 1.0, 1.0))?;
    let model = lib(Model::quartic(0.1))?;
    let mut st = lib(Stepper::new(g.clone(), model.clone(), SolverParams::default()))?;
    let mut worst_step: f64 = 0.0;
    let mut worst_lambda: f64 = 0.0;
    for m0 in [0.0, 0.5] {
        let s = State::constant(&g, m0);
        let (next, _) = lib(st.step(&s))?;
        worst_step = worst_step.max(next.phi.max_abs_diff(&s.phi));
        let r = lib(solve_stationary(&s, m0, m0, &model, &g, &Default::default()))?;
        let (l1, l2) = (quartic_d1(m0), m0 + quartic_d1(m0));
        worst_lambda = worst_lambda
            .max((r.lambda1 - l1).abs())
            .max((r.lambda2 - l2).abs());
    }
    let r = lib(solve_stationary(&State::constant(&g, 0.5), 0.5, 0.5, &model, &g, &Default::default()))?;
    require(
        worst_step <= 1e-12 && worst_lambda <= 1e-10,
        format!(
            "step change {worst_step:.1e}, multiplier error {worst_lambda:.1e}, λ(0.5) = ({:.12}, {:.12})",
            r.lambda1, r.lambda2
        ),
    )
}

fn multiplier_consistency() -> Outcome {
    let l = 2.0;
    let g = lib(Grid::new(32, 32, l, l))?;
    let model = lib(Model::quartic(0.1))?;
    let init = State::new(
        BulkField::from_fn(&g, |_, y| 0.2 + 0.3 * (std::f64::consts::PI * y / l).cos()),
        0.0,
    );
    let r = lib(solve_stationary(&init, 0.2, -0.3, &model, &g, &Default::default()))?;
    let (v1, v2) = lib(multipliers(&r.state, &model, &g))?;
    let Some((s1, s2)) = lib(multiplier_system(&r.state, &model, &g))?.solve() else {
        return Err("2×2 system singular".into());
    };
    let spread = [
        rel(r.lambda1, v1),
        rel(r.lambda1, s1),
        rel(v1, s1),
        rel(r.lambda2, v2),
        rel(r.lambda2, s2),
        rel(v2, s2),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let (_, mb, mt) = raw_means(&r.state, &g);
    let nontrivial = r.state.phi.max_abs_diff(&BulkField::constant(&g, 0.2)) > 1e-3;
    require(
        r.converged() && nontrivial && spread <= 1e-6,
        format!(
            "λ = ({:.9}, {:.9}), surface means ({mb:.3}, {mt:.3}), relative spread {spread:.1e}",
            r.lambda1, r.lambda2
        ),
    )
}

fn elliptic_orders() -> Outcome {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for kappa in [0.01, 0.1, 1.0] {
        let r = lib(manufactured_elliptic_test(&[16, 32, 64], kappa))?;
        for p in r.orders_phi.iter().chain(&r.orders_psi) {
            worst = worst.max((p - 2.0).abs());
        }
        parts.push(format!("{:.3}", r.min_order()));
    }
    let secs = t0.elapsed().as_secs_f64();
    require(
        worst <= 0.2 && secs <= 10.0,
        format!(
            "min orders {} for κ = 0.01/0.1/1, max |order - 2| = {worst:.3}, {secs:.2} s",
            parts.join("/")
        ),
    )
}

fn limit_state(g: &Grid) -> State {
    State::new(
        BulkField::from_fn(g, |x, y| {
            0.3 * (std::f64::consts::PI * x).cos() * (0.5 * y).cos() + 0.1 * (2.0 * y).sin()
        }),
        0.0,
    )
}

fn terminal(g: &Grid, s0: &State, kappa: f64, alpha: f64) -> Result<BulkField, String> {
    let tr = lib(evolve(
        g,
        s0,
        lib(Model::quartic(kappa))?,
        SolverParams::default().with_alpha(alpha),
        0.05,
    ))?;
    Ok(tr.final_state.expect("final state").phi)
}

/// Cauchy gaps `‖u(p) - u(p/2)‖` over `ps` and distances to the limit run.
fn cauchy(
    g: &Grid,
    ps: [f64; 3],
    at: impl Fn(f64) -> Result<BulkField, String>,
) -> Result<(Vec<f64>, Vec<f64>), String> {
    let limit = at(0.0)?;
    let mut gaps = Vec::new();
    let mut dist = Vec::new();
    for p in ps {
        let u = at(p)?;
        gaps.push(bulk_l2(&diff(&u, &at(p / 2.0)?), g));
        dist.push(bulk_l2(&diff(&u, &limit), g));
    }
    Ok((gaps, dist))
}

fn limit_outcome(ps: [f64; 3], gaps: &[f64], dist: &[f64]) -> Outcome {
    let decreasing = gaps[0] > gaps[1] && gaps[1] > gaps[2];
    let halved = dist[2] <= dist[0] / 2.0;
    require(
        decreasing && halved,
        format!(
            "gaps {:.3e} {:.3e} {:.3e}; ‖φ({}) - φ(0)‖ = {:.3e} vs ‖φ({}) - φ(0)‖/2 = {:.3e}",
            gaps[0], gaps[1], gaps[2], ps[2], dist[2], ps[0], dist[0] / 2.0
        ),
    )
}

fn alpha_limit() -> Outcome {
    let g = lib(Grid::new(32, 32, 2.0, 2.0))?;
    let s0 = limit_state(&g);
    let ps = [0.2, 0.1, 0.05];
    let (gaps, dist) = cauchy(&g, ps, |a| terminal(&g, &s0, 0.1, a))?;
    limit_outcome(ps, &gaps, &dist)
}

fn kappa_limit() -> Outcome {
    let g = lib(Grid::new(32, 32, 2.0, 2.0))?;
    let s0 = limit_state(&g);
    let ps = [0.2, 0.1, 0.05];
    let (gaps, dist) = cauchy(&g, ps, |k| terminal(&g, &s0, k, 0.0))?;
    limit_outcome(ps, &gaps, &dist)
}

struct Relaxed {
    g: Grid,
    model: Model,
    tr: Trajectory,
}

fn relax() -> chdyn::Result<Relaxed> {
    let g = Grid::new(32, 32, 8.0, 8.0)?;
    let model = Model::quartic(0.1)?;
    let s0 = State::new(random_field(&g, 7, 0.0, 0.01), 0.0);
    let mut st = Stepper::new(g.clone(), model.clone(), SolverParams::default().with_dt(0.01))?;
    let opts = RunOptions {
        t_end: 2000.0,
        eq_tol: 1e-7,
        ..Default::default()
    };
    let tr = run(&mut st, &s0, &opts, &mut |_, _| {})?;
    Ok(Relaxed { g, model, tr })
}

fn equilibrium_convergence(rx: &Relaxed) -> Outcome {
    let last = rx.tr.last().copied().unwrap_or_default();
    let onset = relaxation_onset(&rx.tr, 1e3).ok_or("no relaxation onset")?;
    let (t, gap) = energy_gap_tail(&rx.tr, onset).ok_or("tail too short")?;
    let fit = lib(fit_decay_rate(&t, &gap))?;

    let ts: Vec<f64> = (0..400).map(|i| 0.025 * i as f64).collect();
    let pw: Vec<f64> = ts.iter().map(|t| (1.0 + t).powi(-2)).collect();
    let ex: Vec<f64> = ts.iter().map(|t| (-3.0 * t).exp()).collect();
    let fp = lib(fit_decay_rate(&ts, &pw))?;
    let fe = lib(fit_decay_rate(&ts, &ex))?;
    let synthetic = fp.model == DecayModel::Power
        && (fp.exponent - 2.0).abs() <= 1e-6
        && fe.model == DecayModel::Exponential
        && (fe.exponent - 3.0).abs() <= 1e-6;
    require(
        last.dissipation() < 1e-8 && fit.decaying && fit.residual < 0.1 && synthetic,
        format!(
            "dissipation {:.1e} at t = {:.1}, {:?} fit rate {:.4} residual {:.3}, synthetic β {:.8} r {:.8}",
            last.dissipation(),
            last.time,
            fit.model,
            fit.exponent,
            fit.residual,
            fp.exponent,
            fe.exponent
        ),
    )
}

fn spectral_oracle() -> Outcome {
    let g = lib(Grid::new(8, 8, 1.0, 1.0))?;
    let mut worst: f64 = 0.0;
    for kappa in [0.0, 0.1] {
        for alpha in [0.0, 0.1] {
            let params = SolverParams::default().with_alpha(alpha);
            let model = lib(Model::quartic(kappa))?;
            let mut st = lib(Stepper::new(g.clone(), model, params.clone()))?;
            for seed in 0..10 {
                let phi = random_field(&g, 100 + seed, 0.1, 0.8);
                let (fast, _) = lib(st.advance(&State::new(phi.clone(), 0.0), params.dt))?;
                let dense = dense_step(
                    &phi,
                    &g,
                    &DenseParams {
                        dt: params.dt,
                        alpha,
                        kappa,
                        s_bulk: params.s_bulk,
                        s_surf: params.s_surf,
                    },
                    quartic_d1,
                    quartic_d1,
                );
                let e = fast.phi.max_abs_diff(&dense) / dense.max_abs();
                worst = worst.max(e);
            }
        }
    }
    require(
        worst <= 1e-9,
        format!("40 steps, worst relative difference {worst:.2e}"),
    )
}

fn stability(rx: &Relaxed) -> Outcome {
    let (g, model) = (&rx.g, &rx.model);
    let relaxed = rx.tr.final_state.clone().ok_or("no final state")?;
    let (mb, mbot, mtop) = relaxed.masses(g);
    let eq = lib(solve_stationary_with(
        &relaxed,
        mb,
        SurfaceMass::PerCircle([mbot, mtop]),
        model,
        g,
        &Default::default(),
    ))?;
    let stable = lib(stability_probe(
        &eq.state,
        model,
        g,
        &ProbeOptions {
            trials: 8,
            eps: 1e-3,
            t_probe: 0.05,
            params: SolverParams::default(),
            escape_radius: 5e-3,
            seed: 1,
        },
    ))?;
    let zero = State::constant(g, 0.0);
    let e0 = lib(total_energy(&zero, model, g))?.e_total;
    let unstable = lib(stability_probe(
        &zero,
        model,
        g,
        &ProbeOptions {
            trials: 8,
            eps: 1e-3,
            t_probe: 40.0,
            params: SolverParams::default().with_dt(0.01),
            escape_radius: 1e-2,
            seed: 1,
        },
    ))?;
    let escaped_lower = unstable
        .trials
        .iter()
        .filter(|t| t.max_excursion > 1e-2 && t.final_energy < e0)
        .count();
    require(
        eq.converged() && stable.max_excursion <= 5e-3 && escaped_lower >= 1,
        format!(
            "equilibrium excursion {:.2e}; from 0: {escaped_lower}/8 escaped to lower energy (max excursion {:.2e}, ΔE {:.3e})",
            stable.max_excursion, unstable.max_excursion, unstable.energy_comparison
        ),
    )
}

fn continuous_dependence() -> Outcome {
    let g = lib(Grid::new(32, 32, 4.0, 4.0))?;
    let base = random_field(&g, 5, 0.0, 0.1);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let z = mass_neutral_perturbation(&g, 1e-6, &mut rng);
    let fin = |phi: BulkField| -> Result<BulkField, String> {
        let tr = lib(evolve(
            &g,
            &State::new(phi, 0.0),
            lib(Model::quartic(0.1))?,
            SolverParams::default(),
            0.01,
        ))?;
        Ok(tr.final_state.expect("final").phi)
    };
    let u0 = fin(base.clone())?;
    let u1 = fin(base.lin_comb(1.0, &z, 1.0))?;
    let u2 = fin(base.lin_comb(1.0, &z, 2.0))?;
    let ratio = bulk_l2(&diff(&u2, &u0), &g) / bulk_l2(&diff(&u1, &u0), &g);
    require(
        (ratio - 2.0).abs() <= 0.2,
        format!("terminal difference ratio {ratio:.6}"),
    )
}

fn io_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let text = "[grid]\nnx = 16, ny = 16, lx = 4, ly = 4\n[scheme]\ndt = 1e-3\nt_end = 0.2\n\
                [initial]\nkind = random\namplitude = 0.1\nseed = 77\n";
    let mut csv = Vec::new();
    for k in 0..2 {
        let mut spec = lib(parse_config(text))?;
        spec.output_dir = dir.path().join(format!("run{k}"));
        let out = lib(run_simulation(&spec))?;
        csv.push(std::fs::read(out.dir.join("timeseries.csv")).map_err(|e| e.to_string())?);
    }
    let g = lib(Grid::new(16, 12, 3.0, 1.25))?;
    let s = State::new(random_field(&g, 3, 0.0, 1.0).map(|v| v * 1e-7 + v.powi(3)), 0.1 + 0.2);
    let path = dir.path().join("s.snap");
    lib(write_snapshot(&s, &g, &path))?;
    let back = lib(read_snapshot(&path))?;
    let bits = back.grid == g
        && back.state.time.to_bits() == s.time.to_bits()
        && back
            .state
            .phi
            .values()
            .iter()
            .zip(s.phi.values())
            .all(|(a, b)| a.to_bits() == b.to_bits());
    require(
        csv[0] == csv[1] && !csv[0].is_empty() && bits,
        format!(
            "CSV {} bytes identical {}, snapshot bit-exact {bits}",
            csv[0].len(),
            csv[0] == csv[1]
        ),
    )
}

fn main() {
    let spinodal = spinodal_ladder();
    let relaxed = relax();
    let shared_err = |e: &chdyn::Error| Err(format!("error: {e}"));

    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("mass conservation", Box::new(|| spinodal.as_ref().map_or_else(shared_err, mass_conservation))),
        ("energy dissipation", Box::new(|| spinodal.as_ref().map_or_else(shared_err, energy_dissipation))),
        ("trivial equilibrium", Box::new(trivial_equilibrium)),
        ("multiplier consistency", Box::new(multiplier_consistency)),
        ("elliptic subproblem", Box::new(elliptic_orders)),
        ("alpha limit", Box::new(alpha_limit)),
        ("kappa limit", Box::new(kappa_limit)),
        ("convergence to equilibrium", Box::new(|| relaxed.as_ref().map_or_else(shared_err, equilibrium_convergence))),
        ("spectral/real-space oracle", Box::new(spectral_oracle)),
        ("stability probe", Box::new(|| relaxed.as_ref().map_or_else(shared_err, stability))),
        ("continuous dependence", Box::new(continuous_dependence)),
        ("I/O determinism", Box::new(io_determinism)),
    ];

    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "{tag} {:>2} {name} ({:.1} s): {detail}",
            i + 1,
            t0.elapsed().as_secs_f64()
        );
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
