//! Command-line front end.
//!
//! ```text
//! chdyn simulate   <config> [--out DIR]
//! chdyn stationary <config> [--out DIR]
//! chdyn sweep      <config> [--out DIR]
//! chdyn verify
//! ```
//!
//! Exit codes: 0 success, 1 failed run or verification, 2 usage or
//! configuration error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::config::{parse_config, RunSpec};
use crate::diagnostics::{check_conservation, check_energy_law, Trajectory};
use crate::energy::total_energy;
use crate::error::{Error, Result};
use crate::io::{write_snapshot, write_timeseries, Report};
use crate::solver::{run, Stepper};
use crate::stationary::{multiplier_system, multipliers, solve_stationary};
use crate::verify::run_verification;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "chdyn", version, about = "Cahn–Hilliard with dynamic boundary conditions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate in time and write the energy time series.
    Simulate {
        config: PathBuf,
        /// Overrides `[output] dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve for an equilibrium with the masses of the initial state.
    Stationary {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in verification suite.
    Verify,
    /// One simulation per value of the swept parameter.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ConfigParse { .. } | Error::ConfigSemantic { .. } => Failure::Usage(e.to_string()),
            e => Failure::Run(e.to_string()),
        }
    }
}

/// `cli_main`: parses `argv` (program name first), runs the subcommand and
/// returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Simulate { config, out } => load(&config, out).and_then(|s| simulate(&s)),
        Command::Stationary { config, out } => load(&config, out).and_then(|s| stationary(&s)),
        Command::Sweep { config, out } => load(&config, out).and_then(|s| sweep(&s)),
        Command::Verify => verify(),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Run(m)) => {
            eprintln!("failed: {m}");
            EXIT_FAILURE
        }
    }
}

fn load(path: &Path, out: Option<PathBuf>) -> std::result::Result<RunSpec, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let mut spec = parse_config(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    if let Some(dir) = out {
        spec.output_dir = dir;
    }
    Ok(spec)
}

/// Initial state for `spec`; snapshot problems are configuration errors.
fn initial(spec: &RunSpec, g: &crate::geometry::Grid) -> std::result::Result<crate::energy::State, Failure> {
    spec.initial_state(g).map_err(|e| match e {
        Error::Io { .. } | Error::Format { .. } | Error::ShapeMismatch { .. } => {
            Failure::Usage(e.to_string())
        }
        e => e.into(),
    })
}

/// Outcome of one time integration written to `spec.output_dir`.
#[derive(Clone, Debug)]
pub struct SimulationOutput {
    pub trajectory: Trajectory,
    pub dir: PathBuf,
}

/// Runs `spec` and writes `timeseries.csv`, `final.snap`, optional
/// `snap_NNNNNN.snap` files and `report.txt` into its output directory.
pub fn run_simulation(spec: &RunSpec) -> Result<SimulationOutput> {
    let g = spec.build_grid()?;
    let model = spec.build_model()?;
    let s0 = spec.initial_state(&g)?;
    let mut stepper = Stepper::new(g.clone(), model, spec.solver_params())?;
    let tr = run(&mut stepper, &s0, &spec.run_options(), &mut |_, _| {})?;
    let dir = spec.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    write_timeseries(&tr, dir.join("timeseries.csv"))?;
    let fin = tr.final_state.as_ref().expect("run returns a final state");
    write_snapshot(fin, &g, dir.join("final.snap"))?;
    for (i, s) in tr.snapshots.iter().enumerate() {
        write_snapshot(s, &g, dir.join(format!("snap_{i:06}.snap")))?;
    }
    let cons = check_conservation(&tr, 1e-10);
    let law = check_energy_law(std::slice::from_ref(&tr), spec.scheme.max_energy_uptick);
    let last = tr.last().copied().unwrap_or_default();
    let mut r = Report::new("simulate");
    r.num("t_final", last.time)
        .text("steps", tr.steps)
        .text("halvings", tr.halvings)
        .text(
            "status",
            if tr.converged {
                "converged to equilibrium"
            } else {
                "reached t_end"
            },
        )
        .num("e_total", last.e_total)
        .num("mass_drift_bulk", cons.drift_bulk)
        .num("mass_drift_bot", cons.drift_bot)
        .num("mass_drift_top", cons.drift_top)
        .num("worst_energy_uptick", law.worst_uptick);
    r.append_to(dir.join("report.txt"))?;
    Ok(SimulationOutput {
        trajectory: tr,
        dir,
    })
}

fn simulate(spec: &RunSpec) -> std::result::Result<(), Failure> {
    let g = spec.build_grid()?;
    initial(spec, &g)?;
    let out = run_simulation(spec)?;
    let tr = &out.trajectory;
    let last = tr.last().copied().unwrap_or_default();
    if tr.converged {
        println!("converged to equilibrium at t = {:.6e}", last.time);
    }
    println!(
        "{} steps, E = {:.10e}, output in {}",
        tr.steps,
        last.e_total,
        out.dir.display()
    );
    Ok(())
}

fn stationary(spec: &RunSpec) -> std::result::Result<(), Failure> {
    let g = spec.build_grid()?;
    let model = spec.build_model()?;
    let s0 = initial(spec, &g)?;
    let (mb, mbot, mtop) = s0.masses(&g);
    let ms = 0.5 * (mbot + mtop);
    let res = solve_stationary(&s0, mb, ms, &model, &g, &spec.stationary_options())?;
    let dir = &spec.output_dir;
    write_snapshot(&res.state, &g, dir.join("stationary.snap"))?;
    let (v1, v2) = multipliers(&res.state, &model, &g)?;
    let sys = multiplier_system(&res.state, &model, &g)?;
    let mut r = Report::new("stationary");
    r.text(
        "verdict",
        if res.converged() { "converged" } else { "stalled" },
    )
    .text("iterations", res.iterations)
    .num("pseudo_time", res.pseudo_time)
    .num("lambda1", res.lambda1)
    .num("lambda2", res.lambda2)
    .num("lambda1_mean_value", v1)
    .num("lambda2_mean_value", v2)
    .num("residual_bulk", res.residual_bulk)
    .num("residual_surf", res.residual_surf)
    .num("mass_bulk", mb)
    .num("mass_surf", ms)
    .num("energy", total_energy(&res.state, &model, &g)?.e_total);
    match sys.solve() {
        Some((s1, s2)) => r.num("lambda1_system", s1).num("lambda2_system", s2),
        None => r.text("lambda_system", "singular (equal bulk and surface means)"),
    };
    r.append_to(dir.join("report.txt"))?;
    println!(
        "{}: λ₁ = {:.12e}, λ₂ = {:.12e}, residual {:.2e} after {} Newton iterations",
        if res.converged() { "converged" } else { "stalled" },
        res.lambda1,
        res.lambda2,
        res.residual(),
        res.iterations
    );
    if res.converged() {
        Ok(())
    } else {
        Err(Failure::Run("stationary solve did not converge".into()))
    }
}

fn sweep(spec: &RunSpec) -> std::result::Result<(), Failure> {
    let Some(sw) = spec.sweep.clone() else {
        return Err(Failure::Usage("sweep needs a [sweep] section".into()));
    };
    let g = spec.build_grid()?;
    initial(spec, &g)?;
    let runs: Vec<RunSpec> = sw
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut s = spec.with_sweep_value(sw.parameter, v);
            s.output_dir = spec
                .output_dir
                .join(format!("{}_{i:03}", sw.parameter.name()));
            s
        })
        .collect();
    for s in &runs {
        s.build_model()?;
        s.solver_params().validate()?;
    }
    let results: Vec<Result<SimulationOutput>> = runs.par_iter().map(run_simulation).collect();
    let mut failed = 0;
    for ((v, s), r) in sw.values.iter().zip(&runs).zip(results) {
        match r {
            Ok(o) => {
                let last = o.trajectory.last().copied().unwrap_or_default();
                println!(
                    "{} = {v}: {} steps, E = {:.10e} -> {}",
                    sw.parameter.name(),
                    o.trajectory.steps,
                    last.e_total,
                    s.output_dir.display()
                );
            }
            Err(e) => {
                failed += 1;
                eprintln!("{} = {v}: {e}", sw.parameter.name());
            }
        }
    }
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Run(format!("{failed} of {} sweep runs failed", runs.len())))
    }
}

fn verify() -> std::result::Result<(), Failure> {
    let summary = run_verification();
    print!("{}", summary.table());
    if summary.passed() {
        Ok(())
    } else {
        Err(Failure::Run("verification failed".into()))
    }
}
