//! Checks on computed trajectories: conservation, the energy law, decay
//! rates, a manufactured elliptic problem and sensitivity to initial data.

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::energy::{EnergyReport, State};
use crate::error::{Error, Result};
use crate::geometry::{BulkField, Circle, Grid, TraceField};
use crate::solver::solve_elliptic;

/// Recorded energy reports and optional snapshots of one run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub reports: Vec<EnergyReport>,
    pub snapshots: Vec<State>,
    pub converged: bool,
    pub steps: usize,
    pub halvings: usize,
    pub final_state: Option<State>,
}

impl Trajectory {
    pub fn push(&mut self, r: EnergyReport) {
        self.reports.push(r);
    }

    pub fn times(&self) -> Vec<f64> {
        self.reports.iter().map(|r| r.time).collect()
    }

    pub fn last(&self) -> Option<&EnergyReport> {
        self.reports.last()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MassComponent {
    Bulk,
    Bottom,
    Top,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConservationReport {
    pub drift_bulk: f64,
    pub drift_bot: f64,
    pub drift_top: f64,
    /// First sample whose drift exceeds the tolerance.
    pub first_violation: Option<(usize, MassComponent)>,
}

impl ConservationReport {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }

    pub fn max_drift(&self) -> f64 {
        self.drift_bulk.max(self.drift_bot).max(self.drift_top)
    }
}

/// `check_conservation`: drift of the three masses from their initial values.
pub fn check_conservation(tr: &Trajectory, tol: f64) -> ConservationReport {
    let mut rep = ConservationReport {
        drift_bulk: 0.0,
        drift_bot: 0.0,
        drift_top: 0.0,
        first_violation: None,
    };
    let Some(first) = tr.reports.first() else {
        return rep;
    };
    for (idx, r) in tr.reports.iter().enumerate() {
        let d = [
            ((r.m_bulk - first.m_bulk).abs(), MassComponent::Bulk),
            ((r.m_bot - first.m_bot).abs(), MassComponent::Bottom),
            ((r.m_top - first.m_top).abs(), MassComponent::Top),
        ];
        rep.drift_bulk = rep.drift_bulk.max(d[0].0);
        rep.drift_bot = rep.drift_bot.max(d[1].0);
        rep.drift_top = rep.drift_top.max(d[2].0);
        if rep.first_violation.is_none() {
            if let Some(&(_, c)) = d.iter().find(|(v, _)| !(*v <= tol)) {
                rep.first_violation = Some((idx, c));
            }
        }
    }
    rep
}

/// Per-step defects `(t_{n+1}, |ΔE/Δt + d_bulk + d_surf + d_visc|)` of a
/// trajectory recorded at every step.
pub fn energy_defects(tr: &Trajectory) -> Vec<(f64, f64)> {
    tr.reports
        .windows(2)
        .map(|w| {
            let dt = w[1].time - w[0].time;
            let de = (w[1].e_total - w[0].e_total) / dt;
            (w[1].time, (de + w[1].dissipation()).abs())
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyLawReport {
    /// Per run: energy non-increasing up to the relative tolerance.
    pub monotone: Vec<bool>,
    /// Largest relative increase `(E_{n+1} - E_n)/|E_n|` seen in any run.
    pub worst_uptick: f64,
    /// Per run: mean defect over the second half of the horizon.
    pub mean_defects: Vec<f64>,
    /// `mean_defects[i] / mean_defects[i + 1]`.
    pub ratios: Vec<f64>,
    pub dissipation_nonnegative: bool,
}

impl EnergyLawReport {
    pub fn ratios_within(&self, lo: f64, hi: f64) -> bool {
        self.ratios.iter().all(|r| (lo..=hi).contains(r))
    }
}

/// `check_energy_law`: monotonicity of each run and the dt-scaling of the
/// defect across runs ordered from coarsest to finest step. Defects are
/// averaged over `t ≥ t_end/2`, after the fast initial transient.
pub fn check_energy_law(runs: &[Trajectory], uptick_tol: f64) -> EnergyLawReport {
    let mut monotone = Vec::new();
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut mean_defects = Vec::new();
    let mut nonneg = true;
    for tr in runs {
        let mut ok = true;
        for w in tr.reports.windows(2) {
            let up = (w[1].e_total - w[0].e_total) / w[0].e_total.abs().max(f64::MIN_POSITIVE);
            worst = worst.max(up);
            if up > uptick_tol {
                ok = false;
            }
        }
        nonneg &= tr
            .reports
            .iter()
            .all(|r| r.d_bulk >= 0.0 && r.d_surf >= 0.0 && r.d_visc >= 0.0);
        monotone.push(ok);
        let d = energy_defects(tr);
        let t_end = tr.reports.last().map_or(0.0, |r| r.time);
        let t0 = tr.reports.first().map_or(0.0, |r| r.time);
        let half: Vec<f64> = d
            .iter()
            .filter(|(t, _)| *t >= t0 + 0.5 * (t_end - t0))
            .map(|p| p.1)
            .collect();
        mean_defects.push(if half.is_empty() {
            0.0
        } else {
            half.iter().sum::<f64>() / half.len() as f64
        });
    }
    let ratios = mean_defects.windows(2).map(|w| w[0] / w[1]).collect();
    EnergyLawReport {
        monotone,
        worst_uptick: if worst.is_finite() { worst } else { 0.0 },
        mean_defects,
        ratios,
        dissipation_nonnegative: nonneg,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecayModel {
    /// `gap ≈ C (1 + t)^(-β)`
    Power,
    /// `gap ≈ C e^(-r t)`
    Exponential,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateFit {
    pub model: DecayModel,
    /// `β` or `r` of the selected model.
    pub exponent: f64,
    /// RMS residual of the selected model on `ln gap`.
    pub residual: f64,
    /// Łojasiewicz exponent: `(1 - 1/β)/2` for a power law, `½` otherwise.
    pub theta: f64,
    pub power: (f64, f64),
    pub exponential: (f64, f64),
    pub monotone: bool,
    pub decaying: bool,
}

fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let icpt = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - icpt - slope * a).powi(2))
        .sum();
    (slope, icpt, (rss / n).sqrt())
}

/// `fit_decay_rate`: least-squares fits of `ln gap` against `ln(1 + t)` and
/// against `t`; the model with the smaller residual is selected.
pub fn fit_decay_rate(times: &[f64], gaps: &[f64]) -> Result<RateFit> {
    if times.len() != gaps.len() || times.len() < 3 {
        return Err(Error::Fit(format!(
            "need at least 3 paired samples, got {} times and {} gaps",
            times.len(),
            gaps.len()
        )));
    }
    if let Some(i) = gaps.iter().position(|g| !(*g > 0.0 && g.is_finite())) {
        return Err(Error::Fit(format!("gap {i} = {} is not positive", gaps[i])));
    }
    let lg: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
    let lt: Vec<f64> = times.iter().map(|t| (1.0 + t).ln()).collect();
    let (ps, _, pr) = line_fit(&lt, &lg);
    let (es, _, er) = line_fit(times, &lg);
    let monotone = gaps.windows(2).all(|w| w[1] <= w[0]);
    let (model, exponent, residual, theta) = if pr <= er {
        (DecayModel::Power, -ps, pr, 0.5 * (1.0 + ps.recip()))
    } else {
        (DecayModel::Exponential, -es, er, 0.5)
    };
    let decaying = monotone && gaps[gaps.len() - 1] < gaps[0] && exponent > 0.0;
    Ok(RateFit {
        model,
        exponent,
        residual,
        theta,
        power: (-ps, pr),
        exponential: (-es, er),
        monotone,
        decaying,
    })
}

/// Mean energy over the last 5% of the samples.
pub fn terminal_energy(tr: &Trajectory) -> Option<f64> {
    let n = tr.reports.len();
    if n == 0 {
        return None;
    }
    let k = (n / 20).max(1);
    Some(tr.reports[n - k..].iter().map(|r| r.e_total).sum::<f64>() / k as f64)
}

/// Time after the last dissipation peak at which `d_bulk + d_surf` has
/// fallen by the factor `drop`.
pub fn relaxation_onset(tr: &Trajectory, drop: f64) -> Option<f64> {
    let d: Vec<f64> = tr.reports.iter().map(|r| r.d_bulk + r.d_surf).collect();
    let peak = (1..d.len().saturating_sub(1))
        .filter(|&i| d[i] >= d[i - 1] && d[i] >= d[i + 1])
        .last()
        .unwrap_or(0);
    (peak..d.len())
        .find(|&i| d[i] <= d[peak] / drop)
        .map(|i| tr.reports[i].time)
}

/// `(times, E - E_inf)` for samples with `t ≥ t_start` and a gap clearly
/// above the plateau noise; `E_inf` is [`terminal_energy`].
pub fn energy_gap_tail(tr: &Trajectory, t_start: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    let e_inf = terminal_energy(tr)?;
    let n = tr.reports.len();
    let k = (n / 20).max(1);
    let spread = tr.reports[n - k..]
        .iter()
        .map(|r| (r.e_total - e_inf).abs())
        .fold(0.0, f64::max);
    let floor = 100.0 * spread + 1e-12 * e_inf.abs();
    let (t, g): (Vec<f64>, Vec<f64>) = tr.reports[..n - k]
        .iter()
        .filter(|r| r.time >= t_start)
        .map(|r| (r.time, r.e_total - e_inf))
        .take_while(|(_, g)| *g > floor)
        .unzip();
    Some((t, g))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EllipticLevel {
    pub n: usize,
    pub err_phi: f64,
    pub err_psi: f64,
    /// `error / (‖h₁‖ + ‖h₂‖)`
    pub error_ratio: f64,
    /// `‖φ_h‖ / (‖h₁‖ + ‖h₂‖)`
    pub solution_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EllipticReport {
    pub kappa: f64,
    pub levels: Vec<EllipticLevel>,
    pub orders_phi: Vec<f64>,
    pub orders_psi: Vec<f64>,
}

impl EllipticReport {
    pub fn min_order(&self) -> f64 {
        self.orders_phi
            .iter()
            .chain(&self.orders_psi)
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// `manufactured_elliptic_test` on the unit strip with
/// `φ = cos(2πx/Lx) cos(πy/Ly)`.
pub fn manufactured_elliptic_test(resolutions: &[usize], kappa: f64) -> Result<EllipticReport> {
    use std::f64::consts::PI;
    let (lx, ly) = (1.0, 1.0);
    let (a, b) = (2.0 * PI / lx, PI / ly);
    let exact = move |x: f64, y: f64| (a * x).cos() * (b * y).cos();
    let mut levels = Vec::new();
    for &n in resolutions {
        let g = Grid::new(n, n, lx, ly)?;
        let h1 = BulkField::from_fn(&g, |x, y| (a * a + b * b) * exact(x, y));
        // ∂ₙφ vanishes on both circles.
        let h2 = |c: Circle| {
            let y = g.y(c.row(&g));
            TraceField::from_fn(&g, c, |x| (kappa * a * a + 1.0) * exact(x, y))
        };
        let (hb, ht) = (h2(Circle::Bottom), h2(Circle::Top));
        let phi = solve_elliptic(&h1, &hb, &ht, kappa, &g)?;
        let want = BulkField::from_fn(&g, exact);
        let err_phi = phi.max_abs_diff(&want);
        let err_psi = Circle::BOTH
            .iter()
            .flat_map(|&c| {
                let j = c.row(&g);
                phi.row(j)
                    .iter()
                    .zip(want.row(j))
                    .map(|(u, v)| (u - v).abs())
                    .collect::<Vec<_>>()
            })
            .fold(0.0, f64::max);
        let hn = h1.max_abs()
            + hb.values
                .iter()
                .chain(&ht.values)
                .map(|v| v.abs())
                .fold(0.0, f64::max);
        levels.push(EllipticLevel {
            n,
            err_phi,
            err_psi,
            error_ratio: err_phi.max(err_psi) / hn,
            solution_ratio: phi.max_abs() / hn,
        });
    }
    let order = |f: fn(&EllipticLevel) -> f64| -> Vec<f64> {
        levels
            .windows(2)
            .map(|w| {
                (f(&w[0]) / f(&w[1])).ln() / (w[1].n as f64 / w[0].n as f64).ln()
            })
            .collect()
    };
    let orders_phi = order(|l| l.err_phi);
    let orders_psi = order(|l| l.err_psi);
    Ok(EllipticReport {
        kappa,
        levels,
        orders_phi,
        orders_psi,
    })
}

/// Discrete `H⁻¹` proxy of a mass-neutral difference: the bulk part inverts
/// the Neumann Laplacian mode by mode on interior rows, the surface part
/// divides each nonzero Fourier coefficient of the trace by its symbol. The
/// `x`-mean of each trace is excluded.
pub fn dual_norm(f: &BulkField, g: &Grid) -> f64 {
    let (nx, ny) = (g.nx(), g.ny());
    let m = ny - 1;
    let idy2 = 1.0 / (g.dy() * g.dy());
    let fft = FftPlanner::new().plan_fft_forward(nx);
    let hat: Vec<Vec<Complex64>> = (0..=ny)
        .map(|j| {
            let mut b: Vec<Complex64> = f.row(j).iter().map(|&v| Complex64::new(v, 0.0)).collect();
            fft.process(&mut b);
            b
        })
        .collect();

    let mut bulk = 0.0;
    for k in 0..nx {
        let sigma = g.symbol(k);
        let mut a = DMatrix::<f64>::zeros(m, m);
        for r in 0..m {
            let mut d = sigma;
            if r > 0 {
                a[(r, r - 1)] = -idy2;
                d += idy2;
            }
            if r + 1 < m {
                a[(r, r + 1)] = -idy2;
                d += idy2;
            }
            a[(r, r)] = d;
        }
        let rhs_re = DVector::from_fn(m, |r, _| hat[r + 1][k].re);
        let rhs_im = DVector::from_fn(m, |r, _| hat[r + 1][k].im);
        if k == 0 {
            // kernel = constants; the rows hold a mean-free profile
            a.add_scalar_mut(1.0 / m as f64);
        }
        let lu = a.lu();
        let (Some(ur), Some(ui)) = (lu.solve(&rhs_re), lu.solve(&rhs_im)) else {
            continue;
        };
        bulk += rhs_re.dot(&ur) + rhs_im.dot(&ui);
    }
    bulk *= g.dx() * g.dy() / nx as f64;

    let mut surf = 0.0;
    for c in Circle::BOTH {
        let row = &hat[c.row(g)];
        for (k, v) in row.iter().enumerate().skip(1) {
            surf += v.norm_sqr() / g.symbol(k);
        }
    }
    surf *= g.dx() / nx as f64;
    (bulk + surf).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityReport {
    pub times: Vec<f64>,
    /// `‖φ_a(t) - φ_b(t)‖ / ‖φ_a(0) - φ_b(0)‖` in the dual proxy norm.
    pub ratios: Vec<f64>,
    pub initial_norm: f64,
    pub final_norm: f64,
    /// Smallest `K` with `ratio(t) ≤ e^{K t}` at every snapshot.
    pub growth_rate: f64,
    /// Both runs coincide at every snapshot.
    pub exact_match: bool,
}

/// `perturbation_sensitivity`: compares two runs snapshot by snapshot.
pub fn perturbation_sensitivity(
    run_a: &[State],
    run_b: &[State],
    g: &Grid,
) -> Result<SensitivityReport> {
    if run_a.len() != run_b.len() || run_a.is_empty() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} snapshots", run_a.len()),
            got: run_b.len().to_string(),
        });
    }
    for (a, b) in run_a.iter().zip(run_b) {
        if (a.time - b.time).abs() > 1e-12 * a.time.abs().max(1.0) {
            return Err(Error::ShapeMismatch {
                expected: format!("snapshot at t = {}", a.time),
                got: format!("t = {}", b.time),
            });
        }
    }
    let (a0, b0) = (&run_a[0], &run_b[0]);
    let interior = |s: &State| (1..g.ny()).flat_map(|j| s.phi.row(j).to_vec()).sum::<f64>();
    let scale = 1e-12 * (1.0 + a0.phi.max_abs()) * g.node_count() as f64;
    if (interior(a0) - interior(b0)).abs() > scale {
        return Err(Error::MassMismatch(format!(
            "bulk sums differ: {} vs {}",
            interior(a0),
            interior(b0)
        )));
    }
    for c in Circle::BOTH {
        let sa: f64 = a0.phi.row(c.row(g)).iter().sum();
        let sb: f64 = b0.phi.row(c.row(g)).iter().sum();
        if (sa - sb).abs() > scale {
            return Err(Error::MassMismatch(format!(
                "{} circle sums differ: {sa} vs {sb}",
                c.name()
            )));
        }
    }
    let norms: Vec<f64> = run_a
        .iter()
        .zip(run_b)
        .map(|(a, b)| dual_norm(&a.phi.lin_comb(1.0, &b.phi, -1.0), g))
        .collect();
    let times: Vec<f64> = run_a.iter().map(|s| s.time - a0.time).collect();
    let initial_norm = norms[0];
    let exact_match = norms.iter().all(|n| *n == 0.0);
    let ratios: Vec<f64> = if initial_norm > 0.0 {
        norms.iter().map(|n| n / initial_norm).collect()
    } else {
        vec![1.0; norms.len()]
    };
    let growth_rate = times
        .iter()
        .zip(&ratios)
        .filter(|(t, _)| **t > 0.0)
        .map(|(t, r)| r.ln() / t)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SensitivityReport {
        times,
        ratios,
        initial_norm,
        final_norm: *norms.last().unwrap(),
        growth_rate: if growth_rate.is_finite() {
            growth_rate
        } else {
            0.0
        },
        exact_match,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(t: f64, e: f64, m: f64) -> EnergyReport {
        EnergyReport {
            time: t,
            e_total: e,
            e_bulk: e,
            m_bulk: m,
            m_bot: m,
            m_top: m,
            ..Default::default()
        }
    }

    #[test]
    fn constant_trajectory_conserves_exactly() {
        let tr = Trajectory {
            reports: (0..5).map(|i| report(i as f64, 1.0, 0.3)).collect(),
            ..Default::default()
        };
        let c = check_conservation(&tr, 0.0);
        assert!(c.passed());
        assert_eq!(c.max_drift(), 0.0);
        let e = check_energy_law(&[tr], 1e-10);
        assert_eq!(e.mean_defects, vec![0.0]);
    }

    #[test]
    fn corrupted_mass_is_located() {
        let mut tr = Trajectory {
            reports: (0..5).map(|i| report(i as f64, 1.0, 0.3)).collect(),
            ..Default::default()
        };
        tr.reports[3].m_top += 1e-6;
        let c = check_conservation(&tr, 1e-12);
        assert_eq!(c.first_violation, Some((3, MassComponent::Top)));
    }

    #[test]
    fn synthetic_power_law() {
        let t: Vec<f64> = (0..200).map(|i| 0.5 * i as f64).collect();
        let g: Vec<f64> = t.iter().map(|t| (1.0 + t).powi(-2)).collect();
        let f = fit_decay_rate(&t, &g).unwrap();
        assert_eq!(f.model, DecayModel::Power);
        assert!((f.exponent - 2.0).abs() < 1e-6);
        assert!((f.theta - 0.25).abs() < 1e-6);
        assert!(f.residual < 1e-8);
    }

    #[test]
    fn synthetic_exponential() {
        let t: Vec<f64> = (0..200).map(|i| 0.01 * i as f64).collect();
        let g: Vec<f64> = t.iter().map(|t| (-3.0 * t).exp()).collect();
        let f = fit_decay_rate(&t, &g).unwrap();
        assert_eq!(f.model, DecayModel::Exponential);
        assert!((f.exponent - 3.0).abs() < 1e-6);
        assert!(f.residual < 1e-8);
    }

    #[test]
    fn constant_gaps_are_not_decaying() {
        let t = [0.0, 1.0, 2.0, 3.0];
        let f = fit_decay_rate(&t, &[1.0; 4]).unwrap();
        assert!(!f.decaying);
        assert!(fit_decay_rate(&t, &[1.0, 0.0, 1.0, 1.0]).is_err());
        let f = fit_decay_rate(&t, &[1.0, 0.5, 0.7, 0.2]).unwrap();
        assert!(!f.monotone && !f.decaying);
    }

    #[test]
    fn dual_norm_of_single_mode() {
        let g = Grid::new(16, 16, 2.0, 1.0).unwrap();
        let k = std::f64::consts::PI;
        // interior-only cosine in x: the Neumann solve decouples in y
        let mut f = BulkField::from_fn(&g, |x, _| (k * x).cos());
        for c in Circle::BOTH {
            f.row_mut(c.row(&g)).fill(0.0);
        }
        let sigma = g.symbol(1);
        let want = (g.dx() * g.dy() * 16.0 * 15.0 * 0.5 / sigma).sqrt();
        assert!((dual_norm(&f, &g) - want).abs() < 1e-12 * want);
    }

    #[test]
    fn elliptic_constant_solution_is_exact() {
        let g = Grid::new(8, 8, 1.0, 1.0).unwrap();
        let h1 = BulkField::zeros(&g);
        let hb = TraceField::constant(&g, Circle::Bottom, 0.7);
        let ht = TraceField::constant(&g, Circle::Top, 0.7);
        let phi = solve_elliptic(&h1, &hb, &ht, 0.1, &g).unwrap();
        assert!(phi.values().iter().all(|v| (v - 0.7).abs() < 1e-13));
    }
}
