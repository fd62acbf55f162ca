//! Bulk and surface potentials `F`, `G`, their structural constants, and the
//! convex splitting `F̃(y) = F(y) + (C̃+1)/2 y² - F'(0) y - F(0)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum PotentialKind {
    /// `¼(y² - 1)²`.
    QuarticDoubleWell,
    /// `(γ/2) cos θ_s sin(πy/2) - ½y²`: the wall energy of the moving contact
    /// line problem with the `½y²` surface term removed.
    ContactLine { gamma: f64, theta_s: f64 },
    /// `(c/2) y²`.
    Quadratic { curvature: f64 },
}

/// Declared structural constants.
///
/// * `lower_bound`: `C` with `value(y) >= -C`; `None` when the potential is
///   not bounded below on the real line.
/// * `curvature_bound`: `C̃` with `d2(y) >= -C̃`.
/// * `growth_coeff`, `growth_exponent`: `Ĉ`, `p` with `|d2(y)| <= Ĉ (1 + |y|^p)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialBounds {
    pub lower_bound: Option<f64>,
    pub curvature_bound: f64,
    pub growth_coeff: f64,
    pub growth_exponent: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    pub kind: PotentialKind,
    pub bounds: PotentialBounds,
    pub label: String,
}

/// `quartic_double_well`.
pub fn quartic_double_well() -> Potential {
    Potential {
        kind: PotentialKind::QuarticDoubleWell,
        bounds: PotentialBounds {
            lower_bound: Some(0.0),
            curvature_bound: 1.0,
            growth_coeff: 3.0,
            growth_exponent: 2.0,
        },
        label: "quartic".into(),
    }
}

/// `contact_line_surface`: `½y² + G(y) = (γ/2) cos θ_s sin(πy/2)`.
pub fn contact_line_surface(gamma: f64, theta_s: f64) -> Result<Potential> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidParameter {
            name: "gamma",
            reason: format!("must be positive, got {gamma}"),
        });
    }
    if !theta_s.is_finite() {
        return Err(Error::InvalidParameter {
            name: "theta_s",
            reason: "must be finite".into(),
        });
    }
    let trig = gamma * PI * PI / 8.0 * theta_s.cos().abs();
    Ok(Potential {
        kind: PotentialKind::ContactLine { gamma, theta_s },
        bounds: PotentialBounds {
            // -½y² is unbounded below.
            lower_bound: None,
            curvature_bound: 1.0 + trig,
            growth_coeff: 1.0 + trig,
            growth_exponent: 0.0,
        },
        label: format!("contact_line(gamma={gamma}, theta_s={theta_s})"),
    })
}

impl Potential {
    pub fn quadratic(curvature: f64) -> Potential {
        Potential {
            kind: PotentialKind::Quadratic { curvature },
            bounds: PotentialBounds {
                lower_bound: (curvature >= 0.0).then_some(0.0),
                curvature_bound: (-curvature).max(0.0),
                growth_coeff: curvature.abs().max(f64::MIN_POSITIVE),
                growth_exponent: 0.0,
            },
            label: format!("quadratic(c={curvature})"),
        }
    }

    #[inline]
    pub fn value(&self, y: f64) -> f64 {
        match self.kind {
            PotentialKind::QuarticDoubleWell => {
                let s = y * y - 1.0;
                0.25 * s * s
            }
            PotentialKind::ContactLine { gamma, theta_s } => {
                0.5 * gamma * theta_s.cos() * (0.5 * PI * y).sin() - 0.5 * y * y
            }
            PotentialKind::Quadratic { curvature } => 0.5 * curvature * y * y,
        }
    }

    #[inline]
    pub fn d1(&self, y: f64) -> f64 {
        match self.kind {
            PotentialKind::QuarticDoubleWell => y * y * y - y,
            PotentialKind::ContactLine { gamma, theta_s } => {
                0.25 * PI * gamma * theta_s.cos() * (0.5 * PI * y).cos() - y
            }
            PotentialKind::Quadratic { curvature } => curvature * y,
        }
    }

    #[inline]
    pub fn d2(&self, y: f64) -> f64 {
        match self.kind {
            PotentialKind::QuarticDoubleWell => 3.0 * y * y - 1.0,
            PotentialKind::ContactLine { gamma, theta_s } => {
                -0.125 * PI * PI * gamma * theta_s.cos() * (0.5 * PI * y).sin() - 1.0
            }
            PotentialKind::Quadratic { curvature } => curvature,
        }
    }

    /// `convex_split`.
    pub fn convex_split(&self) -> ConvexSplit {
        ConvexSplit {
            base: self.clone(),
            shift: self.bounds.curvature_bound + 1.0,
            d1_at_zero: self.d1(0.0),
            value_at_zero: self.value(0.0),
        }
    }
}

/// Strictly convex shifted potential `P̃`, with `P̃'' >= 1` and
/// `P̃(0) = P̃'(0) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexSplit {
    pub base: Potential,
    /// `C̃ + 1`.
    pub shift: f64,
    d1_at_zero: f64,
    value_at_zero: f64,
}

impl ConvexSplit {
    pub fn tilde_value(&self, y: f64) -> f64 {
        self.base.value(y) + 0.5 * self.shift * y * y - self.d1_at_zero * y - self.value_at_zero
    }

    pub fn tilde_d1(&self, y: f64) -> f64 {
        self.base.d1(y) + self.shift * y - self.d1_at_zero
    }

    pub fn tilde_d2(&self, y: f64) -> f64 {
        self.base.d2(y) + self.shift
    }

    /// Recovers the base value from the split: `P(y) = P̃(y) - (C̃+1)/2 y² + P'(0) y + P(0)`.
    pub fn reconstruct_value(&self, y: f64) -> f64 {
        self.tilde_value(y) - 0.5 * self.shift * y * y + self.d1_at_zero * y + self.value_at_zero
    }
}

pub fn convex_split(p: &Potential) -> ConvexSplit {
    p.convex_split()
}

/// Sampling request for [`validate_assumptions`].
#[derive(Clone, Copy, Debug)]
pub struct AssumptionQuery {
    pub range: (f64, f64),
    pub samples: usize,
    pub kappa: f64,
    pub check_domination: bool,
}

impl Default for AssumptionQuery {
    fn default() -> Self {
        AssumptionQuery {
            range: (-5.0, 5.0),
            samples: 100_000,
            kappa: 0.1,
            check_domination: false,
        }
    }
}

/// Outcome of one sampled inequality.
#[derive(Clone, Debug, PartialEq)]
pub struct AssumptionCheck {
    pub name: String,
    pub passed: bool,
    /// Sample `y` that violates the inequality, when one was found.
    pub witness: Option<f64>,
    pub detail: String,
}

/// Tightest constants observed on the sample set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmpiricalConstants {
    /// `max(0, -min value)`.
    pub lower_bound: f64,
    /// `max(0, -min d2)`.
    pub curvature_bound: f64,
    /// `max |d2| / (1 + |y|^p)` with the declared exponent.
    pub growth_coeff: f64,
}

/// Constants of `|F̃'(y)| <= ρ1 |G̃'(y)| + ρ2`; heuristic, sampled only.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DominationFit {
    pub rho1: f64,
    pub rho2: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
    pub bulk_constants: EmpiricalConstants,
    pub surface_constants: EmpiricalConstants,
    pub domination: Option<DominationFit>,
}

impl AssumptionReport {
    fn group_passed(&self, prefix: &str) -> bool {
        self.checks
            .iter()
            .filter(|c| c.name.starts_with(prefix))
            .all(|c| c.passed)
    }

    /// Lower bounds and semiconvexity of both potentials.
    pub fn bounds_passed(&self) -> bool {
        self.group_passed("lower bound") && self.group_passed("semiconvexity")
    }

    pub fn growth_passed(&self) -> bool {
        self.group_passed("growth")
    }

    pub fn domination_passed(&self) -> Option<bool> {
        self.domination.map(|f| f.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn sample_points(q: &AssumptionQuery) -> Vec<f64> {
    let (lo, hi) = q.range;
    let n = q.samples;
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn check_potential(
    p: &Potential,
    sym: &str,
    ys: &[f64],
    checks: &mut Vec<AssumptionCheck>,
) -> EmpiricalConstants {
    const SLACK: f64 = 1e-12;
    let b = p.bounds;

    let (mut min_v, mut arg_v) = (f64::INFINITY, 0.0);
    let (mut min_d2, mut arg_d2) = (f64::INFINITY, 0.0);
    let mut growth: f64 = 0.0;
    let mut growth_witness = None;
    for &y in ys {
        let v = p.value(y);
        if v < min_v {
            min_v = v;
            arg_v = y;
        }
        let d2 = p.d2(y);
        if d2 < min_d2 {
            min_d2 = d2;
            arg_d2 = y;
        }
        let envelope = 1.0 + y.abs().powf(b.growth_exponent);
        growth = growth.max(d2.abs() / envelope);
        if growth_witness.is_none() && d2.abs() > b.growth_coeff * envelope * (1.0 + SLACK) + SLACK {
            growth_witness = Some(y);
        }
    }

    let lower = match b.lower_bound {
        Some(c) => {
            let ok = min_v >= -c - SLACK;
            AssumptionCheck {
                name: format!("lower bound {sym} >= -C_{sym}"),
                passed: ok,
                witness: (!ok).then_some(arg_v),
                detail: format!("declared C = {c}, sampled min {min_v:.6e}"),
            }
        }
        None => AssumptionCheck {
            name: format!("lower bound {sym} >= -C_{sym}"),
            passed: false,
            witness: Some(arg_v),
            detail: format!(
                "no global lower bound (sampled min {min_v:.6e} at the edge of the range)"
            ),
        },
    };
    checks.push(lower);

    let ok = min_d2 >= -b.curvature_bound - SLACK;
    checks.push(AssumptionCheck {
        name: format!("semiconvexity {sym}'' >= -C~_{sym}"),
        passed: ok,
        witness: (!ok).then_some(arg_d2),
        detail: format!(
            "declared C~ = {}, sampled min {min_d2:.6e}",
            b.curvature_bound
        ),
    });

    checks.push(AssumptionCheck {
        name: format!("growth |{sym}''| <= C^_{sym}(1+|y|^e)"),
        passed: growth_witness.is_none(),
        witness: growth_witness,
        detail: format!(
            "declared C^ = {}, exponent {}, tightest C^ = {growth:.6e}",
            b.growth_coeff, b.growth_exponent
        ),
    });

    EmpiricalConstants {
        lower_bound: (-min_v).max(0.0),
        curvature_bound: (-min_d2).max(0.0),
        growth_coeff: growth,
    }
}

/// Least-squares fit of `|F̃'| ≈ ρ1 |G̃'| + ρ2`, then `ρ2` is raised until
/// the inequality holds at every sample. The fit fails when the required
/// excess is still growing at the ends of the sampled interval.
fn fit_domination(f: &ConvexSplit, g: &ConvexSplit, ys: &[f64]) -> DominationFit {
    let xs: Vec<f64> = ys.iter().map(|&y| g.tilde_d1(y).abs()).collect();
    let ts: Vec<f64> = ys.iter().map(|&y| f.tilde_d1(y).abs()).collect();
    let n = ys.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let mt = ts.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxt: f64 = xs.iter().zip(&ts).map(|(x, t)| (x - mx) * (t - mt)).sum();
    let rho1 = if sxx > 0.0 { (sxt / sxx).max(0.0) } else { 0.0 };
    let excess = |i: usize| ts[i] - rho1 * xs[i];
    let rho2_fit = mt - rho1 * mx;
    let rho2 = (0..ys.len()).map(excess).fold(rho2_fit, f64::max).max(0.0);

    // Compare the excess at each end with the excess 10% further in.
    let scale = ts.iter().fold(1.0_f64, |m, t| m.max(*t));
    let inner = ys.len() / 10;
    let last = ys.len() - 1;
    let growing = excess(0) > excess(inner) + 1e-9 * scale
        || excess(last) > excess(last - inner) + 1e-9 * scale;
    DominationFit {
        rho1,
        rho2,
        passed: !growing,
    }
}

/// `validate_assumptions`: sampled lower-bound, semiconvexity, growth and domination checks in two space dimensions.
pub fn validate_assumptions(
    bulk: &Potential,
    surface: &Potential,
    q: &AssumptionQuery,
) -> Result<AssumptionReport> {
    if q.samples < 1000 {
        return Err(Error::InvalidParameter {
            name: "samples",
            reason: format!("need at least 1000 samples, got {}", q.samples),
        });
    }
    if !(q.range.0 <= -3.0 && q.range.1 >= 3.0) {
        return Err(Error::InvalidParameter {
            name: "range",
            reason: format!("{:?} must contain [-3, 3]", q.range),
        });
    }
    if !(q.kappa >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "kappa",
            reason: format!("must be >= 0, got {}", q.kappa),
        });
    }
    let ys = sample_points(q);
    let mut checks = Vec::new();
    let bulk_constants = check_potential(bulk, "F", &ys, &mut checks);
    let surface_constants = check_potential(surface, "G", &ys, &mut checks);

    // d = 2: with surface diffusion both exponents are free; without it the
    // surface exponent must vanish.
    if q.kappa == 0.0 {
        let qexp = surface.bounds.growth_exponent;
        checks.push(AssumptionCheck {
            name: "growth exponent q (kappa = 0)".into(),
            passed: qexp == 0.0,
            witness: None,
            detail: format!("kappa = 0 requires q = 0, declared q = {qexp}"),
        });
    }

    let domination = q
        .check_domination
        .then(|| fit_domination(&bulk.convex_split(), &surface.convex_split(), &ys));

    Ok(AssumptionReport {
        checks,
        bulk_constants,
        surface_constants,
        domination,
    })
}
