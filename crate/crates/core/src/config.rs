//! Run configuration.
//!
//! Line-oriented `key = value` pairs grouped under `[section]` headers. `#`
//! starts a comment. Several assignments may share a line when separated by
//! commas (`parameter = alpha, values = 0.2 0.1`).
//!
//! ```text
//! [grid]        nx, ny (required); lx, ly (1.0)
//! [model]       kappa (0.1), alpha (0.0),
//!               bulk, surface = quartic | quadratic | contact_line (quartic),
//!               bulk_curvature, surface_curvature (quadratic),
//!               surface_gamma, surface_theta (contact_line)
//! [scheme]      dt (1e-4), t_end (0.1), s_bulk (2), s_surf (2),
//!               max_energy_uptick (1e-10), max_halvings (10),
//!               eq_tol (1e-10), cadence (1), snapshot_every, seed (0)
//! [initial]     kind = constant | random | file (constant),
//!               value (0) | mean (0), amplitude (0.01), seed | path
//! [stationary]  tol (1e-10), max_iter (50), pre_tol (1e-6), pseudo_dt (1e-2)
//! [sweep]       parameter = alpha | kappa | dt | s_bulk | s_surf, values
//! [output]      dir (out)
//! [run]         mode = simulate | stationary | verify | sweep
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::energy::{Model, State};
use crate::error::{Error, Result};
use crate::geometry::{BulkField, Grid};
use crate::potentials::{contact_line_surface, quartic_double_well, Potential};
use crate::solver::{RunOptions, SolverParams};
use crate::stationary::StationaryOptions;

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PotentialSpec {
    Quartic,
    Quadratic { curvature: f64 },
    ContactLine { gamma: f64, theta_s: f64 },
}

impl PotentialSpec {
    pub fn build(&self) -> Result<Potential> {
        match *self {
            PotentialSpec::Quartic => Ok(quartic_double_well()),
            PotentialSpec::Quadratic { curvature } => Ok(Potential::quadratic(curvature)),
            PotentialSpec::ContactLine { gamma, theta_s } => contact_line_surface(gamma, theta_s),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub kappa: f64,
    pub alpha: f64,
    pub bulk: PotentialSpec,
    pub surface: PotentialSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeSpec {
    pub dt: f64,
    pub t_end: f64,
    pub s_bulk: f64,
    pub s_surf: f64,
    pub max_energy_uptick: f64,
    pub max_halvings: usize,
    pub eq_tol: f64,
    pub cadence: usize,
    pub snapshot_every: Option<usize>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialSpec {
    Constant(f64),
    Random { mean: f64, amplitude: f64, seed: u64 },
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StationarySpec {
    pub tol: f64,
    pub max_iter: usize,
    pub pre_tol: f64,
    pub pseudo_dt: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    Alpha,
    Kappa,
    Dt,
    SBulk,
    SSurf,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Alpha => "alpha",
            SweepParam::Kappa => "kappa",
            SweepParam::Dt => "dt",
            SweepParam::SBulk => "s_bulk",
            SweepParam::SSurf => "s_surf",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Stationary,
    Verify,
    Sweep,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub grid: GridSpec,
    pub model: ModelSpec,
    pub scheme: SchemeSpec,
    pub initial: InitialSpec,
    pub stationary: StationarySpec,
    pub sweep: Option<SweepSpec>,
    pub output_dir: PathBuf,
    pub mode: Mode,
}

impl RunSpec {
    pub fn build_grid(&self) -> Result<Grid> {
        Grid::new(self.grid.nx, self.grid.ny, self.grid.lx, self.grid.ly)
    }

    pub fn build_model(&self) -> Result<Model> {
        Model::new(
            self.model.bulk.build()?,
            self.model.surface.build()?,
            self.model.kappa,
        )
    }

    pub fn solver_params(&self) -> SolverParams {
        SolverParams {
            dt: self.scheme.dt,
            alpha: self.model.alpha,
            s_bulk: self.scheme.s_bulk,
            s_surf: self.scheme.s_surf,
            max_energy_uptick: self.scheme.max_energy_uptick,
            max_halvings: self.scheme.max_halvings,
            ..Default::default()
        }
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            t_end: self.scheme.t_end,
            cadence: self.scheme.cadence,
            snapshot_every: self.scheme.snapshot_every,
            eq_tol: self.scheme.eq_tol,
        }
    }

    pub fn stationary_options(&self) -> StationaryOptions {
        StationaryOptions {
            tol: self.stationary.tol,
            max_iter: self.stationary.max_iter,
            pre_tol: self.stationary.pre_tol,
            pseudo: SolverParams {
                dt: self.stationary.pseudo_dt,
                ..self.solver_params()
            },
            ..Default::default()
        }
    }

    pub fn initial_state(&self, g: &Grid) -> Result<State> {
        match &self.initial {
            InitialSpec::Constant(v) => Ok(State::constant(g, *v)),
            InitialSpec::Random {
                mean,
                amplitude,
                seed,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let values = (0..g.node_count())
                    .map(|_| mean + amplitude * rng.gen_range(-1.0..1.0))
                    .collect();
                Ok(State::new(BulkField::from_values(g, values)?, 0.0))
            }
            InitialSpec::File(path) => {
                let snap = crate::io::read_snapshot(path)?;
                if snap.grid.nx() != g.nx() || snap.grid.ny() != g.ny() {
                    return Err(Error::ShapeMismatch {
                        expected: format!("{}x{} snapshot", g.nx(), g.ny()),
                        got: format!("{}x{}", snap.grid.nx(), snap.grid.ny()),
                    });
                }
                Ok(snap.state)
            }
        }
    }

    /// The same run with one swept parameter replaced.
    pub fn with_sweep_value(&self, p: SweepParam, v: f64) -> RunSpec {
        let mut s = self.clone();
        match p {
            SweepParam::Alpha => s.model.alpha = v,
            SweepParam::Kappa => s.model.kappa = v,
            SweepParam::Dt => s.scheme.dt = v,
            SweepParam::SBulk => s.scheme.s_bulk = v,
            SweepParam::SSurf => s.scheme.s_surf = v,
        }
        s
    }
}

struct Entry {
    value: String,
    line: usize,
}

/// Key/value pairs of one section; tracks which keys were read.
struct Section {
    name: String,
    entries: BTreeMap<String, Entry>,
}

impl Section {
    fn path(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn raw(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => e.value.parse().map(Some).map_err(|_| Error::ConfigParse {
                line: e.line,
                message: format!("`{}`: cannot parse `{}`", self.path(key), e.value),
            }),
        }
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        let v = self.parse::<f64>(key)?.unwrap_or(default);
        if !v.is_finite() {
            return Err(semantic(self.path(key), "must be finite"));
        }
        Ok(v)
    }

    fn finish(self) -> Result<()> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((k, e)) => Err(Error::ConfigSemantic {
                key: format!("{}.{k}", self.name),
                message: format!("unknown key (line {})", e.line),
            }),
        }
    }
}

fn semantic(key: String, message: &str) -> Error {
    Error::ConfigSemantic {
        key,
        message: message.into(),
    }
}

const SECTIONS: [&str; 8] = [
    "grid",
    "model",
    "scheme",
    "initial",
    "stationary",
    "sweep",
    "output",
    "run",
];

fn split_assignments(body: &str) -> Vec<&str> {
    let parts: Vec<&str> = body.split(',').collect();
    if parts.len() > 1 && parts.iter().all(|p| p.contains('=')) {
        parts
    } else {
        vec![body]
    }
}

fn tokenize(text: &str) -> Result<BTreeMap<String, Section>> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::ConfigParse {
                    line,
                    message: format!("malformed section header `{body}`"),
                })?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(Error::ConfigParse {
                    line,
                    message: format!("unknown section `[{name}]`"),
                });
            }
            if sections.contains_key(name) {
                return Err(Error::ConfigParse {
                    line,
                    message: format!("duplicate section `[{name}]`"),
                });
            }
            sections.insert(
                name.to_string(),
                Section {
                    name: name.to_string(),
                    entries: BTreeMap::new(),
                },
            );
            current = Some(name.to_string());
            continue;
        }
        let Some(sec) = current.as_ref() else {
            return Err(Error::ConfigParse {
                line,
                message: "assignment before any section header".into(),
            });
        };
        for part in split_assignments(body) {
            let (k, v) = part.split_once('=').ok_or_else(|| Error::ConfigParse {
                line,
                message: format!("expected `key = value`, got `{}`", part.trim()),
            })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(Error::ConfigParse {
                    line,
                    message: format!("empty key or value in `{}`", part.trim()),
                });
            }
            let s = sections.get_mut(sec).expect("section exists");
            if s.entries.contains_key(k) {
                return Err(Error::ConfigParse {
                    line,
                    message: format!("duplicate key `{sec}.{k}`"),
                });
            }
            s.entries.insert(
                k.to_string(),
                Entry {
                    value: v.to_string(),
                    line,
                },
            );
        }
    }
    Ok(sections)
}

fn section(map: &mut BTreeMap<String, Section>, name: &str) -> Section {
    map.remove(name).unwrap_or(Section {
        name: name.to_string(),
        entries: BTreeMap::new(),
    })
}

fn potential(sec: &mut Section, prefix: &str) -> Result<PotentialSpec> {
    let name = sec.raw(prefix);
    let curvature_key = format!("{prefix}_curvature");
    let gamma_key = format!("{prefix}_gamma");
    let theta_key = format!("{prefix}_theta");
    let kind = name.as_ref().map_or("quartic", |e| e.value.as_str());
    let spec = match kind {
        "quartic" => PotentialSpec::Quartic,
        "quadratic" => PotentialSpec::Quadratic {
            curvature: sec.f64_or(&curvature_key, 1.0)?,
        },
        "contact_line" => PotentialSpec::ContactLine {
            gamma: sec.f64_or(&gamma_key, 1.0)?,
            theta_s: sec.f64_or(&theta_key, std::f64::consts::FRAC_PI_2)?,
        },
        other => {
            return Err(semantic(
                sec.path(prefix),
                &format!("unknown potential `{other}` (quartic, quadratic, contact_line)"),
            ))
        }
    };
    spec.build().map_err(|e| semantic(sec.path(prefix), &e.to_string()))?;
    Ok(spec)
}

/// `parse_config`: validated [`RunSpec`] from configuration text.
pub fn parse_config(text: &str) -> Result<RunSpec> {
    let mut map = tokenize(text)?;

    if !map.contains_key("grid") {
        return Err(semantic("grid".into(), "missing [grid] section"));
    }
    let mut g = section(&mut map, "grid");
    let nx = g
        .parse::<usize>("nx")?
        .ok_or_else(|| semantic(g.path("nx"), "required"))?;
    let ny = g
        .parse::<usize>("ny")?
        .ok_or_else(|| semantic(g.path("ny"), "required"))?;
    let grid = GridSpec {
        nx,
        ny,
        lx: g.f64_or("lx", 1.0)?,
        ly: g.f64_or("ly", 1.0)?,
    };
    Grid::new(grid.nx, grid.ny, grid.lx, grid.ly)
        .map_err(|e| semantic("grid".into(), &e.to_string()))?;
    g.finish()?;

    let mut m = section(&mut map, "model");
    let kappa = m.f64_or("kappa", 0.1)?;
    if kappa < 0.0 {
        return Err(semantic(m.path("kappa"), "kappa must be ≥ 0"));
    }
    let alpha = m.f64_or("alpha", 0.0)?;
    if alpha < 0.0 {
        return Err(semantic(m.path("alpha"), "alpha must be ≥ 0"));
    }
    let model = ModelSpec {
        kappa,
        alpha,
        bulk: potential(&mut m, "bulk")?,
        surface: potential(&mut m, "surface")?,
    };
    m.finish()?;

    let mut s = section(&mut map, "scheme");
    let scheme = SchemeSpec {
        dt: s.f64_or("dt", 1e-4)?,
        t_end: s.f64_or("t_end", 0.1)?,
        s_bulk: s.f64_or("s_bulk", 2.0)?,
        s_surf: s.f64_or("s_surf", 2.0)?,
        max_energy_uptick: s.f64_or("max_energy_uptick", 1e-10)?,
        max_halvings: s.parse("max_halvings")?.unwrap_or(10),
        eq_tol: s.f64_or("eq_tol", 1e-10)?,
        cadence: s.parse("cadence")?.unwrap_or(1),
        snapshot_every: s.parse("snapshot_every")?,
        seed: s.parse("seed")?.unwrap_or(0),
    };
    for (k, v, positive) in [
        ("dt", scheme.dt, true),
        ("t_end", scheme.t_end, true),
        ("s_bulk", scheme.s_bulk, false),
        ("s_surf", scheme.s_surf, false),
        ("max_energy_uptick", scheme.max_energy_uptick, true),
        ("eq_tol", scheme.eq_tol, false),
    ] {
        if (positive && v <= 0.0) || v < 0.0 {
            let msg = if positive { "must be > 0" } else { "must be ≥ 0" };
            return Err(semantic(s.path(k), &format!("{k} {msg}")));
        }
    }
    if scheme.cadence == 0 || scheme.snapshot_every == Some(0) {
        return Err(semantic(s.path("cadence"), "step counts must be ≥ 1"));
    }
    s.finish()?;

    let mut i = section(&mut map, "initial");
    let kind = i.raw("kind").map(|e| e.value);
    let initial = match kind.as_deref().unwrap_or("constant") {
        "constant" => InitialSpec::Constant(i.f64_or("value", 0.0)?),
        "random" => InitialSpec::Random {
            mean: i.f64_or("mean", 0.0)?,
            amplitude: i.f64_or("amplitude", 0.01)?,
            seed: i.parse("seed")?.unwrap_or(scheme.seed),
        },
        "file" => InitialSpec::File(
            i.raw("path")
                .map(|e| PathBuf::from(e.value))
                .ok_or_else(|| semantic(i.path("path"), "required for kind = file"))?,
        ),
        other => {
            return Err(semantic(
                i.path("kind"),
                &format!("unknown initial condition `{other}` (constant, random, file)"),
            ))
        }
    };
    i.finish()?;

    let mut st = section(&mut map, "stationary");
    let stationary = StationarySpec {
        tol: st.f64_or("tol", 1e-10)?,
        max_iter: st.parse("max_iter")?.unwrap_or(50),
        pre_tol: st.f64_or("pre_tol", 1e-6)?,
        pseudo_dt: st.f64_or("pseudo_dt", 1e-2)?,
    };
    if stationary.tol <= 0.0 || stationary.pseudo_dt <= 0.0 {
        return Err(semantic(st.path("tol"), "tol and pseudo_dt must be > 0"));
    }
    st.finish()?;

    let sweep = match map.remove("sweep") {
        None => None,
        Some(mut sw) => {
            let parameter = match sw.raw("parameter").map(|e| e.value).as_deref() {
                Some("alpha") => SweepParam::Alpha,
                Some("kappa") => SweepParam::Kappa,
                Some("dt") => SweepParam::Dt,
                Some("s_bulk") => SweepParam::SBulk,
                Some("s_surf") => SweepParam::SSurf,
                Some(other) => {
                    return Err(semantic(
                        sw.path("parameter"),
                        &format!("cannot sweep `{other}` (alpha, kappa, dt, s_bulk, s_surf)"),
                    ))
                }
                None => return Err(semantic(sw.path("parameter"), "required")),
            };
            let entry = sw
                .raw("values")
                .ok_or_else(|| semantic(sw.path("values"), "required"))?;
            let values = entry
                .value
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>().map_err(|_| Error::ConfigParse {
                        line: entry.line,
                        message: format!("`sweep.values`: cannot parse `{t}`"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
                return Err(semantic(sw.path("values"), "values must be finite"));
            }
            for (a, v) in values.iter().enumerate() {
                if values[..a].contains(v) {
                    return Err(semantic(sw.path("values"), "values must be distinct"));
                }
            }
            sw.finish()?;
            Some(SweepSpec { parameter, values })
        }
    };

    let mut o = section(&mut map, "output");
    let output_dir = o
        .raw("dir")
        .map_or_else(|| PathBuf::from("out"), |e| PathBuf::from(e.value));
    o.finish()?;

    let mut r = section(&mut map, "run");
    let mode = match r.raw("mode").map(|e| e.value).as_deref() {
        None if sweep.is_some() => Mode::Sweep,
        None | Some("simulate") => Mode::Simulate,
        Some("stationary") => Mode::Stationary,
        Some("verify") => Mode::Verify,
        Some("sweep") => Mode::Sweep,
        Some(other) => {
            return Err(semantic(
                r.path("mode"),
                &format!("unknown mode `{other}`"),
            ))
        }
    };
    if mode == Mode::Sweep && sweep.is_none() {
        return Err(semantic("sweep".into(), "mode = sweep needs a [sweep] section"));
    }
    r.finish()?;

    Ok(RunSpec {
        grid,
        model,
        scheme,
        initial,
        stationary,
        sweep,
        output_dir,
        mode,
    })
}
