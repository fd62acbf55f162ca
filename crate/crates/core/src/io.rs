//! Time series, snapshots and text reports.
//!
//! Numbers are written with 17 significant digits, which round-trips every
//! `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::diagnostics::Trajectory;
use crate::energy::{EnergyReport, State};
use crate::error::{Error, Result};
use crate::geometry::{BulkField, Grid};

pub const TIMESERIES_HEADER: &str = "t,e_bulk,e_surf,e_total,d_bulk,d_surf,d_visc,m_bulk,m_bot,m_top";

pub fn timeseries_row(r: &EnergyReport) -> String {
    [
        r.time, r.e_bulk, r.e_surf, r.e_total, r.d_bulk, r.d_surf, r.d_visc, r.m_bulk, r.m_bot,
        r.m_top,
    ]
    .iter()
    .map(|v| format!("{v:.16e}"))
    .collect::<Vec<_>>()
    .join(",")
}

pub fn timeseries_csv(tr: &Trajectory) -> String {
    let mut out = String::with_capacity(64 + 240 * tr.reports.len());
    out.push_str(TIMESERIES_HEADER);
    out.push('\n');
    for r in &tr.reports {
        out.push_str(&timeseries_row(r));
        out.push('\n');
    }
    out
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `write_timeseries`
pub fn write_timeseries(tr: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &timeseries_csv(tr))
}

/// Parses a time series written by [`write_timeseries`].
pub fn read_timeseries(path: impl AsRef<Path>) -> Result<Vec<EnergyReport>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == TIMESERIES_HEADER => {}
        _ => {
            return Err(Error::Format {
                path: path.into(),
                line: 1,
                message: "missing time-series header".into(),
            })
        }
    }
    lines
        .map(|(i, l)| {
            let v = l
                .split(',')
                .map(str::parse::<f64>)
                .collect::<std::result::Result<Vec<f64>, _>>()
                .ok()
                .filter(|v| v.len() == 10)
                .ok_or_else(|| Error::Format {
                    path: path.into(),
                    line: i + 1,
                    message: "expected 10 numeric columns".into(),
                })?;
            Ok(EnergyReport {
                time: v[0],
                e_bulk: v[1],
                e_surf: v[2],
                e_total: v[3],
                d_bulk: v[4],
                d_surf: v[5],
                d_visc: v[6],
                m_bulk: v[7],
                m_bot: v[8],
                m_top: v[9],
            })
        })
        .collect()
}

pub fn snapshot_text(s: &State, g: &Grid) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Nx={}", g.nx());
    let _ = writeln!(out, "# Ny={}", g.ny());
    let _ = writeln!(out, "# Lx={:.16e}", g.lx());
    let _ = writeln!(out, "# Ly={:.16e}", g.ly());
    let _ = writeln!(out, "# t={:.16e}", s.time);
    for j in 0..=g.ny() {
        let row: Vec<String> = s.phi.row(j).iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// `write_snapshot`: header lines `# Nx=`, `# Ny=`, `# Lx=`, `# Ly=`, `# t=`
/// followed by one line per `y`-row (`Ny + 1` rows, bottom circle first).
pub fn write_snapshot(s: &State, g: &Grid, path: impl AsRef<Path>) -> Result<()> {
    s.phi.check_shape(g)?;
    write_file(path.as_ref(), &snapshot_text(s, g))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub grid: Grid,
    pub state: State,
}

pub fn parse_snapshot(text: &str, path: &Path) -> Result<Snapshot> {
    let err = |line: usize, message: String| Error::Format {
        path: path.into(),
        line,
        message,
    };
    let mut nx = None;
    let mut ny = None;
    let mut lx = 1.0;
    let mut ly = 1.0;
    let mut t = 0.0;
    let mut values = Vec::new();
    let mut rows = 0;
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        if let Some(h) = line.strip_prefix('#') {
            let (k, v) = h
                .trim()
                .split_once('=')
                .ok_or_else(|| err(ln, format!("malformed header `{line}`")))?;
            let bad = || err(ln, format!("cannot parse `{v}`"));
            match k.trim() {
                "Nx" => nx = Some(v.trim().parse::<usize>().map_err(|_| bad())?),
                "Ny" => ny = Some(v.trim().parse::<usize>().map_err(|_| bad())?),
                "Lx" => lx = v.trim().parse::<f64>().map_err(|_| bad())?,
                "Ly" => ly = v.trim().parse::<f64>().map_err(|_| bad())?,
                "t" => t = v.trim().parse::<f64>().map_err(|_| bad())?,
                other => return Err(err(ln, format!("unknown header `{other}`"))),
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let nx = nx.ok_or_else(|| err(ln, "data before `# Nx=` header".into()))?;
        let row = line
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| err(ln, e.to_string()))?;
        if row.len() != nx {
            return Err(err(ln, format!("expected {nx} values, got {}", row.len())));
        }
        values.extend(row);
        rows += 1;
    }
    let (nx, ny) = match (nx, ny) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(err(1, "missing `# Nx=` or `# Ny=` header".into())),
    };
    if rows != ny + 1 {
        return Err(err(
            text.lines().count(),
            format!("expected {} rows, got {rows}", ny + 1),
        ));
    }
    let grid = Grid::new(nx, ny, lx, ly).map_err(|e| err(1, e.to_string()))?;
    let phi = BulkField::from_values(&grid, values)?;
    Ok(Snapshot {
        grid,
        state: State::new(phi, t),
    })
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<Snapshot> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_snapshot(&text, path)
}

/// Structured text report: `key = value` lines under a `[title]` header.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub title: String,
    pub entries: Vec<(String, String)>,
}

impl Report {
    pub fn new(title: impl Into<String>) -> Self {
        Report {
            title: title.into(),
            entries: Vec::new(),
        }
    }

    pub fn num(&mut self, key: &str, v: f64) -> &mut Self {
        self.entries.push((key.into(), format!("{v:.16e}")));
        self
    }

    pub fn text(&mut self, key: &str, v: impl ToString) -> &mut Self {
        self.entries.push((key.into(), v.to_string()));
        self
    }

    pub fn render(&self) -> String {
        let mut out = format!("[{}]\n", self.title);
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Appends to `path`.
    pub fn append_to(&self, path: impl AsRef<Path>) -> Result<()> {
        use std::io::Write;
        let path = path.as_ref();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        f.write_all(self.render().as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}
