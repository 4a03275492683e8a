//! Run configuration, CSV output and SVG line charts.
//!
//! Configurations are TOML. Every schema error names the offending key path
//! (`time.t_end`, `params.phi`, ...). CSV numbers carry 17 significant digits
//! so that reading a file back reproduces the written `f64` values exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::analysis::Resolution;
use crate::assembly::Domain;
use crate::error::{Error, Result};
use crate::params::{validate_params, ModelParams, PARAM_NAMES};
use crate::stepper::{same_time, Field, SchemeConfig, SolutionRecord, SubstepDomain, Variant};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshConfig {
    pub n_s: usize,
    pub n_m: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeConfig {
    pub t_end: f64,
    pub dt_m: f64,
    pub substep_ratio: usize,
    pub cfl_safety: f64,
    pub substep_domain: SubstepDomain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub snapshot_times: Vec<f64>,
    pub record_every: usize,
    pub out_dir: PathBuf,
}

/// A validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub mesh: MeshConfig,
    pub time: TimeConfig,
    pub scheme: Variant,
    pub output: OutputConfig,
    /// Seconds per unit of nondimensional time, if known.
    pub time_unit: Option<f64>,
    /// Fine run used by the accuracy studies; see [`RunConfig::reference`].
    pub reference: Option<Resolution>,
}

impl RunConfig {
    pub fn scheme_config(&self) -> SchemeConfig {
        SchemeConfig {
            variant: self.scheme,
            dt_m: self.time.dt_m,
            substep_ratio: self.time.substep_ratio,
            substep_domain: self.time.substep_domain,
            t_end: self.time.t_end,
            cfl_safety: self.time.cfl_safety,
            record_every: self.output.record_every,
        }
    }

    /// Test resolution of the accuracy studies: the configured mesh with the
    /// step count implied by `dt_m`.
    pub fn resolution(&self) -> Resolution {
        Resolution {
            n_s: self.mesh.n_s,
            n_m: self.mesh.n_m,
            n_steps: self.scheme_config().n_steps(),
        }
    }

    /// Explicit `[reference]` section, or 20 times finer meshes with 400 times
    /// as many steps.
    pub fn reference(&self) -> Resolution {
        self.reference.unwrap_or_else(|| {
            let t = self.resolution();
            Resolution {
                n_s: 20 * t.n_s,
                n_m: 20 * t.n_m,
                n_steps: 400 * t.n_steps,
            }
        })
    }

    /// Formats a nondimensional time, with hours appended when `time_unit` is set.
    pub fn time_label(&self, t: f64) -> String {
        match self.time_unit {
            Some(u) => format!("{t} ({:.3} h)", t * u / 3600.0),
            None => format!("{t}"),
        }
    }

    /// Serialises the configuration back to TOML. Parameters are written
    /// inline, so the echo is self-contained.
    pub fn to_toml(&self) -> String {
        use toml::{Table, Value};
        let mut params = Table::new();
        for (name, v) in self.params.named_values() {
            params.insert(name.into(), Value::Float(v));
        }
        let mut mesh = Table::new();
        mesh.insert("n_s".into(), Value::Integer(self.mesh.n_s as i64));
        mesh.insert("n_m".into(), Value::Integer(self.mesh.n_m as i64));
        let mut time = Table::new();
        time.insert("t_end".into(), Value::Float(self.time.t_end));
        time.insert("dt_m".into(), Value::Float(self.time.dt_m));
        time.insert("substep_ratio".into(), Value::Integer(self.time.substep_ratio as i64));
        time.insert("cfl_safety".into(), Value::Float(self.time.cfl_safety));
        let domain = match self.time.substep_domain {
            SubstepDomain::Stent => "stent",
            SubstepDomain::Media => "media",
        };
        time.insert("substep_domain".into(), Value::String(domain.into()));
        let mut output = Table::new();
        output.insert(
            "snapshot_times".into(),
            Value::Array(self.output.snapshot_times.iter().map(|&t| Value::Float(t)).collect()),
        );
        output.insert("record_every".into(), Value::Integer(self.output.record_every as i64));
        output.insert(
            "out_dir".into(),
            Value::String(self.output.out_dir.to_string_lossy().into_owned()),
        );

        let mut root = Table::new();
        root.insert("scheme".into(), Value::String(self.scheme.name().into()));
        if let Some(u) = self.time_unit {
            root.insert("time_unit".into(), Value::Float(u));
        }
        root.insert("params".into(), Value::Table(params));
        root.insert("mesh".into(), Value::Table(mesh));
        root.insert("time".into(), Value::Table(time));
        root.insert("output".into(), Value::Table(output));
        if let Some(r) = self.reference {
            let mut t = Table::new();
            t.insert("n_s".into(), Value::Integer(r.n_s as i64));
            t.insert("n_m".into(), Value::Integer(r.n_m as i64));
            t.insert("n_steps".into(), Value::Integer(r.n_steps as i64));
            root.insert("reference".into(), Value::Table(t));
        }
        toml::to_string(&root).expect("plain tables always serialise")
    }
}

/// Typed access to one TOML table, reporting errors by key path.
struct Section<'a> {
    path: String,
    table: &'a toml::Table,
}

impl<'a> Section<'a> {
    fn key(&self, k: &str) -> String {
        if self.path.is_empty() {
            k.to_string()
        } else {
            format!("{}.{}", self.path, k)
        }
    }

    fn only(&self, allowed: &[&str]) -> Result<()> {
        match self.table.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::config(self.key(k), "unknown key")),
            None => Ok(()),
        }
    }

    fn sub(&self, k: &str) -> Result<Section<'a>> {
        match self.table.get(k) {
            Some(toml::Value::Table(t)) => Ok(Section {
                path: self.key(k),
                table: t,
            }),
            Some(_) => Err(Error::config(self.key(k), "expected a table")),
            None => Err(Error::config(self.key(k), "missing section")),
        }
    }

    fn opt_f64(&self, k: &str) -> Result<Option<f64>> {
        match self.table.get(k) {
            None => Ok(None),
            Some(toml::Value::Float(v)) => Ok(Some(*v)),
            Some(toml::Value::Integer(v)) => Ok(Some(*v as f64)),
            Some(_) => Err(Error::config(self.key(k), "expected a number")),
        }
    }

    fn f64(&self, k: &str) -> Result<f64> {
        self.opt_f64(k)?
            .ok_or_else(|| Error::config(self.key(k), "missing value"))
    }

    fn opt_usize(&self, k: &str) -> Result<Option<usize>> {
        match self.table.get(k) {
            None => Ok(None),
            Some(toml::Value::Integer(v)) if *v >= 0 => Ok(Some(*v as usize)),
            Some(_) => Err(Error::config(self.key(k), "expected a nonnegative integer")),
        }
    }

    fn usize(&self, k: &str) -> Result<usize> {
        self.opt_usize(k)?
            .ok_or_else(|| Error::config(self.key(k), "missing value"))
    }

    fn opt_str(&self, k: &str) -> Result<Option<&'a str>> {
        match self.table.get(k) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s.as_str())),
            Some(_) => Err(Error::config(self.key(k), "expected a string")),
        }
    }
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(key, format!("must be positive (got {v})")))
    }
}

fn parse_params(root: &Section) -> Result<ModelParams> {
    match root.table.get("params") {
        None => Err(Error::config("params", "missing; use \"paper_defaults\" or a table")),
        Some(toml::Value::String(s)) if s == "paper_defaults" => Ok(ModelParams::paper_defaults()),
        Some(toml::Value::String(s)) => Err(Error::config("params", format!("unknown parameter set `{s}`"))),
        Some(toml::Value::Table(_)) => {
            let sec = root.sub("params")?;
            let mut allowed: Vec<&str> = PARAM_NAMES.to_vec();
            allowed.push("use_paper_defaults");
            sec.only(&allowed)?;
            let defaults = match sec.table.get("use_paper_defaults") {
                None => false,
                Some(toml::Value::Boolean(b)) => *b,
                Some(_) => return Err(Error::config("params.use_paper_defaults", "expected a boolean")),
            };
            let mut raw = BTreeMap::new();
            for name in PARAM_NAMES {
                if let Some(v) = sec.opt_f64(name)? {
                    raw.insert(name.to_string(), v);
                }
            }
            validate_params(&raw, defaults)
        }
        Some(_) => Err(Error::config("params", "expected \"paper_defaults\" or a table")),
    }
}

/// Parses and validates a configuration held in memory.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let table: toml::Table = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
    let root = Section {
        path: String::new(),
        table: &table,
    };
    root.only(&["params", "mesh", "time", "scheme", "output", "time_unit", "reference"])?;

    let params = parse_params(&root)?;

    let m = root.sub("mesh")?;
    m.only(&["n_s", "n_m"])?;
    let mesh = MeshConfig {
        n_s: m.usize("n_s")?,
        n_m: m.usize("n_m")?,
    };
    for (k, n) in [("mesh.n_s", mesh.n_s), ("mesh.n_m", mesh.n_m)] {
        if n == 0 {
            return Err(Error::config(k, "need at least one element"));
        }
    }

    let t = root.sub("time")?;
    t.only(&["t_end", "dt_m", "substep_ratio", "cfl_safety", "substep_domain"])?;
    let substep_domain = match t.opt_str("substep_domain")? {
        None | Some("stent") => SubstepDomain::Stent,
        Some("media") => SubstepDomain::Media,
        Some(other) => {
            return Err(Error::config(
                "time.substep_domain",
                format!("expected `stent` or `media`, got `{other}`"),
            ))
        }
    };
    let time = TimeConfig {
        t_end: positive("time.t_end", t.f64("t_end")?)?,
        dt_m: positive("time.dt_m", t.f64("dt_m")?)?,
        substep_ratio: t.opt_usize("substep_ratio")?.unwrap_or(1),
        cfl_safety: t.opt_f64("cfl_safety")?.unwrap_or(1.0),
        substep_domain,
    };
    if time.substep_ratio == 0 {
        return Err(Error::config("time.substep_ratio", "must be at least 1"));
    }
    if !(time.cfl_safety > 0.0 && time.cfl_safety <= 1.0) {
        return Err(Error::config("time.cfl_safety", "must lie in (0, 1]"));
    }

    let scheme = match root.opt_str("scheme")? {
        Some(s) => s.parse()?,
        None => return Err(Error::config("scheme", "missing value")),
    };

    let o = root.sub("output")?;
    o.only(&["snapshot_times", "record_every", "out_dir"])?;
    let snapshot_times = match o.table.get("snapshot_times") {
        None => Vec::new(),
        Some(toml::Value::Array(items)) => items
            .iter()
            .map(|v| match v {
                toml::Value::Float(x) => Ok(*x),
                toml::Value::Integer(x) => Ok(*x as f64),
                _ => Err(Error::config("output.snapshot_times", "expected numbers")),
            })
            .collect::<Result<Vec<_>>>()?,
        Some(_) => return Err(Error::config("output.snapshot_times", "expected an array")),
    };
    for w in snapshot_times.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::config("output.snapshot_times", "must be strictly ascending"));
        }
    }
    if let Some(&bad) = snapshot_times
        .iter()
        .find(|&&s| !(s >= 0.0) || (s > time.t_end && !same_time(s, time.t_end)))
    {
        return Err(Error::config(
            "output.snapshot_times",
            format!("{bad} lies outside [0, t_end = {}]", time.t_end),
        ));
    }
    let output = OutputConfig {
        snapshot_times,
        record_every: o.opt_usize("record_every")?.unwrap_or(1),
        out_dir: PathBuf::from(
            o.opt_str("out_dir")?
                .ok_or_else(|| Error::config("output.out_dir", "missing value"))?,
        ),
    };
    if output.record_every == 0 {
        return Err(Error::config("output.record_every", "must be at least 1"));
    }

    let time_unit = root
        .opt_f64("time_unit")?
        .map(|u| positive("time_unit", u))
        .transpose()?;

    let reference = match root.table.get("reference") {
        None => None,
        Some(_) => {
            let r = root.sub("reference")?;
            r.only(&["n_s", "n_m", "n_steps"])?;
            let res = Resolution {
                n_s: r.usize("n_s")?,
                n_m: r.usize("n_m")?,
                n_steps: r.usize("n_steps")?,
            };
            if res.n_s == 0 || res.n_m == 0 || res.n_steps == 0 {
                return Err(Error::config("reference", "counts must be positive"));
            }
            Some(res)
        }
    };

    Ok(RunConfig {
        params,
        mesh,
        time,
        scheme,
        output,
        time_unit,
        reference,
    })
}

/// Reads and validates a configuration file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text).map_err(|e| match e {
        Error::ConfigParse(msg) => Error::ConfigParse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// 17 significant digits: enough to round-trip any `f64`.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Csv {
            path: path.to_path_buf(),
            reason: format!("{other:?}"),
        },
    }
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One line of `snapshots.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotRow {
    pub t: f64,
    pub domain: Domain,
    pub x: f64,
    pub field: Field,
    pub value: f64,
}

/// Long-format rows of every snapshot, sorted by (t, domain, x).
pub fn snapshot_rows(rec: &SolutionRecord) -> Vec<SnapshotRow> {
    let mut rows = Vec::new();
    for snap in &rec.snapshots {
        for field in Field::ALL {
            let mesh = match field.domain() {
                Domain::Stent => &rec.mesh_s,
                Domain::Media => &rec.mesh_m,
            };
            for (&x, &value) in mesh.nodes.iter().zip(snap.state.field(field)) {
                rows.push(SnapshotRow {
                    t: snap.state.t,
                    domain: field.domain(),
                    x,
                    field,
                    value,
                });
            }
        }
    }
    // Stable, so the field order c, c1, c2 survives within a node.
    rows.sort_by(|a, b| {
        a.t.total_cmp(&b.t)
            .then_with(|| a.domain.tag().cmp(b.domain.tag()))
            .then_with(|| a.x.total_cmp(&b.x))
    });
    rows
}

/// Paths written by [`write_record_csv`].
#[derive(Debug, Clone, PartialEq)]
pub struct RecordFiles {
    pub snapshots: PathBuf,
    pub interface: PathBuf,
    pub monitors: PathBuf,
    pub metadata: PathBuf,
}

pub const SNAPSHOTS_HEADER: [&str; 5] = ["t", "domain", "x", "field", "value"];
pub const INTERFACE_HEADER: [&str; 4] = ["t", "c_at_0", "c1_at_0", "c1_at_1"];
pub const MONITORS_HEADER: [&str; 4] = ["t", "mass", "energy", "mass_balance_residual"];

/// Writes `snapshots.csv`, `interface.csv`, `monitors.csv` and the run
/// description `run.toml` into `out_dir`.
pub fn write_record_csv(rec: &SolutionRecord, out_dir: impl AsRef<Path>) -> Result<RecordFiles> {
    if rec.snapshots.is_empty() && rec.monitors.is_empty() {
        return Err(Error::EmptyRecord);
    }
    let dir = out_dir.as_ref();
    create_dir(dir)?;
    let files = RecordFiles {
        snapshots: dir.join("snapshots.csv"),
        interface: dir.join("interface.csv"),
        monitors: dir.join("monitors.csv"),
        metadata: dir.join("run.toml"),
    };
    write_rows(
        &files.snapshots,
        &SNAPSHOTS_HEADER,
        snapshot_rows(rec).into_iter().map(|r| {
            vec![
                format_number(r.t),
                r.domain.tag().to_string(),
                format_number(r.x),
                r.field.name().to_string(),
                format_number(r.value),
            ]
        }),
    )?;
    write_rows(
        &files.interface,
        &INTERFACE_HEADER,
        rec.monitors
            .iter()
            .map(|m| [m.t, m.c_at_0, m.c1_at_0, m.c1_at_1].map(format_number).to_vec()),
    )?;
    write_rows(
        &files.monitors,
        &MONITORS_HEADER,
        rec.monitors.iter().map(|m| {
            [m.t, m.mass, m.energy, m.mass_balance_residual]
                .map(format_number)
                .to_vec()
        }),
    )?;
    let meta = toml::to_string(&rec.info).expect("run info serialises");
    fs::write(&files.metadata, meta).map_err(|e| Error::io(&files.metadata, e))?;
    Ok(files)
}

/// Reads `snapshots.csv` back.
pub fn read_snapshots_csv(path: impl AsRef<Path>) -> Result<Vec<SnapshotRow>> {
    let path = path.as_ref();
    let bad = |reason: String| Error::Csv {
        path: path.to_path_buf(),
        reason,
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().ne(SNAPSHOTS_HEADER) {
        return Err(bad(format!(
            "unexpected header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse()
                .map_err(|_| bad(format!("row {}: `{}` is not a number", line + 2, &rec[i])))
        };
        let domain = match &rec[1] {
            "s" => Domain::Stent,
            "m" => Domain::Media,
            other => return Err(bad(format!("row {}: unknown domain `{other}`", line + 2))),
        };
        let field =
            Field::parse(&rec[3]).ok_or_else(|| bad(format!("row {}: unknown field `{}`", line + 2, &rec[3])))?;
        rows.push(SnapshotRow {
            t: num(0)?,
            domain,
            x: num(2)?,
            field,
            value: num(4)?,
        });
    }
    Ok(rows)
}

/// A CSV file of numeric columns.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericTable {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl NumericTable {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.headers
            .iter()
            .position(|h| h == name)
            .map(|i| self.columns[i].as_slice())
    }
}

/// Reads a CSV whose cells are all numbers (`interface.csv`, `monitors.csv`).
pub fn read_numeric_csv(path: impl AsRef<Path>) -> Result<NumericTable> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers: Vec<String> = r
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(String::from)
        .collect();
    let mut columns = vec![Vec::new(); headers.len()];
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        for (col, cell) in columns.iter_mut().zip(rec.iter()) {
            col.push(cell.parse().map_err(|_| Error::Csv {
                path: path.to_path_buf(),
                reason: format!("row {}: `{cell}` is not a number", line + 2),
            })?);
        }
    }
    Ok(NumericTable { headers, columns })
}

/// A small text table printed to stdout and mirrored as CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, headers: &[&str]) -> Self {
        Table {
            name: name.into(),
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.headers.len(), "row width must match the header");
        self.rows.push(row);
    }

    /// Left-aligned columns separated by two spaces.
    pub fn render(&self) -> String {
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.len()).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        for row in std::iter::once(&self.headers).chain(&self.rows) {
            let line: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }

    /// Writes `<out_dir>/<name>.csv`.
    pub fn write_csv(&self, out_dir: impl AsRef<Path>) -> Result<PathBuf> {
        let dir = out_dir.as_ref();
        create_dir(dir)?;
        let path = dir.join(format!("{}.csv", self.name));
        let header: Vec<&str> = self.headers.iter().map(String::as_str).collect();
        write_rows(&path, &header, self.rows.iter().cloned())?;
        Ok(path)
    }
}

/// One labelled curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotStyle {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub width: f64,
    pub height: f64,
}

impl Default for PlotStyle {
    fn default() -> Self {
        PlotStyle {
            title: String::new(),
            x_label: "t".into(),
            y_label: String::new(),
            width: 720.0,
            height: 440.0,
        }
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Data range padded so that a constant series still spans a visible band.
fn axis_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

/// Round tick positions (steps of 1, 2 or 5 times a power of ten) in `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> (Vec<f64>, f64) {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    ((first..=last).map(|k| k as f64 * step).collect(), step)
}

fn tick_label(v: f64, step: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let e = step.log10().floor();
    if (-3.0..5.0).contains(&e) {
        let decimals = (-e).max(0.0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.1e}")
    }
}

/// Renders a line chart with axes, tick labels and a legend.
pub fn render_svg(series: &[Series], style: &PlotStyle) -> Result<String> {
    if series.is_empty() || series.iter().any(|s| s.x.is_empty()) {
        return Err(Error::EmptySeries);
    }
    for s in series {
        if s.x.len() != s.y.len() {
            return Err(Error::DimensionMismatch {
                expected: s.x.len(),
                got: s.y.len(),
            });
        }
        if s.x.iter().chain(&s.y).any(|v| !v.is_finite()) {
            return Err(Error::config(
                "series",
                format!("`{}` holds a non-finite value", s.label),
            ));
        }
    }
    let (w, h) = (style.width, style.height);
    let (left, right, top, bottom) = (80.0, 20.0, 40.0, 60.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let (x0, x1) = axis_range(series.iter().flat_map(|s| s.x.iter().copied()));
    let (y0, y1) = axis_range(series.iter().flat_map(|s| s.y.iter().copied()));
    let px = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| top + ph - (y - y0) / (y1 - y0) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    if !style.title.is_empty() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            left + pw / 2.0,
            escape(&style.title)
        );
    }
    let _ = writeln!(
        svg,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );

    let (xt, xs) = ticks(x0, x1);
    for t in xt {
        let x = px(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            top + ph,
            top + ph + 5.0,
            top + ph + 18.0,
            tick_label(t, xs)
        );
    }
    let (yt, ys) = ticks(y0, y1);
    for t in yt {
        let y = py(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{left}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            left - 5.0,
            left - 8.0,
            y + 4.0,
            tick_label(t, ys)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        h - 15.0,
        escape(&style.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        escape(&style.y_label)
    );

    for (i, s) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let points: Vec<String> =
            s.x.iter()
                .zip(&s.y)
                .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        let ly = top + 16.0 + 18.0 * i as f64;
        let lx = left + pw - 150.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{colour}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Writes [`render_svg`] output to `path`.
pub fn emit_svg_plot(series: &[Series], style: &PlotStyle, path: impl AsRef<Path>) -> Result<()> {
    let svg = render_svg(series, style)?;
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    fs::write(path, svg).map_err(|e| Error::io(path, e))
}
