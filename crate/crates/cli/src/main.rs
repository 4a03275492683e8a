//! `stentsim` command-line front end.
//!
//! Exit codes: 0 on success, 1 for invalid input (configuration, arguments,
//! files), 2 for numerical failure (instability or a singular solve).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stentsim::analysis::{
    aligned_times, compare_algorithms, compare_records, convergence_study, stepping_study, AccuracySetup,
    ConvergenceSetup, ErrorReport, Resolution, TimeNorm,
};
use stentsim::fd::{run_fd, FdRun};
use stentsim::io::{
    format_number, parse_config, read_numeric_csv, read_snapshots_csv, write_record_csv, PlotStyle, RunConfig, Series,
    Table, SNAPSHOTS_HEADER,
};
use stentsim::{emit_svg_plot, run_simulation, Error, FemOperators, Field, Result, SolutionRecord, Variant};

#[derive(Parser)]
#[command(
    name = "stentsim",
    version,
    about = "Drug release from a stent coating into the arterial wall"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write snapshots, interface traces and monitors.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Monolithic refinement study starting from the configured mesh and step.
    Converge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Finite-element run against the finite-difference solver on the same grid.
    CompareFd {
        #[arg(long)]
        config: PathBuf,
    },
    /// Both splittings against one fine reference run.
    CompareAlg {
        #[arg(long)]
        config: PathBuf,
    },
    /// Coating-to-media element ratios against one fine reference run.
    SteppingStudy {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2])]
        ratios: Vec<usize>,
    },
    /// Line chart of one column of a CSV written by `simulate`.
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        field: String,
        #[arg(long)]
        out: PathBuf,
    },
}

const RELATIVE_NOTE: &str = "relative errors are divided by the reference run's max over time of the field's L2 norm";

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate { config } => simulate(&parse_config(config)?),
        Command::Converge { config, levels } => converge(&parse_config(config)?, levels),
        Command::CompareFd { config } => compare_fd(&parse_config(config)?),
        Command::CompareAlg { config } => compare_alg(&parse_config(config)?),
        Command::SteppingStudy { config, ratios } => stepping(&parse_config(config)?, &ratios),
        Command::Plot { input, field, out } => plot(&input, &field, &out),
    }
}

fn emit(table: &Table, cfg: &RunConfig) -> Result<()> {
    print!("{}", table.render());
    let path = table.write_csv(&cfg.output.out_dir)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Echo of the configuration plus study notes, next to the tables.
fn write_meta(cfg: &RunConfig, name: &str, extra: &[(&str, String)]) -> Result<()> {
    let mut text = format!("# {RELATIVE_NOTE}\n");
    for (k, v) in extra {
        text.push_str(&format!("# {k}: {v}\n"));
    }
    text.push_str(&cfg.to_toml());
    std::fs::create_dir_all(&cfg.output.out_dir).map_err(|source| Error::Io {
        path: cfg.output.out_dir.clone(),
        source,
    })?;
    write_text(&cfg.output.out_dir.join(format!("{name}.config.toml")), &text)
}

fn simulate(cfg: &RunConfig) -> Result<()> {
    let ops = FemOperators::new(&cfg.params, cfg.mesh.n_s, cfg.mesh.n_m)?;
    let rec = run_simulation(&cfg.params, &ops, &cfg.scheme_config(), &cfg.output.snapshot_times)?;
    let files = write_record_csv(&rec, &cfg.output.out_dir)?;
    write_meta(cfg, "simulate", &[])?;

    let mut table = Table::new(
        "summary",
        &[
            "t",
            "time",
            "c_at_0",
            "c1_at_0",
            "stent_mass",
            "mass",
            "energy",
            "mass_balance_residual",
        ],
    );
    for m in summary_samples(&rec) {
        table.push(vec![
            format_number(m.t),
            cfg.time_label(m.t),
            format_number(m.c_at_0),
            format_number(m.c1_at_0),
            format_number(m.stent_mass),
            format_number(m.mass),
            format_number(m.energy),
            format_number(m.mass_balance_residual),
        ]);
    }
    println!(
        "{} run: n_s = {}, n_m = {}, dt = {:e}, {} steps",
        rec.info.solver.label(),
        rec.info.n_s,
        rec.info.n_m,
        rec.info.dt,
        rec.info.n_steps
    );
    emit(&table, cfg)?;
    println!(
        "wrote {}, {}, {}",
        files.snapshots.display(),
        files.interface.display(),
        files.monitors.display()
    );
    Ok(())
}

/// About ten evenly spread monitor samples, always including the last.
fn summary_samples(rec: &SolutionRecord) -> Vec<stentsim::stepper::MonitorSample> {
    let n = rec.monitors.len();
    let stride = n.div_ceil(10).max(1);
    let mut out: Vec<_> = rec.monitors.iter().step_by(stride).copied().collect();
    if let Some(last) = rec.monitors.last() {
        if out.last().map(|m| m.step) != Some(last.step) {
            out.push(*last);
        }
    }
    out
}

fn converge(cfg: &RunConfig, levels: usize) -> Result<()> {
    if !cfg.mesh.n_s.is_multiple_of(cfg.mesh.n_m) {
        return Err(Error::Config {
            key: "mesh.n_s".into(),
            reason: "must be a multiple of mesh.n_m for a refinement study".into(),
        });
    }
    let setup = ConvergenceSetup {
        t_end: cfg.time.t_end,
        n_m0: cfg.mesh.n_m,
        stent_ratio: cfg.mesh.n_s / cfg.mesh.n_m,
        n_steps0: cfg.resolution().n_steps,
        ..ConvergenceSetup::standard()
    };
    let table_data = convergence_study(&cfg.params, &setup, levels)?;
    let mut table = Table::new(
        "convergence",
        &["level", "n_s", "n_m", "n_steps", "field", "norm", "error", "rate"],
    );
    let norms = [
        (TimeNorm::LinfL2, "linf_l2"),
        (TimeNorm::L2L2, "l2_l2"),
        (TimeNorm::L2H1, "l2_h1"),
    ];
    for f in Field::ALL {
        for (norm, label) in norms {
            let Some(errors) = table_data.errors(f, norm) else {
                continue;
            };
            let rates = table_data.rates(f, norm).ok();
            for (i, res) in table_data.resolutions.iter().enumerate() {
                let rate = match (&rates, i) {
                    (Some(r), i) if i > 0 => format!("{:.4}", r[i - 1]),
                    _ => String::new(),
                };
                table.push(vec![
                    i.to_string(),
                    res.n_s.to_string(),
                    res.n_m.to_string(),
                    res.n_steps.to_string(),
                    f.name().into(),
                    label.into(),
                    format_number(errors[i]),
                    rate,
                ]);
            }
        }
    }
    let r = table_data.reference;
    write_meta(cfg, "convergence", &[("reference", describe(r))])?;
    println!("reference: {}", describe(r));
    emit(&table, cfg)
}

fn describe(r: Resolution) -> String {
    format!("n_s = {}, n_m = {}, n_steps = {}", r.n_s, r.n_m, r.n_steps)
}

fn report_rows(table: &mut Table, label: &str, report: &ErrorReport) {
    let opt = |v: Option<f64>| v.map(format_number).unwrap_or_default();
    for f in Field::ALL {
        let e = report.field(f);
        table.push(vec![
            label.into(),
            f.name().into(),
            format_number(e.linf_l2),
            format_number(e.l2_l2),
            opt(e.l2_h1),
            opt(e.rel_linf_l2()),
            opt(e.rel_l2_l2()),
        ]);
    }
}

const REPORT_HEADER: [&str; 7] = ["run", "field", "linf_l2", "l2_l2", "l2_h1", "rel_linf_l2", "rel_l2_l2"];

fn compare_fd(cfg: &RunConfig) -> Result<()> {
    let p = &cfg.params;
    let scheme = cfg.scheme_config();
    let n_steps = scheme.n_steps();
    let times = if cfg.output.snapshot_times.is_empty() {
        aligned_times(cfg.time.t_end, n_steps, 100)
    } else {
        cfg.output.snapshot_times.clone()
    };
    let ops = FemOperators::new(p, cfg.mesh.n_s, cfg.mesh.n_m)?;
    let fem = run_simulation(p, &ops, &scheme, &times)?;
    let fd = run_fd(
        p,
        &FdRun {
            n_s: cfg.mesh.n_s,
            n_m: cfg.mesh.n_m,
            dt: scheme.effective_dt(),
            t_end: cfg.time.t_end,
            record_every: cfg.output.record_every,
        },
        &times,
    )?;
    let report = compare_records(&fem, &fd)?;
    let mut table = Table::new("compare_fd", &REPORT_HEADER);
    report_rows(&mut table, &format!("{} vs fd", cfg.scheme.name()), &report);
    write_meta(cfg, "compare_fd", &[("snapshots", report.n_times.to_string())])?;
    emit(&table, cfg)
}

fn accuracy_setup(cfg: &RunConfig) -> AccuracySetup {
    AccuracySetup {
        t_end: cfg.time.t_end,
        test: cfg.resolution(),
        reference: cfg.reference(),
        ..AccuracySetup::standard()
    }
}

fn compare_alg(cfg: &RunConfig) -> Result<()> {
    let setup = accuracy_setup(cfg);
    println!(
        "reference ({}): {}",
        setup.reference_variant.name(),
        describe(setup.reference)
    );
    let reference = setup.run_reference(&cfg.params)?;
    let cmp = compare_algorithms(&cfg.params, &setup, &reference)?;
    let mut table = Table::new("compare_alg", &REPORT_HEADER);
    report_rows(&mut table, Variant::Alg1.name(), &cmp.alg1);
    report_rows(&mut table, Variant::Alg2.name(), &cmp.alg2);
    write_meta(cfg, "compare_alg", &[("reference", describe(setup.reference))])?;
    emit(&table, cfg)
}

fn stepping(cfg: &RunConfig, ratios: &[usize]) -> Result<()> {
    let setup = accuracy_setup(cfg);
    println!(
        "reference ({}): {}",
        setup.reference_variant.name(),
        describe(setup.reference)
    );
    let reference = setup.run_reference(&cfg.params)?;
    let rows = stepping_study(&cfg.params, &setup, ratios, &reference)?;
    let mut table = Table::new("stepping_study", &["ratio", "n_s", "n_m", "rel_c", "rel_c1", "rel_c2"]);
    for row in &rows {
        let rel = |f| row.report.field(f).rel_linf_l2().map(format_number).unwrap_or_default();
        table.push(vec![
            row.ratio.to_string(),
            row.resolution.n_s.to_string(),
            row.resolution.n_m.to_string(),
            rel(Field::C),
            rel(Field::C1),
            rel(Field::C2),
        ]);
    }
    write_meta(
        cfg,
        "stepping_study",
        &[("reference", describe(setup.reference)), ("scheme", "alg1".into())],
    )?;
    emit(&table, cfg)
}

fn plot(input: &Path, field: &str, out: &Path) -> Result<()> {
    let header = std::fs::read_to_string(input)
        .map_err(|source| Error::Io {
            path: input.to_path_buf(),
            source,
        })?
        .lines()
        .next()
        .unwrap_or_default()
        .to_string();
    let style = PlotStyle {
        title: format!(
            "{field} from {}",
            input.file_name().unwrap_or_default().to_string_lossy()
        ),
        y_label: field.to_string(),
        ..PlotStyle::default()
    };
    let series = if header == SNAPSHOTS_HEADER.join(",") {
        let f = Field::parse(field).ok_or_else(|| Error::Config {
            key: "--field".into(),
            reason: format!("`{field}` is not one of c, c1, c2"),
        })?;
        // One profile per snapshot time.
        let mut series: Vec<Series> = Vec::new();
        for row in read_snapshots_csv(input)?.into_iter().filter(|r| r.field == f) {
            let label = format!("t = {}", row.t);
            match series.last_mut() {
                Some(s) if s.label == label => {
                    s.x.push(row.x);
                    s.y.push(row.value);
                }
                _ => series.push(Series {
                    label,
                    x: vec![row.x],
                    y: vec![row.value],
                }),
            }
        }
        series
    } else {
        let data = read_numeric_csv(input)?;
        let t = data.column("t").ok_or_else(|| Error::Config {
            key: "--input".into(),
            reason: "no `t` column".into(),
        })?;
        let y = data.column(field).ok_or_else(|| Error::Config {
            key: "--field".into(),
            reason: format!("no column `{field}` (have {})", data.headers.join(", ")),
        })?;
        vec![Series {
            label: field.to_string(),
            x: t.to_vec(),
            y: y.to_vec(),
        }]
    };
    let style = if header == SNAPSHOTS_HEADER.join(",") {
        PlotStyle {
            x_label: "x".into(),
            ..style
        }
    } else {
        style
    };
    emit_svg_plot(&series, &style, out)?;
    println!("wrote {}", out.display());
    Ok(())
}
