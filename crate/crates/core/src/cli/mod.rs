//! Command-line front end.
//!
//! Every subcommand loads a scenario (or the built-in default), applies the
//! `--seed` override and writes its files into the output directory.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use crate::ensemble::{
    probe_trace, run_scenario, ProbeTrace, ScenarioConfig, ShapeMode, ShapingPulse, ShapingWindow,
    Summary,
};
use crate::magnetics::{write_field_map, FieldMapGrid};
use crate::output::{
    check_same_scenario, combined_report, fit_report, read_provenance, to_json, trap_report,
    write_file, FitReport, TrapReport,
};
use crate::scenario::{
    parse_scenario_file, parse_scenario_str, write_scenario, OutputFormat, OutputSpec,
};
use crate::units::{parse_quantity, Dimension};
use crate::{Error, Result, Vec3, VERSION};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "RINGSIM_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "ringsim",
    version,
    about = "Magnetic storage ring simulator for cold atoms"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file. Without it the built-in default scenario is used.
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,
    /// Replace the scenario seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads. Results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Keep,
    Remove,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Field on a regular grid centred on the ring zero at azimuth 0.
    FieldMap {
        #[arg(long, default_value_t = 21)]
        nx: usize,
        #[arg(long, default_value_t = 21)]
        ny: usize,
        #[arg(long, default_value_t = 1)]
        nz: usize,
        /// Half width of the grid, with unit.
        #[arg(long, default_value = "1 mm")]
        half_width: String,
        /// Time at which the ramps are evaluated, with unit.
        #[arg(long, default_value = "0 s")]
        time: String,
    },
    /// Gradient, depth, frequency and loss radius of the trap cross-sections.
    Characterize,
    /// Run the scenario and record the probe trace.
    Simulate,
    /// Fit the revolution peak train of a recorded trace.
    Fit {
        /// Trace file; defaults to trace.csv or trace.json in the output directory.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Add a velocity-shaping pulse and simulate.
    Shape {
        /// Pulse time, with unit.
        #[arg(long)]
        at: String,
        /// Window width as a fraction of the cloud FWHM.
        #[arg(long)]
        fraction: f64,
        #[arg(long, value_enum, default_value = "keep")]
        mode: ModeArg,
    },
    /// Combine the outputs in the output directory into one summary.
    Report,
}

/// Trace as written in JSON form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceFile {
    pub version: String,
    #[serde(flatten)]
    pub trace: ProbeTrace,
}

struct Context {
    config: ScenarioConfig,
    out: PathBuf,
    format: OutputFormat,
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            let first = text
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            eprintln!("ERROR:invalid-input:{first}");
            eprint!("{text}");
            return 1;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("ERROR:{}:{}", e.category(), e);
            if let Error::Numeric { diagnostics, .. } = &e {
                for d in diagnostics {
                    eprintln!("  {d}");
                }
            }
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let ctx = context(&cli.common)?;
    match cli.common.workers {
        Some(0) => Err(Error::invalid("--workers must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::invalid(format!("worker pool: {e}")))?;
            pool.install(|| dispatch(&cli.command, &ctx))
        }
        None => dispatch(&cli.command, &ctx),
    }
}

fn context(common: &Common) -> Result<Context> {
    let file = match &common.scenario {
        Some(p) => parse_scenario_file(p)?,
        None => parse_scenario_str(
            &format!("seed = {}\n", common.seed.unwrap_or(0)),
            "<default>",
        )?,
    };
    let mut config = file.config;
    if let Some(s) = common.seed {
        config.seed = s;
    }
    config.validate()?;
    let out = common
        .out
        .clone()
        .or_else(|| file.output.directory.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let format = match common.format {
        Some(FormatArg::Csv) => OutputFormat::Csv,
        Some(FormatArg::Json) => OutputFormat::Json,
        None => file.output.format.unwrap_or_default(),
    };
    Ok(Context {
        config,
        out,
        format,
    })
}

fn dispatch(cmd: &Command, ctx: &Context) -> Result<()> {
    match cmd {
        Command::FieldMap {
            nx,
            ny,
            nz,
            half_width,
            time,
        } => field_map(
            ctx,
            [*nx, *ny, *nz],
            quantity(half_width, Dimension::Length)?,
            quantity(time, Dimension::Time)?,
        ),
        Command::Characterize => characterize(ctx),
        Command::Simulate => simulate(ctx, &ctx.config),
        Command::Fit { trace } => fit(ctx, trace.as_deref()),
        Command::Shape { at, fraction, mode } => {
            let mut cfg = ctx.config.clone();
            let mode = match mode {
                ModeArg::Keep => ShapeMode::Keep,
                ModeArg::Remove => ShapeMode::Remove,
            };
            cfg.shaping.push(ShapingPulse {
                t: quantity(at, Dimension::Time)?,
                window: ShapingWindow {
                    fraction: *fraction,
                    mode,
                },
            });
            cfg.shaping.sort_by(|a, b| a.t.total_cmp(&b.t));
            cfg.validate()?;
            simulate(ctx, &cfg)
        }
        Command::Report => report(ctx),
    }
}

fn quantity(text: &str, dim: Dimension) -> Result<f64> {
    parse_quantity(text, dim).map_err(|e| Error::invalid(format!("`{text}`: {e}")))
}

fn preamble(cfg: &ScenarioConfig) -> Vec<String> {
    vec![
        format!("ringsim {VERSION}"),
        format!("scenario_hash {}", cfg.hash()),
        format!("seed {}", cfg.seed),
    ]
}

fn wrote(path: &Path) {
    println!("wrote {}", path.display());
}

fn field_map(ctx: &Context, counts: [usize; 3], half_width: f64, t: f64) -> Result<()> {
    if !(half_width > 0.0) {
        return Err(Error::invalid("half width must be positive"));
    }
    let cfg = &ctx.config;
    let ring = cfg.effective_ring();
    let centre = ring.frame.point(ring.zero_radius()?, 0.0, 0.0);
    let h = Vec3::repeat(half_width);
    let grid = FieldMapGrid {
        min: centre - h,
        max: centre + h,
        counts,
    };
    let source = cfg.apparatus()?;
    let mut buf = Vec::new();
    let rows = write_field_map(&source, &grid, t, &preamble(cfg), &mut buf)?;
    let path = ctx.out.join("field_map.csv");
    write_file(
        &path,
        &String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))?,
    )?;
    wrote(&path);
    println!("{rows} grid points");
    Ok(())
}

fn characterize(ctx: &Context) -> Result<()> {
    let report = trap_report(&ctx.config)?;
    let text = report.to_text();
    print!("{text}");
    let json = ctx.out.join("characterize.json");
    write_file(&json, &to_json(&report)?)?;
    let txt = ctx.out.join("characterize.txt");
    write_file(&txt, &text)?;
    wrote(&json);
    wrote(&txt);
    Ok(())
}

fn simulate(ctx: &Context, cfg: &ScenarioConfig) -> Result<()> {
    let result = run_scenario(cfg)?;
    let trace = probe_trace(&result, &cfg.probe)?;
    let trace_path = match ctx.format {
        OutputFormat::Csv => {
            let p = ctx.out.join("trace.csv");
            write_file(&p, &trace.to_csv())?;
            p
        }
        OutputFormat::Json => {
            let p = ctx.out.join("trace.json");
            write_file(
                &p,
                &to_json(&TraceFile {
                    version: VERSION.to_string(),
                    trace,
                })?,
            )?;
            p
        }
    };
    let summary = ctx.out.join("summary.json");
    write_file(&summary, &to_json(&result.summary)?)?;
    let scenario = ctx.out.join("scenario.toml");
    write_file(&scenario, &write_scenario(cfg, &OutputSpec::default())?)?;
    wrote(&trace_path);
    wrote(&summary);
    wrote(&scenario);
    let s = &result.summary;
    println!("{} of {} atoms alive at {:.3} s", s.alive, s.n, s.t_end);
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<ProbeTrace> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        let f: TraceFile = serde_json::from_str(&text)?;
        Ok(f.trace)
    } else {
        ProbeTrace::from_csv(&text)
    }
}

fn default_trace(ctx: &Context) -> Result<PathBuf> {
    let (first, second) = match ctx.format {
        OutputFormat::Csv => ("trace.csv", "trace.json"),
        OutputFormat::Json => ("trace.json", "trace.csv"),
    };
    [first, second]
        .iter()
        .map(|n| ctx.out.join(n))
        .find(|p| p.exists())
        .ok_or_else(|| {
            Error::Io(format!(
                "no trace.csv or trace.json in {}",
                ctx.out.display()
            ))
        })
}

fn fit(ctx: &Context, trace: Option<&Path>) -> Result<()> {
    let path = match trace {
        Some(p) => p.to_path_buf(),
        None => default_trace(ctx)?,
    };
    let trace = read_trace(&path)?;
    let report = fit_report(&ctx.config, &trace)?;
    let out = ctx.out.join("fit.json");
    write_file(&out, &to_json(&report)?)?;
    wrote(&out);
    let p = &report.fit.params;
    println!(
        "T_orb {:.3} ms, tau {:.1} ms, sigma_v {:.3} cm/s ({:.2} µK), converged {}",
        p.t_orb * 1e3,
        p.tau * 1e3,
        p.sigma_v * 100.0,
        report.azimuthal_temperature * 1e6,
        report.fit.converged
    );
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn report(ctx: &Context) -> Result<()> {
    let names = [
        "characterize.json",
        "summary.json",
        "fit.json",
        "trace.csv",
        "trace.json",
    ];
    let mut found = Vec::new();
    for n in names {
        let p = ctx.out.join(n);
        if p.exists() {
            found.push((n.to_string(), read_provenance(&p)?));
        }
    }
    check_same_scenario(&found, Some(&ctx.config.hash()))?;
    let trap: TrapReport = trap_report(&ctx.config)?;
    let summary: Option<Summary> = found
        .iter()
        .any(|f| f.0 == "summary.json")
        .then(|| read_json(&ctx.out.join("summary.json")))
        .transpose()?;
    let fit: Option<FitReport> = found
        .iter()
        .any(|f| f.0 == "fit.json")
        .then(|| read_json(&ctx.out.join("fit.json")))
        .transpose()?;
    let text = combined_report(Some(&trap), summary.as_ref(), fit.as_ref());
    print!("{text}");
    let path = ctx.out.join("report.txt");
    write_file(&path, &text)?;
    wrote(&path);
    Ok(())
}
