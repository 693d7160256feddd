// `!(x > 0.0)` style guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use lorenz::combinatorics::LorenzPermutation;
use lorenz::domains::{default_sigma, dt_boundary, Flower};
use lorenz::engine::{find_renormalization, prerenormalize};
use lorenz::flow::{fixed_point_search, iterate, stability_trace, SearchOptions, StopReason};
use lorenz::io::{flow_csv, interval_table_csv, read_map, read_thetas, write_atomic, write_json, write_map, SvgPlot};
use lorenz::machinery::level_intervals;
use lorenz::map::standard_family;
use lorenz::verifier::{power_like_extension, verify_main_inequality};
use lorenz::{Error, Interval, Tolerances};

const EXIT_CLASSIFICATION: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_INPUT: u8 = 1;

#[derive(Parser)]
#[command(name = "lorenz", version, about = "Renormalization and complex bounds for Lorenz maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// Output file; JSON goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Largest return time considered when looking for renormalizations.
    #[arg(long, default_value_t = 8)]
    max_time: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Nontriviality, real bounds and renormalization data of a map.
    Analyze {
        #[arg(long)]
        input: PathBuf,
        /// Also report the permutation sequence of this many renormalizations.
        #[arg(long, default_value_t = 1)]
        levels: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Renormalizes repeatedly and writes one CSV row per renormalization.
    Iterate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        levels: usize,
        /// JSON list of permutations every level must belong to.
        #[arg(long)]
        theta: Option<PathBuf>,
        /// Where to write the last map of the orbit.
        #[arg(long)]
        map_out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Interval families of each level as CSV.
    Intervals {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        levels: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Pulls hyperbolic neighborhoods back by the first-return branches and
    /// certifies the power-like extension of the renormalization.
    VerifyComplex {
        #[arg(long)]
        input: PathBuf,
        /// Level `n` of the renormalization.
        #[arg(long)]
        levels: usize,
        /// The neighborhood is built on `L_{n-m}`.
        #[arg(long, default_value_t = 2)]
        m_offset: usize,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        /// Skip the power-like extension certificate.
        #[arg(long)]
        no_extension: bool,
        #[command(flatten)]
        common: Common,
    },
    /// SVG of `D_t(J)`, a flower, or the pullback regions of a map.
    Plot {
        #[arg(long)]
        out: PathBuf,
        /// Map whose power-like extension is drawn.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long, default_value_t = 2)]
        m_offset: usize,
        #[arg(long)]
        sigma: Option<f64>,
        /// Endpoints of `J`.
        #[arg(long, num_args = 2, allow_negative_numbers = true, default_values_t = [-1.0, 1.0])]
        interval: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// Flower `a d e b t σ` drawn instead of `D_t(J)`.
        #[arg(long, num_args = 6, allow_negative_numbers = true)]
        flower: Option<Vec<f64>>,
        #[arg(long, default_value_t = 8)]
        max_time: usize,
    },
    /// Searches a fixed point of renormalization with the given combinatorics.
    FixedPoint {
        /// JSON permutation, or a list whose first entry is used.
        #[arg(long)]
        theta: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long, default_value_t = 60)]
        budget: usize,
        /// Where to write the search summary.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// A member of the standard family `η_- = u(1 - s)`, `η_+ = v + (1 - v)s`.
    Standard {
        #[arg(long)]
        u: f64,
        #[arg(long)]
        v: f64,
        #[arg(long, default_value_t = 0.5)]
        c: f64,
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Settings echoed into every JSON report.
#[derive(Debug, Serialize)]
struct RunConfig {
    command: &'static str,
    input: Option<PathBuf>,
    out: Option<PathBuf>,
    tolerances: Tolerances,
    sigma: Option<f64>,
    samples: Option<usize>,
    max_time: usize,
    levels: Option<usize>,
    theta: Option<PathBuf>,
}

impl RunConfig {
    fn validate(&self) -> lorenz::Result<()> {
        if self.max_time < 2 || self.max_time > 63 {
            return Err(Error::Domain(format!("--max-time must lie in 2..=63, got {}", self.max_time)));
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0) {
                return Err(Error::Domain(format!("--sigma must be positive, got {s}")));
            }
        }
        if self.samples == Some(0) || self.levels == Some(0) {
            return Err(Error::Domain("--samples and --levels must be positive".into()));
        }
        Ok(())
    }
}

/// Writes to stdout; a reader that closed the pipe early is not an error.
fn write_stdout(text: &str) -> lorenz::Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn emit<T: Serialize>(out: Option<&Path>, value: &T) -> lorenz::Result<()> {
    match out {
        Some(p) => write_json(p, value),
        None => write_stdout(&(serde_json::to_string_pretty(value)? + "\n")),
    }
}

fn emit_text(out: Option<&Path>, text: &str) -> lorenz::Result<()> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => write_stdout(text),
    }
}

fn read_theta(path: &Path) -> lorenz::Result<LorenzPermutation> {
    let text = std::fs::read_to_string(path)?;
    if let Ok(p) = serde_json::from_str::<LorenzPermutation>(&text) {
        return Ok(p);
    }
    read_thetas(path)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::Domain(format!("{} holds no permutation", path.display())))
}

fn analyze(input: &Path, levels: usize, common: &Common) -> lorenz::Result<u8> {
    let cfg = RunConfig {
        command: "analyze",
        input: Some(input.into()),
        out: common.out.clone(),
        tolerances: Tolerances::default(),
        sigma: None,
        samples: None,
        max_time: common.max_time,
        levels: Some(levels),
        theta: None,
    };
    cfg.validate()?;
    let map = read_map(input)?;
    let class = map.classify();
    let bounds = map.real_bounds_report();
    let (step, reason) = match find_renormalization(&map, common.max_time) {
        Ok(s) => (s, None),
        Err(e) if e.is_classification() => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    let (thetas, depth) = match prerenormalize(&map, levels, common.max_time) {
        Ok(pre) => (pre.thetas(), levels),
        Err(Error::Depth { achieved, .. }) => (Vec::new(), achieved),
        Err(e) if e.is_classification() => (Vec::new(), 0),
        Err(e) => return Err(e),
    };
    let renormalizable = step.is_some();
    emit(
        common.out.as_deref(),
        &json!({
            "config": cfg,
            "nontriviality": class,
            "critical_values": [map.u(), map.v()],
            "real_bounds": bounds,
            "renormalizable": renormalizable,
            "not_renormalizable_reason": reason,
            "step": step,
            "theta": step.as_ref().map(|s| &s.theta),
            "renormalization_depth": depth,
            "theta_sequence": thetas,
        }),
    )?;
    Ok(if class.is_trivial() || !renormalizable { EXIT_CLASSIFICATION } else { 0 })
}

fn run_iterate(input: &Path, levels: usize, theta: Option<&Path>, map_out: Option<&Path>, common: &Common) -> lorenz::Result<u8> {
    let cfg = RunConfig {
        command: "iterate",
        input: Some(input.into()),
        out: common.out.clone(),
        tolerances: Tolerances::default(),
        sigma: None,
        samples: None,
        max_time: common.max_time,
        levels: Some(levels),
        theta: theta.map(Into::into),
    };
    cfg.validate()?;
    let map = read_map(input)?;
    let filter = theta.map(read_thetas).transpose()?;
    let rec = iterate(&map, levels, filter.as_deref(), common.max_time);
    let mut steps = rec.clone();
    steps.levels.retain(|l| l.theta.is_some());
    emit_text(common.out.as_deref(), &flow_csv(&steps)?)?;
    if let Some(p) = map_out {
        write_map(p, &rec.levels.last().expect("flow has a level").map)?;
    }
    eprintln!("stop: {:?}", rec.stop);
    Ok(match rec.stop {
        StopReason::Completed => 0,
        StopReason::NumericFailure { .. } => EXIT_NUMERIC,
        _ => EXIT_CLASSIFICATION,
    })
}

fn intervals(input: &Path, levels: usize, common: &Common) -> lorenz::Result<u8> {
    let map = read_map(input)?;
    let pre = prerenormalize(&map, levels, common.max_time)?;
    let table = (1..=levels).map(|k| level_intervals(&pre, k)).collect::<lorenz::Result<Vec<_>>>()?;
    emit_text(common.out.as_deref(), &interval_table_csv(&table)?)?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn verify_complex(input: &Path, n: usize, m: usize, sigma: Option<f64>, samples: usize, no_extension: bool, common: &Common) -> lorenz::Result<u8> {
    let cfg = RunConfig {
        command: "verify-complex",
        input: Some(input.into()),
        out: common.out.clone(),
        tolerances: Tolerances::default(),
        sigma,
        samples: Some(samples),
        max_time: common.max_time,
        levels: Some(n),
        theta: None,
    };
    cfg.validate()?;
    let map = read_map(input)?;
    let sigma = sigma.unwrap_or_else(|| default_sigma(map.alpha()));
    let pre = prerenormalize(&map, n, common.max_time)?;
    let main = verify_main_inequality(&pre, n, m, samples, sigma)?;
    let (ext, ext_err) = if no_extension {
        (None, None)
    } else {
        match power_like_extension(&pre, n, m, sigma) {
            Ok(e) => (Some(e), None),
            Err(e) => (None, Some(e.to_string())),
        }
    };
    let code = if ext_err.is_some() { EXIT_NUMERIC } else { 0 };
    emit(
        common.out.as_deref(),
        &json!({
            "config": cfg,
            "main_inequality": main,
            "power_like_extension": ext,
            "power_like_extension_error": ext_err,
        }),
    )?;
    Ok(code)
}

#[allow(clippy::too_many_arguments)]
fn plot(out: &Path, input: Option<&Path>, n: usize, m: usize, sigma: Option<f64>, interval: &[f64], t: f64, flower: Option<&[f64]>, max_time: usize) -> lorenz::Result<u8> {
    let mut svg = SvgPlot::new();
    match input {
        Some(path) => {
            let map = read_map(path)?;
            let sigma = sigma.unwrap_or_else(|| default_sigma(map.alpha()));
            let pre = prerenormalize(&map, n, max_time)?;
            let ext = power_like_extension(&pre, n, m, sigma)?;
            let big_c = pre.level(n).c_interval();
            let rescale = |z: Complex64| (z - big_c.lo) / big_c.len();
            svg.polygon(dt_boundary(&ext.d_interval, sigma, 512).into_iter().map(rescale).collect(), "black");
            svg.polygon(ext.u_minus.boundary.clone(), "blue");
            svg.polygon(ext.u_plus.boundary.clone(), "red");
            svg.interval(Interval::new(0.0, 1.0), "black");
        }
        None => {
            if let Some(f) = flower {
                let fl = Flower::new(f[0], f[1], f[2], f[3], f[4], f[5])?;
                svg.flower(&fl, "black");
            } else {
                let j = Interval::new(interval[0], interval[1]);
                if !(j.len() > 0.0 && t > 0.0) {
                    return Err(Error::Domain("need a nondegenerate interval and t > 0".into()));
                }
                svg.hyperbolic_neighborhood(&j, t, "black");
                svg.interval(j, "red");
            }
        }
    }
    svg.write(out, 600.0)?;
    Ok(0)
}

fn fixed_point(theta: &Path, alpha: f64, budget: usize, report: Option<&Path>, common: &Common) -> lorenz::Result<u8> {
    let theta = read_theta(theta)?;
    let opts = SearchOptions {
        budget,
        ..SearchOptions::default()
    };
    let fp = fixed_point_search(&theta, alpha, &opts)?;
    let stability = stability_trace(&fp.map, &theta, 5).ok();
    emit(common.out.as_deref(), &fp.map)?;
    let summary = json!({
        "theta": fp.theta,
        "residual": fp.residual,
        "iterations": fp.iterations,
        "trace": fp.trace,
        "stability": stability,
        "critical_values": [fp.map.u(), fp.map.v()],
        "c": fp.map.c(),
    });
    match report {
        Some(p) => write_json(p, &summary)?,
        None => eprintln!("{}", serde_json::to_string_pretty(&summary)?),
    }
    Ok(if fp.residual <= 1e-6 { 0 } else { EXIT_NUMERIC })
}

fn run(cli: Cli) -> lorenz::Result<u8> {
    match cli.command {
        Command::Analyze { input, levels, common } => analyze(&input, levels, &common),
        Command::Iterate {
            input,
            levels,
            theta,
            map_out,
            common,
        } => run_iterate(&input, levels, theta.as_deref(), map_out.as_deref(), &common),
        Command::Intervals { input, levels, common } => intervals(&input, levels, &common),
        Command::VerifyComplex {
            input,
            levels,
            m_offset,
            sigma,
            samples,
            no_extension,
            common,
        } => verify_complex(&input, levels, m_offset, sigma, samples, no_extension, &common),
        Command::Plot {
            out,
            input,
            levels,
            m_offset,
            sigma,
            interval,
            t,
            flower,
            max_time,
        } => plot(&out, input.as_deref(), levels, m_offset, sigma, &interval, t, flower.as_deref(), max_time),
        Command::FixedPoint {
            theta,
            alpha,
            budget,
            report,
            common,
        } => fixed_point(&theta, alpha, budget, report.as_deref(), &common),
        Command::Standard { u, v, c, alpha, out } => {
            let map = standard_family(u, v, c, alpha)?;
            emit(out.as_deref(), &map)?;
            Ok(0)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        _ if e.is_classification() => EXIT_CLASSIFICATION,
        Error::Fit { .. }
        | Error::Orbit(_)
        | Error::Recursion { .. }
        | Error::Continuation { .. }
        | Error::Certification { .. }
        | Error::Divergence(_)
        | Error::Numeric(_) => EXIT_NUMERIC,
        _ => EXIT_INPUT,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
