use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thin_torsion::expansion::build_expansion;
use thin_torsion::extrema::find_peak;
use thin_torsion::geometry::DomainProfile;
use thin_torsion::harness::{
    expand_report, grid_report, max_report, parse_epsilons, resolve_profile, sweep, torsion_report, write_sweep_csv,
    SweepOptions, WosReport, DEFAULT_ORDER, DEFAULT_RESOLUTION, DEFAULT_SAMPLES,
};
use thin_torsion::solvers::{solve_fd, wos_exit_time};
use thin_torsion::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Thin-domain torsion: asymptotic series, peak expansion and reference solvers.
#[derive(Debug, Parser)]
#[command(name = "thintor", version)]
struct Cli {
    /// Builtin profile (folium, lemniscate, parabolic-lens, disc, ellipsoid:a1,..,an) or a profile JSON file.
    #[arg(long, global = true, default_value = "folium")]
    profile: String,
    /// Expansion order N.
    #[arg(long, global = true, default_value_t = DEFAULT_ORDER)]
    order: usize,
    /// Thickness ε; `sweep` also takes `start:stop:step` or a comma list.
    #[arg(long, global = true)]
    epsilon: Option<String>,
    /// Finite-difference intervals per axis.
    #[arg(long, global = true, default_value_t = DEFAULT_RESOLUTION)]
    grid: usize,
    /// Walk-on-spheres walks.
    #[arg(long, global = true, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write to this file instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Coefficient table αᵢ⁽²ʲ⁾(x′), or uε^N at (x′, ξ) when --xi is given.
    Expand {
        /// Cross-section point as comma-separated coordinates; repeatable.
        #[arg(long = "at")]
        at: Vec<String>,
        /// Scaled height ξ = xₙ/ε at which to evaluate uε^N.
        #[arg(long)]
        xi: Option<f64>,
    },
    /// Peak expansion max uε ≈ c₂ε² + c₄ε⁴ and its maximizer.
    Max,
    /// Torsional rigidity coefficients c₃, c₅, c₇ by both integration paths.
    Torsion,
    /// Finite-difference reference solution; CSV output lists the grid.
    SolveFd,
    /// Walk-on-spheres exit time from a starting point.
    SolveWos {
        /// Physical point x′,xₙ; defaults to the midline above the thickest point.
        #[arg(long)]
        start: Option<String>,
        /// Shell width; defaults to 1e-5 of the domain scale.
        #[arg(long)]
        shell: Option<f64>,
    },
    /// Series against finite differences over a range of ε.
    Sweep {
        /// Write zero runtimes so reruns produce identical files.
        #[arg(long)]
        reproducible: bool,
    },
}

/// Usage problems exit with 1, numerical failures with 2.
enum Failure {
    Usage(String),
    Numeric(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_)
            | Error::UnknownBuiltin(_)
            | Error::Config(_)
            | Error::Dimension { .. }
            | Error::OutsideDomain { .. }
            | Error::Io(_) => Failure::Usage(e.to_string()),
            other => Failure::Numeric(other),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn parse_point(s: &str) -> std::result::Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Failure::Usage(format!("bad coordinate {t:?} in {s:?}")))
        })
        .collect()
}

fn single_epsilon(cli: &Cli) -> std::result::Result<Option<f64>, Failure> {
    match &cli.epsilon {
        None => Ok(None),
        Some(s) => s
            .trim()
            .parse::<f64>()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("--epsilon expects a number here, got {s:?}"))),
    }
}

fn sink(cli: &Cli) -> io::Result<Box<dyn Write>> {
    Ok(match &cli.output {
        Some(p) => Box::new(io::BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit_json<T: Serialize>(cli: &Cli, value: &T) -> Outcome {
    let mut out = sink(cli)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(Error::from)?;
    writeln!(out)?;
    Ok(())
}

/// Two-column `key,value` listing; vectors are `;`-joined.
fn emit_pairs(cli: &Cli, pairs: &[(&str, String)]) -> Outcome {
    let mut out = sink(cli)?;
    writeln!(out, "key,value")?;
    for (k, v) in pairs {
        writeln!(out, "{k},{v}")?;
    }
    Ok(())
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn run_expand(cli: &Cli, profile: &DomainProfile, at: &[String], xi: Option<f64>) -> Outcome {
    let series = build_expansion(profile, cli.order)?;
    let mut points = at.iter().map(|s| parse_point(s)).collect::<std::result::Result<Vec<_>, _>>()?;
    if points.is_empty() {
        points = profile.omega().interior_grid(9, 0.0);
    }
    let report = match xi {
        Some(xi) => {
            let eps = single_epsilon(cli)?.unwrap_or(1.0);
            let evals: Vec<(Vec<f64>, f64)> = points.iter().map(|x| (x.clone(), xi)).collect();
            expand_report(&series, &[], &evals, eps)?
        }
        None => expand_report(&series, &points, &[], f64::NAN)?,
    };
    if cli.format == Format::Json {
        return emit_json(cli, &report);
    }
    let mut out = sink(cli)?;
    if xi.is_some() {
        writeln!(out, "x,xi,epsilon,u")?;
        for v in &report.values {
            writeln!(out, "{},{},{},{}", join(&v.x), v.xi, v.epsilon, v.u)?;
        }
    } else {
        writeln!(out, "x,j,i,alpha")?;
        for row in &report.alpha {
            for (i, a) in row.alpha.iter().enumerate() {
                writeln!(out, "{},{},{},{}", join(&row.x), row.j, i, a)?;
            }
        }
    }
    Ok(())
}

fn run_max(cli: &Cli, profile: &DomainProfile) -> Outcome {
    let r = max_report(profile, single_epsilon(cli)?)?;
    if cli.format == Format::Json {
        return emit_json(cli, &r);
    }
    let (mx, mxi) = match &r.maximizer {
        Some((x, xi)) => (join(x), xi.to_string()),
        None => (String::new(), String::new()),
    };
    emit_pairs(
        cli,
        &[
            ("profile", r.profile.clone()),
            ("x_bar", join(&r.x_bar)),
            ("h0", r.h0.to_string()),
            ("c2", r.c2.to_string()),
            ("c4", r.c4.to_string()),
            ("xm2", join(&r.xm2)),
            ("xi_n2", r.xi_n2.to_string()),
            ("jet_identity_residual", r.jet_identity_residual.to_string()),
            ("epsilon", opt(r.epsilon)),
            ("value", opt(r.value)),
            ("maximizer_x", mx),
            ("maximizer_xi", mxi),
        ],
    )
}

fn run_torsion(cli: &Cli, profile: &DomainProfile) -> Outcome {
    let r = torsion_report(profile, single_epsilon(cli)?)?;
    if cli.format == Format::Json {
        return emit_json(cli, &r);
    }
    emit_pairs(
        cli,
        &[
            ("profile", r.profile.clone()),
            ("c3", r.c3.to_string()),
            ("c5", r.c5.to_string()),
            ("c7", r.c7.to_string()),
            ("direct", join(&r.direct)),
            ("dual_path_delta", r.dual_path_delta.to_string()),
            ("quadrature_error_estimate", r.quadrature_error_estimate.to_string()),
            ("epsilon", opt(r.epsilon)),
            ("value", opt(r.value)),
        ],
    )
}

fn run_fd(cli: &Cli, profile: &DomainProfile) -> Outcome {
    let eps = single_epsilon(cli)?.unwrap_or(0.5);
    let grid = solve_fd(profile, eps, cli.grid)?;
    let report = grid_report(&grid);
    log::info!(
        "{} nodes, {} iterations, torsion {}",
        report.interior_nodes,
        report.iterations,
        report.torsion
    );
    if cli.format == Format::Json {
        return emit_json(cli, &report);
    }
    grid.write_csv(sink(cli)?)?;
    Ok(())
}

fn default_start(profile: &DomainProfile, eps: f64) -> Vec<f64> {
    let x = find_peak(profile).map(|p| p.iter().cloned().collect()).unwrap_or_else(|_| {
        let b = profile.omega().bounds();
        b.lo.iter().zip(&b.hi).map(|(l, h)| 0.5 * (l + h)).collect::<Vec<f64>>()
    });
    let mid = 0.5 * eps * (profile.h_plus().value(&x) - profile.h_minus().value(&x));
    x.into_iter().chain(std::iter::once(mid)).collect()
}

fn run_wos(cli: &Cli, profile: &DomainProfile, start: Option<&str>, shell: Option<f64>) -> Outcome {
    let eps = single_epsilon(cli)?.unwrap_or(0.5);
    let start = match start {
        Some(s) => parse_point(s)?,
        None => default_start(profile, eps),
    };
    let estimate = wos_exit_time(profile, eps, &start, cli.samples, cli.seed, shell)?;
    let r = WosReport {
        profile: profile.name().to_string(),
        epsilon: eps,
        start,
        estimate,
    };
    if cli.format == Format::Json {
        return emit_json(cli, &r);
    }
    emit_pairs(
        cli,
        &[
            ("profile", r.profile.clone()),
            ("epsilon", eps.to_string()),
            ("start", join(&r.start)),
            ("mean", estimate.mean.to_string()),
            ("std_error", estimate.std_error.to_string()),
            ("samples", estimate.samples.to_string()),
            ("shell_width", estimate.shell_width.to_string()),
            ("seed", estimate.seed.to_string()),
            ("mean_steps", estimate.mean_steps.to_string()),
        ],
    )
}

fn run_sweep(cli: &Cli, profile: &DomainProfile, reproducible: bool) -> Outcome {
    let spec = cli.epsilon.as_deref().unwrap_or("0.1:1.0:0.1");
    let eps = parse_epsilons(spec)?;
    let opts = SweepOptions {
        order: cli.order,
        resolution: cli.grid,
        reproducible,
    };
    let rows = sweep(profile, &eps, &opts)?;
    if cli.format == Format::Json {
        return emit_json(cli, &rows);
    }
    write_sweep_csv(&rows, sink(cli)?)?;
    Ok(())
}

fn run(cli: &Cli) -> Outcome {
    let profile = resolve_profile(&cli.profile)?;
    for w in &profile.report().warnings {
        log::warn!("{}: {w}", profile.name());
    }
    match &cli.command {
        Command::Expand { at, xi } => run_expand(cli, &profile, at, *xi),
        Command::Max => run_max(cli, &profile),
        Command::Torsion => run_torsion(cli, &profile),
        Command::SolveFd => run_fd(cli, &profile),
        Command::SolveWos { start, shell } => run_wos(cli, &profile, start.as_deref(), *shell),
        Command::Sweep { reproducible } => run_sweep(cli, &profile, *reproducible),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("numerical failure: {e}");
            ExitCode::from(2)
        }
    }
}
