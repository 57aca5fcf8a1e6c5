//! `mink`: command-line driver for the question-mark measure pipelines.
//!
//! Exit codes: 0 success, 1 I/O or usage, 2 partial convergence, 3 missing
//! prerequisite (no cache, or cache too small), 4 inconsistent cache.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num::BigRational;

use mink_core::analysis;
use mink_core::asymptotics;
use mink_core::error::Error as CoreError;
use mink_core::fixpoint::{
    self, CacheMeta, ConvergenceReport, FixpointConfig, PushforwardRoute,
};
use mink_core::jacobi::JacobiMatrix;
use mink_core::measure;
use mink_core::quadrature;

use output::{cache_location, cache_provenance, fmt_f64, Report, VERSION};

/// High-precision published value of the Hausdorff dimension, used as the
/// reference the computed brackets must contain.
const REFERENCE_DIMENSION: f64 = 0.874716305108211;

#[derive(Debug)]
pub enum CliError {
    /// I/O or malformed invocation.
    Io(String),
    /// The iteration stopped before reaching the requested converged rank.
    Partial(String),
    /// A prerequisite (cache file, sufficient cache size) is missing.
    Missing(String),
    /// The cache exists but is malformed or self-inconsistent.
    BadCache(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Partial(_) => 2,
            CliError::Missing(_) => 3,
            CliError::BadCache(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Io(m) | CliError::Partial(m) | CliError::Missing(m) | CliError::BadCache(m) => m,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Parse { .. } => CliError::BadCache(e.to_string()),
            CoreError::Io(_) => CliError::Io(e.to_string()),
            other => CliError::Io(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "mink", version, about = "Jacobi-matrix pipelines for Minkowski's question-mark measure")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for randomized auxiliary runs (reserved; recorded in provenance).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RouteArg {
    Auto,
    Operator,
    Atoms,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Tsv,
    Json,
}

#[derive(Args)]
struct CacheArgs {
    /// Jacobi cache file (default: $MINK_CACHE_DIR/jacobi.tsv or ./.mink-cache/jacobi.tsv).
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Compute the cache if it is missing (requires --n).
    #[arg(long)]
    compute: bool,
    /// Coefficient count for --compute.
    #[arg(long)]
    n: Option<usize>,
    /// Convergence threshold for --compute.
    #[arg(long, default_value_t = 1e-12)]
    eps: f64,
    /// Iteration cap for --compute.
    #[arg(long)]
    iters: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the Jacobi matrix fixed point and write the coefficient cache
    /// plus a per-iteration convergence trace.
    Jacobi {
        /// Number of coefficients a_1..a_n to converge.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1e-12)]
        eps: f64,
        /// Iteration cap (default 10 n^0.7).
        #[arg(long)]
        iters: Option<usize>,
        /// Extra truncation rows beyond n (default max(16, rows/10)).
        #[arg(long)]
        buffer: Option<usize>,
        #[arg(long, value_enum, default_value_t = RouteArg::Auto)]
        route: RouteArg,
        /// Cache file to write (default cache location).
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Where to write the convergence trace (default stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Tsv)]
        format: FormatArg,
    },
    /// Evaluate the question-mark function, or emit a graph polyline.
    Q {
        /// Point to evaluate: a rational like 1/3 or a decimal in [0,1].
        #[arg(long, conflicts_with = "graph")]
        x: Option<String>,
        /// Emit the level-n graph approximation instead.
        #[arg(long)]
        graph: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Tsv)]
        format: FormatArg,
    },
    /// Zeros of the order-j polynomial compared against Chebyshev zeros.
    Zeros {
        #[arg(long)]
        j: usize,
        #[command(flatten)]
        cache: CacheArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Tsv)]
        format: FormatArg,
    },
    /// Discrepancy of the zero measure against the equilibrium measure.
    Discrepancy {
        #[arg(long)]
        j: usize,
        #[command(flatten)]
        cache: CacheArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Tsv)]
        format: FormatArg,
    },
    /// Log-Christoffel landscape over an x grid.
    Christoffel {
        /// Grid as start:stop:step.
        #[arg(long)]
        grid: String,
        #[arg(long)]
        j: usize,
        /// Overlay the cusp asymptotic for the Farey point 1/q.
        #[arg(long)]
        q: Option<u32>,
        #[command(flatten)]
        cache: CacheArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Tsv)]
        format: FormatArg,
    },
    /// Hausdorff-dimension brackets for orders 2..=max-order.
    Hausdorff {
        #[arg(long = "max-order", default_value_t = 8)]
        max_order: usize,
        #[command(flatten)]
        cache: CacheArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Tsv)]
        format: FormatArg,
    },
    /// Nevai-class diagnostics: coefficient envelope, divergent series, and
    /// ratio-asymptotics distances at doubling probe orders.
    Nevai {
        /// Largest order; probes run at j/16, j/8, j/4, j/2, j.
        #[arg(long)]
        j: usize,
        #[command(flatten)]
        cache: CacheArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Tsv)]
        format: FormatArg,
    },
    /// Geometric-mean regularity diagnostics and the capacity power law.
    Regularity {
        /// Largest index j for the Cesaro averages.
        #[arg(long)]
        j: usize,
        #[command(flatten)]
        cache: CacheArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Tsv)]
        format: FormatArg,
    },
    /// Farey-cusp weight asymptotics validated against the computed rule.
    Asymptotics {
        #[arg(long)]
        q: u32,
        /// Largest interval depth k (validates k = 0..=k).
        #[arg(long, default_value_t = 4)]
        k: u32,
        #[arg(long)]
        j: usize,
        #[command(flatten)]
        cache: CacheArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Tsv)]
        format: FormatArg,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mink: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Jacobi { n, eps, iters, buffer, route, cache, out, format } => {
            cmd_jacobi(n, eps, iters, buffer, route, cache.as_deref(), out.as_deref(), format)
        }
        Command::Q { x, graph, out, format } => cmd_q(x, graph, out.as_deref(), format),
        Command::Zeros { j, cache, out, format } => {
            let (jac, meta, path) = load_cache(&cache, j)?;
            cmd_zeros(&jac, &meta, &path, j, out.as_deref(), format)
        }
        Command::Discrepancy { j, cache, out, format } => {
            let (jac, meta, path) = load_cache(&cache, j)?;
            cmd_discrepancy(&jac, &meta, &path, j, out.as_deref(), format)
        }
        Command::Christoffel { grid, j, q, cache, out, format } => {
            let (jac, meta, path) = load_cache(&cache, j)?;
            cmd_christoffel(&jac, &meta, &path, &grid, j, q, out.as_deref(), format)
        }
        Command::Hausdorff { max_order, cache, out, format } => {
            let (jac, meta, path) = load_cache(&cache, max_order + 2)?;
            cmd_hausdorff(&jac, &meta, &path, max_order, out.as_deref(), format)
        }
        Command::Nevai { j, cache, out, format } => {
            let (jac, meta, path) = load_cache(&cache, j)?;
            cmd_nevai(&jac, &meta, &path, j, out.as_deref(), format)
        }
        Command::Regularity { j, cache, out, format } => {
            let (jac, meta, path) = load_cache(&cache, j)?;
            cmd_regularity(&jac, &meta, &path, j, out.as_deref(), format)
        }
        Command::Asymptotics { q, k, j, cache, out, format } => {
            let (jac, meta, path) = load_cache(&cache, j)?;
            cmd_asymptotics(&jac, &meta, &path, q, k, j, out.as_deref(), format)
        }
    }
}

/// Loads the cache, optionally computing it first, and checks that it carries
/// at least `needed` coefficients.
fn load_cache(args: &CacheArgs, needed: usize) -> Result<(JacobiMatrix, CacheMeta, PathBuf), CliError> {
    let path = cache_location(args.cache.as_deref());
    if !path.exists() {
        if args.compute {
            let n = args.n.ok_or_else(|| {
                CliError::Io("--compute needs --n to size the computation".into())
            })?;
            let mut cfg = FixpointConfig::new(n);
            cfg.eps = args.eps;
            cfg.max_iters = args.iters;
            let (jac, report) = fixpoint::fixpoint_solve(&cfg, None)?;
            if !report.converged {
                return Err(CliError::Partial(format!(
                    "fixed point not converged after {} iterations",
                    report.iterations
                )));
            }
            write_cache(&path, &jac, n, &report, args.eps)?;
        } else {
            return Err(CliError::Missing(format!(
                "no Jacobi cache at {}; run `mink jacobi --n <count>` first or pass --compute",
                path.display()
            )));
        }
    }
    let (jac, meta) = fixpoint::load_jacobi(&path).map_err(|e| match e {
        CoreError::Io(io) => CliError::Io(format!("cannot read {}: {io}", path.display())),
        other => CliError::BadCache(other.to_string()),
    })?;
    if meta.n + 1 < needed {
        return Err(CliError::Missing(format!(
            "cache {} holds {} coefficients but {} are needed; recompute with `mink jacobi --n {}`",
            path.display(),
            meta.n,
            needed,
            needed
        )));
    }
    Ok((jac, meta, path))
}

fn write_cache(
    path: &Path,
    jac: &JacobiMatrix,
    n: usize,
    report: &ConvergenceReport,
    eps: f64,
) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Io(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    let trusted = jac
        .leading(n + 1)
        .map_err(|e| CliError::Io(e.to_string()))?;
    let meta = CacheMeta {
        n,
        iterations: report.iterations,
        eps,
        builder: format!("mink-core {VERSION}"),
    };
    fixpoint::save_jacobi(path, &trusted, &meta)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_jacobi(
    n: usize,
    eps: f64,
    iters: Option<usize>,
    buffer: Option<usize>,
    route: RouteArg,
    cache: Option<&Path>,
    out: Option<&Path>,
    format: FormatArg,
) -> Result<(), CliError> {
    let cache_path = cache_location(cache);
    let mut cfg = FixpointConfig::new(n);
    cfg.eps = eps;
    cfg.max_iters = iters;
    cfg.buffer = buffer;
    cfg.route = match route {
        RouteArg::Auto => cfg.route,
        RouteArg::Operator => PushforwardRoute::Operator,
        RouteArg::Atoms => PushforwardRoute::MappedRule,
    };
    // an existing big-enough cache seeds the run, making a converged re-run a
    // validated no-op
    let initial = match fixpoint::load_jacobi(&cache_path) {
        Ok((jac, meta)) if meta.n >= n => Some(jac),
        _ => None,
    };
    let (jac, report) = fixpoint::fixpoint_solve(&cfg, initial.as_ref())?;
    write_cache(&cache_path, &jac, n, &report, eps)?;
    let (_, meta) = fixpoint::load_jacobi(&cache_path)?;

    let mut provenance = cache_provenance(&cache_path, &meta)?;
    provenance.push(("n".into(), n.to_string()));
    provenance.push(("eps".into(), format!("{eps:e}")));
    provenance.push(("route".into(), format!("{:?}", cfg.route)));
    provenance.push(("iterations".into(), report.iterations.to_string()));
    provenance.push(("converged".into(), report.converged.to_string()));
    match format {
        FormatArg::Tsv => {
            // geometric subset of coefficient traces
            let mut trace_js = Vec::new();
            let mut j = 1;
            while j <= n {
                trace_js.push(j);
                j *= 2;
            }
            if *trace_js.last().unwrap_or(&0) != n {
                trace_js.push(n);
            }
            let mut columns = vec!["iteration".to_string(), "n_eps".into(), "l1".into()];
            columns.extend(trace_js.iter().map(|j| format!("delta_a{j}")));
            let column_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
            let mut rep = Report::tsv("jacobi", &provenance, &column_refs);
            for (it, deltas) in report.deltas.iter().enumerate() {
                let mut cells = vec![
                    (it + 1).to_string(),
                    report.n_eps_history[it].to_string(),
                    fmt_f64(report.l1_history[it]),
                ];
                for &j in &trace_js {
                    cells.push(fmt_f64(deltas.get(j - 1).copied().unwrap_or(f64::NAN)));
                }
                rep.row(&cells);
            }
            rep.emit(out)?;
        }
        FormatArg::Json => {
            let value = serde_json::json!({
                "command": "jacobi",
                "version": VERSION,
                "n": n,
                "eps": eps,
                "route": format!("{:?}", cfg.route),
                "iterations": report.iterations,
                "converged": report.converged,
                "n_eps_history": report.n_eps_history,
                "l1_history": report.l1_history,
                "a_head": jac.off().iter().take(8).copied().collect::<Vec<f64>>(),
            });
            Report::json(&value).emit(out)?;
        }
    }
    if !report.converged {
        return Err(CliError::Partial(format!(
            "stopped after {} iterations with converged rank {} < {}",
            report.iterations,
            report.n_eps_history.last().copied().unwrap_or(0),
            n
        )));
    }
    Ok(())
}

enum Point {
    /// Exact rational input `p/q`: evaluated exactly.
    Rational(BigRational),
    /// Decimal input: evaluated through the truncated-series double path.
    Double(f64),
}

fn parse_point(text: &str) -> Result<Point, CliError> {
    let bad = |m: String| CliError::Io(m);
    if let Some((p, q)) = text.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| bad(format!("bad numerator in {text:?}")))?;
        let q: i64 = q.trim().parse().map_err(|_| bad(format!("bad denominator in {text:?}")))?;
        if q == 0 {
            return Err(bad("zero denominator".into()));
        }
        Ok(Point::Rational(BigRational::new(p.into(), q.into())))
    } else {
        let x: f64 = text.trim().parse().map_err(|_| bad(format!("bad point {text:?}")))?;
        Ok(Point::Double(x))
    }
}

fn cmd_q(
    x: Option<String>,
    graph: Option<u32>,
    out: Option<&Path>,
    format: FormatArg,
) -> Result<(), CliError> {
    if let Some(level) = graph {
        let points = measure::q_graph_approx(level).map_err(|e| CliError::Io(e.to_string()))?;
        let provenance = vec![("level".into(), level.to_string())];
        match format {
            FormatArg::Tsv => {
                let mut rep = Report::tsv(
                    "q-graph",
                    &provenance,
                    &["x_rational", "y_rational", "x", "y"],
                );
                use num::ToPrimitive;
                for (x, y) in &points {
                    rep.row(&[
                        x.to_string(),
                        y.to_string(),
                        fmt_f64(x.to_f64().unwrap()),
                        fmt_f64(y.to_f64().unwrap()),
                    ]);
                }
                rep.emit(out)
            }
            FormatArg::Json => {
                use num::ToPrimitive;
                let value = serde_json::json!({
                    "command": "q-graph",
                    "version": VERSION,
                    "level": level,
                    "points": points
                        .iter()
                        .map(|(x, y)| serde_json::json!([x.to_f64().unwrap(), y.to_f64().unwrap()]))
                        .collect::<Vec<_>>(),
                });
                Report::json(&value).emit(out)
            }
        }
    } else {
        let text = x.ok_or_else(|| CliError::Io("q needs --x or --graph".into()))?;
        let (exact, value_f64) = match parse_point(&text)? {
            Point::Rational(r) => {
                let q = measure::minkowski_q_exact(&r).map_err(|e| CliError::Io(e.to_string()))?;
                use num::ToPrimitive;
                let f = q.to_f64().unwrap();
                (Some(q.to_string()), f)
            }
            Point::Double(x) => {
                (None, measure::minkowski_q(x).map_err(|e| CliError::Io(e.to_string()))?)
            }
        };
        match format {
            FormatArg::Tsv => {
                let mut rep = Report::tsv("q", &[("x".into(), text.clone())], &["x", "q", "q_exact"]);
                rep.row(&[text, fmt_f64(value_f64), exact.unwrap_or_else(|| "-".into())]);
                rep.emit(out)
            }
            FormatArg::Json => {
                let value = serde_json::json!({
                    "command": "q",
                    "version": VERSION,
                    "x": text,
                    "q": value_f64,
                    "q_exact": exact,
                });
                Report::json(&value).emit(out)
            }
        }
    }
}

fn cmd_zeros(
    jac: &JacobiMatrix,
    meta: &CacheMeta,
    cache_path: &Path,
    j: usize,
    out: Option<&Path>,
    format: FormatArg,
) -> Result<(), CliError> {
    let rep = analysis::zero_comparison(jac, j).map_err(|e| CliError::Io(e.to_string()))?;
    let mut provenance = cache_provenance(cache_path, meta)?;
    provenance.push(("j".into(), j.to_string()));
    let symmetric = (0..j)
        .all(|l| (rep.zeros[l] + rep.zeros[j - 1 - l] - 1.0).abs() <= 1e-10);
    match format {
        FormatArg::Tsv => {
            provenance.push(("max_zero_gap".into(), fmt_f64(rep.max_zero_gap)));
            provenance.push(("max_angle_gap".into(), fmt_f64(rep.max_angle_gap)));
            let mut r = Report::tsv("zeros", &provenance, &["l", "zeta", "theta", "psi", "phi"]);
            for l in 0..j {
                r.row(&[
                    (l + 1).to_string(),
                    fmt_f64(rep.zeros[l]),
                    fmt_f64(rep.chebyshev[l]),
                    fmt_f64(rep.angles[l]),
                    fmt_f64(rep.chebyshev_angles[l]),
                ]);
            }
            r.emit(out)
        }
        FormatArg::Json => {
            let value = serde_json::json!({
                "command": "zeros",
                "version": VERSION,
                "j": j,
                "max_zero_gap": rep.max_zero_gap,
                "max_angle_gap": rep.max_angle_gap,
                "checks": {
                    "zeros_in_unit_interval": rep.zeros.iter().all(|&z| (-1e-12..=1.0 + 1e-12).contains(&z)),
                    "zeros_symmetric_1e10": symmetric,
                },
            });
            Report::json(&value).emit(out)
        }
    }
}

fn cmd_discrepancy(
    jac: &JacobiMatrix,
    meta: &CacheMeta,
    cache_path: &Path,
    j: usize,
    out: Option<&Path>,
    format: FormatArg,
) -> Result<(), CliError> {
    let rep = analysis::zero_comparison(jac, j).map_err(|e| CliError::Io(e.to_string()))?;
    let d = analysis::discrepancy(&rep.angles).map_err(|e| CliError::Io(e.to_string()))?;
    let mut provenance = cache_provenance(cache_path, meta)?;
    provenance.push(("j".into(), j.to_string()));
    let lower = 1.0 / j as f64;
    match format {
        FormatArg::Tsv => {
            let mut r = Report::tsv(
                "discrepancy",
                &provenance,
                &["j", "d", "d1", "d2", "d3", "lower_bound"],
            );
            r.row(&[
                j.to_string(),
                fmt_f64(d.d),
                fmt_f64(d.d1),
                fmt_f64(d.d2),
                fmt_f64(d.d3),
                fmt_f64(lower),
            ]);
            r.emit(out)
        }
        FormatArg::Json => {
            let value = serde_json::json!({
                "command": "discrepancy",
                "version": VERSION,
                "j": j,
                "d": d.d,
                "d1": d.d1,
                "d2": d.d2,
                "d3": d.d3,
                "checks": { "d_above_1_over_j": d.d >= lower - 1e-12 },
            });
            Report::json(&value).emit(out)
        }
    }
}

fn parse_grid(grid: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = grid.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Io(format!("grid {grid:?} is not start:stop:step")));
    }
    let start: f64 = parts[0].parse().map_err(|_| CliError::Io("bad grid start".into()))?;
    let stop: f64 = parts[1].parse().map_err(|_| CliError::Io("bad grid stop".into()))?;
    let step: f64 = parts[2].parse().map_err(|_| CliError::Io("bad grid step".into()))?;
    if !(step > 0.0) || stop < start {
        return Err(CliError::Io("grid needs stop >= start and step > 0".into()));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 10_000_000 {
        return Err(CliError::Io(format!("grid with {count} points refused")));
    }
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

#[allow(clippy::too_many_arguments)]
fn cmd_christoffel(
    jac: &JacobiMatrix,
    meta: &CacheMeta,
    cache_path: &Path,
    grid: &str,
    j: usize,
    q: Option<u32>,
    out: Option<&Path>,
    format: FormatArg,
) -> Result<(), CliError> {
    let xs = parse_grid(grid)?;
    let values =
        quadrature::christoffel_grid(jac, j, &xs).map_err(|e| CliError::Io(e.to_string()))?;
    let overlay: Vec<f64> = match q {
        Some(q) => xs
            .iter()
            .map(|&x| {
                let y = x - 1.0 / f64::from(q);
                if y > 0.0 && y < 0.5 {
                    asymptotics::lambda_asymptotic(q, y, j)
                        .map(|a| -a.total / std::f64::consts::LN_10)
                        .unwrap_or(f64::NAN)
                } else {
                    f64::NAN
                }
            })
            .collect(),
        None => Vec::new(),
    };
    let mut provenance = cache_provenance(cache_path, meta)?;
    provenance.push(("j".into(), j.to_string()));
    provenance.push(("grid".into(), grid.to_string()));
    if let Some(q) = q {
        provenance.push(("q".into(), q.to_string()));
    }
    match format {
        FormatArg::Tsv => {
            let columns: &[&str] = if q.is_some() {
                &["x", "log10_inv_lambda", "log10_inv_lambda_asym"]
            } else {
                &["x", "log10_inv_lambda"]
            };
            let mut r = Report::tsv("christoffel", &provenance, columns);
            for (i, (x, v)) in values.iter().enumerate() {
                let mut cells = vec![fmt_f64(*x), fmt_f64(*v)];
                if q.is_some() {
                    cells.push(fmt_f64(overlay[i]));
                }
                r.row(&cells);
            }
            r.emit(out)
        }
        FormatArg::Json => {
            let value = serde_json::json!({
                "command": "christoffel",
                "version": VERSION,
                "j": j,
                "grid": grid,
                "points": values.len(),
                "max_log10_inv_lambda": values.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max),
            });
            Report::json(&value).emit(out)
        }
    }
}

fn cmd_hausdorff(
    jac: &JacobiMatrix,
    meta: &CacheMeta,
    cache_path: &Path,
    max_order: usize,
    out: Option<&Path>,
    format: FormatArg,
) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for j in 2..=max_order.max(2) {
        rows.push(quadrature::hausdorff_bounds(jac, j).map_err(|e| CliError::Io(e.to_string()))?);
    }
    let mut provenance = cache_provenance(cache_path, meta)?;
    provenance.push(("max-order".into(), max_order.to_string()));
    let all_contain = rows
        .iter()
        .all(|r| r.dim_lower <= REFERENCE_DIMENSION && REFERENCE_DIMENSION <= r.dim_upper);
    match format {
        FormatArg::Tsv => {
            let mut r = Report::tsv(
                "hausdorff",
                &provenance,
                &["j", "dim_upper", "dim_lower", "gap"],
            );
            for row in &rows {
                r.row(&[
                    row.order.to_string(),
                    fmt_f64(row.dim_upper),
                    fmt_f64(row.dim_lower),
                    fmt_f64(row.gap),
                ]);
            }
            r.emit(out)
        }
        FormatArg::Json => {
            let value = serde_json::json!({
                "command": "hausdorff",
                "version": VERSION,
                "rows": rows,
                "reference": REFERENCE_DIMENSION,
                "checks": { "all_brackets_contain_reference": all_contain },
            });
            Report::json(&value).emit(out)
        }
    }
}

fn probe_orders(j: usize) -> Vec<usize> {
    let mut probes: Vec<usize> = [16usize, 8, 4, 2, 1].iter().map(|d| j / d).collect();
    probes.retain(|&p| p >= 2);
    probes.dedup();
    probes
}

fn cmd_nevai(
    jac: &JacobiMatrix,
    meta: &CacheMeta,
    cache_path: &Path,
    j: usize,
    out: Option<&Path>,
    format: FormatArg,
) -> Result<(), CliError> {
    let probes = probe_orders(j);
    let diag =
        analysis::nevai_diagnostics(jac, &probes).map_err(|e| CliError::Io(e.to_string()))?;
    let mut provenance = cache_provenance(cache_path, meta)?;
    provenance.push(("j".into(), j.to_string()));
    provenance.push((
        "probes".into(),
        probes.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(","),
    ));
    match format {
        FormatArg::Tsv => {
            let mut r = Report::tsv(
                "nevai",
                &provenance,
                &["j", "a", "abs_gap", "envelope", "sigma1", "sigma2", "sigma3"],
            );
            for idx in 1..=j {
                r.row(&[
                    idx.to_string(),
                    fmt_f64(jac.a(idx)),
                    fmt_f64((jac.a(idx) - 0.25).abs()),
                    fmt_f64(diag.envelope[idx - 1]),
                    fmt_f64(diag.sigma1[idx - 1]),
                    fmt_f64(diag.sigma2[idx - 1]),
                    fmt_f64(diag.sigma3[idx - 1]),
                ]);
            }
            r.emit(out)
        }
        FormatArg::Json => {
            let hutch: Vec<f64> = diag.rows.iter().map(|r| r.hutchinson).collect();
            let value = serde_json::json!({
                "command": "nevai",
                "version": VERSION,
                "j": j,
                "rows": diag.rows,
                "checks": {
                    "envelope_non_increasing": diag.envelope.windows(2).all(|w| w[0] >= w[1]),
                    "hutchinson_decreasing": hutch.windows(2).all(|w| w[0] > w[1]),
                    "weight_sums_unit": diag.rows.iter().all(|r| (r.weight_sum - 1.0).abs() <= 1e-10),
                },
            });
            Report::json(&value).emit(out)
        }
    }
}

fn cmd_regularity(
    jac: &JacobiMatrix,
    meta: &CacheMeta,
    cache_path: &Path,
    j: usize,
    out: Option<&Path>,
    format: FormatArg,
) -> Result<(), CliError> {
    let rep = analysis::regularity_report(jac, j).map_err(|e| CliError::Io(e.to_string()))?;
    let mut provenance = cache_provenance(cache_path, meta)?;
    provenance.push(("j".into(), j.to_string()));
    if let Some(fit) = &rep.fit {
        provenance.push(("fit_amplitude".into(), fmt_f64(fit.amplitude)));
        provenance.push(("fit_exponent".into(), fmt_f64(fit.exponent)));
        provenance.push(("fit_residual".into(), fmt_f64(fit.residual)));
    }
    match format {
        FormatArg::Tsv => {
            let mut r = Report::tsv("regularity", &provenance, &["j", "gamma", "delta", "sigma3"]);
            for idx in 1..=j {
                r.row(&[
                    idx.to_string(),
                    fmt_f64(rep.gamma[idx - 1]),
                    fmt_f64(rep.delta[idx - 1]),
                    fmt_f64(rep.sigma3[idx - 1]),
                ]);
            }
            r.emit(out)
        }
        FormatArg::Json => {
            let value = serde_json::json!({
                "command": "regularity",
                "version": VERSION,
                "j": j,
                "fit": rep.fit,
                "capacity": rep.capacity,
                "checks": {
                    "delta_positive": rep.delta.iter().all(|&d| d > 0.0),
                    "gamma_below_capacity": rep.gamma.iter().all(|&g| g < 0.25),
                },
            });
            Report::json(&value).emit(out)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_asymptotics(
    jac: &JacobiMatrix,
    meta: &CacheMeta,
    cache_path: &Path,
    q: u32,
    k_max: u32,
    j: usize,
    out: Option<&Path>,
    format: FormatArg,
) -> Result<(), CliError> {
    let rule = quadrature::gauss_rule(jac, j).map_err(|e| CliError::Io(e.to_string()))?;
    let rows = asymptotics::cusp_validation(&rule, q, 0..=k_max)
        .map_err(|e| CliError::Io(e.to_string()))?;
    let mut provenance = cache_provenance(cache_path, meta)?;
    provenance.push(("q".into(), q.to_string()));
    provenance.push(("k".into(), k_max.to_string()));
    provenance.push(("j".into(), j.to_string()));
    provenance.push(("slack".into(), fmt_f64(asymptotics::CUSP_SLACK)));
    let opt = |v: Option<f64>| v.map_or("nan".to_string(), fmt_f64);
    match format {
        FormatArg::Tsv => {
            let mut r = Report::tsv(
                "asymptotics",
                &provenance,
                &[
                    "q",
                    "k",
                    "left",
                    "right",
                    "nodes",
                    "observed_neg_log_w",
                    "bound_lower",
                    "bound_upper",
                    "neg_lambda",
                    "within_slack",
                    "rel_deviation",
                ],
            );
            for row in &rows {
                r.row(&[
                    row.q.to_string(),
                    row.k.to_string(),
                    fmt_f64(row.interval.0),
                    fmt_f64(row.interval.1),
                    row.node_count.to_string(),
                    opt(row.observed_neg_log_w),
                    opt(row.bound_lower),
                    opt(row.bound_upper),
                    fmt_f64(row.neg_lambda_total),
                    row.within_slack.map_or("nan".to_string(), |b| b.to_string()),
                    opt(row.relative_deviation),
                ]);
            }
            r.emit(out)
        }
        FormatArg::Json => {
            let value = serde_json::json!({
                "command": "asymptotics",
                "version": VERSION,
                "q": q, "k": k_max, "j": j,
                "slack": asymptotics::CUSP_SLACK,
                "rows": rows,
                "checks": {
                    "all_within_slack": rows.iter().all(|r| r.within_slack.unwrap_or(false)),
                    "max_rel_deviation": rows
                        .iter()
                        .filter_map(|r| r.relative_deviation)
                        .fold(0.0f64, f64::max),
                },
            });
            Report::json(&value).emit(out)
        }
    }
}
