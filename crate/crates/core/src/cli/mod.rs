//! Command-line surface.
//!
//! Exit codes: 0 success, 1 usage or budget, 2 numerical failure,
//! 3 validation failure. `RAYON_NUM_THREADS` sets the worker count; it never
//! changes results.

pub mod suite;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;
use serde::Serialize;

use crate::curve::{DistributionCurve, Format, GridSpec};
use crate::error::{invalid, Error, Result};
use crate::limitshape::{cap0_hit_probability, h_growth_diagnostic, q_probability_with, AnnulusCount, InballCondition};
use crate::moments::{approx_typical_cdf, approx_typical_moment, approx_typical_variance, rho};
use crate::simulate::{sample_typical_distance, EmpiricalCdf};
use crate::typical1d::{typical1d_cdf, typical1d_moment};
use crate::typicalexact::{default_ell, typical_cdf_exact_curve, McBudget};
use crate::zerocell::{contact_cdf, ModelParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

/// Absolute tolerance for every `ρ_d` the CLI computes.
pub const RHO_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(
    name = "pv-distance",
    version,
    about = "Distance from the nucleus to a uniform point of a Poisson-Voronoi cell"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// CDF of the distance in the 0-cell (the contact-distance law).
    ContactCdf {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// CDF of the distance in the typical cell.
    TypicalCdf {
        #[arg(long, value_enum, default_value_t = Method::Approx)]
        method: Method,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Exact and approximate means and variances for a range of dimensions.
    MomentTable {
        /// Comma-separated dimensions in 1..=10.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Typical cells simulated per dimension for the exact columns (d >= 2).
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_parser = parse_format, default_value = "csv")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance checks and report pass/fail per criterion.
    Validate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Comma-separated criterion numbers; all when omitted.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
        /// Override the KS bound (negative control).
        #[arg(long)]
        ks_tol: Option<f64>,
        #[arg(long, value_parser = parse_format, default_value = "csv")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Probability that the inradius-conditioned cell lies inside B_{R+eps}, on an R grid.
    LimitShape {
        #[arg(long, default_value_t = 2)]
        d: usize,
        /// Intensity; 0 gives the probability of the inradius cap alone.
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = CountArg::Annulus)]
        count: CountArg,
        /// Geometric spacing for the R grid.
        #[arg(long)]
        log: bool,
        #[arg(long, value_parser = parse_grid, default_value = "1:1000:4")]
        grid: GridSpec,
        #[arg(long, value_parser = parse_format, default_value = "csv")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Exact,
    Approx,
    Simulate,
    D1Closed,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Approx => "approx",
            Method::Simulate => "simulate",
            Method::D1Closed => "d1-closed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CountArg {
    /// Midpoints of the PPP points in the annulus A(2R, 2eps).
    Annulus,
    /// PPP points of A(R, eps) itself.
    Midpoint,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
}

impl ModelArgs {
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.d, self.lambda)
    }
}

#[derive(Debug, Clone, Args)]
pub struct BudgetArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Outer configurations (exact) or simulated cells (simulate).
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Probe points per configuration (exact).
    #[arg(long, default_value_t = 500)]
    pub inner_samples: usize,
    /// Conditioning radius; defaults to the 0.99-quantile of the farthest boundary distance.
    #[arg(long)]
    pub ell: Option<f64>,
    /// Largest configuration size; chosen from --tail-tol when omitted.
    #[arg(long)]
    pub kmax: Option<usize>,
    #[arg(long, default_value_t = 1e-6)]
    pub tail_tol: f64,
}

impl BudgetArgs {
    pub fn budget(&self) -> McBudget {
        McBudget {
            outer_configs: self.samples,
            inner_points: self.inner_samples,
            k_max: self.kmax,
            seed: self.seed,
            tail_tol: self.tail_tol,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// min:max:steps
    #[arg(long, value_parser = parse_grid, default_value = "0:2:201")]
    pub grid: GridSpec,
    #[arg(long, value_parser = parse_format, default_value = "csv")]
    pub format: Format,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_grid(s: &str) -> std::result::Result<GridSpec, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn check_grid_nonnegative(g: &GridSpec) -> Result<()> {
    if g.min < 0.0 {
        return invalid("distance grid must start at r >= 0");
    }
    Ok(())
}

fn base_curve(command: &str, method: &str, m: &ModelParams, r: Vec<f64>, value: Vec<f64>) -> Result<DistributionCurve> {
    Ok(DistributionCurve::new(method, r, value)?
        .with("command", command)
        .with("d", m.d)
        .with("lambda", m.lambda))
}

pub fn cmd_contact_cdf(m: &ModelParams, grid: &GridSpec) -> Result<DistributionCurve> {
    check_grid_nonnegative(grid)?;
    let r = grid.points();
    let v = r.iter().map(|&x| contact_cdf(x, m)).collect::<Result<Vec<_>>>()?;
    base_curve("contact-cdf", "contact", m, r, v)
}

pub fn cmd_typical_cdf(method: Method, m: &ModelParams, b: &BudgetArgs, grid: &GridSpec) -> Result<DistributionCurve> {
    check_grid_nonnegative(grid)?;
    let r = grid.points();
    let method = if method == Method::Exact && m.d == 1 {
        warn!("exact method for d = 1 delegates to the closed form");
        Method::D1Closed
    } else {
        method
    };
    let curve = match method {
        Method::D1Closed => {
            if m.d != 1 {
                return invalid(format!("d1-closed needs d = 1, got d = {}", m.d));
            }
            let v = r
                .iter()
                .map(|&x| typical1d_cdf(x, m.lambda))
                .collect::<Result<Vec<_>>>()?;
            base_curve("typical-cdf", method.name(), m, r, v)?.with("mean", typical1d_moment(1, m.lambda)?)
        }
        Method::Approx => {
            let rho_val = rho(m, RHO_TOL)?;
            let v = r
                .iter()
                .map(|&x| approx_typical_cdf(x, m, rho_val))
                .collect::<Result<Vec<_>>>()?;
            base_curve("typical-cdf", method.name(), m, r, v)?
                .with("rho", rho_val)
                .with("rho_tol", RHO_TOL)
                .with("mean", approx_typical_moment(1, m, rho_val)?)
                .with("variance", approx_typical_variance(m, rho_val)?)
        }
        Method::Simulate => {
            let e = EmpiricalCdf::new(sample_typical_distance(m, b.samples, b.seed)?)?;
            let v = r.iter().map(|&x| e.eval(x)).collect();
            base_curve("typical-cdf", method.name(), m, r, v)?
                .with("seed", b.seed)
                .with("samples", b.samples)
                .with("mean", e.mean())
                .with("variance", e.variance())
        }
        Method::Exact => {
            let (ell, source) = match b.ell {
                Some(ell) => (ell, "flag".to_string()),
                None => {
                    let c = default_ell(m, 2000, b.seed)?;
                    (c.ell, c.source)
                }
            };
            let budget = b.budget();
            let inside: Vec<f64> = r.iter().copied().filter(|&x| x <= ell).collect();
            let c = typical_cdf_exact_curve(&inside, m, ell, &budget)?;
            // the conditioned cell lies in B_ℓ, so F = 1 beyond ℓ
            let mut v = c.cdf.clone();
            v.resize(r.len(), 1.0);
            base_curve("typical-cdf", method.name(), m, r, v)?
                .with("seed", b.seed)
                .with("samples", b.samples)
                .with("inner_samples", b.inner_samples)
                .with("ell", ell)
                .with("ell_source", source)
                .with("k_max", c.k_max)
                .with("tail_tol", b.tail_tol)
                .with("tail_mass", c.tail_mass)
                .with("max_std_error", c.std_error.iter().cloned().fold(0.0, f64::max))
                .with("mean", c.mean)
                .with("mean_std_error", c.mean_std_error)
        }
    };
    Ok(curve)
}

/// One row of the exact/approximate moment table.
#[derive(Debug, Clone, Serialize)]
pub struct MomentTableRow {
    pub d: usize,
    pub rho: f64,
    pub mean_exact: f64,
    pub mean_approx: f64,
    pub var_exact: f64,
    pub var_approx: f64,
    pub exact_source: String,
}

/// Target standard error of each simulated exact mean in the table.
pub const MOMENT_TABLE_MEAN_SE: f64 = 0.0025;

/// Simulated cells needed for [`MOMENT_TABLE_MEAN_SE`], from the approximate variance.
pub fn moment_table_required_samples(m: &ModelParams, rho_val: f64) -> Result<usize> {
    let var = approx_typical_variance(m, rho_val)?;
    Ok((var / (MOMENT_TABLE_MEAN_SE * MOMENT_TABLE_MEAN_SE)).ceil() as usize)
}

pub fn cmd_moment_table(dims: &[usize], lambda: f64, samples: usize, seed: u64) -> Result<Vec<MomentTableRow>> {
    if dims.is_empty() || dims.iter().any(|d| !(1..=10).contains(d)) {
        return invalid("dimensions must lie in 1..=10");
    }
    let mut rows = Vec::with_capacity(dims.len());
    let rhos = dims
        .iter()
        .map(|&d| rho(&ModelParams::new(d, lambda)?, RHO_TOL))
        .collect::<Result<Vec<_>>>()?;
    for (&d, &rho_val) in dims.iter().zip(&rhos) {
        let m = ModelParams::new(d, lambda)?;
        if d >= 2 {
            let need = moment_table_required_samples(&m, rho_val)?;
            if samples < need {
                return Err(Error::Budget(format!(
                    "d = {d} needs at least {need} simulated cells for a mean standard error of {MOMENT_TABLE_MEAN_SE}; got {samples}"
                )));
            }
        }
    }
    for (&d, &rho_val) in dims.iter().zip(&rhos) {
        let m = ModelParams::new(d, lambda)?;
        let (mean_exact, var_exact, exact_source) = if d == 1 {
            let m1 = typical1d_moment(1, lambda)?;
            (m1, typical1d_moment(2, lambda)? - m1 * m1, "closed form".to_string())
        } else {
            let e = EmpiricalCdf::new(sample_typical_distance(&m, samples, seed)?)?;
            (e.mean(), e.variance(), format!("simulation, n = {samples}"))
        };
        rows.push(MomentTableRow {
            d,
            rho: rho_val,
            mean_exact,
            mean_approx: approx_typical_moment(1, &m, rho_val)?,
            var_exact,
            var_approx: approx_typical_variance(&m, rho_val)?,
            exact_source,
        });
    }
    Ok(rows)
}

fn moment_table_csv(rows: &[MomentTableRow]) -> String {
    use crate::curve::fmt_sig12 as f;
    let mut s = String::from("d,rho,mean_exact,mean_approx,var_exact,var_approx,exact_source\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.d,
            f(r.rho),
            f(r.mean_exact),
            f(r.mean_approx),
            f(r.var_exact),
            f(r.var_approx),
            r.exact_source
        ));
    }
    s
}

pub fn cmd_limit_shape(
    d: usize,
    lambda: f64,
    eps: f64,
    count: AnnulusCount,
    grid: &[f64],
) -> Result<DistributionCurve> {
    if grid.first().is_some_and(|&r| r <= 0.0) {
        return invalid("inradius grid must be positive");
    }
    let q = grid
        .iter()
        .map(|&r| {
            let c = InballCondition::new(r, eps, d, lambda)?;
            if lambda == 0.0 {
                cap0_hit_probability(&c)
            } else {
                q_probability_with(&c, count)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let count_name = match count {
        AnnulusCount::Annulus => "annulus",
        AnnulusCount::MidpointAnnulus => "midpoint",
    };
    let mut c = DistributionCurve::new("limit-shape", grid.to_vec(), q)?
        .with("command", "limit-shape")
        .with("d", d)
        .with("lambda", lambda)
        .with("eps", eps)
        .with("count", count_name);
    let span = grid.last().unwrap_or(&1.0) / grid.first().unwrap_or(&1.0);
    if d >= 2 && grid.len() >= 2 && span >= 100.0 {
        let g = h_growth_diagnostic(d, eps, grid)?;
        c = c.with("h_slope", g.slope);
    } else {
        c = c.with("h_slope", "n/a (grid spans under two decades)");
    }
    Ok(c)
}

fn log_points(g: &GridSpec) -> Result<Vec<f64>> {
    if g.min <= 0.0 {
        return invalid("log grid needs min > 0");
    }
    let (a, b) = (g.min.ln(), g.max.ln());
    let n = g.steps - 1;
    Ok((0..=n)
        .map(|i| {
            if i == n {
                g.max
            } else if i == 0 {
                g.min
            } else {
                (a + (b - a) * i as f64 / n as f64).exp()
            }
        })
        .collect())
}

fn emit_curve(c: &DistributionCurve, format: Format, out: &Option<PathBuf>, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            c.write(format, &mut w)?;
            w.flush()?;
        }
        None => c.write(format, &mut *stdout)?,
    }
    Ok(())
}

fn emit_text(text: &str, out: &Option<PathBuf>, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) | Error::Budget(_) => EXIT_USAGE,
        _ => EXIT_NUMERIC,
    }
}

fn execute(cmd: Command, stdout: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::ContactCdf { model, output } => {
            let c = cmd_contact_cdf(&model.params()?, &output.grid)?;
            emit_curve(&c, output.format, &output.out, stdout)?;
        }
        Command::TypicalCdf {
            method,
            model,
            budget,
            output,
        } => {
            let c = cmd_typical_cdf(method, &model.params()?, &budget, &output.grid)?;
            emit_curve(&c, output.format, &output.out, stdout)?;
        }
        Command::MomentTable {
            dims,
            lambda,
            samples,
            seed,
            format,
            out,
        } => {
            let rows = cmd_moment_table(&dims, lambda, samples, seed)?;
            let text = match format {
                Format::Csv => moment_table_csv(&rows),
                Format::Json => serde_json::to_string_pretty(&rows)? + "\n",
            };
            emit_text(&text, &out, stdout)?;
        }
        Command::Validate {
            seed,
            only,
            ks_tol,
            format,
            out,
        } => {
            let mut cfg = suite::SuiteConfig {
                seed,
                ..Default::default()
            };
            if let Some(t) = ks_tol {
                cfg.ks_tol = t;
            }
            let ids = if only.is_empty() { suite::ALL.to_vec() } else { only };
            let mut s = suite::Suite::new(cfg);
            let mut results = Vec::new();
            for id in ids {
                let r = s.run(id)?;
                if format == Format::Csv && out.is_none() {
                    writeln!(stdout, "{}", r.line())?;
                    stdout.flush()?;
                }
                results.push(r);
            }
            let text = match format {
                Format::Csv => results.iter().map(|r| r.line() + "\n").collect::<String>(),
                Format::Json => serde_json::to_string_pretty(&results)? + "\n",
            };
            if !(format == Format::Csv && out.is_none()) {
                emit_text(&text, &out, stdout)?;
            }
            if results.iter().any(|r| !r.passed()) {
                return Ok(EXIT_VALIDATION);
            }
        }
        Command::LimitShape {
            d,
            lambda,
            eps,
            count,
            log,
            grid,
            format,
            out,
        } => {
            let pts = if log { log_points(&grid)? } else { grid.points() };
            let count = match count {
                CountArg::Annulus => AnnulusCount::Annulus,
                CountArg::Midpoint => AnnulusCount::MidpointAnnulus,
            };
            let c = cmd_limit_shape(d, lambda, eps, count, &pts)?;
            emit_curve(&c, format, &out, stdout)?;
        }
    }
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{text}");
            } else {
                let _ = write!(stdout, "{text}");
            }
            return code;
        }
    };
    match execute(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}
