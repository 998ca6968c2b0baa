//! Command-line front end.
//!
//! Five subcommands: `support` locates the convolution's interval and edge
//! data, `density` tabulates rho and its distribution function on a grid,
//! `subordinate` solves the fixed-point system at a single half-plane point,
//! `validate` runs the closed-form regression suite, and `rmt-check`
//! compares the engine's distribution function against sampled random-matrix
//! spectra.
//!
//! Measures are passed as `--a` / `--b` in any of three forms: a shorthand
//! such as `semicircle:1`, `arcsine:1.5`, `mp:0.25` or
//! `jacobi:-1,1,-0.5,0.5`, an inline JSON object starting with `{`, or a
//! path to a JSON file.
//!
//! Exit codes: 0 on success, 1 when `validate` or `rmt-check` measure an
//! error above its budget, 2 for argument and measure-spec problems, 3 for
//! numerical failures such as a solve that did not converge. All numbers are
//! printed with 17 significant digits, and a fixed configuration (including
//! the seed) reproduces byte-identical output. The environment variable
//! FREECONV_THREADS caps the worker pool used for sampling.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use crate::density::{density_grid, DensityGrid};
use crate::error::{Error, Result};
use crate::measure::{JacobiMeasure, MeasureSpec};
use crate::oracles::{distance_ks, rmt_sample, ClosedFormFamily};
use crate::subordination::solve_point;
use crate::support::find_support;

pub const EXIT_OK: i32 = 0;
/// A validation or Monte Carlo check exceeded its declared budget.
pub const EXIT_TOLERANCE: i32 = 1;
/// Arguments or measure specifications failed to parse or validate.
pub const EXIT_SPEC: i32 = 2;
/// A solver or bracketing stage failed.
pub const EXIT_NUMERICS: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "freeconv",
    version,
    about = "Free additive convolution of Jacobi-type measures"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Locate the support [E-, E+] and the square-root edge data
    Support(SupportArgs),
    /// Tabulate density, cdf and moments on a grid over the support
    Density(DensityArgs),
    /// Solve the subordination system at one upper half-plane point
    Subordinate(SubordinateArgs),
    /// Run the closed-form regression suite and print a pass/fail table
    Validate(ValidateArgs),
    /// Compare the engine cdf against sampled random-matrix spectra
    RmtCheck(RmtArgs),
}

/// The two input measures, shared by every subcommand that convolves.
#[derive(Debug, Args)]
pub struct MeasurePair {
    /// First measure: shorthand, inline JSON, or a JSON file path
    #[arg(long = "a", value_name = "MEASURE")]
    pub a: String,

    /// Second measure, same forms as --a
    #[arg(long = "b", value_name = "MEASURE")]
    pub b: String,
}

#[derive(Debug, Args)]
pub struct SupportArgs {
    #[command(flatten)]
    pub measures: MeasurePair,

    /// Residual tolerance of the subordination and edge solves
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,

    /// Also write the JSON to this file
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub measures: MeasurePair,

    /// Number of grid points across the support (at least 16)
    #[arg(long = "grid-n", default_value_t = 513)]
    pub grid_n: usize,

    /// Spectral offset at which boundary values are read off
    #[arg(long = "eta-min", default_value_t = 1e-8)]
    pub eta_min: f64,

    /// Residual tolerance of the subordination solves
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,

    /// Write the CSV here (plus a .json summary sidecar) instead of stdout
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SubordinateArgs {
    #[command(flatten)]
    pub measures: MeasurePair,

    /// Evaluation point as RE,IM with IM > 0
    #[arg(long, value_name = "RE,IM", allow_hyphen_values = true)]
    pub z: String,

    /// Residual tolerance of the fixed-point solve
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,

    /// Also write the JSON to this file
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {}

#[derive(Debug, Args)]
pub struct RmtArgs {
    #[command(flatten)]
    pub measures: MeasurePair,

    /// Matrix dimension of each sample
    #[arg(long = "n-matrix", value_name = "N")]
    pub n_matrix: usize,

    /// Number of independent Haar draws to pool
    #[arg(long = "n-samples", value_name = "S")]
    pub n_samples: usize,

    /// Seed of the sample stream
    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Grid size for the engine cdf the spectrum is compared against
    #[arg(long = "grid-n", default_value_t = 513)]
    pub grid_n: usize,

    /// Spectral offset for the engine density grid
    #[arg(long = "eta-min", default_value_t = 1e-8)]
    pub eta_min: f64,

    /// Residual tolerance of the subordination solves
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,

    /// Largest acceptable Kolmogorov-Smirnov distance
    #[arg(long = "ks-tol", default_value_t = 5e-2)]
    pub ks_tol: f64,

    /// Write the pooled eigenvalue CSV here (plus a .json metadata sidecar)
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// Entry point for the binary: parses the process arguments, applies the
/// thread cap, and dispatches. Returns the process exit code.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse_from(std::env::args_os()) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests arrive here too; clap knows which
            // stream and status they deserve.
            let code = if e.use_stderr() { EXIT_SPEC } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match apply_thread_cap(std::env::var("FREECONV_THREADS").ok().as_deref()) {
        Ok(_) => {}
        Err(msg) => {
            eprintln!("FREECONV_THREADS: {msg}");
            return EXIT_SPEC;
        }
    }
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(cli, &mut stdout.lock(), &mut stderr.lock())
}

/// Caps the global worker pool at the given thread count. `None` leaves the
/// default. The cap can only be installed once per process; if a pool
/// already exists the existing one is kept.
pub fn apply_thread_cap(value: Option<&str>) -> std::result::Result<Option<usize>, String> {
    let Some(raw) = value else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("expected a positive integer thread count, got {raw:?}"))?;
    if n == 0 {
        return Err("thread count must be at least 1".to_string());
    }
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(Some(n))
}

/// Runs one parsed command against the given output streams and returns the
/// exit code. Split from [`main_entry`] so tests can capture the streams.
pub fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let outcome = match cli.command {
        Command::Support(args) => cmd_support(&args, stdout),
        Command::Density(args) => cmd_density(&args, stdout, stderr),
        Command::Subordinate(args) => cmd_subordinate(&args, stdout),
        Command::Validate(_) => cmd_validate(stdout),
        Command::RmtCheck(args) => cmd_rmt(&args, stdout),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            let _ = writeln!(stderr, "error: {err}");
            exit_code(&err)
        }
    }
}

/// Maps an error to the documented exit code: argument and spec problems are
/// 2, numerical failures 3.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Spec(_) | Error::Invalid(_) => EXIT_SPEC,
        Error::AtGridIndex { source, .. } => exit_code(source),
        _ => EXIT_NUMERICS,
    }
}

/// Parses a measure argument in any of the accepted forms.
///
/// Shorthands are `semicircle:t` (variance t), `arcsine:r` (radius r),
/// `mp:ratio` and `jacobi:a,b,t_minus,t_plus` (unit smooth factor). A
/// leading `{` switches to inline JSON; anything else is read as a file.
pub fn parse_measure_arg(text: &str) -> Result<MeasureSpec> {
    let trimmed = text.trim();
    if trimmed.starts_with('{') {
        return MeasureSpec::from_json(trimmed);
    }
    if let Some((head, tail)) = trimmed.split_once(':') {
        let num = |s: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|_| {
                Error::Spec(format!(
                    "expected a number in shorthand {trimmed:?}, got {s:?}"
                ))
            })
        };
        match head {
            "semicircle" => {
                return Ok(MeasureSpec::Semicircle {
                    variance: num(tail)?,
                })
            }
            "arcsine" => return Ok(MeasureSpec::Arcsine { radius: num(tail)? }),
            "mp" => return Ok(MeasureSpec::MarchenkoPastur { ratio: num(tail)? }),
            "jacobi" => {
                let parts: Vec<&str> = tail.split(',').collect();
                if parts.len() != 4 {
                    return Err(Error::Spec(format!(
                        "jacobi shorthand wants 4 comma-separated values a,b,t_minus,t_plus, \
                         got {} in {trimmed:?}",
                        parts.len()
                    )));
                }
                return Ok(MeasureSpec::Jacobi {
                    support: [num(parts[0])?, num(parts[1])?],
                    t_minus: num(parts[2])?,
                    t_plus: num(parts[3])?,
                    smooth_cheb: vec![1.0],
                });
            }
            // Not a known family; colons can legitimately appear in paths,
            // so fall through to the file branch.
            _ => {}
        }
    }
    let content = fs::read_to_string(trimmed).map_err(|e| {
        Error::Spec(format!(
            "cannot read measure file {trimmed:?}: {e} \
             (shorthand forms: semicircle:t, arcsine:r, mp:ratio, jacobi:a,b,t-,t+)"
        ))
    })?;
    MeasureSpec::from_json(&content)
}

/// Parses and builds both measures, labeling any failure with the flag it
/// came from so exit code 2 messages point at the offending argument.
fn build_pair(args: &MeasurePair) -> Result<(JacobiMeasure, JacobiMeasure)> {
    let build = |label: &str, text: &str| -> Result<JacobiMeasure> {
        let stage = |e: Error| {
            let msg = match e {
                Error::Spec(inner) => inner,
                other => other.to_string(),
            };
            Error::Spec(format!("--{label}: {msg}"))
        };
        parse_measure_arg(text).map_err(stage)?.build().map_err(stage)
    };
    Ok((build("a", &args.a)?, build("b", &args.b)?))
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Invalid(format!(
            "--{name} must be positive and finite, got {value}"
        )))
    }
}

fn parse_z(text: &str) -> Result<Complex64> {
    let bad = || Error::Spec(format!("--z wants RE,IM with IM > 0, got {text:?}"));
    let (re, im) = text.split_once(',').ok_or_else(bad)?;
    let re: f64 = re.trim().parse().map_err(|_| bad())?;
    let im: f64 = im.trim().parse().map_err(|_| bad())?;
    if !(im > 0.0 && re.is_finite() && im.is_finite()) {
        return Err(bad());
    }
    Ok(Complex64::new(re, im))
}

fn emit(out: &mut dyn Write, line: &str) -> Result<()> {
    writeln!(out, "{line}").map_err(|e| Error::Invalid(format!("cannot write output: {e}")))
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content)
        .map_err(|e| Error::Invalid(format!("cannot write {}: {e}", path.display())))
}

/// Companion JSON path for a CSV artifact: the extension is swapped for
/// `.json`, or `.summary.json` appended when that would collide.
fn sidecar_path(out: &Path) -> PathBuf {
    let candidate = out.with_extension("json");
    if candidate == out {
        out.with_extension("summary.json")
    } else {
        candidate
    }
}

fn cmd_support(args: &SupportArgs, stdout: &mut dyn Write) -> Result<i32> {
    check_positive("tol", args.tol)?;
    let (mu_a, mu_b) = build_pair(&args.measures)?;
    let support = find_support(&mu_a, &mu_b, args.tol)?;
    let json = support.to_json();
    emit(stdout, &json)?;
    if let Some(path) = &args.out {
        write_file(path, &format!("{json}\n"))?;
    }
    Ok(EXIT_OK)
}

fn cmd_density(args: &DensityArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    check_positive("tol", args.tol)?;
    let (mu_a, mu_b) = build_pair(&args.measures)?;
    let grid = density_grid(&mu_a, &mu_b, args.grid_n, args.eta_min, args.tol)?;
    let csv = grid.to_csv();
    let summary = grid.summary_json();
    match &args.out {
        Some(path) => {
            write_file(path, &csv)?;
            write_file(&sidecar_path(path), &format!("{summary}\n"))?;
        }
        None => {
            stdout
                .write_all(csv.as_bytes())
                .map_err(|e| Error::Invalid(format!("cannot write output: {e}")))?;
            // Keep stdout pure CSV; the summary goes to the other stream.
            emit(stderr, &summary)?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_subordinate(args: &SubordinateArgs, stdout: &mut dyn Write) -> Result<i32> {
    check_positive("tol", args.tol)?;
    let (mu_a, mu_b) = build_pair(&args.measures)?;
    let z = parse_z(&args.z)?;
    let point = solve_point(&mu_a, &mu_b, z, None, args.tol)?;
    let json = point.to_json();
    emit(stdout, &json)?;
    if let Some(path) = &args.out {
        write_file(path, &format!("{json}\n"))?;
    }
    Ok(EXIT_OK)
}

fn cmd_rmt(args: &RmtArgs, stdout: &mut dyn Write) -> Result<i32> {
    check_positive("tol", args.tol)?;
    check_positive("eta-min", args.eta_min)?;
    check_positive("ks-tol", args.ks_tol)?;
    let (mu_a, mu_b) = build_pair(&args.measures)?;
    let spectrum = rmt_sample(&mu_a, &mu_b, args.n_matrix, args.n_samples, args.seed)?;
    let grid = density_grid(&mu_a, &mu_b, args.grid_n, args.eta_min, args.tol)?;
    let ks = distance_ks(&spectrum, &grid);
    if let Some(path) = &args.out {
        write_file(path, &spectrum.to_csv())?;
        write_file(&sidecar_path(path), &format!("{}\n", spectrum.metadata_json()))?;
    }
    let pass = ks <= args.ks_tol;
    emit(
        stdout,
        &format!(
            "ks_distance = {:.16e} (n_matrix = {}, n_samples = {}, seed = {}, budget = {:.1e}) {}",
            ks,
            args.n_matrix,
            args.n_samples,
            args.seed,
            args.ks_tol,
            if pass { "PASS" } else { "FAIL" }
        ),
    )?;
    Ok(if pass { EXIT_OK } else { EXIT_TOLERANCE })
}

/// One line of the validation table.
struct Check {
    name: &'static str,
    measured: f64,
    budget: f64,
}

impl Check {
    fn passed(&self) -> bool {
        self.measured <= self.budget
    }
}

fn print_check(stdout: &mut dyn Write, check: &Check) -> Result<()> {
    emit(
        stdout,
        &format!(
            "{:<58} {:>24} {:>8} {}",
            check.name,
            format!("{:.16e}", check.measured),
            format!("{:.1e}", check.budget),
            if check.passed() { "PASS" } else { "FAIL" }
        ),
    )
}

/// Closed-form regression suite: semicircle pairs against the semicircle
/// summation rule, and an arcsine pair against the free Bernoulli fourth
/// power. Every row prints the measured error next to its budget; the exit
/// code is 1 as soon as any row fails.
fn cmd_validate(stdout: &mut dyn Write) -> Result<i32> {
    emit(
        stdout,
        &format!("{:<58} {:>24} {:>8} status", "check", "measured", "budget"),
    )?;
    let mut all = true;
    let mut tally = (0usize, 0usize);
    let mut record = |stdout: &mut dyn Write, check: Check| -> Result<()> {
        all &= check.passed();
        tally.0 += check.passed() as usize;
        tally.1 += 1;
        print_check(stdout, &check)
    };

    // Two standard semicircles: sigma(1) + sigma(1) = sigma(2), with edges
    // at 2 sqrt(2) and slope coefficients 2^(-3/4) on both sides.
    let sc1 = JacobiMeasure::semicircle(1.0)?;
    let sup = find_support(&sc1, &sc1, 1e-10)?;
    let e_ref = 2.0 * 2.0f64.sqrt();
    record(
        stdout,
        Check {
            name: "semicircle(1)+semicircle(1) endpoints vs 2*sqrt(2)",
            measured: (sup.e_minus + e_ref).abs().max((sup.e_plus - e_ref).abs()),
            budget: 1e-8,
        },
    )?;
    record(
        stdout,
        Check {
            name: "semicircle(1)+semicircle(1) edge certificate |f-1|",
            measured: sup.edge_residuals[0].max(sup.edge_residuals[1]),
            budget: 1e-8,
        },
    )?;
    let gamma_ref = 2.0f64.powf(-0.75);
    let gamma_dev = sup
        .gamma_alpha
        .iter()
        .chain(sup.gamma_beta.iter())
        .map(|g| (g / gamma_ref - 1.0).abs())
        .fold(0.0f64, f64::max);
    record(
        stdout,
        Check {
            name: "semicircle(1)+semicircle(1) edge slope vs 2^(-3/4) (rel)",
            measured: gamma_dev,
            budget: 1e-6,
        },
    )?;

    let grid = DensityGrid::compute(&sc1, &sc1, &sup, 513, 1e-8, 1e-12)?;
    let sigma2 = ClosedFormFamily::semicircle(2.0);
    let mut sup_err = 0.0f64;
    for (x, rho) in grid.x.iter().zip(&grid.rho) {
        if (x - sup.e_minus).min(sup.e_plus - x) >= 1e-2 {
            sup_err = sup_err.max((rho - sigma2.density(*x)).abs());
        }
    }
    record(
        stdout,
        Check {
            name: "semicircle(1)+semicircle(1) density sup-error vs sigma(2)",
            measured: sup_err,
            budget: 1e-6,
        },
    )?;
    record(
        stdout,
        Check {
            name: "semicircle(1)+semicircle(1) mass error",
            measured: (grid.mass - 1.0).abs(),
            budget: 1e-6,
        },
    )?;
    record(
        stdout,
        Check {
            name: "semicircle(1)+semicircle(1) mean error",
            measured: grid.mean.abs(),
            budget: 1e-8,
        },
    )?;
    record(
        stdout,
        Check {
            name: "semicircle(1)+semicircle(1) variance error (rel)",
            measured: (grid.variance / 2.0 - 1.0).abs(),
            budget: 1e-5,
        },
    )?;
    record(
        stdout,
        Check {
            name: "semicircle(1)+semicircle(1) cdf at the center vs 1/2",
            measured: (grid.cdf_at(0.0)? - 0.5).abs(),
            budget: 1e-6,
        },
    )?;

    // Unequal variances: sigma(1) + sigma(4) = sigma(5). The subordination
    // boundary values and slopes have closed forms: at the upper edge
    // omega_b = (2t+s)/sqrt(t+s), omega_a = (t+2s)/sqrt(t+s), and the slope
    // coefficients are gamma_b = s (t+s)^(-3/4), gamma_a = t (t+s)^(-3/4).
    let sc4 = JacobiMeasure::semicircle(4.0)?;
    let sup = find_support(&sc1, &sc4, 1e-10)?;
    let e_ref = 2.0 * 5.0f64.sqrt();
    record(
        stdout,
        Check {
            name: "semicircle(1)+semicircle(4) endpoints vs 2*sqrt(5)",
            measured: (sup.e_minus + e_ref).abs().max((sup.e_plus - e_ref).abs()),
            budget: 1e-8,
        },
    )?;
    let wb_ref = 6.0 / 5.0f64.sqrt();
    let wa_ref = 9.0 / 5.0f64.sqrt();
    record(
        stdout,
        Check {
            name: "semicircle(1)+semicircle(4) omega at the upper edge",
            measured: (sup.omega_beta[1] - wb_ref)
                .abs()
                .max((sup.omega_alpha[1] - wa_ref).abs()),
            budget: 1e-8,
        },
    )?;
    let scale = 5.0f64.powf(-0.75);
    let gamma_dev = [
        sup.gamma_beta[0] / (4.0 * scale) - 1.0,
        sup.gamma_beta[1] / (4.0 * scale) - 1.0,
        sup.gamma_alpha[0] / scale - 1.0,
        sup.gamma_alpha[1] / scale - 1.0,
    ]
    .iter()
    .fold(0.0f64, |m, d| m.max(d.abs()));
    record(
        stdout,
        Check {
            name: "semicircle(1)+semicircle(4) edge slopes (rel)",
            measured: gamma_dev,
            budget: 1e-6,
        },
    )?;
    record(
        stdout,
        Check {
            name: "semicircle(1)+semicircle(4) edge certificate |f-1|",
            measured: sup.edge_residuals[0].max(sup.edge_residuals[1]),
            budget: 1e-8,
        },
    )?;

    // Two arcsine laws of radius 1. Each is the free sum of two coin flips
    // at +-1/2, so the convolution is the fourth free power of that coin:
    // support [-sqrt(3), sqrt(3)], density 2 sqrt(3-x^2) / (pi (4-x^2)).
    let arc = JacobiMeasure::arcsine(1.0)?;
    let sup = find_support(&arc, &arc, 1e-10)?;
    let e_ref = 3.0f64.sqrt();
    record(
        stdout,
        Check {
            name: "arcsine(1)+arcsine(1) endpoints vs sqrt(3)",
            measured: (sup.e_minus + e_ref).abs().max((sup.e_plus - e_ref).abs()),
            budget: 1e-8,
        },
    )?;
    let grid = DensityGrid::compute(&arc, &arc, &sup, 129, 1e-8, 1e-12)?;
    let rho0_ref = 3.0f64.sqrt() / (2.0 * std::f64::consts::PI);
    record(
        stdout,
        Check {
            name: "arcsine(1)+arcsine(1) density at zero vs sqrt(3)/(2 pi)",
            measured: (grid.rho[64] - rho0_ref).abs(),
            budget: 1e-6,
        },
    )?;
    record(
        stdout,
        Check {
            name: "arcsine(1)+arcsine(1) mass error",
            measured: (grid.mass - 1.0).abs(),
            budget: 1e-6,
        },
    )?;
    record(
        stdout,
        Check {
            name: "arcsine(1)+arcsine(1) mean error",
            measured: grid.mean.abs(),
            budget: 1e-8,
        },
    )?;
    record(
        stdout,
        Check {
            name: "arcsine(1)+arcsine(1) variance error (rel)",
            measured: (grid.variance - 1.0).abs(),
            budget: 1e-5,
        },
    )?;

    let (passed, total) = tally;
    emit(
        stdout,
        &format!(
            "validate: {passed} of {total} checks passed{}",
            if all { "" } else { " -- FAILURES above" }
        ),
    )?;
    Ok(if all { EXIT_OK } else { EXIT_TOLERANCE })
}
