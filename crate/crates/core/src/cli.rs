//! Command-line front end.
//!
//! Exit statuses: 0 success, 2 usage, 3 I/O, 4 malformed input file,
//! 5 violated precondition, 6 infeasible result or failed verification.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::energy::{build_problem, DisparityRange, Labeling, ProblemError, StereoProblem};
use crate::fixtures;
use crate::imaging::{crop, load_ground_truth, read_pgm, write_pgm, CropRect, DispMatrix, ImageError};
use crate::metrics::{accuracy, energy_report, qubit_counts, ComplexityInputs, MetricsError};
use crate::qubo::{
    alpha_bound, build_qubo, default_alpha, export_qubo, import_qubo, local_alpha_bound,
    PenaltyCheck, QuboError, QuboModel, VarIndex,
};
use crate::rational::{exact_string, parse_rational, Rational};
use crate::solvers::{
    brute_force_binary, brute_force_labelings, icm, simulated_anneal_with, wta, AnnealOptions,
    AnnealSchedule, SolveResult, SolveStats, SolverError,
};
use crate::verify::verify_instance;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_PARSE: i32 = 4;
pub const EXIT_DOMAIN: i32 = 5;
pub const EXIT_FAILED: i32 = 6;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Image { path: PathBuf, source: ImageError },
    #[error(transparent)]
    ImageDomain(ImageError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Qubo(#[from] QuboError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => EXIT_IO,
            CliError::Image { .. } => EXIT_PARSE,
            CliError::Qubo(QuboError::Format { .. } | QuboError::Sidecar(_)) => EXIT_PARSE,
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Failed(_) => EXIT_FAILED,
            _ => EXIT_DOMAIN,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "stereo-qubo", version, about = "Stereo matching as a QUBO")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compile an image pair into a QUBO file and its sidecar.
    BuildQubo(BuildArgs),
    /// Minimize the energy and write a disparity map and a report.
    Solve(SolveArgs),
    /// Check the QUBO/energy correspondence exhaustively on a tiny instance.
    Verify(VerifyArgs),
    /// Score a disparity map against ground truth.
    Eval(EvalArgs),
    /// Qubit counts of the compared encodings.
    Complexity(ComplexityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    /// The 4x3 worked example (lambda 10, alpha 200 unless overridden).
    Supplementary,
}

#[derive(Debug, Args)]
struct ProblemArgs {
    #[arg(long, value_name = "PGM", conflicts_with = "preset", requires = "right")]
    left: Option<PathBuf>,
    #[arg(long, value_name = "PGM", requires = "left")]
    right: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Crop rectangle applied to both images.
    #[arg(long, value_name = "X0,Y0,W,H", conflicts_with = "preset")]
    crop: Option<CropRect>,
    #[arg(long, default_value_t = 0)]
    d_min: u32,
    #[arg(long)]
    d_max: Option<u32>,
    /// Smoothness weight (integer, a/b or decimal). Default 20, or 10 for the preset.
    #[arg(long)]
    lambda: Option<String>,
    /// `auto` (bound + 1), `local`, or an explicit value. Default auto, or 200 for the preset.
    #[arg(long)]
    alpha: Option<String>,
    /// Accept an explicit alpha at or below the bound.
    #[arg(long)]
    unsafe_alpha: bool,
}

#[derive(Debug, Args)]
struct BuildArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Defaults to the output path with a `.json` extension.
    #[arg(long, value_name = "FILE")]
    sidecar: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverKind {
    Sa,
    Icm,
    Wta,
    Brute,
}

impl SolverKind {
    fn name(self) -> &'static str {
        match self {
            SolverKind::Sa => "sa",
            SolverKind::Icm => "icm",
            SolverKind::Wta => "wta",
            SolverKind::Brute => "brute",
        }
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Solve a previously exported model instead of images.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["left", "preset"], requires = "sidecar")]
    qubo: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    sidecar: Option<PathBuf>,
    /// One or more solvers; the disparity map comes from the first.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "sa")]
    solver: Vec<SolverKind>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    sweeps: Option<u64>,
    #[arg(long)]
    restarts: Option<u32>,
    #[arg(long)]
    beta_start: Option<f64>,
    #[arg(long)]
    beta_end: Option<f64>,
    /// Make an infeasible annealing result one-hot.
    #[arg(long)]
    repair: bool,
    #[arg(long, value_name = "PGM")]
    disparity: Option<PathBuf>,
    /// Gray level per disparity step in the written map.
    #[arg(long, default_value_t = 1)]
    disp_scale: u32,
    /// JSON report; the text table always goes to stdout.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    width: usize,
    #[arg(long, default_value_t = 2)]
    height: usize,
    #[arg(long, default_value_t = 0)]
    d_min: u32,
    #[arg(long, default_value_t = 1)]
    d_max: u32,
    #[arg(long)]
    lambda: Option<String>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long, value_name = "PGM")]
    disparity: PathBuf,
    #[arg(long, value_name = "PGM")]
    truth: PathBuf,
    #[arg(long, default_value_t = 1)]
    disp_scale: u32,
    #[arg(long, default_value_t = 1)]
    gt_scale: u32,
    /// Leftmost columns to ignore in both maps.
    #[arg(long, default_value_t = 0)]
    skip_columns: usize,
    #[arg(long = "beta", value_delimiter = ',', default_values_t = [0.5, 1.0])]
    betas: Vec<f64>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ComplexityArgs {
    /// Image height.
    #[arg(long)]
    n: u64,
    /// Image width.
    #[arg(long)]
    m: u64,
    #[arg(long)]
    k: u64,
}

/// Parses `args` (program name first) and runs the command, writing to the
/// process's stdout and stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(args, &mut stdout.lock(), &mut stderr.lock())
}

/// Like [`main_with_args`] with explicit output streams.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            if e.use_stderr() {
                let first = text.lines().next().unwrap_or("usage error");
                let _ = writeln!(err, "{first}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    let res = match cli.command {
        Command::BuildQubo(a) => cmd_build(&a, out),
        Command::Solve(a) => cmd_solve(&a, out),
        Command::Verify(a) => cmd_verify(&a, out),
        Command::Eval(a) => cmd_eval(&a, out),
        Command::Complexity(a) => cmd_complexity(&a, out),
    };
    match res {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn read_file(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_pgm(path: &Path) -> CliResult<crate::imaging::GrayImage> {
    read_pgm(&read_file(path)?).map_err(|source| CliError::Image {
        path: path.to_path_buf(),
        source,
    })
}

fn rational_arg(flag: &str, s: &str) -> CliResult<Rational> {
    parse_rational(s).map_err(|e| CliError::Usage(format!("--{flag}: {e}")))
}

fn load_problem(a: &ProblemArgs) -> CliResult<StereoProblem> {
    let preset = a.preset.is_some();
    let lambda = match &a.lambda {
        Some(s) => rational_arg("lambda", s)?,
        None if preset => Rational::from_integer(10),
        None => Rational::from_integer(20),
    };
    if preset {
        if a.d_max.is_some_and(|d| d != 1) || a.d_min != 0 {
            return Err(CliError::Usage("the supplementary preset fixes disparities to 0..1".into()));
        }
        return Ok(fixtures::supplementary_with(lambda)?);
    }
    let (Some(lp), Some(rp)) = (&a.left, &a.right) else {
        return Err(CliError::Usage("need --left and --right, or --preset".into()));
    };
    let d_max = a
        .d_max
        .ok_or_else(|| CliError::Usage("--d-max is required with images".into()))?;
    let (mut left, mut right) = (load_pgm(lp)?, load_pgm(rp)?);
    if let Some(r) = &a.crop {
        left = crop(&left, r).map_err(CliError::ImageDomain)?;
        right = crop(&right, r).map_err(CliError::ImageDomain)?;
    }
    let range = DisparityRange::new(a.d_min, d_max)?;
    Ok(build_problem(left, right, range, lambda)?)
}

/// Resolves the alpha mode and checks it against the bound up front.
fn resolve_alpha(a: &ProblemArgs, p: &StereoProblem) -> CliResult<(Rational, PenaltyCheck)> {
    let preset_default = a.alpha.is_none() && a.preset.is_some();
    let mode = match &a.alpha {
        Some(s) => s.as_str(),
        None if preset_default => "200",
        None => "auto",
    };
    let (alpha, check) = match mode {
        "auto" => (default_alpha(p), PenaltyCheck::Strict),
        "local" => (
            local_alpha_bound(p).floor() + Rational::from_integer(1),
            PenaltyCheck::Unchecked,
        ),
        v => {
            let check = if a.unsafe_alpha || preset_default {
                PenaltyCheck::Unchecked
            } else {
                PenaltyCheck::Strict
            };
            (rational_arg("alpha", v)?, check)
        }
    };
    if alpha <= Rational::from_integer(0) {
        return Err(QuboError::NonPositivePenalty(alpha).into());
    }
    let bound = alpha_bound(p);
    if check == PenaltyCheck::Strict && alpha <= bound {
        return Err(QuboError::PenaltyTooSmall { alpha, bound }.into());
    }
    Ok((alpha, check))
}

fn build_model(a: &ProblemArgs, p: &StereoProblem) -> CliResult<QuboModel> {
    let (alpha, check) = resolve_alpha(a, p)?;
    Ok(build_qubo(p, alpha, check)?)
}

fn sidecar_path(out: &Path, explicit: &Option<PathBuf>) -> PathBuf {
    explicit.clone().unwrap_or_else(|| out.with_extension("json"))
}

fn cmd_build(a: &BuildArgs, out: &mut dyn Write) -> CliResult<()> {
    let p = load_problem(&a.problem)?;
    let q = build_model(&a.problem, &p)?;
    let text = export_qubo(&q);
    let side = sidecar_path(&a.out, &a.sidecar);
    write_file(&a.out, text.qubo.as_bytes())?;
    write_file(&side, text.sidecar.as_bytes())?;
    let _ = writeln!(
        out,
        "{} variables, alpha {} (bound {}), wrote {} and {}",
        q.num_vars(),
        exact_string(&q.alpha()),
        exact_string(&alpha_bound(&p)),
        a.out.display(),
        side.display()
    );
    Ok(())
}

fn schedule(a: &SolveArgs, q: &QuboModel) -> CliResult<AnnealSchedule> {
    let mut s = AnnealSchedule::default_for(q, a.seed)?;
    if let Some(v) = a.sweeps {
        s.sweeps = v;
    }
    if let Some(v) = a.restarts {
        s.restarts = v;
    }
    if let Some(v) = a.beta_start {
        s.beta_start = v;
    }
    if let Some(v) = a.beta_end {
        s.beta_end = v;
    }
    s.validate()?;
    Ok(s)
}

/// Full-width map with zeros in the columns outside the domain.
fn map_from_index(idx: &VarIndex, w: &Labeling) -> CliResult<DispMatrix> {
    let mut values = vec![0i64; idx.width() * idx.height()];
    for (r, &d) in w.values().iter().enumerate() {
        let (i, j) = idx.pixel(r);
        values[j * idx.width() + i] = i64::from(d);
    }
    DispMatrix::new(idx.width(), idx.height(), values).map_err(CliError::ImageDomain)
}

fn cmd_solve(a: &SolveArgs, out: &mut dyn Write) -> CliResult<()> {
    let (problem, model) = match (&a.qubo, &a.sidecar) {
        (Some(qp), Some(sp)) => {
            let qt = String::from_utf8_lossy(&read_file(qp)?).into_owned();
            let st = String::from_utf8_lossy(&read_file(sp)?).into_owned();
            (None, Some(import_qubo(&qt, &st)?))
        }
        _ => {
            let p = load_problem(&a.problem)?;
            resolve_alpha(&a.problem, &p)?;
            (Some(p), None)
        }
    };
    let needs_model = a.solver.iter().any(|s| matches!(s, SolverKind::Sa))
        || (problem.is_none() && a.solver.contains(&SolverKind::Brute));
    let model = match (model, &problem) {
        (Some(m), _) => Some(m),
        (None, Some(p)) if needs_model => Some(build_model(&a.problem, p)?),
        _ => None,
    };

    let mut results: Vec<(String, SolveResult)> = Vec::new();
    for &kind in &a.solver {
        let res = match (kind, &problem) {
            (SolverKind::Sa, _) => {
                let q = model.as_ref().expect("built above");
                let opts = AnnealOptions {
                    repair: a.repair,
                    parallel: true,
                };
                simulated_anneal_with(q, &schedule(a, q)?, opts)?
            }
            (SolverKind::Wta, Some(p)) => wta(p)?,
            (SolverKind::Icm, Some(p)) => {
                let init = wta(p)?.labeling.expect("wta labels every pixel");
                icm(p, &init)?
            }
            (SolverKind::Brute, Some(p)) => {
                let opt = brute_force_labelings(p)?;
                let w = opt.minimizers.into_iter().next().expect("nonempty domain");
                SolveResult {
                    solver: "brute".into(),
                    labeling: Some(w),
                    bits: None,
                    energy: opt.min_energy,
                    feasible: true,
                    problem_key: p.fingerprint(),
                    stats: SolveStats::default(),
                }
            }
            (SolverKind::Brute, None) => {
                let q = model.as_ref().expect("imported");
                let opt = brute_force_binary(q)?;
                let x = opt.minimizers.into_iter().next().expect("at least one vector");
                let feasible = q.is_feasible(&x)?;
                SolveResult {
                    solver: "brute".into(),
                    labeling: if feasible { Some(q.decode(&x)?) } else { None },
                    bits: Some(x),
                    energy: opt.min_energy,
                    feasible,
                    problem_key: q.problem_key().to_string(),
                    stats: SolveStats::default(),
                }
            }
            (k, None) => {
                return Err(CliError::Usage(format!(
                    "solver {} needs images or a preset, not a QUBO file",
                    k.name()
                )))
            }
        };
        results.push((kind.name().to_string(), res));
    }

    let report = energy_report(&results)?;
    let _ = write!(out, "{}", report.to_text());
    if let Some(path) = &a.report {
        write_file(path, report.to_json().as_bytes())?;
    }

    let (name, first) = &results[0];
    if let Some(path) = &a.disparity {
        let Some(w) = &first.labeling else {
            return Err(CliError::Failed(format!(
                "{name} returned an infeasible assignment; no disparity map written (try --repair)"
            )));
        };
        let map = match (&problem, &model) {
            (Some(p), _) => p.disparity_map(w)?,
            (None, Some(q)) => map_from_index(q.index(), w)?,
            _ => unreachable!("either a problem or a model"),
        };
        let img = map.to_image(a.disp_scale).map_err(CliError::ImageDomain)?;
        write_file(path, &write_pgm(&img, true))?;
    } else if !first.feasible {
        return Err(CliError::Failed(format!("{name} returned an infeasible assignment")));
    }
    Ok(())
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> CliResult<()> {
    let p = match a.preset {
        Some(Preset::Supplementary) => {
            let lambda = match &a.lambda {
                Some(s) => rational_arg("lambda", s)?,
                None => Rational::from_integer(10),
            };
            fixtures::supplementary_with(lambda)?
        }
        None => {
            let lambda = match &a.lambda {
                Some(s) => rational_arg("lambda", s)?,
                None => Rational::from_integer(20),
            };
            let range = DisparityRange::new(a.d_min, a.d_max)?;
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            fixtures::try_random_problem(&mut rng, a.width, a.height, range, lambda)?
        }
    };
    let report = verify_instance(&p)?;
    let _ = write!(out, "{}", report.to_text());
    if report.all_passed() {
        Ok(())
    } else {
        Err(CliError::Failed("verification failed".into()))
    }
}

fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> CliResult<()> {
    let load = |path: &Path, scale: u32| -> CliResult<DispMatrix> {
        let img = load_pgm(path)?;
        let m = load_ground_truth(&img, scale).map_err(|source| CliError::Image {
            path: path.to_path_buf(),
            source,
        })?;
        if a.skip_columns == 0 {
            Ok(m)
        } else {
            m.skip_columns(a.skip_columns).map_err(CliError::ImageDomain)
        }
    };
    let d = load(&a.disparity, a.disp_scale)?;
    let t = load(&a.truth, a.gt_scale)?;
    let rep = accuracy(&d, &t, &a.betas)?;
    let text = if a.json { rep.to_json() } else { rep.to_text() };
    let _ = write!(out, "{text}");
    Ok(())
}

fn cmd_complexity(a: &ComplexityArgs, out: &mut dyn Write) -> CliResult<()> {
    if a.n == 0 || a.m == 0 || a.k == 0 {
        return Err(CliError::Usage("n, m and k must be positive".into()));
    }
    let c = qubit_counts(ComplexityInputs { n: a.n, m: a.m, k: a.k });
    for (name, v) in c.rows() {
        let _ = writeln!(out, "{name:<12} {v}");
    }
    Ok(())
}
