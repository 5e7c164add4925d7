//! Command-line front end. [`run`] parses arguments, executes one subcommand
//! and returns the process exit code:
//!
//! - 0: success (for `verify`, every check passed)
//! - 1: a bound failed or the input is unsupported
//! - 2: usage, parse or input error

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::config::{Config, Tolerances};
use crate::error::{PlankError, Result};
use crate::geom::{extremal_configuration, gram, zone_covers, GramMatrix, SignPattern, UnitVectorSet, Zone};
use crate::inverse_eigen::{self, InverseEigenSolution, WBoundReport};
use crate::io::{self, Input};
use crate::oracle::{self, BangResult, OracleResult};
use crate::trigpoly::{self, BernsteinReport};
use crate::witness::{self, ConjugatedMatrix, MBoundReport, WitnessResult};

/// Report schema version.
pub const SCHEMA: &str = "1";

#[derive(Debug, Parser)]
#[command(name = "plank", version, about = "Certified witnesses for the sharp plank bound on unit vector sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a vector file (JSON) to stdout or --output.
    Gen(GenArgs),
    /// Run the full pipeline and print a JSON verification report.
    Verify(VerifyArgs),
    /// Solve H w = 1/w in one quadrant, all quadrants, or by the dual construction.
    InvEigen(InvEigenArgs),
    /// Sample a slice polynomial as CSV (theta, T, T', T'', Q, quadform).
    Trace(TraceArgs),
    /// Test whether spherical zones cover the sphere.
    Zones(ZonesArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// n unit vectors in R^2 with lines equally spaced by pi/n.
    #[arg(long, value_name = "N", conflicts_with = "random", required_unless_present = "random")]
    pub extremal: Option<usize>,
    /// n normalized Gaussian vectors in R^d.
    #[arg(long, num_args = 2, value_names = ["N", "D"])]
    pub random: Option<Vec<usize>>,
    /// Seed for --random.
    #[arg(long, env = "PLANK_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output path (default: stdout).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TolArgs {
    /// Slack on bound checks.
    #[arg(long = "tol", default_value_t = 1e-8)]
    pub bound: f64,
    /// Residual accepted for H w = 1/w.
    #[arg(long = "residual-tol", default_value_t = 1e-10)]
    pub residual: f64,
    /// Eigenvalue cutoff for the kernel of H.
    #[arg(long = "kernel-tol", default_value_t = 1e-10)]
    pub kernel: f64,
    /// Slack when comparing against brute-force oracles.
    #[arg(long = "oracle-slack", default_value_t = 1e-6)]
    pub oracle_slack: f64,
    /// Multi-start seed.
    #[arg(long, env = "PLANK_SEED", default_value_t = 0)]
    pub seed: u64,
}

impl TolArgs {
    fn config(&self) -> Config {
        Config {
            tol: Tolerances {
                residual: self.residual,
                bound: self.bound,
                kernel: self.kernel,
                oracle_slack: self.oracle_slack,
            },
            seed: self.seed,
            ..Config::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Vector file (JSON or CSV).
    pub input: PathBuf,
    /// Also run the brute-force oracles (grid for d <= 3, exhaustive sign search for n <= 20).
    #[arg(long)]
    pub oracle: bool,
    /// Normalize rows instead of rejecting non-unit vectors.
    #[arg(long)]
    pub normalize: bool,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Debug, Args)]
pub struct InvEigenArgs {
    /// Vector file or Gram file ({"gram": [[...]]}).
    pub input: PathBuf,
    /// Sign pattern such as ++-.
    #[arg(long, conflicts_with_all = ["all", "dual"], required_unless_present_any = ["all", "dual"])]
    pub quadrant: Option<String>,
    /// Every quadrant (n <= 20).
    #[arg(long, conflicts_with = "dual")]
    pub all: bool,
    /// Dual construction (invertible H only).
    #[arg(long)]
    pub dual: bool,
    #[arg(long)]
    pub normalize: bool,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    /// Vector file.
    pub input: PathBuf,
    /// Diagonal slice through 1 and (n e_k - 1)/sqrt(n m_kk - 1); k is 1-based.
    #[arg(long, value_name = "K", conflicts_with = "vector", required_unless_present = "vector")]
    pub slice: Option<usize>,
    /// File whose first row is the slice direction v.
    #[arg(long, value_name = "FILE")]
    pub vector: Option<PathBuf>,
    /// Number of samples on [0, 2 pi).
    #[arg(long, default_value_t = 256)]
    pub samples: usize,
    #[arg(long)]
    pub normalize: bool,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Debug, Args)]
pub struct ZonesArgs {
    /// Zone file ({"zones": [{"normal": [x, y, z], "width": w}, ...]}).
    #[arg(required_unless_present = "from_vectors", conflicts_with = "from_vectors")]
    pub zones: Option<PathBuf>,
    /// Use the vectors of a file (d = 3) as zone normals.
    #[arg(long, value_name = "FILE", requires = "width")]
    pub from_vectors: Option<PathBuf>,
    /// Common width with --from-vectors.
    #[arg(long)]
    pub width: Option<f64>,
    /// Icosphere subdivision level.
    #[arg(long, default_value_t = 6)]
    pub resolution: u32,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Gen(a) => gen(a, out),
        Command::Verify(a) => verify(a, out),
        Command::InvEigen(a) => inv_eigen(a, out),
        Command::Trace(a) => trace(a, out),
        Command::Zones(a) => zones(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if let PlankError::NotUnit { .. } = e {
                let _ = writeln!(err, "hint: pass --normalize to rescale the rows");
            }
            exit_code(&e)
        }
    }
}

/// Exit code for an error that aborted a command.
pub fn exit_code(e: &PlankError) -> i32 {
    match e {
        PlankError::Unsupported(_)
        | PlankError::Uncertified { .. }
        | PlankError::NoContradiction { .. }
        | PlankError::NonConvergence { .. }
        | PlankError::Precondition(_) => 1,
        PlankError::InvalidArgument(_)
        | PlankError::NotUnit { .. }
        | PlankError::ZeroEntry { .. }
        | PlankError::NotGram(_)
        | PlankError::Parse(_)
        | PlankError::Io(_) => 2,
    }
}

fn emit_json<T: Serialize>(value: &T, out: &mut dyn Write) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| PlankError::Parse(e.to_string()))?;
    writeln!(out, "{text}")?;
    Ok(())
}

fn load_vectors(path: &Path, normalize: bool) -> Result<UnitVectorSet> {
    let rows = io::read_vectors(path)?;
    if normalize {
        UnitVectorSet::normalized(&rows)
    } else {
        UnitVectorSet::from_rows(&rows)
    }
}

fn gen(a: &GenArgs, out: &mut dyn Write) -> Result<i32> {
    let rows = if let Some(n) = a.extremal {
        if n == 0 {
            return Err(PlankError::InvalidArgument("--extremal needs n >= 1".into()));
        }
        extremal_configuration(n)?.rows()
    } else {
        let dims = a.random.as_deref().unwrap_or_default();
        let (n, d) = (dims[0], dims[1]);
        if n == 0 || d == 0 {
            return Err(PlankError::InvalidArgument("--random needs n >= 1 and d >= 1".into()));
        }
        random_rows(n, d, a.seed)
    };
    let text = io::vector_file_json(&rows);
    match &a.output {
        Some(path) => std::fs::write(path, format!("{text}\n"))?,
        None => writeln!(out, "{text}")?,
    }
    Ok(0)
}

/// `n` normalized Gaussian rows in `R^d` from a seeded ChaCha8 stream;
/// zero rows are redrawn.
pub fn random_rows(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| loop {
            let row: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                break row.into_iter().map(|x| x / norm).collect();
            }
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct InstanceBlock {
    pub n: usize,
    pub d: usize,
    pub source: String,
    pub seed: u64,
    pub normalized: bool,
}

#[derive(Debug, Serialize)]
pub struct InverseEigenBlock {
    #[serde(serialize_with = "crate::io::ser_dvector")]
    pub w: DVector<f64>,
    pub quadrant: SignPattern,
    pub residual: f64,
    pub residual_ok: bool,
    pub quadratic_form: f64,
    pub bounds: WBoundReport,
}

#[derive(Debug, Serialize)]
pub struct TrigBlock {
    /// 0-based index of the largest diagonal entry of M.
    pub k: usize,
    pub slope_norm_sq: f64,
    pub slope_norm_sq_formula: f64,
    pub norm_identity_ok: bool,
    /// `sup |T| <= 1 + 1e-9` on the Bernstein grid.
    pub sup_norm_ok: bool,
    pub bernstein: BernsteinReport,
    pub q_residual: f64,
    pub q_high_coefficient_max: f64,
    pub q_ok: bool,
    /// `Q` vanishes identically (the slice polynomial is `cos(n theta)`).
    pub q_identically_zero: bool,
    pub root_count: usize,
    pub root_bound: usize,
    pub roots_ok: bool,
}

impl TrigBlock {
    fn ok(&self) -> bool {
        self.norm_identity_ok && self.sup_norm_ok && self.bernstein.ok() && self.q_ok && self.roots_ok
    }
}

#[derive(Debug, Serialize)]
pub struct OracleBlock {
    /// Grid or analytic optimum of `min_k |<v_k, x>|`; absent for d > 3.
    pub optimum: Option<OracleResult>,
    /// Exact optimum for d = 2.
    pub analytic: Option<OracleResult>,
    /// Oracle optimum is at least `sin(pi/2n)` minus the grid spacing.
    pub bound_ok: Option<bool>,
    /// Unit witness margin does not exceed the oracle optimum (plus spacing and slack).
    pub consistent: Option<bool>,
    pub bang: Option<BangResult>,
}

impl OracleBlock {
    fn ok(&self) -> bool {
        self.bound_ok.unwrap_or(true)
            && self.consistent.unwrap_or(true)
            && self.bang.as_ref().is_none_or(|b| b.satisfied)
    }
}

#[derive(Debug, Serialize)]
pub struct VerificationReport {
    pub schema: &'static str,
    pub instance: InstanceBlock,
    pub tolerances: Tolerances,
    pub witness: WitnessResult,
    pub inverse_eigen: InverseEigenBlock,
    pub m: MBoundReport,
    /// Absent when `n < 2` or `n m_kk = 1` for every `k`.
    pub trig: Option<TrigBlock>,
    pub trig_skipped: Option<String>,
    pub oracle: Option<OracleBlock>,
    pub overall: bool,
}

/// The whole pipeline on an in-memory vector set.
pub fn verification_report(
    vs: &UnitVectorSet,
    cfg: &Config,
    with_oracle: bool,
    instance: InstanceBlock,
) -> Result<VerificationReport> {
    let n = vs.len();
    let h = gram(vs);
    let witness = witness::certify_zone_bound(vs, cfg)?;
    let residual = inverse_eigen::residual(&h, &witness.w)?.amax();
    let sol = InverseEigenSolution {
        quadrant: SignPattern::of(&witness.w).expect("w has no zero entries"),
        w: witness.w.clone(),
        residual,
        converged: residual <= cfg.tol.residual,
        iterations: 0,
    };
    let inverse_eigen_block = InverseEigenBlock {
        quadratic_form: sol.quadratic_form(&h),
        bounds: inverse_eigen::verify_w_bounds(&sol, n, &cfg.tol),
        residual_ok: sol.converged,
        w: sol.w,
        quadrant: sol.quadrant,
        residual,
    };
    let m = witness::build_m(&h, &witness.w)?;
    let m_report = witness::check_m_bounds(&m, &cfg.tol);
    let (trig, trig_skipped) = match trig_block(&m) {
        Ok(t) => (Some(t), None),
        Err(PlankError::Precondition(msg)) | Err(PlankError::InvalidArgument(msg)) => (None, Some(msg)),
        Err(e) => return Err(e),
    };
    let oracle = with_oracle.then(|| oracle_block(vs, &h, &witness, cfg)).transpose()?;
    let w_bounds = &inverse_eigen_block.bounds;
    let overall = witness.certified
        && inverse_eigen_block.residual_ok
        && w_bounds.sharp_bound
        && w_bounds.bang_bound
        && w_bounds.strong_bound
        && m_report.all_ok()
        && trig.as_ref().is_none_or(TrigBlock::ok)
        && oracle.as_ref().is_none_or(OracleBlock::ok);
    Ok(VerificationReport {
        schema: SCHEMA,
        instance,
        tolerances: cfg.tol,
        witness,
        inverse_eigen: inverse_eigen_block,
        m: m_report,
        trig,
        trig_skipped,
        oracle,
        overall,
    })
}

fn trig_block(m: &ConjugatedMatrix) -> Result<TrigBlock> {
    let n = m.n();
    if n < 2 {
        return Err(PlankError::Precondition("slice checks need n >= 2".into()));
    }
    let k = trigpoly::argmax_diagonal(m);
    let slice = trigpoly::diagonal_slice(m, k)?;
    let fourier = trigpoly::to_fourier(&slice.poly);
    let bernstein = trigpoly::bernstein_check(&fourier, 1024 * n)?;
    let q = trigpoly::q_decompose(&fourier, n)?;
    let roots = trigpoly::count_roots(&q.q, 4096 * n)?;
    let root_bound = 2 * n - 2;
    Ok(TrigBlock {
        k,
        norm_identity_ok: (slice.slope_norm_sq - slice.slope_norm_sq_formula).abs()
            <= 1e-9 * (1.0 + slice.slope_norm_sq),
        slope_norm_sq: slice.slope_norm_sq,
        slope_norm_sq_formula: slice.slope_norm_sq_formula,
        sup_norm_ok: bernstein.sup_t <= 1.0 + 1e-9,
        bernstein,
        q_ok: q.ok(),
        q_residual: q.residual,
        q_high_coefficient_max: q.high_coefficient_max,
        q_identically_zero: roots.identically_zero,
        root_count: roots.count,
        root_bound,
        roots_ok: roots.count <= root_bound,
    })
}

/// Circle grid size used by the `verify` oracle for d = 2.
pub const ORACLE_CIRCLE_GRID: u32 = 20_000;
/// Icosphere level used by the `verify` oracle for d = 3.
pub const ORACLE_SPHERE_LEVEL: u32 = 6;

fn oracle_block(vs: &UnitVectorSet, h: &GramMatrix, witness: &WitnessResult, cfg: &Config) -> Result<OracleBlock> {
    let n = vs.len() as f64;
    let optimum = match vs.dim() {
        1 | 2 => Some(oracle::grid_search_witness(vs, ORACLE_CIRCLE_GRID)?),
        3 => Some(oracle::grid_search_witness(vs, ORACLE_SPHERE_LEVEL)?),
        _ => None,
    };
    let analytic = (vs.dim() == 2).then(|| oracle::analytic_2d_vectors(vs)).transpose()?;
    let bound_ok = optimum
        .as_ref()
        .map(|o| o.value >= (PI / (2.0 * n)).sin() - o.resolution - cfg.tol.oracle_slack);
    let consistent = optimum
        .as_ref()
        .map(|o| witness.unit_min_margin <= o.value + o.resolution + cfg.tol.oracle_slack);
    let bang = (vs.len() <= oracle::BANG_MAX_N).then(|| oracle::bang_sign_search(h)).transpose()?;
    Ok(OracleBlock {
        optimum,
        analytic,
        bound_ok,
        consistent,
        bang,
    })
}

fn verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let vs = load_vectors(&a.input, a.normalize)?;
    let cfg = a.tol.config();
    let instance = InstanceBlock {
        n: vs.len(),
        d: vs.dim(),
        source: a.input.display().to_string(),
        seed: cfg.seed,
        normalized: a.normalize,
    };
    let report = verification_report(&vs, &cfg, a.oracle, instance)?;
    emit_json(&report, out)?;
    Ok(if report.overall { 0 } else { 1 })
}

#[derive(Debug, Serialize)]
struct SolutionEntry {
    quadrant: SignPattern,
    #[serde(serialize_with = "crate::io::ser_dvector")]
    w: DVector<f64>,
    residual: f64,
    converged: bool,
    iterations: usize,
    quadratic_form: f64,
    bounds: WBoundReport,
}

#[derive(Debug, Serialize)]
struct InvEigenReport {
    schema: &'static str,
    n: usize,
    mode: &'static str,
    /// For `--quadrant`: whether the closed quadrant meets the kernel of H.
    #[serde(skip_serializing_if = "Option::is_none")]
    quadrant_meets_kernel: Option<bool>,
    solutions: Vec<SolutionEntry>,
}

fn load_gram(path: &Path, normalize: bool) -> Result<GramMatrix> {
    match io::read_input(path)? {
        Input::Vectors(rows) => {
            let vs = if normalize {
                UnitVectorSet::normalized(&rows)?
            } else {
                UnitVectorSet::from_rows(&rows)?
            };
            Ok(gram(&vs))
        }
        Input::Gram(rows) => io::gram_from_rows(&rows),
    }
}

fn inv_eigen(a: &InvEigenArgs, out: &mut dyn Write) -> Result<i32> {
    let h = load_gram(&a.input, a.normalize)?;
    let cfg = a.tol.config();
    let n = h.n();
    let entry = |s: InverseEigenSolution| SolutionEntry {
        quadratic_form: s.quadratic_form(&h),
        bounds: inverse_eigen::verify_w_bounds(&s, n, &cfg.tol),
        quadrant: s.quadrant,
        w: s.w,
        residual: s.residual,
        converged: s.converged,
        iterations: s.iterations,
    };
    let (mode, meets, solutions) = if let Some(pattern) = &a.quadrant {
        let q: SignPattern = pattern.parse()?;
        if q.len() != n {
            return Err(PlankError::InvalidArgument(format!(
                "pattern {pattern} has length {}, expected {n}",
                q.len()
            )));
        }
        let kernel = crate::geom::kernel_basis(&h, cfg.tol.kernel);
        let meets = inverse_eigen::quadrant_meets_kernel(&kernel, &q);
        let sol = inverse_eigen::solve_in_quadrant(&h, &q, &cfg)?;
        ("quadrant", Some(meets), sol.into_iter().map(entry).collect())
    } else if a.all {
        if n > inverse_eigen::MAX_ENUMERATION_N {
            return Err(PlankError::Unsupported(format!(
                "--all supports n <= {}, got {n}",
                inverse_eigen::MAX_ENUMERATION_N
            )));
        }
        let all = inverse_eigen::enumerate_all(&h, &cfg)?;
        ("all", None, all.into_iter().map(entry).collect())
    } else {
        let sol = inverse_eigen::solve_dual(&h, &cfg)?;
        ("dual", None, vec![entry(sol)])
    };
    emit_json(
        &InvEigenReport {
            schema: SCHEMA,
            n,
            mode,
            quadrant_meets_kernel: meets,
            solutions,
        },
        out,
    )?;
    Ok(0)
}

fn trace(a: &TraceArgs, out: &mut dyn Write) -> Result<i32> {
    let vs = load_vectors(&a.input, a.normalize)?;
    let cfg = a.tol.config();
    let h = gram(&vs);
    let witness = witness::certify_zone_bound(&vs, &cfg)?;
    let m = witness::build_m(&h, &witness.w)?;
    let v = if let Some(k) = a.slice {
        if k == 0 || k > m.n() {
            return Err(PlankError::InvalidArgument(format!(
                "--slice {k} out of range 1..={}",
                m.n()
            )));
        }
        trigpoly::diagonal_direction(&m, k - 1)?
    } else {
        let path = a.vector.as_deref().expect("clap enforces --slice or --vector");
        let rows = io::read_vectors(path)?;
        DVector::from_vec(rows.into_iter().next().unwrap_or_default())
    };
    let rows = trigpoly::trace_rows(&m, &v, a.samples)?;
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in &rows {
        writer
            .serialize(row)
            .map_err(|e| PlankError::Parse(e.to_string()))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| PlankError::Parse(e.to_string()))?;
    out.write_all(&bytes)?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct ZonesReport {
    schema: &'static str,
    zones: usize,
    resolution: u32,
    covered: bool,
    uncovered_point: Option<[f64; 3]>,
    margin: f64,
    grid_margin: f64,
    grid_points: usize,
    total_width: f64,
    /// `total_width - pi`.
    width_excess: f64,
}

fn zones(a: &ZonesArgs, out: &mut dyn Write) -> Result<i32> {
    let zones: Vec<Zone> = match (&a.zones, &a.from_vectors) {
        (Some(path), _) => io::read_zones(path)?,
        (None, Some(path)) => {
            let width = a.width.expect("clap enforces --width");
            let rows = io::read_vectors(path)?;
            rows.iter()
                .map(|r| {
                    let normal: [f64; 3] = r.as_slice().try_into().map_err(|_| {
                        PlankError::InvalidArgument(format!("zone normals need d = 3, got d = {}", r.len()))
                    })?;
                    Zone::new(normal, width)
                })
                .collect::<Result<_>>()?
        }
        (None, None) => unreachable!("clap requires a zone source"),
    };
    let report = zone_covers(&zones, a.resolution)?;
    emit_json(
        &ZonesReport {
            schema: SCHEMA,
            zones: zones.len(),
            resolution: a.resolution,
            covered: report.covered,
            uncovered_point: report.uncovered_point,
            margin: report.margin,
            grid_margin: report.grid_margin,
            grid_points: report.grid_points,
            total_width: report.total_width,
            width_excess: report.total_width - PI,
        },
        out,
    )?;
    Ok(0)
}
