//! Inverse eigenvectors of Gram matrices: solutions of `H w = w^{-1}`.
//!
//! Inside an open orthant `Q` the map `w -> H w - w^{-1}` is the gradient of
//! the strictly convex energy `E(w) = w'Hw / 2 - sum_k ln|w_k|`, so there is
//! at most one solution per orthant, and one exists exactly when the closed
//! orthant meets `Ker(H)` only at the origin. The solver runs damped Newton on
//! that energy; absence of a solution is only reported after the kernel test
//! certifies it.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Config, Tolerances};
use crate::error::{PlankError, Result};
use crate::geom::{kernel_basis, GramMatrix, SignPattern};
use crate::linalg::{self, componentwise_inverse, max_abs};

/// Largest `n` accepted by the `2^n` enumerations.
pub const MAX_ENUMERATION_N: usize = 20;

/// Entries closer to zero than this count as leaving the orthant.
const WALL: f64 = 1e-14;

/// A solution of `H w = w^{-1}` together with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InverseEigenSolution {
    #[serde(serialize_with = "crate::io::ser_dvector")]
    pub w: DVector<f64>,
    /// Max-norm of `H w - w^{-1}`.
    pub residual: f64,
    pub quadrant: SignPattern,
    pub converged: bool,
    pub iterations: usize,
}

impl InverseEigenSolution {
    /// `w' H w`, equal to `n` at an exact solution.
    pub fn quadratic_form(&self, h: &GramMatrix) -> f64 {
        linalg::quad_form2(h.matrix(), &self.w)
    }

    pub fn linf(&self) -> f64 {
        max_abs(&self.w)
    }

    /// `sum_k ln|w_k|`.
    pub fn log_abs_product(&self) -> f64 {
        self.w.iter().map(|x| x.abs().ln()).sum()
    }
}

/// `H w - w^{-1}`, with `(w^{-1})_k = 1 / w_k`.
pub fn residual(h: &GramMatrix, w: &DVector<f64>) -> Result<DVector<f64>> {
    if w.len() != h.n() {
        return Err(PlankError::InvalidArgument(format!(
            "w has length {} but H is {}x{}",
            w.len(),
            h.n(),
            h.n()
        )));
    }
    if let Some(index) = w.iter().position(|&x| x == 0.0) {
        return Err(PlankError::ZeroEntry { index });
    }
    Ok(raw_residual(h.matrix(), w))
}

/// Evaluated with compensated sums so that the residual of large `w` is not
/// swamped by cancellation in `m w`.
fn raw_residual(m: &DMatrix<f64>, w: &DVector<f64>) -> DVector<f64> {
    let mw = linalg::mat_vec2(m, w);
    DVector::from_fn(w.len(), |i, _| {
        let (hi, lo) = mw[i];
        (hi - 1.0 / w[i]) + lo
    })
}

fn energy(m: &DMatrix<f64>, w: &DVector<f64>) -> f64 {
    0.5 * linalg::quad_form2(m, w) - w.iter().map(|x| x.abs().ln()).sum::<f64>()
}

/// Rounding-level size of `energy` at `w`: the quadratic form cancels terms
/// as large as `|w|' |m| |w|`.
fn energy_noise(m: &DMatrix<f64>, w: &DVector<f64>) -> f64 {
    let a = w.abs();
    let gross = a.dot(&(m.abs() * &a)) + w.iter().map(|x| x.abs().ln().abs()).sum::<f64>();
    1e-13 * (1.0 + gross)
}

fn inside(q: &SignPattern, w: &DVector<f64>) -> bool {
    w.iter()
        .zip(q.signs())
        .all(|(&x, &s)| x * f64::from(s) > WALL)
}

/// Damped Newton on `m x - x^{-1} = 0` from `start`, never leaving the
/// orthant of `start`. `m` must be symmetric positive semidefinite.
pub(crate) fn newton(
    m: &DMatrix<f64>,
    start: DVector<f64>,
    cfg: &Config,
) -> Result<InverseEigenSolution> {
    let sol = newton_run(m, start, cfg)?;
    if sol.converged {
        Ok(sol)
    } else {
        Err(PlankError::NonConvergence {
            quadrant: sol.quadrant.to_string(),
            residual: sol.residual,
            iterations: sol.iterations,
        })
    }
}

/// Newton iteration that reports non-convergence through the `converged`
/// flag instead of an error.
fn newton_run(
    m: &DMatrix<f64>,
    start: DVector<f64>,
    cfg: &Config,
) -> Result<InverseEigenSolution> {
    let quadrant = SignPattern::of(&start).ok_or_else(|| {
        PlankError::InvalidArgument("Newton start has a zero entry".into())
    })?;
    let mut w = start;
    let mut f = raw_residual(m, &w);
    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        if max_abs(&f) <= cfg.tol.residual {
            break;
        }
        iterations += 1;
        let mut jac = m.clone();
        for k in 0..w.len() {
            jac[(k, k)] += 1.0 / (w[k] * w[k]);
        }
        let Some(step) = linalg::spd_solve(&jac, &f) else {
            break;
        };
        let step = -step;
        let e0 = energy(m, &w);
        let noise = energy_noise(m, &w);
        let slope = f.dot(&step);
        let r0 = f.norm();
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..80 {
            let cand = &w + &step * t;
            if inside(&quadrant, &cand) {
                let e1 = energy(m, &cand);
                let armijo = e1 <= e0 + 1e-4 * t * slope;
                // Near the solution the energy change drops below rounding;
                // fall back to residual decrease there.
                let flat = (e1 - e0).abs() <= noise;
                if armijo || flat {
                    let fc = raw_residual(m, &cand);
                    if armijo || fc.norm() < r0 {
                        accepted = Some((cand, fc));
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((cand, fc)) => {
                w = cand;
                f = fc;
            }
            None => break,
        }
    }
    // A few full steps past the tolerance bring the residual to rounding level.
    if max_abs(&f) <= cfg.tol.residual {
        for _ in 0..3 {
            let mut jac = m.clone();
            for k in 0..w.len() {
                jac[(k, k)] += 1.0 / (w[k] * w[k]);
            }
            let Some(step) = linalg::spd_solve(&jac, &f) else { break };
            let cand = &w - step;
            let fc = raw_residual(m, &cand);
            if !inside(&quadrant, &cand) || max_abs(&fc) >= max_abs(&f) {
                break;
            }
            w = cand;
            f = fc;
        }
    }
    let residual = max_abs(&f);
    Ok(InverseEigenSolution {
        w,
        residual,
        quadrant,
        converged: residual <= cfg.tol.residual,
        iterations,
    })
}

/// Whether the closed orthant `q` contains a nonzero vector of the span of
/// `kernel` (an orthonormal basis). Decided by the linear feasibility problem
/// `diag(q) K c >= 0`, `1' diag(q) K c = 1`.
pub fn quadrant_meets_kernel(kernel: &[DVector<f64>], q: &SignPattern) -> bool {
    if kernel.is_empty() {
        return false;
    }
    let n = q.len();
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = kernel
        .iter()
        .map(|_| problem.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    let coeff = |i: usize, j: usize| {
        let x = f64::from(q.signs()[i]) * kernel[j][i];
        if x.abs() < 1e-13 {
            0.0
        } else {
            x
        }
    };
    let mut total = vec![0.0; kernel.len()];
    for i in 0..n {
        let mut row = LinearExpr::empty();
        for (j, &var) in vars.iter().enumerate() {
            let c = coeff(i, j);
            total[j] += c;
            if c != 0.0 {
                row.add(var, c);
            }
        }
        problem.add_constraint(row, ComparisonOp::Ge, -1e-9);
    }
    let mut sum = LinearExpr::empty();
    for (j, &var) in vars.iter().enumerate() {
        sum.add(var, total[j]);
    }
    problem.add_constraint(sum, ComparisonOp::Eq, 1.0);
    problem.solve().is_ok()
}

/// The unique inverse eigenvector of `h` with sign pattern `q`, or `None`
/// when `q` meets the kernel of `h` (no solution exists).
///
/// Starts from `q` scaled onto `w' H w = n`.
pub fn solve_in_quadrant(
    h: &GramMatrix,
    q: &SignPattern,
    cfg: &Config,
) -> Result<Option<InverseEigenSolution>> {
    let kernel = kernel_basis(h, cfg.tol.kernel);
    solve_with_kernel(h, q, &kernel, None, cfg)
}

/// As [`solve_in_quadrant`], starting Newton from `start` (which must lie in
/// the open orthant `q`).
pub fn solve_in_quadrant_from(
    h: &GramMatrix,
    q: &SignPattern,
    start: &DVector<f64>,
    cfg: &Config,
) -> Result<Option<InverseEigenSolution>> {
    if !q.contains(start) {
        return Err(PlankError::InvalidArgument(format!(
            "start point is not inside quadrant {q}"
        )));
    }
    let kernel = kernel_basis(h, cfg.tol.kernel);
    solve_with_kernel(h, q, &kernel, Some(start.clone()), cfg)
}

fn solve_with_kernel(
    h: &GramMatrix,
    q: &SignPattern,
    kernel: &[DVector<f64>],
    start: Option<DVector<f64>>,
    cfg: &Config,
) -> Result<Option<InverseEigenSolution>> {
    let n = h.n();
    if q.len() != n {
        return Err(PlankError::InvalidArgument(format!(
            "sign pattern has length {} but H is {n}x{n}",
            q.len()
        )));
    }
    if quadrant_meets_kernel(kernel, q) {
        return Ok(None);
    }
    let start = start.unwrap_or_else(|| scale_onto(h.matrix(), q.to_vector(), n as f64));
    newton(h.matrix(), start, cfg).map(Some)
}

/// Rescales `x` so that `x' m x = target`.
fn scale_onto(m: &DMatrix<f64>, x: DVector<f64>, target: f64) -> DVector<f64> {
    let form = x.dot(&(m * &x));
    if form > 0.0 {
        x * (target / form).sqrt()
    } else {
        x
    }
}

/// Every inverse eigenvector of `h`, at most one per orthant, in order of
/// [`SignPattern::index`].
pub fn enumerate_all(h: &GramMatrix, cfg: &Config) -> Result<Vec<InverseEigenSolution>> {
    let n = h.n();
    if n > MAX_ENUMERATION_N {
        return Err(PlankError::InvalidArgument(format!(
            "enumeration over 2^{n} quadrants exceeds the limit n <= {MAX_ENUMERATION_N}"
        )));
    }
    let kernel = kernel_basis(h, cfg.tol.kernel);
    let found = (0..1u64 << n)
        .into_par_iter()
        .map(|idx| solve_with_kernel(h, &SignPattern::from_index(n, idx), &kernel, None, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(found.into_iter().flatten().collect())
}

/// Full output of the dual construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DualOutcome {
    /// `w = u^{-1}`, re-polished as an inverse eigenvector of `H`.
    pub solution: InverseEigenSolution,
    /// Global maximizer of `prod |u_k|` on `u' H^{-1} u = n`.
    pub u: DVector<f64>,
    /// `sum_k ln|u_k|` at the maximizer.
    pub log_product: f64,
    /// Distinct orthants (up to global sign) that were solved.
    pub quadrants_explored: usize,
}

/// Inverse eigenvector of `h` obtained from the global maximizer `u` of
/// `prod |u_k|` subject to `u' H^{-1} u = n`, via `w = u^{-1}`.
pub fn solve_dual(h: &GramMatrix, cfg: &Config) -> Result<InverseEigenSolution> {
    dual_maximizer(h, cfg).map(|d| d.solution)
}

/// The dual construction with its intermediate data.
///
/// Multi-start: every sign vector over the first `min(n, 10)` coordinates and
/// `8n` Gaussian starts (seeded by `cfg.seed`). Each start takes a few
/// projected ascent steps on the ellipsoid, then its orthant is solved exactly
/// by Newton on `H^{-1} u = u^{-1}`. Orthants are merged up to global sign; the
/// best value wins, ties going to the lexicographically smallest orthant.
pub fn dual_maximizer(h: &GramMatrix, cfg: &Config) -> Result<DualOutcome> {
    let n = h.n();
    let lmin = h.min_eigenvalue();
    if lmin <= cfg.tol.kernel {
        return Err(PlankError::Unsupported(format!(
            "Gram matrix is singular (smallest eigenvalue {lmin:e}); \
             use witness::maximize_product for the direct construction"
        )));
    }
    let g = linalg::symmetrize(
        &h.matrix()
            .clone()
            .cholesky()
            .ok_or_else(|| PlankError::Unsupported("Cholesky factorization failed".into()))?
            .inverse(),
    );
    let nf = n as f64;

    let mut starts: Vec<DVector<f64>> = Vec::new();
    let sign_bits = n.min(10);
    for idx in 0..1u64 << sign_bits {
        starts.push(SignPattern::from_index(n, idx).to_vector());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..8 * n {
        let x = DVector::from_fn(n, |_, _| {
            let mut z: f64 = StandardNormal.sample(&mut rng);
            while z == 0.0 {
                z = StandardNormal.sample(&mut rng);
            }
            z
        });
        starts.push(x);
    }

    // Canonical orthant -> ascended start point (first start wins).
    let mut by_quadrant: BTreeMap<SignPattern, DVector<f64>> = BTreeMap::new();
    for s in starts {
        let u = ellipsoid_ascent(&g, scale_onto(&g, s, nf), 20);
        let Some(q) = SignPattern::of(&u) else { continue };
        let canonical = q.canonical();
        let u = if canonical == q { u } else { -u };
        by_quadrant.entry(canonical).or_insert(u);
    }
    let quadrants_explored = by_quadrant.len();
    // H^{-1} may have large entries, so its own residual can stall above the
    // absolute tolerance; the final polish on H is what gets certified.
    let solved = by_quadrant
        .into_par_iter()
        .map(|(q, u)| {
            let mut sol = newton_run(&g, u, cfg)?;
            let scale = 1.0 + max_abs(&(&g * &sol.w));
            if sol.residual > 1e-9 * scale {
                // Ill-conditioned H^{-1}: finish the same orthant on H, where
                // u = w^{-1} is preserved orthant-wise.
                let primal = newton(h.matrix(), componentwise_inverse(&sol.w), cfg)?;
                sol.w = componentwise_inverse(&primal.w);
                sol.residual = max_abs(&raw_residual(&g, &sol.w));
                sol.iterations += primal.iterations;
            }
            Ok((q, sol))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut best: Option<(f64, InverseEigenSolution)> = None;
    for (_, sol) in solved {
        let value = sol.log_abs_product();
        let better = match &best {
            None => true,
            Some((b, _)) => value > *b + 1e-12 * (1.0 + b.abs()),
        };
        if better {
            best = Some((value, sol));
        }
    }
    let (log_product, dual) = best.ok_or_else(|| {
        PlankError::NonConvergence {
            quadrant: "(none)".into(),
            residual: f64::NAN,
            iterations: 0,
        }
    })?;
    let solution = newton(h.matrix(), componentwise_inverse(&dual.w), cfg)?;
    Ok(DualOutcome {
        solution,
        u: dual.w,
        log_product,
        quadrants_explored,
    })
}

/// Projected gradient ascent of `sum ln|u_k|` on `{u' g u = n}`, staying in the
/// orthant of `u`.
fn ellipsoid_ascent(g: &DMatrix<f64>, mut u: DVector<f64>, steps: usize) -> DVector<f64> {
    let n = u.len() as f64;
    let Some(q) = SignPattern::of(&u) else { return u };
    let objective = |x: &DVector<f64>| x.iter().map(|v| v.abs().ln()).sum::<f64>();
    let mut step = 0.1;
    for _ in 0..steps {
        let grad = componentwise_inverse(&u);
        let normal = g * &u;
        let nn = normal.norm_squared();
        if nn == 0.0 {
            break;
        }
        let tangent = &grad - &normal * (grad.dot(&normal) / nn);
        if tangent.norm() < 1e-12 {
            break;
        }
        let f0 = objective(&u);
        let mut moved = false;
        for _ in 0..30 {
            let cand = scale_onto(g, &u + &tangent * step, n);
            if inside(&q, &cand) && objective(&cand) > f0 {
                u = cand;
                step *= 1.5;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    u
}

/// Which of the `||w||_inf` bounds a solution satisfies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WBoundReport {
    pub linf: f64,
    /// `n^{-1/2} csc(pi / 2n)`.
    pub sharp_limit: f64,
    /// `sqrt(n)`.
    pub bang_limit: f64,
    /// `sqrt(n - 1)`.
    pub strong_limit: f64,
    pub sharp_bound: bool,
    pub bang_bound: bool,
    pub strong_bound: bool,
}

/// Records (never asserts) the three `||w||_inf` bounds. They are guaranteed
/// for the output of [`solve_dual`]; other orthants may violate them.
pub fn verify_w_bounds(sol: &InverseEigenSolution, n: usize, tol: &Tolerances) -> WBoundReport {
    let nf = n as f64;
    let linf = sol.linf();
    let sharp_limit = sharp_w_limit(n);
    let bang_limit = nf.sqrt();
    let strong_limit = (nf - 1.0).max(0.0).sqrt();
    WBoundReport {
        linf,
        sharp_limit,
        bang_limit,
        strong_limit,
        sharp_bound: linf <= sharp_limit + tol.bound,
        bang_bound: linf <= bang_limit + tol.bound,
        strong_bound: linf <= strong_limit + tol.bound,
    }
}

/// `n^{-1/2} csc(pi / 2n)`.
pub fn sharp_w_limit(n: usize) -> f64 {
    let nf = n as f64;
    1.0 / (nf.sqrt() * (PI / (2.0 * nf)).sin())
}
