//! Brute-force references that share no numerical code with the solvers they
//! check.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::Config;
use crate::error::{PlankError, Result};
use crate::geom::{icosphere, GramMatrix, SignPattern, UnitVectorSet};
use crate::inverse_eigen;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    Grid,
    Analytic2d,
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    /// Best `min_k |<v_k, x>|` over unit `x`.
    pub value: f64,
    /// The unit vector attaining `value`.
    pub argument: Vec<f64>,
    pub method: OracleMethod,
    /// Angular grid spacing in radians; 0 for exact methods.
    pub resolution: f64,
}

/// Edge angle of the icosahedron, `arctan 2`.
const ICOSAHEDRON_EDGE: f64 = 1.107_148_717_794_090_4;

fn min_margin(vs: &UnitVectorSet, x: &[f64]) -> f64 {
    vs.matrix()
        .row_iter()
        .map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum::<f64>().abs())
        .fold(f64::INFINITY, f64::min)
}

/// Maximizes `min_k |<v_k, x>|` over a grid of unit vectors: `resolution`
/// angles in `[0, pi)` for `d = 2` (at least 1000), or icosphere level
/// `resolution` for `d = 3` (at least 5). Ties go to the lowest grid index.
pub fn grid_search_witness(vs: &UnitVectorSet, resolution: u32) -> Result<OracleResult> {
    let points: Vec<Vec<f64>> = match vs.dim() {
        1 => vec![vec![1.0]],
        2 => {
            if resolution < 1000 {
                return Err(PlankError::InvalidArgument(format!(
                    "circle grid needs at least 1000 points, got {resolution}"
                )));
            }
            (0..resolution)
                .map(|i| {
                    let t = PI * f64::from(i) / f64::from(resolution);
                    vec![t.cos(), t.sin()]
                })
                .collect()
        }
        3 => {
            if resolution < 5 {
                return Err(PlankError::InvalidArgument(format!(
                    "sphere grid needs subdivision level at least 5, got {resolution}"
                )));
            }
            icosphere(resolution)
                .into_iter()
                .map(|p: Vector3<f64>| vec![p.x, p.y, p.z])
                .collect()
        }
        d => {
            return Err(PlankError::Unsupported(format!(
                "grid oracle supports d <= 3, got d = {d}; use witness::maximize_product"
            )))
        }
    };
    let values: Vec<f64> = points.par_iter().map(|x| min_margin(vs, x)).collect();
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    let spacing = match vs.dim() {
        1 => 0.0,
        2 => PI / f64::from(resolution),
        _ => ICOSAHEDRON_EDGE / f64::from(1u32 << resolution),
    };
    Ok(OracleResult {
        value: values[best],
        argument: points[best].clone(),
        method: OracleMethod::Grid,
        resolution: spacing,
    })
}

/// Exact optimum for lines through the origin at the given angles. The margin
/// of direction `t` is `sin` of its angular distance to the nearest line
/// normal, so the optimum sits at a line direction or at an angle bisector of
/// two circularly consecutive lines; all of them are evaluated.
pub fn analytic_2d(angles: &[f64]) -> Result<OracleResult> {
    if angles.is_empty() {
        return Err(PlankError::InvalidArgument("no angles given".into()));
    }
    let mut sorted: Vec<f64> = angles.iter().map(|a| a.rem_euclid(PI)).collect();
    sorted.sort_by(f64::total_cmp);
    let mut candidates = sorted.clone();
    for (i, a) in sorted.iter().enumerate() {
        let next = if i + 1 < sorted.len() { sorted[i + 1] } else { sorted[0] + PI };
        let mid = 0.5 * (a + next);
        candidates.push(mid);
        candidates.push(mid + 0.5 * PI);
    }
    let margin = |t: f64| {
        sorted
            .iter()
            .map(|a| (t - a).cos().abs())
            .fold(f64::INFINITY, f64::min)
    };
    let mut best = candidates[0];
    let mut value = margin(best);
    for &c in &candidates[1..] {
        let m = margin(c);
        if m > value {
            value = m;
            best = c;
        }
    }
    Ok(OracleResult {
        value,
        argument: vec![best.cos(), best.sin()],
        method: OracleMethod::Analytic2d,
        resolution: 0.0,
    })
}

/// [`analytic_2d`] on the line angles of a planar vector set.
pub fn analytic_2d_vectors(vs: &UnitVectorSet) -> Result<OracleResult> {
    if vs.dim() != 2 {
        return Err(PlankError::InvalidArgument(format!(
            "analytic oracle needs d = 2, got d = {}",
            vs.dim()
        )));
    }
    let angles: Vec<f64> = vs
        .matrix()
        .row_iter()
        .map(|r| r[1].atan2(r[0]))
        .collect();
    analytic_2d(&angles)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BangResult {
    pub pattern: SignPattern,
    /// `eps_j (H eps)_j`.
    pub values: Vec<f64>,
    pub min_value: f64,
    /// `min_value >= 1/n`.
    pub satisfied: bool,
}

/// Largest size accepted by [`bang_sign_search`].
pub const BANG_MAX_N: usize = 20;

/// Exhaustive search over sign vectors (first sign fixed to `+`, Gray code
/// order) for the largest `min_j eps_j (H eps)_j`.
pub fn bang_sign_search(h: &GramMatrix) -> Result<BangResult> {
    let n = h.n();
    if n == 0 || n > BANG_MAX_N {
        return Err(PlankError::InvalidArgument(format!(
            "sign search supports 1 <= n <= {BANG_MAX_N}, got {n}"
        )));
    }
    let hm = h.matrix();
    let mut eps = vec![1.0f64; n];
    let mut he: Vec<f64> = (0..n).map(|j| hm.row(j).sum()).collect();
    let score = |eps: &[f64], he: &[f64]| {
        eps.iter()
            .zip(he)
            .map(|(e, x)| e * x)
            .fold(f64::INFINITY, f64::min)
    };
    let mut best_eps = eps.clone();
    let mut best = score(&eps, &he);
    for step in 1u64..(1u64 << (n - 1)) {
        // Gray code: flip coordinate 1 + (number of trailing zeros)
        let j = 1 + step.trailing_zeros() as usize;
        let old = eps[j];
        eps[j] = -old;
        for (i, x) in he.iter_mut().enumerate() {
            *x -= 2.0 * old * hm[(i, j)];
        }
        let s = score(&eps, &he);
        if s > best {
            best = s;
            best_eps.copy_from_slice(&eps);
        }
    }
    let e = DVector::from_column_slice(&best_eps);
    let he = hm * &e;
    let values: Vec<f64> = (0..n).map(|j| e[j] * he[j]).collect();
    let min_value = values.iter().copied().fold(f64::INFINITY, f64::min);
    let pattern = SignPattern::of(&e).expect("signs are nonzero");
    Ok(BangResult {
        pattern,
        values,
        min_value,
        satisfied: min_value >= 1.0 / n as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadrantCheck {
    pub pattern: SignPattern,
    pub oracle_present: bool,
    pub solver_present: bool,
    /// `sum ln|w|` on `w' H w = n`, when present.
    pub oracle_value: Option<f64>,
    pub solver_value: Option<f64>,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossCheckReport {
    pub n: usize,
    pub quadrants: Vec<QuadrantCheck>,
    pub agreements: usize,
    pub mismatches: usize,
}

/// Largest size accepted by [`cross_check_enumeration`].
pub const CROSS_CHECK_MAX_N: usize = 12;

/// For each orthant, maximizes `sum ln|w|` on `w' H w = n` by multi-start
/// gradient ascent in log coordinates and compares with
/// [`inverse_eigen::enumerate_all`].
pub fn cross_check_enumeration(h: &GramMatrix, cfg: &Config) -> Result<CrossCheckReport> {
    let n = h.n();
    if n == 0 || n > CROSS_CHECK_MAX_N {
        return Err(PlankError::InvalidArgument(format!(
            "cross-check supports 1 <= n <= {CROSS_CHECK_MAX_N}, got {n}"
        )));
    }
    let solver = inverse_eigen::enumerate_all(h, cfg)?;
    let hm = h.matrix();
    let quadrants: Vec<QuadrantCheck> = (0..1u64 << n)
        .into_par_iter()
        .map(|idx| {
            let q = SignPattern::from_index(n, idx);
            let oracle = log_ascent_multistart(hm, &q, cfg.seed ^ idx);
            let solved = solver.iter().find(|s| s.quadrant == q);
            let oracle_value = oracle.as_ref().map(|w| w.iter().map(|x| x.abs().ln()).sum::<f64>());
            let solver_value = solved.map(|s| s.log_abs_product());
            let agree = match (&oracle, solved) {
                (None, None) => true,
                (Some(w), Some(s)) => {
                    let scale = 1.0 + s.linf();
                    (&s.w - w).amax() <= 1e-6 * scale
                        && (oracle_value.unwrap() - solver_value.unwrap()).abs() <= 1e-6
                }
                _ => false,
            };
            QuadrantCheck {
                pattern: q,
                oracle_present: oracle.is_some(),
                solver_present: solved.is_some(),
                oracle_value,
                solver_value,
                agree,
            }
        })
        .collect();
    let agreements = quadrants.iter().filter(|c| c.agree).count();
    Ok(CrossCheckReport {
        n,
        mismatches: quadrants.len() - agreements,
        agreements,
        quadrants,
    })
}

/// Best of several ascents; `None` when the orthant looks unbounded.
fn log_ascent_multistart(h: &DMatrix<f64>, q: &SignPattern, seed: u64) -> Option<DVector<f64>> {
    let n = q.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = vec![DVector::zeros(n)];
    for _ in 0..2 {
        starts.push(DVector::from_fn(n, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            0.5 * z
        }));
    }
    let mut best: Option<(f64, DVector<f64>)> = None;
    for y in starts {
        let (value, w) = log_ascent(h, q, y)?;
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, w));
        }
    }
    best.map(|(_, w)| w)
}

/// Damped Newton ascent on the concave function
/// `phi(y) = sum y - (n/2) ln(w' H w)`, `w = q * exp(y)`, whose Hessian is
/// singular only along the shift direction `1`. Returns `phi` and the
/// maximizer rescaled onto `w' H w = n`; `None` if the ascent escapes (spread
/// of `y` beyond 30, or `w' H w` collapsing) or stalls.
fn log_ascent(h: &DMatrix<f64>, q: &SignPattern, mut y: DVector<f64>) -> Option<(f64, DVector<f64>)> {
    let n = y.len();
    let nf = n as f64;
    let signs = q.to_vector();
    let point = |y: &DVector<f64>| signs.component_mul(&y.map(f64::exp));
    let eval = |y: &DVector<f64>| -> Option<(f64, DVector<f64>)> {
        let w = point(y);
        let hw = h * &w;
        let form = w.dot(&hw);
        if form.is_nan() || form <= 1e-13 * w.norm_squared() {
            return None;
        }
        let phi = y.sum() - 0.5 * nf * form.ln();
        let grad = DVector::from_element(n, 1.0) - w.component_mul(&hw) * (nf / form);
        Some((phi, grad))
    };
    let (mut phi, mut grad) = eval(&y)?;
    for _ in 0..500 {
        if grad.amax() <= 1e-12 {
            break;
        }
        let w = point(&y);
        let hw = h * &w;
        let form = w.dot(&hw);
        let gf = w.component_mul(&hw) * 2.0;
        let mut hf = DMatrix::from_fn(n, n, |i, j| 2.0 * w[i] * h[(i, j)] * w[j]);
        for i in 0..n {
            hf[(i, i)] += gf[i];
        }
        // -Hess(phi), plus 1 1'/n to fix the shift direction
        let neg_hess = (hf / form - &gf * gf.transpose() / (form * form)) * (0.5 * nf)
            + DMatrix::from_element(n, n, 1.0 / nf);
        let dir = match neg_hess.clone().cholesky() {
            Some(c) => c.solve(&grad),
            None => neg_hess.lu().solve(&grad).unwrap_or_else(|| grad.clone()),
        };
        let dir = if dir.dot(&grad) > 0.0 { dir } else { grad.clone() };
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand = &y + &dir * t;
            if let Some((p, g)) = eval(&cand) {
                let rise = p >= phi + 1e-4 * t * dir.dot(&grad);
                let flat = (p - phi).abs() <= 1e-13 * (1.0 + phi.abs()) && g.amax() < grad.amax();
                if rise || flat {
                    accepted = Some((cand, p, g));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((cand, p, g)) = accepted else { break };
        let mean = cand.mean();
        y = cand.add_scalar(-mean);
        phi = p;
        grad = g;
        if y.max() - y.min() > 30.0 {
            return None;
        }
    }
    if grad.amax() > 1e-9 {
        return None;
    }
    let w = point(&y);
    let form = w.dot(&(h * &w));
    let w = w * (nf / form).sqrt();
    Some((phi, w))
}
