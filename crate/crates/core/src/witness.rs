//! Witness vectors `v` with `||v|| = sqrt(n)` and `|<v_k, v>| >= sqrt(n) sin(pi/2n)`,
//! and the conjugated matrix `M = diag(w) H diag(w)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Config, Tolerances};
use crate::error::{PlankError, Result};
use crate::geom::{gram, GramMatrix, SignPattern, UnitVectorSet};
use crate::inverse_eigen::{self, MAX_ENUMERATION_N};
use crate::linalg::{self, max_abs};

/// Slack on `min_margin >= sqrt(n) sin(pi / 2n)`.
pub const CERTIFY_TOL: f64 = 1e-9;

/// Which construction produced a witness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessPath {
    /// `w` from the dual maximization through `H^{-1}`.
    Dual,
    /// Multi-start maximization of `prod |<v_k, v>|` on the sphere.
    Direct,
    /// Best product over all inverse eigenvectors of a singular `H`.
    Enumerated,
    /// Built from a caller-supplied inverse eigenvector.
    FromW,
}

impl fmt::Display for WitnessPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Dual => "dual",
            Self::Direct => "direct",
            Self::Enumerated => "enumerated",
            Self::FromW => "from_w",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessResult {
    #[serde(serialize_with = "crate::io::ser_dvector")]
    pub v: DVector<f64>,
    /// `|<v_k, v>|` for each `k`.
    #[serde(serialize_with = "crate::io::ser_dvector")]
    pub margins: DVector<f64>,
    pub min_margin: f64,
    /// `sqrt(n) sin(pi / 2n)`.
    pub bound: f64,
    pub certified: bool,
    /// `w_k = 1 / <v_k, v>`.
    #[serde(serialize_with = "crate::io::ser_dvector")]
    pub w: DVector<f64>,
    /// `min_margin / sqrt(n)`, the margin of the unit witness `v / sqrt(n)`.
    pub unit_min_margin: f64,
    /// `sin(pi / 2n)`.
    pub unit_bound: f64,
    /// `||v - sum_k v_k / <v_k, v>||`.
    pub stationarity_residual: f64,
    pub path: WitnessPath,
}

impl WitnessResult {
    fn build(vs: &UnitVectorSet, mut v: DVector<f64>, path: WitnessPath) -> Self {
        if let Some(first) = v.iter().find(|x| **x != 0.0) {
            if *first < 0.0 {
                v = -v;
            }
        }
        let n = vs.len() as f64;
        let inner = vs.inner_products(&v);
        let margins = inner.abs();
        let min_margin = margins.min();
        let bound = n.sqrt() * (PI / (2.0 * n)).sin();
        let w = linalg::componentwise_inverse(&inner);
        let stationarity_residual = (&v - vs.matrix().transpose() * &w).norm();
        Self {
            margins,
            min_margin,
            bound,
            certified: min_margin >= bound - CERTIFY_TOL,
            w,
            unit_min_margin: min_margin / n.sqrt(),
            unit_bound: (PI / (2.0 * n)).sin(),
            stationarity_residual,
            v,
            path,
        }
    }

    pub fn n(&self) -> usize {
        self.margins.len()
    }
}

/// Direct construction: multi-start maximization of `sum_k ln|<v_k, v>|` over
/// the sphere of radius `sqrt(n)`.
///
/// Starts are the best coordinate direction (if no inner product vanishes
/// there) followed by `8n` normalized Gaussian vectors. Each start takes a few
/// projected ascent steps, then Newton polishes the stationarity equation
/// `v = sum_k v_k / <v_k, v>` inside its sign cell, where it is the gradient
/// of the convex energy `||v||^2 / 2 - sum_k ln|<v_k, v>|`. Cells are merged up
/// to global sign and the largest product wins, ties going to the earliest
/// start. Never forms `H^{-1}`, so singular Gram matrices are fine.
pub fn maximize_product(vs: &UnitVectorSet, cfg: &Config) -> Result<WitnessResult> {
    let n = vs.len();
    let d = vs.dim();
    let radius = (n as f64).sqrt();
    let vmat = vs.matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut gaussian = |len: usize| {
        DVector::from_fn(len, |_, _| StandardNormal.sample(&mut rng))
    };

    let mut starts: Vec<DVector<f64>> = Vec::with_capacity(8 * n + 1);
    let coordinate = (0..d)
        .map(|j| {
            let col = vmat.column(j);
            let smallest = col.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
            (j, smallest, col.iter().map(|x| x.abs().ln()).sum::<f64>())
        })
        .filter(|&(_, smallest, _)| smallest > 1e-12)
        .fold(None::<(usize, f64)>, |best, (j, _, value)| match best {
            Some((_, b)) if b >= value => best,
            _ => Some((j, value)),
        });
    if let Some((j, _)) = coordinate {
        let mut e = DVector::zeros(d);
        e[j] = 1.0;
        starts.push(e);
    }
    for _ in 0..8 * n {
        let mut x: DVector<f64> = gaussian(d);
        let mut tries = 0;
        while !usable_start(vmat, &x) && tries < 20 {
            x += gaussian(d) * 1e-3;
            tries += 1;
        }
        if usable_start(vmat, &x) {
            starts.push(x);
        }
    }
    if starts.is_empty() {
        return Err(PlankError::NonConvergence {
            quadrant: "(no usable start)".into(),
            residual: f64::NAN,
            iterations: 0,
        });
    }

    // Canonical sign cell -> (first start index, ascended point).
    let mut cells: BTreeMap<SignPattern, (usize, DVector<f64>)> = BTreeMap::new();
    for (idx, s) in starts.into_iter().enumerate() {
        let x = sphere_ascent(vmat, s.normalize() * radius, 20);
        let Some(cell) = SignPattern::of(&(vmat * &x)) else { continue };
        let canonical = cell.canonical();
        let x = if canonical == cell { x } else { -x };
        cells.entry(canonical).or_insert((idx, x));
    }
    let polished = cells
        .into_par_iter()
        .map(|(cell, (idx, x))| (idx, stationary_point(vmat, &cell, x, cfg)))
        .collect::<Vec<_>>();

    let mut best: Option<(usize, f64, DVector<f64>)> = None;
    for (idx, v) in polished.into_iter().filter_map(|(i, v)| v.map(|v| (i, v))) {
        let value: f64 = (vmat * &v).iter().map(|x| x.abs().ln()).sum();
        let better = match &best {
            None => true,
            Some((bi, bv, _)) => {
                let tie = (value - bv).abs() <= 1e-12 * (1.0 + bv.abs());
                if tie {
                    idx < *bi
                } else {
                    value > *bv
                }
            }
        };
        if better {
            best = Some((idx, value, v));
        }
    }
    let (_, _, v) = best.ok_or_else(|| PlankError::NonConvergence {
        quadrant: "(all starts failed)".into(),
        residual: f64::NAN,
        iterations: cfg.max_iterations,
    })?;
    Ok(WitnessResult::build(vs, v, WitnessPath::Direct))
}

fn usable_start(vmat: &DMatrix<f64>, x: &DVector<f64>) -> bool {
    x.norm() > 1e-12 && (vmat * x).iter().all(|p| p.abs() > 1e-12 * x.norm())
}

/// Projected gradient ascent of `sum ln|<v_k, x>|` on the sphere through `x`,
/// staying inside the sign cell of `x`.
fn sphere_ascent(vmat: &DMatrix<f64>, mut x: DVector<f64>, steps: usize) -> DVector<f64> {
    let radius = x.norm();
    let Some(cell) = SignPattern::of(&(vmat * &x)) else { return x };
    let objective = |y: &DVector<f64>| (vmat * y).iter().map(|p| p.abs().ln()).sum::<f64>();
    let mut step = 0.1;
    for _ in 0..steps {
        let grad = vmat.transpose() * linalg::componentwise_inverse(&(vmat * &x));
        let tangent = &grad - &x * (grad.dot(&x) / (radius * radius));
        if tangent.norm() < 1e-12 {
            break;
        }
        let f0 = objective(&x);
        let mut moved = false;
        for _ in 0..30 {
            let cand = (&x + &tangent * step).normalize() * radius;
            if cell.contains(&(vmat * &cand)) && objective(&cand) > f0 {
                x = cand;
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
    x
}

/// Newton on `v - V' (V v)^{-1} = 0` inside `cell`; `None` if it stalls above
/// the stationarity tolerance.
fn stationary_point(
    vmat: &DMatrix<f64>,
    cell: &SignPattern,
    mut v: DVector<f64>,
    cfg: &Config,
) -> Option<DVector<f64>> {
    let d = v.len();
    let energy = |y: &DVector<f64>| {
        0.5 * y.norm_squared() - (vmat * y).iter().map(|p| p.abs().ln()).sum::<f64>()
    };
    let gradient = |y: &DVector<f64>| y - vmat.transpose() * linalg::componentwise_inverse(&(vmat * y));
    let mut g = gradient(&v);
    for _ in 0..cfg.max_iterations {
        if g.norm() <= 1e-13 * (1.0 + v.norm()) {
            break;
        }
        let p = vmat * &v;
        let weights = DVector::from_iterator(p.len(), p.iter().map(|x| 1.0 / (x * x)));
        let jac = DMatrix::identity(d, d) + vmat.transpose() * DMatrix::from_diagonal(&weights) * vmat;
        let step = -linalg::spd_solve(&jac, &g)?;
        let e0 = energy(&v);
        let slope = g.dot(&step);
        let g0 = g.norm();
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..80 {
            let cand = &v + &step * t;
            if cell.contains(&(vmat * &cand)) {
                let e1 = energy(&cand);
                let armijo = e1 <= e0 + 1e-4 * t * slope;
                let flat = (e1 - e0).abs() <= 1e-13 * (1.0 + e0.abs());
                if armijo || flat {
                    let gc = gradient(&cand);
                    if armijo || gc.norm() < g0 {
                        v = cand;
                        g = gc;
                        accepted = true;
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (g.norm() <= 1e-10).then_some(v)
}

/// `v = sum_k w_k v_k` for an inverse eigenvector `w` of the Gram matrix.
pub fn witness_from_w(vs: &UnitVectorSet, w: &DVector<f64>) -> Result<WitnessResult> {
    let h = gram(vs);
    let r = max_abs(&inverse_eigen::residual(&h, w)?);
    if r > 1e-8 {
        return Err(PlankError::InvalidArgument(format!(
            "w is not an inverse eigenvector of the Gram matrix (residual {r:e})"
        )));
    }
    let v = vs.matrix().transpose() * w;
    Ok(WitnessResult::build(vs, v, WitnessPath::FromW))
}

/// Symmetric PSD matrix with `M 1 = 1`; built from an inverse eigenvector as
/// `m_jk = w_j H_jk w_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugatedMatrix {
    #[serde(serialize_with = "crate::io::ser_dmatrix")]
    entries: DMatrix<f64>,
}

impl ConjugatedMatrix {
    /// Validates symmetry, `M 1 = 1` (within 1e-9) and positive
    /// semidefiniteness.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 || entries.ncols() != n {
            return Err(PlankError::InvalidArgument("M must be square and non-empty".into()));
        }
        let scale = entries.amax().max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (entries[(i, j)] - entries[(j, i)]).abs() > 1e-12 * scale {
                    return Err(PlankError::InvalidArgument(format!(
                        "M is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        let m = Self {
            entries: linalg::symmetrize(&entries),
        };
        let err = m.row_sum_error();
        if err > 1e-9 {
            return Err(PlankError::InvalidArgument(format!(
                "row sums of M differ from 1 by {err:e}"
            )));
        }
        let lmin = linalg::min_eigenvalue(&m.entries);
        if lmin < -1e-10 * scale {
            return Err(PlankError::InvalidArgument(format!(
                "M is not positive semidefinite (smallest eigenvalue {lmin:e})"
            )));
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn diagonal(&self) -> DVector<f64> {
        self.entries.diagonal()
    }

    /// `||M 1 - 1||_inf`.
    pub fn row_sum_error(&self) -> f64 {
        self.entries
            .row_iter()
            .map(|r| (r.sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `x' M x`.
    pub fn quadratic_form(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.entries * x))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::sym_eigen(&self.entries).values
    }

    /// Eigenvector orthogonal to `1` with the largest eigenvalue, scaled onto
    /// the ellipsoid `x' M x = n`. `None` when `n < 2` or that eigenvalue
    /// vanishes.
    pub fn top_orthogonal_direction(&self) -> Option<DVector<f64>> {
        let n = self.n();
        if n < 2 {
            return None;
        }
        let ones = DVector::from_element(n, 1.0 / (n as f64).sqrt());
        let eig = linalg::sym_eigen(&self.entries);
        (0..n)
            .rev()
            .map(|i| eig.vectors.column(i).into_owned())
            .map(|x| &x - &ones * ones.dot(&x))
            .find(|x| x.norm() > 1e-6)
            .and_then(|x| {
                let form = self.quadratic_form(&x);
                (form > 1e-14).then(|| x * (n as f64 / form).sqrt())
            })
    }
}

/// `m_jk = w_j H_jk w_k`; requires `H w = w^{-1}` so that `M 1 = 1`.
pub fn build_m(h: &GramMatrix, w: &DVector<f64>) -> Result<ConjugatedMatrix> {
    let r = max_abs(&inverse_eigen::residual(h, w)?);
    if r > 1e-8 {
        return Err(PlankError::InvalidArgument(format!(
            "w is not an inverse eigenvector of H (residual {r:e}); M 1 = 1 would fail"
        )));
    }
    let n = h.n();
    let entries = DMatrix::from_fn(n, n, |j, k| w[j] * h.matrix()[(j, k)] * w[k]);
    ConjugatedMatrix::new(entries)
}

/// Spectral and diagonal bounds on `M`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MBoundReport {
    pub n: usize,
    pub row_sum_error: f64,
    pub lambda_max: f64,
    /// `lambda_max <= n - 1 + tol`.
    pub spectral_ok: bool,
    pub diag_min: f64,
    pub diag_max: f64,
    /// `1 / n`.
    pub diag_lower: f64,
    /// `csc^2(pi / 2n) / n`.
    pub diag_sharp_limit: f64,
    /// `(1 + (n - 1)^2) / n`.
    pub diag_weak_limit: f64,
    pub diag_lower_ok: bool,
    pub diag_sharp_ok: bool,
    pub diag_weak_ok: bool,
    /// `M 1 = 1` within 1e-9, so 1 is an eigenvalue with eigenvector `1`.
    pub unit_eigenvalue: bool,
}

impl MBoundReport {
    pub fn all_ok(&self) -> bool {
        self.spectral_ok
            && self.diag_lower_ok
            && self.diag_sharp_ok
            && self.diag_weak_ok
            && self.unit_eigenvalue
    }
}

/// Slack on the lower diagonal bound `m_kk >= 1/n`.
const DIAG_LOWER_SLACK: f64 = 1e-10;

/// `csc^2(pi / 2n) / n`, the sharp upper bound on the diagonal of `M`.
pub fn diag_sharp_limit(n: usize) -> f64 {
    let nf = n as f64;
    1.0 / (nf * (PI / (2.0 * nf)).sin().powi(2))
}

pub fn check_m_bounds(m: &ConjugatedMatrix, tol: &Tolerances) -> MBoundReport {
    let n = m.n();
    let nf = n as f64;
    let diag = m.diagonal();
    let lambda_max = linalg::max_eigenvalue(m.matrix());
    let row_sum_error = m.row_sum_error();
    let diag_sharp_limit = diag_sharp_limit(n);
    let diag_weak_limit = (1.0 + (nf - 1.0).powi(2)) / nf;
    MBoundReport {
        n,
        row_sum_error,
        lambda_max,
        spectral_ok: lambda_max <= nf - 1.0 + tol.bound,
        diag_min: diag.min(),
        diag_max: diag.max(),
        diag_lower: 1.0 / nf,
        diag_sharp_limit,
        diag_weak_limit,
        diag_lower_ok: diag.min() >= 1.0 / nf - DIAG_LOWER_SLACK,
        diag_sharp_ok: diag.max() <= diag_sharp_limit + tol.bound,
        diag_weak_ok: diag.max() <= diag_weak_limit + tol.bound,
        unit_eigenvalue: row_sum_error <= 1e-9,
    }
}

/// Full pipeline: Gram matrix, then the dual construction when `H` is
/// invertible, otherwise direct maximization (falling back to enumerating all
/// inverse eigenvectors if that is not certified). Errors if no path yields a
/// certified witness.
pub fn certify_zone_bound(vs: &UnitVectorSet, cfg: &Config) -> Result<WitnessResult> {
    let n = vs.len();
    let h = gram(vs);
    let mut result = if h.is_invertible(cfg.tol.kernel) {
        let sol = inverse_eigen::solve_dual(&h, cfg)?;
        let mut r = witness_from_w(vs, &sol.w)?;
        r.path = WitnessPath::Dual;
        r
    } else {
        maximize_product(vs, cfg)?
    };
    if !result.certified && n <= MAX_ENUMERATION_N {
        let all = inverse_eigen::enumerate_all(&h, cfg)?;
        if let Some(best) = all
            .iter()
            .min_by(|a, b| a.log_abs_product().total_cmp(&b.log_abs_product()))
        {
            let mut r = witness_from_w(vs, &best.w)?;
            r.path = WitnessPath::Enumerated;
            if r.min_margin > result.min_margin {
                result = r;
            }
        }
    }
    if result.certified {
        Ok(result)
    } else {
        Err(PlankError::Uncertified {
            best_margin: result.min_margin,
            bound: result.bound,
            path: result.path.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::extremal_configuration;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cfg() -> Config {
        Config::default()
    }

    fn dv(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn random_set(seed: u64, n: usize, d: usize) -> UnitVectorSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        UnitVectorSet::normalized(&rows).unwrap()
    }

    #[test]
    fn maximize_product_on_extremal_three() {
        let vs = extremal_configuration(3).unwrap();
        let r = maximize_product(&vs, &cfg()).unwrap();
        let r3 = 3f64.sqrt();
        assert_abs_diff_eq!(r.min_margin, r3 / 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(&r.v, &dv(&[r3, 0.0]), epsilon = 1e-10);
        assert!(r.certified);
        assert!(r.stationarity_residual <= 1e-9);
    }

    #[test]
    fn maximize_product_trivial_cases() {
        let one = UnitVectorSet::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let r = maximize_product(&one, &cfg()).unwrap();
        assert_abs_diff_eq!(&r.v, &dv(&[1.0, 0.0]), epsilon = 1e-12);
        assert_abs_diff_eq!(r.min_margin, 1.0, epsilon = 1e-12);

        let two = extremal_configuration(2).unwrap();
        let r = maximize_product(&two, &cfg()).unwrap();
        assert_abs_diff_eq!(r.v[0].abs(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r.v[1].abs(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r.min_margin, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r.bound, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn witness_from_w_examples() {
        let r3 = 3f64.sqrt();
        let vs = extremal_configuration(3).unwrap();
        let r = witness_from_w(&vs, &dv(&[1.0 / r3, 2.0 / r3, -2.0 / r3])).unwrap();
        assert_abs_diff_eq!(&r.v, &dv(&[r3, 0.0]), epsilon = 1e-12);
        assert_abs_diff_eq!(&r.margins, &dv(&[r3, r3 / 2.0, r3 / 2.0]), epsilon = 1e-12);

        let i2 = UnitVectorSet::new(DMatrix::identity(2, 2)).unwrap();
        let r = witness_from_w(&i2, &dv(&[1.0, 1.0])).unwrap();
        assert_eq!(r.v, dv(&[1.0, 1.0]));
        assert_eq!(r.margins, dv(&[1.0, 1.0]));

        let i3 = UnitVectorSet::new(DMatrix::identity(3, 3)).unwrap();
        let r = witness_from_w(&i3, &dv(&[1.0, -1.0, 1.0])).unwrap();
        assert_eq!(r.v, dv(&[1.0, -1.0, 1.0]));
        assert_eq!(r.margins, dv(&[1.0, 1.0, 1.0]));

        assert!(matches!(
            witness_from_w(&i2, &dv(&[2.0, 1.0])),
            Err(PlankError::InvalidArgument(_))
        ));
    }

    #[test]
    fn build_m_examples() {
        let i3 = GramMatrix::identity(3);
        let m = build_m(&i3, &dv(&[1.0, -1.0, 1.0])).unwrap();
        assert_eq!(m.matrix(), &DMatrix::identity(3, 3));
        let m = build_m(&GramMatrix::identity(2), &dv(&[1.0, -1.0])).unwrap();
        assert_eq!(m.matrix(), &DMatrix::identity(2, 2));

        let r3 = 3f64.sqrt();
        let h = gram(&extremal_configuration(3).unwrap());
        let m = build_m(&h, &dv(&[1.0 / r3, 2.0 / r3, -2.0 / r3])).unwrap();
        let t = 1.0 / 3.0;
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[t, t, t, t, 4.0 * t, -2.0 * t, t, -2.0 * t, 4.0 * t],
        );
        assert_abs_diff_eq!(m.matrix(), &expected, epsilon = 1e-14);
        assert!(build_m(&i3, &dv(&[2.0, 1.0, 1.0])).is_err());
    }

    #[test]
    fn m_bounds_on_extremal_three_are_tight() {
        let r3 = 3f64.sqrt();
        let h = gram(&extremal_configuration(3).unwrap());
        let m = build_m(&h, &dv(&[1.0 / r3, 2.0 / r3, -2.0 / r3])).unwrap();
        let rep = check_m_bounds(&m, &Tolerances::default());
        assert_abs_diff_eq!(rep.lambda_max, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.diag_max, 4.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.diag_sharp_limit, 4.0 / 3.0, epsilon = 1e-14);
        assert!(rep.all_ok());
        let ev = m.eigenvalues();
        assert_abs_diff_eq!(ev[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn m_bounds_on_identity() {
        for n in 2..8 {
            let m = ConjugatedMatrix::new(DMatrix::identity(n, n)).unwrap();
            let rep = check_m_bounds(&m, &Tolerances::default());
            assert!(rep.all_ok());
            assert_abs_diff_eq!(rep.lambda_max, 1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(diag_sharp_limit(2), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn certify_extremal_family_with_equality() {
        for n in 2..=12 {
            let vs = extremal_configuration(n).unwrap();
            let r = certify_zone_bound(&vs, &cfg()).unwrap();
            assert!(r.certified);
            assert_abs_diff_eq!(r.min_margin, r.bound, epsilon = 1e-9);
        }
        let one = extremal_configuration(1).unwrap();
        let r = certify_zone_bound(&one, &cfg()).unwrap();
        assert_eq!(r.min_margin, 1.0);
    }

    #[test]
    fn certify_uses_dual_when_invertible() {
        let r = certify_zone_bound(&random_set(3, 4, 4), &cfg()).unwrap();
        assert_eq!(r.path, WitnessPath::Dual);
        let r = certify_zone_bound(&random_set(3, 5, 2), &cfg()).unwrap();
        assert_ne!(r.path, WitnessPath::Dual);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn direct_stationary_points_are_inverse_eigenvectors(seed in 0u64..10_000, n in 2usize..7, d in 2usize..5) {
            let vs = random_set(seed, n, d);
            let r = maximize_product(&vs, &cfg()).unwrap();
            let h = gram(&vs);
            prop_assert!(max_abs(&inverse_eigen::residual(&h, &r.w).unwrap()) <= 1e-8);
            prop_assert!((r.v.norm_squared() - n as f64).abs() <= 1e-10);
            for k in 0..n {
                prop_assert!((r.margins[k] * r.w[k].abs() - 1.0).abs() <= 1e-9);
            }
        }

        #[test]
        fn margins_are_sign_invariant(seed in 0u64..10_000, n in 2usize..7) {
            let vs = random_set(seed, n, 3);
            let r = maximize_product(&vs, &cfg()).unwrap();
            prop_assert_eq!(vs.inner_products(&r.v).abs(), vs.inner_products(&-r.v.clone()).abs());
        }

        #[test]
        fn strong_bang_property(seed in 0u64..10_000, n in 2usize..7) {
            let vs = random_set(seed, n, n);
            let r = certify_zone_bound(&vs, &cfg()).unwrap();
            prop_assert!(r.unit_min_margin >= r.unit_bound - 1e-9);
            let m = build_m(&gram(&vs), &r.w).unwrap();
            prop_assert!(check_m_bounds(&m, &Tolerances::default()).spectral_ok);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
            for _ in 0..100 {
                let x: DVector<f64> = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
                let x = x.normalize();
                let combo = vs.matrix().transpose() * x.component_mul(&r.w);
                prop_assert!(combo.norm() <= (n as f64 - 1.0).sqrt() + 1e-8);
            }
        }

        #[test]
        fn dual_path_is_not_beaten_by_direct(seed in 0u64..10_000, n in 2usize..6) {
            let vs = random_set(seed, n, n);
            let dual = certify_zone_bound(&vs, &cfg()).unwrap();
            prop_assert_eq!(dual.path, WitnessPath::Dual);
            let direct = maximize_product(&vs, &cfg()).unwrap();
            prop_assert!(dual.min_margin >= direct.min_margin - 1e-7);
        }
    }
}
