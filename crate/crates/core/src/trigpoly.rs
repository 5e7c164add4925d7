//! Slice polynomials `T(theta) = prod_j (cos theta + a_j sin theta)` of a
//! conjugated matrix along ellipse slices through `1`, with Bernstein checks,
//! the `T - cos(n theta) = sin^2(theta) psi(theta)` decomposition, root
//! counting and the alpha-slice contradiction certificate.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PlankError, Result};
use crate::linalg;
use crate::witness::{diag_sharp_limit, ConjugatedMatrix};

/// `prod_j (cos theta + a_j sin theta)`; `T(0) = 1` by construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductTrigPoly {
    #[serde(serialize_with = "crate::io::ser_dvector")]
    slopes: DVector<f64>,
}

impl ProductTrigPoly {
    pub fn new(slopes: DVector<f64>) -> Self {
        Self { slopes }
    }

    pub fn from_slopes(slopes: &[f64]) -> Self {
        Self::new(DVector::from_column_slice(slopes))
    }

    /// Number of factors, an upper bound on the degree.
    pub fn n(&self) -> usize {
        self.slopes.len()
    }

    pub fn slopes(&self) -> &DVector<f64> {
        &self.slopes
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        self.slopes.iter().map(|a| c + a * s).product()
    }

    /// `(T, T', T'')` by multiplying second-order jets of the factors; valid
    /// at zeros of `T` as well.
    pub fn eval_derivatives(&self, theta: f64) -> (f64, f64, f64) {
        let (s, c) = theta.sin_cos();
        self.slopes.iter().fold((1.0, 0.0, 0.0), |(p0, p1, p2), a| {
            let f0 = c + a * s;
            let f1 = -s + a * c;
            let f2 = -f0;
            (p0 * f0, p0 * f1 + p1 * f0, p0 * f2 + 2.0 * p1 * f1 + p2 * f0)
        })
    }

    /// `T'/T` and `(T'' T - T'^2) / T^2` from the logarithmic derivative
    /// formulas. `None` where some factor is below `1e-8` in magnitude.
    pub fn log_derivatives(&self, theta: f64) -> Option<(f64, f64)> {
        let (s, c) = theta.sin_cos();
        let mut first = 0.0;
        let mut second = 0.0;
        for a in self.slopes.iter() {
            let f = c + a * s;
            if f.abs() < 1e-8 {
                return None;
            }
            first -= (s - a * c) / f;
            second -= (1.0 + a * a) / (f * f);
        }
        Some((first, second))
    }
}

/// `c_0 + sum_{m=1}^{n} (c_m cos m theta + s_m sin m theta)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourierForm {
    cos: Vec<f64>,
    /// `sin[0]` is always zero.
    sin: Vec<f64>,
}

impl FourierForm {
    /// `cos` holds `c_0..c_n`, `sin` holds `s_1..s_n`.
    pub fn new(cos: Vec<f64>, sin: Vec<f64>) -> Result<Self> {
        if cos.is_empty() || sin.len() + 1 != cos.len() {
            return Err(PlankError::InvalidArgument(format!(
                "expected n+1 cosine and n sine coefficients, got {} and {}",
                cos.len(),
                sin.len()
            )));
        }
        let mut s = vec![0.0];
        s.extend(sin);
        Ok(Self { cos, sin: s })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            cos: vec![0.0; n + 1],
            sin: vec![0.0; n + 1],
        }
    }

    /// `cos(n theta)`.
    pub fn cos_n(n: usize) -> Self {
        let mut f = Self::zero(n);
        f.cos[n] = 1.0;
        f
    }

    /// Nominal degree (number of stored harmonics).
    pub fn degree_bound(&self) -> usize {
        self.cos.len() - 1
    }

    /// Largest `m` with a coefficient above `tol` in magnitude; `None` for the
    /// zero polynomial.
    pub fn degree(&self, tol: f64) -> Option<usize> {
        (0..self.cos.len())
            .rev()
            .find(|&m| self.cos[m].abs() > tol || self.sin[m].abs() > tol)
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.cos
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        &self.sin[1..]
    }

    pub fn max_coefficient(&self) -> f64 {
        self.cos
            .iter()
            .chain(&self.sin)
            .fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let mut acc = self.cos[0];
        for m in 1..self.cos.len() {
            let (s, c) = (m as f64 * theta).sin_cos();
            acc += self.cos[m] * c + self.sin[m] * s;
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        let n = self.degree_bound();
        let mut d = Self::zero(n);
        for m in 1..=n {
            let mf = m as f64;
            d.cos[m] = mf * self.sin[m];
            d.sin[m] = -mf * self.cos[m];
        }
        d
    }

    /// `self - other`, padded to the larger degree.
    pub fn sub(&self, other: &Self) -> Self {
        let n = self.degree_bound().max(other.degree_bound());
        let mut out = Self::zero(n);
        for m in 0..=n {
            out.cos[m] = self.cos.get(m).unwrap_or(&0.0) - other.cos.get(m).unwrap_or(&0.0);
            out.sin[m] = self.sin.get(m).unwrap_or(&0.0) - other.sin.get(m).unwrap_or(&0.0);
        }
        out
    }

    /// Keeps harmonics `0..=n`.
    pub fn truncate(&self, n: usize) -> Self {
        let keep = n.min(self.degree_bound());
        let mut out = Self::zero(n);
        out.cos[..=keep].copy_from_slice(&self.cos[..=keep]);
        out.sin[..=keep].copy_from_slice(&self.sin[..=keep]);
        out
    }

    /// `sin^2(theta) * self`, of degree `degree_bound + 2`.
    pub fn times_sin_squared(&self) -> Self {
        let n = self.degree_bound();
        let mut out = Self::zero(n + 2);
        for k in 0..=n {
            // sin^2 = 1/2 - cos(2 theta)/2
            out.cos[k] += 0.5 * self.cos[k];
            out.cos[k + 2] -= 0.25 * self.cos[k];
            out.cos[k.abs_diff(2)] -= 0.25 * self.cos[k];
            if k > 0 {
                out.sin[k] += 0.5 * self.sin[k];
                out.sin[k + 2] -= 0.25 * self.sin[k];
                match k {
                    1 => out.sin[1] += 0.25 * self.sin[1],
                    2 => {}
                    _ => out.sin[k - 2] -= 0.25 * self.sin[k],
                }
            }
        }
        out
    }

    fn sample(&self, grid: usize) -> Vec<f64> {
        (0..grid)
            .into_par_iter()
            .map(|i| self.eval(TAU * i as f64 / grid as f64))
            .collect()
    }
}

/// Slopes `a = M v`, so that `T(theta) = prod_j (M v_theta)_j` with
/// `v_theta = cos(theta) 1 + sin(theta) v` (using `M 1 = 1`).
pub fn slice_poly(m: &ConjugatedMatrix, v: &DVector<f64>) -> Result<ProductTrigPoly> {
    if v.len() != m.n() {
        return Err(PlankError::InvalidArgument(format!(
            "slice vector has length {}, expected {}",
            v.len(),
            m.n()
        )));
    }
    Ok(ProductTrigPoly::new(m.matrix() * v))
}

/// `v_theta = cos(theta) 1 + sin(theta) v`.
pub fn slice_point(v: &DVector<f64>, theta: f64) -> DVector<f64> {
    let (s, c) = theta.sin_cos();
    v.map(|x| c + s * x)
}

/// Projects `x` onto the complement of `1` and scales it onto `x' M x = n`.
/// `None` when the projection is (numerically) in the kernel of `M`.
pub fn ellipsoid_direction(m: &ConjugatedMatrix, x: &DVector<f64>) -> Option<DVector<f64>> {
    let n = m.n() as f64;
    let mean = x.mean();
    let p = x.map(|t| t - mean);
    let form = m.quadratic_form(&p);
    (form > 1e-14 * p.norm_squared().max(1e-300)).then(|| p * (n / form).sqrt())
}

/// Exact expansion by convolution in the basis `e^{i m theta}`, using
/// `cos + a sin = ((1 - ia)/2) e^{i theta} + ((1 + ia)/2) e^{-i theta}`.
pub fn to_fourier(t: &ProductTrigPoly) -> FourierForm {
    let n = t.n();
    // index m + n holds the coefficient of e^{i m theta}
    let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * n + 1];
    coeffs[n] = Complex64::new(1.0, 0.0);
    for (j, a) in t.slopes().iter().enumerate() {
        let up = Complex64::new(0.5, -0.5 * a);
        let down = Complex64::new(0.5, 0.5 * a);
        let mut next = vec![Complex64::new(0.0, 0.0); 2 * n + 1];
        for m in (n - j)..=(n + j) {
            next[m + 1] += coeffs[m] * up;
            next[m - 1] += coeffs[m] * down;
        }
        coeffs = next;
    }
    let mut f = FourierForm::zero(n);
    f.cos[0] = coeffs[n].re;
    for m in 1..=n {
        f.cos[m] = 2.0 * coeffs[n + m].re;
        f.sin[m] = -2.0 * coeffs[n + m].im;
    }
    f
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BernsteinReport {
    pub degree: usize,
    pub grid: usize,
    pub sup_t: f64,
    pub sup_dt: f64,
    pub sup_d2t: f64,
    /// `sup|T'| <= n sup|T| + 1e-9`.
    pub first_ok: bool,
    /// `sup|T''| <= n^2 sup|T| + 1e-9`.
    pub second_ok: bool,
}

impl BernsteinReport {
    pub fn ok(&self) -> bool {
        self.first_ok && self.second_ok
    }
}

/// Sampled Bernstein inequalities for `F` and its derivative, with `n` the
/// nominal degree of `F`. Requires `grid >= 1024 n`.
pub fn bernstein_check(f: &FourierForm, grid: usize) -> Result<BernsteinReport> {
    let n = f.degree_bound();
    if grid < 1024 * n.max(1) {
        return Err(PlankError::InvalidArgument(format!(
            "Bernstein grid needs at least {} points, got {grid}",
            1024 * n.max(1)
        )));
    }
    let d1 = f.derivative();
    let d2 = d1.derivative();
    let sup = |g: &FourierForm| g.sample(grid).into_iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let sup_t = sup(f);
    let sup_dt = sup(&d1);
    let sup_d2t = sup(&d2);
    let nf = n as f64;
    Ok(BernsteinReport {
        degree: n,
        grid,
        sup_t,
        sup_dt,
        sup_d2t,
        first_ok: sup_dt <= nf * sup_t + 1e-9,
        second_ok: sup_d2t <= nf * nf * sup_t + 1e-9,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QDecomposition {
    /// `psi`, truncated to degree `n - 2`.
    pub psi: FourierForm,
    /// Largest `|psi|` coefficient above degree `n - 2` in the unconstrained
    /// solve.
    pub high_coefficient_max: f64,
    /// `max |Q - sin^2 psi|` on 4096 grid points, using the truncated `psi`.
    pub residual: f64,
    /// `Q = T - cos(n theta)`.
    pub q: FourierForm,
}

impl QDecomposition {
    pub fn ok(&self) -> bool {
        self.residual <= 1e-10 && self.high_coefficient_max <= 1e-10
    }
}

/// Grid size for the decomposition residual.
pub const Q_RESIDUAL_GRID: usize = 4096;

/// Solves `T - cos(n theta) = sin^2(theta) psi(theta)` by least squares in
/// coefficient space, with `psi` allowed up to degree `n`.
pub fn q_decompose(f: &FourierForm, n: usize) -> Result<QDecomposition> {
    if n < 2 {
        return Err(PlankError::InvalidArgument("decomposition needs n >= 2".into()));
    }
    if f.degree_bound() > n {
        return Err(PlankError::InvalidArgument(format!(
            "polynomial has degree bound {} > n = {n}",
            f.degree_bound()
        )));
    }
    let scale = 1.0 + f.max_coefficient();
    let t0 = f.eval(0.0);
    if (t0 - 1.0).abs() > 1e-10 * scale {
        return Err(PlankError::InvalidArgument(format!("T(0) = {t0} is not 1")));
    }
    let dt0 = f.derivative().eval(0.0);
    if dt0.abs() > 1e-9 * scale {
        return Err(PlankError::InvalidArgument(format!(
            "T'(0) = {dt0:e} is not zero; sin^2 does not divide T - cos(n theta)"
        )));
    }
    let q = f.sub(&FourierForm::cos_n(n));

    // Columns: psi cos 0..=n, then psi sin 1..=n. Rows: product cos 0..=n+2,
    // then product sin 1..=n+2.
    let cols = 2 * n + 1;
    let rows = 2 * n + 5;
    let mut a = DMatrix::zeros(rows, cols);
    for col in 0..cols {
        let mut basis = FourierForm::zero(n);
        if col <= n {
            basis.cos[col] = 1.0;
        } else {
            basis.sin[col - n] = 1.0;
        }
        let prod = basis.times_sin_squared();
        for m in 0..=n + 2 {
            a[(m, col)] = prod.cos[m];
        }
        for m in 1..=n + 2 {
            a[(n + 2 + m, col)] = prod.sin[m];
        }
    }
    let padded = q.truncate(n + 2);
    let b = DVector::from_fn(rows, |r, _| {
        if r <= n + 2 {
            padded.cos[r]
        } else {
            padded.sin[r - n - 2]
        }
    });
    let x = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| PlankError::InvalidArgument(format!("least squares failed: {e}")))?;
    let mut full = FourierForm::zero(n);
    full.cos.copy_from_slice(&x.as_slice()[..=n]);
    full.sin[1..].copy_from_slice(&x.as_slice()[n + 1..]);
    let high_coefficient_max = (n - 1..=n)
        .map(|m| full.cos[m].abs().max(full.sin[m].abs()))
        .fold(0.0, f64::max);
    let psi = full.truncate(n - 2);
    let fit = psi.times_sin_squared();
    let residual = (0..Q_RESIDUAL_GRID)
        .into_par_iter()
        .map(|i| {
            let theta = TAU * i as f64 / Q_RESIDUAL_GRID as f64;
            (q.eval(theta) - fit.eval(theta)).abs()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::max);
    Ok(QDecomposition {
        psi,
        high_coefficient_max,
        residual,
        q,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootCount {
    pub count: usize,
    /// All coefficients below 1e-12.
    pub identically_zero: bool,
    /// Bisection-refined sign change locations in `[0, 2 pi)`.
    pub roots: Vec<f64>,
}

/// Sign changes of `F` around the circle on a uniform grid, skipping samples
/// with `|F| < 1e-12`. Requires `grid >= 4096 n`.
pub fn count_roots(f: &FourierForm, grid: usize) -> Result<RootCount> {
    let n = f.degree_bound().max(1);
    if grid < 4096 * n {
        return Err(PlankError::InvalidArgument(format!(
            "root grid needs at least {} points, got {grid}",
            4096 * n
        )));
    }
    if f.max_coefficient() < 1e-12 {
        return Ok(RootCount {
            count: 0,
            identically_zero: true,
            roots: Vec::new(),
        });
    }
    let step = TAU / grid as f64;
    let samples = f.sample(grid);
    let nonzero: Vec<(usize, f64)> = samples
        .into_iter()
        .enumerate()
        .filter(|(_, x)| x.abs() >= 1e-12)
        .collect();
    let mut roots = Vec::new();
    for (idx, &(i, x)) in nonzero.iter().enumerate() {
        let (j, y) = nonzero[(idx + 1) % nonzero.len()];
        if x.signum() == y.signum() {
            continue;
        }
        let mut lo = i as f64 * step;
        let mut hi = if j > i { j as f64 * step } else { j as f64 * step + TAU };
        let mut flo = x;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let fm = f.eval(mid);
            if fm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        roots.push((0.5 * (lo + hi)).rem_euclid(TAU));
    }
    roots.sort_by(f64::total_cmp);
    Ok(RootCount {
        count: roots.len(),
        identically_zero: false,
        roots,
    })
}

/// The shrunken slice through `1` and `-sqrt(alpha) v_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaSlice {
    pub k: usize,
    pub alpha: f64,
    #[serde(serialize_with = "crate::io::ser_dvector")]
    pub v_k: DVector<f64>,
    #[serde(serialize_with = "crate::io::ser_dvector")]
    pub v_k_alpha: DVector<f64>,
    pub poly: ProductTrigPoly,
    /// Root of the `k`-th factor in `(0, pi)`.
    pub root_theta: f64,
}

impl AlphaSlice {
    /// `v_theta' M v_theta` for the shrunken slice, computed directly.
    pub fn quadratic_form(&self, m: &ConjugatedMatrix, theta: f64) -> f64 {
        m.quadratic_form(&slice_point(&self.v_k_alpha, theta))
    }
}

/// `v_k = (n e_k - 1) / sqrt(n m_kk - 1)`, which lies on `x' M x = n` and is
/// orthogonal to `1`.
pub fn diagonal_direction(m: &ConjugatedMatrix, k: usize) -> Result<DVector<f64>> {
    let n = m.n();
    if k >= n {
        return Err(PlankError::InvalidArgument(format!("index {k} out of range for n = {n}")));
    }
    let denom = n as f64 * m.matrix()[(k, k)] - 1.0;
    if denom <= 1e-14 {
        return Err(PlankError::Precondition(format!(
            "n m_kk - 1 = {denom:e} must be positive"
        )));
    }
    let mut v = DVector::from_element(n, -1.0);
    v[k] += n as f64;
    Ok(v / denom.sqrt())
}

/// Requires `m_kk > csc^2(pi/2n)/n`, which is exactly `alpha < 1`.
pub fn alpha_slice(m: &ConjugatedMatrix, k: usize) -> Result<AlphaSlice> {
    let n = m.n();
    if n < 2 {
        return Err(PlankError::InvalidArgument("alpha slice needs n >= 2".into()));
    }
    if k >= n {
        return Err(PlankError::InvalidArgument(format!("index {k} out of range for n = {n}")));
    }
    let threshold = diag_sharp_limit(n);
    let mkk = m.matrix()[(k, k)];
    if mkk <= threshold {
        return Err(PlankError::Precondition(format!(
            "m_kk = {mkk} does not exceed the threshold csc^2(pi/2n)/n = {threshold}"
        )));
    }
    let lmin = linalg::min_eigenvalue(m.matrix());
    if lmin <= 1e-12 {
        return Err(PlankError::Precondition(format!(
            "M is not invertible (smallest eigenvalue {lmin:e})"
        )));
    }
    let nf = n as f64;
    let cot = 1.0 / (PI / (2.0 * nf)).tan();
    let alpha = cot * cot / (nf * mkk - 1.0);
    let v_k = diagonal_direction(m, k)?;
    let v_k_alpha = &v_k * (-alpha.sqrt());
    let poly = slice_poly(m, &v_k_alpha)?;
    let root_theta = 1f64.atan2(-poly.slopes()[k]);
    Ok(AlphaSlice {
        k,
        alpha,
        v_k,
        v_k_alpha,
        poly,
        root_theta,
    })
}

/// A vector `b` with `b' M b = n` and `prod |(M b)_j| > 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContradictionCertificate {
    pub k: usize,
    pub alpha: f64,
    pub theta: f64,
    /// `T(theta)` on the shrunken slice.
    pub t_value: f64,
    /// `v_theta' M v_theta` before rescaling.
    pub slice_form: f64,
    /// `sqrt(n / slice_form)`.
    pub scale: f64,
    #[serde(serialize_with = "crate::io::ser_dvector")]
    pub b: DVector<f64>,
    pub b_form: f64,
    /// `prod |(M b)_j|`.
    pub product: f64,
}

/// Grid points per interval in [`contradiction_search`].
pub const CONTRADICTION_GRID: usize = 50_000;

/// Searches `[pi/n, (n-1)pi/n] U [(n+1)pi/n, (2n-1)pi/n]` for the largest
/// `|T|` on the alpha slice (uniform grid, first index wins ties, then
/// golden-section refinement). Errors with `NoContradiction` if `|T| < 1`
/// throughout.
pub fn contradiction_search(m: &ConjugatedMatrix, k: usize) -> Result<ContradictionCertificate> {
    let slice = alpha_slice(m, k)?;
    let n = m.n();
    let nf = n as f64;
    let intervals = [
        (PI / nf, (nf - 1.0) * PI / nf),
        ((nf + 1.0) * PI / nf, (2.0 * nf - 1.0) * PI / nf),
    ];
    let grid: Vec<(f64, f64, f64)> = intervals
        .iter()
        .flat_map(|&(lo, hi)| {
            (0..CONTRADICTION_GRID).map(move |i| {
                let t = i as f64 / (CONTRADICTION_GRID - 1) as f64;
                (lo + t * (hi - lo), lo, hi)
            })
        })
        .collect();
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&(theta, _, _)| slice.poly.eval(theta).abs())
        .collect();
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    let (theta0, lo, hi) = grid[best];
    let h = (hi - lo) / (CONTRADICTION_GRID - 1) as f64;
    let objective = |t: f64| slice.poly.eval(t).abs();
    let refined = golden_max(&objective, (theta0 - h).max(lo), (theta0 + h).min(hi));
    let theta = if objective(refined) > values[best] { refined } else { theta0 };
    let t_value = slice.poly.eval(theta);
    if t_value.abs() < 1.0 {
        return Err(PlankError::NoContradiction { best: t_value.abs() });
    }
    let point = slice_point(&slice.v_k_alpha, theta);
    let slice_form = m.quadratic_form(&point);
    let scale = (nf / slice_form).sqrt();
    let b = point * scale;
    let b_form = m.quadratic_form(&b);
    let product = (m.matrix() * &b).iter().map(|x| x.abs()).product();
    Ok(ContradictionCertificate {
        k,
        alpha: slice.alpha,
        theta,
        t_value,
        slice_form,
        scale,
        b,
        b_form,
        product,
    })
}

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if (b - a).abs() < 1e-15 {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// The unshrunken slice through `1` and `v_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagonalSlice {
    pub k: usize,
    #[serde(serialize_with = "crate::io::ser_dvector")]
    pub v_k: DVector<f64>,
    pub poly: ProductTrigPoly,
    /// `||M v_k||^2`, computed directly.
    pub slope_norm_sq: f64,
    /// `(n^2 ||M e_k||^2 - n) / (n m_kk - 1)` with `||M e_k||^2 = sum_j m_kj^2`.
    pub slope_norm_sq_formula: f64,
}

pub fn diagonal_slice(m: &ConjugatedMatrix, k: usize) -> Result<DiagonalSlice> {
    let v_k = diagonal_direction(m, k)?;
    let poly = slice_poly(m, &v_k)?;
    let slope_norm_sq = poly.slopes().norm_squared();
    Ok(DiagonalSlice {
        k,
        slope_norm_sq_formula: slope_norm_formula(m, k),
        v_k,
        poly,
        slope_norm_sq,
    })
}

fn slope_norm_formula(m: &ConjugatedMatrix, k: usize) -> f64 {
    let nf = m.n() as f64;
    let row_sq: f64 = m.matrix().row(k).iter().map(|x| x * x).sum();
    (nf * nf * row_sq - nf) / (nf * m.matrix()[(k, k)] - 1.0)
}

/// Index of the largest diagonal entry (first one on ties).
pub fn argmax_diagonal(m: &ConjugatedMatrix) -> usize {
    let d = m.diagonal();
    (0..d.len()).fold(0, |best, i| if d[i] > d[best] { i } else { best })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub theta: f64,
    pub t: f64,
    pub dt: f64,
    pub d2t: f64,
    /// `T(theta) - cos(n theta)`.
    pub q: f64,
    /// `v_theta' M v_theta`.
    pub quadform: f64,
}

/// Samples the slice through `1` and `v` at `theta_i = 2 pi i / samples`.
pub fn trace_rows(m: &ConjugatedMatrix, v: &DVector<f64>, samples: usize) -> Result<Vec<TraceRow>> {
    if samples == 0 {
        return Err(PlankError::InvalidArgument("samples must be positive".into()));
    }
    let poly = slice_poly(m, v)?;
    let nf = m.n() as f64;
    Ok((0..samples)
        .map(|i| {
            let theta = TAU * i as f64 / samples as f64;
            let (t, dt, d2t) = poly.eval_derivatives(theta);
            TraceRow {
                theta,
                t,
                dt,
                d2t,
                q: t - (nf * theta).cos(),
                quadform: m.quadratic_form(&slice_point(v, theta)),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn dv(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn m2() -> ConjugatedMatrix {
        ConjugatedMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0])).unwrap()
    }

    fn extremal_m3() -> ConjugatedMatrix {
        let t = 1.0 / 3.0;
        ConjugatedMatrix::new(DMatrix::from_row_slice(
            3,
            3,
            &[t, t, t, t, 4.0 * t, -2.0 * t, t, -2.0 * t, 4.0 * t],
        ))
        .unwrap()
    }

    /// Fourier coefficients by a plain DFT of samples, independent of the
    /// convolution.
    fn dft_oracle(t: &ProductTrigPoly) -> (Vec<f64>, Vec<f64>) {
        let n = t.n();
        let size = 4 * n + 8;
        let samples: Vec<f64> = (0..size).map(|i| t.eval(TAU * i as f64 / size as f64)).collect();
        let mut c = vec![0.0; n + 1];
        let mut s = vec![0.0; n];
        for m in 0..=n {
            let mut ac = 0.0;
            let mut as_ = 0.0;
            for (i, x) in samples.iter().enumerate() {
                let th = TAU * (i * m) as f64 / size as f64;
                ac += x * th.cos();
                as_ += x * th.sin();
            }
            c[m] = ac * if m == 0 { 1.0 } else { 2.0 } / size as f64;
            if m > 0 {
                s[m - 1] = 2.0 * as_ / size as f64;
            }
        }
        (c, s)
    }

    #[test]
    fn slice_poly_examples() {
        let t = slice_poly(&m2(), &dv(&[-1.0 / 3.0, 1.0 / 3.0])).unwrap();
        assert_abs_diff_eq!(t.slopes(), &dv(&[-1.0, 1.0]), epsilon = 1e-15);
        for i in 0..20 {
            let th = 0.37 * i as f64;
            assert_abs_diff_eq!(t.eval(th), (2.0 * th).cos(), epsilon = 1e-14);
        }
        let s = (0.75f64).sqrt();
        let v = dv(&[0.0, s, -s]);
        let m = extremal_m3();
        assert_abs_diff_eq!(m.quadratic_form(&v), 3.0, epsilon = 1e-14);
        let t = slice_poly(&m, &v).unwrap();
        assert_abs_diff_eq!(t.slopes(), &(dv(&[0.0, 1.0, -1.0]) * (2.0 * s)), epsilon = 1e-14);
        assert_eq!(t.eval(0.0), 1.0);
        let zero = slice_poly(&m, &DVector::zeros(3)).unwrap();
        assert_abs_diff_eq!(zero.eval(0.4), 0.4f64.cos().powi(3), epsilon = 1e-15);
    }

    #[test]
    fn derivative_examples() {
        let t = ProductTrigPoly::from_slopes(&[0.0, 0.0, 0.0]);
        let (_, d1, d2) = t.eval_derivatives(0.0);
        assert_eq!(d1, 0.0);
        assert_eq!(d2, -3.0);
        let t = ProductTrigPoly::from_slopes(&[-1.0, 1.0]);
        let (v, d1, d2) = t.eval_derivatives(0.0);
        assert_eq!((v, d1, d2), (1.0, 0.0, -4.0));
        // at a root of cos 2 theta the jets still give the right values
        let (v, d1, d2) = t.eval_derivatives(PI / 4.0);
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d1, -2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d2, 0.0, epsilon = 1e-14);
        assert!(t.log_derivatives(PI / 4.0).is_none());
    }

    #[test]
    fn fourier_examples() {
        let f = to_fourier(&ProductTrigPoly::from_slopes(&[0.0, 0.0]));
        assert_abs_diff_eq!(f.cos_coeffs(), &[0.5, 0.0, 0.5][..], epsilon = 1e-15);
        assert_abs_diff_eq!(f.sin_coeffs(), &[0.0, 0.0][..], epsilon = 1e-15);
        let f = to_fourier(&ProductTrigPoly::from_slopes(&[-1.0, 1.0]));
        assert_abs_diff_eq!(f.cos_coeffs(), &[0.0, 0.0, 1.0][..], epsilon = 1e-15);
        assert_abs_diff_eq!(f.sin_coeffs(), &[0.0, 0.0][..], epsilon = 1e-15);
        let f = to_fourier(&ProductTrigPoly::from_slopes(&[0.7]));
        assert_abs_diff_eq!(f.cos_coeffs(), &[0.0, 1.0][..], epsilon = 1e-15);
        assert_abs_diff_eq!(f.sin_coeffs(), &[0.7][..], epsilon = 1e-15);
    }

    #[test]
    fn sin_squared_multiplication() {
        let psi = FourierForm::new(vec![0.3, -1.2, 0.5, 0.25], vec![0.8, -0.4, 1.1]).unwrap();
        let prod = psi.times_sin_squared();
        for i in 0..50 {
            let th = 0.13 * i as f64;
            assert_abs_diff_eq!(prod.eval(th), th.sin().powi(2) * psi.eval(th), epsilon = 1e-14);
        }
    }

    #[test]
    fn bernstein_examples() {
        for n in 1..6 {
            let rep = bernstein_check(&FourierForm::cos_n(n), 1024 * n).unwrap();
            assert_abs_diff_eq!(rep.sup_dt, n as f64 * rep.sup_t, epsilon = 1e-12);
            assert!(rep.ok());
            let cos_pow = to_fourier(&ProductTrigPoly::new(DVector::zeros(n)));
            let rep = bernstein_check(&cos_pow, 1024 * n).unwrap();
            assert_abs_diff_eq!(rep.sup_t, 1.0, epsilon = 1e-14);
            assert!(rep.ok());
        }
        assert!(bernstein_check(&FourierForm::cos_n(3), 1000).is_err());
    }

    #[test]
    fn q_decompose_examples() {
        let d = q_decompose(&FourierForm::cos_n(2), 2).unwrap();
        assert!(d.ok());
        assert_eq!(d.psi.degree(1e-14), None);

        let d = q_decompose(&to_fourier(&ProductTrigPoly::new(DVector::zeros(2))), 2).unwrap();
        assert!(d.ok());
        assert_abs_diff_eq!(d.psi.cos_coeffs()[0], 1.0, epsilon = 1e-12);

        for n in 3..8 {
            let t = to_fourier(&ProductTrigPoly::new(DVector::zeros(n)));
            let d = q_decompose(&t, n).unwrap();
            assert!(d.ok(), "n = {n}: {d:?}");
            assert!(d.q.eval(0.0).abs() < 1e-14 && d.q.eval(PI).abs() < 1e-13);
        }

        let tilted = to_fourier(&ProductTrigPoly::from_slopes(&[0.3, 0.1]));
        assert!(matches!(q_decompose(&tilted, 2), Err(PlankError::InvalidArgument(_))));
        assert!(q_decompose(&FourierForm::cos_n(1), 1).is_err());
    }

    #[test]
    fn count_roots_examples() {
        for n in 1..7 {
            let r = count_roots(&FourierForm::cos_n(n), 4096 * n).unwrap();
            assert_eq!(r.count, 2 * n);
            for (i, root) in r.roots.iter().enumerate() {
                let expected = (PI / 2.0 + PI * i as f64) / n as f64;
                assert_abs_diff_eq!(*root, expected, epsilon = 1e-12);
            }
        }
        let z = count_roots(&FourierForm::zero(3), 4096 * 3).unwrap();
        assert!(z.identically_zero);
        assert_eq!(z.count, 0);
        assert!(count_roots(&FourierForm::cos_n(2), 100).is_err());
    }

    #[test]
    fn alpha_slice_two_by_two_fixture() {
        let s = alpha_slice(&m2(), 0).unwrap();
        assert_abs_diff_eq!(s.alpha, 1.0 / 3.0, epsilon = 1e-15);
        let r3 = 3f64.sqrt();
        assert_abs_diff_eq!(&s.v_k, &dv(&[1.0 / r3, -1.0 / r3]), epsilon = 1e-15);
        assert_abs_diff_eq!(&s.v_k_alpha, &dv(&[-1.0 / 3.0, 1.0 / 3.0]), epsilon = 1e-15);
        assert_abs_diff_eq!(s.poly.slopes(), &dv(&[-1.0, 1.0]), epsilon = 1e-14);
        assert_abs_diff_eq!(s.root_theta, PI / 4.0, epsilon = 1e-14);

        let c = contradiction_search(&m2(), 0).unwrap();
        assert_abs_diff_eq!(c.theta, PI / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.slice_form, 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(&c.b, &dv(&[-1.0 / r3, 1.0 / r3]), epsilon = 1e-9);
        assert_abs_diff_eq!(c.product, 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c.b_form, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn alpha_slice_threshold_is_strict() {
        // extremal M sits exactly on the threshold in coordinates 1 and 2
        let m = extremal_m3();
        for k in 0..3 {
            assert!(matches!(alpha_slice(&m, k), Err(PlankError::Precondition(_))));
        }
        assert!(matches!(contradiction_search(&m, 1), Err(PlankError::Precondition(_))));
    }

    #[test]
    fn bumped_three_by_three_has_a_certificate() {
        // Bump the extremal M along the (0,1,-1) direction and add a little
        // of the complement so that it becomes invertible.
        let d = 0.05;
        let e = 0.02;
        let u = dv(&[0.0, 1.0, -1.0]);
        let p = dv(&[2.0, -1.0, -1.0]);
        let mat = extremal_m3().matrix() + &u * u.transpose() * d + &p * p.transpose() * e;
        let m = ConjugatedMatrix::new(mat).unwrap();
        let c = contradiction_search(&m, 1).unwrap();
        assert!(c.product > 1.0);
        assert_abs_diff_eq!(c.b_form, 3.0, epsilon = 1e-9);
    }

    #[test]
    fn extremal_diagonal_slice_identity() {
        let m = extremal_m3();
        assert!(matches!(diagonal_slice(&m, 0), Err(PlankError::Precondition(_))));
        for k in 1..3 {
            let s = diagonal_slice(&m, k).unwrap();
            assert_abs_diff_eq!(s.slope_norm_sq, s.slope_norm_sq_formula, epsilon = 1e-12);
            assert_abs_diff_eq!(m.quadratic_form(&s.v_k), 3.0, epsilon = 1e-12);
        }
        assert_eq!(argmax_diagonal(&m), 1);
    }

    #[test]
    fn trace_rows_start_at_one() {
        let m = extremal_m3();
        let v = diagonal_direction(&m, 1).unwrap();
        let rows = trace_rows(&m, &v, 8).unwrap();
        assert_eq!(rows.len(), 8);
        assert_eq!(rows[0].t, 1.0);
        assert!(rows[0].q.abs() <= 1e-12);
        assert!(rows[4].q.abs() <= 1e-12);
        assert_abs_diff_eq!(rows[0].quadform, 3.0, epsilon = 1e-12);
    }

    fn slopes_strategy() -> impl Strategy<Value = Vec<f64>> {
        (1usize..9).prop_flat_map(|n| proptest::collection::vec(-3.0f64..3.0, n))
    }

    proptest! {
        #[test]
        fn fourier_matches_product_and_dft(slopes in slopes_strategy()) {
            let t = ProductTrigPoly::from_slopes(&slopes);
            let f = to_fourier(&t);
            let n = t.n();
            let scale = 1.0 + slopes.iter().map(|a| 1.0 + a.abs()).product::<f64>();
            for i in 0..64 * n {
                let th = TAU * i as f64 / (64 * n) as f64;
                prop_assert!((f.eval(th) - t.eval(th)).abs() <= 1e-10 * scale);
            }
            let (c, s) = dft_oracle(&t);
            for m in 0..=n {
                prop_assert!((c[m] - f.cos_coeffs()[m]).abs() <= 1e-11 * scale);
            }
            for m in 0..n {
                prop_assert!((s[m] - f.sin_coeffs()[m]).abs() <= 1e-11 * scale);
            }
        }

        #[test]
        fn derivative_routes_agree(slopes in slopes_strategy(), theta in 0.0f64..TAU) {
            let t = ProductTrigPoly::from_slopes(&slopes);
            let f = to_fourier(&t);
            let (v, d1, d2) = t.eval_derivatives(theta);
            let scale = 1.0 + slopes.iter().map(|a| 1.0 + a.abs()).product::<f64>();
            let n = t.n() as f64;
            prop_assert!((f.derivative().eval(theta) - d1).abs() <= 1e-10 * scale * n);
            prop_assert!((f.derivative().derivative().eval(theta) - d2).abs() <= 1e-10 * scale * n * n);
            if let Some((l1, l2)) = t.log_derivatives(theta) {
                if v.abs() > 1e-8 {
                    prop_assert!((l1 * v - d1).abs() <= 1e-8 * scale * n);
                    prop_assert!((l2 * v * v - (d2 * v - d1 * d1)).abs() <= 1e-8 * scale * scale * n * n);
                }
            }
        }
    }
}
