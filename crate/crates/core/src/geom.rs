//! Unit-vector sets, Gram matrices, sign patterns and spherical zones.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{PlankError, Result};
use crate::linalg;

const UNIT_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

/// `n` unit vectors in `R^d`, stored as the rows of an `n x d` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVectorSet {
    vectors: DMatrix<f64>,
}

impl UnitVectorSet {
    /// Wraps the rows of `vectors`, rejecting any row whose norm is not 1.
    pub fn new(vectors: DMatrix<f64>) -> Result<Self> {
        if vectors.nrows() == 0 || vectors.ncols() == 0 {
            return Err(PlankError::InvalidArgument(
                "need at least one vector of dimension at least one".into(),
            ));
        }
        for (row, r) in vectors.row_iter().enumerate() {
            let norm = r.norm();
            if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOL {
                return Err(PlankError::NotUnit { row, norm });
            }
        }
        Ok(Self { vectors })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(rows_to_matrix(rows)?)
    }

    /// Like [`from_rows`](Self::from_rows) but rescales every row to unit
    /// length first. Zero rows are still rejected.
    pub fn normalized(rows: &[Vec<f64>]) -> Result<Self> {
        let mut m = rows_to_matrix(rows)?;
        for (row, mut r) in m.row_iter_mut().enumerate() {
            let norm = r.norm();
            if !(norm.is_finite() && norm > 0.0) {
                return Err(PlankError::NotUnit { row, norm });
            }
            r /= norm;
        }
        Self::new(m)
    }

    /// Number of vectors `n`.
    pub fn len(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.nrows() == 0
    }

    /// Ambient dimension `d`.
    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn row(&self, k: usize) -> DVector<f64> {
        self.vectors.row(k).transpose()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.vectors
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }

    /// Inner products `<v_k, x>` for every `k`.
    pub fn inner_products(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.vectors * x
    }
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    if n == 0 || d == 0 {
        return Err(PlankError::InvalidArgument(
            "need at least one vector of dimension at least one".into(),
        ));
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != d) {
        return Err(PlankError::InvalidArgument(format!(
            "row {bad} has length {} but row 0 has length {d}",
            rows[bad].len()
        )));
    }
    Ok(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
}

/// Symmetric PSD matrix with unit diagonal, `H_ij = <v_i, v_j>`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    entries: DMatrix<f64>,
}

impl GramMatrix {
    /// Validates symmetry, unit diagonal, entry bounds and positive
    /// semidefiniteness.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 || entries.ncols() != n {
            return Err(PlankError::NotGram(format!(
                "expected a non-empty square matrix, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        for i in 0..n {
            if (entries[(i, i)] - 1.0).abs() > UNIT_TOL {
                return Err(PlankError::NotGram(format!(
                    "diagonal entry {i} is {} (expected 1)",
                    entries[(i, i)]
                )));
            }
            for j in 0..n {
                let x = entries[(i, j)];
                if !x.is_finite() || x.abs() > 1.0 + UNIT_TOL {
                    return Err(PlankError::NotGram(format!(
                        "entry ({i},{j}) = {x} exceeds 1 in absolute value"
                    )));
                }
                if (x - entries[(j, i)]).abs() > UNIT_TOL {
                    return Err(PlankError::NotGram(format!(
                        "not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        let lmin = linalg::min_eigenvalue(&entries);
        if lmin < -PSD_TOL {
            return Err(PlankError::NotGram(format!(
                "smallest eigenvalue {lmin:e} is negative"
            )));
        }
        Ok(Self { entries })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            entries: DMatrix::identity(n, n),
        }
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::sym_eigen(&self.entries).values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.entries)
    }

    pub fn is_invertible(&self, tol: f64) -> bool {
        self.min_eigenvalue() > tol
    }
}

/// Computes the Gram matrix of a unit-vector set.
pub fn gram(vs: &UnitVectorSet) -> GramMatrix {
    let v = vs.matrix();
    let mut h = v * v.transpose();
    // Exact unit diagonal and exact symmetry; rows are unit within 1e-12.
    for i in 0..h.nrows() {
        h[(i, i)] = 1.0;
        for j in 0..i {
            let s = 0.5 * (h[(i, j)] + h[(j, i)]);
            h[(i, j)] = s;
            h[(j, i)] = s;
        }
    }
    GramMatrix { entries: h }
}

/// `n` unit vectors in `R^2` whose lines are equally spaced by `pi / n`.
pub fn extremal_configuration(n: usize) -> Result<UnitVectorSet> {
    if n == 0 {
        return Err(PlankError::InvalidArgument("n must be at least 1".into()));
    }
    let m = DMatrix::from_fn(n, 2, |k, j| {
        let angle = k as f64 * PI / n as f64;
        if j == 0 {
            angle.cos()
        } else {
            angle.sin()
        }
    });
    UnitVectorSet::new(m)
}

/// Orthonormal basis of the eigenspace of `h` with eigenvalues below `tol`.
pub fn kernel_basis(h: &GramMatrix, tol: f64) -> Vec<DVector<f64>> {
    let eig = linalg::sym_eigen(h.matrix());
    eig.values
        .iter()
        .enumerate()
        .take_while(|(_, &lambda)| lambda < tol)
        .map(|(i, _)| eig.vectors.column(i).into_owned())
        .collect()
}

/// An orthant of `R^n`, given by a vector of signs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SignPattern {
    signs: Vec<i8>,
}

impl SignPattern {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if let Some(k) = signs.iter().position(|&s| s != 1 && s != -1) {
            return Err(PlankError::InvalidArgument(format!(
                "sign {k} is {} (expected +1 or -1)",
                signs[k]
            )));
        }
        Ok(Self { signs })
    }

    pub fn all_positive(n: usize) -> Self {
        Self { signs: vec![1; n] }
    }

    /// Pattern whose `k`-th sign is negative iff bit `k` of `index` is set.
    pub fn from_index(n: usize, index: u64) -> Self {
        Self {
            signs: (0..n)
                .map(|k| if index >> k & 1 == 1 { -1 } else { 1 })
                .collect(),
        }
    }

    pub fn index(&self) -> u64 {
        self.signs
            .iter()
            .enumerate()
            .filter(|(_, &s)| s < 0)
            .fold(0, |acc, (k, _)| acc | 1 << k)
    }

    /// Sign pattern of `w`; `None` if some entry is zero or not finite.
    pub fn of(w: &DVector<f64>) -> Option<Self> {
        w.iter()
            .map(|&x| {
                if x > 0.0 {
                    Some(1)
                } else if x < 0.0 {
                    Some(-1)
                } else {
                    None
                }
            })
            .collect::<Option<Vec<i8>>>()
            .map(|signs| Self { signs })
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.signs.iter().map(|&s| f64::from(s)))
    }

    pub fn negated(&self) -> Self {
        Self {
            signs: self.signs.iter().map(|s| -s).collect(),
        }
    }

    /// Representative of `{q, -q}` whose first sign is positive.
    pub fn canonical(&self) -> Self {
        if self.signs.first() == Some(&-1) {
            self.negated()
        } else {
            self.clone()
        }
    }

    /// Whether every entry of `w` is nonzero with the matching sign.
    pub fn contains(&self, w: &DVector<f64>) -> bool {
        w.len() == self.len()
            && w
                .iter()
                .zip(&self.signs)
                .all(|(&x, &s)| x * f64::from(s) > 0.0)
    }
}

impl Ord for SignPattern {
    /// Lexicographic with `+` before `-`.
    fn cmp(&self, other: &Self) -> Ordering {
        let key = |p: &Self| p.signs.iter().map(|&s| s < 0).collect::<Vec<_>>();
        key(self).cmp(&key(other))
    }
}

impl PartialOrd for SignPattern {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SignPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.signs {
            f.write_str(if s > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for SignPattern {
    type Err = PlankError;

    /// Parses strings such as `"++-"`.
    fn from_str(s: &str) -> Result<Self> {
        let signs = s
            .chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                other => Err(PlankError::InvalidArgument(format!(
                    "bad sign character {other:?} in pattern {s:?}"
                ))),
            })
            .collect::<Result<Vec<i8>>>()?;
        if signs.is_empty() {
            return Err(PlankError::InvalidArgument("empty sign pattern".into()));
        }
        Ok(Self { signs })
    }
}

impl TryFrom<Vec<i8>> for SignPattern {
    type Error = PlankError;

    fn try_from(signs: Vec<i8>) -> Result<Self> {
        Self::new(signs)
    }
}

impl From<SignPattern> for Vec<i8> {
    fn from(p: SignPattern) -> Self {
        p.signs
    }
}

/// Points of the unit sphere within spherical distance `width / 2` of the
/// great circle orthogonal to `normal`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zone {
    normal: Vector3<f64>,
    width: f64,
    half_sine: f64,
}

impl Zone {
    pub fn new(normal: [f64; 3], width: f64) -> Result<Self> {
        let normal = Vector3::from(normal);
        let norm = normal.norm();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(PlankError::NotUnit { row: 0, norm });
        }
        if !(width > 0.0 && width < PI) {
            return Err(PlankError::InvalidArgument(format!(
                "zone width {width} must lie in (0, pi)"
            )));
        }
        Ok(Self {
            normal,
            width,
            half_sine: (width / 2.0).sin(),
        })
    }

    pub fn normal(&self) -> [f64; 3] {
        self.normal.into()
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// `sin(width / 2)`, the half-width of the zone as a plank.
    pub fn half_sine(&self) -> f64 {
        self.half_sine
    }

    pub fn contains(&self, x: &Vector3<f64>) -> bool {
        self.normal.dot(x).abs() <= self.half_sine
    }

    /// `|<normal, x>| / sin(width / 2)`; at most 1 iff `x` lies in the zone.
    pub fn ratio(&self, x: &Vector3<f64>) -> f64 {
        self.normal.dot(x).abs() / self.half_sine
    }
}

/// Vertices of the icosahedron refined `level` times by edge-midpoint
/// subdivision, projected to the unit sphere (`10 * 4^level + 2` points).
pub fn icosphere(level: u32) -> Vec<Vector3<f64>> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vector3<f64>> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Vector3<f64>>| {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                vertices.push((vertices[a] + vertices[b]).normalize());
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    vertices
}

/// Result of a zone-coverage test on an icosahedral grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    /// Every grid point lies in some zone.
    pub covered: bool,
    /// A point outside every zone, when one was found. It maximizes
    /// `min_k |<n_k, x>| / sin(w_k / 2)` over the sign cell of the best grid
    /// point.
    pub uncovered_point: Option<[f64; 3]>,
    /// Largest `min_k` ratio found; above 1 means uncovered.
    pub margin: f64,
    /// Largest `min_k` ratio over the grid points alone.
    pub grid_margin: f64,
    pub grid_points: usize,
    /// Sum of the zone widths, to compare against `pi`.
    pub total_width: f64,
}

/// Tests whether `zones` cover the unit sphere, sampling an icosphere of
/// subdivision level `resolution`.
pub fn zone_covers(zones: &[Zone], resolution: u32) -> Result<CoverageReport> {
    if zones.is_empty() {
        return Err(PlankError::InvalidArgument("no zones given".into()));
    }
    if resolution < 2 {
        return Err(PlankError::InvalidArgument(format!(
            "resolution {resolution} below the minimum subdivision level 2"
        )));
    }
    let grid = icosphere(resolution);
    let min_ratio = |x: &Vector3<f64>| {
        zones
            .iter()
            .map(|z| z.ratio(x))
            .fold(f64::INFINITY, f64::min)
    };
    let (best_idx, grid_margin) = grid
        .iter()
        .map(min_ratio)
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        });
    let covered = grid_margin <= 1.0;
    let total_width = zones.iter().map(Zone::width).sum();
    let mut report = CoverageReport {
        covered,
        uncovered_point: None,
        margin: grid_margin,
        grid_points: grid.len(),
        grid_margin,
        total_width,
    };
    if !covered {
        let start = grid[best_idx];
        let (point, margin) = best_in_cell(zones, &start)
            .filter(|(_, m)| *m >= grid_margin)
            .unwrap_or((start, grid_margin));
        report.uncovered_point = Some(point.into());
        report.margin = margin;
    }
    Ok(report)
}

/// Exact maximizer of `min_k sigma_k <n_k, x> / s_k` over the unit sphere
/// restricted to the sign cell of `x0`.
///
/// By homogeneity this is the minimum-norm point of the polyhedron
/// `{x : sigma_k <n_k, x> / s_k >= 1}`; in three dimensions its KKT point has
/// at most three active constraints, so every subset of size 1..=3 is tried.
fn best_in_cell(zones: &[Zone], x0: &Vector3<f64>) -> Option<(Vector3<f64>, f64)> {
    let rows: Vec<Vector3<f64>> = zones
        .iter()
        .map(|z| {
            let s = z.normal.dot(x0).signum();
            z.normal * (s / z.half_sine)
        })
        .collect();
    let feasible = |x: &Vector3<f64>| rows.iter().all(|a| a.dot(x) >= 1.0 - 1e-9);
    let mut best: Option<Vector3<f64>> = None;
    let mut consider = |x: Vector3<f64>| {
        if feasible(&x) && best.is_none_or(|b| x.norm() < b.norm()) {
            best = Some(x);
        }
    };
    let m = rows.len();
    for i in 0..m {
        consider(rows[i] / rows[i].norm_squared());
        for j in i + 1..m {
            if let Some(x) = min_norm_on(&[rows[i], rows[j]]) {
                consider(x);
            }
            for k in j + 1..m {
                if let Some(x) = min_norm_on(&[rows[i], rows[j], rows[k]]) {
                    consider(x);
                }
            }
        }
    }
    best.map(|x| (x.normalize(), 1.0 / x.norm()))
}

/// Minimum-norm `x` with `<a_i, x> = 1` for all rows, provided the
/// multipliers are nonnegative.
fn min_norm_on(rows: &[Vector3<f64>]) -> Option<Vector3<f64>> {
    let k = rows.len();
    let mut g = Matrix3::zeros();
    for i in 0..k {
        for j in 0..k {
            g[(i, j)] = rows[i].dot(&rows[j]);
        }
    }
    let g = g.view((0, 0), (k, k)).into_owned();
    let scale = g.diagonal().max();
    let eig_min = g.symmetric_eigenvalues().min();
    if eig_min <= 1e-12 * scale {
        return None;
    }
    let lambda = g.cholesky()?.solve(&DVector::from_element(k, 1.0));
    if lambda.iter().any(|&l| l < -1e-12) {
        return None;
    }
    Some(
        rows.iter()
            .zip(lambda.iter())
            .fold(Vector3::zeros(), |acc, (a, &l)| acc + a * l),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn gram_of_orthonormal_basis_is_identity() {
        let vs = UnitVectorSet::new(DMatrix::identity(3, 3)).unwrap();
        assert_eq!(gram(&vs).matrix(), &DMatrix::<f64>::identity(3, 3));
    }

    #[test]
    fn gram_of_extremal_three() {
        let h = gram(&extremal_configuration(3).unwrap());
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.5, -0.5, 0.5, 1.0, 0.5, -0.5, 0.5, 1.0],
        );
        assert_abs_diff_eq!(h.matrix(), &expected, epsilon = 1e-15);
    }

    #[test]
    fn gram_of_single_vector() {
        let vs = UnitVectorSet::from_rows(&[vec![0.6, 0.8]]).unwrap();
        assert_eq!(gram(&vs).matrix(), &DMatrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn non_unit_row_is_rejected_with_index() {
        let err = UnitVectorSet::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap_err();
        assert!(matches!(err, PlankError::NotUnit { row: 1, .. }));
    }

    #[test]
    fn extremal_small_cases() {
        assert!(matches!(
            extremal_configuration(0),
            Err(PlankError::InvalidArgument(_))
        ));
        let two = extremal_configuration(2).unwrap();
        assert_abs_diff_eq!(
            two.matrix(),
            &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
            epsilon = 1e-15
        );
        let three = extremal_configuration(3).unwrap();
        let s = 3f64.sqrt() / 2.0;
        assert_abs_diff_eq!(
            three.matrix(),
            &DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.5, s, -0.5, s]),
            epsilon = 1e-15
        );
        let four = extremal_configuration(4).unwrap();
        for k in 0..4 {
            let angle = four.matrix()[(k, 1)].atan2(four.matrix()[(k, 0)]);
            assert_abs_diff_eq!(angle, k as f64 * PI / 4.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn kernel_of_identity_is_empty() {
        assert!(kernel_basis(&GramMatrix::identity(3), 1e-10).is_empty());
    }

    #[test]
    fn kernel_of_repeated_vector() {
        let vs = UnitVectorSet::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let k = kernel_basis(&gram(&vs), 1e-10);
        assert_eq!(k.len(), 1);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let sign = k[0][0].signum();
        assert_abs_diff_eq!(k[0][0] * sign, r, epsilon = 1e-12);
        assert_abs_diff_eq!(k[0][1] * sign, -r, epsilon = 1e-12);
    }

    #[test]
    fn kernel_of_extremal_three_is_the_alternating_line() {
        // v1 - v2 + v3 = 0 for angles 0, pi/3, 2pi/3.
        let h = gram(&extremal_configuration(3).unwrap());
        let k = kernel_basis(&h, 1e-10);
        assert_eq!(k.len(), 1);
        let expected = DVector::from_vec(vec![1.0, -1.0, 1.0]) / 3f64.sqrt();
        let sign = k[0][0].signum();
        assert_abs_diff_eq!(&(k[0].clone() * sign), &expected, epsilon = 1e-12);
        assert!(linalg::max_abs(&(h.matrix() * &k[0])) <= 1e-9);
    }

    #[test]
    fn sign_pattern_parse_display_and_order() {
        let p: SignPattern = "++-".parse().unwrap();
        assert_eq!(p.signs(), &[1, 1, -1]);
        assert_eq!(p.to_string(), "++-");
        assert_eq!(SignPattern::from_index(3, p.index()), p);
        assert!(SignPattern::all_positive(3) < p);
        assert!("+x".parse::<SignPattern>().is_err());
        assert!(SignPattern::new(vec![1, 0]).is_err());
        assert_eq!(p.canonical(), p);
        assert_eq!(p.negated().canonical(), p);
    }

    #[test]
    fn icosphere_vertex_counts() {
        for level in 0..4 {
            let pts = icosphere(level);
            assert_eq!(pts.len(), 10 * 4usize.pow(level) + 2);
            assert!(pts.iter().all(|p| (p.norm() - 1.0).abs() < 1e-14));
        }
    }

    fn extremal_zones(width: f64) -> Vec<Zone> {
        extremal_configuration(3)
            .unwrap()
            .rows()
            .into_iter()
            .map(|r| Zone::new([r[0], r[1], 0.0], width).unwrap())
            .collect()
    }

    #[test]
    fn extremal_zones_of_width_pi_over_three_cover() {
        let report = zone_covers(&extremal_zones(PI / 3.0), 4).unwrap();
        assert!(report.covered);
        assert!(report.uncovered_point.is_none());
        assert_abs_diff_eq!(report.total_width, PI, epsilon = 1e-15);
    }

    #[test]
    fn narrower_extremal_zones_leave_a_gap_near_a_line_direction() {
        let report = zone_covers(&extremal_zones(0.9 * PI / 3.0), 4).unwrap();
        assert!(!report.covered);
        let p = Vector3::from(report.uncovered_point.unwrap());
        assert!(extremal_zones(0.9 * PI / 3.0).iter().all(|z| !z.contains(&p)));
        // Optimal uncovered points are +-v_k in the plane.
        let best_angle = extremal_configuration(3)
            .unwrap()
            .rows()
            .iter()
            .map(|r| Vector3::new(r[0], r[1], 0.0).dot(&p).abs().min(1.0).acos())
            .fold(f64::INFINITY, f64::min);
        assert!(best_angle < 1e-2, "angle {best_angle}");
        assert_abs_diff_eq!(report.margin, 0.5 / (0.45 * PI / 3.0).sin(), epsilon = 1e-9);
    }

    #[test]
    fn single_wide_zone_misses_its_poles() {
        let z = Zone::new([0.0, 0.0, 1.0], PI - 0.01).unwrap();
        assert!(!z.contains(&Vector3::new(0.0, 0.0, 1.0)));
        let report = zone_covers(&[z], 3).unwrap();
        assert!(!report.covered);
        let p = report.uncovered_point.unwrap();
        assert_abs_diff_eq!(p[2].abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zone_argument_errors() {
        assert!(Zone::new([0.0, 0.0, 1.0], 0.0).is_err());
        assert!(Zone::new([0.0, 0.0, 2.0], 1.0).is_err());
        let z = Zone::new([0.0, 0.0, 1.0], 1.0).unwrap();
        assert!(zone_covers(&[], 3).is_err());
        assert!(zone_covers(&[z], 1).is_err());
    }

    fn unit_rows(n: usize, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(
            prop::collection::vec(-1.0f64..1.0, d)
                .prop_filter("nonzero", |r| r.iter().map(|x| x * x).sum::<f64>() > 1e-3),
            n,
        )
    }

    proptest! {
        #[test]
        fn gram_is_psd_with_unit_diagonal(rows in (1usize..7, 1usize..5).prop_flat_map(|(n, d)| unit_rows(n, d))) {
            let vs = UnitVectorSet::normalized(&rows).unwrap();
            let h = gram(&vs);
            prop_assert!(GramMatrix::new(h.matrix().clone()).is_ok());
            prop_assert!(h.min_eigenvalue() >= -1e-10);
        }

        #[test]
        fn extremal_gram_has_rank_two(n in 3usize..40) {
            let ev = gram(&extremal_configuration(n).unwrap()).eigenvalues();
            prop_assert!(ev[n - 3] <= 1e-10);
        }

        #[test]
        fn zone_membership_is_antipodal(x in prop::array::uniform3(-1.0f64..1.0), w in 0.01f64..3.1) {
            let x = Vector3::from(x);
            prop_assume!(x.norm() > 1e-3);
            let x = x.normalize();
            let z = Zone::new([0.6, 0.0, 0.8], w).unwrap();
            prop_assert_eq!(z.contains(&x), z.contains(&-x));
        }

        #[test]
        fn kernel_vectors_are_annihilated(rows in (2usize..7, 1usize..4).prop_flat_map(|(n, d)| unit_rows(n, d))) {
            let tol = 1e-10;
            let h = gram(&UnitVectorSet::normalized(&rows).unwrap());
            for k in kernel_basis(&h, tol) {
                prop_assert!(linalg::max_abs(&(h.matrix() * k)) <= 10.0 * tol);
            }
        }
    }
}
