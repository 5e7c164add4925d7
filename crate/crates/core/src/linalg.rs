//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted ascending.
pub(crate) struct SortedEigen {
    pub values: Vec<f64>,
    /// Column `i` pairs with `values[i]`.
    pub vectors: DMatrix<f64>,
}

pub(crate) fn sym_eigen(a: &DMatrix<f64>) -> SortedEigen {
    let sym = symmetrize(a);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let n = a.nrows();
    let mut vectors = DMatrix::zeros(n, n);
    let values = order
        .iter()
        .enumerate()
        .map(|(col, &i)| {
            vectors.set_column(col, &eig.eigenvectors.column(i));
            eig.eigenvalues[i]
        })
        .collect();
    SortedEigen { values, vectors }
}

pub(crate) fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    symmetrize(a)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn max_eigenvalue(a: &DMatrix<f64>) -> f64 {
    symmetrize(a)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

pub(crate) fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

pub(crate) fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solve `a x = b` for symmetric positive definite `a`, falling back to LU.
pub(crate) fn spd_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    match a.clone().cholesky() {
        Some(ch) => Some(ch.solve(b)),
        None => a.clone().lu().solve(b),
    }
}

pub(crate) fn componentwise_inverse(w: &DVector<f64>) -> DVector<f64> {
    w.map(|x| 1.0 / x)
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let z = s - a;
    (s, (a - (s - z)) + (b - z))
}

/// Compensated dot product: the result carries about twice the working
/// precision, returned as an unevaluated sum `hi + lo`.
pub(crate) fn dot2(pairs: impl IntoIterator<Item = (f64, f64)>) -> (f64, f64) {
    let (mut s, mut c) = (0.0, 0.0);
    for (a, b) in pairs {
        let p = a * b;
        let ep = a.mul_add(b, -p);
        let (t, es) = two_sum(s, p);
        s = t;
        c += es + ep;
    }
    two_sum(s, c)
}

/// `m x` with each row evaluated by [`dot2`].
pub(crate) fn mat_vec2(m: &DMatrix<f64>, x: &DVector<f64>) -> Vec<(f64, f64)> {
    (0..m.nrows())
        .map(|i| dot2((0..m.ncols()).map(|j| (m[(i, j)], x[j]))))
        .collect()
}

/// `x' m x` accurate to a few ulps of the result rather than of the terms.
pub(crate) fn quad_form2(m: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    let mx = mat_vec2(m, x);
    let (hi, lo) = dot2(
        mx.iter()
            .zip(x.iter())
            .flat_map(|(&(h, l), &xi)| [(xi, h), (xi, l)]),
    );
    hi + lo
}
