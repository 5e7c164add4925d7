//! A matrix with `M 1 = 1` whose diagonal is too large cannot come from a
//! witness: a point `b` on `b' M b = n` with `prod |(M b)_j| > 1` exposes it.

use nalgebra::DMatrix;
use plank::trigpoly::{argmax_diagonal, contradiction_search};
use plank::witness::{diag_sharp_limit, ConjugatedMatrix};

fn main() -> plank::Result<()> {
    let m = ConjugatedMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]))?;
    report(&m)?;

    // 1 1'/3 plus a multiple of the projection orthogonal to 1
    let n = 3;
    let p = DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
    let base = DMatrix::from_element(n, n, 1.0 / n as f64);
    let m = ConjugatedMatrix::new(base + p * 2.5)?;
    report(&m)
}

fn report(m: &ConjugatedMatrix) -> plank::Result<()> {
    let n = m.n();
    let k = argmax_diagonal(m);
    println!(
        "n = {n}: m_kk = {:.6} against the limit {:.6}",
        m.diagonal()[k],
        diag_sharp_limit(n)
    );
    let c = contradiction_search(m, k)?;
    println!("  alpha = {:.6}, theta = {:.6}, T = {:.6}", c.alpha, c.theta, c.t_value);
    println!("  b = {:.6?}", c.b.as_slice());
    println!("  b'Mb = {:.12}, prod |(Mb)_j| = {:.9}", c.b_form, c.product);
    Ok(())
}
