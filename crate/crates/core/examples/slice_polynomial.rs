//! The product polynomial along a slice of the ellipsoid `x' M x = n`:
//! Fourier form, Bernstein check, the factorization through `sin^2` and its roots.

use plank::cli::random_rows;
use plank::geom::{gram, UnitVectorSet};
use plank::trigpoly::{
    argmax_diagonal, bernstein_check, count_roots, diagonal_slice, q_decompose, to_fourier,
};
use plank::witness::{build_m, certify_zone_bound};
use plank::Config;

fn main() -> plank::Result<()> {
    let cfg = Config::default();
    let vs = UnitVectorSet::from_rows(&random_rows(5, 3, 17))?;
    let n = vs.len();
    let m = build_m(&gram(&vs), &certify_zone_bound(&vs, &cfg)?.w)?;

    let k = argmax_diagonal(&m);
    let slice = diagonal_slice(&m, k)?;
    println!("slice through 1 and the diagonal direction of k = {k}");
    println!(
        "  |Mv|^2 = {:.9}, closed form {:.9}",
        slice.slope_norm_sq, slice.slope_norm_sq_formula
    );

    let f = to_fourier(&slice.poly);
    println!("  cos coefficients {:.5?}", f.cos_coeffs());
    println!("  sin coefficients {:.5?}", f.sin_coeffs());

    let b = bernstein_check(&f, 1024 * n)?;
    println!(
        "  sup|T| = {:.9}, sup|T'| = {:.6} (<= {n} sup|T|: {})",
        b.sup_t, b.sup_dt, b.first_ok
    );

    let q = q_decompose(&f, n)?;
    println!(
        "  T - cos(n theta) = sin^2 psi: residual {:.1e}, psi above degree n-2 {:.1e}",
        q.residual, q.high_coefficient_max
    );
    let roots = count_roots(&q.q, 4096 * n)?;
    println!("  {} roots of Q on [0, 2 pi) (at most {})", roots.count, 2 * n - 2);
    for r in &roots.roots {
        println!("    {r:.9}");
    }
    Ok(())
}
