//! Every inverse eigenvector `H w = 1/w` of a small Gram matrix, one per
//! orthant, and the one picked by the dual construction.

use plank::cli::random_rows;
use plank::geom::{gram, kernel_basis, UnitVectorSet};
use plank::inverse_eigen::{dual_maximizer, enumerate_all, verify_w_bounds};
use plank::Config;

fn main() -> plank::Result<()> {
    let cfg = Config::default();
    let vs = UnitVectorSet::from_rows(&random_rows(4, 4, 4))?;
    let h = gram(&vs);
    println!("eigenvalues of H: {:.4?}", h.eigenvalues());

    let all = enumerate_all(&h, &cfg)?;
    println!("{} solutions (all 16 orthants, since H is invertible)", all.len());
    for s in all.iter().filter(|s| s.w[0] > 0.0) {
        println!(
            "  {}  w = {:>9.5?}  w'Hw = {:.12}  sum ln|w| = {:.5}",
            s.quadrant,
            s.w.as_slice(),
            s.quadratic_form(&h),
            s.log_abs_product()
        );
    }

    let dual = dual_maximizer(&h, &cfg)?;
    let report = verify_w_bounds(&dual.solution, h.n(), &cfg.tol);
    println!("dual: orthant {} after {} orthants", dual.solution.quadrant, dual.quadrants_explored);
    println!(
        "  ||w||_inf = {:.6} <= {:.6}: {}",
        report.linf, report.sharp_limit, report.sharp_bound
    );

    // a rank-deficient H: orthants meeting the kernel have no solution
    let flat = gram(&UnitVectorSet::from_rows(&random_rows(4, 2, 3))?);
    let kernel = kernel_basis(&flat, cfg.tol.kernel);
    let found = enumerate_all(&flat, &cfg)?;
    println!(
        "rank 2 Gram: kernel dimension {}, {} of 16 orthants carry a solution",
        kernel.len(),
        found.len()
    );
    Ok(())
}
