//! Brute-force cross-checks: exact planar max-min, grids on the circle and
//! sphere, the sign search of Bang's lemma and the per-orthant enumeration check.

use plank::cli::random_rows;
use plank::geom::{gram, UnitVectorSet};
use plank::oracle::{analytic_2d_vectors, bang_sign_search, cross_check_enumeration, grid_search_witness};
use plank::witness::maximize_product;
use plank::Config;

fn main() -> plank::Result<()> {
    let cfg = Config::default();

    let planar = UnitVectorSet::from_rows(&random_rows(4, 2, 5))?;
    let exact = analytic_2d_vectors(&planar)?;
    let grid = grid_search_witness(&planar, 20_000)?;
    let product = maximize_product(&planar, &cfg)?;
    println!("planar n = 4");
    println!("  exact max-min   {:.9}", exact.value);
    println!("  grid            {:.9} (spacing {:.1e})", grid.value, grid.resolution);
    println!("  product optimum {:.9}", product.unit_min_margin);
    println!("  guaranteed      {:.9}", product.unit_bound);

    let spatial = UnitVectorSet::from_rows(&random_rows(5, 3, 5))?;
    let grid = grid_search_witness(&spatial, 6)?;
    println!("spatial n = 5: icosphere max-min {:.6} at {:.4?}", grid.value, grid.argument);

    let h = gram(&spatial);
    let bang = bang_sign_search(&h)?;
    println!("Bang: signs {} give min e_j (H e)_j = {:.6} >= 1: {}", bang.pattern, bang.min_value, bang.satisfied);

    let cross = cross_check_enumeration(&h, &cfg)?;
    println!(
        "enumeration cross-check: {} orthants, {} agreements, {} mismatches",
        cross.quadrants.len(),
        cross.agreements,
        cross.mismatches
    );
    Ok(())
}
