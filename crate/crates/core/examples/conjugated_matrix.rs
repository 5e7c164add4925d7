//! The conjugated matrix `m_jk = w_j H_jk w_k` and its spectral and diagonal bounds.

use plank::geom::{extremal_configuration, gram, UnitVectorSet};
use plank::cli::random_rows;
use plank::witness::{build_m, certify_zone_bound, check_m_bounds};
use plank::Config;

fn show(label: &str, vs: &UnitVectorSet, cfg: &Config) -> plank::Result<()> {
    let w = certify_zone_bound(vs, cfg)?.w;
    let m = build_m(&gram(vs), &w)?;
    let r = check_m_bounds(&m, &cfg.tol);
    println!("{label} (n = {})", r.n);
    for row in m.matrix().row_iter() {
        println!("  {:>9.5?}", row.iter().collect::<Vec<_>>());
    }
    println!("  |M1 - 1|_inf    {:.1e}", r.row_sum_error);
    println!("  lambda_max      {:.9} <= {}", r.lambda_max, r.n - 1);
    println!("  diagonal range  [{:.6}, {:.6}]", r.diag_min, r.diag_max);
    println!("  sharp limit     {:.6}", r.diag_sharp_limit);
    println!("  all bounds hold {}", r.all_ok());
    Ok(())
}

fn main() -> plank::Result<()> {
    let cfg = Config::default();
    show("extremal", &extremal_configuration(3)?, &cfg)?;
    show("random", &UnitVectorSet::from_rows(&random_rows(5, 3, 9))?, &cfg)?;
    Ok(())
}
