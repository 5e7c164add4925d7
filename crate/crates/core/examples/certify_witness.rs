//! Certify the zone bound for a random configuration and for the extremal one.
//!
//! ```text
//! cargo run --example certify_witness -- 6 3 42
//! ```

use plank::cli::random_rows;
use plank::geom::{extremal_configuration, UnitVectorSet};
use plank::witness::certify_zone_bound;
use plank::Config;

fn main() -> plank::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (n, d, seed) = match args[..] {
        [n, d, seed, ..] => (n, d, seed as u64),
        _ => (6, 3, 42),
    };
    let cfg = Config::default();

    let vs = UnitVectorSet::from_rows(&random_rows(n, d, seed))?;
    let r = certify_zone_bound(&vs, &cfg)?;
    println!("random n={n} d={d} seed={seed} via {}", r.path);
    println!("  margins    {:.6?}", r.margins.as_slice());
    println!("  min margin {:.9}", r.min_margin);
    println!("  bound      {:.9}", r.bound);
    println!("  w          {:.6?}", r.w.as_slice());

    // the bound is attained with equality here
    let ext = certify_zone_bound(&extremal_configuration(n)?, &cfg)?;
    println!(
        "extremal n={n}: min margin {:.12}, bound {:.12}, gap {:.1e}",
        ext.min_margin,
        ext.bound,
        ext.min_margin - ext.bound
    );
    Ok(())
}
