//! Zones of width `pi/3` around three equally spaced great circles cover the
//! sphere; narrower ones leave a hole in the direction of the witness.

use std::f64::consts::PI;

use plank::geom::{zone_covers, Zone};

fn main() -> plank::Result<()> {
    let normals: Vec<[f64; 3]> = (0..3)
        .map(|k| {
            let t = k as f64 * PI / 3.0;
            [t.cos(), t.sin(), 0.0]
        })
        .collect();
    for factor in [1.0, 0.99, 0.95] {
        let width = factor * PI / 3.0;
        let zones = normals
            .iter()
            .map(|n| Zone::new(*n, width))
            .collect::<plank::Result<Vec<_>>>()?;
        let r = zone_covers(&zones, 6)?;
        println!(
            "width {factor:.2} pi/3: covered {}, margin {:.6}, total width - pi = {:+.4}",
            r.covered,
            r.margin,
            r.total_width - PI
        );
        if let Some(p) = r.uncovered_point {
            println!("  uncovered point {p:.6?}");
        }
    }
    Ok(())
}
