//! Iterate the union of images until the point cloud stops moving.
//! For the halving pair the limit is [0,1]; a single map collapses to its
//! fixed point.

use countable_ifs::family::Family;
use countable_ifs::setops::{attractor_approx, AttractorOptions};

fn run(fam: &Family, tol: f64) -> countable_ifs::Result<()> {
    let result = attractor_approx(fam, &AttractorOptions { tol, ..Default::default() })?;
    let (lo, hi) = result.cloud.bounding_box().expect("nonempty");
    println!(
        "{}: {} points in [{:.6}, {:.6}] after {} iterations (last delta {:.2e}, {})",
        fam.name(),
        result.cloud.len(),
        lo[0],
        hi[0],
        result.iterations,
        result.last_delta,
        result.stop_reason.as_str()
    );
    Ok(())
}

fn main() -> countable_ifs::Result<()> {
    run(&Family::builtin("DYADIC")?, 1e-4)?;
    run(&Family::builtin("GEO(1/3)")?.with_truncation(30)?, 1e-6)?;
    // one map only: the invariant set is the single fixed point
    run(&Family::builtin("GEO(1/2)")?.with_truncation(1)?, 1e-9)?;
    Ok(())
}
