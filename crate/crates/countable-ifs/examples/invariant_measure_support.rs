//! The support of the invariant measure is the closure of the set of
//! composition fixed points. Sample the measure by chaos game, estimate
//! its support on a grid, and compare with the enumerated fixed points.

use countable_ifs::cloud;
use countable_ifs::family::Family;
use countable_ifs::measure::{chaos_game, support_estimate, ProbabilitySequence};
use countable_ifs::setops::composition_fixed_points;

fn main() -> countable_ifs::Result<()> {
    let fam = Family::builtin("EX1")?.with_truncation(20)?;
    let rho = ProbabilitySequence::geometric(0.5)?;
    let h = 1.0 / 128.0;

    let rep = chaos_game(&fam, &rho, 200_000, 1_000, 42)?;
    let support = support_estimate(&rep.measure, h, 1)?;
    println!(
        "sampled {} points ({} draws hit truncated indices and were redrawn)",
        rep.measure.len(),
        rep.truncation_resamples
    );
    println!("support estimate: {} occupied cells of width {h}", support.len());

    for k in [2u32, 3, 4] {
        let p = composition_fixed_points(&fam, k, 10_000_000)?;
        let d = cloud::hausdorff(&support, &p.cloud)?;
        println!(
            "k = {k}: {:>6} composition fixed points, hausdorff(support, P) = {d:.4} \
             (cell width {h}, enumeration resolution {:.4})",
            p.cloud.len(),
            p.resolution
        );
    }
    Ok(())
}
