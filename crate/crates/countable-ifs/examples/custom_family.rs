//! Families are described by rational-coefficient expressions in the map
//! index i, one ratio and one translation per coordinate. This one lives
//! in the plane and contracts toward a curve of fixed points.

use countable_ifs::cloud::PointCloud;
use countable_ifs::family::Family;
use countable_ifs::setops::{check_invariance, composition_fixed_points};

const CONFIG: &str = r#"{
    "dimension": 2,
    "truncation": 12,
    "declared_sup_ratio": null,
    "branches": [
        { "ratio": "i/(2*i+1)", "translation": ["1/(i+1)", "1/(i+1)^2"] }
    ]
}"#;

fn main() -> countable_ifs::Result<()> {
    let fam = Family::from_json("plane-curve", CONFIG)?;
    let sup = fam.sup_ratio()?;
    println!(
        "{}: {} maps in dimension {}, empirical sup ratio {:.4}",
        fam.name(),
        fam.alphabet().len(),
        fam.dimension(),
        sup.empirical
    );

    for (key, fp) in fam.fixed_points_exact()?.iter().take(3) {
        println!("  fix F_{} = ({}, {})", key.index, fp[0], fp[1]);
    }

    let p = composition_fixed_points(&fam, 3, 1_000_000)?;
    let (lo, hi) = p.cloud.bounding_box().expect("nonempty");
    println!(
        "compositions up to length 3: {} points in [{:.4}, {:.4}] x [{:.4}, {:.4}]",
        p.cloud.len(),
        lo[0],
        hi[0],
        lo[1],
        hi[1]
    );

    // the composition fixed points are nearly invariant as a set:
    // images of P_k under any map land near P_k again
    let residuals = check_invariance(&p.cloud, &fam)?;
    println!(
        "invariance residuals of the k = 3 cloud: outer {:.2e}, inner {:.2e}",
        residuals.outer, residuals.inner
    );

    // grow the cloud one image-union step and the outer residual shrinks
    let step = countable_ifs::setops::hutchinson_step(&p.cloud, &fam)?;
    let bigger = PointCloud::union(&p.cloud, &step)?;
    let after = check_invariance(&bigger, &fam)?;
    println!(
        "after one more image-union step ({} points): outer {:.2e}",
        bigger.len(),
        after.outer
    );
    Ok(())
}
