//! Fixed points of the reciprocal family F_i(x) = i/(i+1) x + 1/(i+1)^2.
//! Each map fixes exactly 1/(i+1); composing maps fills in more of (0, 1/2].

use countable_ifs::family::Family;
use countable_ifs::setops::composition_fixed_points;

fn main() -> countable_ifs::Result<()> {
    let fam = Family::builtin("EX1")?.with_truncation(8)?;

    println!("single-map fixed points (exact):");
    for (key, fp) in fam.fixed_points_exact()? {
        println!("  i = {}  fix F_i = {}", key.index, fp[0]);
    }

    println!("\ncomposition fixed points:");
    for k in 1..=4 {
        let p = composition_fixed_points(&fam, k, 1_000_000)?;
        let (lo, hi) = p.cloud.bounding_box().expect("nonempty");
        println!(
            "  words up to length {k}: {:>5} compositions, {:>5} distinct points in [{:.4}, {:.4}]",
            p.words,
            p.cloud.len(),
            lo[0],
            hi[0]
        );
    }
    Ok(())
}
