//! For nondecreasing contractions on the line, the interval spanned by
//! the single-map fixed points is already invariant: no enlargement is
//! needed. Maps with negative ratios are refused — the argument breaks.

use countable_ifs::family::Family;
use countable_ifs::setops::nondecreasing_interval;

fn main() -> countable_ifs::Result<()> {
    let fam = Family::builtin("EX1")?.with_truncation(100)?;
    let rep = nondecreasing_interval(&fam)?;
    println!(
        "{}: [inf D, sup D] = [{}, {}] (exact endpoints {} and {})",
        fam.name(),
        rep.lo,
        rep.hi,
        rep.lo_exact,
        rep.hi_exact
    );
    println!(
        "all {} maps send the interval into itself: {}",
        rep.per_map.len(),
        rep.all_inside
    );
    let tightest = rep
        .per_map
        .iter()
        .max_by(|a, b| a.image_hi.total_cmp(&b.image_hi))
        .expect("nonempty");
    println!(
        "widest image: map i = {} covers [{:.6}, {:.6}]",
        tightest.key.index, tightest.image_lo, tightest.image_hi
    );

    // flipping maps are rejected with a precise reason
    let flipping = Family::builtin("EX2")?;
    match nondecreasing_interval(&flipping) {
        Err(err) => println!("\n{}: refused — {err}", flipping.name()),
        Ok(_) => unreachable!("EX2 has negative ratios"),
    }
    Ok(())
}
