//! Two branches whose single-map fixed points stay bounded while the
//! fixed points of their pairwise compositions run off to infinity —
//! the reason invariant sets of countable families need not be compact.

use countable_ifs::family::Family;
use countable_ifs::setops::unbounded_witness;

fn main() -> countable_ifs::Result<()> {
    let fam = Family::builtin("EX2")?;
    let witness = unbounded_witness(&fam, 1_000)?;

    println!("fixed points of the cross-compositions (exact):");
    for row in witness.rows.iter().take(5) {
        println!(
            "  i = {}: fix(G_i o F_i) = {} ~ {:.4}, fix(F_i o G_i) = {} ~ {:.4}",
            row.i, row.y, row.y_f64, row.z, row.z_f64
        );
    }
    let last = witness.rows.last().expect("nonempty");
    println!("  ...");
    println!("  i = {}: |fix(G o F)| ~ {:.1}", last.i, last.y_f64.abs());
    println!(
        "\n|y_i| nondecreasing: {} (max {:.3})",
        witness.abs_y_monotone, witness.max_abs_y
    );
    println!("any set containing all composition fixed points is unbounded");
    Ok(())
}
