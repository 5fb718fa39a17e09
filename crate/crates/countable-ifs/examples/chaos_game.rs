//! Chaos game for the halving pair x/2 and x/2 + 1/2 with equal weights.
//! The sampled law converges to the uniform distribution on [0,1]; the
//! Markov residual measures how close the sample is to being invariant.

use countable_ifs::family::Family;
use countable_ifs::measure::{
    chaos_game, markov_residual, uniform_cdf_deviation, ProbabilitySequence,
};

fn main() -> countable_ifs::Result<()> {
    let fam = Family::builtin("DYADIC")?;
    let rho = ProbabilitySequence::uniform(2)?;

    for n in [1_000usize, 10_000, 100_000] {
        let rep = chaos_game(&fam, &rho, n, 1_000, 42)?;
        let ks = uniform_cdf_deviation(&rep.measure, 0.0, 1.0)?;
        let res = markov_residual(&rep.measure, &fam, &rho, None)?;
        println!(
            "n = {n:>6}: CDF deviation from uniform {ks:.4e}, Markov residual {:.4e} ({})",
            res.residual, res.method
        );
    }

    // a biased coin tilts the mass toward the fixed point of the heavy map
    let biased = ProbabilitySequence::finite(vec![2.0 / 3.0, 1.0 / 3.0])?;
    let rep = chaos_game(&fam, &biased, 100_000, 1_000, 42)?;
    println!(
        "biased (2/3, 1/3): sample mean {:.4} (uniform would give 0.5)",
        rep.measure.mean()[0]
    );
    Ok(())
}
