//! Named verification suite. Each claim is a checkable mathematical
//! statement about the builtin families, run at fixed desk-scale
//! parameters; the report records what was measured against which
//! tolerance. Failures are report entries, never panics.

use std::time::Instant;

use num::rational::BigRational;
use num::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::cloud::{self, PointCloud};
use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::family::Family;
use crate::measure::{
    chaos_game, kravchenko_sum, markov_residual, support_estimate, uniform_cdf_deviation,
    EmpiricalMeasure, ProbabilitySequence,
};
use crate::rational::q;
use crate::setops::{
    attractor_approx, composition_fixed_points, enlargement_invariance, nondecreasing_interval,
    unbounded_witness, AttractorOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClaimStatus {
    Pass,
    Fail,
    NotApplicable,
}

impl ClaimStatus {
    /// Not-applicable counts as non-failing.
    pub fn is_ok(self) -> bool {
        !matches!(self, ClaimStatus::Fail)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClaimResult {
    pub name: String,
    /// The mathematical statement being checked.
    pub anchor: String,
    pub status: ClaimStatus,
    pub params: Value,
    pub measured: Value,
    pub tolerance: Value,
    pub detail: String,
    pub runtime_ms: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub claims: Vec<ClaimResult>,
    pub passed: usize,
    pub failed: usize,
    pub not_applicable: usize,
    pub all_pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

#[derive(Debug)]
pub struct VerifyOptions {
    /// Override for the family-parametric claims (currently: nondecreasing).
    pub family: Option<Family>,
    /// Horizon for the unbounded-growth witness.
    pub imax: u32,
    pub seed: u64,
    /// Word budget for the support-vs-compositions enumeration.
    pub word_budget: Option<u64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { family: None, imax: 100, seed: 42, word_budget: None }
    }
}

struct Outcome {
    status: ClaimStatus,
    params: Value,
    measured: Value,
    tolerance: Value,
    detail: String,
}

const CLAIMS: &[(&str, &str)] = &[
    (
        "example1-fixed-points",
        "F_i(x) = i/(i+1) x + 1/(i+1)^2 has fixed point exactly 1/(i+1), for every i up to 10^4.",
    ),
    (
        "example1-interval",
        "Every F_i(x) = i/(i+1) x + 1/(i+1)^2 maps [0, 1/2] into itself, exactly in rationals.",
    ),
    (
        "example2-closed-forms",
        "For the two branches with ratio -i/(i+1) and translations (2i+1)/i and 1/(i+1), the cross-composition fixed points equal -2i(i+1)/(2i+1) and ((i+1)^2(2i+1) - i^2)/(i(2i+1)), exactly.",
    ),
    (
        "example2-unbounded",
        "The cross-composition fixed points y_i satisfy |y_i| nondecreasing with |y_i| > i, so no bounded set contains all composition fixed points.",
    ),
    (
        "nondecreasing",
        "For a one-dimensional family of nondecreasing contractions, the interval [inf D, sup D] spanned by the fixed points is mapped into itself by every member.",
    ),
    (
        "minimality-dyadic",
        "For the halving pair x/2 and x/2 + 1/2, the fixed points of compositions of length <= 12 lie within 2^-10 Hausdorff distance of the iterated-image approximation of the smallest invariant set.",
    ),
    (
        "containment",
        "Every fixed point of a finite composition lies in any closed set that all maps send into itself; checked against the exact invariant intervals.",
    ),
    (
        "enlargement-r1",
        "When sup_i r_i = 1, each eps-enlargement of the invariant interval hull remains invariant: outer residual exactly 0, inner residual at most 1/(2(N+1)) plus grid spacing and shrinking in N.",
    ),
    (
        "rectangle-r1-2d",
        "In dimension 2 the enlarged rectangle hull is mapped into itself with outer residual exactly 0, the inner residual shrinking as the truncation grows.",
    ),
    (
        "kravchenko",
        "The series sum_i rho_i d(x_1, x_i) is summable: for geometric weights q = 1/2 the truncated sum is exactly at most 1/4 and bounded by the fixed-point diameter.",
    ),
    (
        "measure-dyadic",
        "The chaos game for the halving pair with equal weights samples the uniform law on [0,1]: CDF deviation <= 1e-2 and exact Wasserstein-1 Markov residual <= 5e-3 at n = 10^6.",
    ),
    (
        "measure-sensitivity",
        "The Markov residual separates non-invariant measures: the uniform law on [0,2] under the halving pair has Wasserstein-1 residual 1/4.",
    ),
    (
        "support-vs-compositions",
        "The support of the sampled invariant measure matches the fixed points of finite compositions: Hausdorff distance at most 2h plus the enumeration resolution.",
    ),
    (
        "oracle-hausdorff",
        "The grid-accelerated Hausdorff distance equals the quadratic scan bit for bit on 200 random cloud pairs.",
    ),
    (
        "oracle-sample-index",
        "Closed-form inverse-CDF sampling of the geometric sequence equals a sequential scan of the cumulative distribution for every u on a 10^6 grid.",
    ),
    (
        "dsl-roundtrip",
        "Coefficient expressions satisfy print-parse identity and evaluate to the same exact rationals as an independent fraction evaluator; the named family coefficients evaluate to their hand values.",
    ),
];

pub fn claim_names() -> Vec<&'static str> {
    CLAIMS.iter().map(|(n, _)| *n).collect()
}

pub fn claim_anchor(name: &str) -> Option<&'static str> {
    CLAIMS.iter().find(|(n, _)| *n == name).map(|(_, a)| *a)
}

pub fn run_claim(name: &str, opts: &VerifyOptions) -> Result<ClaimResult> {
    let anchor = claim_anchor(name).ok_or_else(|| Error::UnknownClaim {
        name: name.to_string(),
        valid: claim_names().join(", "),
    })?;
    let start = Instant::now();
    let outcome = dispatch(name, opts).unwrap_or_else(|err| Outcome {
        status: ClaimStatus::Fail,
        params: Value::Null,
        measured: Value::Null,
        tolerance: Value::Null,
        detail: format!("error[{}]: {err}", err.code()),
    });
    Ok(ClaimResult {
        name: name.to_string(),
        anchor: anchor.to_string(),
        status: outcome.status,
        params: outcome.params,
        measured: outcome.measured,
        tolerance: outcome.tolerance,
        detail: outcome.detail,
        runtime_ms: start.elapsed().as_millis() as u64,
    })
}

pub fn run_all(opts: &VerifyOptions) -> Result<VerifyReport> {
    let mut claims = Vec::with_capacity(CLAIMS.len());
    for (name, _) in CLAIMS {
        claims.push(run_claim(name, opts)?);
    }
    Ok(report_from(claims))
}

pub fn report_from(claims: Vec<ClaimResult>) -> VerifyReport {
    let passed = claims.iter().filter(|c| c.status == ClaimStatus::Pass).count();
    let failed = claims.iter().filter(|c| c.status == ClaimStatus::Fail).count();
    let not_applicable =
        claims.iter().filter(|c| c.status == ClaimStatus::NotApplicable).count();
    VerifyReport { all_pass: failed == 0, passed, failed, not_applicable, claims, timestamp: None }
}

fn pass_fail(ok: bool) -> ClaimStatus {
    if ok {
        ClaimStatus::Pass
    } else {
        ClaimStatus::Fail
    }
}

fn dispatch(name: &str, opts: &VerifyOptions) -> Result<Outcome> {
    match name {
        "example1-fixed-points" => example1_fixed_points(),
        "example1-interval" => example1_interval(),
        "example2-closed-forms" => example2_closed_forms(),
        "example2-unbounded" => example2_unbounded(opts.imax),
        "nondecreasing" => nondecreasing(opts.family.as_ref()),
        "minimality-dyadic" => minimality_dyadic(),
        "containment" => containment(),
        "enlargement-r1" => enlargement_r1(),
        "rectangle-r1-2d" => rectangle_r1_2d(),
        "kravchenko" => kravchenko(),
        "measure-dyadic" => measure_dyadic(opts.seed),
        "measure-sensitivity" => measure_sensitivity(),
        "support-vs-compositions" => {
            support_vs_compositions(opts.seed, opts.word_budget.unwrap_or(100_000_000))
        }
        "oracle-hausdorff" => oracle_hausdorff(),
        "oracle-sample-index" => oracle_sample_index(),
        "dsl-roundtrip" => dsl_roundtrip(),
        _ => unreachable!("dispatch is keyed by the claim table"),
    }
}

fn example1_fixed_points() -> Result<Outcome> {
    let n = 10_000u32;
    let fam = Family::builtin("EX1")?.with_truncation(n)?;
    let mut mismatches = 0u32;
    for (key, fp) in fam.fixed_points_exact()? {
        if fp[0] != q(1, key.index as i64 + 1) {
            mismatches += 1;
        }
    }
    Ok(Outcome {
        status: pass_fail(mismatches == 0),
        params: json!({"family": "EX1", "indices": n}),
        measured: json!({"mismatches": mismatches}),
        tolerance: json!("exact"),
        detail: format!("checked fixed points 1/(i+1) for i <= {n} in exact rationals"),
    })
}

fn example1_interval() -> Result<Outcome> {
    let n = 10_000u32;
    let fam = Family::builtin("EX1")?.with_truncation(n)?;
    let lo = q(0, 1);
    let hi = q(1, 2);
    let mut violations = 0u32;
    for key in fam.alphabet() {
        let map = fam.map(key)?;
        // ratio >= 0: the image of [0, 1/2] is [F(0), F(1/2)]
        let img_lo = map.apply_exact(std::slice::from_ref(&lo));
        let img_hi = map.apply_exact(std::slice::from_ref(&hi));
        if img_lo[0] < lo || img_hi[0] > hi {
            violations += 1;
        }
    }
    Ok(Outcome {
        status: pass_fail(violations == 0),
        params: json!({"family": "EX1", "indices": n, "interval": [0.0, 0.5]}),
        measured: json!({"violations": violations}),
        tolerance: json!("exact"),
        detail: format!("F_i([0,1/2]) inside [0,1/2] exactly for all i <= {n}"),
    })
}

fn y_closed_form(i: i64) -> BigRational {
    q(-2 * i * (i + 1), 2 * i + 1)
}

fn z_closed_form(i: i64) -> BigRational {
    let i_ = q(i, 1);
    let ip1 = q(i + 1, 1);
    let tw = q(2 * i + 1, 1);
    (&ip1 * &ip1 * &tw - &i_ * &i_) / (&i_ * &tw)
}

fn example2_closed_forms() -> Result<Outcome> {
    let imax = 1_000u32;
    let fam = Family::builtin("EX2")?;
    let witness = unbounded_witness(&fam, imax)?;
    let mut mismatches = 0u32;
    for row in &witness.rows {
        let i = row.i as i64;
        if row.y != y_closed_form(i) || row.z != z_closed_form(i) {
            mismatches += 1;
        }
    }
    Ok(Outcome {
        status: pass_fail(mismatches == 0),
        params: json!({"family": "EX2", "indices": imax}),
        measured: json!({"mismatches": mismatches, "y_1": -4.0/3.0, "z_1": 11.0/3.0}),
        tolerance: json!("exact"),
        detail: "compose-then-solve fixed points equal the closed forms exactly".into(),
    })
}

fn example2_unbounded(imax: u32) -> Result<Outcome> {
    let fam = Family::builtin("EX2")?;
    let witness = unbounded_witness(&fam, imax)?;
    let ok = witness.abs_y_monotone && witness.max_abs_y > imax as f64;
    Ok(Outcome {
        status: pass_fail(ok),
        params: json!({"family": "EX2", "imax": imax}),
        measured: json!({
            "max_abs_y": witness.max_abs_y,
            "max_abs_z": witness.max_abs_z,
            "monotone": witness.abs_y_monotone,
        }),
        tolerance: json!({"max_abs_y": format!("> {imax}")}),
        detail: format!("|y_i| grows past {} by i = {imax}", imax),
    })
}

fn nondecreasing(family: Option<&Family>) -> Result<Outcome> {
    let default_fam;
    let fam = match family {
        Some(f) => f,
        None => {
            default_fam = Family::builtin("EX1")?.with_truncation(1_000)?;
            &default_fam
        }
    };
    match nondecreasing_interval(fam) {
        Ok(rep) => Ok(Outcome {
            status: pass_fail(rep.all_inside),
            params: json!({"family": fam.name(), "N": fam.truncation()}),
            measured: json!({
                "interval": [rep.lo, rep.hi],
                "maps_checked": rep.per_map.len(),
                "all_inside": rep.all_inside,
            }),
            tolerance: json!("exact"),
            detail: "each F_i([inf D, sup D]) inside [inf D, sup D], endpoints exact".into(),
        }),
        Err(err @ (Error::NegativeRatio { .. } | Error::NotOneDimensional { .. })) => Ok(Outcome {
            status: ClaimStatus::NotApplicable,
            params: json!({"family": fam.name(), "N": fam.truncation()}),
            measured: Value::Null,
            tolerance: json!("exact"),
            detail: format!("refused: {err}"),
        }),
        Err(err) => Err(err),
    }
}

fn minimality_dyadic() -> Result<Outcome> {
    let fam = Family::builtin("DYADIC")?;
    let p = composition_fixed_points(&fam, 12, 1_000_000)?;
    let attractor = attractor_approx(&fam, &AttractorOptions { tol: 1e-4, ..Default::default() })?;
    let d = cloud::hausdorff(&p.cloud, &attractor.cloud)?;
    let bound = (2.0f64).powi(-10);
    Ok(Outcome {
        status: pass_fail(attractor.converged && d <= bound),
        params: json!({"family": "DYADIC", "k": 12, "tol": 1e-4}),
        measured: json!({
            "hausdorff": d,
            "composition_points": p.cloud.len(),
            "attractor_points": attractor.cloud.len(),
            "attractor_converged": attractor.converged,
        }),
        tolerance: json!({"hausdorff": bound}),
        detail: "composition fixed points approach the iterated-image set".into(),
    })
}

fn containment() -> Result<Outcome> {
    // exact invariant interval per family; the composition fixed points
    // may never leave it
    let cases = [("EX1", 50u32, 3u32, 0.0, 0.5), ("DYADIC", 2, 8, 0.0, 1.0)];
    let tol = 1e-9;
    let mut worst = 0.0f64;
    for (name, n, k, lo, hi) in cases {
        let fam = Family::builtin(name)?.with_truncation(n)?;
        let p = composition_fixed_points(&fam, k, 1_000_000)?;
        for pt in p.cloud.iter() {
            let excess = (lo - pt[0]).max(pt[0] - hi).max(0.0);
            worst = worst.max(excess);
        }
    }
    Ok(Outcome {
        status: pass_fail(worst <= tol),
        params: json!({"cases": ["EX1 N=50 k=3 in [0,1/2]", "DYADIC k=8 in [0,1]"]}),
        measured: json!({"max_distance_outside": worst}),
        tolerance: json!({"max_distance_outside": tol}),
        detail: "composition fixed points stay inside every invariant interval".into(),
    })
}

fn enlargement_r1() -> Result<Outcome> {
    let eps = 0.1f64;
    let grid: Vec<f64> = (0..=1024).map(|j| 0.5 * j as f64 / 1024.0).collect();
    let spacing = 0.5 / 1024.0;
    let a = PointCloud::from_flat(1, grid)?;

    let fam_n = Family::builtin("EX1")?.with_truncation(1_000)?;
    let rep_n = enlargement_invariance(&fam_n, &a, &[eps])?.remove(0);
    let fam_2n = Family::builtin("EX1")?.with_truncation(2_000)?;
    let rep_2n = enlargement_invariance(&fam_2n, &a, &[eps])?.remove(0);

    let bound = 1.0 / (2.0 * 1_001.0) + spacing;
    let ok = rep_n.outer_is_zero
        && rep_2n.outer_is_zero
        && rep_n.inner <= bound
        && rep_2n.inner_exact.as_ref().unwrap() < rep_n.inner_exact.as_ref().unwrap();
    Ok(Outcome {
        status: pass_fail(ok),
        params: json!({"family": "EX1", "N": [1000, 2000], "eps": eps, "grid_points": 1025}),
        measured: json!({
            "outer": rep_n.outer,
            "outer_exactly_zero": rep_n.outer_is_zero,
            "inner_at_n": rep_n.inner,
            "inner_at_2n": rep_2n.inner,
        }),
        tolerance: json!({"outer": "exactly 0", "inner": bound}),
        detail: "enlarged hull invariance at ratio sup 1; inner residual shrinks with N".into(),
    })
}

fn rectangle_r1_2d() -> Result<Outcome> {
    let cfg = r#"{"dimension":2,"truncation":100,"declared_sup_ratio":1.0,
        "branches":[{"ratio":"i/(i+1)","translation":["1/(i+1)^2","1/(i+1)^2"]}]}"#;
    let fam = Family::from_json("plane-reciprocal", cfg)?;
    let mut pts = Vec::new();
    for x in 0..=32 {
        for y in 0..=32 {
            pts.push(vec![0.5 * x as f64 / 32.0, 0.5 * y as f64 / 32.0]);
        }
    }
    let a = PointCloud::from_points(2, pts)?;
    let reps = enlargement_invariance(&fam, &a, &[0.05, 0.1])?;
    let fam2 = fam.with_truncation(200)?;
    let reps2 = enlargement_invariance(&fam2, &a, &[0.1])?;
    let ok = reps.iter().all(|r| r.outer_is_zero) && reps2[0].inner < reps[1].inner;
    Ok(Outcome {
        status: pass_fail(ok),
        params: json!({"family": "plane-reciprocal", "N": [100, 200], "eps": [0.05, 0.1]}),
        measured: json!({
            "outer_exactly_zero": reps.iter().all(|r| r.outer_is_zero),
            "inner_at_n": reps[1].inner,
            "inner_at_2n": reps2[0].inner,
            "inner_sample_spacing": reps[1].inner_sample_spacing,
        }),
        tolerance: json!({"outer": "exactly 0", "inner": "decreasing in N"}),
        detail: "rectangle hull invariance in dimension 2 (inner residual sampled)".into(),
    })
}

fn kravchenko() -> Result<Outcome> {
    let fam = Family::builtin("EX1")?.with_truncation(1_000)?;
    let seq = ProbabilitySequence::geometric(0.5)?;
    let rep = kravchenko_sum(&fam, &seq)?;
    let sum = rep.partial_sum_exact.as_ref().expect("dimension 1");
    let ok = sum <= &q(1, 4) && rep.within_diam;
    Ok(Outcome {
        status: pass_fail(ok),
        params: json!({"family": "EX1", "N": 1000, "rho": "geometric q=1/2"}),
        measured: json!({
            "partial_sum": rep.partial_sum,
            "diam": rep.diam,
            "tail_weight": rep.tail_weight,
        }),
        tolerance: json!({"partial_sum": 0.25, "bound": "<= diam, exact"}),
        detail: "summability partial sum evaluated in exact rationals".into(),
    })
}

fn measure_dyadic(seed: u64) -> Result<Outcome> {
    let fam = Family::builtin("DYADIC")?;
    let seq = ProbabilitySequence::uniform(2)?;
    let rep = chaos_game(&fam, &seq, 1_000_000, 1_000, seed)?;
    let dev = uniform_cdf_deviation(&rep.measure, 0.0, 1.0)?;
    let res = markov_residual(&rep.measure, &fam, &seq, None)?;
    let ok = dev <= 1e-2 && res.residual <= 5e-3;
    Ok(Outcome {
        status: pass_fail(ok),
        params: json!({"family": "DYADIC", "rho": [0.5, 0.5], "n": 1_000_000, "burn_in": 1000, "seed": seed}),
        measured: json!({"cdf_deviation": dev, "markov_residual": res.residual}),
        tolerance: json!({"cdf_deviation": 1e-2, "markov_residual": 5e-3}),
        detail: "sampled law matches the uniform fixed point of the Markov operator".into(),
    })
}

fn measure_sensitivity() -> Result<Outcome> {
    let n = 100_000usize;
    let grid: Vec<f64> = (0..n).map(|j| 2.0 * j as f64 / (n - 1) as f64).collect();
    let mu = EmpiricalMeasure::new(1, grid)?;
    let fam = Family::builtin("DYADIC")?;
    let seq = ProbabilitySequence::uniform(2)?;
    let res = markov_residual(&mu, &fam, &seq, None)?;
    let ok = res.residual >= 0.2 && (res.residual - 0.25).abs() < 1e-3;
    Ok(Outcome {
        status: pass_fail(ok),
        params: json!({"family": "DYADIC", "measure": "uniform on [0,2]", "n": n}),
        measured: json!({"markov_residual": res.residual}),
        tolerance: json!({"analytic_value": 0.25, "at_least": 0.2}),
        detail: "a deliberately wrong measure is far from the Markov fixed point".into(),
    })
}

fn support_vs_compositions(seed: u64, budget: u64) -> Result<Outcome> {
    let fam = Family::builtin("EX1")?.with_truncation(20)?;
    let seq = ProbabilitySequence::geometric(0.5)?;
    let h = 1.0 / 128.0;
    let rep = chaos_game(&fam, &seq, 1_000_000, 1_000, seed)?;
    let support = support_estimate(&rep.measure, h, 1)?;
    let p = composition_fixed_points(&fam, 6, budget)?;
    let d = cloud::hausdorff(&support, &p.cloud)?;
    let bound = 2.0 * h + p.resolution;
    Ok(Outcome {
        status: pass_fail(d <= bound),
        params: json!({
            "family": "EX1", "N": 20, "rho": "geometric q=1/2",
            "n": 1_000_000, "h": h, "k": 6, "word_budget": budget, "seed": seed,
        }),
        measured: json!({
            "hausdorff": d,
            "support_cells": support.len(),
            "composition_points": p.cloud.len(),
            "enumeration_resolution": p.resolution,
            "truncation_resamples": rep.truncation_resamples,
        }),
        tolerance: json!({"hausdorff": bound}),
        detail: "support of the sampled measure vs composition fixed points".into(),
    })
}

fn brute_directed_sq(from: &PointCloud, to: &PointCloud) -> f64 {
    let mut worst = 0.0f64;
    for p in from.iter() {
        let mut best = f64::INFINITY;
        for t in to.iter() {
            let d = cloud::dist_sq(p, t);
            if d < best {
                best = d;
            }
        }
        if best > worst {
            worst = best;
        }
    }
    worst
}

fn oracle_hausdorff() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let random_cloud = |dim: usize, rng: &mut ChaCha8Rng| -> Result<PointCloud> {
        let n = rng.random_range(1..=160usize);
        let mut data = Vec::with_capacity(n * dim);
        let center: f64 = rng.random_range(-5.0..5.0);
        for _ in 0..n * dim {
            if rng.random_bool(0.25) {
                // tight cluster to stress bucket boundaries
                data.push(center + rng.random_range(-1e-6..1e-6));
            } else {
                data.push(rng.random_range(-10.0..10.0));
            }
        }
        PointCloud::from_flat(dim, data)
    };
    let pairs = 200;
    let mut mismatches = 0u32;
    for t in 0..pairs {
        let dim = t % 3 + 1;
        let a = random_cloud(dim, &mut rng)?;
        let b = random_cloud(dim, &mut rng)?;
        let fast = cloud::hausdorff(&a, &b)?;
        let brute = brute_directed_sq(&a, &b).max(brute_directed_sq(&b, &a)).sqrt();
        if fast.to_bits() != brute.to_bits() {
            mismatches += 1;
        }
    }
    Ok(Outcome {
        status: pass_fail(mismatches == 0),
        params: json!({"pairs": pairs, "dimensions": [1, 2, 3], "seed": 4242}),
        measured: json!({"mismatches": mismatches}),
        tolerance: json!("bit-exact"),
        detail: "spatial-index Hausdorff vs quadratic scan".into(),
    })
}

fn oracle_sample_index() -> Result<Outcome> {
    let grid = 1_000_000u32;
    let mut mismatches = 0u64;
    for qv in [0.5, 0.3, 0.9] {
        let seq = ProbabilitySequence::geometric(qv)?;
        let mut scan = 1u32;
        let mut prev_u = 0.0f64;
        for t in 1..grid {
            let u = t as f64 / grid as f64;
            debug_assert!(u > prev_u);
            prev_u = u;
            // sequential scan; u is increasing so the index never moves back
            while seq.cdf(scan) < u {
                scan += 1;
            }
            if seq.sample_index(u) != scan {
                mismatches += 1;
            }
        }
    }
    Ok(Outcome {
        status: pass_fail(mismatches == 0),
        params: json!({"q": [0.5, 0.3, 0.9], "grid": grid}),
        measured: json!({"mismatches": mismatches}),
        tolerance: json!("exact"),
        detail: "logarithm closed form vs sequential cumulative scan".into(),
    })
}

// independent evaluator for the expression oracle: i128 fractions with
// explicit gcd reduction, no shared code with the library evaluator
#[derive(Clone, Copy)]
struct Frac {
    n: i128,
    d: i128,
}

impl Frac {
    fn reduce(self) -> Option<Frac> {
        if self.d == 0 {
            return None;
        }
        fn gcd(a: i128, b: i128) -> i128 {
            if b == 0 {
                a.abs()
            } else {
                gcd(b, a % b)
            }
        }
        let g = gcd(self.n, self.d).max(1);
        let sign = if self.d < 0 { -1 } else { 1 };
        Some(Frac { n: sign * self.n / g, d: sign * self.d / g })
    }
}

fn frac_eval(e: &Expr, i: i128) -> Option<Frac> {
    let out = match e {
        Expr::Int(v) => {
            let n: i128 = v.to_string().parse().ok()?;
            Frac { n, d: 1 }
        }
        Expr::Var => Frac { n: i, d: 1 },
        Expr::Neg(inner) => {
            let f = frac_eval(inner, i)?;
            Frac { n: f.n.checked_neg()?, d: f.d }
        }
        Expr::Add(a, b) => {
            let (a, b) = (frac_eval(a, i)?, frac_eval(b, i)?);
            Frac {
                n: a.n.checked_mul(b.d)?.checked_add(b.n.checked_mul(a.d)?)?,
                d: a.d.checked_mul(b.d)?,
            }
        }
        Expr::Sub(a, b) => {
            let (a, b) = (frac_eval(a, i)?, frac_eval(b, i)?);
            Frac {
                n: a.n.checked_mul(b.d)?.checked_sub(b.n.checked_mul(a.d)?)?,
                d: a.d.checked_mul(b.d)?,
            }
        }
        Expr::Mul(a, b) => {
            let (a, b) = (frac_eval(a, i)?, frac_eval(b, i)?);
            Frac { n: a.n.checked_mul(b.n)?, d: a.d.checked_mul(b.d)? }
        }
        Expr::Div(a, b) => {
            let (a, b) = (frac_eval(a, i)?, frac_eval(b, i)?);
            if b.n == 0 {
                return None;
            }
            Frac { n: a.n.checked_mul(b.d)?, d: a.d.checked_mul(b.n)? }
        }
        Expr::Pow(base, k) => {
            let b = frac_eval(base, i)?;
            let mut acc = Frac { n: 1, d: 1 };
            for _ in 0..*k {
                acc = Frac { n: acc.n.checked_mul(b.n)?, d: acc.d.checked_mul(b.d)? };
            }
            acc
        }
    };
    out.reduce()
}

fn random_expr_string(rng: &mut ChaCha8Rng, depth: u32) -> String {
    fn base(rng: &mut ChaCha8Rng, depth: u32) -> String {
        match rng.random_range(0..if depth > 0 { 3 } else { 2 }) {
            0 => rng.random_range(0..=12u32).to_string(),
            1 => "i".to_string(),
            _ => format!("({})", expr(rng, depth - 1)),
        }
    }
    fn factor(rng: &mut ChaCha8Rng, depth: u32) -> String {
        if depth > 0 && rng.random_bool(0.2) {
            return format!("-{}", factor(rng, depth - 1));
        }
        let b = base(rng, depth);
        if rng.random_bool(0.3) {
            format!("{b}^{}", rng.random_range(0..=3u32))
        } else {
            b
        }
    }
    fn term(rng: &mut ChaCha8Rng, depth: u32) -> String {
        let mut s = factor(rng, depth);
        for _ in 0..rng.random_range(0..=2u32) {
            let op = if rng.random_bool(0.7) { '*' } else { '/' };
            s = format!("{s}{op}{}", factor(rng, depth));
        }
        s
    }
    fn expr(rng: &mut ChaCha8Rng, depth: u32) -> String {
        let mut s = term(rng, depth);
        for _ in 0..rng.random_range(0..=2u32) {
            let op = if rng.random_bool(0.5) { '+' } else { '-' };
            s = format!("{s}{op}{}", term(rng, depth));
        }
        s
    }
    expr(rng, depth)
}

fn dsl_roundtrip() -> Result<Outcome> {
    // the named family coefficients at small indices, frozen by hand
    let named: [(&str, [(i64, i64); 3]); 5] = [
        ("i/(i+1)", [(1, 2), (2, 3), (3, 4)]),
        ("1/(i+1)^2", [(1, 4), (1, 9), (1, 16)]),
        ("(2*i+1)/i", [(3, 1), (5, 2), (7, 3)]),
        ("-i/(i+1)", [(-1, 2), (-2, 3), (-3, 4)]),
        ("1/(i+1)", [(1, 2), (1, 3), (1, 4)]),
    ];
    let mut named_failures = 0u32;
    for (src, values) in named {
        let ast = expr::parse(src)?;
        for (idx, (n, d)) in values.iter().enumerate() {
            if ast.eval(idx as u32 + 1)? != q(*n, *d) {
                named_failures += 1;
            }
        }
        // print-parse identity on the named expressions too
        if expr::parse(&ast.to_string())? != ast {
            named_failures += 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut roundtrip_failures = 0u32;
    let mut eval_mismatches = 0u32;
    let mut evaluated_pairs = 0u32;
    let mut cases = 0u32;
    while cases < 100 {
        let src = random_expr_string(&mut rng, 3);
        let ast = match expr::parse(&src) {
            Ok(a) => a,
            Err(_) => continue, // generator follows the grammar; be safe anyway
        };
        cases += 1;
        let printed = ast.to_string();
        match expr::parse(&printed) {
            Ok(re) if re == ast && re.to_string() == printed => {}
            _ => roundtrip_failures += 1,
        }
        for i in [1u32, 2, 3, 5, 10] {
            let ours = ast.eval(i);
            let theirs = frac_eval(&ast, i as i128);
            match (ours, theirs) {
                (Ok(v), Some(f)) => {
                    evaluated_pairs += 1;
                    let want = BigRational::new(BigInt::from(f.n), BigInt::from(f.d));
                    if v != want {
                        eval_mismatches += 1;
                    }
                }
                // overflow in the independent evaluator or division by
                // zero in either: not a comparable case
                _ => {}
            }
        }
    }
    let ok = named_failures == 0
        && roundtrip_failures == 0
        && eval_mismatches == 0
        && evaluated_pairs >= 100;
    Ok(Outcome {
        status: pass_fail(ok),
        params: json!({"random_cases": cases, "indices": [1, 2, 3, 5, 10], "seed": 99}),
        measured: json!({
            "named_failures": named_failures,
            "roundtrip_failures": roundtrip_failures,
            "eval_mismatches": eval_mismatches,
            "evaluated_pairs": evaluated_pairs,
        }),
        tolerance: json!("exact"),
        detail: "print-parse identity and exact agreement with an i128 fraction evaluator".into(),
    })
}
