//! Set-level operations: fixed points of finite compositions, Hutchinson
//! iteration toward the smallest invariant set, invariance residuals, and
//! the two interval/rectangle constructions that stay invariant even when
//! the ratios approach 1.
//!
//! Exactness split: anything about coefficients, fixed points of named
//! compositions, interval endpoints, and hull residuals runs in rationals;
//! bulk enumeration and cloud geometry run in f64.

use num::rational::BigRational;
use num::{Signed, Zero};

use crate::cloud::{self, PointCloud};
use crate::contraction::compose;
use crate::error::{Error, Result};
use crate::family::{Family, MapKey};
use crate::rational;

pub const DEFAULT_WORD_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone)]
pub struct CompositionFixedPoints {
    pub cloud: PointCloud,
    /// Words actually enumerated (all lengths 1..=max_word_len).
    pub words: u64,
    pub max_word_len: u32,
    pub alphabet_len: usize,
    /// (max |r_i|)^k times the cloud extent: any fixed point of a longer
    /// word lies within this distance of the enumerated cloud.
    pub resolution: f64,
}

struct WordDfs<'a> {
    ratios: &'a [f64],
    translations: &'a [&'a [f64]],
    dim: usize,
    max_len: u32,
    /// translation coefficients of the word on the stack, one row per depth
    scratch: Vec<Vec<f64>>,
    data: Vec<f64>,
    words: u64,
}

impl WordDfs<'_> {
    fn visit(&mut self, depth: usize, ratio: f64) {
        self.words += 1;
        let denom = 1.0 - ratio;
        for j in 0..self.dim {
            self.data.push(self.scratch[depth][j] / denom);
        }
        if depth == self.max_len as usize {
            return;
        }
        for letter in 0..self.ratios.len() {
            let child_ratio = ratio * self.ratios[letter];
            let (head, tail) = self.scratch.split_at_mut(depth + 1);
            for j in 0..self.dim {
                tail[0][j] = ratio * self.translations[letter][j] + head[depth][j];
            }
            self.visit(depth + 1, child_ratio);
        }
    }
}

/// Fixed points of every composition of length 1..=k over the truncated
/// alphabet. Deduplicated and sorted; identical for any enumeration order.
pub fn composition_fixed_points(
    family: &Family,
    k: u32,
    budget: u64,
) -> Result<CompositionFixedPoints> {
    if k == 0 {
        return Err(Error::InvalidWord("maximum word length k must be >= 1".into()));
    }
    let maps = family.maps()?;
    let m = maps.len() as u128;
    let mut words_total: u128 = 0;
    let mut level: u128 = 1;
    for _ in 0..k {
        level = level.saturating_mul(m);
        words_total = words_total.saturating_add(level);
    }
    if words_total > budget as u128 {
        return Err(Error::BudgetExceeded { words: words_total, budget });
    }

    let dim = family.dimension();
    let ratios: Vec<f64> = maps.iter().map(|m| m.ratio_f64()).collect();
    let translations: Vec<&[f64]> = maps.iter().map(|m| m.translation_f64()).collect();
    let mut dfs = WordDfs {
        ratios: &ratios,
        translations: &translations,
        dim,
        max_len: k,
        scratch: vec![vec![0.0; dim]; k as usize + 1],
        data: Vec::with_capacity(words_total as usize * dim),
        words: 0,
    };
    // roots: each single letter is a word of length 1
    for letter in 0..ratios.len() {
        dfs.scratch[1].copy_from_slice(translations[letter]);
        dfs.visit(1, ratios[letter]);
    }
    let words = dfs.words;
    let cloud = PointCloud::from_flat(dim, dfs.data)?;
    let r_max = ratios.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    let resolution = r_max.powi(k as i32) * cloud.extent();
    Ok(CompositionFixedPoints {
        cloud,
        words,
        max_word_len: k,
        alphabet_len: ratios.len(),
        resolution,
    })
}

/// One application of A -> union of F_i(A) over the truncated alphabet.
pub fn hutchinson_step(cloud: &PointCloud, family: &Family) -> Result<PointCloud> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if cloud.dim() != family.dimension() {
        return Err(Error::DimensionMismatch { expected: family.dimension(), got: cloud.dim() });
    }
    let maps = family.maps()?;
    let dim = cloud.dim();
    let mut data = Vec::with_capacity(cloud.len() * maps.len() * dim);
    let mut out = vec![0.0; dim];
    for map in &maps {
        for p in cloud.iter() {
            map.apply_into(p, &mut out);
            data.extend_from_slice(&out);
        }
    }
    PointCloud::from_flat(dim, data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIters,
    PointBudget,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::MaxIters => "max-iters",
            StopReason::PointBudget => "point-budget",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AttractorOptions {
    pub tol: f64,
    pub max_iters: u32,
    /// Stop before a Hutchinson step would exceed this many points.
    pub max_points: usize,
}

impl Default for AttractorOptions {
    fn default() -> Self {
        AttractorOptions { tol: 1e-3, max_iters: 1_000, max_points: 4_000_000 }
    }
}

#[derive(Debug, Clone)]
pub struct AttractorResult {
    pub cloud: PointCloud,
    pub iterations: u32,
    pub last_delta: f64,
    pub converged: bool,
    pub stop_reason: StopReason,
}

/// Iterates the Hutchinson step from the first map's fixed point until
/// successive clouds are closer than tol in Hausdorff distance. Partial
/// results are returned (flagged) when an iteration or point budget stops
/// the run first.
pub fn attractor_approx(family: &Family, opts: &AttractorOptions) -> Result<AttractorResult> {
    let rep = family.sup_ratio()?;
    if rep.empirical >= 1.0 - 1e-9 {
        return Err(Error::SupRatioTooLarge { sup: rep.empirical });
    }
    let alphabet = family.alphabet();
    let first = family.map(alphabet[0])?;
    let branch_factor = alphabet.len();
    let mut cur = PointCloud::from_flat(family.dimension(), first.fixed_point_f64())?;
    let mut delta = f64::INFINITY;
    for iteration in 1..=opts.max_iters {
        if cur.len().saturating_mul(branch_factor) > opts.max_points {
            return Ok(AttractorResult {
                cloud: cur,
                iterations: iteration - 1,
                last_delta: delta,
                converged: false,
                stop_reason: StopReason::PointBudget,
            });
        }
        let next = hutchinson_step(&cur, family)?;
        delta = cloud::hausdorff(&cur, &next)?;
        cur = next;
        if delta < opts.tol {
            return Ok(AttractorResult {
                cloud: cur,
                iterations: iteration,
                last_delta: delta,
                converged: true,
                stop_reason: StopReason::Converged,
            });
        }
    }
    Ok(AttractorResult {
        cloud: cur,
        iterations: opts.max_iters,
        last_delta: delta,
        converged: false,
        stop_reason: StopReason::MaxIters,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct InvarianceResiduals {
    /// How far the image union sticks out of the cloud.
    pub outer: f64,
    /// How far cloud points are from the image union.
    pub inner: f64,
}

/// Residuals of E = union of F_i(E) at this resolution: both near zero iff
/// the cloud is invariant up to its own spacing.
pub fn check_invariance(cloud: &PointCloud, family: &Family) -> Result<InvarianceResiduals> {
    let image = hutchinson_step(cloud, family)?;
    Ok(InvarianceResiduals {
        outer: cloud::directed_hausdorff(&image, cloud)?,
        inner: cloud::directed_hausdorff(cloud, &image)?,
    })
}

/// Open eps-neighborhood of a cloud: membership predicate plus, in
/// dimension 1, the merged open-interval representation.
pub struct Enlargement<'a> {
    index: cloud::GridIndex<'a>,
    eps: f64,
    intervals: Option<Vec<(f64, f64)>>,
}

impl<'a> Enlargement<'a> {
    pub fn new(cloud: &'a PointCloud, eps: f64) -> Result<Enlargement<'a>> {
        if !eps.is_finite() || eps <= 0.0 {
            return Err(Error::Unsupported("enlargement radius must be positive".into()));
        }
        let intervals = if cloud.dim() == 1 {
            let mut merged: Vec<(f64, f64)> = Vec::new();
            for p in cloud.iter() {
                let (lo, hi) = (p[0] - eps, p[0] + eps);
                match merged.last_mut() {
                    // open intervals: merge only on genuine overlap
                    Some(last) if lo < last.1 => last.1 = hi,
                    _ => merged.push((lo, hi)),
                }
            }
            Some(merged)
        } else {
            None
        };
        Ok(Enlargement { index: cloud::GridIndex::new(cloud)?, eps, intervals })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// True iff dist(p, cloud) < eps.
    pub fn contains(&self, p: &[f64]) -> bool {
        self.index.nearest_sq(p) < self.eps * self.eps
    }

    pub fn intervals(&self) -> Option<&[(f64, f64)]> {
        self.intervals.as_deref()
    }
}

#[derive(Debug, Clone)]
pub struct MapIntervalCheck {
    pub key: MapKey,
    pub image_lo: f64,
    pub image_hi: f64,
    pub inside: bool,
}

#[derive(Debug, Clone)]
pub struct NondecreasingInterval {
    pub lo_exact: BigRational,
    pub hi_exact: BigRational,
    pub lo: f64,
    pub hi: f64,
    pub per_map: Vec<MapIntervalCheck>,
    pub all_inside: bool,
}

/// For a one-dimensional family with all ratios >= 0: the interval
/// [inf D, sup D] spanned by the truncated fixed points, and an exact
/// per-map check that each image stays inside it.
pub fn nondecreasing_interval(family: &Family) -> Result<NondecreasingInterval> {
    if family.dimension() != 1 {
        return Err(Error::NotOneDimensional { got: family.dimension() });
    }
    let maps: Vec<_> = family
        .alphabet()
        .into_iter()
        .map(|k| Ok((k, family.map(k)?)))
        .collect::<Result<Vec<_>>>()?;
    for (key, map) in &maps {
        if map.ratio().is_negative() {
            return Err(Error::NegativeRatio {
                branch: key.branch,
                index: key.index,
                ratio: map.ratio_f64(),
            });
        }
    }
    let fixed: Vec<BigRational> = maps.iter().map(|(_, m)| m.fixed_point()[0].clone()).collect();
    let lo_exact = fixed.iter().min().expect("alphabet nonempty").clone();
    let hi_exact = fixed.iter().max().expect("alphabet nonempty").clone();
    let mut per_map = Vec::with_capacity(maps.len());
    let mut all_inside = true;
    for (key, map) in &maps {
        // nonnegative ratio: the map is monotone, endpoints suffice
        let img_lo = map.apply_exact(std::slice::from_ref(&lo_exact))[0].clone();
        let img_hi = map.apply_exact(std::slice::from_ref(&hi_exact))[0].clone();
        let inside = img_lo >= lo_exact && img_hi <= hi_exact;
        all_inside &= inside;
        per_map.push(MapIntervalCheck {
            key: *key,
            image_lo: rational::to_f64(&img_lo),
            image_hi: rational::to_f64(&img_hi),
            inside,
        });
    }
    Ok(NondecreasingInterval {
        lo: rational::to_f64(&lo_exact),
        hi: rational::to_f64(&hi_exact),
        lo_exact,
        hi_exact,
        per_map,
        all_inside,
    })
}

#[derive(Debug, Clone)]
pub struct EnlargementInvariance {
    pub eps: f64,
    pub hull_lo: Vec<f64>,
    pub hull_hi: Vec<f64>,
    /// Max over maps of the distance the image hull sticks out; computed
    /// in rationals, so outer_is_zero is an exact statement.
    pub outer: f64,
    pub outer_is_zero: bool,
    pub inner: f64,
    /// Dimension 1 only: the exact inner residual.
    pub inner_exact: Option<BigRational>,
    /// Dimension >= 2 only: spacing of the sampling grid behind `inner`.
    pub inner_sample_spacing: Option<f64>,
}

/// Hull-based invariance of the eps-enlargement: take the bounding
/// interval/rectangle of the cloud, pad by eps, and measure both inclusion
/// residuals of the padded hull under the truncated family. eps = 0
/// degenerates to the plain cloud residuals.
pub fn enlargement_invariance(
    family: &Family,
    a: &PointCloud,
    eps_grid: &[f64],
) -> Result<Vec<EnlargementInvariance>> {
    if a.dim() != family.dimension() {
        return Err(Error::DimensionMismatch { expected: family.dimension(), got: a.dim() });
    }
    let (lo_f, hi_f) = a.bounding_box().ok_or(Error::EmptyCloud)?;
    let dim = a.dim();
    let lo: Vec<BigRational> =
        lo_f.iter().map(|&x| rational::from_f64(x)).collect::<Result<_>>()?;
    let hi: Vec<BigRational> =
        hi_f.iter().map(|&x| rational::from_f64(x)).collect::<Result<_>>()?;
    let maps = family.maps()?;

    let mut out = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        if !eps.is_finite() || eps < 0.0 {
            return Err(Error::Unsupported("enlargement radius must be >= 0".into()));
        }
        if eps == 0.0 {
            let res = check_invariance(a, family)?;
            out.push(EnlargementInvariance {
                eps,
                hull_lo: lo_f.clone(),
                hull_hi: hi_f.clone(),
                outer: res.outer,
                outer_is_zero: res.outer == 0.0,
                inner: res.inner,
                inner_exact: None,
                inner_sample_spacing: None,
            });
            continue;
        }
        let eps_exact = rational::from_f64(eps)?;
        let hull_lo: Vec<BigRational> = lo.iter().map(|x| x - &eps_exact).collect();
        let hull_hi: Vec<BigRational> = hi.iter().map(|x| x + &eps_exact).collect();

        // exact image boxes per map
        let mut boxes: Vec<(Vec<BigRational>, Vec<BigRational>)> = Vec::with_capacity(maps.len());
        for map in &maps {
            let img_a = map.apply_exact(&hull_lo);
            let img_b = map.apply_exact(&hull_hi);
            let mut blo = Vec::with_capacity(dim);
            let mut bhi = Vec::with_capacity(dim);
            for j in 0..dim {
                if img_a[j] <= img_b[j] {
                    blo.push(img_a[j].clone());
                    bhi.push(img_b[j].clone());
                } else {
                    blo.push(img_b[j].clone());
                    bhi.push(img_a[j].clone());
                }
            }
            boxes.push((blo, bhi));
        }

        // outer: per-coordinate protrusion gaps, combined euclideanly
        let mut outer_sq_max = BigRational::zero();
        for (blo, bhi) in &boxes {
            let mut gap_sq = BigRational::zero();
            for j in 0..dim {
                let under = &hull_lo[j] - &blo[j]; // > 0 when image pokes below
                let over = &bhi[j] - &hull_hi[j];
                let g = under.max(over).max(BigRational::zero());
                gap_sq += &g * &g;
            }
            outer_sq_max = outer_sq_max.max(gap_sq);
        }
        let outer_is_zero = outer_sq_max.is_zero();
        let outer = rational::to_f64(&outer_sq_max).sqrt();

        let (inner, inner_exact, inner_sample_spacing) = if dim == 1 {
            let v = inner_residual_1d(&hull_lo[0], &hull_hi[0], &boxes);
            (rational::to_f64(&v), Some(v), None)
        } else {
            let (v, spacing) = inner_residual_sampled(&hull_lo, &hull_hi, &boxes);
            (v, None, Some(spacing))
        };

        out.push(EnlargementInvariance {
            eps,
            hull_lo: hull_lo.iter().map(rational::to_f64).collect(),
            hull_hi: hull_hi.iter().map(rational::to_f64).collect(),
            outer,
            outer_is_zero,
            inner,
            inner_exact,
            inner_sample_spacing,
        });
    }
    Ok(out)
}

/// sup over y in [a, b] of the distance to the union of the image
/// intervals, exactly. The union need not be clipped: coverage from
/// outside [a, b] still counts.
fn inner_residual_1d(
    a: &BigRational,
    b: &BigRational,
    boxes: &[(Vec<BigRational>, Vec<BigRational>)],
) -> BigRational {
    let mut intervals: Vec<(BigRational, BigRational)> =
        boxes.iter().map(|(lo, hi)| (lo[0].clone(), hi[0].clone())).collect();
    intervals.sort();
    let mut merged: Vec<(BigRational, BigRational)> = Vec::with_capacity(intervals.len());
    for (lo, hi) in intervals {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => {
                if hi > last.1 {
                    last.1 = hi;
                }
            }
            _ => merged.push((lo, hi)),
        }
    }
    let mut worst = BigRational::zero();
    let first_lo = &merged.first().expect("at least one map").0;
    let last_hi = &merged.last().expect("at least one map").1;
    if first_lo > a {
        worst = worst.max(first_lo - a);
    }
    if last_hi < b {
        worst = worst.max(b - last_hi);
    }
    for pair in merged.windows(2) {
        let gap_lo = &pair[0].1;
        let gap_hi = &pair[1].0;
        // clip the gap to [a, b]; inside it the distance is a tent
        let lo = gap_lo.max(a).clone();
        let hi = gap_hi.min(b).clone();
        if lo >= hi {
            continue;
        }
        let mid = (gap_lo + gap_hi) / rational::q_int(2);
        let peak = if mid >= lo && mid <= hi {
            (gap_hi - gap_lo) / rational::q_int(2)
        } else {
            let at_lo = (&lo - gap_lo).min(gap_hi - &lo);
            let at_hi = (&hi - gap_lo).min(gap_hi - &hi);
            at_lo.max(at_hi)
        };
        worst = worst.max(peak);
    }
    worst
}

/// Sampled fallback for dimension >= 2: max over a grid on the hull of the
/// distance to the nearest image box.
fn inner_residual_sampled(
    hull_lo: &[BigRational],
    hull_hi: &[BigRational],
    boxes: &[(Vec<BigRational>, Vec<BigRational>)],
) -> (f64, f64) {
    let dim = hull_lo.len();
    let lo: Vec<f64> = hull_lo.iter().map(rational::to_f64).collect();
    let hi: Vec<f64> = hull_hi.iter().map(rational::to_f64).collect();
    let boxes_f: Vec<(Vec<f64>, Vec<f64>)> = boxes
        .iter()
        .map(|(l, h)| {
            (l.iter().map(rational::to_f64).collect(), h.iter().map(rational::to_f64).collect())
        })
        .collect();
    let per_axis = ((65_536f64).powf(1.0 / dim as f64).floor() as usize).max(2);
    let spacing = (0..dim)
        .map(|j| (hi[j] - lo[j]) / (per_axis - 1) as f64)
        .fold(0.0f64, f64::max);

    let mut idx = vec![0usize; dim];
    let mut point = vec![0.0f64; dim];
    let mut worst = 0.0f64;
    loop {
        for j in 0..dim {
            let t = idx[j] as f64 / (per_axis - 1) as f64;
            point[j] = lo[j] + t * (hi[j] - lo[j]);
        }
        let mut best = f64::INFINITY;
        for (blo, bhi) in &boxes_f {
            let mut d2 = 0.0f64;
            for j in 0..dim {
                let g = (blo[j] - point[j]).max(point[j] - bhi[j]).max(0.0);
                d2 += g * g;
            }
            if d2 < best {
                best = d2;
            }
        }
        worst = worst.max(best);
        // odometer
        let mut j = 0;
        loop {
            if j == dim {
                return (worst.sqrt(), spacing);
            }
            idx[j] += 1;
            if idx[j] < per_axis {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

#[derive(Debug, Clone)]
pub struct WitnessRow {
    pub i: u32,
    /// Fixed point of (second branch) after (first branch) at index i.
    pub y: BigRational,
    /// Fixed point of (first branch) after (second branch) at index i.
    pub z: BigRational,
    pub y_f64: f64,
    pub z_f64: f64,
}

#[derive(Debug, Clone)]
pub struct UnboundedWitness {
    pub rows: Vec<WitnessRow>,
    pub max_abs_y: f64,
    pub max_abs_z: f64,
    /// |y_i| nondecreasing over the whole range (exact comparison).
    pub abs_y_monotone: bool,
}

/// Cross-composition fixed points of a two-branch family, exact, for
/// i = 1..=i_max. Monotone growth of |y_i| witnesses (at this horizon)
/// that the composition fixed points admit no bounded enclosure.
pub fn unbounded_witness(family: &Family, i_max: u32) -> Result<UnboundedWitness> {
    if family.dimension() != 1 {
        return Err(Error::NotOneDimensional { got: family.dimension() });
    }
    if family.branch_count() != 2 {
        return Err(Error::Unsupported(
            "cross-composition witness needs a family with exactly two branches".into(),
        ));
    }
    if i_max == 0 {
        return Err(Error::Unsupported("witness horizon i_max must be >= 1".into()));
    }
    let mut rows = Vec::with_capacity(i_max as usize);
    let mut max_abs_y = BigRational::zero();
    let mut max_abs_z = BigRational::zero();
    let mut monotone = true;
    let mut prev_abs_y: Option<BigRational> = None;
    for i in 1..=i_max {
        let f = family.map(MapKey { branch: 0, index: i })?;
        let g = family.map(MapKey { branch: 1, index: i })?;
        let y = compose(&g, &f)?.fixed_point()[0].clone();
        let z = compose(&f, &g)?.fixed_point()[0].clone();
        let abs_y = rational::abs(&y);
        if let Some(prev) = &prev_abs_y {
            monotone &= &abs_y >= prev;
        }
        prev_abs_y = Some(abs_y.clone());
        max_abs_y = max_abs_y.max(abs_y);
        max_abs_z = max_abs_z.max(rational::abs(&z));
        rows.push(WitnessRow {
            i,
            y_f64: rational::to_f64(&y),
            z_f64: rational::to_f64(&z),
            y,
            z,
        });
    }
    Ok(UnboundedWitness {
        rows,
        max_abs_y: rational::to_f64(&max_abs_y),
        max_abs_z: rational::to_f64(&max_abs_z),
        abs_y_monotone: monotone,
    })
}
