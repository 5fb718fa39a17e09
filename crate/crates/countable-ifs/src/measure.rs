//! Probability sequences on the countable alphabet, chaos-game sampling of
//! the invariant measure, the Markov-operator residual, support estimation,
//! and the summability condition that buys uniqueness of the measure.
//!
//! Sampling is deterministic per seed. The residual in dimension 1 is the
//! exact Wasserstein-1 distance between the two weighted empirical
//! distributions; higher dimensions fall back to histogram L1.

use std::collections::BTreeMap;

use num::rational::BigRational;
use num::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::family::Family;
use crate::rational;

#[derive(Debug, Clone)]
pub enum ProbabilitySequence {
    Finite { weights: Vec<f64>, cumulative: Vec<f64> },
    Geometric { q: f64 },
}

impl ProbabilitySequence {
    pub fn finite(weights: Vec<f64>) -> Result<ProbabilitySequence> {
        if weights.is_empty() {
            return Err(Error::InvalidProbabilities("weight list is empty".into()));
        }
        for (i, w) in weights.iter().enumerate() {
            if !w.is_finite() || *w <= 0.0 || *w > 1.0 {
                return Err(Error::InvalidProbabilities(format!(
                    "weight {} at position {} is not in (0, 1]",
                    w,
                    i + 1
                )));
            }
        }
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            cumulative.push(acc);
        }
        if (acc - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidProbabilities(format!(
                "weights sum to {acc}, not 1 (tolerance 1e-12)"
            )));
        }
        Ok(ProbabilitySequence::Finite { weights, cumulative })
    }

    pub fn geometric(q: f64) -> Result<ProbabilitySequence> {
        if !q.is_finite() || q <= 0.0 || q >= 1.0 {
            return Err(Error::InvalidProbabilities(format!(
                "geometric parameter must be in (0, 1), got {q}"
            )));
        }
        Ok(ProbabilitySequence::Geometric { q })
    }

    pub fn uniform(n: usize) -> Result<ProbabilitySequence> {
        if n == 0 {
            return Err(Error::InvalidProbabilities("uniform sequence needs n >= 1".into()));
        }
        ProbabilitySequence::finite(vec![1.0 / n as f64; n])
    }

    /// Number of indices with positive weight, when finite.
    pub fn support_len(&self) -> Option<usize> {
        match self {
            ProbabilitySequence::Finite { weights, .. } => Some(weights.len()),
            ProbabilitySequence::Geometric { .. } => None,
        }
    }

    /// rho_i, 1-based; zero past the end of a finite list.
    pub fn weight(&self, i: u32) -> f64 {
        match self {
            ProbabilitySequence::Finite { weights, .. } => {
                weights.get(i as usize - 1).copied().unwrap_or(0.0)
            }
            ProbabilitySequence::Geometric { q } => (1.0 - q) * q.powi(i as i32 - 1),
        }
    }

    /// rho_i as the exact rational value of the stored f64 parameters.
    pub fn weight_exact(&self, i: u32) -> BigRational {
        match self {
            ProbabilitySequence::Finite { weights, .. } => weights
                .get(i as usize - 1)
                .map(|w| rational::from_f64(*w).expect("weights are finite"))
                .unwrap_or_else(BigRational::zero),
            ProbabilitySequence::Geometric { q } => {
                let qe = rational::from_f64(*q).expect("q is finite");
                (rational::one() - &qe) * rational::pow_u32(&qe, i - 1)
            }
        }
    }

    /// Canonical cumulative distribution after index i. The closed form
    /// 1 - q^i for the geometric case is nondecreasing in i, which makes
    /// "smallest i with cdf(i) >= u" well defined.
    pub fn cdf(&self, i: u32) -> f64 {
        match self {
            ProbabilitySequence::Finite { cumulative, .. } => {
                if i == 0 {
                    0.0
                } else {
                    cumulative[(i as usize - 1).min(cumulative.len() - 1)]
                }
            }
            ProbabilitySequence::Geometric { q } => 1.0 - q.powi(i as i32),
        }
    }

    /// Inverse-CDF sampling: the smallest index whose canonical cumulative
    /// reaches u. The geometric branch starts from the logarithm closed
    /// form and then walks to the exact boundary, so it agrees with a
    /// linear scan of cdf for every u in (0, 1).
    pub fn sample_index(&self, u: f64) -> u32 {
        debug_assert!(u > 0.0 && u < 1.0);
        match self {
            ProbabilitySequence::Finite { cumulative, .. } => {
                let pos = cumulative.partition_point(|c| *c < u);
                (pos.min(cumulative.len() - 1) + 1) as u32
            }
            ProbabilitySequence::Geometric { q } => {
                let guess = ((1.0 - u).ln() / q.ln()).ceil();
                let mut i = if guess.is_finite() && guess >= 1.0 {
                    guess.min(u32::MAX as f64) as u32
                } else {
                    1
                };
                while i > 1 && self.cdf(i - 1) >= u {
                    i -= 1;
                }
                while self.cdf(i) < u {
                    i += 1;
                }
                i
            }
        }
    }
}

/// Equal-weight samples in draw order. Order is part of the contract:
/// identical seeds reproduce identical files.
#[derive(Debug, Clone)]
pub struct EmpiricalMeasure {
    dim: usize,
    data: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<EmpiricalMeasure> {
        if dim == 0 {
            return Err(Error::InvalidFamily("dimension must be >= 1".into()));
        }
        if data.len() % dim != 0 || data.is_empty() {
            return Err(Error::DimensionMismatch { expected: dim, got: data.len() % dim });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinitePoint);
        }
        Ok(EmpiricalMeasure { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.len() as f64;
        let mut acc = vec![0.0; self.dim];
        for p in self.iter() {
            for j in 0..self.dim {
                acc[j] += p[j];
            }
        }
        acc.iter_mut().for_each(|v| *v /= n);
        acc
    }

    /// Sorted copy of the coordinates; dimension 1 only.
    pub fn sorted_values(&self) -> Result<Vec<f64>> {
        if self.dim != 1 {
            return Err(Error::NotOneDimensional { got: self.dim });
        }
        let mut v = self.data.clone();
        v.sort_unstable_by(f64::total_cmp);
        Ok(v)
    }

    /// Counts per grid cell. Cells are centered on integer multiples of
    /// `cell`, so a sample at exactly 0 reports center 0.
    pub fn histogram(&self, cell: f64) -> Result<Histogram> {
        if !cell.is_finite() || cell <= 0.0 {
            return Err(Error::Unsupported("histogram cell size must be positive".into()));
        }
        let mut counts: BTreeMap<Vec<i64>, u64> = BTreeMap::new();
        for p in self.iter() {
            let key: Vec<i64> = p.iter().map(|x| (x / cell).round() as i64).collect();
            *counts.entry(key).or_insert(0) += 1;
        }
        Ok(Histogram { cell, counts, n: self.len() as u64 })
    }

    /// Draw order, one sample per row, 17 significant digits.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        for p in self.iter() {
            for (j, x) in p.iter().enumerate() {
                if j > 0 {
                    write!(w, ",")?;
                }
                write!(w, "{x:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to vec");
        String::from_utf8(buf).expect("csv is ascii")
    }
}

#[derive(Debug, Clone)]
pub struct Histogram {
    pub cell: f64,
    pub counts: BTreeMap<Vec<i64>, u64>,
    pub n: u64,
}

#[derive(Debug, Clone)]
pub struct ChaosGameReport {
    pub measure: EmpiricalMeasure,
    /// Draws whose index fell beyond the truncated alphabet and were
    /// redrawn.
    pub truncation_resamples: u64,
    pub burn_in: u32,
    pub seed: u64,
    pub sup_ratio: f64,
}

/// Runs the random-composition chain x_{t+1} = F_{I_t}(x_t) with I_t drawn
/// from `seq`, starting at the first map's fixed point. The first burn_in
/// states are discarded.
pub fn chaos_game(
    family: &Family,
    seq: &ProbabilitySequence,
    n_samples: usize,
    burn_in: u32,
    seed: u64,
) -> Result<ChaosGameReport> {
    if n_samples == 0 {
        return Err(Error::Unsupported("chaos game needs n_samples >= 1".into()));
    }
    let rep = family.sup_ratio()?;
    if rep.empirical >= 1.0 - 1e-9 {
        return Err(Error::SupRatioTooLarge { sup: rep.empirical });
    }
    let maps = family.maps()?;
    let alphabet_len = maps.len() as u32;
    let dim = family.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = maps[0].fixed_point_f64();
    let mut next = vec![0.0; dim];
    let mut data = Vec::with_capacity(n_samples * dim);
    let mut resamples: u64 = 0;
    let total = burn_in as usize + n_samples;
    for t in 0..total {
        let idx = loop {
            let u: f64 = rng.random();
            if u <= 0.0 {
                continue; // need u in the open interval (0, 1)
            }
            let i = seq.sample_index(u);
            if i <= alphabet_len {
                break i;
            }
            resamples += 1;
            if resamples > 100_000_000 {
                return Err(Error::InvalidProbabilities(
                    "almost all probability mass lies beyond the truncated alphabet".into(),
                ));
            }
        };
        maps[idx as usize - 1].apply_into(&x, &mut next);
        std::mem::swap(&mut x, &mut next);
        if t >= burn_in as usize {
            data.extend_from_slice(&x);
        }
    }
    Ok(ChaosGameReport {
        measure: EmpiricalMeasure::new(dim, data)?,
        truncation_resamples: resamples,
        burn_in,
        seed,
        sup_ratio: rep.empirical,
    })
}

/// Centers of cells holding at least min_count samples.
pub fn support_estimate(
    measure: &EmpiricalMeasure,
    cell: f64,
    min_count: u64,
) -> Result<PointCloud> {
    let hist = measure.histogram(cell)?;
    let min_count = min_count.max(1);
    let mut data = Vec::new();
    for (key, count) in &hist.counts {
        if *count >= min_count {
            data.extend(key.iter().map(|k| *k as f64 * cell));
        }
    }
    PointCloud::from_flat(measure.dim(), data)
}

/// Kolmogorov-style sup deviation of the empirical CDF from the uniform
/// law on [lo, hi]; dimension 1 only.
pub fn uniform_cdf_deviation(measure: &EmpiricalMeasure, lo: f64, hi: f64) -> Result<f64> {
    if !(hi > lo) {
        return Err(Error::Unsupported("uniform interval needs hi > lo".into()));
    }
    let xs = measure.sorted_values()?;
    let n = xs.len() as f64;
    let mut worst = 0.0f64;
    for (j, x) in xs.iter().enumerate() {
        let u = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
        worst = worst.max((j as f64 / n - u).abs());
        worst = worst.max(((j + 1) as f64 / n - u).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone)]
pub struct MarkovResidual {
    pub residual: f64,
    pub n: usize,
    /// Probability mass of indices beyond the truncated alphabet, dropped
    /// by renormalizing.
    pub renormalized_tail: f64,
    pub method: &'static str,
}

/// Distance between mu and its image under the truncated Markov operator
/// sum of rho~_i F_i# mu, with weights renormalized over the alphabet.
/// Dimension 1: exact W1 between the weighted empirical distributions.
/// Dimension >= 2: L1 distance of histogram masses at the given cell size.
pub fn markov_residual(
    measure: &EmpiricalMeasure,
    family: &Family,
    seq: &ProbabilitySequence,
    cell: Option<f64>,
) -> Result<MarkovResidual> {
    if measure.dim() != family.dimension() {
        return Err(Error::DimensionMismatch { expected: family.dimension(), got: measure.dim() });
    }
    let maps = family.maps()?;
    let alphabet_len = maps.len() as u32;
    let total: f64 = seq.cdf(alphabet_len);
    if !(total > 0.0) {
        return Err(Error::InvalidProbabilities(
            "no probability mass on the truncated alphabet".into(),
        ));
    }
    let weights: Vec<f64> = (1..=alphabet_len).map(|i| seq.weight(i) / total).collect();
    let n = measure.len();

    if measure.dim() == 1 {
        // exact W1 via the merged-CDF sweep
        let mut events: Vec<(f64, f64, f64)> = Vec::with_capacity(n + n * maps.len());
        let wa = 1.0 / n as f64;
        for p in measure.iter() {
            events.push((p[0], wa, 0.0));
        }
        for (map, w) in maps.iter().zip(&weights) {
            let r = map.ratio_f64();
            let b = map.translation_f64()[0];
            let wb = w / n as f64;
            for p in measure.iter() {
                events.push((r * p[0] + b, 0.0, wb));
            }
        }
        events.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let mut ca = 0.0f64;
        let mut cb = 0.0f64;
        let mut acc = 0.0f64;
        let mut prev = events[0].0;
        for (x, a, b) in events {
            acc += (x - prev) * (ca - cb).abs();
            ca += a;
            cb += b;
            prev = x;
        }
        return Ok(MarkovResidual {
            residual: acc,
            n,
            renormalized_tail: 1.0 - total,
            method: "wasserstein-1",
        });
    }

    let cell = cell.ok_or(Error::HistogramRequired)?;
    let hist_a = measure.histogram(cell)?;
    let mut mass_b: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    let mut img = vec![0.0; measure.dim()];
    for (map, w) in maps.iter().zip(&weights) {
        let wb = w / n as f64;
        for p in measure.iter() {
            map.apply_into(p, &mut img);
            let key: Vec<i64> = img.iter().map(|x| (x / cell).round() as i64).collect();
            *mass_b.entry(key).or_insert(0.0) += wb;
        }
    }
    let mut l1 = 0.0f64;
    let wa = 1.0 / n as f64;
    for (key, count) in &hist_a.counts {
        let a = *count as f64 * wa;
        let b = mass_b.remove(key).unwrap_or(0.0);
        l1 += (a - b).abs();
    }
    for (_, b) in mass_b {
        l1 += b;
    }
    Ok(MarkovResidual { residual: l1, n, renormalized_tail: 1.0 - total, method: "histogram-l1" })
}

#[derive(Debug, Clone)]
pub struct KravchenkoReport {
    /// Sum over the alphabet of rho_i * d(x_1, x_i).
    pub partial_sum: f64,
    pub partial_sum_exact: Option<BigRational>,
    /// Diameter of the truncated fixed-point set; the full sum is bounded
    /// by it since the weights sum to at most 1.
    pub diam: f64,
    pub diam_exact: Option<BigRational>,
    pub within_diam: bool,
    /// Weight not covered by the truncated alphabet.
    pub tail_weight: f64,
    pub terms: usize,
}

/// The summability condition at truncation level: partial sums of
/// rho_i * d(x_1, x_i), exact in dimension 1.
pub fn kravchenko_sum(family: &Family, seq: &ProbabilitySequence) -> Result<KravchenkoReport> {
    let fixed = family.fixed_points_exact()?;
    let terms = fixed.len();
    if family.dimension() == 1 {
        let x1 = &fixed[0].1[0];
        let mut sum = BigRational::zero();
        for (pos, (_, fp)) in fixed.iter().enumerate() {
            let rho = seq.weight_exact(pos as u32 + 1);
            sum += rho * rational::abs(&(&fp[0] - x1));
        }
        let lo = fixed.iter().map(|(_, fp)| fp[0].clone()).min().expect("nonempty");
        let hi = fixed.iter().map(|(_, fp)| fp[0].clone()).max().expect("nonempty");
        let diam = hi - lo;
        let within = sum <= diam || diam.is_zero() && sum.is_zero();
        Ok(KravchenkoReport {
            partial_sum: rational::to_f64(&sum),
            diam: rational::to_f64(&diam),
            within_diam: within,
            tail_weight: 1.0 - seq.cdf(terms as u32),
            partial_sum_exact: Some(sum),
            diam_exact: Some(diam),
            terms,
        })
    } else {
        let pts: Vec<Vec<f64>> = fixed
            .iter()
            .map(|(_, fp)| fp.iter().map(rational::to_f64).collect())
            .collect();
        let x1 = &pts[0];
        let mut sum = 0.0;
        for (pos, p) in pts.iter().enumerate() {
            let d = crate::cloud::dist_sq(x1, p).sqrt();
            sum += seq.weight(pos as u32 + 1) * d;
        }
        let mut diam = 0.0f64;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                diam = diam.max(crate::cloud::dist_sq(&pts[i], &pts[j]));
            }
        }
        let diam = diam.sqrt();
        Ok(KravchenkoReport {
            partial_sum: sum,
            diam,
            within_diam: sum <= diam || sum == 0.0,
            tail_weight: 1.0 - seq.cdf(terms as u32),
            partial_sum_exact: None,
            diam_exact: None,
            terms,
        })
    }
}
