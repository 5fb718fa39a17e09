//! Finite point clouds and Hausdorff distances between them.
//!
//! Clouds are stored row-major, lexicographically sorted and deduplicated
//! at 1e-12 (max-norm), so equal clouds are representation-equal and all
//! downstream output is deterministic.
//!
//! Nearest-neighbor queries run on a uniform grid of buckets. The grid is
//! an accelerator only: it scans every bucket that could hold the nearest
//! point (plus a one-ring safety margin for rounding at bucket borders),
//! so its result equals the quadratic scan bit for bit.

use std::io::Write;

use crate::error::{Error, Result};

/// Absolute tolerance under which two points count as the same point.
pub const DEDUP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    data: Vec<f64>,
}

impl PointCloud {
    pub fn from_points<I>(dim: usize, points: I) -> Result<PointCloud>
    where
        I: IntoIterator<Item = Vec<f64>>,
    {
        let mut data = Vec::new();
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
            }
            data.extend_from_slice(&p);
        }
        PointCloud::from_flat(dim, data)
    }

    /// Builds from row-major coordinates, sorting and deduplicating.
    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<PointCloud> {
        if dim == 0 {
            return Err(Error::InvalidFamily("point dimension must be >= 1".into()));
        }
        if data.len() % dim != 0 {
            return Err(Error::DimensionMismatch { expected: dim, got: data.len() % dim });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinitePoint);
        }
        let mut cloud = PointCloud { dim, data };
        cloud.normalize();
        Ok(cloud)
    }

    pub fn single(point: Vec<f64>) -> Result<PointCloud> {
        let dim = point.len();
        PointCloud::from_flat(dim, point)
    }

    fn normalize(&mut self) {
        let dim = self.dim;
        let n = self.data.len() / dim;
        if n == 0 {
            return;
        }
        if dim == 1 {
            // in place: clouds in dimension 1 can be enumeration-sized
            self.data.sort_unstable_by(f64::total_cmp);
            self.data.dedup_by(|cur, last| (*cur - *last).abs() <= DEDUP_TOL);
            return;
        } else {
            let mut order: Vec<u32> = (0..n as u32).collect();
            let data = &self.data;
            order.sort_unstable_by(|&a, &b| {
                let ra = &data[a as usize * dim..(a as usize + 1) * dim];
                let rb = &data[b as usize * dim..(b as usize + 1) * dim];
                ra.iter()
                    .zip(rb)
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
            let mut sorted = Vec::with_capacity(self.data.len());
            for &idx in &order {
                sorted.extend_from_slice(&data[idx as usize * dim..(idx as usize + 1) * dim]);
            }
            self.data = sorted;
        }
        // drop rows within DEDUP_TOL (max-norm) of the last kept row
        let mut out: Vec<f64> = Vec::with_capacity(self.data.len());
        out.extend_from_slice(&self.data[..dim]);
        for row in 1..n {
            let cand = &self.data[row * dim..(row + 1) * dim];
            let last = &out[out.len() - dim..];
            if last.iter().zip(cand).any(|(a, b)| (a - b).abs() > DEDUP_TOL) {
                out.extend_from_slice(cand);
            }
        }
        self.data = out;
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

    pub fn point(&self, idx: usize) -> &[f64] {
        &self.data[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn union(&self, other: &PointCloud) -> Result<PointCloud> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        PointCloud::from_flat(self.dim, data)
    }

    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if self.is_empty() {
            return None;
        }
        let mut lo = self.point(0).to_vec();
        let mut hi = lo.clone();
        for p in self.iter() {
            for j in 0..self.dim {
                lo[j] = lo[j].min(p[j]);
                hi[j] = hi[j].max(p[j]);
            }
        }
        Some((lo, hi))
    }

    /// Diagonal of the bounding box; an upper bound for the diameter,
    /// exact in dimension 1.
    pub fn extent(&self) -> f64 {
        match self.bounding_box() {
            None => 0.0,
            Some((lo, hi)) => lo
                .iter()
                .zip(&hi)
                .map(|(a, b)| (b - a) * (b - a))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// One point per row, 17 significant digits, comma-separated columns.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
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

/// Shared distance kernel; both the grid path and any quadratic scan must
/// use this exact function for bit-identical results.
#[inline]
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.len() {
        let d = a[j] - b[j];
        acc += d * d;
    }
    acc
}

/// Uniform bucket grid over a cloud for nearest-neighbor queries.
pub struct GridIndex<'a> {
    cloud: &'a PointCloud,
    lo: Vec<f64>,
    cell: f64,
    counts: Vec<usize>,
    strides: Vec<usize>,
    starts: Vec<u32>,
    items: Vec<u32>,
}

impl<'a> GridIndex<'a> {
    pub fn new(cloud: &'a PointCloud) -> Result<GridIndex<'a>> {
        if cloud.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let dim = cloud.dim();
        let n = cloud.len();
        let (lo, hi) = cloud.bounding_box().expect("nonempty");
        let max_extent = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| b - a)
            .fold(0.0f64, f64::max);

        // near-cubic cells; total bucket count stays bounded
        let per_axis_cap = (2_097_152f64).powf(1.0 / dim as f64).floor() as usize;
        let target = (n as f64).powf(1.0 / dim as f64).ceil() as usize;
        let axis_cells = target.clamp(1, per_axis_cap.max(1));
        let cell = if max_extent > 0.0 { max_extent / axis_cells as f64 } else { 1.0 };

        let mut counts = Vec::with_capacity(dim);
        for j in 0..dim {
            let extent = hi[j] - lo[j];
            let c = if extent > 0.0 { (extent / cell).ceil() as usize + 1 } else { 1 };
            counts.push(c.max(1));
        }
        let mut strides = vec![1usize; dim];
        for j in (0..dim.saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * counts[j + 1];
        }
        let total: usize = counts.iter().product();

        let locate = |p: &[f64], coords: &mut [usize]| {
            for j in 0..dim {
                let raw = ((p[j] - lo[j]) / cell).floor();
                let idx = if raw.is_finite() && raw > 0.0 { raw as usize } else { 0 };
                coords[j] = idx.min(counts[j] - 1);
            }
        };

        let mut bucket_sizes = vec![0u32; total];
        let mut coords = vec![0usize; dim];
        for p in cloud.iter() {
            locate(p, &mut coords);
            let flat: usize = coords.iter().zip(&strides).map(|(c, s)| c * s).sum();
            bucket_sizes[flat] += 1;
        }
        let mut starts = Vec::with_capacity(total + 1);
        let mut acc = 0u32;
        for &s in &bucket_sizes {
            starts.push(acc);
            acc += s;
        }
        starts.push(acc);
        let mut fill = starts.clone();
        let mut items = vec![0u32; n];
        for (i, p) in cloud.iter().enumerate() {
            locate(p, &mut coords);
            let flat: usize = coords.iter().zip(&strides).map(|(c, s)| c * s).sum();
            items[fill[flat] as usize] = i as u32;
            fill[flat] += 1;
        }

        Ok(GridIndex { cloud, lo, cell, counts, strides, starts, items })
    }

    fn locate(&self, p: &[f64]) -> Vec<usize> {
        let dim = self.cloud.dim();
        let mut coords = vec![0usize; dim];
        for j in 0..dim {
            let raw = ((p[j] - self.lo[j]) / self.cell).floor();
            let idx = if raw.is_finite() && raw > 0.0 { raw as usize } else { 0 };
            coords[j] = idx.min(self.counts[j] - 1);
        }
        coords
    }

    fn scan_bucket(&self, flat: usize, p: &[f64], best: &mut f64) {
        let from = self.starts[flat] as usize;
        let to = self.starts[flat + 1] as usize;
        for &item in &self.items[from..to] {
            let d = dist_sq(p, self.cloud.point(item as usize));
            if d < *best {
                *best = d;
            }
        }
    }

    /// Cells of the axis box `center +- ring` whose Chebyshev distance
    /// from `center` is exactly `ring`, clipped to the grid.
    fn scan_ring(&self, center: &[usize], ring: usize, p: &[f64], best: &mut f64) {
        let dim = center.len();
        let mut lo = vec![0usize; dim];
        let mut hi = vec![0usize; dim];
        for j in 0..dim {
            lo[j] = center[j].saturating_sub(ring);
            hi[j] = (center[j] + ring).min(self.counts[j] - 1);
            if lo[j] > hi[j] {
                return;
            }
        }
        let mut cur = lo.clone();
        loop {
            let on_ring = cur
                .iter()
                .zip(center)
                .any(|(&c, &m)| c + ring == m || c == m + ring);
            if on_ring || ring == 0 {
                let flat: usize = cur.iter().zip(&self.strides).map(|(c, s)| c * s).sum();
                self.scan_bucket(flat, p, best);
            }
            // odometer increment
            let mut j = dim;
            loop {
                if j == 0 {
                    return;
                }
                j -= 1;
                if cur[j] < hi[j] {
                    cur[j] += 1;
                    for jj in j + 1..dim {
                        cur[jj] = lo[jj];
                    }
                    break;
                }
            }
        }
    }

    /// Squared distance from `p` to the nearest cloud point. Equals the
    /// minimum of `dist_sq(p, .)` over the whole cloud exactly.
    pub fn nearest_sq(&self, p: &[f64]) -> f64 {
        let center = self.locate(p);
        let max_ring = self
            .counts
            .iter()
            .zip(&center)
            .map(|(&c, &m)| m.max(c - 1 - m.min(c - 1)))
            .max()
            .unwrap_or(0)
            .max(1);
        let mut best = f64::INFINITY;
        for ring in 0..=max_ring {
            self.scan_ring(&center, ring, p, &mut best);
            if best.is_finite() && ring >= 3 {
                // a point bucketed on ring k lies at distance > (k-3)*cell
                // from p even if both bucket assignments rounded one cell
                // off, so once ((ring+1)-3)*cell exceeds sqrt(best) no
                // later ring can improve
                let lb = (ring as f64 - 2.0) * self.cell;
                if lb * lb > best {
                    break;
                }
            }
        }
        best
    }
}

fn directed_sq(from: &PointCloud, to: &PointCloud) -> Result<f64> {
    if from.dim() != to.dim() {
        return Err(Error::DimensionMismatch { expected: from.dim(), got: to.dim() });
    }
    if from.is_empty() || to.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if to.dim() == 1 {
        // normalized 1-D data is sorted, so the nearest neighbor is one of
        // the two order neighbors; ring scans can degenerate when `from`
        // is much denser than `to`
        let values = to.as_flat();
        let mut worst = 0.0f64;
        for p in from.iter() {
            let idx = values.partition_point(|v| *v < p[0]);
            let mut best = f64::INFINITY;
            if idx < values.len() {
                best = dist_sq(p, &values[idx..idx + 1]);
            }
            if idx > 0 {
                best = best.min(dist_sq(p, &values[idx - 1..idx]));
            }
            if best > worst {
                worst = best;
            }
        }
        return Ok(worst);
    }
    let index = GridIndex::new(to)?;
    let mut worst = 0.0f64;
    for p in from.iter() {
        let d = index.nearest_sq(p);
        if d > worst {
            worst = d;
        }
    }
    Ok(worst)
}

/// sup over points of `from` of the distance to `to`.
pub fn directed_hausdorff(from: &PointCloud, to: &PointCloud) -> Result<f64> {
    Ok(directed_sq(from, to)?.sqrt())
}

/// Symmetric Hausdorff distance between two nonempty clouds.
pub fn hausdorff(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    let ab = directed_sq(a, b)?;
    let ba = directed_sq(b, a)?;
    Ok(ab.max(ba).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud1(xs: &[f64]) -> PointCloud {
        PointCloud::from_flat(1, xs.to_vec()).unwrap()
    }

    /// Quadratic-scan oracle with the same kernel and the same final sqrt.
    fn brute_directed_sq(from: &PointCloud, to: &PointCloud) -> f64 {
        let mut worst = 0.0f64;
        for p in from.iter() {
            let mut best = f64::INFINITY;
            for q in to.iter() {
                let d = dist_sq(p, q);
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

    fn brute_hausdorff(a: &PointCloud, b: &PointCloud) -> f64 {
        brute_directed_sq(a, b).max(brute_directed_sq(b, a)).sqrt()
    }

    #[test]
    fn dedup_merges_points_within_tolerance() {
        let c = cloud1(&[0.5, 0.5 + 1e-13, 0.25, 0.5 + 3e-12]);
        let got: Vec<f64> = c.iter().map(|p| p[0]).collect();
        assert_eq!(got, vec![0.25, 0.5, 0.5 + 3e-12]);
    }

    #[test]
    fn construction_sorts_lexicographically() {
        let c = PointCloud::from_points(2, vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![0.0, 1.0]]).unwrap();
        let rows: Vec<Vec<f64>> = c.iter().map(|p| p.to_vec()).collect();
        assert_eq!(rows, vec![vec![0.0, 1.0], vec![0.0, 2.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn rejects_non_finite_and_ragged_input() {
        assert!(PointCloud::from_flat(1, vec![f64::NAN]).is_err());
        assert!(PointCloud::from_flat(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(PointCloud::from_points(2, vec![vec![1.0]]).is_err());
    }

    #[test]
    fn csv_has_17_significant_digits() {
        let c = cloud1(&[0.5, 1.0 / 3.0]);
        let text = c.to_csv_string();
        assert_eq!(text, "3.3333333333333331e-1\n5.0000000000000000e-1\n");
        let c2 = PointCloud::from_points(2, vec![vec![0.25, -1.5]]).unwrap();
        assert_eq!(c2.to_csv_string(), "2.5000000000000000e-1,-1.5000000000000000e0\n");
    }

    #[test]
    fn hausdorff_basics() {
        let a = cloud1(&[0.0, 1.0]);
        let b = cloud1(&[0.0, 0.5, 1.0]);
        assert_eq!(hausdorff(&a, &b).unwrap(), 0.5);
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        assert_eq!(directed_hausdorff(&a, &b).unwrap(), 0.0);
        assert_eq!(directed_hausdorff(&b, &a).unwrap(), 0.5);
        assert!(hausdorff(&a, &PointCloud::from_flat(1, vec![]).unwrap()).is_err());
    }

    #[test]
    fn grid_equals_brute_force_on_structured_clouds() {
        // clustered, collinear, and singleton shapes
        let cases = vec![
            (cloud1(&[0.0]), cloud1(&[5.0])),
            (cloud1(&[0.0, 1e-9, 2e-9, 1.0]), cloud1(&[0.5])),
            (
                PointCloud::from_points(2, (0..50).map(|i| vec![i as f64 * 0.1, 0.0]).collect::<Vec<_>>()).unwrap(),
                PointCloud::from_points(2, (0..50).map(|i| vec![0.0, i as f64 * 0.07]).collect::<Vec<_>>()).unwrap(),
            ),
        ];
        for (a, b) in cases {
            assert_eq!(hausdorff(&a, &b).unwrap(), brute_hausdorff(&a, &b));
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_cloud(dim: usize) -> impl Strategy<Value = PointCloud> {
            proptest::collection::vec(
                proptest::collection::vec(-50.0f64..50.0, dim),
                1..40,
            )
            .prop_map(move |pts| PointCloud::from_points(dim, pts).unwrap())
        }

        proptest! {
            #[test]
            fn grid_matches_brute_force_1d(a in arb_cloud(1), b in arb_cloud(1)) {
                prop_assert_eq!(hausdorff(&a, &b).unwrap(), brute_hausdorff(&a, &b));
            }

            #[test]
            fn grid_matches_brute_force_2d(a in arb_cloud(2), b in arb_cloud(2)) {
                prop_assert_eq!(hausdorff(&a, &b).unwrap(), brute_hausdorff(&a, &b));
            }

            #[test]
            fn grid_matches_brute_force_3d(a in arb_cloud(3), b in arb_cloud(3)) {
                prop_assert_eq!(hausdorff(&a, &b).unwrap(), brute_hausdorff(&a, &b));
            }

            #[test]
            fn hausdorff_is_a_metric(a in arb_cloud(2), b in arb_cloud(2), c in arb_cloud(2)) {
                let ab = hausdorff(&a, &b).unwrap();
                let ba = hausdorff(&b, &a).unwrap();
                prop_assert_eq!(ab, ba);
                prop_assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
                let ac = hausdorff(&a, &c).unwrap();
                let cb = hausdorff(&c, &b).unwrap();
                prop_assert!(ab <= ac + cb + 1e-12);
            }

            #[test]
            fn union_contains_both(a in arb_cloud(1), b in arb_cloud(1)) {
                let u = a.union(&b).unwrap();
                prop_assert!(directed_hausdorff(&a, &u).unwrap() <= DEDUP_TOL);
                prop_assert!(directed_hausdorff(&b, &u).unwrap() <= DEDUP_TOL);
            }
        }
    }
}
