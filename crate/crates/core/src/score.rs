//! Fast evaluation of `Σ_x min_k` point cost for many parameter settings
//! sharing one tuple of means.

use alloc::vec::Vec;

use crate::model::{sq_dist, PointSet};

/// Squared distances from every point to every mean of one candidate tuple.
pub(crate) struct DistanceTable {
    k: usize,
    dists: Vec<f64>,
}

impl DistanceTable {
    pub(crate) fn new(x: &PointSet, means: &[Vec<f64>]) -> Self {
        let k = means.len();
        let mut dists = Vec::with_capacity(x.len() * k);
        for p in x.iter() {
            dists.extend(means.iter().map(|m| sq_dist(p, m)));
        }
        Self { k, dists }
    }

    /// `Σ_x min_k (offset_k + scale_k·‖x − μ_k‖²)`, or `None` as soon as the
    /// total provably reaches `bound`.
    ///
    /// `terms` holds `(offset, scale)` per component. Offsets may be negative,
    /// so the remaining points are credited with the smallest offset before
    /// comparing against the bound.
    pub(crate) fn score(&self, terms: &[(f64, f64)], bound: f64) -> Option<f64> {
        debug_assert_eq!(terms.len(), self.k);
        let floor = terms.iter().map(|t| t.0).fold(f64::INFINITY, f64::min).min(0.0);
        let n = self.dists.len() / self.k;
        let mut total = 0.0;
        for (i, row) in self.dists.chunks_exact(self.k).enumerate() {
            let mut best = f64::INFINITY;
            for (&d, &(o, s)) in row.iter().zip(terms) {
                let c = o + s * d;
                if c < best {
                    best = c;
                }
            }
            total += best;
            if total + floor * (n - i - 1) as f64 >= bound {
                return None;
            }
        }
        Some(total)
    }
}
