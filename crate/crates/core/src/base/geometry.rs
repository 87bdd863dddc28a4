//! Norms, the working box with its verification net, and a bucketed
//! nearest-point index used by every distance and cone query.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Norm on the ambient space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Norm {
    #[default]
    Euclidean,
    P {
        p: f64,
    },
    Max,
}

impl Norm {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Norm::P { p } if !(p >= 1.0 && p.is_finite()) => Err(Error::InvalidInput(format!(
                "p-norm needs finite p >= 1, got {p}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn of(&self, v: &[f64]) -> f64 {
        match *self {
            Norm::Euclidean => v.iter().map(|a| a * a).sum::<f64>().sqrt(),
            Norm::Max => v.iter().fold(0.0, |m, a| m.max(a.abs())),
            Norm::P { p } => {
                if p == 1.0 {
                    v.iter().map(|a| a.abs()).sum()
                } else if p == 2.0 {
                    Norm::Euclidean.of(v)
                } else {
                    v.iter().map(|a| a.abs().powf(p)).sum::<f64>().powf(1.0 / p)
                }
            }
        }
    }

    pub fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Norm::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Norm::Max => a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs())),
            _ => {
                let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                self.of(&d)
            }
        }
    }

    /// Norm of a covector in the dual space.
    pub fn dual_of(&self, w: &[f64]) -> f64 {
        self.dual().of(w)
    }

    pub fn dual(&self) -> Norm {
        match *self {
            Norm::Euclidean => Norm::Euclidean,
            Norm::Max => Norm::P { p: 1.0 },
            Norm::P { p: 1.0 } => Norm::Max,
            Norm::P { p } => Norm::P { p: p / (p - 1.0) },
        }
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(*self, Norm::Euclidean) || matches!(*self, Norm::P { p } if p == 2.0)
    }
}

/// Compact box in R^n with a regular verification net.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkingDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub net_step: f64,
    #[serde(default)]
    pub norm: Norm,
}

impl WorkingDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, net_step: f64, norm: Norm) -> Result<Self> {
        let d = WorkingDomain {
            lo,
            hi,
            net_step,
            norm,
        };
        d.validate()?;
        Ok(d)
    }

    /// Cube `[lo, hi]^dim` with the Euclidean norm.
    pub fn cube(dim: usize, lo: f64, hi: f64, net_step: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim], net_step, Norm::Euclidean)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.is_empty() || self.lo.len() != self.hi.len() {
            return Err(Error::InvalidInput(
                "box bounds must be nonempty and of equal dimension".into(),
            ));
        }
        if !(self.net_step > 0.0 && self.net_step.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "net_step must be positive, got {}",
                self.net_step
            )));
        }
        for (a, b) in self.lo.iter().zip(&self.hi) {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidInput(format!(
                    "empty or unbounded axis [{a}, {b}]"
                )));
            }
        }
        if self.axis_counts().iter().any(|&n| n < 2) {
            return Err(Error::InvalidInput(
                "net must have at least 2 points per axis".into(),
            ));
        }
        self.norm.validate()
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn axis_counts(&self) -> Vec<usize> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| ((b - a) / self.net_step + 1e-9).floor() as usize + 1)
            .collect()
    }

    pub fn net_len(&self) -> usize {
        self.axis_counts().iter().product()
    }

    /// Net point for a multi-index (axis 0 varies slowest).
    pub fn net_point(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .zip(&self.lo)
            .map(|(&i, &a)| a + i as f64 * self.net_step)
            .collect()
    }

    /// All net points in row-major order.
    pub fn net(&self) -> Vec<Vec<f64>> {
        let counts = self.axis_counts();
        let total: usize = counts.iter().product();
        (0..total)
            .map(|flat| self.net_point(&unflatten(flat, &counts)))
            .collect()
    }

    /// Net points that have both axis neighbours in the net along every axis.
    pub fn interior_net(&self) -> Vec<Vec<f64>> {
        let counts = self.axis_counts();
        let total: usize = counts.iter().product();
        (0..total)
            .map(|flat| unflatten(flat, &counts))
            .filter(|idx| idx.iter().zip(&counts).all(|(&i, &n)| i > 0 && i + 1 < n))
            .map(|idx| self.net_point(&idx))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *v >= a - 1e-12 && *v <= b + 1e-12)
    }

    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (a, b))| v.clamp(*a, *b))
            .collect()
    }

    pub fn diameter(&self) -> f64 {
        self.norm.dist(&self.lo, &self.hi)
    }
}

pub(crate) fn unflatten(mut flat: usize, counts: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; counts.len()];
    for k in (0..counts.len()).rev() {
        idx[k] = flat % counts[k];
        flat /= counts[k];
    }
    idx
}

/// Calls `visit` for every integer multi-index in the closed box `[lo, hi]`.
pub(crate) fn for_each_index(lo: &[i64], hi: &[i64], mut visit: impl FnMut(&[i64])) {
    if lo.iter().zip(hi).any(|(a, b)| a > b) {
        return;
    }
    let mut idx = lo.to_vec();
    loop {
        visit(&idx);
        let mut k = idx.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            if idx[k] < hi[k] {
                idx[k] += 1;
                break;
            }
            idx[k] = lo[k];
        }
    }
}

/// Uniform bucket grid over a point set. Supports exact nearest-point,
/// radius and cone-minimum queries under any [`Norm`]: every norm here
/// dominates the max-norm, which gives the ring lower bounds.
#[derive(Clone, Debug)]
pub struct PointIndex {
    norm: Norm,
    points: Vec<Vec<f64>>,
    origin: Vec<f64>,
    cell: f64,
    counts: Vec<i64>,
    starts: Vec<usize>,
    entries: Vec<usize>,
}

impl PointIndex {
    pub fn new(points: Vec<Vec<f64>>, norm: Norm) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("empty point set".into()));
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidInput("mixed point dimensions".into()));
        }
        let mut lo = points[0].clone();
        let mut hi = points[0].clone();
        for p in &points {
            for k in 0..dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let extent = lo
            .iter()
            .zip(&hi)
            .fold(0.0f64, |m, (a, b)| m.max(b - a))
            .max(1e-12);
        let per_axis = (points.len() as f64).powf(1.0 / dim as f64).ceil().max(1.0);
        let cell = (extent / per_axis).max(extent * 1e-6);
        let counts: Vec<i64> = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| ((b - a) / cell).floor() as i64 + 1)
            .collect();
        let total: usize = counts.iter().map(|&c| c as usize).product();
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); total];
        for (i, p) in points.iter().enumerate() {
            let c = Self::cell_of(&lo, cell, &counts, p);
            buckets[Self::flat(&counts, &c)].push(i);
        }
        let mut starts = Vec::with_capacity(total + 1);
        let mut entries = Vec::with_capacity(points.len());
        for b in &buckets {
            starts.push(entries.len());
            entries.extend_from_slice(b);
        }
        starts.push(entries.len());
        Ok(PointIndex {
            norm,
            points,
            origin: lo,
            cell,
            counts,
            starts,
            entries,
        })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn cell_of(origin: &[f64], cell: f64, counts: &[i64], x: &[f64]) -> Vec<i64> {
        x.iter()
            .zip(origin)
            .zip(counts)
            .map(|((v, o), &n)| (((v - o) / cell).floor() as i64).clamp(0, n - 1))
            .collect()
    }

    fn flat(counts: &[i64], c: &[i64]) -> usize {
        c.iter()
            .zip(counts)
            .fold(0usize, |acc, (&i, &n)| acc * n as usize + i as usize)
    }

    /// Visits buckets ring by ring around `x`; `visit(ring_lower_bound, point_index)`
    /// returns `false` to stop early once `lower_bound` alone can no longer improve.
    fn rings(&self, x: &[f64], mut stop: impl FnMut(f64) -> bool, mut visit: impl FnMut(usize)) {
        let center = Self::cell_of(&self.origin, self.cell, &self.counts, x);
        // Max-norm distance from x to the center cell box.
        let e = x
            .iter()
            .zip(&center)
            .zip(&self.origin)
            .fold(0.0f64, |m, ((v, &c), o)| {
                let a = o + c as f64 * self.cell;
                let b = a + self.cell;
                m.max((a - v).max(v - b).max(0.0))
            });
        let kmax = center
            .iter()
            .zip(&self.counts)
            .map(|(&c, &n)| c.max(n - 1 - c))
            .max()
            .unwrap_or(0);
        for k in 0..=kmax {
            let lb = ((k - 1) as f64 * self.cell - e).max(0.0);
            if stop(lb) {
                return;
            }
            let lo: Vec<i64> = center.iter().map(|&c| (c - k).max(0)).collect();
            let hi: Vec<i64> = center
                .iter()
                .zip(&self.counts)
                .map(|(&c, &n)| (c + k).min(n - 1))
                .collect();
            for_each_index(&lo, &hi, |cidx| {
                let ring = cidx
                    .iter()
                    .zip(&center)
                    .map(|(a, b)| (a - b).abs())
                    .max()
                    .unwrap_or(0);
                if ring != k {
                    return;
                }
                let f = Self::flat(&self.counts, cidx);
                for &i in &self.entries[self.starts[f]..self.starts[f + 1]] {
                    visit(i);
                }
            });
        }
    }

    /// Distance from `x` to the nearest indexed point, with that point's index.
    pub fn nearest(&self, x: &[f64]) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        let norm = self.norm;
        let pts = &self.points;
        let best_ref = std::cell::Cell::new(f64::INFINITY);
        self.rings(
            x,
            |lb| lb >= best_ref.get(),
            |i| {
                let d = norm.dist(x, &pts[i]);
                if d < best.1 || (d == best.1 && i < best.0) {
                    best = (i, d);
                    best_ref.set(d);
                }
            },
        );
        best
    }

    /// `min_i values[i] + slope * ||x - p_i||` and the attaining index.
    pub fn cone_min(&self, x: &[f64], values: &[f64], vmin: f64, slope: f64) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        let norm = self.norm;
        let pts = &self.points;
        let best_ref = std::cell::Cell::new(f64::INFINITY);
        self.rings(
            x,
            |lb| vmin + slope * lb >= best_ref.get(),
            |i| {
                let v = values[i] + slope * norm.dist(x, &pts[i]);
                if v < best.1 || (v == best.1 && i < best.0) {
                    best = (i, v);
                    best_ref.set(v);
                }
            },
        );
        best
    }

    /// Indices of points with `||x - p|| < radius`, ascending.
    pub fn within(&self, x: &[f64], radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        let norm = self.norm;
        let pts = &self.points;
        self.rings(
            x,
            |lb| lb >= radius,
            |i| {
                if norm.dist(x, &pts[i]) < radius {
                    out.push(i);
                }
            },
        );
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_norms() {
        let w = [3.0, -4.0];
        assert_eq!(Norm::Euclidean.dual_of(&w), 5.0);
        assert_eq!(Norm::Max.dual_of(&w), 7.0);
        assert_eq!(Norm::P { p: 1.0 }.dual_of(&w), 4.0);
    }

    #[test]
    fn net_counts_and_interior() {
        let d = WorkingDomain::cube(2, 0.0, 1.0, 0.25).unwrap();
        assert_eq!(d.axis_counts(), vec![5, 5]);
        assert_eq!(d.net().len(), 25);
        assert_eq!(d.interior_net().len(), 9);
        assert_eq!(d.net()[6], vec![0.25, 0.25]);
    }

    #[test]
    fn domain_rejects_degenerate_boxes() {
        assert!(WorkingDomain::cube(1, 0.0, 1.0, 2.0).is_err());
        assert!(WorkingDomain::cube(1, 1.0, 1.0, 0.1).is_err());
        assert!(WorkingDomain::cube(1, 0.0, 1.0, 0.0).is_err());
        assert!(WorkingDomain::new(vec![0.0], vec![1.0], 0.1, Norm::P { p: 0.5 }).is_err());
    }

    #[test]
    fn index_matches_brute_force() {
        let pts: Vec<Vec<f64>> = (0..200)
            .map(|i| {
                let t = i as f64 * 0.7548776662466927;
                vec![(t.fract() * 4.0) - 2.0, ((t * 1.3).fract() * 3.0) - 1.0]
            })
            .collect();
        for norm in [Norm::Euclidean, Norm::Max, Norm::P { p: 3.0 }] {
            let idx = PointIndex::new(pts.clone(), norm).unwrap();
            let vals: Vec<f64> = (0..pts.len()).map(|i| (i as f64 * 0.37).sin()).collect();
            let vmin = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            for q in [[0.1, 0.2], [5.0, -3.0], [-2.0, 2.0], [0.0, 0.0]] {
                let brute = pts
                    .iter()
                    .map(|p| norm.dist(&q, p))
                    .fold(f64::INFINITY, f64::min);
                assert_eq!(idx.nearest(&q).1, brute);
                let cone = pts
                    .iter()
                    .zip(&vals)
                    .map(|(p, v)| v + 0.8 * norm.dist(&q, p))
                    .fold(f64::INFINITY, f64::min);
                assert_eq!(idx.cone_min(&q, &vals, vmin, 0.8).1, cone);
                let within: Vec<usize> = (0..pts.len())
                    .filter(|&i| norm.dist(&q, &pts[i]) < 0.9)
                    .collect();
                assert_eq!(idx.within(&q, 0.9), within);
            }
        }
    }
}
