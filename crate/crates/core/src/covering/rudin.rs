//! Level-wise ball refinement of an open cover.
//!
//! Level `n` places centers at uncaptured net points `x` whose first
//! cover index `r` satisfies `B(x, 3 * 2^-n) ⊆ U_r`, scanning the net in
//! order and capturing every net point within `2^-(n+1)` of a new center.
//! Then `V_{n,r} = ∪ B(c, 2^-(n+1))` and `W_{n,r} = ∪ B(c, 2^-n)` over the
//! centers owned by `r`. Centers of different owners at one level are at
//! least `3 * 2^-n` apart, so distinct `W` are `2^-n` apart, and `V` sits
//! `2^-(n+1)` inside `W`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::OpenCover;
use crate::base::{Norm, PointIndex, WorkingDomain};
use crate::error::{Error, Result};

/// A point is assigned to the first region containing the ball of this
/// fraction of the net step around it (falling back to the region in which
/// it lies deepest),
/// so points on a region boundary up to round-off do not demand
/// arbitrarily deep levels.
const MEMBERSHIP_MARGIN: f64 = 0.05;

#[derive(Clone, Debug)]
pub struct Level {
    pub n: usize,
    /// Radius of the `V` balls, `2^-(n+1)`.
    pub inner: f64,
    /// Radius of the `W` balls, `2^-n`.
    pub outer: f64,
    pub centers: Vec<Vec<f64>>,
    /// Cover position owning each center.
    pub owners: Vec<usize>,
    norm: Norm,
    index: Option<PointIndex>,
}

impl Level {
    fn new(n: usize, centers: Vec<Vec<f64>>, owners: Vec<usize>, norm: Norm) -> Result<Self> {
        let index = if centers.is_empty() {
            None
        } else {
            Some(PointIndex::new(centers.clone(), norm)?)
        };
        Ok(Level {
            n,
            inner: 0.5f64.powi(n as i32 + 1),
            outer: 0.5f64.powi(n as i32),
            centers,
            owners,
            norm,
            index,
        })
    }

    /// Nearest center and its distance.
    pub fn nearest(&self, x: &[f64]) -> Option<(usize, f64)> {
        self.index.as_ref().map(|i| i.nearest(x))
    }

    /// Owner of the `W` set containing `x` (unique by separation).
    pub fn w_owner(&self, x: &[f64]) -> Option<usize> {
        match self.nearest(x) {
            Some((c, d)) if d < self.outer => Some(self.owners[c]),
            _ => None,
        }
    }

    pub fn v_owner(&self, x: &[f64]) -> Option<usize> {
        match self.nearest(x) {
            Some((c, d)) if d < self.inner => Some(self.owners[c]),
            _ => None,
        }
    }

    /// `max_c (2^-n - |x - c|)_+`: 1-Lipschitz, zero off `∪_r W_{n,r}`,
    /// above `2^-(n+1)` on `∪_r V_{n,r}`.
    pub fn depth(&self, x: &[f64]) -> f64 {
        self.nearest(x)
            .map_or(0.0, |(_, d)| (self.outer - d).max(0.0))
    }

    /// Distinct owners at this level, ascending.
    pub fn owner_set(&self) -> Vec<usize> {
        let mut o = self.owners.clone();
        o.sort_unstable();
        o.dedup();
        o
    }

    /// Owners of centers with `|x - c| < radius`.
    fn owners_within(&self, x: &[f64], radius: f64) -> Vec<usize> {
        let Some(index) = &self.index else {
            return Vec::new();
        };
        let mut o: Vec<usize> = index
            .within(x, radius)
            .into_iter()
            .map(|c| self.owners[c])
            .collect();
        o.sort_unstable();
        o.dedup();
        o
    }

    /// Smallest distance between centers of different owners.
    pub fn owner_separation(&self) -> f64 {
        (0..self.centers.len())
            .into_par_iter()
            .map(|i| {
                let mut m = f64::INFINITY;
                for j in 0..self.centers.len() {
                    if self.owners[j] != self.owners[i] {
                        m = m.min(self.norm.dist(&self.centers[i], &self.centers[j]));
                    }
                }
                m
            })
            .reduce(|| f64::INFINITY, f64::min)
    }
}

/// Local finiteness data at a point: no `W_{i,·}` with `i > n` meets
/// `B(x, s)`, and `active` lists the `(level, owner)` pairs that do.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Locality {
    pub s: f64,
    pub n: usize,
    pub captured_at: usize,
    pub active: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementAudit {
    pub capture_level: usize,
    pub centers_per_level: Vec<usize>,
    /// Per level: `min |c - c'|` over centers of distinct owners, minus `2 * 2^-n`.
    pub w_separation: Vec<f64>,
    /// Per level: analytic `dist(V, box \ W) = 2^-n - 2^-(n+1)`.
    pub v_margin: Vec<f64>,
    /// Net points whose locality check failed.
    pub locality_failures: usize,
    pub max_active: usize,
}

#[derive(Clone, Debug)]
pub struct CoverRefinement {
    pub domain: WorkingDomain,
    pub labels: Vec<usize>,
    pub levels: Vec<Level>,
}

/// Builds the refinement with at most `n_max` levels.
pub fn rudin_refine(
    cover: &OpenCover,
    domain: &WorkingDomain,
    n_max: usize,
) -> Result<CoverRefinement> {
    rudin_refine_with(cover, domain, &[], n_max)
}

/// Same as [`rudin_refine`], with `extra` points (e.g. off-net samples)
/// captured after the net.
pub fn rudin_refine_with(
    cover: &OpenCover,
    domain: &WorkingDomain,
    extra: &[Vec<f64>],
    n_max: usize,
) -> Result<CoverRefinement> {
    domain.validate()?;
    if n_max == 0 {
        return Err(Error::InvalidInput("at least one level is required".into()));
    }
    let norm = domain.norm;
    let mut net = domain.net();
    net.extend(extra.iter().filter(|p| domain.contains(p)).cloned());
    let margin = MEMBERSHIP_MARGIN * domain.net_step;
    let first: Vec<Option<usize>> = net
        .par_iter()
        .map(|x| {
            cover
                .regions
                .iter()
                .position(|r| r.contains_ball(x, margin, norm))
                .or_else(|| deepest(cover, x, norm))
        })
        .collect();
    if let Some(i) = first.iter().position(Option::is_none) {
        return Err(Error::CoverGap(net[i].clone()));
    }
    let first: Vec<usize> = first.into_iter().map(Option::unwrap).collect();
    let net_index = PointIndex::new(net.clone(), norm)?;
    let mut captured = vec![false; net.len()];
    let mut remaining = net.len();
    let mut levels = Vec::new();
    for n in 1..=n_max {
        let outer = 0.5f64.powi(n as i32);
        let inner = 0.5 * outer;
        let (mut centers, mut owners) = (Vec::new(), Vec::new());
        for i in 0..net.len() {
            if captured[i] || !cover.regions[first[i]].contains_ball(&net[i], 3.0 * outer, norm) {
                continue;
            }
            for j in net_index.within(&net[i], inner) {
                if !captured[j] && norm.dist(&net[i], &net[j]) < inner {
                    captured[j] = true;
                    remaining -= 1;
                }
            }
            centers.push(net[i].clone());
            owners.push(first[i]);
        }
        levels.push(Level::new(n, centers, owners, norm)?);
        if remaining == 0 {
            return Ok(CoverRefinement {
                domain: domain.clone(),
                labels: cover.labels.clone(),
                levels,
            });
        }
    }
    Err(Error::InsufficientLevels {
        uncovered: remaining,
        levels: n_max,
    })
}

/// Region in which `x` lies deepest, if any contains it.
fn deepest(cover: &OpenCover, x: &[f64], norm: Norm) -> Option<usize> {
    let (i, d) = cover
        .regions
        .iter()
        .map(|r| r.depth(x, norm))
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, d)| {
            if d > best.1 {
                (i, d)
            } else {
                best
            }
        });
    (d > 0.0).then_some(i)
}

impl CoverRefinement {
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, n: usize) -> &Level {
        &self.levels[n - 1]
    }

    pub fn in_v(&self, n: usize, r: usize, x: &[f64]) -> bool {
        self.level(n).v_owner(x) == Some(r)
    }

    pub fn in_w(&self, n: usize, r: usize, x: &[f64]) -> bool {
        self.level(n).w_owner(x) == Some(r)
    }

    /// Locality data at any point of `∪ V`; `None` elsewhere.
    pub fn locality(&self, x: &[f64]) -> Option<Locality> {
        let (m, delta) = self.levels.iter().find_map(|l| match l.nearest(x) {
            Some((_, d)) if d < l.inner => Some((l.n, l.inner - d)),
            _ => None,
        })?;
        let mut n = m;
        while 0.5f64.powi(n as i32) > delta {
            n += 1;
        }
        let s = (0.5 * delta).min(0.5f64.powi(n as i32 + 3));
        let active = self
            .levels
            .iter()
            .take_while(|l| l.n <= n)
            .flat_map(|l| {
                l.owners_within(x, s + l.outer)
                    .into_iter()
                    .map(move |r| (l.n, r))
            })
            .collect();
        Some(Locality {
            s,
            n,
            captured_at: m,
            active,
        })
    }

    /// Certificates for the separation properties and the locality check
    /// at every net point.
    pub fn audit(&self) -> RefinementAudit {
        let net = self.domain.net();
        let checks: Vec<(bool, usize)> = net
            .par_iter()
            .map(|x| match self.locality(x) {
                None => (false, 0),
                Some(loc) => {
                    let deeper_clear = self
                        .levels
                        .iter()
                        .filter(|l| l.n > loc.n)
                        .all(|l| l.nearest(x).is_none_or(|(_, d)| d >= loc.s + l.outer));
                    let mut per_level = vec![0usize; self.levels.len() + 1];
                    for (lv, _) in &loc.active {
                        per_level[*lv] += 1;
                    }
                    (
                        deeper_clear && per_level.iter().all(|&c| c <= 1),
                        loc.active.len(),
                    )
                }
            })
            .collect();
        RefinementAudit {
            capture_level: self.levels.len(),
            centers_per_level: self.levels.iter().map(|l| l.centers.len()).collect(),
            w_separation: self
                .levels
                .iter()
                .map(|l| l.owner_separation() - 2.0 * l.outer)
                .collect(),
            v_margin: self.levels.iter().map(|l| l.outer - l.inner).collect(),
            locality_failures: checks.iter().filter(|c| !c.0).count(),
            max_active: checks.iter().map(|c| c.1).max().unwrap_or(0),
        }
    }
}
