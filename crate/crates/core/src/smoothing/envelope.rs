//! Moreau envelopes over the verification net and over a lazily evaluated
//! lattice.

use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use parking_lot::Mutex;
use rayon::prelude::*;

use crate::base::{PointIndex, ScalarField, WorkingDomain};
use crate::error::{Error, Result};

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn declared_lip(f: &ScalarField) -> Result<f64> {
    match f.lip_bound() {
        Some(l) if l >= 0.0 && l.is_finite() => Ok(l),
        Some(l) => Err(Error::InvalidInput(format!("invalid Lipschitz bound {l}"))),
        None => Err(Error::Missing("lip_bound")),
    }
}

struct NetTable {
    index: PointIndex,
    values: Vec<f64>,
    radius: f64,
}

fn net_table(f: &ScalarField, reach: f64, domain: &WorkingDomain) -> Result<NetTable> {
    let points = domain.net();
    let values = points.par_iter().map(|p| f.value(p)).collect();
    Ok(NetTable {
        index: PointIndex::new(points, domain.norm)?,
        values,
        radius: reach + 2.0 * domain.net_step,
    })
}

/// `x -> min_y f(y) + |x - y|^2 / (2t)` over net points `y` near `x`.
///
/// Minimizers lie within `2 L t` of `x`, so the search radius is
/// `2 L t + 2 h` for net step `h`.
pub fn moreau_inf(f: &ScalarField, t: f64, domain: &WorkingDomain) -> Result<ScalarField> {
    envelope(f, t, domain, false)
}

/// `x -> max_y f(y) - |x - y|^2 / (2s)`, the dual of [`moreau_inf`].
pub fn moreau_sup(f: &ScalarField, s: f64, domain: &WorkingDomain) -> Result<ScalarField> {
    envelope(f, s, domain, true)
}

fn envelope(f: &ScalarField, t: f64, domain: &WorkingDomain, upper: bool) -> Result<ScalarField> {
    let lip = declared_lip(f)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "envelope parameter must be positive, got {t}"
        )));
    }
    domain.validate()?;
    let table = Arc::new(net_table(f, 2.0 * lip * t, domain)?);
    let sign = if upper { -1.0 } else { 1.0 };
    Ok(ScalarField::new(move |x| {
        let best = table
            .index
            .within(x, table.radius)
            .into_iter()
            .map(|i| sign * table.values[i] + sq_dist(x, &table.index.points()[i]) / (2.0 * t))
            .fold(f64::INFINITY, f64::min);
        sign * best
    })
    .with_lip(lip))
}

const SHARDS: usize = 64;

/// Memo table for lattice node values, sharded to keep parallel audits
/// from serializing on one lock.
pub(crate) struct NodeCache {
    shards: Vec<Mutex<HashMap<Vec<i64>, f64>>>,
}

impl NodeCache {
    pub(crate) fn new() -> Self {
        NodeCache {
            shards: (0..SHARDS).map(|_| Mutex::new(HashMap::new())).collect(),
        }
    }

    pub(crate) fn get_or(&self, key: &[i64], compute: impl FnOnce() -> f64) -> f64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        key.hash(&mut h);
        let shard = &self.shards[h.finish() as usize % SHARDS];
        if let Some(&v) = shard.lock().get(key) {
            return v;
        }
        let v = compute();
        shard.lock().insert(key.to_vec(), v);
        v
    }
}

/// Integer offsets `k` with `|k|_2 <= radius`, with their squared length.
pub(crate) fn ball_offsets(dim: usize, radius: i64) -> Vec<(Vec<i64>, f64)> {
    let mut out = Vec::new();
    let r2 = radius * radius;
    crate::base::geometry::for_each_index(&vec![-radius; dim], &vec![radius; dim], |k| {
        let n2: i64 = k.iter().map(|v| v * v).sum();
        if n2 <= r2 {
            out.push((k.to_vec(), n2 as f64));
        }
    });
    out
}

/// Double envelope `sup_s inf_t f` on the lattice `origin + rho Z^d`, each
/// node value computed on demand. Shift invariance of the windows keeps
/// every axis difference within the input's Lipschitz constant.
pub(crate) struct LatticeEnvelope {
    pub(crate) origin: Vec<f64>,
    pub(crate) rho: f64,
    t: f64,
    s: f64,
    inner: Vec<(Vec<i64>, f64)>,
    outer: Vec<(Vec<i64>, f64)>,
    f: ScalarField,
    domain: WorkingDomain,
    base: NodeCache,
    low: NodeCache,
    high: NodeCache,
}

impl LatticeEnvelope {
    pub(crate) fn new(
        f: ScalarField,
        lip: f64,
        t: f64,
        s: f64,
        rho: f64,
        domain: WorkingDomain,
    ) -> Self {
        let d = domain.dim();
        let wt = (2.0 * lip * t / rho).ceil() as i64;
        let ws = (2.0 * lip * s / rho).ceil() as i64;
        LatticeEnvelope {
            origin: domain.lo.clone(),
            rho,
            t,
            s,
            inner: ball_offsets(d, wt),
            outer: ball_offsets(d, ws),
            f,
            domain,
            base: NodeCache::new(),
            low: NodeCache::new(),
            high: NodeCache::new(),
        }
    }

    fn shifted(i: &[i64], k: &[i64]) -> Vec<i64> {
        i.iter().zip(k).map(|(a, b)| a + b).collect()
    }

    fn base(&self, i: &[i64]) -> f64 {
        self.base.get_or(i, || {
            let p: Vec<f64> = i
                .iter()
                .zip(&self.origin)
                .map(|(&k, &o)| o + k as f64 * self.rho)
                .collect();
            self.f.value(&self.domain.clamp(&p))
        })
    }

    fn low(&self, i: &[i64]) -> f64 {
        self.low.get_or(i, || {
            let scale = self.rho * self.rho / (2.0 * self.t);
            self.inner
                .iter()
                .map(|(k, n2)| self.base(&Self::shifted(i, k)) + scale * n2)
                .fold(f64::INFINITY, f64::min)
        })
    }

    pub(crate) fn node(&self, i: &[i64]) -> f64 {
        self.high.get_or(i, || {
            let scale = self.rho * self.rho / (2.0 * self.s);
            self.outer
                .iter()
                .map(|(k, n2)| self.low(&Self::shifted(i, k)) - scale * n2)
                .fold(f64::NEG_INFINITY, f64::max)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> WorkingDomain {
        WorkingDomain::cube(1, -1.0, 1.0, 1e-3).unwrap()
    }

    #[test]
    fn constant_is_fixed() {
        let d = line();
        let c = ScalarField::constant(0.7, 1);
        let lo = moreau_inf(&c, 0.3, &d).unwrap();
        let hi = moreau_sup(&c, 0.3, &d).unwrap();
        for x in [-0.9, 0.0, 0.55] {
            assert_eq!(lo.value(&[x]), 0.7);
            assert_eq!(hi.value(&[x]), 0.7);
        }
    }

    #[test]
    fn huber_values() {
        let d = line();
        let f = ScalarField::new(|x| x[0].abs()).with_lip(1.0);
        let u = moreau_inf(&f, 0.5, &d).unwrap();
        assert!(u.value(&[0.0]).abs() < 1e-12);
        assert!((u.value(&[1.0]) - 0.75).abs() < 1e-9);
    }

    #[test]
    fn missing_lip_is_rejected() {
        let f = ScalarField::new(|x| x[0]);
        assert!(matches!(
            moreau_inf(&f, 0.5, &line()),
            Err(Error::Missing(_))
        ));
    }

    #[test]
    fn lattice_windows_are_symmetric_balls() {
        let k = ball_offsets(2, 2);
        assert_eq!(k.len(), 13);
        assert!(k
            .iter()
            .all(|(v, n)| *n == (v[0] * v[0] + v[1] * v[1]) as f64));
    }
}
