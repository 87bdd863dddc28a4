//! `psi_{n,r} = 1_{W_{n,r}} h_n (1 - h_1) ... (1 - h_{n-1})` with
//! `h_n = phi_n ∘ g_n`, `g_n` a smoothing of the level depth within
//! `2^-(n+3)` and `phi_n` the ramp from `2^-(n+3)` to `2^-(n+2)`.
//!
//! `h_n > 0` forces `depth_n > 0`, i.e. a point of some `W_{n,r}`; the
//! `W` of one level are disjoint and open, so the mask is locally
//! constant on the support of `h_n` and each member stays C1.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rudin::CoverRefinement;
use super::{smoothstep, Ramp};
use crate::base::{Constants, ScalarField};
use crate::error::{Error, Result};
use crate::smoothing::SmoothingOracle;

/// Fraction of `2^-(n+3)` used as the smoothing tolerance for `g_n`.
const DEPTH_TOLERANCE: f64 = 0.99;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActiveMember {
    pub level: usize,
    /// Cover position.
    pub owner: usize,
    pub label: usize,
    pub value: f64,
    pub grad: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct PartitionOfUnity {
    refinement: Arc<CoverRefinement>,
    depth_smooth: Vec<Option<ScalarField>>,
    ramps: Vec<Ramp>,
    constants: Constants,
}

pub fn build_partition(
    refinement: CoverRefinement,
    oracle: &dyn SmoothingOracle,
    constants: Constants,
) -> Result<PartitionOfUnity> {
    let net = refinement.domain.net();
    for level in &refinement.levels {
        let clash = net.par_iter().find_map_any(|x| {
            let mut hits: Vec<usize> = level
                .centers
                .iter()
                .zip(&level.owners)
                .filter(|(c, _)| refinement.domain.norm.dist(x, c) < level.outer)
                .map(|(_, &o)| o)
                .collect();
            hits.sort_unstable();
            hits.dedup();
            (hits.len() > 1).then(|| (hits[0], hits[1]))
        });
        if let Some((first, second)) = clash {
            return Err(Error::SeparationViolated {
                level: level.n,
                first,
                second,
            });
        }
    }
    let refinement = Arc::new(refinement);
    let mut depth_smooth = Vec::new();
    let mut ramps = Vec::new();
    for level in &refinement.levels {
        let low = 0.5f64.powi(level.n as i32 + 3);
        ramps.push(smoothstep(low, 2.0 * low)?);
        if level.centers.is_empty() {
            depth_smooth.push(None);
            continue;
        }
        let (r, n) = (refinement.clone(), level.n);
        let depth = ScalarField::new(move |x| r.level(n).depth(x)).with_lip(1.0);
        depth_smooth.push(Some(oracle.smooth(&depth, DEPTH_TOLERANCE * low)?));
    }
    Ok(PartitionOfUnity {
        refinement,
        depth_smooth,
        ramps,
        constants,
    })
}

impl PartitionOfUnity {
    pub fn refinement(&self) -> &CoverRefinement {
        &self.refinement
    }

    pub fn n_levels(&self) -> usize {
        self.ramps.len()
    }

    /// `(level, owner)` for every member with a nonempty `W`.
    pub fn members(&self) -> Vec<(usize, usize)> {
        self.refinement
            .levels
            .iter()
            .flat_map(|l| l.owner_set().into_iter().map(move |r| (l.n, r)))
            .collect()
    }

    /// Declared Lipschitz bound `C0 2^5 (2^n - 1)` of level-`n` members.
    pub fn lip_bound(&self, n: usize) -> f64 {
        self.constants.partition_lip(n)
    }

    /// `h_n(x)` and its gradient.
    pub fn h(&self, n: usize, x: &[f64]) -> (f64, Vec<f64>) {
        let dim = x.len();
        let Some(g) = &self.depth_smooth[n - 1] else {
            return (0.0, vec![0.0; dim]);
        };
        let ramp = self.ramps[n - 1];
        let v = g.value(x);
        let h = ramp.value(v);
        let slope = ramp.deriv(v);
        if slope == 0.0 {
            return (h, vec![0.0; dim]);
        }
        let grad = g.gradient(x).unwrap_or_else(|| vec![0.0; dim]);
        (h, grad.into_iter().map(|gi| slope * gi).collect())
    }

    /// Every member with a nonzero value at `x`, with its gradient.
    pub fn evaluate(&self, x: &[f64]) -> Vec<ActiveMember> {
        let dim = x.len();
        let mut prod = 1.0;
        let mut prod_grad = vec![0.0; dim];
        let mut out = Vec::new();
        for level in &self.refinement.levels {
            let (h, dh) = self.h(level.n, x);
            if h > 0.0 {
                let owner = level
                    .w_owner(x)
                    .expect("positive level ramp implies a W set");
                let value = h * prod;
                if value > 0.0 {
                    out.push(ActiveMember {
                        level: level.n,
                        owner,
                        label: self.refinement.labels[owner],
                        value,
                        grad: dh
                            .iter()
                            .zip(&prod_grad)
                            .map(|(a, b)| a * prod + h * b)
                            .collect(),
                    });
                }
            }
            for (pg, d) in prod_grad.iter_mut().zip(&dh) {
                *pg = *pg * (1.0 - h) - prod * d;
            }
            prod *= 1.0 - h;
            if prod == 0.0 && prod_grad.iter().all(|v| *v == 0.0) {
                break;
            }
        }
        out
    }

    /// `psi_{n,r}(x)` and its gradient.
    pub fn member(&self, n: usize, r: usize, x: &[f64]) -> (f64, Vec<f64>) {
        self.evaluate(x)
            .into_iter()
            .find(|m| m.level == n && m.owner == r)
            .map_or_else(|| (0.0, vec![0.0; x.len()]), |m| (m.value, m.grad))
    }

    pub fn member_field(self: &Arc<Self>, n: usize, r: usize) -> ScalarField {
        let (a, b) = (self.clone(), self.clone());
        ScalarField::new(move |x| a.member(n, r, x).0)
            .with_grad(move |x| b.member(n, r, x).1)
            .with_lip(self.lip_bound(n))
    }

    pub fn sum(&self, x: &[f64]) -> f64 {
        self.evaluate(x).iter().map(|m| m.value).sum()
    }
}
