//! Covectors restricted to `Z = span{y - y'}` and their norm-preserving
//! extensions to the whole space.

use serde::{Deserialize, Serialize};

use crate::base::{project_onto, Norm};
use crate::error::{Error, Result};

/// How derivative data is measured and extended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    /// `Z*` norm; Taylor fields use a Hahn-Banach extension of `D|_Z`.
    Restricted,
    /// `X*` norm; Taylor fields use the covector as given.
    Ambient,
}

/// A subspace `Z` with an orthonormal (Euclidean) basis inside a normed space.
#[derive(Clone, Debug)]
pub struct Restriction {
    basis: Vec<Vec<f64>>,
    dim: usize,
    norm: Norm,
    measure: Measure,
}

impl Restriction {
    pub fn new(basis: Vec<Vec<f64>>, dim: usize, norm: Norm, measure: Measure) -> Result<Self> {
        let r = Restriction {
            basis,
            dim,
            norm,
            measure,
        };
        if r.measure == Measure::Restricted
            && !r.full()
            && r.basis.len() > 1
            && !norm.is_euclidean()
        {
            return Err(Error::Unsupported(format!(
                "norm-preserving extension from a {}-dimensional subspace needs the Euclidean norm",
                r.basis.len()
            )));
        }
        Ok(r)
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    fn full(&self) -> bool {
        self.basis.len() == self.dim
    }

    /// `||phi||_{Z*}` (or `||phi||_{X*}` for the ambient measure).
    pub fn norm_of(&self, phi: &[f64]) -> f64 {
        if self.measure == Measure::Ambient || self.full() {
            return self.norm.dual_of(phi);
        }
        if self.basis.is_empty() {
            return 0.0;
        }
        if self.norm.is_euclidean() {
            return Norm::Euclidean.of(&project_onto(&self.basis, phi));
        }
        let z = &self.basis[0];
        dot(phi, z).abs() / self.norm.of(z)
    }

    /// Covector on the whole space agreeing with `phi` on `Z` with the same norm.
    pub fn extend(&self, phi: &[f64]) -> Vec<f64> {
        if self.measure == Measure::Ambient || self.full() {
            return phi.to_vec();
        }
        if self.basis.is_empty() {
            return vec![0.0; self.dim];
        }
        if self.norm.is_euclidean() {
            return project_onto(&self.basis, phi);
        }
        let z = &self.basis[0];
        let len = self.norm.of(z);
        let a = dot(phi, z) / len;
        let unit: Vec<f64> = z.iter().map(|v| v / len).collect();
        duality_map(self.norm, &unit)
            .into_iter()
            .map(|v| a * v)
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Norming functional of a unit vector `v`: `J(v)(v) = 1 = ||J(v)||_*`.
pub fn duality_map(norm: Norm, v: &[f64]) -> Vec<f64> {
    match norm {
        Norm::Max => {
            let (i, _) = v.iter().enumerate().fold((0, -1.0), |(bi, bv), (i, x)| {
                if x.abs() > bv {
                    (i, x.abs())
                } else {
                    (bi, bv)
                }
            });
            let mut j = vec![0.0; v.len()];
            j[i] = v[i].signum();
            j
        }
        Norm::P { p: 1.0 } => v
            .iter()
            .map(|x| if *x == 0.0 { 0.0 } else { x.signum() })
            .collect(),
        Norm::P { p } => {
            let n = norm.of(v);
            v.iter()
                .map(|x| x.signum() * (x.abs() / n).powf(p - 1.0))
                .collect()
        }
        Norm::Euclidean => {
            let n = norm.of(v);
            v.iter().map(|x| x / n).collect()
        }
    }
}
