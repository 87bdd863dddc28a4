//! Sampled Lipschitz audits, McShane extensions and set distances.

use std::sync::Arc;

use rayon::prelude::*;

use super::field::ScalarField;
use super::geometry::{Norm, PointIndex};
use super::set::ClosedSet;
use crate::error::{Error, Result};

/// Largest difference quotient of `f` over distinct pairs of `points`.
///
/// A lower bound for the true constant; audits only use it on the small
/// side of a comparison.
pub fn estimate_lip(f: &ScalarField, points: &[Vec<f64>], norm: Norm) -> Result<f64> {
    let values: Vec<f64> = points.par_iter().map(|p| f.value(p)).collect();
    estimate_lip_values(points, &values, norm)
}

/// [`estimate_lip`] on tabulated values.
pub fn estimate_lip_values(points: &[Vec<f64>], values: &[f64], norm: Norm) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidInput(
            "Lipschitz estimate needs at least two points".into(),
        ));
    }
    Ok(pairwise_max(points, values, norm))
}

/// Same as [`estimate_lip_values`] but returns 0 for fewer than two points.
pub(crate) fn pairwise_max(points: &[Vec<f64>], values: &[f64], norm: Norm) -> f64 {
    (0..points.len())
        .into_par_iter()
        .map(|i| {
            let mut m = 0.0f64;
            for j in i + 1..points.len() {
                let d = norm.dist(&points[i], &points[j]);
                if d > 0.0 {
                    m = m.max((values[i] - values[j]).abs() / d);
                }
            }
            m
        })
        .reduce(|| 0.0, f64::max)
}

/// Tabulated data on finitely many points with its McShane-type extension
/// `x -> min(cap, min_i h_i + L ||x - y_i||)`.
#[derive(Clone, Debug)]
pub struct McShane {
    index: PointIndex,
    values: Vec<f64>,
    vmin: f64,
    lip: f64,
    cap: f64,
}

impl McShane {
    /// Builds the extension after auditing that the data is `lip`-Lipschitz.
    pub fn new(
        points: Vec<Vec<f64>>,
        values: Vec<f64>,
        lip: f64,
        cap: Option<f64>,
        norm: Norm,
    ) -> Result<Self> {
        if points.len() != values.len() || points.is_empty() {
            return Err(Error::InvalidInput(
                "McShane data must be nonempty and paired".into(),
            ));
        }
        if !(lip >= 0.0 && lip.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "Lipschitz constant must be finite and >= 0, got {lip}"
            )));
        }
        let sampled = pairwise_max(&points, &values, norm);
        if sampled > lip + 1e-9 * (1.0 + lip) {
            return Err(Error::LipschitzAudit {
                sampled,
                declared: lip,
            });
        }
        let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let cap = match cap {
            Some(c) if c < sup => {
                return Err(Error::InvalidInput(format!(
                    "sup bound {c} is below sup|h| = {sup}"
                )))
            }
            Some(c) => c,
            None => f64::INFINITY,
        };
        let vmin = values.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(McShane {
            index: PointIndex::new(points, norm)?,
            values,
            vmin,
            lip,
            cap,
        })
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        if self.lip == 0.0 {
            return self.vmin.min(self.cap);
        }
        self.index
            .cone_min(x, &self.values, self.vmin, self.lip)
            .1
            .min(self.cap)
    }

    pub fn lip(&self) -> f64 {
        self.lip
    }

    pub fn into_field(self) -> ScalarField {
        let lip = self.lip;
        let this = Arc::new(self);
        ScalarField::new(move |x| this.value(x)).with_lip(lip)
    }
}

/// McShane extension of `h` (tabulated on the samples of `y`).
///
/// `sup_bound = None` gives the unbounded form.
pub fn mcshane_extend(
    y: &ClosedSet,
    h: &[f64],
    lip: f64,
    sup_bound: Option<f64>,
    norm: Norm,
) -> Result<ScalarField> {
    if h.len() != y.samples().len() {
        return Err(Error::InvalidInput(
            "values must match the set samples".into(),
        ));
    }
    Ok(McShane::new(y.samples().to_vec(), h.to_vec(), lip, sup_bound, norm)?.into_field())
}

/// Distance from `x` to a finite sample set.
pub fn dist_to_set(x: &[f64], samples: &[Vec<f64>], norm: Norm) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("distance to an empty set".into()));
    }
    Ok(samples
        .iter()
        .map(|s| norm.dist(x, s))
        .fold(f64::INFINITY, f64::min))
}

/// Indexed distance function to a fixed sample set, as a 1-Lipschitz field.
pub fn distance_field(samples: Vec<Vec<f64>>, norm: Norm) -> Result<ScalarField> {
    let index = Arc::new(PointIndex::new(samples, norm)?);
    Ok(ScalarField::new(move |x| index.nearest(x).1).with_lip(1.0))
}
