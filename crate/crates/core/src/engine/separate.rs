//! A C1 function that is 0 on `A` and 1 where `dist(., A) >= 1`, from the
//! two-valued jet on `A ∪ {dist >= 1}` composed with a 2-Lipschitz ramp.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{extend_from_jets, ExtendOptions, ExtensionResult, GateOptions, JetExtension};
use crate::approx::Context;
use crate::base::lipschitz::pairwise_max;
use crate::base::{ClosedSet, PointIndex, ScalarField};
use crate::covering::{smoothstep, Ramp};
use crate::error::{Error, Result};
use crate::taylor::JetData;

/// `theta`: 0 below 1/8, 1 above 7/8, Lipschitz constant 2.
pub const SEPARATION_RAMP: (f64, f64) = (0.125, 0.875);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationCertificates {
    pub a_samples: usize,
    pub b_samples: usize,
    /// `max |h_A|` on `A` and `max |1 - h_A|` where `dist(., A) >= 1`.
    pub a_gap: f64,
    pub b_gap: f64,
    pub range_min: f64,
    pub range_max: f64,
    pub lip_sampled: f64,
    /// `2 C3`.
    pub lip_bound: f64,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct SeparatingFunction {
    pub field: ScalarField,
    pub extension: ExtensionResult,
    pub certificates: SeparationCertificates,
    /// `h_A` at the net points, in net order.
    pub net_values: Vec<f64>,
}

/// Builds `h_A` for the samples of `A`; `B` is the set of net points at
/// distance at least 1 from them.
pub fn separating_function(
    a: &ClosedSet,
    gate: &GateOptions,
    ctx: &Context,
) -> Result<SeparatingFunction> {
    separating_function_with(a, gate, ExtendOptions::new(true), ctx)
}

/// As `separating_function`, with explicit series options (Lipschitz mode is forced).
pub fn separating_function_with(
    a: &ClosedSet,
    gate: &GateOptions,
    opts: ExtendOptions,
    ctx: &Context,
) -> Result<SeparatingFunction> {
    let domain = &ctx.domain;
    a.validate_in(domain)?;
    let norm = domain.norm;
    let a_pts = a.samples().to_vec();
    let index = PointIndex::new(a_pts.clone(), norm)?;
    let net = domain.net();
    let far: Vec<bool> = net.par_iter().map(|x| index.nearest(x).1 >= 1.0).collect();
    let b_pts: Vec<Vec<f64>> = net
        .iter()
        .zip(&far)
        .filter(|(_, f)| **f)
        .map(|(x, _)| x.clone())
        .collect();
    if b_pts.is_empty() {
        return Err(Error::InvalidInput(
            "no net point of the box is at distance >= 1 from A".into(),
        ));
    }
    let (na, nb) = (a_pts.len(), b_pts.len());
    let mut pts = a_pts;
    pts.extend(b_pts);
    let values: Vec<f64> = (0..na + nb)
        .map(|i| if i < na { 0.0 } else { 1.0 })
        .collect();
    let jet = JetData::new(
        ClosedSet::finite(pts)?,
        values,
        vec![vec![0.0; domain.dim()]; na + nb],
        Some(0.0),
    )?;
    let extension = match extend_from_jets(
        &jet,
        gate,
        ExtendOptions {
            lipschitz: true,
            ..opts
        },
        ctx,
    )? {
        JetExtension::Extended { result, .. } => *result,
        JetExtension::GateFailed(e) => {
            return Err(Error::GateFailed {
                worst: e.worst,
                threshold: e.eps_e,
            })
        }
    };
    let theta: Ramp = smoothstep(SEPARATION_RAMP.0, SEPARATION_RAMP.1)?;
    let (h1, h2) = (extension.field.clone(), extension.field.clone());
    let c3 = ctx.constants.c3;
    let field = ScalarField::new(move |x| theta.value(h1.value(x)))
        .with_grad(move |x| {
            let s = theta.deriv(h2.value(x));
            h2.gradient(x)
                .unwrap_or_else(|| vec![0.0; x.len()])
                .into_iter()
                .map(|g| s * g)
                .collect()
        })
        .with_lip(2.0 * c3);

    let net_values: Vec<f64> = extension
        .net_values
        .iter()
        .map(|v| theta.value(*v))
        .collect();
    let sample_values: Vec<f64> = jet.samples().par_iter().map(|p| field.value(p)).collect();
    let a_gap = sample_values[..na]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let b_gap = net_values
        .iter()
        .zip(&far)
        .filter(|(_, f)| **f)
        .fold(0.0f64, |m, (v, _)| m.max((1.0 - v).abs()));
    let range_min = net_values.iter().copied().fold(f64::INFINITY, f64::min);
    let range_max = net_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lip_sampled = pairwise_max(&net, &net_values, norm);
    let lip_bound = 2.0 * c3;
    let certificates = SeparationCertificates {
        a_samples: na,
        b_samples: nb,
        a_gap,
        b_gap,
        range_min,
        range_max,
        lip_sampled,
        lip_bound,
        passed: a_gap == 0.0
            && b_gap == 0.0
            && range_min >= 0.0
            && range_max <= 1.0
            && lip_sampled <= lip_bound,
    };
    Ok(SeparatingFunction {
        field,
        extension,
        certificates,
        net_values,
    })
}
