//! Uniform C1 approximation of Lipschitz and of uniformly continuous
//! functions on the working box.

pub mod envelope;
pub mod oracle;
pub mod spline;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use envelope::{moreau_inf, moreau_sup};
use oracle::check_resolution;
pub use oracle::{LasryLions, QuasiInterpolation, SmoothingOracle, MIN_RELATIVE_STEP};
pub use spline::Lattice;

use crate::base::lipschitz::pairwise_max;
use crate::base::{ScalarField, WorkingDomain};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingReport {
    pub method: String,
    /// Inf-envelope parameter (0 when the input is constant).
    pub t: f64,
    /// Sup-envelope parameter.
    pub s: f64,
    /// Lattice step of the spline realization.
    pub rho: f64,
    /// `max |f - K|` over the net.
    pub achieved_error: f64,
    /// Max of the sampled difference quotients and gradient norms of `K`.
    pub lip_certificate: f64,
    /// Lipschitz inflation guaranteed by construction.
    pub certified_c0: f64,
}

/// Largest of `max ||grad K||_*` over `points` and the pairwise quotients
/// on an evenly strided subsample of at most `pair_cap` points.
pub fn sampled_lip(
    k: &ScalarField,
    points: &[Vec<f64>],
    domain: &WorkingDomain,
    pair_cap: usize,
) -> f64 {
    let norm = domain.norm;
    let grad_max = if k.has_grad() {
        points
            .par_iter()
            .map(|p| norm.dual_of(&k.gradient(p).unwrap_or_default()))
            .reduce(|| 0.0, f64::max)
    } else {
        0.0
    };
    let stride = points.len().div_ceil(pair_cap.max(2)).max(1);
    let sub: Vec<Vec<f64>> = points.iter().step_by(stride).cloned().collect();
    let values: Vec<f64> = sub.par_iter().map(|p| k.value(p)).collect();
    grad_max.max(pairwise_max(&sub, &values, norm))
}

/// `max |f - k|` over `points`.
pub fn sup_distance(f: &ScalarField, k: &ScalarField, points: &[Vec<f64>]) -> f64 {
    points
        .par_iter()
        .map(|p| (f.value(p) - k.value(p)).abs())
        .reduce(|| 0.0, f64::max)
}

/// Lipschitz smoothing with a net audit of the error and the constant.
pub fn smooth_lipschitz_approx(
    f: &ScalarField,
    eps: f64,
    domain: &WorkingDomain,
) -> Result<(ScalarField, SmoothingReport)> {
    let oracle = LasryLions::new(domain.clone())?;
    let lip = oracle::checked_lip(f, eps)?;
    let k = oracle.smooth(f, eps)?;
    let net = domain.net();
    let (t, s, rho) = if lip == 0.0 {
        (0.0, 0.0, 0.0)
    } else {
        oracle.parameters(lip, eps)
    };
    let report = SmoothingReport {
        method: if lip == 0.0 {
            "constant"
        } else {
            oracle.name()
        }
        .to_string(),
        t,
        s,
        rho,
        achieved_error: sup_distance(f, &k, &net),
        lip_certificate: sampled_lip(&k, &net, domain, 2000),
        certified_c0: oracle.certified_c0(),
    };
    if report.achieved_error >= eps {
        return Err(Error::Certificate(format!(
            "smoothing net error {} is not below {eps}",
            report.achieved_error
        )));
    }
    Ok((k, report))
}

/// Lattice step for which the spline smoothing of a function with
/// modulus `omega` is within `eps / 2`, and the stencil radius it implies.
pub fn continuous_step(f: &ScalarField, eps: f64, domain: &WorkingDomain) -> Result<(f64, f64)> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "tolerance must be positive, got {eps}"
        )));
    }
    if !f.has_modulus() {
        return Err(Error::Missing("modulus"));
    }
    let reach = |rho: f64| domain.norm.of(&vec![2.0 * rho; domain.dim()]);
    let mut rho = domain.diameter();
    for _ in 0..200 {
        let r = reach(rho);
        if f.modulus(r).unwrap_or(f64::INFINITY) < 0.5 * eps {
            check_resolution(rho, domain)?;
            return Ok((rho, r));
        }
        rho *= 0.5;
    }
    Err(Error::InvalidInput("modulus does not tend to zero".into()))
}

/// C1 approximation of a uniformly continuous `f` within `eps`: a spline
/// average of `f` over a stencil of radius `r` with `omega(r) < eps / 2`.
pub fn smooth_continuous_approx(
    f: &ScalarField,
    eps: f64,
    domain: &WorkingDomain,
) -> Result<ScalarField> {
    let (rho, _) = continuous_step(f, eps, domain)?;
    let qi = QuasiInterpolation::new(domain.clone())?;
    let lip = f.lip_bound().map(|l| l * qi.certified_c0());
    Ok(qi.at_step(f, rho, lip))
}
