use std::fmt;
use std::sync::Arc;

use super::envelope::{LatticeEnvelope, NodeCache};
use super::spline::{Lattice, SPLINE_SECOND_MOMENT};
use crate::base::{Norm, ScalarField, WorkingDomain};
use crate::error::{Error, Result};

/// A uniform C1 approximation scheme for Lipschitz functions: given `f`
/// with declared bound `L` and `eps > 0`, returns `K` with an analytic
/// gradient, `|f - K| < eps` on the box and `Lip(K) <= c0 L`.
pub trait SmoothingOracle: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn domain(&self) -> &WorkingDomain;

    /// Lipschitz inflation the scheme certifies analytically on its box.
    fn certified_c0(&self) -> f64 {
        let d = self.domain();
        d.norm.dual_of(&vec![1.0; d.dim()])
    }

    fn smooth(&self, f: &ScalarField, eps: f64) -> Result<ScalarField>;
}

/// Smallest lattice step relative to the box scale; below it lattice
/// coordinates lose their fractional part.
pub const MIN_RELATIVE_STEP: f64 = 1e-15;

pub(crate) fn check_resolution(rho: f64, domain: &WorkingDomain) -> Result<()> {
    let scale = domain
        .lo
        .iter()
        .chain(&domain.hi)
        .fold(domain.diameter(), |m, v| m.max(v.abs()));
    if rho >= MIN_RELATIVE_STEP * scale {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "lattice step {rho:e} is below floating-point resolution for a box of scale {scale}"
        )))
    }
}

pub(crate) fn checked_lip(f: &ScalarField, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "tolerance must be positive, got {eps}"
        )));
    }
    match f.lip_bound() {
        Some(l) if l >= 0.0 && l.is_finite() => Ok(l),
        Some(l) => Err(Error::InvalidInput(format!("invalid Lipschitz bound {l}"))),
        None => Err(Error::Missing("lip_bound")),
    }
}

/// Bound on `sum_i B(x - p_i) ||x - p_i||` in units of the lattice step.
pub(crate) fn spline_spread(norm: Norm, dim: usize) -> f64 {
    let axis = SPLINE_SECOND_MOMENT.sqrt();
    match norm {
        Norm::Euclidean => axis * (dim as f64).sqrt(),
        _ => axis * dim as f64,
    }
}

fn constant_like(f: &ScalarField, domain: &WorkingDomain) -> ScalarField {
    ScalarField::constant(f.value(&domain.lo), domain.dim())
}

/// Spline quasi-interpolation of the lattice values of `f` (clamped to
/// the box) at a step fine enough for error `eps / 2`.
#[derive(Clone, Debug)]
pub struct QuasiInterpolation {
    domain: WorkingDomain,
}

impl QuasiInterpolation {
    pub fn new(domain: WorkingDomain) -> Result<Self> {
        domain.validate()?;
        Ok(QuasiInterpolation { domain })
    }

    /// Spline of `f` at step `rho`.
    pub(crate) fn at_step(&self, f: &ScalarField, rho: f64, lip: Option<f64>) -> ScalarField {
        let cache = Arc::new(NodeCache::new());
        let lattice = Lattice::new(vec![0.0; self.domain.dim()], rho);
        let (lat, dom, g) = (lattice.clone(), self.domain.clone(), f.clone());
        let coeff = move |i: &[i64]| cache.get_or(i, || g.value(&dom.clamp(&lat.node(i))));
        lattice.field(Arc::new(coeff), lip)
    }
}

impl SmoothingOracle for QuasiInterpolation {
    fn name(&self) -> &'static str {
        "quasi-interpolation"
    }

    fn domain(&self) -> &WorkingDomain {
        &self.domain
    }

    fn smooth(&self, f: &ScalarField, eps: f64) -> Result<ScalarField> {
        let lip = checked_lip(f, eps)?;
        if lip == 0.0 {
            return Ok(constant_like(f, &self.domain));
        }
        let rho = eps / (2.0 * lip * spline_spread(self.domain.norm, self.domain.dim()));
        check_resolution(rho, &self.domain)?;
        Ok(self.at_step(f, rho, Some(self.certified_c0() * lip)))
    }
}

/// Double Moreau envelope (inf with `t = eps / L^2`, then sup with
/// `s = t / 2`) on a lattice of step `eps / (4 L sqrt(d))`, realized by
/// spline quasi-interpolation. Falls back to [`QuasiInterpolation`] for
/// non-Euclidean norms.
#[derive(Clone, Debug)]
pub struct LasryLions {
    domain: WorkingDomain,
}

impl LasryLions {
    pub fn new(domain: WorkingDomain) -> Result<Self> {
        domain.validate()?;
        Ok(LasryLions { domain })
    }

    /// `(t, s, rho)` used for tolerance `eps` and constant `lip > 0`.
    pub fn parameters(&self, lip: f64, eps: f64) -> (f64, f64, f64) {
        let t = eps / (lip * lip);
        let rho = eps / (4.0 * lip * (self.domain.dim() as f64).sqrt());
        (t, 0.5 * t, rho)
    }
}

impl SmoothingOracle for LasryLions {
    fn name(&self) -> &'static str {
        if self.domain.norm.is_euclidean() {
            "lasry-lions"
        } else {
            "quasi-interpolation"
        }
    }

    fn domain(&self) -> &WorkingDomain {
        &self.domain
    }

    fn smooth(&self, f: &ScalarField, eps: f64) -> Result<ScalarField> {
        let lip = checked_lip(f, eps)?;
        if lip == 0.0 {
            return Ok(constant_like(f, &self.domain));
        }
        if !self.domain.norm.is_euclidean() {
            return QuasiInterpolation::new(self.domain.clone())?.smooth(f, eps);
        }
        let (t, s, rho) = self.parameters(lip, eps);
        check_resolution(rho, &self.domain)?;
        let env = Arc::new(LatticeEnvelope::new(
            f.clone(),
            lip,
            t,
            s,
            rho,
            self.domain.clone(),
        ));
        let lattice = Lattice::new(env.origin.clone(), env.rho);
        Ok(lattice.field(
            Arc::new(move |i: &[i64]| env.node(i)),
            Some(self.certified_c0() * lip),
        ))
    }
}
