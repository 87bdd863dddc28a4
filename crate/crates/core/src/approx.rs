//! C1 approximation of a continuous `F` that keeps the Lipschitz data of
//! `F|_Y`: `G = u g + (1 - u) h` with `g` a smoothing of the McShane
//! extension of `F|_Y`, `h` a smoothing of `F`, and `u` a C1 switch that
//! is 1 where `|F - F~| <= eps/4` and 0 where `|F - F~| >= eps/2`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::base::lipschitz::pairwise_max;
use crate::base::{ClosedSet, Constants, McShane, PointIndex, ScalarField, WorkingDomain};
use crate::covering::smoothstep;
use crate::error::{Error, Result};
use crate::smoothing::{smooth_continuous_approx, QuasiInterpolation, SmoothingOracle};

/// Everything the constructions share: the box, the smoothing oracle and
/// the propagated constants.
#[derive(Clone, Debug)]
pub struct Context {
    pub domain: WorkingDomain,
    pub oracle: Arc<dyn SmoothingOracle>,
    pub constants: Constants,
}

impl Context {
    /// Context with the quasi-interpolation oracle.
    pub fn new(domain: WorkingDomain, constants: Constants) -> Result<Self> {
        let oracle = Arc::new(QuasiInterpolation::new(domain.clone())?);
        Ok(Context {
            domain,
            oracle,
            constants,
        })
    }

    pub fn with_oracle(mut self, oracle: Arc<dyn SmoothingOracle>) -> Self {
        self.oracle = oracle;
        self
    }
}

/// The pieces of `G` and the data they were built from.
#[derive(Clone, Debug)]
pub struct Approximation {
    pub field: ScalarField,
    pub g: ScalarField,
    pub h: ScalarField,
    pub u: ScalarField,
    /// McShane extension of `F|_Y`.
    pub extension: ScalarField,
    /// Lipschitz constant used for `F|_Y`.
    pub l_y: f64,
    pub eps: f64,
}

/// Net masks of `A = {|F - F~| < eps/4}`, `B = {|F - F~| < eps/2}`,
/// `C = {|F - F~| <= eps/4}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlendSets {
    pub a: Vec<bool>,
    pub b: Vec<bool>,
    pub c: Vec<bool>,
    /// `Y ⊆ A ⊆ C ⊆ B` on the net and on the `Y` samples.
    pub chain_holds: bool,
    /// Sampled `dist(C, box \ B)` (infinite when either side is empty).
    pub separation: f64,
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "tolerance must be positive, got {eps}"
        )))
    }
}

/// Lipschitz constant of `F|_Y` (declared, or sampled over all pairs).
fn restriction_lip(values: &[f64], y: &ClosedSet, declared: Option<f64>, ctx: &Context) -> f64 {
    declared.unwrap_or_else(|| pairwise_max(y.samples(), values, ctx.domain.norm))
}

/// Plain branch: `F` continuous with a modulus (or a Lipschitz bound).
pub fn approx_keep_restriction(
    f: &ScalarField,
    y: &ClosedSet,
    l_y: Option<f64>,
    eps: f64,
    ctx: &Context,
) -> Result<Approximation> {
    build(f, y, l_y, eps, ctx, false)
}

/// Lipschitz branch: additionally `Lip(G) <= C1 Lip(F)`.
pub fn approx_keep_restriction_lipschitz(
    f: &ScalarField,
    y: &ClosedSet,
    l_y: Option<f64>,
    eps: f64,
    ctx: &Context,
) -> Result<Approximation> {
    if f.lip_bound().is_none() {
        return Err(Error::Missing("lip_bound"));
    }
    build(f, y, l_y, eps, ctx, true)
}

fn build(
    f: &ScalarField,
    y: &ClosedSet,
    l_y: Option<f64>,
    eps: f64,
    ctx: &Context,
    lipschitz: bool,
) -> Result<Approximation> {
    check_eps(eps)?;
    y.validate_in(&ctx.domain)?;
    let values: Vec<f64> = y.samples().par_iter().map(|p| f.value(p)).collect();
    let l_y = restriction_lip(&values, y, l_y, ctx);
    let extension =
        McShane::new(y.samples().to_vec(), values, l_y, None, ctx.domain.norm)?.into_field();
    let g = ctx.oracle.smooth(&extension, eps / 4.0)?;
    let h = if lipschitz {
        ctx.oracle.smooth(f, eps / 2.0)?
    } else {
        smooth_continuous_approx(f, eps, &ctx.domain)?
    };

    // K ~ |F - F~| within eps/64, then u = 1 - ramp(K).
    let (f2, e2) = (f.clone(), extension.clone());
    let gap = ScalarField::new(move |x| (f2.value(x) - e2.value(x)).abs());
    let k_tol = eps / 64.0;
    let k = match f.lip_bound() {
        Some(l_f) => ctx.oracle.smooth(&gap.with_lip(l_f + l_y), k_tol)?,
        None => {
            let f3 = f.clone();
            let gap = gap.with_modulus(move |r| f3.modulus(r).unwrap_or(f64::INFINITY) + l_y * r);
            smooth_continuous_approx(&gap, k_tol, &ctx.domain)?
        }
    };
    let ramp = smoothstep(eps / 4.0 + k_tol, eps / 2.0 - k_tol)?;
    let (k1, k2) = (k.clone(), k.clone());
    let u = ScalarField::new(move |x| 1.0 - ramp.value(k1.value(x))).with_grad(move |x| {
        let v = k2.value(x);
        let s = ramp.deriv(v);
        if s == 0.0 {
            vec![0.0; x.len()]
        } else {
            k2.gradient(x)
                .unwrap_or_else(|| vec![0.0; x.len()])
                .into_iter()
                .map(|d| -s * d)
                .collect()
        }
    });

    let field = blend(&u, &g, &h);
    let field = if lipschitz {
        field.with_lip(ctx.constants.c1 * f.lip_bound().unwrap_or(0.0))
    } else {
        field
    };
    Ok(Approximation {
        field,
        g,
        h,
        u,
        extension,
        l_y,
        eps,
    })
}

/// `u a + (1 - u) b` with the product-rule gradient; skips the side with
/// zero weight.
pub(crate) fn blend(u: &ScalarField, a: &ScalarField, b: &ScalarField) -> ScalarField {
    let (u1, a1, b1) = (u.clone(), a.clone(), b.clone());
    let (u2, a2, b2) = (u.clone(), a.clone(), b.clone());
    ScalarField::new(move |x| {
        let w = u1.value(x);
        if w == 1.0 {
            a1.value(x)
        } else if w == 0.0 {
            b1.value(x)
        } else {
            w * a1.value(x) + (1.0 - w) * b1.value(x)
        }
    })
    .with_grad(move |x| {
        let w = u2.value(x);
        let zero = || vec![0.0; x.len()];
        if w == 1.0 {
            return a2.gradient(x).unwrap_or_else(zero);
        }
        if w == 0.0 {
            return b2.gradient(x).unwrap_or_else(zero);
        }
        let (va, vb) = (a2.value(x), b2.value(x));
        let (ga, gb) = (
            a2.gradient(x).unwrap_or_else(zero),
            b2.gradient(x).unwrap_or_else(zero),
        );
        let gu = u2.gradient(x).unwrap_or_else(zero);
        (0..x.len())
            .map(|k| w * ga[k] + (1.0 - w) * gb[k] + (va - vb) * gu[k])
            .collect()
    })
}

/// Net masks of the blend sets for an approximation of `f`.
pub fn blend_sets(
    f: &ScalarField,
    approx: &Approximation,
    y: &ClosedSet,
    domain: &WorkingDomain,
) -> Result<BlendSets> {
    let net = domain.net();
    let gap: Vec<f64> = net
        .par_iter()
        .map(|p| (f.value(p) - approx.extension.value(p)).abs())
        .collect();
    let q = approx.eps / 4.0;
    let a: Vec<bool> = gap.iter().map(|&v| v < q).collect();
    let b: Vec<bool> = gap.iter().map(|&v| v < 2.0 * q).collect();
    let c: Vec<bool> = gap.iter().map(|&v| v <= q).collect();
    let y_in_a = y
        .samples()
        .iter()
        .all(|p| (f.value(p) - approx.extension.value(p)).abs() < q);
    let chain_holds = y_in_a && (0..net.len()).all(|i| (!a[i] || c[i]) && (!c[i] || b[i]));
    let outside: Vec<Vec<f64>> = net
        .iter()
        .zip(&b)
        .filter(|(_, &m)| !m)
        .map(|(p, _)| p.clone())
        .collect();
    let separation = if outside.is_empty() {
        f64::INFINITY
    } else {
        let index = PointIndex::new(outside, domain.norm)?;
        net.par_iter()
            .zip(c.par_iter())
            .filter(|(_, &m)| m)
            .map(|(p, _)| index.nearest(p).1)
            .reduce(|| f64::INFINITY, f64::min)
    };
    Ok(BlendSets {
        a,
        b,
        c,
        chain_holds,
        separation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::make_constants;

    #[test]
    fn constant_input_gives_constant_output() {
        let d = WorkingDomain::cube(1, -1.0, 1.0, 0.01).unwrap();
        let ctx = Context::new(d.clone(), make_constants(1.0).unwrap()).unwrap();
        let f = ScalarField::constant(0.4, 1);
        let y = ClosedSet::finite(vec![vec![0.0], vec![0.5]]).unwrap();
        let g = approx_keep_restriction_lipschitz(&f, &y, None, 0.1, &ctx).unwrap();
        for p in d.net() {
            assert!((g.field.value(&p) - 0.4).abs() < 1e-12);
        }
        assert_eq!(g.l_y, 0.0);
    }
}
