//! C1 extensions as series `H = sum G_n`: each stage approximates a
//! capped McShane extension of the current residual with derivative
//! control on `Y`, at geometrically shrinking tolerances.

pub mod separate;
pub mod whitney;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use separate::{
    separating_function, separating_function_with, SeparatingFunction, SeparationCertificates,
    SEPARATION_RAMP,
};
pub use whitney::{
    check_condition_e, ConditionE, GateOptions, OscillationProfile, DEFAULT_EPS_E, DEFAULT_RADII,
};

use crate::approx::Context;
use crate::base::lipschitz::pairwise_max;
use crate::base::{central_difference, ClosedSet, McShane, ScalarField, SetKind};
use crate::error::{Error, Result};
use crate::taylor::{
    single_pass, JetData, Measure, PassCertificates, PassOptions, Restriction, SinglePass,
};

/// Step of the central differences used by the gradient realism audit.
pub const FD_STEP: f64 = 1e-10;

/// Stage cap when the residual never reaches the tolerance.
pub const MAX_STAGES: usize = 60;

/// Which theorem's schedule and bounds apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Theorem {
    Subspace,
    Convex,
    Jets,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtendOptions {
    /// Target agreement on `Y`; default `1e-6 (1 + sup |f|)`.
    pub tol: Option<f64>,
    /// Series parameter; default `min(1, L)/2` (`0.4 min(1, L)` for jets)
    /// with `L = max(Lip f, max ||D||)`.
    pub eps: Option<f64>,
    pub lipschitz: bool,
    pub max_stages: usize,
    /// Refinement levels allowed per pass.
    pub max_levels: usize,
}

impl ExtendOptions {
    pub fn new(lipschitz: bool) -> Self {
        ExtendOptions {
            tol: None,
            eps: None,
            lipschitz,
            max_stages: MAX_STAGES,
            max_levels: crate::taylor::MAX_LEVELS,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = Some(tol);
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = Some(eps);
        self
    }
}

/// Ledger entry of one stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub n: usize,
    /// Tolerance handed to the single pass.
    pub pass_eps: f64,
    /// Sup and Lipschitz constant of the residual that was extended.
    pub residual_sup: f64,
    pub residual_lip: f64,
    /// `max |G_n|` over the net and the samples.
    pub bound: f64,
    /// `eps / 2^(n-2)` for `n >= 2`.
    pub bound_claim: Option<f64>,
    /// Sampled `Lip(G_n)` over net pairs.
    pub lip_sampled: f64,
    /// `eps / 2^(n-1)` (subspace, convex) or `eps / 2^(n+2) + eps / 2^(n-2)` (jets), for `n >= 2`.
    pub lip_claim: Option<f64>,
    /// `max |f - sum_{i<=n} G_i|` and `max ||D - sum_{i<=n} G_i'||` on the samples.
    pub residual_after: f64,
    pub deriv_residual_after: f64,
    pub pass: PassCertificates,
}

impl StageRecord {
    pub fn decay_holds(&self) -> bool {
        let slack = 1e-9;
        self.bound_claim.is_none_or(|c| self.bound <= c + slack)
            && self.lip_claim.is_none_or(|c| self.lip_sampled <= c + slack)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtensionCertificates {
    pub tol: f64,
    /// `max |H - f|` on the samples, from fresh evaluations of `H`.
    pub agreement: f64,
    /// Residual after the last stage, from the stage ledger.
    pub residual_bound: f64,
    pub agreement_holds: bool,
    /// `max ||H' - D||` on the samples (measure of the theorem).
    pub gradient_error: f64,
    /// Largest gap between `H'` and central differences at interior net points.
    pub fd_gap: f64,
    pub fd_tolerance: f64,
    pub fd_holds: bool,
    pub lip_sampled: f64,
    pub lip_bound: Option<f64>,
    pub lip_holds: bool,
    pub decay_holds: bool,
}

impl ExtensionCertificates {
    pub fn passed(&self) -> bool {
        self.agreement_holds && self.fd_holds && self.lip_holds && self.decay_holds
    }
}

#[derive(Clone, Debug)]
pub struct ExtensionResult {
    pub theorem: Theorem,
    pub field: ScalarField,
    pub depth: usize,
    pub eps: f64,
    /// Lipschitz constant of `f` on the samples and `max ||D||`.
    pub lip_f: f64,
    pub m: f64,
    pub stages: Vec<StageRecord>,
    pub certificates: ExtensionCertificates,
    /// `H` and `H'` at the net points, in net order.
    pub net_values: Vec<f64>,
    pub net_gradients: Vec<Vec<f64>>,
}

/// Extension from a linear subspace; `f` must carry its gradient.
pub fn extend_from_subspace(
    f: &ScalarField,
    y: &ClosedSet,
    opts: ExtendOptions,
    ctx: &Context,
) -> Result<ExtensionResult> {
    if !matches!(y.kind(), SetKind::Subspace { .. }) {
        return Err(Error::InvalidInput("Y must be a subspace".into()));
    }
    let jet = JetData::from_field(f, y)?;
    audit_gradient_along(f, y, &jet)?;
    iterate(&jet, Theorem::Subspace, opts, ctx)
}

/// Extension of `f|_Y` from a closed convex set; `f` is defined on a
/// neighbourhood of `Y` with its gradient.
pub fn extend_from_convex_set(
    f: &ScalarField,
    y: &ClosedSet,
    opts: ExtendOptions,
    ctx: &Context,
) -> Result<ExtensionResult> {
    if !matches!(y.kind(), SetKind::Convex { .. }) {
        return Err(Error::InvalidInput("Y must be a convex set".into()));
    }
    y.check_convexity(1e-9 * (1.0 + ctx.domain.diameter()))?;
    let jet = JetData::from_field(f, y)?;
    audit_gradient_along(f, y, &jet)?;
    iterate(&jet, Theorem::Convex, opts, ctx)
}

/// Outcome of the jet extension: either the gate rejects the data or the
/// series is built.
#[derive(Clone, Debug)]
pub enum JetExtension {
    Extended {
        gate: ConditionE,
        result: Box<ExtensionResult>,
    },
    GateFailed(ConditionE),
}

/// Extension of jet data satisfying the condition-(E) gate.
pub fn extend_from_jets(
    jet: &JetData,
    gate: &GateOptions,
    opts: ExtendOptions,
    ctx: &Context,
) -> Result<JetExtension> {
    let verdict = check_condition_e(jet, gate, ctx.domain.norm)?;
    if !verdict.consistent {
        return Ok(JetExtension::GateFailed(verdict));
    }
    let result = iterate(jet, Theorem::Jets, opts, ctx)?;
    Ok(JetExtension::Extended {
        gate: verdict,
        result: Box::new(result),
    })
}

/// The gradient of `f` must match central differences along `Z` at the samples.
fn audit_gradient_along(f: &ScalarField, y: &ClosedSet, jet: &JetData) -> Result<()> {
    let basis = y.z_basis();
    for (p, g) in y.samples().iter().zip(&jet.covectors) {
        for b in &basis {
            let step = 1e-6;
            let plus: Vec<f64> = p.iter().zip(b).map(|(x, v)| x + step * v).collect();
            let minus: Vec<f64> = p.iter().zip(b).map(|(x, v)| x - step * v).collect();
            let fd = (f.value(&plus) - f.value(&minus)) / (2.0 * step);
            let an: f64 = g.iter().zip(b).map(|(a, v)| a * v).sum();
            if (fd - an).abs() > 1e-4 * (1.0 + an.abs()) {
                return Err(Error::InvalidInput(format!(
                    "gradient of f disagrees with finite differences at {p:?}: {an} vs {fd}"
                )));
            }
        }
    }
    Ok(())
}

struct Stage {
    pass: SinglePass,
    sample_grads: Vec<Vec<f64>>,
}

/// Tolerances and bounds of a series run, resolved from the data and the options.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesParameters {
    pub tol: f64,
    pub eps: f64,
    /// Lipschitz constant of `f` on the samples and `max ||D||` (declared or sampled).
    pub lip_f: f64,
    pub m: f64,
    /// `max(lip_f, sampled max ||D||)`; zero for constant data.
    pub scale: f64,
    pub lip_bound: Option<f64>,
    /// Stage `n` runs its pass at `eps / (2^n factor)`.
    pub factor: f64,
}

impl SeriesParameters {
    pub fn pass_eps(&self, n: usize) -> f64 {
        self.eps / (2f64.powi(n as i32) * self.factor)
    }
}

impl Theorem {
    /// Norm in which derivatives on `Y` are measured.
    pub fn measure(self, lipschitz: bool) -> Measure {
        match self {
            Theorem::Convex if !lipschitz => Measure::Ambient,
            _ => Measure::Restricted,
        }
    }
}

pub fn series_parameters(
    jet: &JetData,
    theorem: Theorem,
    opts: &ExtendOptions,
    ctx: &Context,
) -> Result<SeriesParameters> {
    let norm = ctx.domain.norm;
    let consts = ctx.constants;
    let restriction = Restriction::new(
        jet.y.z_basis(),
        ctx.domain.dim(),
        norm,
        theorem.measure(opts.lipschitz),
    )?;
    let sup_f = jet.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = opts.tol.unwrap_or(1e-6 * (1.0 + sup_f));
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "tol must be positive, got {tol}"
        )));
    }
    let lip_f = pairwise_max(jet.samples(), &jet.values, norm);
    let m_sampled = jet.max_covector(&restriction);
    if let Some(m) = jet.m {
        if m_sampled > m * (1.0 + 1e-12) {
            return Err(Error::LipschitzAudit {
                sampled: m_sampled,
                declared: m,
            });
        }
    }
    let m = jet.m.unwrap_or(m_sampled);
    let scale = lip_f.max(m_sampled);
    let jets = theorem == Theorem::Jets;
    let lip_bound = opts.lipschitz.then_some(match theorem {
        Theorem::Jets => (1.0 + consts.c1) * (m + lip_f),
        _ => consts.c3 * lip_f,
    });
    let eps = match opts.eps {
        Some(e) => {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "eps must be positive, got {e}"
                )));
            }
            if opts.lipschitz && scale > 0.0 {
                let cap = if jets { 4.0 / 9.0 * scale } else { scale };
                if e >= cap {
                    return Err(Error::InvalidInput(format!(
                        "Lipschitz mode needs 0 < eps < {cap}, got {e}"
                    )));
                }
            }
            e
        }
        None if !opts.lipschitz => 2.0 * scale,
        None if jets => 0.4 * scale.min(1.0),
        None => 0.5 * scale.min(1.0),
    };
    Ok(SeriesParameters {
        tol,
        eps,
        lip_f,
        m,
        scale,
        lip_bound,
        factor: if jets { 1.0 + consts.c1 } else { consts.c2 },
    })
}

fn iterate(
    jet: &JetData,
    theorem: Theorem,
    opts: ExtendOptions,
    ctx: &Context,
) -> Result<ExtensionResult> {
    let domain = &ctx.domain;
    let norm = domain.norm;
    let samples = jet.samples();
    let measure = theorem.measure(opts.lipschitz);
    let restriction = Restriction::new(jet.y.z_basis(), domain.dim(), norm, measure)?;
    let params = series_parameters(jet, theorem, &opts, ctx)?;
    let SeriesParameters {
        tol,
        eps,
        lip_f,
        m,
        scale,
        lip_bound,
        ..
    } = params;
    let jets = theorem == Theorem::Jets;

    let mut stages: Vec<Stage> = Vec::new();
    let mut records = Vec::new();
    let mut residual = jet.values.clone();
    let mut deriv = jet.covectors.clone();
    if scale > 0.0 {
        for n in 1..=opts.max_stages {
            let residual_sup = residual.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if n > 1 && residual_sup <= tol {
                break;
            }
            let residual_lip = pairwise_max(samples, &residual, norm);
            let cap = (n > 1).then_some(residual_sup);
            let ext = McShane::new(samples.to_vec(), residual.clone(), residual_lip, cap, norm)?
                .into_field();
            let pass_eps = params.pass_eps(n);
            let stage_jet = JetData::new(jet.y.clone(), residual.clone(), deriv.clone(), None)?;
            let pass_opts = PassOptions {
                eps: pass_eps,
                lipschitz: opts.lipschitz,
                measure,
                max_levels: opts.max_levels,
            };
            let pass = single_pass(&stage_jet, &ext, pass_opts, ctx)?;
            let c = &pass.certificates;
            let failed = !(c.approx_error < pass_eps && c.deriv_error < pass_eps)
                || (jets && c.jet_lip_error >= pass_eps);
            if failed {
                return Err(Error::StageFailed {
                    stage: n,
                    detail: serde_json::to_string(&records).unwrap_or_default()
                        + &format!(
                            "; stage {n}: approx {} deriv {} jet-lip {} against {pass_eps}",
                            c.approx_error, c.deriv_error, c.jet_lip_error
                        ),
                });
            }
            let tab: Vec<(f64, Vec<f64>)> = samples
                .par_iter()
                .map(|y| pass.value_and_gradient(y))
                .collect();
            for (i, (v, g)) in tab.iter().enumerate() {
                residual[i] -= v;
                for (d, gk) in deriv[i].iter_mut().zip(g) {
                    *d -= gk;
                }
            }
            let bound = pass
                .net_values
                .iter()
                .chain(tab.iter().map(|t| &t.0))
                .fold(0.0f64, |a, v| a.max(v.abs()));
            let claims = n >= 2;
            let p2 = |k: i32| eps * 0.5f64.powi(k);
            records.push(StageRecord {
                n,
                pass_eps,
                residual_sup,
                residual_lip,
                bound,
                bound_claim: claims.then(|| p2(n as i32 - 2)),
                lip_sampled: pass.certificates.lip_sampled,
                lip_claim: claims.then(|| {
                    if jets {
                        p2(n as i32 + 2) + p2(n as i32 - 2)
                    } else {
                        p2(n as i32 - 1)
                    }
                }),
                residual_after: residual.iter().fold(0.0f64, |a, v| a.max(v.abs())),
                deriv_residual_after: deriv
                    .iter()
                    .map(|d| restriction.norm_of(d))
                    .fold(0.0, f64::max),
                pass: pass.certificates.clone(),
            });
            stages.push(Stage {
                pass,
                sample_grads: tab.into_iter().map(|t| t.1).collect(),
            });
        }
        let last = residual.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if last > tol {
            return Err(Error::StageFailed {
                stage: opts.max_stages,
                detail: format!("residual {last} still above tol {tol}"),
            });
        }
    }

    // H = c + sum G_n, with c the common value when the data is constant.
    let offset = if scale == 0.0 { jet.values[0] } else { 0.0 };
    let passes: Arc<Vec<SinglePass>> = Arc::new(stages.iter().map(|s| s.pass.clone()).collect());
    let (p1, p2) = (passes.clone(), passes.clone());
    let mut field =
        ScalarField::new(move |x| offset + p1.iter().map(|p| p.field.value(x)).sum::<f64>())
            .with_grad(move |x| {
                let mut g = vec![0.0; x.len()];
                for p in p2.iter() {
                    for (a, b) in g.iter_mut().zip(p.value_and_gradient(x).1) {
                        *a += b;
                    }
                }
                g
            });
    if let Some(l) = lip_bound {
        field = field.with_lip(l);
    }

    let net = domain.net();
    let mut net_values = vec![offset; net.len()];
    let mut net_gradients = vec![vec![0.0; domain.dim()]; net.len()];
    for s in &stages {
        for (i, (v, g)) in s
            .pass
            .net_values
            .iter()
            .zip(&s.pass.net_gradients)
            .enumerate()
        {
            net_values[i] += v;
            for (a, b) in net_gradients[i].iter_mut().zip(g) {
                *a += b;
            }
        }
    }
    let agreement = samples
        .par_iter()
        .zip(&jet.values)
        .map(|(y, v)| (field.value(y) - v).abs())
        .reduce(|| 0.0, f64::max);
    let mut tab_grad = vec![vec![0.0; domain.dim()]; samples.len()];
    for s in &stages {
        for (a, g) in tab_grad.iter_mut().zip(&s.sample_grads) {
            for (x, y) in a.iter_mut().zip(g) {
                *x += y;
            }
        }
    }
    let gradient_error = tab_grad
        .iter()
        .zip(&jet.covectors)
        .map(|(g, d)| {
            restriction.norm_of(&g.iter().zip(d).map(|(a, b)| a - b).collect::<Vec<f64>>())
        })
        .fold(0.0, f64::max);
    let fd_tolerance = 1e-4 * (1.0 + lip_f);
    let interior = domain.interior_net();
    let fd_gap = interior
        .par_iter()
        .map(|x| {
            let fd = central_difference(&|p| field.value(p), x, FD_STEP);
            let an = field.gradient(x).unwrap_or_else(|| vec![0.0; x.len()]);
            fd.iter()
                .zip(&an)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    let lip_sampled = pairwise_max(&net, &net_values, norm);
    let residual_bound = records.last().map_or(0.0, |r| r.residual_after);
    let certificates = ExtensionCertificates {
        tol,
        agreement,
        residual_bound,
        agreement_holds: agreement <= tol && residual_bound <= tol,
        gradient_error,
        fd_gap,
        fd_tolerance,
        fd_holds: fd_gap <= fd_tolerance,
        lip_sampled,
        lip_bound,
        lip_holds: lip_bound.is_none_or(|l| lip_sampled <= l),
        decay_holds: records.iter().all(StageRecord::decay_holds),
    };
    Ok(ExtensionResult {
        theorem,
        field,
        depth: records.len(),
        eps,
        lip_f,
        m,
        stages: records,
        certificates,
        net_values,
        net_gradients,
    })
}
