//! One approximation pass: `G = sum psi_{n,beta} Delta^n_beta` over a
//! partition of unity subordinated to the oscillation cover of `Y` plus
//! the complement of `Y`.
//!
//! On a ball `B_gamma`, `Delta^n_gamma = T_gamma - delta_{n,gamma}` with
//! `T_gamma` the Taylor field at the center and `delta_{n,gamma}` a C1
//! approximation of `T_gamma - F` within `eps / (2^(n+2) L_{n,gamma})`
//! that keeps the Lipschitz data of `(T_gamma - F)|_{B_gamma ∩ Y}`. Off
//! `Y`, `Delta^n_0` smooths `F` itself.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cover::{oscillation_cover, JetData, OscillationCover};
use super::dual::{Measure, Restriction};
use crate::approx::{approx_keep_restriction, approx_keep_restriction_lipschitz, Context};
use crate::base::lipschitz::pairwise_max;
use crate::base::{ClosedSet, ScalarField};
use crate::covering::{
    build_partition, rudin_refine_with, ActiveMember, OpenCover, PartitionOfUnity, Region,
};
use crate::error::{Error, Result};
use crate::smoothing::smooth_continuous_approx;

/// Most refinement levels a pass may use.
pub const MAX_LEVELS: usize = 30;

/// Net points per correction used for the `(C.1)` audit.
const C1_AUDIT_POINTS: usize = 256;

/// Per sample: value gap, derivative error, ledger value and slope terms,
/// whether a complement member is active, and the active (level, owner) pairs.
type SampleAudit = (f64, f64, f64, f64, bool, Vec<(usize, usize)>);

/// `x -> f(y) + phi(x - y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaylorField {
    pub center: Vec<f64>,
    pub value: f64,
    pub covector: Vec<f64>,
}

impl TaylorField {
    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.value
            + self
                .covector
                .iter()
                .zip(x.iter().zip(&self.center))
                .map(|(a, (p, c))| a * (p - c))
                .sum::<f64>()
    }

    pub fn field(&self) -> ScalarField {
        let (t, g) = (self.clone(), self.covector.clone());
        ScalarField::new(move |x| t.value_at(x)).with_grad(move |_| g.clone())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PassOptions {
    pub eps: f64,
    /// Use the Lipschitz branches (needs `F.lip_bound`).
    pub lipschitz: bool,
    pub measure: Measure,
    pub max_levels: usize,
}

impl PassOptions {
    pub fn new(eps: f64, lipschitz: bool) -> Self {
        PassOptions {
            eps,
            lipschitz,
            measure: Measure::Restricted,
            max_levels: MAX_LEVELS,
        }
    }
}

#[derive(Clone, Debug)]
enum Piece {
    Taylor {
        gamma: usize,
        delta: ScalarField,
        target: f64,
    },
    Base(ScalarField),
}

/// Audited quantities of one pass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PassCertificates {
    pub eps: f64,
    /// `max |F(y) - f(y)|` on the samples.
    pub restriction_gap: f64,
    pub cover_size: usize,
    pub levels: usize,
    pub members: usize,
    pub oscillation_bound: f64,
    pub oscillation_worst: f64,
    pub pair_defect_worst: f64,
    /// `max |T - F - delta| / target` over audited points (`< 1`).
    pub c1_ratio: f64,
    /// `max ||delta'(y)||_*` over `y ∈ B_gamma ∩ Y`, against `eps / 8`.
    pub c2_worst: f64,
    /// `max Lip(delta|_{B_gamma ∩ Y})`, against `eps / 8`.
    pub c2_lip_worst: f64,
    /// `max |F - G|` over the net and the samples.
    pub approx_error: f64,
    /// `max ||G'(y) - D(y)||` on the samples.
    pub deriv_error: f64,
    /// Sampled `Lip((f - G)|_Y)`.
    pub jet_lip_error: f64,
    /// Sampled `Lip(G)` over net pairs.
    pub lip_sampled: f64,
    pub lip_declared: Option<f64>,
    /// `max ||G'||_*` on the net.
    pub grad_sup: f64,
    /// `max |sum psi'|` on the net.
    pub partition_gradient_sum: f64,
    /// Most members of one level active at a net point.
    pub max_active_per_level: usize,
    /// Samples where a member of the complement is active.
    pub base_active_on_y: usize,
    /// `max_y sum ||psi'(y)|| |T - f - delta|(y)`, against `eps / 4`.
    pub ledger_value_term: f64,
    /// `max_y sum psi(y) ||T' - D(y) - delta'(y)||`, against `eps / 4`.
    pub ledger_slope_term: f64,
    /// Both terms within `eps / 4` and the derivative error within their sum.
    pub ledger_holds: bool,
}

/// Result of a pass: the C1 field `G` with its construction data.
#[derive(Clone, Debug)]
pub struct SinglePass {
    pub field: ScalarField,
    pub cover: OscillationCover,
    pub taylor: Vec<TaylorField>,
    pub partition: Arc<PartitionOfUnity>,
    pub restriction: Restriction,
    pub certificates: PassCertificates,
    /// `G` and `G'` at the net points, in net order.
    pub net_values: Vec<f64>,
    pub net_gradients: Vec<Vec<f64>>,
    assembly: Arc<Assembly>,
}

#[derive(Debug)]
struct Assembly {
    partition: Arc<PartitionOfUnity>,
    taylor: Vec<TaylorField>,
    /// `pieces[n - 1][owner]`.
    pieces: Vec<Vec<Option<Piece>>>,
}

impl Assembly {
    fn piece(&self, m: &ActiveMember) -> &Piece {
        self.pieces[m.level - 1][m.owner]
            .as_ref()
            .expect("every member has a piece")
    }

    fn delta_value(&self, p: &Piece, x: &[f64]) -> f64 {
        match p {
            Piece::Taylor { gamma, delta, .. } => self.taylor[*gamma].value_at(x) - delta.value(x),
            Piece::Base(f0) => f0.value(x),
        }
    }

    fn delta_grad(&self, p: &Piece, x: &[f64]) -> Vec<f64> {
        let zero = || vec![0.0; x.len()];
        match p {
            Piece::Taylor { gamma, delta, .. } => {
                let d = delta.gradient(x).unwrap_or_else(zero);
                self.taylor[*gamma]
                    .covector
                    .iter()
                    .zip(d)
                    .map(|(a, b)| a - b)
                    .collect()
            }
            Piece::Base(f0) => f0.gradient(x).unwrap_or_else(zero),
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.partition
            .evaluate(x)
            .iter()
            .map(|m| m.value * self.delta_value(self.piece(m), x))
            .sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for m in self.partition.evaluate(x) {
            let p = self.piece(&m);
            let v = self.delta_value(p, x);
            let dg = self.delta_grad(p, x);
            for k in 0..x.len() {
                g[k] += m.grad[k] * v + m.value * dg[k];
            }
        }
        g
    }
}

/// Runs one pass for jet data `(f, D)` on `Y` with a continuous extension `F`.
pub fn single_pass(
    jet: &JetData,
    ext: &ScalarField,
    opts: PassOptions,
    ctx: &Context,
) -> Result<SinglePass> {
    let domain = &ctx.domain;
    let eps = opts.eps;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "tolerance must be positive, got {eps}"
        )));
    }
    jet.y.validate_in(domain)?;
    let l_f = if opts.lipschitz {
        Some(ext.lip_bound().ok_or(Error::Missing("lip_bound"))?)
    } else {
        if !ext.has_modulus() {
            return Err(Error::Missing("modulus"));
        }
        None
    };
    let samples = jet.samples();
    let scale = jet.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let restriction_gap = samples
        .iter()
        .zip(&jet.values)
        .map(|(p, v)| (ext.value(p) - v).abs())
        .fold(0.0, f64::max);
    if restriction_gap > 1e-9 * scale {
        return Err(Error::RestrictionMismatch(restriction_gap));
    }

    let restriction = Restriction::new(jet.y.z_basis(), domain.dim(), domain.norm, opts.measure)?;
    let cover = oscillation_cover(jet, &restriction, eps, ctx.constants.c0, domain)?;
    let taylor: Vec<TaylorField> = cover
        .centers
        .iter()
        .map(|&c| TaylorField {
            center: samples[c].clone(),
            value: jet.values[c],
            covector: restriction.extend(&jet.covectors[c]),
        })
        .collect();

    let k = cover.len();
    let margin = (2.0 * domain.net_step).min(0.25 * cover.min_radius());
    let mut regions: Vec<Region> = taylor
        .iter()
        .zip(&cover.radii)
        .map(|(t, &r)| Region::Balls(vec![(t.center.clone(), r)]))
        .collect();
    regions.push(Region::away_from(samples.to_vec(), margin, domain.norm)?);
    let mut labels: Vec<usize> = (1..=k).collect();
    labels.push(0);
    let sigma = OpenCover::new(labels, regions)?;
    let refinement = rudin_refine_with(&sigma, domain, samples, opts.max_levels)?;
    let partition = Arc::new(build_partition(
        refinement,
        ctx.oracle.as_ref(),
        ctx.constants,
    )?);

    // Pieces for every member.
    let shared_base = if opts.lipschitz {
        None
    } else {
        Some(smooth_continuous_approx(ext, eps / 2.0, domain)?)
    };
    let members = partition.members();
    let built: Vec<((usize, usize), Piece)> = members
        .par_iter()
        .map(|&(n, r)| {
            let l_n = ctx.constants.partition_lip(n).max(1.0);
            let target = eps / (2f64.powi(n as i32 + 2) * l_n);
            let piece = if r == k {
                match &shared_base {
                    Some(f0) => Piece::Base(f0.clone()),
                    None => Piece::Base(ctx.oracle.smooth(ext, target)?),
                }
            } else {
                let residual =
                    taylor_minus(&taylor[r], ext, domain.norm.dual_of(&taylor[r].covector));
                let ball = ClosedSet::finite(
                    cover.members[r]
                        .iter()
                        .map(|&i| samples[i].clone())
                        .collect(),
                )?;
                let a = if opts.lipschitz {
                    approx_keep_restriction_lipschitz(&residual, &ball, None, target, ctx)?
                } else {
                    approx_keep_restriction(&residual, &ball, None, target, ctx)?
                };
                Piece::Taylor {
                    gamma: r,
                    delta: a.field,
                    target,
                }
            };
            Ok(((n, r), piece))
        })
        .collect::<Result<_>>()?;
    let mut pieces: Vec<Vec<Option<Piece>>> = vec![vec![None; k + 1]; partition.n_levels()];
    for ((n, r), p) in built {
        pieces[n - 1][r] = Some(p);
    }
    let assembly = Arc::new(Assembly {
        partition: partition.clone(),
        taylor: taylor.clone(),
        pieces,
    });

    let m_hat = taylor
        .iter()
        .map(|t| domain.norm.dual_of(&t.covector))
        .fold(0.0, f64::max);
    let lip_declared =
        l_f.map(|l| eps / 4.0 + (1.0 + ctx.constants.c1) * m_hat + ctx.constants.c1 * l);
    let (a1, a2) = (assembly.clone(), assembly.clone());
    let mut field = ScalarField::new(move |x| a1.value(x)).with_grad(move |x| a2.gradient(x));
    if let Some(l) = lip_declared {
        field = field.with_lip(l);
    }

    let mut pass = SinglePass {
        field,
        cover,
        taylor,
        partition,
        restriction,
        certificates: PassCertificates {
            eps,
            restriction_gap,
            cover_size: k,
            levels: 0,
            members: members.len(),
            oscillation_bound: 0.0,
            oscillation_worst: 0.0,
            pair_defect_worst: 0.0,
            c1_ratio: 0.0,
            c2_worst: 0.0,
            c2_lip_worst: 0.0,
            approx_error: 0.0,
            deriv_error: 0.0,
            jet_lip_error: 0.0,
            lip_sampled: 0.0,
            lip_declared,
            grad_sup: 0.0,
            partition_gradient_sum: 0.0,
            max_active_per_level: 0,
            base_active_on_y: 0,
            ledger_value_term: 0.0,
            ledger_slope_term: 0.0,
            ledger_holds: false,
        },
        net_values: Vec::new(),
        net_gradients: Vec::new(),
        assembly,
    };
    pass.certify(jet, ext, ctx);
    Ok(pass)
}

/// `T - F` with its Lipschitz bound or modulus.
fn taylor_minus(t: &TaylorField, ext: &ScalarField, slope: f64) -> ScalarField {
    let (t1, f1) = (t.clone(), ext.clone());
    let field = ScalarField::new(move |x| t1.value_at(x) - f1.value(x));
    match ext.lip_bound() {
        Some(l) => field.with_lip(slope + l),
        None => {
            let f2 = ext.clone();
            field.with_modulus(move |r| f2.modulus(r).unwrap_or(f64::INFINITY) + slope * r)
        }
    }
}

impl SinglePass {
    /// Members active at `x` with their values and gradients.
    pub fn active(&self, x: &[f64]) -> Vec<ActiveMember> {
        self.partition.evaluate(x)
    }

    /// `(G(x), G'(x))` from one partition evaluation.
    pub fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let a = &self.assembly;
        let mut v = 0.0;
        let mut g = vec![0.0; x.len()];
        for m in a.partition.evaluate(x) {
            let p = a.piece(&m);
            let dv = a.delta_value(p, x);
            let dg = a.delta_grad(p, x);
            v += m.value * dv;
            for k in 0..x.len() {
                g[k] += m.grad[k] * dv + m.value * dg[k];
            }
        }
        (v, g)
    }

    fn certify(&mut self, jet: &JetData, ext: &ScalarField, ctx: &Context) {
        let domain = &ctx.domain;
        let norm = domain.norm;
        let eps = self.certificates.eps;
        let samples = jet.samples();
        let a = &self.assembly;

        // Net: values, gradients, partition checks.
        let net = domain.net();
        let net_eval: Vec<(f64, Vec<f64>, f64, usize)> = net
            .par_iter()
            .map(|x| {
                let (v, g) = self.value_and_gradient(x);
                let act = self.active(x);
                let mut psum = vec![0.0; x.len()];
                let mut per_level = vec![0usize; self.partition.n_levels() + 1];
                for m in &act {
                    per_level[m.level] += 1;
                    for (s, d) in psum.iter_mut().zip(&m.grad) {
                        *s += d;
                    }
                }
                (
                    v,
                    g,
                    norm.dual_of(&psum),
                    *per_level.iter().max().unwrap_or(&0),
                )
            })
            .collect();
        let net_values: Vec<f64> = net_eval.iter().map(|e| e.0).collect();
        let net_gap = net
            .par_iter()
            .zip(&net_values)
            .map(|(x, v)| (ext.value(x) - v).abs())
            .reduce(|| 0.0, f64::max);
        let grad_sup = net_eval
            .iter()
            .map(|e| norm.dual_of(&e.1))
            .fold(0.0, f64::max);
        let partition_gradient_sum = net_eval.iter().map(|e| e.2).fold(0.0, f64::max);
        let max_active_per_level = net_eval.iter().map(|e| e.3).max().unwrap_or(0);
        let lip_sampled = pairwise_max(&net, &net_values, norm);

        // Samples: derivative error and the error ledger.
        let per_sample: Vec<SampleAudit> = samples
            .par_iter()
            .zip(jet.values.par_iter().zip(&jet.covectors))
            .map(|(y, (fy, dy))| {
                let mut v = 0.0;
                let mut g = vec![0.0; y.len()];
                let (mut value_term, mut slope_term, mut base) = (0.0, 0.0, false);
                let mut owners = Vec::new();
                for m in self.active(y) {
                    owners.push((m.level, m.owner));
                    let p = a.piece(&m);
                    let dv = a.delta_value(p, y);
                    let dg = a.delta_grad(p, y);
                    v += m.value * dv;
                    for i in 0..y.len() {
                        g[i] += m.grad[i] * dv + m.value * dg[i];
                    }
                    if let Piece::Base(_) = p {
                        base = true;
                    }
                    value_term += norm.dual_of(&m.grad) * (dv - fy).abs();
                    let slope: Vec<f64> = dg.iter().zip(dy).map(|(a, b)| a - b).collect();
                    slope_term += m.value * self.restriction.norm_of(&slope);
                }
                let err: Vec<f64> = g.iter().zip(dy).map(|(a, b)| a - b).collect();
                (
                    (ext.value(y) - v).abs(),
                    self.restriction.norm_of(&err),
                    value_term,
                    slope_term,
                    base,
                    owners,
                )
            })
            .collect();
        let sample_gap = per_sample.iter().map(|s| s.0).fold(0.0, f64::max);
        let deriv_error = per_sample.iter().map(|s| s.1).fold(0.0, f64::max);
        let ledger_value_term = per_sample.iter().map(|s| s.2).fold(0.0, f64::max);
        let ledger_slope_term = per_sample.iter().map(|s| s.3).fold(0.0, f64::max);
        let base_active_on_y = per_sample.iter().filter(|s| s.4).count();
        let tol = 1e-9 * (1.0 + eps);
        let ledger_holds = ledger_value_term <= eps / 4.0 + tol
            && ledger_slope_term <= eps / 4.0 + tol
            && per_sample
                .iter()
                .all(|s| s.1 <= s.2 + s.3 + 1e-7 * (1.0 + s.2 + s.3));
        let residual: Vec<f64> = samples
            .par_iter()
            .zip(&jet.values)
            .map(|(y, fy)| fy - self.field.value(y))
            .collect();
        let jet_lip_error = pairwise_max(samples, &residual, norm);

        // Corrections: (C.1) near their ball, (C.2) and its Lipschitz form on B ∩ Y.
        let mut active_on: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (i, s) in per_sample.iter().enumerate() {
            for &key in &s.5 {
                active_on.entry(key).or_default().push(i);
            }
        }
        let mut jobs = Vec::new();
        for (lv, row) in a.pieces.iter().enumerate() {
            for p in row.iter().flatten() {
                if let Piece::Taylor {
                    gamma,
                    delta,
                    target,
                } = p
                {
                    jobs.push((lv + 1, *gamma, delta.clone(), *target));
                }
            }
        }
        let corr: Vec<(f64, f64, f64)> = jobs
            .par_iter()
            .map(|(lv, gamma, delta, target)| {
                let t = &a.taylor[*gamma];
                let r = self.cover.radii[*gamma];
                let near: Vec<&Vec<f64>> =
                    net.iter().filter(|x| norm.dist(x, &t.center) < r).collect();
                let stride = (near.len() / C1_AUDIT_POINTS).max(1);
                // Ball samples where the member is active, plus a strided subset of the rest.
                let members = &self.cover.members[*gamma];
                let mut ids: Vec<usize> =
                    active_on.get(&(*lv, *gamma)).cloned().unwrap_or_default();
                ids.extend(
                    members
                        .iter()
                        .step_by((members.len() / C1_AUDIT_POINTS).max(1)),
                );
                ids.sort_unstable();
                ids.dedup();
                let pts: Vec<Vec<f64>> = ids.iter().map(|&i| samples[i].clone()).collect();
                let vals: Vec<f64> = pts.iter().map(|p| delta.value(p)).collect();
                let gap = |x: &[f64], d: f64| (t.value_at(x) - ext.value(x) - d).abs() / target;
                let ratio = near
                    .iter()
                    .step_by(stride)
                    .map(|x| gap(x, delta.value(x)))
                    .chain(pts.iter().zip(&vals).map(|(y, &d)| gap(y, d)))
                    .fold(0.0, f64::max);
                let c2 = pts
                    .iter()
                    .map(|y| norm.dual_of(&delta.gradient(y).unwrap_or_else(|| vec![0.0; y.len()])))
                    .fold(0.0, f64::max);
                (ratio, c2, pairwise_max(&pts, &vals, norm))
            })
            .collect();

        self.certificates = PassCertificates {
            eps,
            restriction_gap: self.certificates.restriction_gap,
            cover_size: self.cover.len(),
            levels: self.partition.n_levels(),
            members: self.certificates.members,
            oscillation_bound: self.cover.bound,
            oscillation_worst: self.cover.worst_oscillation(),
            pair_defect_worst: self.cover.worst_pair_defect(),
            c1_ratio: corr.iter().map(|c| c.0).fold(0.0, f64::max),
            c2_worst: corr.iter().map(|c| c.1).fold(0.0, f64::max),
            c2_lip_worst: corr.iter().map(|c| c.2).fold(0.0, f64::max),
            approx_error: net_gap.max(sample_gap),
            deriv_error,
            jet_lip_error,
            lip_sampled,
            lip_declared: self.certificates.lip_declared,
            grad_sup,
            partition_gradient_sum,
            max_active_per_level,
            base_active_on_y,
            ledger_value_term,
            ledger_slope_term,
            ledger_holds,
        };
        self.net_values = net_values;
        self.net_gradients = net_eval.into_iter().map(|e| e.1).collect();
    }
}
