//! Problem specs: the JSON document a run is driven by.

use serde::{Deserialize, Serialize};

use super::catalog::FunctionSpec;
use crate::base::{ClosedSet, Norm, PointIndex, WorkingDomain};
use crate::engine::{GateOptions, DEFAULT_EPS_E, DEFAULT_RADII};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub domain: DomainSpec,
    #[serde(default)]
    pub set: Option<SetSpec>,
    #[serde(default)]
    pub function: Option<FunctionSpec>,
    pub mode: Mode,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Subspace,
    Convex,
    Jets,
    Separate,
    CheckE,
    Smooth,
    Audit,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Subspace => "subspace",
            Mode::Convex => "convex",
            Mode::Jets => "jets",
            Mode::Separate => "separate",
            Mode::CheckE => "check-e",
            Mode::Smooth => "smooth",
            Mode::Audit => "audit",
        }
    }

    pub fn is_extension(self) -> bool {
        matches!(self, Mode::Subspace | Mode::Convex | Mode::Jets)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub dimension: usize,
    /// Per-axis `[lo, hi]`.
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    pub net_step: f64,
    #[serde(default)]
    pub norm: Norm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SetSpec {
    Finite {
        points: Vec<Vec<f64>>,
    },
    /// Orthonormal basis; samples default to the net points on the subspace.
    Subspace {
        basis: Vec<Vec<f64>>,
        #[serde(default)]
        samples: Option<Vec<Vec<f64>>>,
    },
    Segment {
        a: Vec<f64>,
        b: Vec<f64>,
        count: usize,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// `{0} ∪ {1/k : from <= k <= to}` on the first axis.
    Harmonic {
        from: usize,
        to: usize,
    },
    /// Net points with `<normal, x> <= offset`.
    HalfSpace {
        normal: Vec<f64>,
        offset: f64,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub eps_e: Option<f64>,
    #[serde(default)]
    pub radii: Option<Vec<f64>>,
    #[serde(default)]
    pub c0: Option<f64>,
    /// Lipschitz mode of the extension theorems; on unless set to false.
    #[serde(default)]
    pub lipschitz: Option<bool>,
}

impl Tolerances {
    pub fn gate(&self) -> GateOptions {
        GateOptions {
            radii: self.radii.clone().unwrap_or_else(|| DEFAULT_RADII.to_vec()),
            eps_e: self.eps_e.unwrap_or(DEFAULT_EPS_E),
        }
    }

    pub fn lipschitz(&self) -> bool {
        self.lipschitz.unwrap_or(true)
    }
}

/// A validation failure anchored at the line of the offending block.
pub fn anchored(text: &str, key: &str, msg: impl std::fmt::Display) -> Error {
    let needle = format!("\"{key}\"");
    let line = text
        .lines()
        .position(|l| l.contains(&needle))
        .map_or(1, |i| i + 1);
    let msg = msg.to_string();
    let msg = msg.strip_prefix("invalid input: ").unwrap_or(&msg);
    Error::InvalidInput(format!("line {line}: {key}: {msg}"))
}

impl ProblemSpec {
    /// Parses and validates; errors carry the line they refer to.
    pub fn parse(text: &str) -> Result<Self> {
        let spec: ProblemSpec = serde_json::from_str(text).map_err(|e| {
            Error::InvalidInput(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        spec.validate(text)?;
        Ok(spec)
    }

    fn validate(&self, text: &str) -> Result<()> {
        let d = &self.domain;
        if d.bounds.len() != d.dimension {
            return Err(anchored(
                text,
                "box",
                format!("{} intervals for dimension {}", d.bounds.len(), d.dimension),
            ));
        }
        self.working_domain()
            .map_err(|e| anchored(text, "domain", e))?;
        let dim = d.dimension;
        let needs_set = !matches!(self.mode, Mode::Smooth);
        match &self.set {
            None if needs_set => {
                return Err(anchored(
                    text,
                    "mode",
                    format!("mode {} needs a set block", self.mode.name()),
                ))
            }
            Some(set) => set.validate(dim).map_err(|e| anchored(text, "set", e))?,
            None => {}
        }
        let needs_function = !matches!(self.mode, Mode::Separate);
        match &self.function {
            None if needs_function => {
                return Err(anchored(
                    text,
                    "mode",
                    format!("mode {} needs a function block", self.mode.name()),
                ))
            }
            Some(f) => f.validate(dim).map_err(|e| anchored(text, "function", e))?,
            None => {}
        }
        let set_matches = match (self.mode, &self.set) {
            (Mode::Subspace, Some(s)) => matches!(s, SetSpec::Subspace { .. }),
            (Mode::Convex, Some(s)) => matches!(s, SetSpec::Segment { .. } | SetSpec::Ball { .. }),
            _ => true,
        };
        if !set_matches {
            return Err(anchored(
                text,
                "set",
                format!("set kind does not fit mode {}", self.mode.name()),
            ));
        }
        let t = &self.tolerances;
        for (key, v) in [("tol", t.tol), ("eps", t.eps), ("eps_e", t.eps_e)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(anchored(text, key, format!("must be positive, got {v}")));
                }
            }
        }
        if let Some(c0) = t.c0 {
            if !(c0 >= 1.0 && c0.is_finite()) {
                return Err(anchored(text, "c0", format!("must be >= 1, got {c0}")));
            }
        }
        if let Some(r) = &t.radii {
            if r.is_empty() || r.iter().any(|v| !(*v > 0.0)) || r.windows(2).any(|w| w[1] >= w[0]) {
                return Err(anchored(
                    text,
                    "radii",
                    "must be positive and strictly decreasing",
                ));
            }
        }
        Ok(())
    }

    pub fn working_domain(&self) -> Result<WorkingDomain> {
        let d = &self.domain;
        WorkingDomain::new(
            d.bounds.iter().map(|b| b[0]).collect(),
            d.bounds.iter().map(|b| b[1]).collect(),
            d.net_step,
            d.norm,
        )
    }

    pub fn closed_set(&self, domain: &WorkingDomain) -> Result<ClosedSet> {
        self.set
            .as_ref()
            .ok_or(Error::Missing("set"))?
            .build(domain)
    }
}

fn check_point(p: &[f64], dim: usize, what: &str) -> Result<()> {
    if p.len() != dim {
        return Err(Error::InvalidInput(format!(
            "{what} has {} coordinates, expected {dim}",
            p.len()
        )));
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "{what} has a non-finite coordinate"
        )));
    }
    Ok(())
}

impl SetSpec {
    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            SetSpec::Finite { points } => {
                if points.is_empty() {
                    return Err(Error::InvalidInput("the set has no points".into()));
                }
                points
                    .iter()
                    .try_for_each(|p| check_point(p, dim, "a point"))
            }
            SetSpec::Subspace { basis, samples } => {
                if basis.is_empty() {
                    return Err(Error::InvalidInput("the subspace basis is empty".into()));
                }
                basis
                    .iter()
                    .try_for_each(|b| check_point(b, dim, "a basis vector"))?;
                if let Some(s) = samples {
                    if s.is_empty() {
                        return Err(Error::InvalidInput("the sample list is empty".into()));
                    }
                    s.iter().try_for_each(|p| check_point(p, dim, "a sample"))?;
                }
                Ok(())
            }
            SetSpec::Segment { a, b, count } => {
                check_point(a, dim, "a")?;
                check_point(b, dim, "b")?;
                if *count < 2 {
                    return Err(Error::InvalidInput(
                        "a segment needs at least 2 samples".into(),
                    ));
                }
                Ok(())
            }
            SetSpec::Ball { center, radius } => {
                check_point(center, dim, "the center")?;
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::InvalidInput(format!(
                        "radius must be positive, got {radius}"
                    )));
                }
                Ok(())
            }
            SetSpec::Harmonic { from, to } => {
                if *from < 1 || to < from {
                    return Err(Error::InvalidInput(format!(
                        "need 1 <= from <= to, got {from}..{to}"
                    )));
                }
                Ok(())
            }
            SetSpec::HalfSpace { normal, offset } => {
                check_point(normal, dim, "the normal")?;
                if !offset.is_finite() || normal.iter().all(|v| *v == 0.0) {
                    return Err(Error::InvalidInput(
                        "the half-space needs a nonzero normal and a finite offset".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn build(&self, domain: &WorkingDomain) -> Result<ClosedSet> {
        let set = match self {
            SetSpec::Finite { points } => ClosedSet::finite(points.clone())?,
            SetSpec::Subspace {
                basis,
                samples: None,
            } => ClosedSet::subspace_on_net(domain, basis.clone())?,
            SetSpec::Subspace {
                basis,
                samples: Some(s),
            } => ClosedSet::subspace(basis.clone(), s.clone())?,
            SetSpec::Segment { a, b, count } => ClosedSet::segment(a.clone(), b.clone(), *count)?,
            SetSpec::Ball { center, radius } => ClosedSet::ball(domain, center.clone(), *radius)?,
            SetSpec::Harmonic { from, to } => {
                let dim = domain.dim();
                let axis_point = |t: f64| {
                    let mut p = vec![0.0; dim];
                    p[0] = t;
                    p
                };
                let mut pts = vec![axis_point(0.0)];
                pts.extend((*from..=*to).map(|k| axis_point(1.0 / k as f64)));
                ClosedSet::finite(pts)?
            }
            SetSpec::HalfSpace { normal, offset } => {
                let pts: Vec<Vec<f64>> = domain
                    .net()
                    .into_iter()
                    .filter(|p| p.iter().zip(normal).map(|(a, b)| a * b).sum::<f64>() <= *offset)
                    .collect();
                if pts.is_empty() {
                    return Err(Error::InvalidInput(
                        "the half-space contains no net point".into(),
                    ));
                }
                ClosedSet::finite(pts)?
            }
        };
        set.validate_in(domain)?;
        Ok(set)
    }
}

/// Net indices of the samples that are net points (within 1e-12 of one).
pub fn on_net(samples: &[Vec<f64>], domain: &WorkingDomain) -> Result<Vec<(usize, usize)>> {
    let net = domain.net();
    let index = PointIndex::new(net, domain.norm)?;
    let tol = 1e-12 * (1.0 + domain.diameter());
    Ok(samples
        .iter()
        .enumerate()
        .filter_map(|(i, y)| {
            let (j, d) = index.nearest(y);
            (d <= tol).then_some((i, j))
        })
        .collect())
}
