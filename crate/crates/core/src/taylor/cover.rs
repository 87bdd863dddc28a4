//! Jet data on the samples of `Y` and the oscillation cover of `Y`.

use serde::{Deserialize, Serialize};

use super::dual::Restriction;
use crate::base::{ClosedSet, ScalarField, WorkingDomain};
use crate::error::{Error, Result};

/// Values `f(y)` and covectors `D(y)` on the samples of `Y`.
#[derive(Clone, Debug)]
pub struct JetData {
    pub y: ClosedSet,
    pub values: Vec<f64>,
    pub covectors: Vec<Vec<f64>>,
    /// Declared bound on `||D||` (Lipschitz mode).
    pub m: Option<f64>,
}

impl JetData {
    pub fn new(
        y: ClosedSet,
        values: Vec<f64>,
        covectors: Vec<Vec<f64>>,
        m: Option<f64>,
    ) -> Result<Self> {
        let n = y.samples().len();
        if values.len() != n || covectors.len() != n {
            return Err(Error::InvalidInput(format!(
                "{n} samples but {} values and {} covectors",
                values.len(),
                covectors.len()
            )));
        }
        let dim = y.dim();
        if covectors
            .iter()
            .any(|c| c.len() != dim || c.iter().any(|v| !v.is_finite()))
            || values.iter().any(|v| !v.is_finite())
        {
            return Err(Error::InvalidInput(
                "jet data must be finite and match the dimension".into(),
            ));
        }
        if let Some(m) = m {
            if !(m >= 0.0 && m.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "derivative bound must be finite and >= 0, got {m}"
                )));
            }
        }
        Ok(JetData {
            y,
            values,
            covectors,
            m,
        })
    }

    /// Values and gradients of a C1 field on the samples.
    pub fn from_field(f: &ScalarField, y: &ClosedSet) -> Result<Self> {
        let mut covectors = Vec::with_capacity(y.samples().len());
        for p in y.samples() {
            covectors.push(f.gradient(p).ok_or(Error::Missing("gradient"))?);
        }
        let values = y.samples().iter().map(|p| f.value(p)).collect();
        JetData::new(y.clone(), values, covectors, None)
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        self.y.samples()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `max_y ||D(y)||`.
    pub fn max_covector(&self, r: &Restriction) -> f64 {
        self.covectors
            .iter()
            .map(|c| r.norm_of(c))
            .fold(0.0, f64::max)
    }

    /// Largest `||D(y) - D(y')||` between a sample and its nearest other sample.
    pub fn neighbour_oscillation(&self, r: &Restriction, domain: &WorkingDomain) -> f64 {
        let pts = self.samples();
        let mut worst = 0.0f64;
        for i in 0..pts.len() {
            let near = (0..pts.len()).filter(|&j| j != i).min_by(|&a, &b| {
                domain
                    .norm
                    .dist(&pts[i], &pts[a])
                    .total_cmp(&domain.norm.dist(&pts[i], &pts[b]))
            });
            if let Some(j) = near {
                let diff: Vec<f64> = self.covectors[i]
                    .iter()
                    .zip(&self.covectors[j])
                    .map(|(a, b)| a - b)
                    .collect();
                worst = worst.max(r.norm_of(&diff));
            }
        }
        worst
    }
}

/// Balls `B(y_gamma, r_gamma)` centered at samples, covering all samples,
/// on which `||D(y) - D(y_gamma)|| < bound` and
/// `|f(z) - f(w) - D(y_gamma)(z - w)| <= bound ||z - w||`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OscillationCover {
    /// Sample index of each center.
    pub centers: Vec<usize>,
    pub radii: Vec<f64>,
    /// Samples inside each ball.
    pub members: Vec<Vec<usize>>,
    /// Sampled `max ||D(y) - D(y_gamma)||` per ball.
    pub oscillation: Vec<f64>,
    /// Sampled `max |f(z) - f(w) - D(y_gamma)(z - w)| / ||z - w||` per ball.
    pub pair_defect: Vec<f64>,
    pub bound: f64,
}

impl OscillationCover {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn worst_oscillation(&self) -> f64 {
        self.oscillation.iter().copied().fold(0.0, f64::max)
    }

    pub fn worst_pair_defect(&self) -> f64 {
        self.pair_defect.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_radius(&self) -> f64 {
        self.radii.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Greedy cover with bound `eps / (8 c0)`: the lowest uncovered sample
/// becomes a center; its radius is the midpoint between the last accepted
/// and the first rejected sample distance; samples within half the
/// radius count as covered.
pub fn oscillation_cover(
    jet: &JetData,
    r: &Restriction,
    eps: f64,
    c0: f64,
    domain: &WorkingDomain,
) -> Result<OscillationCover> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "tolerance must be positive, got {eps}"
        )));
    }
    let bound = eps / (8.0 * c0);
    let pts = jet.samples();
    let norm = domain.norm;
    let far = domain.diameter() + domain.net_step;
    let mut covered = vec![false; pts.len()];
    let mut out = OscillationCover {
        centers: Vec::new(),
        radii: Vec::new(),
        members: Vec::new(),
        oscillation: Vec::new(),
        pair_defect: Vec::new(),
        bound,
    };
    while let Some(c) = covered.iter().position(|v| !v) {
        let dc = &jet.covectors[c];
        let mut order: Vec<(f64, usize)> = (0..pts.len())
            .map(|j| (norm.dist(&pts[c], &pts[j]), j))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut accepted: Vec<usize> = Vec::new();
        let (mut osc, mut defect) = (0.0f64, 0.0f64);
        let (mut last_ok, mut radius) = (0.0, None);
        let mut k = 0;
        while k < order.len() {
            let d = order[k].0;
            let group: Vec<usize> = order[k..]
                .iter()
                .take_while(|o| o.0 == d)
                .map(|o| o.1)
                .collect();
            k += group.len();
            let (mut g_osc, mut g_def, mut ok) = (osc, defect, true);
            for (gi, &s) in group.iter().enumerate() {
                let diff: Vec<f64> = jet.covectors[s]
                    .iter()
                    .zip(dc)
                    .map(|(a, b)| a - b)
                    .collect();
                let o = r.norm_of(&diff);
                g_osc = g_osc.max(o);
                ok &= o < bound;
                for &w in accepted.iter().chain(&group[..gi]) {
                    let dist = norm.dist(&pts[s], &pts[w]);
                    let jump = jet.values[s] - jet.values[w];
                    let lin: f64 = dc
                        .iter()
                        .zip(pts[s].iter().zip(&pts[w]))
                        .map(|(a, (x, y))| a * (x - y))
                        .sum();
                    if dist == 0.0 {
                        if jump != 0.0 || o != 0.0 {
                            return Err(Error::OscillationUnbounded(c));
                        }
                        continue;
                    }
                    let q = (jump - lin).abs() / dist;
                    g_def = g_def.max(q);
                    ok &= q <= bound;
                }
                if !ok {
                    break;
                }
            }
            if !ok {
                if d == 0.0 {
                    return Err(Error::OscillationUnbounded(c));
                }
                radius = Some(0.5 * (last_ok + d));
                break;
            }
            accepted.extend(group);
            osc = g_osc;
            defect = g_def;
            last_ok = d;
        }
        let radius = radius.unwrap_or(far);
        for &(d, j) in &order {
            if d >= 0.5 * radius {
                break;
            }
            covered[j] = true;
        }
        accepted.sort_unstable();
        out.centers.push(c);
        out.radii.push(radius);
        out.members.push(accepted);
        out.oscillation.push(osc);
        out.pair_defect.push(defect);
    }
    Ok(out)
}
