//! Condition (E) on finite jet data: per-center oscillation profiles of
//! the normalized Taylor defect `|f(z) - f(w) - D(y)(z - w)| / ||z - w||`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::base::{Norm, PointIndex};
use crate::error::{Error, Result};
use crate::taylor::JetData;

/// Radii used when none are configured.
pub const DEFAULT_RADII: [f64; 6] = [0.5, 0.25, 0.1, 0.05, 0.04, 0.03];

/// Threshold on the smallest-radius profile value used when none is configured.
pub const DEFAULT_EPS_E: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateOptions {
    /// Positive and strictly decreasing.
    pub radii: Vec<f64>,
    pub eps_e: f64,
}

impl Default for GateOptions {
    fn default() -> Self {
        GateOptions {
            radii: DEFAULT_RADII.to_vec(),
            eps_e: DEFAULT_EPS_E,
        }
    }
}

/// `osc(y, r)` for each configured radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationProfile {
    /// Sample index of the center.
    pub center: usize,
    pub point: Vec<f64>,
    pub radii: Vec<f64>,
    pub osc: Vec<f64>,
}

impl OscillationProfile {
    /// Value at the smallest radius.
    pub fn tail(&self) -> f64 {
        self.osc.last().copied().unwrap_or(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionE {
    pub profiles: Vec<OscillationProfile>,
    pub eps_e: f64,
    pub r_min: f64,
    /// Largest profile value at `r_min` and where it occurs.
    pub worst: f64,
    pub worst_center: usize,
    /// Every profile is at most `eps_e` at `r_min`. A statement about this
    /// finite truncation only.
    pub consistent: bool,
}

impl ConditionE {
    /// Profiles whose value at `r_min` exceeds `eps_e`.
    pub fn offending(&self) -> Vec<&OscillationProfile> {
        self.profiles
            .iter()
            .filter(|p| p.tail() > self.eps_e)
            .collect()
    }
}

/// Exhaustive profiles over all sample pairs inside each ball.
pub fn check_condition_e(jet: &JetData, gate: &GateOptions, norm: Norm) -> Result<ConditionE> {
    let pts = jet.samples();
    if pts.len() < 2 {
        return Err(Error::InvalidInput(
            "condition (E) needs at least two samples".into(),
        ));
    }
    let radii = &gate.radii;
    if radii.is_empty()
        || radii.iter().any(|r| !(*r > 0.0 && r.is_finite()))
        || radii.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::InvalidInput(
            "radii must be positive and strictly decreasing".into(),
        ));
    }
    if !(gate.eps_e > 0.0 && gate.eps_e.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "eps_E must be positive, got {}",
            gate.eps_e
        )));
    }
    let index = PointIndex::new(pts.to_vec(), norm)?;
    let r_max = radii[0];
    let profiles: Vec<OscillationProfile> = (0..pts.len())
        .into_par_iter()
        .map(|c| {
            let dc = &jet.covectors[c];
            let mut near: Vec<(f64, usize)> = index
                .within(&pts[c], r_max)
                .into_iter()
                .map(|j| (norm.dist(&pts[c], &pts[j]), j))
                .collect();
            near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            // running[j]: worst pair among the j+1 nearest samples
            let mut running = Vec::with_capacity(near.len());
            let mut worst = 0.0f64;
            for j in 0..near.len() {
                let z = near[j].1;
                for &(_, w) in &near[..j] {
                    let dist = norm.dist(&pts[z], &pts[w]);
                    if dist > 0.0 {
                        let lin: f64 = dc
                            .iter()
                            .zip(pts[z].iter().zip(&pts[w]))
                            .map(|(a, (p, q))| a * (p - q))
                            .sum();
                        worst = worst.max((jet.values[z] - jet.values[w] - lin).abs() / dist);
                    }
                }
                running.push(worst);
            }
            let osc = radii
                .iter()
                .map(|&r| {
                    let inside = near.partition_point(|o| o.0 < r);
                    if inside == 0 {
                        0.0
                    } else {
                        running[inside - 1]
                    }
                })
                .collect();
            OscillationProfile {
                center: c,
                point: pts[c].clone(),
                radii: radii.clone(),
                osc,
            }
        })
        .collect();
    let (worst_center, worst) =
        profiles
            .iter()
            .map(|p| (p.center, p.tail()))
            .fold(
                (0, 0.0f64),
                |acc, (c, v)| if v > acc.1 { (c, v) } else { acc },
            );
    Ok(ConditionE {
        eps_e: gate.eps_e,
        r_min: *radii.last().expect("radii are nonempty"),
        worst,
        worst_center,
        consistent: worst <= gate.eps_e,
        profiles,
    })
}
