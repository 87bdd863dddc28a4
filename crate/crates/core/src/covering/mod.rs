//! Open covers of the working box, their locally finite double
//! refinement, and the Lipschitz partition of unity subordinated to it.

pub mod partition;
pub mod rudin;

use serde::{Deserialize, Serialize};

pub use partition::{build_partition, ActiveMember, PartitionOfUnity};
pub use rudin::{
    rudin_refine, rudin_refine_with, CoverRefinement, Level, Locality, RefinementAudit,
};

use crate::base::{Norm, PointIndex, ScalarField};
use crate::error::{Error, Result};

/// Open subset of the box.
#[derive(Clone, Debug)]
pub enum Region {
    /// The whole box.
    Box,
    /// Union of open balls `(center, radius)`.
    Balls(Vec<(Vec<f64>, f64)>),
    /// `{z : dist(z, points) > margin}`.
    AwayFrom { points: PointIndex, margin: f64 },
}

impl Region {
    pub fn away_from(points: Vec<Vec<f64>>, margin: f64, norm: Norm) -> Result<Self> {
        Ok(Region::AwayFrom {
            points: PointIndex::new(points, norm)?,
            margin,
        })
    }

    pub fn contains(&self, x: &[f64], norm: Norm) -> bool {
        match self {
            Region::Box => true,
            Region::Balls(balls) => balls.iter().any(|(c, r)| norm.dist(x, c) < *r),
            Region::AwayFrom { points, margin } => points.nearest(x).1 > *margin,
        }
    }

    /// Largest `radius` accepted by `contains_ball` (infinite for the box).
    pub fn depth(&self, x: &[f64], norm: Norm) -> f64 {
        match self {
            Region::Box => f64::INFINITY,
            Region::Balls(balls) => balls
                .iter()
                .map(|(c, r)| r - norm.dist(x, c))
                .fold(f64::NEG_INFINITY, f64::max),
            Region::AwayFrom { points, margin } => points.nearest(x).1 - margin,
        }
    }

    /// Sufficient test for `B(x, radius) ⊆ region` (a single ball must
    /// contain it for ball unions).
    pub fn contains_ball(&self, x: &[f64], radius: f64, norm: Norm) -> bool {
        match self {
            Region::Box => true,
            Region::Balls(balls) => balls.iter().any(|(c, r)| norm.dist(x, c) + radius <= *r),
            Region::AwayFrom { points, margin } => points.nearest(x).1 >= margin + radius,
        }
    }
}

/// A cover indexed by labels; the vector order is the total order of
/// the index set.
#[derive(Clone, Debug)]
pub struct OpenCover {
    pub labels: Vec<usize>,
    pub regions: Vec<Region>,
}

impl OpenCover {
    pub fn new(labels: Vec<usize>, regions: Vec<Region>) -> Result<Self> {
        if labels.is_empty() || labels.len() != regions.len() {
            return Err(Error::InvalidInput(
                "cover needs one region per label".into(),
            ));
        }
        let mut seen = labels.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != labels.len() {
            return Err(Error::InvalidInput("duplicate cover labels".into()));
        }
        for r in &regions {
            if let Region::Balls(b) = r {
                if b.iter().any(|(_, rad)| !(*rad > 0.0)) {
                    return Err(Error::InvalidInput("ball radii must be positive".into()));
                }
            }
        }
        Ok(OpenCover { labels, regions })
    }

    /// Single-set cover `{box}` with label 1.
    pub fn whole_box() -> Self {
        OpenCover {
            labels: vec![1],
            regions: vec![Region::Box],
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Position of the first region containing `x`.
    pub fn first_index(&self, x: &[f64], norm: Norm) -> Option<usize> {
        self.regions.iter().position(|r| r.contains(x, norm))
    }
}

/// Cubic Hermite ramp: 0 below `a`, 1 above `b`, C1 with zero end slopes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ramp {
    pub a: f64,
    pub b: f64,
}

pub fn smoothstep(a: f64, b: f64) -> Result<Ramp> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInput(format!(
            "ramp needs a < b, got [{a}, {b}]"
        )));
    }
    Ok(Ramp { a, b })
}

impl Ramp {
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        let u = ((t - self.a) / (self.b - self.a)).clamp(0.0, 1.0);
        u * u * (3.0 - 2.0 * u)
    }

    #[inline]
    pub fn deriv(&self, t: f64) -> f64 {
        let w = self.b - self.a;
        let u = (t - self.a) / w;
        if u <= 0.0 || u >= 1.0 {
            0.0
        } else {
            6.0 * u * (1.0 - u) / w
        }
    }

    pub fn lip(&self) -> f64 {
        1.5 / (self.b - self.a)
    }

    /// The ramp as a field on the line.
    pub fn field(self) -> ScalarField {
        ScalarField::new(move |x| self.value(x[0]))
            .with_grad(move |x| vec![self.deriv(x[0])])
            .with_lip(self.lip())
    }
}
