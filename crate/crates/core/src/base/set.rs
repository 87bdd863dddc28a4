use std::fmt;
use std::sync::Arc;

use super::field::{dot, sub};
use super::geometry::WorkingDomain;
use crate::error::{Error, Result};

pub type ProjectFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub enum SetKind {
    /// Finitely many points; the samples are the set.
    FiniteNet,
    /// Linear subspace through the origin with an orthonormal basis.
    Subspace { basis: Vec<Vec<f64>> },
    /// Closed convex set given by its metric projection.
    Convex { projector: ProjectFn },
}

impl fmt::Debug for SetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetKind::FiniteNet => write!(f, "FiniteNet"),
            SetKind::Subspace { basis } => write!(f, "Subspace({} vectors)", basis.len()),
            SetKind::Convex { .. } => write!(f, "Convex"),
        }
    }
}

/// Closed subset `Y` of the working box together with the samples used
/// for every audit on `Y`.
#[derive(Clone, Debug)]
pub struct ClosedSet {
    kind: SetKind,
    samples: Vec<Vec<f64>>,
}

impl ClosedSet {
    pub fn finite(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("empty set".into()));
        }
        Ok(ClosedSet {
            kind: SetKind::FiniteNet,
            samples: points,
        })
    }

    pub fn subspace(basis: Vec<Vec<f64>>, samples: Vec<Vec<f64>>) -> Result<Self> {
        if basis.is_empty() || samples.is_empty() {
            return Err(Error::InvalidInput(
                "subspace needs a basis and samples".into(),
            ));
        }
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot(a, b) - want).abs() > 1e-12 {
                    return Err(Error::InvalidInput(
                        "subspace basis is not orthonormal".into(),
                    ));
                }
            }
        }
        let set = ClosedSet {
            kind: SetKind::Subspace { basis },
            samples,
        };
        for s in &set.samples {
            let p = set.project(s);
            if sub(s, &p).iter().map(|v| v * v).sum::<f64>().sqrt() > 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "sample {s:?} is not in the subspace"
                )));
            }
        }
        Ok(set)
    }

    /// Subspace sampled by the net points of `domain` lying on it.
    pub fn subspace_on_net(domain: &WorkingDomain, basis: Vec<Vec<f64>>) -> Result<Self> {
        let probe = ClosedSet {
            kind: SetKind::Subspace {
                basis: basis.clone(),
            },
            samples: Vec::new(),
        };
        let samples: Vec<Vec<f64>> = domain
            .net()
            .into_iter()
            .filter(|x| {
                let p = probe.project(x);
                sub(x, &p).iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e-9
            })
            .collect();
        Self::subspace(basis, samples)
    }

    pub fn convex(projector: ProjectFn, samples: Vec<Vec<f64>>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("convex set needs samples".into()));
        }
        for s in &samples {
            let p = projector(s);
            let pp = projector(&p);
            if sub(&pp, &p).iter().map(|v| v * v).sum::<f64>().sqrt() > 1e-9 {
                return Err(Error::InvalidInput("projector is not idempotent".into()));
            }
        }
        Ok(ClosedSet {
            kind: SetKind::Convex { projector },
            samples,
        })
    }

    /// Segment `[a, b]` (Euclidean projection) sampled at `count` equispaced points.
    pub fn segment(a: Vec<f64>, b: Vec<f64>, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidInput(
                "segment needs at least 2 samples".into(),
            ));
        }
        let dir = sub(&b, &a);
        let len2 = dot(&dir, &dir);
        if len2 <= 0.0 {
            return Err(Error::InvalidInput("degenerate segment".into()));
        }
        let samples = (0..count)
            .map(|i| {
                let t = i as f64 / (count - 1) as f64;
                a.iter().zip(&dir).map(|(p, d)| p + t * d).collect()
            })
            .collect();
        let (a2, d2) = (a.clone(), dir.clone());
        let projector: ProjectFn = Arc::new(move |x: &[f64]| {
            let t = (dot(&sub(x, &a2), &d2) / len2).clamp(0.0, 1.0);
            a2.iter().zip(&d2).map(|(p, d)| p + t * d).collect()
        });
        Self::convex(projector, samples)
    }

    /// Closed Euclidean ball sampled by the net points of `domain` inside it.
    pub fn ball(domain: &WorkingDomain, center: Vec<f64>, radius: f64) -> Result<Self> {
        let c2 = center.clone();
        let projector: ProjectFn = Arc::new(move |x: &[f64]| {
            let d = sub(x, &c2);
            let n = dot(&d, &d).sqrt();
            if n <= radius {
                x.to_vec()
            } else {
                c2.iter().zip(&d).map(|(c, v)| c + v * radius / n).collect()
            }
        });
        let samples = domain
            .net()
            .into_iter()
            .filter(|x| dot(&sub(x, &center), &sub(x, &center)).sqrt() <= radius)
            .collect();
        Self::convex(projector, samples)
    }

    pub fn kind(&self) -> &SetKind {
        &self.kind
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn dim(&self) -> usize {
        self.samples[0].len()
    }

    pub fn validate_in(&self, domain: &WorkingDomain) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::InvalidInput("set has no samples".into()));
        }
        if let Some(s) = self
            .samples
            .iter()
            .find(|s| s.len() != domain.dim() || !domain.contains(s))
        {
            return Err(Error::InvalidInput(format!(
                "sample {s:?} lies outside the box"
            )));
        }
        Ok(())
    }

    /// Euclidean projection onto the set; nearest sample for finite sets.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            SetKind::Subspace { basis } => {
                let mut p = vec![0.0; x.len()];
                for b in basis {
                    let c = dot(x, b);
                    for (pi, bi) in p.iter_mut().zip(b) {
                        *pi += c * bi;
                    }
                }
                p
            }
            SetKind::Convex { projector } => projector(x),
            SetKind::FiniteNet => self
                .samples
                .iter()
                .min_by(|a, b| {
                    let da = dot(&sub(x, a), &sub(x, a));
                    let db = dot(&sub(x, b), &sub(x, b));
                    da.total_cmp(&db)
                })
                .cloned()
                .unwrap_or_else(|| x.to_vec()),
        }
    }

    /// Orthonormal basis of `Z = span{y - y'}` (the subspace basis itself
    /// for subspaces).
    pub fn z_basis(&self) -> Vec<Vec<f64>> {
        match &self.kind {
            SetKind::Subspace { basis } => basis.clone(),
            _ => {
                let base = &self.samples[0];
                let diffs: Vec<Vec<f64>> = self.samples[1..].iter().map(|s| sub(s, base)).collect();
                gram_schmidt(&diffs, base.len())
            }
        }
    }

    /// Midpoints of sample pairs must project onto themselves.
    pub fn check_convexity(&self, tol: f64) -> Result<()> {
        let SetKind::Convex { projector } = &self.kind else {
            return Ok(());
        };
        let n = self.samples.len();
        let stride = (n / 64).max(1);
        for i in (0..n).step_by(stride) {
            for j in (i + 1..n).step_by(stride) {
                let mid: Vec<f64> = self.samples[i]
                    .iter()
                    .zip(&self.samples[j])
                    .map(|(a, b)| 0.5 * (a + b))
                    .collect();
                let p = projector(&mid);
                let gap = dot(&sub(&mid, &p), &sub(&mid, &p)).sqrt();
                if gap > tol {
                    return Err(Error::Convexity(format!(
                        "midpoint of samples {i} and {j} is {gap} away from the set"
                    )));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn gram_schmidt(vectors: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let scale = vectors
        .iter()
        .map(|v| dot(v, v).sqrt())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let n = dot(&w, &w).sqrt();
        if n > 1e-9 * scale {
            basis.push(w.iter().map(|a| a / n).collect());
            if basis.len() == dim {
                break;
            }
        }
    }
    basis
}

/// Orthogonal projection of a covector onto `span(basis)`.
pub fn project_onto(basis: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    let mut p = vec![0.0; w.len()];
    for b in basis {
        let c = dot(w, b);
        for (pi, bi) in p.iter_mut().zip(b) {
            *pi += c * bi;
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subspace_rejects_non_orthonormal_basis() {
        let err = ClosedSet::subspace(vec![vec![1.0, 1.0]], vec![vec![0.0, 0.0]]);
        assert!(err.is_err());
    }

    #[test]
    fn axis_subspace_on_net() {
        let d = WorkingDomain::cube(2, -1.0, 1.0, 0.5).unwrap();
        let y = ClosedSet::subspace_on_net(&d, vec![vec![1.0, 0.0]]).unwrap();
        assert_eq!(y.samples().len(), 5);
        assert!(y.samples().iter().all(|s| s[1] == 0.0));
        assert_eq!(y.project(&[0.3, 0.7]), vec![0.3, 0.0]);
    }

    #[test]
    fn segment_projection_is_idempotent_and_convex() {
        let y = ClosedSet::segment(vec![-0.5, -0.25], vec![0.5, 0.25], 11).unwrap();
        let p = y.project(&[2.0, 0.0]);
        assert_eq!(y.project(&p), p);
        y.check_convexity(1e-9).unwrap();
        let z = y.z_basis();
        assert_eq!(z.len(), 1);
        assert!((dot(&z[0], &z[0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn z_basis_of_scattered_points_spans_plane() {
        let y = ClosedSet::finite(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        assert_eq!(y.z_basis().len(), 2);
        let single = ClosedSet::finite(vec![vec![0.5, 0.5]]).unwrap();
        assert!(single.z_basis().is_empty());
    }
}
