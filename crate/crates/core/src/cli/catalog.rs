//! Fixed catalog of input functions and tabulated jets.

use serde::{Deserialize, Serialize};

use crate::base::{ClosedSet, ScalarField, WorkingDomain};
use crate::error::{Error, Result};
use crate::taylor::JetData;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionSpec {
    Constant {
        value: f64,
    },
    /// `<coeffs, x> + offset`.
    Affine {
        coeffs: Vec<f64>,
        offset: f64,
    },
    /// `sin(frequency x_axis)`.
    Sin {
        axis: usize,
        #[serde(default = "one")]
        frequency: f64,
    },
    /// `x_axis^2`.
    Square {
        axis: usize,
    },
    /// `|x_axis - center|`.
    Abs {
        axis: usize,
        #[serde(default)]
        center: f64,
    },
    /// `||x||` in the domain norm.
    Norm,
    /// Huber profile of the Euclidean norm: `r^2 / (2 delta)` below `delta`, `r - delta/2` above.
    Huber {
        delta: f64,
    },
    /// Piecewise-linear interpolation of `(knots, values)` along an axis, constant outside.
    PiecewiseLinear {
        axis: usize,
        knots: Vec<f64>,
        values: Vec<f64>,
    },
    /// On `{0} ∪ {1/k}`: `(-1)^k / k^2` at `1/k`, `0` at `0`, with zero covectors.
    AlternatingSquares,
    /// Values and covectors listed in the order of the set samples.
    Tabulated {
        values: Vec<f64>,
        #[serde(default)]
        covectors: Option<Vec<Vec<f64>>>,
    },
}

fn one() -> f64 {
    1.0
}

fn check_axis(axis: usize, dim: usize) -> Result<()> {
    if axis < dim {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "axis {axis} is out of range for dimension {dim}"
        )))
    }
}

fn unit(dim: usize, axis: usize, scale: f64) -> Vec<f64> {
    let mut g = vec![0.0; dim];
    g[axis] = scale;
    g
}

impl FunctionSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            FunctionSpec::Constant { value } if !value.is_finite() => {
                Err(Error::InvalidInput("the constant must be finite".into()))
            }
            FunctionSpec::Affine { coeffs, offset } => {
                if coeffs.len() != dim || coeffs.iter().chain([offset]).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidInput(format!(
                        "affine needs {dim} finite coefficients"
                    )));
                }
                Ok(())
            }
            FunctionSpec::Sin { axis, frequency } => {
                check_axis(*axis, dim)?;
                if !frequency.is_finite() {
                    return Err(Error::InvalidInput("the frequency must be finite".into()));
                }
                Ok(())
            }
            FunctionSpec::Square { axis } | FunctionSpec::Abs { axis, .. } => {
                check_axis(*axis, dim)
            }
            FunctionSpec::Huber { delta } if !(*delta > 0.0 && delta.is_finite()) => Err(
                Error::InvalidInput(format!("delta must be positive, got {delta}")),
            ),
            FunctionSpec::PiecewiseLinear {
                axis,
                knots,
                values,
            } => {
                check_axis(*axis, dim)?;
                if knots.len() < 2 || knots.len() != values.len() {
                    return Err(Error::InvalidInput(
                        "piecewise-linear needs at least 2 knots, one value each".into(),
                    ));
                }
                if knots.windows(2).any(|w| !(w[1] > w[0])) || values.iter().any(|v| !v.is_finite())
                {
                    return Err(Error::InvalidInput(
                        "knots must increase strictly and values be finite".into(),
                    ));
                }
                Ok(())
            }
            FunctionSpec::Tabulated { values, covectors } => {
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidInput(
                        "tabulated values must be finite".into(),
                    ));
                }
                if let Some(c) = covectors {
                    if c.len() != values.len() || c.iter().any(|v| v.len() != dim) {
                        return Err(Error::InvalidInput(format!(
                            "need one covector of dimension {dim} per tabulated value"
                        )));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// The function as a field on the box; tabulated data has none.
    pub fn field(&self, domain: &WorkingDomain) -> Result<ScalarField> {
        let (dim, norm) = (domain.dim(), domain.norm);
        let f = match self.clone() {
            FunctionSpec::Constant { value } => ScalarField::constant(value, dim),
            FunctionSpec::Affine { coeffs, offset } => {
                let c = coeffs.clone();
                let lip = norm.dual_of(&coeffs);
                ScalarField::new(move |x| {
                    offset + x.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>()
                })
                .with_grad(move |_| coeffs.clone())
                .with_lip(lip)
            }
            FunctionSpec::Sin { axis, frequency } => {
                let lip = frequency.abs() * norm.dual_of(&unit(dim, axis, 1.0));
                ScalarField::new(move |x| (frequency * x[axis]).sin())
                    .with_grad(move |x| {
                        unit(x.len(), axis, frequency * (frequency * x[axis]).cos())
                    })
                    .with_lip(lip)
            }
            FunctionSpec::Square { axis } => {
                let reach = domain.lo[axis].abs().max(domain.hi[axis].abs());
                let lip = 2.0 * reach * norm.dual_of(&unit(dim, axis, 1.0));
                ScalarField::new(move |x| x[axis] * x[axis])
                    .with_grad(move |x| unit(x.len(), axis, 2.0 * x[axis]))
                    .with_lip(lip)
            }
            FunctionSpec::Abs { axis, center } => {
                let lip = norm.dual_of(&unit(dim, axis, 1.0));
                ScalarField::new(move |x| (x[axis] - center).abs()).with_lip(lip)
            }
            FunctionSpec::Norm => ScalarField::new(move |x| norm.of(x)).with_lip(1.0),
            FunctionSpec::Huber { delta } => {
                let lip = norm.dual_of(&vec![1.0; dim]).max(1.0);
                let r = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
                ScalarField::new(move |x| {
                    let t = r(x);
                    if t <= delta {
                        t * t / (2.0 * delta)
                    } else {
                        t - delta / 2.0
                    }
                })
                .with_grad(move |x| {
                    let t = r(x);
                    let s = if t <= delta { 1.0 / delta } else { 1.0 / t };
                    x.iter().map(|v| v * s).collect()
                })
                .with_lip(lip)
            }
            FunctionSpec::PiecewiseLinear {
                axis,
                knots,
                values,
            } => {
                let lip = knots
                    .windows(2)
                    .zip(values.windows(2))
                    .map(|(k, v)| ((v[1] - v[0]) / (k[1] - k[0])).abs())
                    .fold(0.0, f64::max)
                    * norm.dual_of(&unit(dim, axis, 1.0));
                ScalarField::new(move |x| interpolate(&knots, &values, x[axis])).with_lip(lip)
            }
            FunctionSpec::AlternatingSquares => ScalarField::new(|x| alternating(x[0])),
            FunctionSpec::Tabulated { .. } => {
                return Err(Error::InvalidInput(
                    "tabulated data defines no field".into(),
                ))
            }
        };
        Ok(f)
    }

    /// Values and covectors on the samples of `y`.
    pub fn jet(&self, y: &ClosedSet, domain: &WorkingDomain) -> Result<JetData> {
        let samples = y.samples();
        let dim = domain.dim();
        match self {
            FunctionSpec::Tabulated { values, covectors } => {
                if values.len() != samples.len() {
                    return Err(Error::InvalidInput(format!(
                        "{} tabulated values for {} samples",
                        values.len(),
                        samples.len()
                    )));
                }
                let cov = covectors
                    .clone()
                    .unwrap_or_else(|| vec![vec![0.0; dim]; values.len()]);
                JetData::new(y.clone(), values.clone(), cov, None)
            }
            FunctionSpec::AlternatingSquares => {
                let values = samples.iter().map(|p| alternating(p[0])).collect();
                JetData::new(y.clone(), values, vec![vec![0.0; dim]; samples.len()], None)
            }
            _ => {
                let f = self.field(domain)?;
                if !f.has_grad() {
                    return Err(Error::InvalidInput(
                        "jets need a catalog entry with a gradient".into(),
                    ));
                }
                JetData::from_field(&f, y)
            }
        }
    }
}

fn interpolate(knots: &[f64], values: &[f64], t: f64) -> f64 {
    let n = knots.len();
    if t <= knots[0] {
        return values[0];
    }
    if t >= knots[n - 1] {
        return values[n - 1];
    }
    let i = knots.partition_point(|&k| k <= t) - 1;
    let w = (t - knots[i]) / (knots[i + 1] - knots[i]);
    values[i] + w * (values[i + 1] - values[i])
}

/// `(-1)^k t^2` with `k = round(1/t)`, `0` at `t = 0`.
fn alternating(t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let k = (1.0 / t).round() as i64;
    let s = if k % 2 == 0 { 1.0 } else { -1.0 };
    s * t * t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piecewise_linear_interpolates_and_clamps() {
        let (k, v) = (vec![-1.0, 0.0, 1.0], vec![1.0, 0.0, 2.0]);
        assert_eq!(interpolate(&k, &v, -2.0), 1.0);
        assert_eq!(interpolate(&k, &v, -0.5), 0.5);
        assert_eq!(interpolate(&k, &v, 0.5), 1.0);
        assert_eq!(interpolate(&k, &v, 3.0), 2.0);
    }

    #[test]
    fn alternating_family_signs() {
        assert_eq!(alternating(0.5), 0.25);
        assert!((alternating(1.0 / 3.0) + 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(alternating(0.0), 0.0);
    }
}
