use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constants propagated through the construction from the approximation
/// constant `c0` of the smoothing oracle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub c0: f64,
    /// Lipschitz inflation of the restriction-preserving approximation.
    pub c1: f64,
    /// Lipschitz bound for the blended Taylor fields, `1 + 2 c1`.
    pub r: f64,
    /// Single-pass approximation constant, `r + 1/4`.
    pub c2: f64,
    /// Extension constant, `c2 + 1`.
    pub c3: f64,
}

pub fn make_constants(c0: f64) -> Result<Constants> {
    if !(c0 >= 1.0 && c0.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "C0 must be a finite number >= 1, got {c0}"
        )));
    }
    let c1 = 33.0 * c0;
    let r = 1.0 + 2.0 * c1;
    let c2 = r + 0.25;
    Ok(Constants {
        c0,
        c1,
        r,
        c2,
        c3: c2 + 1.0,
    })
}

impl Constants {
    /// Lipschitz bound of the partition member at level `n`.
    pub fn partition_lip(&self, n: usize) -> f64 {
        self.c0 * 32.0 * (2f64.powi(n as i32) - 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_oracle_constants() {
        let c = make_constants(1.0).unwrap();
        assert_eq!((c.c1, c.r, c.c2, c.c3), (33.0, 67.0, 67.25, 68.25));
    }

    #[test]
    fn doubled_oracle_constants() {
        let c = make_constants(2.0).unwrap();
        assert_eq!((c.c1, c.r, c.c2), (66.0, 133.0, 133.25));
    }

    #[test]
    fn rejects_small_c0() {
        assert!(make_constants(0.5).is_err());
        assert!(make_constants(f64::NAN).is_err());
    }

    #[test]
    fn partition_bound_sums_levels() {
        let c = make_constants(1.0).unwrap();
        let direct: f64 = (5..=7).map(|i| 2f64.powi(i)).sum();
        assert_eq!(c.partition_lip(3), direct);
    }
}
