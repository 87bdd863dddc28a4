//! Tensor-product cubic B-spline quasi-interpolation on a uniform lattice.
//!
//! `S[c](x) = sum_i c_i prod_k B((x_k - o_k)/rho - i_k)` with the centred
//! cubic B-spline `B`. The operator reproduces affine functions, is C2,
//! and each partial derivative is a convex combination of axis divided
//! differences of the coefficients, so `|d_k S| <= max |c_{i+e_k} - c_i| / rho`.

use std::sync::Arc;

use crate::base::ScalarField;

pub type CoeffFn = Arc<dyn Fn(&[i64]) -> f64 + Send + Sync>;

/// `sum_i B(u - i) (u - i)^2` for the centred cubic B-spline.
pub const SPLINE_SECOND_MOMENT: f64 = 1.0 / 3.0;

#[inline]
pub fn bspline(u: f64) -> f64 {
    let a = u.abs();
    if a < 1.0 {
        2.0 / 3.0 - a * a + 0.5 * a * a * a
    } else if a < 2.0 {
        let b = 2.0 - a;
        b * b * b / 6.0
    } else {
        0.0
    }
}

#[inline]
pub fn bspline_deriv(u: f64) -> f64 {
    let a = u.abs();
    let s = u.signum();
    if a < 1.0 {
        s * (-2.0 * a + 1.5 * a * a)
    } else if a < 2.0 {
        let b = 2.0 - a;
        -s * 0.5 * b * b
    } else {
        0.0
    }
}

/// Uniform lattice `origin + rho * i`, `i in Z^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    pub origin: Vec<f64>,
    pub rho: f64,
}

impl Lattice {
    pub fn new(origin: Vec<f64>, rho: f64) -> Self {
        Lattice { origin, rho }
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn node(&self, i: &[i64]) -> Vec<f64> {
        i.iter()
            .zip(&self.origin)
            .map(|(&k, &o)| o + k as f64 * self.rho)
            .collect()
    }

    /// `v = rho (q + frac)` with `0 <= frac < 1`; the remainder is exact up
    /// to one rounding, so `frac` keeps full precision for large `v / rho`.
    fn split(&self, v: f64) -> (i64, f64) {
        let rho = self.rho;
        let mut q = (v / rho).floor();
        let mut r = (-q).mul_add(rho, v);
        if r < 0.0 {
            q -= 1.0;
            r += rho;
        } else if r >= rho {
            q += 1.0;
            r -= rho;
        }
        (q as i64, (r / rho).clamp(0.0, 1.0))
    }

    /// Per axis: first stencil index and the four weights / derivative weights.
    fn stencil(&self, x: &[f64]) -> (Vec<i64>, Vec<[f64; 4]>, Vec<[f64; 4]>) {
        let d = self.dim();
        let mut first = Vec::with_capacity(d);
        let mut w = Vec::with_capacity(d);
        let mut dw = Vec::with_capacity(d);
        for (xk, ok) in x.iter().zip(&self.origin) {
            let (q, frac) = self.split(xk - ok);
            let base = q - 1;
            let mut wk = [0.0; 4];
            let mut dk = [0.0; 4];
            for m in 0..4 {
                let t = frac + 1.0 - m as f64;
                wk[m] = bspline(t);
                dk[m] = bspline_deriv(t) / self.rho;
            }
            first.push(base);
            w.push(wk);
            dw.push(dk);
        }
        (first, w, dw)
    }

    pub fn eval(&self, coeff: &dyn Fn(&[i64]) -> f64, x: &[f64]) -> f64 {
        let d = self.dim();
        let (first, w, _) = self.stencil(x);
        let mut idx = first.clone();
        let mut total = 0.0;
        for combo in 0..4usize.pow(d as u32) {
            let mut c = combo;
            let mut weight = 1.0;
            for k in 0..d {
                let m = c % 4;
                c /= 4;
                idx[k] = first[k] + m as i64;
                weight *= w[k][m];
            }
            if weight != 0.0 {
                total += weight * coeff(&idx);
            }
        }
        total
    }

    pub fn eval_grad(&self, coeff: &dyn Fn(&[i64]) -> f64, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let (first, w, dw) = self.stencil(x);
        let mut idx = first.clone();
        let mut grad = vec![0.0; d];
        let mut ms = vec![0usize; d];
        for combo in 0..4usize.pow(d as u32) {
            let mut c = combo;
            for k in 0..d {
                ms[k] = c % 4;
                c /= 4;
                idx[k] = first[k] + ms[k] as i64;
            }
            let v = coeff(&idx);
            if v == 0.0 {
                continue;
            }
            for (j, g) in grad.iter_mut().enumerate() {
                let mut weight = 1.0;
                for k in 0..d {
                    weight *= if k == j { dw[k][ms[k]] } else { w[k][ms[k]] };
                }
                *g += weight * v;
            }
        }
        grad
    }

    /// Spline field over lazily computed node coefficients.
    pub fn field(self, coeff: CoeffFn, lip: Option<f64>) -> ScalarField {
        let lat = Arc::new(self);
        let (l1, c1) = (lat.clone(), coeff.clone());
        let f = ScalarField::new(move |x| l1.eval(&*c1, x))
            .with_grad(move |x| lat.eval_grad(&*coeff, x));
        match lip {
            Some(l) => f.with_lip(l),
            None => f,
        }
    }
}
