use std::fmt;
use std::sync::Arc;

pub type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type ModulusFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real function on the working box, optionally carrying its gradient,
/// a declared Lipschitz bound and a uniform-continuity modulus.
///
/// Evaluators must be reentrant: audits evaluate in parallel.
#[derive(Clone)]
pub struct ScalarField {
    eval: EvalFn,
    grad: Option<GradFn>,
    lip_bound: Option<f64>,
    modulus: Option<ModulusFn>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("grad", &self.grad.is_some())
            .field("lip_bound", &self.lip_bound)
            .field("modulus", &self.modulus.is_some())
            .finish()
    }
}

impl ScalarField {
    pub fn new(eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField {
            eval: Arc::new(eval),
            grad: None,
            lip_bound: None,
            modulus: None,
        }
    }

    pub fn constant(c: f64, dim: usize) -> Self {
        ScalarField::new(move |_| c)
            .with_grad(move |_| vec![0.0; dim])
            .with_lip(0.0)
    }

    pub fn with_grad(mut self, grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.grad = Some(Arc::new(grad));
        self
    }

    /// Declares a Lipschitz bound; also installs the modulus `r -> L r`
    /// unless one is already present.
    pub fn with_lip(mut self, lip: f64) -> Self {
        self.lip_bound = Some(lip);
        if self.modulus.is_none() {
            self.modulus = Some(Arc::new(move |r| lip * r));
        }
        self
    }

    pub fn with_modulus(mut self, modulus: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.modulus = Some(Arc::new(modulus));
        self
    }

    pub fn without_grad(mut self) -> Self {
        self.grad = None;
        self
    }

    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.grad.as_ref().map(|g| g(x))
    }

    pub fn has_grad(&self) -> bool {
        self.grad.is_some()
    }

    pub fn lip_bound(&self) -> Option<f64> {
        self.lip_bound
    }

    pub fn modulus(&self, r: f64) -> Option<f64> {
        self.modulus.as_ref().map(|m| m(r))
    }

    pub fn has_modulus(&self) -> bool {
        self.modulus.is_some()
    }

    pub fn evaluator(&self) -> EvalFn {
        self.eval.clone()
    }

    pub fn grad_fn(&self) -> Option<GradFn> {
        self.grad.clone()
    }

    /// Analytic gradient if present, central differences otherwise.
    pub fn gradient_or_fd(&self, x: &[f64], step: f64) -> Vec<f64> {
        self.gradient(x)
            .unwrap_or_else(|| central_difference(&*self.eval, x, step))
    }
}

/// Central-difference gradient of `f` at `x`.
pub fn central_difference(f: &dyn Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|k| {
            p[k] = x[k] + step;
            let up = f(&p);
            p[k] = x[k] - step;
            let down = f(&p);
            p[k] = x[k];
            (up - down) / (2.0 * step)
        })
        .collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}
