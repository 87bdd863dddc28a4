//! Extends x1^2 from a segment in the plane, with derivatives measured in the ambient dual norm.

use c1ext::approx::Context;
use c1ext::base::{make_constants, ClosedSet, ScalarField, WorkingDomain};
use c1ext::engine::{extend_from_convex_set, ExtendOptions};

fn main() -> c1ext::Result<()> {
    let domain = WorkingDomain::cube(2, -1.0, 1.0, 0.05)?;
    let ctx = Context::new(domain.clone(), make_constants(1.0)?)?;
    let y = ClosedSet::segment(vec![-0.5, -0.25], vec![0.5, 0.25], 21)?;
    let f = ScalarField::new(|x| x[0] * x[0]).with_grad(|x| vec![2.0 * x[0], 0.0]);
    for lipschitz in [false, true] {
        let h = extend_from_convex_set(&f, &y, ExtendOptions::new(lipschitz).with_tol(1e-4), &ctx)?;
        let c = &h.certificates;
        println!(
            "lipschitz {lipschitz}: stages {} agreement {:.2e} gradient error {:.2e} FD gap {:.2e} passed {}",
            h.depth,
            c.agreement,
            c.gradient_error,
            c.fd_gap,
            c.passed()
        );
    }
    Ok(())
}
