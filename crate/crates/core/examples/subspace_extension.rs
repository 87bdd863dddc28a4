//! Extends sin restricted to the x1-axis to a C1 function on [-1,1]^2.

use c1ext::approx::Context;
use c1ext::base::{make_constants, ClosedSet, ScalarField, WorkingDomain};
use c1ext::engine::{extend_from_subspace, ExtendOptions};

fn main() -> c1ext::Result<()> {
    let domain = WorkingDomain::cube(2, -1.0, 1.0, 0.05)?;
    let ctx = Context::new(domain.clone(), make_constants(1.0)?)?;
    let y = ClosedSet::subspace_on_net(&domain, vec![vec![1.0, 0.0]])?;
    let f = ScalarField::new(|x| x[0].sin())
        .with_grad(|x| vec![x[0].cos(), 0.0])
        .with_lip(1.0);
    let h = extend_from_subspace(&f, &y, ExtendOptions::new(true).with_tol(1e-4), &ctx)?;
    let c = &h.certificates;
    println!("stages {} eps {}", h.depth, h.eps);
    println!("max |H - f| on Y {:.2e} (tol {:.0e})", c.agreement, c.tol);
    println!("FD gap {:.2e} (tolerance {:.2e})", c.fd_gap, c.fd_tolerance);
    println!(
        "sampled Lip(H) {:.4} <= {:.4}",
        c.lip_sampled,
        c.lip_bound.unwrap_or(f64::NAN)
    );
    for x in [[0.3, 0.0], [0.3, 0.5], [-0.7, -0.9]] {
        println!(
            "H{x:?} = {:.6}  sin(x1) = {:.6}",
            h.field.value(&x),
            x[0].sin()
        );
    }
    println!("passed: {}", c.passed());
    Ok(())
}
