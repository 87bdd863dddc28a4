//! A C1 function equal to 0 on A = {x1 <= -0.5} and to 1 at distance >= 1 from A.

use c1ext::approx::Context;
use c1ext::base::{make_constants, ClosedSet, WorkingDomain};
use c1ext::engine::{separating_function, GateOptions};

fn main() -> c1ext::Result<()> {
    let domain = WorkingDomain::cube(2, -2.0, 2.0, 0.1)?;
    let ctx = Context::new(domain.clone(), make_constants(1.0)?)?;
    let a = ClosedSet::finite(domain.net().into_iter().filter(|p| p[0] <= -0.5).collect())?;
    let s = separating_function(&a, &GateOptions::default(), &ctx)?;
    let c = &s.certificates;
    println!("|A| = {}, |B| = {}", c.a_samples, c.b_samples);
    println!("max |h| on A {}, max |1 - h| on B {}", c.a_gap, c.b_gap);
    println!(
        "range [{}, {}], sampled Lip {:.4} <= {}",
        c.range_min, c.range_max, c.lip_sampled, c.lip_bound
    );
    for x1 in [-1.0, -0.5, -0.2, 0.1, 0.5, 1.0] {
        println!("h({x1:>4}, 0) = {:.4}", s.field.value(&[x1, 0.0]));
    }
    println!("passed: {}", c.passed);
    Ok(())
}
