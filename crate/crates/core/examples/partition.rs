//! Refines a two-interval cover of [0,1] and evaluates the smooth partition of unity.

use c1ext::base::{make_constants, WorkingDomain};
use c1ext::covering::{build_partition, rudin_refine, OpenCover, Region};
use c1ext::smoothing::QuasiInterpolation;

fn main() -> c1ext::Result<()> {
    let domain = WorkingDomain::cube(1, 0.0, 1.0, 1e-3)?;
    let cover = OpenCover::new(
        vec![1, 2],
        vec![
            Region::Balls(vec![(vec![0.25], 0.45)]),
            Region::Balls(vec![(vec![0.8], 0.45)]),
        ],
    )?;
    let refinement = rudin_refine(&cover, &domain, 16)?;
    let audit = refinement.audit();
    println!(
        "levels {} centers per level {:?}",
        refinement.n_levels(),
        audit.centers_per_level
    );
    println!(
        "locality failures {} most active {}",
        audit.locality_failures, audit.max_active
    );
    let pu = build_partition(
        refinement,
        &QuasiInterpolation::new(domain.clone())?,
        make_constants(1.0)?,
    )?;
    let worst = domain
        .net()
        .iter()
        .map(|x| (pu.sum(x) - 1.0).abs())
        .fold(0.0, f64::max);
    println!("max |sum psi - 1| on the net: {worst:.2e}");
    for x in [0.1, 0.5, 0.62, 0.9] {
        let active: Vec<String> = pu
            .evaluate(&[x])
            .iter()
            .map(|m| format!("(level {}, label {}) {:.3}", m.level, m.label, m.value))
            .collect();
        println!("x = {x}: {}", active.join(", "));
    }
    Ok(())
}
