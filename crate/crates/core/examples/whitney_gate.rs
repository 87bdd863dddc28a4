//! The oscillation gate on jets over {0} ∪ {1/k}: an alternating family is rejected, y^2 passes.

use c1ext::approx::Context;
use c1ext::base::{make_constants, ClosedSet, WorkingDomain};
use c1ext::engine::{extend_from_jets, ExtendOptions, GateOptions, JetExtension};
use c1ext::taylor::JetData;

fn family(value: impl Fn(f64, usize) -> f64, deriv: impl Fn(f64) -> f64) -> c1ext::Result<JetData> {
    let mut pts = vec![vec![0.0]];
    let mut values = vec![0.0];
    let mut covectors = vec![vec![deriv(0.0)]];
    for k in 2..=40 {
        let t = 1.0 / k as f64;
        pts.push(vec![t]);
        values.push(value(t, k));
        covectors.push(vec![deriv(t)]);
    }
    JetData::new(ClosedSet::finite(pts)?, values, covectors, None)
}

fn main() -> c1ext::Result<()> {
    let domain = WorkingDomain::cube(1, 0.0, 1.0, 0.01)?;
    let ctx = Context::new(domain, make_constants(1.0)?)?;
    let gate = GateOptions::default();
    let alternating = family(|t, k| if k % 2 == 0 { t * t } else { -t * t }, |_| 0.0)?;
    let parabola = family(|t, _| t * t, |t| 2.0 * t)?;
    for (name, jet) in [("alternating", alternating), ("parabola", parabola)] {
        match extend_from_jets(&jet, &gate, ExtendOptions::new(false).with_tol(1e-4), &ctx)? {
            JetExtension::GateFailed(e) => {
                let at_zero = &e.profiles[0];
                println!("{name}: rejected, worst {:.4} > {}", e.worst, e.eps_e);
                for (r, o) in at_zero.radii.iter().zip(&at_zero.osc) {
                    println!("   r = {r:<5} oscillation ratio at 0: {o:.4}");
                }
            }
            JetExtension::Extended { gate, result } => {
                println!(
                    "{name}: accepted (worst {:.4}), {} stage(s), agreement {:.2e}",
                    gate.worst, result.depth, result.certificates.agreement
                );
            }
        }
    }
    Ok(())
}
