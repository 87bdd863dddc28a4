//! C1 approximation of |x1| + 0.5|x2| on [-1,1]^2 with an audited error and Lipschitz constant.

use c1ext::base::{ScalarField, WorkingDomain};
use c1ext::smoothing::smooth_lipschitz_approx;

fn main() -> c1ext::Result<()> {
    let domain = WorkingDomain::cube(2, -1.0, 1.0, 0.05)?;
    let f = ScalarField::new(|x| x[0].abs() + 0.5 * x[1].abs()).with_lip(1.5);
    for eps in [0.2, 0.05] {
        let (k, report) = smooth_lipschitz_approx(&f, eps, &domain)?;
        println!(
            "eps {eps:<5} method {} error {:.3e} sampled Lip {:.4} (bound {:.4}) K(0,0) = {:.4}",
            report.method,
            report.achieved_error,
            report.lip_certificate,
            report.certified_c0 * 1.5,
            k.value(&[0.0, 0.0]),
        );
    }
    Ok(())
}
