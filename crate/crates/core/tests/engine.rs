use std::time::Instant;

use c1ext::approx::Context;
use c1ext::base::{make_constants, ClosedSet, ScalarField, WorkingDomain};
use c1ext::engine::{
    check_condition_e, extend_from_convex_set, extend_from_jets, extend_from_subspace,
    separating_function, ExtendOptions, GateOptions, JetExtension,
};
use c1ext::taylor::JetData;
use c1ext::Error;

fn ctx(d: &WorkingDomain) -> Context {
    Context::new(d.clone(), make_constants(1.0).unwrap()).unwrap()
}

fn plane() -> WorkingDomain {
    WorkingDomain::cube(2, -1.0, 1.0, 0.05).unwrap()
}

fn x_axis(d: &WorkingDomain) -> ClosedSet {
    ClosedSet::subspace_on_net(d, vec![vec![1.0, 0.0]]).unwrap()
}

fn alternating(n: usize) -> JetData {
    let mut pts = vec![vec![0.0]];
    let mut vals = vec![0.0];
    for k in 2..=n {
        let k = k as f64;
        pts.push(vec![1.0 / k]);
        vals.push(
            if (k as usize).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            } / (k * k),
        );
    }
    let cov = vec![vec![0.0]; pts.len()];
    JetData::new(ClosedSet::finite(pts).unwrap(), vals, cov, None).unwrap()
}

fn parabola(n: usize) -> JetData {
    let mut pts = vec![vec![0.0]];
    for k in 2..=n {
        pts.push(vec![1.0 / k as f64]);
    }
    let vals = pts.iter().map(|p| p[0] * p[0]).collect();
    let cov = pts.iter().map(|p| vec![2.0 * p[0]]).collect();
    JetData::new(ClosedSet::finite(pts).unwrap(), vals, cov, None).unwrap()
}

#[test]
fn sine_on_an_axis_extends_within_tolerance() {
    let d = plane();
    let y = x_axis(&d);
    let f = ScalarField::new(|x| x[0].sin()).with_grad(|x| vec![x[0].cos(), 0.0]);
    let start = Instant::now();
    let r =
        extend_from_subspace(&f, &y, ExtendOptions::new(true).with_tol(1e-4), &ctx(&d)).unwrap();
    assert!(start.elapsed().as_secs() < 300);
    let c = &r.certificates;
    assert!(c.agreement <= 1e-4, "{c:?}");
    for p in y.samples() {
        assert!((r.field.value(p) - p[0].sin()).abs() <= 1e-4);
    }
    assert!(c.fd_holds && c.fd_tolerance <= 2e-4 + 1e-12, "{c:?}");
    assert!(c.lip_sampled <= 68.25 * r.lip_f, "{c:?}");
    assert!(r.stages.iter().all(|s| s.decay_holds()));
    assert!(c.passed());
}

#[test]
fn constant_and_linear_data_are_reproduced() {
    let d = plane();
    let y = x_axis(&d);
    let c = ScalarField::constant(0.7, 2);
    let r = extend_from_subspace(&c, &y, ExtendOptions::new(true), &ctx(&d)).unwrap();
    for p in d.net() {
        assert_eq!(r.field.value(&p), 0.7);
    }
    let lin = ScalarField::new(|x| 0.5 * x[0] - 0.2).with_grad(|_| vec![0.5, 0.0]);
    let r =
        extend_from_subspace(&lin, &y, ExtendOptions::new(false).with_tol(1e-5), &ctx(&d)).unwrap();
    assert!(r.certificates.agreement <= 1e-5);
    assert!(r.certificates.gradient_error <= r.eps);
}

#[test]
fn convex_segment_with_a_parabola() {
    let d = plane();
    let y = ClosedSet::segment(vec![-0.5, -0.25], vec![0.5, 0.25], 21).unwrap();
    let f = ScalarField::new(|x| x[0] * x[0]).with_grad(|x| vec![2.0 * x[0], 0.0]);
    let tol = 1e-4;
    let r =
        extend_from_convex_set(&f, &y, ExtendOptions::new(true).with_tol(tol), &ctx(&d)).unwrap();
    let c = &r.certificates;
    assert!(c.agreement <= tol, "{c:?}");
    assert!(c.fd_holds, "{c:?}");
    assert!(c.lip_sampled <= 68.25 * r.lip_f, "{c:?}");
    assert!(c.gradient_error < r.eps);
}

#[test]
fn convex_extension_rejects_a_subspace() {
    let d = plane();
    let f = ScalarField::new(|x| x[0]).with_grad(|_| vec![1.0, 0.0]);
    assert!(extend_from_convex_set(&f, &x_axis(&d), ExtendOptions::new(true), &ctx(&d)).is_err());
}

#[test]
fn alternating_family_fails_the_gate() {
    let d = WorkingDomain::cube(1, 0.0, 1.0, 0.01).unwrap();
    let start = Instant::now();
    let jet = alternating(40);
    let gate = GateOptions::default();
    let e = check_condition_e(&jet, &gate, d.norm).unwrap();
    let center = e.profiles.iter().find(|p| p.point[0] == 0.0).unwrap();
    let k = center.osc.len();
    for v in &center.osc[k - 3..] {
        assert!((1.9..=2.1).contains(v), "{:?}", center.osc);
    }
    assert!(!e.consistent);
    assert!(matches!(
        extend_from_jets(&jet, &gate, ExtendOptions::new(false), &ctx(&d)).unwrap(),
        JetExtension::GateFailed(_)
    ));
    assert!(start.elapsed().as_secs() < 10);
}

#[test]
fn parabola_family_passes_and_extends() {
    let d = WorkingDomain::cube(1, 0.0, 1.0, 0.01).unwrap();
    let start = Instant::now();
    let jet = parabola(40);
    let tol = 1e-4;
    match extend_from_jets(
        &jet,
        &GateOptions::default(),
        ExtendOptions::new(false).with_tol(tol),
        &ctx(&d),
    )
    .unwrap()
    {
        JetExtension::Extended { gate, result } => {
            assert!(gate.consistent);
            assert!(
                result.certificates.agreement <= tol,
                "{:?}",
                result.certificates
            );
        }
        JetExtension::GateFailed(e) => panic!("gate failed: {}", e.worst),
    }
    assert!(start.elapsed().as_secs() < 10);
}

#[test]
fn separating_function_of_a_half_plane() {
    let d = WorkingDomain::cube(2, -2.0, 2.0, 0.05).unwrap();
    let a: Vec<Vec<f64>> = d.net().into_iter().filter(|p| p[0] <= -0.5).collect();
    let a = ClosedSet::finite(a).unwrap();
    let s = separating_function(&a, &GateOptions::default(), &ctx(&d)).unwrap();
    let c = &s.certificates;
    assert_eq!(c.a_gap, 0.0, "{c:?}");
    assert_eq!(c.b_gap, 0.0, "{c:?}");
    assert!(c.range_min >= 0.0 && c.range_max <= 1.0);
    assert!(c.lip_sampled <= 2.0 * 68.25);
    assert!(c.passed);
}

#[test]
fn stage_failure_is_reported_with_a_budget() {
    let d = plane();
    let y = x_axis(&d);
    let f = ScalarField::new(|x| x[0].sin()).with_grad(|x| vec![x[0].cos(), 0.0]);
    let mut opts = ExtendOptions::new(true).with_tol(1e-4);
    opts.max_stages = 0;
    assert!(matches!(
        extend_from_subspace(&f, &y, opts, &ctx(&d)),
        Err(Error::StageFailed { stage: 0, .. })
    ));
}

#[test]
fn dense_samples_run_several_decaying_stages() {
    let d = plane();
    let samples: Vec<Vec<f64>> = (0..=400)
        .map(|i| vec![-1.0 + i as f64 * 0.005, 0.0])
        .collect();
    let y = ClosedSet::subspace(vec![vec![1.0, 0.0]], samples).unwrap();
    let f = ScalarField::new(|x| x[0].sin()).with_grad(|x| vec![x[0].cos(), 0.0]);
    let r =
        extend_from_subspace(&f, &y, ExtendOptions::new(true).with_tol(3e-11), &ctx(&d)).unwrap();
    assert!(r.stages.len() >= 2);
    assert!(r.stages.iter().all(|s| s.decay_holds()));
    assert!(r.certificates.agreement <= 3e-11);
}
