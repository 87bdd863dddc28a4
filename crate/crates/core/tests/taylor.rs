use c1ext::approx::Context;
use c1ext::base::{
    central_difference, make_constants, mcshane_extend, ClosedSet, Norm, ScalarField, WorkingDomain,
};
use c1ext::taylor::{
    approximate_with_derivative_control, approximate_with_jet_control, oscillation_cover, JetData,
    Measure, Restriction,
};
use c1ext::Error;

const FD_STEP: f64 = 1e-10;

fn sine_on_axis(step: f64) -> (WorkingDomain, ClosedSet, ScalarField, ScalarField) {
    let d = WorkingDomain::cube(2, -1.0, 1.0, step).unwrap();
    let y = ClosedSet::subspace_on_net(&d, vec![vec![1.0, 0.0]]).unwrap();
    let f = ScalarField::new(|x| x[0].sin()).with_grad(|x| vec![x[0].cos(), 0.0]);
    let vals: Vec<f64> = y.samples().iter().map(|p| p[0].sin()).collect();
    let ext = mcshane_extend(&y, &vals, 1.0, None, d.norm).unwrap();
    (d, y, f, ext)
}

fn ctx(d: &WorkingDomain) -> Context {
    Context::new(d.clone(), make_constants(1.0).unwrap()).unwrap()
}

fn pairwise_lip(vals: &[f64], pts: &[Vec<f64>], norm: Norm) -> f64 {
    let mut m = 0.0f64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            m = m.max((vals[i] - vals[j]).abs() / norm.dist(&pts[i], &pts[j]));
        }
    }
    m
}

#[test]
fn sine_on_an_axis_in_lipschitz_mode() {
    let (d, y, f, ext) = sine_on_axis(0.05);
    let eps = 0.25;
    let pass = approximate_with_derivative_control(&f, &y, &ext, eps, true, &ctx(&d)).unwrap();
    let g = &pass.field;
    let net = d.net();
    let vals: Vec<f64> = net.iter().map(|p| g.value(p)).collect();
    for (p, v) in net.iter().zip(&vals) {
        assert!((ext.value(p) - v).abs() < eps);
    }
    for p in y.samples() {
        let slope = central_difference(&|x| g.value(x), p, FD_STEP)[0];
        assert!(
            (slope - p[0].cos()).abs() < eps,
            "at {p:?}: {slope} vs {}",
            p[0].cos()
        );
        assert!((g.gradient(p).unwrap()[0] - slope).abs() < 1e-4);
    }
    let lip = pairwise_lip(&vals, &net, d.norm);
    assert!(lip <= 67.25, "Lip(G) = {lip}");
    let c = &pass.certificates;
    assert!(c.ledger_holds && c.oscillation_worst < c.oscillation_bound);
    assert!(c.c1_ratio < 1.0 && c.c2_worst <= eps / 8.0 && c.c2_lip_worst <= eps / 8.0);
    assert_eq!(c.max_active_per_level, 1);
    assert_eq!(c.base_active_on_y, 0);
    assert!(c.grad_sup <= eps / 4.0 + 67.0);
}

#[test]
fn gradient_matches_finite_differences() {
    let (d, y, f, ext) = sine_on_axis(0.1);
    let pass = approximate_with_derivative_control(&f, &y, &ext, 0.25, true, &ctx(&d)).unwrap();
    let g = &pass.field;
    for p in d.interior_net() {
        let fd = central_difference(&|x| g.value(x), &p, FD_STEP);
        let an = g.gradient(&p).unwrap();
        for (a, b) in fd.iter().zip(&an) {
            assert!(
                (a - b).abs() <= 1e-4 * (1.0 + b.abs()),
                "at {p:?}: {fd:?} vs {an:?}"
            );
        }
    }
}

#[test]
fn plain_mode_with_a_modulus_only_extension() {
    let d = WorkingDomain::cube(1, 0.0, 1.0, 0.02).unwrap();
    let pts: Vec<Vec<f64>> = vec![vec![0.2], vec![0.5], vec![0.8]];
    let y = ClosedSet::finite(pts.clone()).unwrap();
    let values = [0.0, 0.3, 0.1];
    let jet = JetData::new(
        y,
        values.to_vec(),
        vec![vec![1.0], vec![-2.0], vec![0.5]],
        None,
    )
    .unwrap();
    // piecewise linear through the values, constant outside
    let ext = ScalarField::new(move |x| {
        let t = x[0].clamp(0.2, 0.8);
        if t <= 0.5 {
            values[0] + (t - 0.2) / 0.3 * (values[1] - values[0])
        } else {
            values[1] + (t - 0.5) / 0.3 * (values[2] - values[1])
        }
    })
    .with_modulus(|r| r);
    let eps = 0.1;
    let pass = approximate_with_jet_control(&jet, &ext, eps, false, &ctx(&d)).unwrap();
    for p in d.net() {
        assert!((ext.value(&p) - pass.field.value(&p)).abs() < eps);
    }
    for (p, dv) in pts.iter().zip([1.0, -2.0, 0.5]) {
        let slope = central_difference(&|x| pass.field.value(x), p, FD_STEP)[0];
        assert!((slope - dv).abs() < eps, "at {p:?}: {slope}");
    }
    assert!(pass.certificates.ledger_holds);
}

#[test]
fn jets_on_a_finite_set_control_the_restricted_difference() {
    let d = WorkingDomain::cube(1, -1.0, 1.0, 0.01).unwrap();
    let pts: Vec<Vec<f64>> = (0..9).map(|i| vec![-0.8 + 0.2 * i as f64]).collect();
    let y = ClosedSet::finite(pts.clone()).unwrap();
    let values: Vec<f64> = pts.iter().map(|p| p[0] * p[0]).collect();
    let covectors: Vec<Vec<f64>> = pts.iter().map(|p| vec![2.0 * p[0]]).collect();
    let jet = JetData::new(y.clone(), values.clone(), covectors, Some(1.6)).unwrap();
    let ext = mcshane_extend(&y, &values, 1.6, None, d.norm).unwrap();
    let eps = 0.3;
    let pass = approximate_with_jet_control(&jet, &ext, eps, true, &ctx(&d)).unwrap();
    let g: Vec<f64> = pts.iter().map(|p| pass.field.value(p)).collect();
    let diff: Vec<f64> = values.iter().zip(&g).map(|(a, b)| a - b).collect();
    assert!(pairwise_lip(&diff, &pts, d.norm) < eps);
    for p in &pts {
        let slope = central_difference(&|x| pass.field.value(x), p, FD_STEP)[0];
        assert!((slope - 2.0 * p[0]).abs() < eps);
    }
    let c = &pass.certificates;
    assert!(c.c2_lip_worst <= eps / 8.0);
    assert!(c.lip_sampled <= eps / 4.0 + 34.0 * 1.6 + 33.0 * 1.6);
}

#[test]
fn oscillation_cover_certifies_each_ball() {
    let d = WorkingDomain::cube(1, 0.0, 3.0, 0.01).unwrap();
    let pts: Vec<Vec<f64>> = (0..=300).map(|i| vec![i as f64 * 0.01]).collect();
    let y = ClosedSet::finite(pts.clone()).unwrap();
    let values: Vec<f64> = pts.iter().map(|p| p[0].sin()).collect();
    let covectors: Vec<Vec<f64>> = pts.iter().map(|p| vec![p[0].cos()]).collect();
    let jet = JetData::new(y, values, covectors.clone(), None).unwrap();
    let r = Restriction::new(vec![vec![1.0]], 1, Norm::Euclidean, Measure::Restricted).unwrap();
    let eps = 0.4;
    let cover = oscillation_cover(&jet, &r, eps, 1.0, &d).unwrap();
    let bound = eps / 8.0;
    let mut covered = vec![false; pts.len()];
    for ((&c, &rad), members) in cover.centers.iter().zip(&cover.radii).zip(&cover.members) {
        for (i, p) in pts.iter().enumerate() {
            let inside = (p[0] - pts[c][0]).abs() < rad;
            assert_eq!(inside, members.contains(&i));
            if inside {
                covered[i] = true;
                assert!((covectors[i][0] - covectors[c][0]).abs() < bound);
            }
        }
    }
    assert!(covered.iter().all(|&v| v));
}

#[test]
fn errors() {
    let (d, y, f, ext) = sine_on_axis(0.1);
    let c = ctx(&d);
    let shifted = ScalarField::new(move |x| ext.value(x) + 0.01).with_lip(1.0);
    assert!(matches!(
        approximate_with_derivative_control(&f, &y, &shifted, 0.25, true, &c),
        Err(Error::RestrictionMismatch(_))
    ));
    let (_, _, _, ext) = sine_on_axis(0.1);
    assert!(approximate_with_derivative_control(&f, &y, &ext, 1.5, true, &c).is_err());
    let plane = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
    assert!(matches!(
        Restriction::new(plane, 3, Norm::Max, Measure::Restricted),
        Err(Error::Unsupported(_))
    ));
}
