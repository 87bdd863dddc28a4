//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::time::{Duration, Instant};

use c1ext::approx::Context;
use c1ext::base::{
    make_constants, mcshane_extend, ClosedSet, Norm, PointIndex, ScalarField, WorkingDomain,
};
use c1ext::cli::{run, Overrides, ReportFormat, Verb};
use c1ext::covering::{build_partition, rudin_refine, OpenCover, PartitionOfUnity, Region};
use c1ext::engine::{
    check_condition_e, extend_from_convex_set, extend_from_jets, extend_from_subspace,
    separating_function, ExtendOptions, ExtensionResult, GateOptions, JetExtension,
};
use c1ext::smoothing::{smooth_lipschitz_approx, QuasiInterpolation};
use c1ext::taylor::{approximate_with_derivative_control, JetData};
use rayon::prelude::*;

type Outcome = Result<String, String>;

/// Name, check, runtime budget in seconds.
type Criterion = (&'static str, fn() -> Outcome, Option<u64>);

const EXTENSION_SPEC: &str = r#"{
  "domain": {"dimension": 2, "box": [[-1, 1], [-1, 1]], "net_step": 0.05},
  "set": {"kind": "subspace", "basis": [[1, 0]]},
  "function": {"name": "sin", "axis": 0},
  "mode": "subspace",
  "tolerances": {"tol": 1e-4}
}
"#;

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn pairwise(points: &[Vec<f64>], values: &[f64], norm: Norm) -> f64 {
    (0..points.len())
        .into_par_iter()
        .map(|i| {
            let mut m = 0.0f64;
            for j in i + 1..points.len() {
                let d = norm.dist(&points[i], &points[j]);
                if d > 0.0 {
                    m = m.max((values[i] - values[j]).abs() / d);
                }
            }
            m
        })
        .reduce(|| 0.0, f64::max)
}

fn central(f: &ScalarField, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut p = x.to_vec();
            let mut m = x.to_vec();
            p[i] += h;
            m[i] -= h;
            (f.value(&p) - f.value(&m)) / (2.0 * h)
        })
        .collect()
}

fn ctx(d: &WorkingDomain) -> Context {
    Context::new(d.clone(), make_constants(1.0).unwrap()).unwrap()
}

fn constants() -> Outcome {
    let c = make_constants(1.0).map_err(|e| e.to_string())?;
    check(
        c.c1 == 33.0 && c.r == 67.0 && c.c2 == 67.25 && c.c3 == 68.25,
        format!("{c:?}"),
    )?;
    Ok(format!(
        "C1 = {}, R = {}, C2 = {}, C3 = {}",
        c.c1, c.r, c.c2, c.c3
    ))
}

fn oracle_suite() -> Outcome {
    let d = WorkingDomain::cube(1, -1.0, 1.0, 1e-3).unwrap();
    let knots = [-1.0, -0.6, -0.2, 0.2, 0.6, 1.0];
    let vals = [0.0, 0.4, -0.2, 0.3, 0.3, -0.5];
    let pl = move |t: f64| {
        let i = knots.iter().rposition(|k| *k <= t).unwrap_or(0).min(4);
        vals[i] + (t - knots[i]) * (vals[i + 1] - vals[i]) / (knots[i + 1] - knots[i])
    };
    let suite = [
        ("abs", ScalarField::new(|x| x[0].abs()).with_lip(1.0), 1.0),
        ("sin", ScalarField::new(|x| x[0].sin()).with_lip(1.0), 1.0),
        (
            "piecewise-linear",
            ScalarField::new(move |x| pl(x[0])).with_lip(2.0),
            2.0,
        ),
    ];
    let net = d.net();
    let mut worst_err = 0.0f64;
    let mut worst_fd = 0.0f64;
    for (name, f, lip) in &suite {
        for eps in [0.1, 0.01] {
            let (k, _) = smooth_lipschitz_approx(f, eps, &d).map_err(|e| format!("{name}: {e}"))?;
            let kv: Vec<f64> = net.par_iter().map(|p| k.value(p)).collect();
            let err = net
                .iter()
                .zip(&kv)
                .map(|(p, v)| (f.value(p) - v).abs())
                .fold(0.0, f64::max);
            check(err < eps, format!("{name}, eps {eps}: net error {err}"))?;
            // on a line the net Lipschitz constant is the largest adjacent quotient
            let lip_k = kv
                .windows(2)
                .map(|w| (w[1] - w[0]).abs() / d.net_step)
                .fold(0.0, f64::max);
            let grad_k = net
                .iter()
                .map(|p| k.gradient(p).unwrap()[0].abs())
                .fold(0.0, f64::max);
            check(
                lip_k.max(grad_k) <= lip + 1e-9,
                format!("{name}, eps {eps}: Lip(K) {}", lip_k.max(grad_k)),
            )?;
            let fd = d
                .interior_net()
                .par_iter()
                .map(|p| (central(&k, p, 1e-6)[0] - k.gradient(p).unwrap()[0]).abs())
                .reduce(|| 0.0, f64::max);
            check(fd <= 1e-4, format!("{name}, eps {eps}: gradient gap {fd}"))?;
            worst_err = worst_err.max(err / eps);
            worst_fd = worst_fd.max(fd);
        }
    }
    Ok(format!(
        "worst error/eps {worst_err:.3}, worst gradient gap {worst_fd:.1e}"
    ))
}

fn partition_audit(name: &str, cover: &OpenCover, d: &WorkingDomain) -> Result<usize, String> {
    let refinement = rudin_refine(cover, d, 16).map_err(|e| format!("{name}: {e}"))?;
    let pu: PartitionOfUnity = build_partition(
        refinement,
        &QuasiInterpolation::new(d.clone()).unwrap(),
        make_constants(1.0).unwrap(),
    )
    .map_err(|e| format!("{name}: {e}"))?;
    let r = pu.refinement();
    let net = d.net();
    let h = d.net_step;
    let members = pu.members();
    let bad_sum = net
        .par_iter()
        .map(|x| (pu.sum(x) - 1.0).abs())
        .reduce(|| 0.0, f64::max);
    check(
        bad_sum <= 1e-9,
        format!("{name}: |sum psi - 1| = {bad_sum}"),
    )?;
    for &(n, o) in &members {
        let in_w: Vec<bool> = net.iter().map(|x| r.in_w(n, o, x)).collect();
        let leak = net
            .par_iter()
            .zip(&in_w)
            .filter(|(_, w)| !**w)
            .any(|(x, _)| pu.member(n, o, x).0 != 0.0);
        check(
            !leak,
            format!("{name}: member ({n},{o}) is nonzero outside its W"),
        )?;
        // Lipschitz bound over horizontally, vertically and diagonally adjacent net pairs
        let bound = 32.0 * (2f64.powi(n as i32) - 1.0);
        let psi: Vec<f64> = net.par_iter().map(|x| pu.member(n, o, x).0).collect();
        let side = d.axis_counts()[1];
        let mut worst = 0.0f64;
        for (i, x) in net.iter().enumerate() {
            for j in [i + 1, i + side, i + side + 1] {
                if j < net.len() && (j != i + 1 || (i + 1) % side != 0) {
                    worst = worst.max((psi[i] - psi[j]).abs() / Norm::Euclidean.dist(x, &net[j]));
                }
            }
        }
        check(
            worst <= bound,
            format!("{name}: Lip psi({n},{o}) = {worst} > {bound}"),
        )?;
        // dist(V, box \ W) >= 2^-(n+1) on the net
        let v: Vec<Vec<f64>> = net.iter().filter(|x| r.in_v(n, o, x)).cloned().collect();
        let sep = 0.5f64.powi(n as i32 + 1) - 2.0 * h;
        if !v.is_empty() {
            let vi = PointIndex::new(v, Norm::Euclidean).unwrap();
            let gap = net
                .iter()
                .zip(&in_w)
                .filter(|(_, w)| !**w)
                .map(|(x, _)| vi.nearest(x).1)
                .fold(f64::INFINITY, f64::min);
            check(gap >= sep, format!("{name}: V/W gap {gap} at level {n}"))?;
        }
        // distinct owners at one level keep their W sets apart
        for &(n2, o2) in &members {
            if n2 != n || o2 <= o {
                continue;
            }
            let mine: Vec<Vec<f64>> = net
                .iter()
                .zip(&in_w)
                .filter(|(_, w)| **w)
                .map(|(x, _)| x.clone())
                .collect();
            let theirs: Vec<Vec<f64>> = net.iter().filter(|x| r.in_w(n, o2, x)).cloned().collect();
            if mine.is_empty() || theirs.is_empty() {
                continue;
            }
            let ti = PointIndex::new(theirs, Norm::Euclidean).unwrap();
            let gap = mine
                .iter()
                .map(|x| ti.nearest(x).1)
                .fold(f64::INFINITY, f64::min);
            check(
                gap >= sep,
                format!("{name}: W separation {gap} at level {n}"),
            )?;
        }
    }
    Ok(members.len())
}

fn partition_suite() -> Outcome {
    let d = WorkingDomain::cube(2, 0.0, 1.0, 1e-2).unwrap();
    let two = OpenCover::new(
        vec![1, 2],
        vec![
            Region::Balls(vec![(vec![0.0, 0.0], 1.1)]),
            Region::Balls(vec![(vec![1.0, 1.0], 1.1)]),
        ],
    )
    .unwrap();
    let corners = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
    let mut regions: Vec<Region> = corners
        .iter()
        .map(|c| Region::Balls(vec![(c.to_vec(), 0.6)]))
        .collect();
    regions.push(Region::Balls(vec![(vec![0.5, 0.5], 0.3)]));
    let five = OpenCover::new((1..=5).collect(), regions).unwrap();
    let m2 = partition_audit("2-set", &two, &d)?;
    let m5 = partition_audit("5-set", &five, &d)?;
    Ok(format!(
        "{m2} and {m5} members audited on {} net points",
        d.net_len()
    ))
}

fn single_pass_suite() -> Outcome {
    let d = WorkingDomain::cube(2, -1.0, 1.0, 0.05).unwrap();
    let y = ClosedSet::subspace_on_net(&d, vec![vec![1.0, 0.0]]).unwrap();
    let f = ScalarField::new(|x| x[0].sin()).with_grad(|x| vec![x[0].cos(), 0.0]);
    let vals: Vec<f64> = y.samples().iter().map(|p| p[0].sin()).collect();
    let lip_f = pairwise(y.samples(), &vals, d.norm);
    let ext = mcshane_extend(&y, &vals, lip_f, None, d.norm).map_err(|e| e.to_string())?;
    let eps = 0.25;
    let pass = approximate_with_derivative_control(&f, &y, &ext, eps, true, &ctx(&d))
        .map_err(|e| e.to_string())?;
    let g = &pass.field;
    let net = d.net();
    let gv: Vec<f64> = net.par_iter().map(|p| g.value(p)).collect();
    let approx = net
        .iter()
        .zip(&gv)
        .map(|(p, v)| (ext.value(p) - v).abs())
        .fold(0.0, f64::max);
    check(approx < eps, format!("|F - G| = {approx}"))?;
    let deriv = y
        .samples()
        .iter()
        .map(|p| (p[0].cos() - g.gradient(p).unwrap()[0]).abs())
        .fold(0.0, f64::max);
    check(deriv < eps, format!("|P_Y(f' - G')| = {deriv}"))?;
    let lip_ext = pairwise(
        &net,
        &net.iter().map(|p| ext.value(p)).collect::<Vec<_>>(),
        d.norm,
    );
    let lip_g = pairwise(&net, &gv, d.norm);
    check(
        lip_g <= 67.25 * lip_ext,
        format!("Lip(G) = {lip_g} > 67.25 * {lip_ext}"),
    )?;
    Ok(format!(
        "|F - G| {approx:.2e}, derivative gap {deriv:.2e}, Lip(G) {lip_g:.4} <= {:.2}",
        67.25 * lip_ext
    ))
}

fn extension_suite() -> Outcome {
    let d = WorkingDomain::cube(2, -1.0, 1.0, 0.05).unwrap();
    let y = ClosedSet::subspace_on_net(&d, vec![vec![1.0, 0.0]]).unwrap();
    let f = ScalarField::new(|x| x[0].sin())
        .with_grad(|x| vec![x[0].cos(), 0.0])
        .with_lip(1.0);
    let tol = 1e-4;
    let h: ExtensionResult =
        extend_from_subspace(&f, &y, ExtendOptions::new(true).with_tol(tol), &ctx(&d))
            .map_err(|e| e.to_string())?;
    let agree = y
        .samples()
        .iter()
        .map(|p| (h.field.value(p) - p[0].sin()).abs())
        .fold(0.0, f64::max);
    check(agree <= tol, format!("|H - f| = {agree}"))?;
    let fd = d
        .interior_net()
        .par_iter()
        .map(|p| {
            let g = h.field.gradient(p).unwrap();
            central(&h.field, p, 1e-10)
                .iter()
                .zip(&g)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    check(fd <= 2e-4, format!("gradient vs differences {fd}"))?;
    let net = d.net();
    let hv: Vec<f64> = net.par_iter().map(|p| h.field.value(p)).collect();
    let lip_h = pairwise(&net, &hv, d.norm);
    check(lip_h <= 68.25, format!("Lip(H) = {lip_h}"))?;
    for s in h.stages.iter().filter(|s| s.n >= 2) {
        let claim = h.eps / 2f64.powi(s.n as i32 - 2);
        check(
            s.bound <= claim,
            format!("stage {}: bound {} > {claim}", s.n, s.bound),
        )?;
    }
    let decay = if h.stages.len() < 2 {
        " (no stage n >= 2 recorded)"
    } else {
        ""
    };
    Ok(format!(
        "{} stage(s){decay}, |H - f| {agree:.1e}, gradient gap {fd:.1e}, Lip(H) {lip_h:.4} <= 68.25",
        h.depth
    ))
}

fn convex_suite() -> Outcome {
    let d = WorkingDomain::cube(2, -1.0, 1.0, 0.05).unwrap();
    let (a, b) = (vec![-0.5, -0.25], vec![0.5, 0.25]);
    let y = ClosedSet::segment(a.clone(), b.clone(), 21).unwrap();
    let f = ScalarField::new(|x| x[0] * x[0]).with_grad(|x| vec![2.0 * x[0], 0.0]);
    let tol = 1e-4;
    let opts = ExtendOptions::new(true).with_tol(tol);
    let h = extend_from_convex_set(&f, &y, opts, &ctx(&d)).map_err(|e| e.to_string())?;
    let agree = y
        .samples()
        .iter()
        .map(|p| (h.field.value(p) - p[0] * p[0]).abs())
        .fold(0.0, f64::max);
    check(agree <= tol, format!("|H - f| = {agree}"))?;
    let len = Norm::Euclidean.dist(&a, &b);
    let u = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
    let z_gap = y
        .samples()
        .iter()
        .map(|p| {
            let g = h.field.gradient(p).unwrap();
            ((g[0] - 2.0 * p[0]) * u[0] + g[1] * u[1]).abs()
        })
        .fold(0.0, f64::max);
    let first_pass = h.eps / (2.0 * 67.25);
    check(
        z_gap <= first_pass,
        format!("Z* gradient gap {z_gap} > {first_pass}"),
    )?;
    let fy: Vec<f64> = y.samples().iter().map(|p| p[0] * p[0]).collect();
    let lip_fy = pairwise(y.samples(), &fy, d.norm);
    let bound = h.certificates.lip_bound.unwrap_or(f64::INFINITY);
    check(
        bound <= 68.25 * lip_fy * (1.0 + 1e-12),
        format!("Lip bound {bound} > 68.25 * {lip_fy}"),
    )?;
    let net = d.net();
    let hv: Vec<f64> = net.par_iter().map(|p| h.field.value(p)).collect();
    let lip_h = pairwise(&net, &hv, d.norm);
    check(lip_h <= bound, format!("Lip(H) = {lip_h} > {bound}"))?;
    Ok(format!(
        "|H - f| {agree:.1e}, Z* gap {z_gap:.1e}, Lip(H) {lip_h:.4} <= {bound:.4} = 68.25 Lip(f|Y)"
    ))
}

fn harmonic(value: impl Fn(f64, usize) -> f64, deriv: impl Fn(f64) -> f64) -> JetData {
    let mut pts = vec![vec![0.0]];
    pts.extend((2..=40).map(|k| vec![1.0 / k as f64]));
    let values = std::iter::once(0.0)
        .chain((2..=40).map(|k| value(1.0 / k as f64, k)))
        .collect();
    let covectors = pts.iter().map(|p| vec![deriv(p[0])]).collect();
    JetData::new(ClosedSet::finite(pts).unwrap(), values, covectors, None).unwrap()
}

fn whitney_gate() -> Outcome {
    let d = WorkingDomain::cube(1, 0.0, 1.0, 0.01).unwrap();
    let gate = GateOptions::default();
    let alt = harmonic(|t, k| if k % 2 == 0 { t * t } else { -t * t }, |_| 0.0);
    let profile = check_condition_e(&alt, &gate, d.norm).map_err(|e| e.to_string())?;
    let at_zero = &profile.profiles[0];
    // independent oracle: all sample pairs in B(0, r), D(0) = 0
    let pts: Vec<f64> = alt.samples().iter().map(|p| p[0]).collect();
    for (r, osc) in at_zero.radii.iter().zip(&at_zero.osc) {
        let mut m = 0.0f64;
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                if i != j && pts[i] < *r && pts[j] < *r {
                    m = m.max((alt.values[i] - alt.values[j]).abs() / (pts[i] - pts[j]).abs());
                }
            }
        }
        check(
            (m - osc).abs() <= 1e-12 * m.max(1.0),
            format!("profile at r = {r}: {osc} vs oracle {m}"),
        )?;
    }
    let tail = &at_zero.osc[at_zero.osc.len() - 3..];
    check(
        tail.iter().all(|v| (1.9..=2.1).contains(v)),
        format!("plateau {tail:?}"),
    )?;
    let tol = 1e-4;
    match extend_from_jets(
        &alt,
        &gate,
        ExtendOptions::new(false).with_tol(tol),
        &ctx(&d),
    )
    .map_err(|e| e.to_string())?
    {
        JetExtension::GateFailed(_) => {}
        JetExtension::Extended { .. } => return Err("alternating family passed the gate".into()),
    }
    let parabola = harmonic(|t, _| t * t, |t| 2.0 * t);
    let h = match extend_from_jets(
        &parabola,
        &gate,
        ExtendOptions::new(false).with_tol(tol),
        &ctx(&d),
    )
    .map_err(|e| e.to_string())?
    {
        JetExtension::Extended { result, .. } => result,
        JetExtension::GateFailed(e) => return Err(format!("parabola rejected at {}", e.worst)),
    };
    let agree = parabola
        .samples()
        .iter()
        .map(|p| (h.field.value(p) - p[0] * p[0]).abs())
        .fold(0.0, f64::max);
    check(agree <= tol, format!("parabola |H - f| = {agree}"))?;
    Ok(format!(
        "plateau [{:.4}, {:.4}, {:.4}], gate rejects; parabola extends with |H - f| {agree:.1e}",
        tail[0], tail[1], tail[2]
    ))
}

fn separation() -> Outcome {
    let d = WorkingDomain::cube(2, -2.0, 2.0, 0.05).unwrap();
    let net = d.net();
    let a_pts: Vec<Vec<f64>> = net.iter().filter(|p| p[0] <= -0.5).cloned().collect();
    let a = ClosedSet::finite(a_pts.clone()).unwrap();
    let s =
        separating_function(&a, &GateOptions::default(), &ctx(&d)).map_err(|e| e.to_string())?;
    let hv: Vec<f64> = net.par_iter().map(|p| s.field.value(p)).collect();
    let on_a = net
        .iter()
        .zip(&hv)
        .filter(|(p, _)| p[0] <= -0.5)
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max);
    check(on_a == 0.0, format!("max |h| on A = {on_a}"))?;
    // distance to a half-plane sampled on the net: brute force over A
    let far = net
        .par_iter()
        .zip(&hv)
        .filter(|(p, _)| a_pts.iter().all(|q| Norm::Euclidean.dist(p, q) >= 1.0))
        .map(|(_, v)| (1.0 - v).abs())
        .reduce(|| 0.0, f64::max);
    check(far == 0.0, format!("max |1 - h| far from A = {far}"))?;
    let (lo, hi) = hv
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
            (l.min(*v), h.max(*v))
        });
    check(lo >= 0.0 && hi <= 1.0, format!("range [{lo}, {hi}]"))?;
    let lip = pairwise(&net, &hv, d.norm);
    check(lip <= 2.0 * 68.25, format!("Lip(h) = {lip}"))?;
    Ok(format!(
        "h = 0 on A, 1 far from A, range [{lo}, {hi}], Lip(h) {lip:.4} <= 136.5"
    ))
}

fn determinism() -> Outcome {
    let render = || -> Result<String, String> {
        let out =
            run(EXTENSION_SPEC, Verb::Extend, &Overrides::default()).map_err(|e| e.to_string())?;
        Ok(out.report.render(ReportFormat::Object))
    };
    let (first, second) = (render()?, render()?);
    check(first == second, "reports differ")?;
    Ok(format!(
        "two reports of {} bytes are identical",
        first.len()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("constants", constants, None),
        ("oracle suite", oracle_suite, Some(10)),
        ("partition suite", partition_suite, Some(60)),
        ("single-pass suite", single_pass_suite, Some(120)),
        ("extension suite", extension_suite, Some(300)),
        ("convex-set suite", convex_suite, None),
        ("Whitney gate", whitney_gate, Some(10)),
        ("separating function", separation, None),
        ("determinism", determinism, None),
    ];
    let mut failed = 0;
    for (i, (name, criterion, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut outcome = criterion();
        let took = start.elapsed();
        if let (Ok(_), Some(b)) = (&outcome, budget) {
            if took > Duration::from_secs(*b) {
                outcome = Err(format!("took {took:.1?}, budget {b} s"));
            }
        }
        match outcome {
            Ok(detail) => println!("criterion {}: {name}: PASS ({took:.1?}) {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: {name}: FAIL ({took:.1?}) {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
