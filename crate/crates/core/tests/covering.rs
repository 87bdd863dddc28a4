use std::sync::Arc;

use c1ext::base::{make_constants, Norm, WorkingDomain};
use c1ext::covering::{build_partition, rudin_refine, CoverRefinement, OpenCover, Region};
use c1ext::smoothing::QuasiInterpolation;
use c1ext::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit(step: f64) -> WorkingDomain {
    WorkingDomain::cube(1, 0.0, 1.0, step).unwrap()
}

fn two_intervals() -> OpenCover {
    OpenCover::new(
        vec![1, 2],
        vec![
            Region::Balls(vec![(vec![0.25], 0.45)]),
            Region::Balls(vec![(vec![0.8], 0.45)]),
        ],
    )
    .unwrap()
}

fn members(refinement: &CoverRefinement) -> Vec<(usize, usize)> {
    refinement
        .levels
        .iter()
        .flat_map(|l| l.owner_set().into_iter().map(move |r| (l.n, r)))
        .collect()
}

#[test]
fn single_set_cover_is_one_level() {
    let d = unit(1e-2);
    let refinement = rudin_refine(&OpenCover::whole_box(), &d, 16).unwrap();
    assert_eq!(refinement.n_levels(), 1);
    assert!(!refinement.level(1).centers.is_empty());
    let pu = build_partition(
        refinement,
        &QuasiInterpolation::new(d.clone()).unwrap(),
        make_constants(1.0).unwrap(),
    )
    .unwrap();
    for p in d.net() {
        let act = pu.evaluate(&p);
        assert_eq!(act.len(), 1);
        assert_eq!(act[0].value, 1.0);
    }
}

#[test]
fn two_intervals_satisfy_the_refinement_properties() {
    let d = unit(1e-3);
    let cover = two_intervals();
    let refinement = rudin_refine(&cover, &d, 16).unwrap();
    let net = d.net();
    let h = d.net_step;
    for (n, r) in members(&refinement) {
        let in_v: Vec<&Vec<f64>> = net.iter().filter(|x| refinement.in_v(n, r, x)).collect();
        let in_w: Vec<bool> = net.iter().map(|x| refinement.in_w(n, r, x)).collect();
        // (i)
        for x in &in_v {
            assert!(refinement.in_w(n, r, x));
        }
        for (x, &w) in net.iter().zip(&in_w) {
            if w {
                assert!(cover.regions[r].contains(x, Norm::Euclidean));
            }
        }
        // (ii)
        let outside: Vec<f64> = net
            .iter()
            .zip(&in_w)
            .filter(|(_, w)| !**w)
            .map(|(x, _)| x[0])
            .collect();
        let gap = in_v
            .iter()
            .flat_map(|v| outside.iter().map(move |o| (v[0] - o).abs()))
            .fold(f64::INFINITY, f64::min);
        assert!(
            gap >= 0.5f64.powi(n as i32 + 1) - 2.0 * h,
            "level {n}: gap {gap}"
        );
        // (iii)
        for (n2, r2) in members(&refinement) {
            if n2 != n || r2 <= r {
                continue;
            }
            let mine: Vec<f64> = net
                .iter()
                .filter(|x| refinement.in_w(n, r, x))
                .map(|x| x[0])
                .collect();
            let theirs: Vec<f64> = net
                .iter()
                .filter(|x| refinement.in_w(n, r2, x))
                .map(|x| x[0])
                .collect();
            let sep = mine
                .iter()
                .flat_map(|a| theirs.iter().map(move |b| (a - b).abs()))
                .fold(f64::INFINITY, f64::min);
            assert!(
                sep >= 0.5f64.powi(n as i32 + 1) - 2.0 * h,
                "level {n}: W separation {sep}"
            );
        }
    }
    // (iv), checked against every center directly
    for x in &net {
        let loc = refinement.locality(x).expect("net point is captured");
        for level in &refinement.levels {
            let mut owners: Vec<usize> = level
                .centers
                .iter()
                .zip(&level.owners)
                .filter(|(c, _)| (c[0] - x[0]).abs() < loc.s + level.outer)
                .map(|(_, &o)| o)
                .collect();
            owners.dedup();
            if level.n > loc.n {
                assert!(owners.is_empty());
            } else {
                assert!(owners.len() <= 1);
            }
        }
    }
    let audit = refinement.audit();
    assert_eq!(audit.locality_failures, 0);
    assert!(audit
        .w_separation
        .iter()
        .zip(1..)
        .all(|(s, n)| *s >= 0.5f64.powi(n + 1)));
}

#[test]
fn cover_errors() {
    let d = unit(1e-2);
    let gap = OpenCover::new(vec![1], vec![Region::Balls(vec![(vec![0.0], 0.5)])]).unwrap();
    assert!(matches!(
        rudin_refine(&gap, &d, 16),
        Err(Error::CoverGap(_))
    ));
    assert!(matches!(
        rudin_refine(&two_intervals(), &d, 1),
        Err(Error::InsufficientLevels { .. })
    ));
}

fn plane_partition() -> (WorkingDomain, Arc<c1ext::covering::PartitionOfUnity>) {
    let d = WorkingDomain::cube(2, 0.0, 1.0, 0.01).unwrap();
    let cover = OpenCover::new(
        vec![0, 3, 7],
        vec![
            Region::Balls(vec![(vec![0.0, 0.0], 0.8)]),
            Region::Balls(vec![(vec![1.0, 0.2], 0.75)]),
            Region::Balls(vec![(vec![0.5, 1.0], 0.7), (vec![1.0, 1.0], 0.5)]),
        ],
    )
    .unwrap();
    let refinement = rudin_refine(&cover, &d, 16).unwrap();
    let oracle = QuasiInterpolation::new(d.clone()).unwrap();
    let pu = build_partition(refinement, &oracle, make_constants(1.0).unwrap()).unwrap();
    (d, Arc::new(pu))
}

#[test]
fn partition_sums_to_one_and_respects_supports() {
    let (d, pu) = plane_partition();
    let net = d.net();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let x = &net[rng.gen_range(0..net.len())];
        let act = pu.evaluate(x);
        let total: f64 = act.iter().map(|m| m.value).sum();
        assert!((total - 1.0).abs() <= 1e-9, "sum {total} at {x:?}");
        for m in &act {
            assert!(m.value >= 0.0);
            assert!(pu.refinement().in_w(m.level, m.owner, x));
        }
        // telescoping: sum of members equals 1 - prod(1 - h_n)
        let prod: f64 = (1..=pu.n_levels()).map(|n| 1.0 - pu.h(n, x).0).product();
        assert!((total - (1.0 - prod)).abs() < 1e-12);
    }
    for (n, r) in pu.members() {
        for x in net.iter().step_by(13) {
            if !pu.refinement().in_w(n, r, x) {
                assert_eq!(pu.member(n, r, x).0, 0.0);
            }
        }
    }
}

#[test]
fn partition_members_meet_their_lipschitz_bounds() {
    let (d, pu) = plane_partition();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (n, r) in pu.members() {
        let bound = 32.0 * (2f64.powi(n as i32) - 1.0);
        let psi = pu.member_field(n, r);
        assert_eq!(psi.lip_bound(), Some(bound));
        let mut worst = 0.0f64;
        for _ in 0..4000 {
            let a = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let step = d.net_step * rng.gen_range(0.05..2.0);
            let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let b = [
                (a[0] + step * t.cos()).clamp(0.0, 1.0),
                (a[1] + step * t.sin()).clamp(0.0, 1.0),
            ];
            let dist = Norm::Euclidean.dist(&a, &b);
            if dist > 0.0 {
                worst = worst.max((psi.value(&a) - psi.value(&b)).abs() / dist);
            }
        }
        assert!(worst <= bound, "member ({n},{r}): {worst} > {bound}");
    }
}
