use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sdp_compose::{semantics, Diagram};
use sdp_compositional::{
    approx_multiobj_sd, canonicalize, check_single_exit, compose_approximations,
    compose_error_bounds, extract_scheduler, measure_error, node_error_bound, replay, BoundKind,
    CompError, CurveCache, Hasher, Op,
};
use sdp_core::{Arity, OpenMdp, Rational, Scalar};
use sdp_geometry::{LowerSet, Norm, UpperSet};
use sdp_multiobj::{EntranceApprox, SoundApproximation};
use sdp_testkit::fixtures::{fork, funnel, leaky_mirror, merge, room_a, room_b, two_exit};
use sdp_testkit::{arity, dm_points, exact_pareto, q, random_diagram, random_omdp, LeafLimits};

type Q = Rational;

/// Approximation with explicit lower and upper vertices per entrance.
fn given(ar: Arity, per: Vec<(Vec<Vec<Q>>, Vec<Vec<Q>>)>) -> SoundApproximation<Q> {
    let nx = ar.exits();
    SoundApproximation {
        arity: ar,
        eta: 0.0,
        entrances: per
            .into_iter()
            .map(|(l, u)| EntranceApprox {
                exits: (0..nx).collect(),
                num_exits: nx,
                lower: LowerSet::from_points(nx, l).unwrap(),
                upper: UpperSet::from_vertices(nx, u).unwrap(),
                schedulers: Vec::new(),
                queries: 0,
                gap_history: Vec::new(),
            })
            .collect(),
    }
}

fn exact(ar: Arity, per: Vec<Vec<Vec<Q>>>) -> SoundApproximation<Q> {
    given(ar, per.into_iter().map(|p| (p.clone(), p)).collect())
}

#[test]
fn leaf_diagram_gives_leaf_curve() {
    let d = Diagram::leaf("T", two_exit::<Q>());
    let r = approx_multiobj_sd(&d, 1e-6, &CurveCache::new()).unwrap();
    let mut pts = r.approx().entrances[0].lower_points();
    pts.sort();
    assert_eq!(
        pts,
        vec![vec![q(1, 5), q(2, 5)], vec![q(27, 100), q(3, 10)], vec![q(3, 10), q(1, 10)]]
    );
}

#[test]
fn bouncing_explodes_the_error() {
    let a = exact(arity(1, 0, 1, 1), vec![vec![vec![q(1, 1)]], vec![vec![q(1, 1)]]]);
    let b = given(
        arity(1, 1, 1, 0),
        vec![(vec![vec![q(1, 1000), q(99, 100)]], vec![vec![q(9, 1000), q(99, 100)]])],
    );
    let c = compose_approximations(Op::Seq, &[&a, &b], 1e-9).unwrap();
    let e = &c.approx.entrances[0];
    assert_eq!(e.lower_points(), vec![vec![q(1, 10)]]);
    assert_eq!(e.upper_points().unwrap(), vec![vec![q(9, 10)]]);
    assert_eq!(measure_error(&c.approx, Norm::Linf).unwrap(), q(4, 5));
    assert!(measure_error(&b, Norm::Linf).unwrap() <= q(1, 100));
}

#[test]
fn bouncing_with_real_leaves() {
    for (pass, want) in [(q(9, 1000), q(9, 10)), (q(1, 1000), q(1, 10))] {
        let d = Diagram::seq(vec![
            Diagram::leaf("A", funnel()),
            Diagram::leaf("B", leaky_mirror(pass)),
        ]);
        let r = approx_multiobj_sd(&d, 0.0, &CurveCache::new()).unwrap();
        assert_eq!(r.approx().entrances[0].lower_points(), vec![vec![want.clone()]]);
        assert_eq!(measure_error(r.approx(), Norm::Linf).unwrap(), q(0, 1));
    }
}

#[test]
fn rightward_example_and_bound() {
    let a = given(
        arity(1, 0, 2, 0),
        vec![(vec![vec![q(3, 10), q(1, 5)]], vec![vec![q(2, 5), q(3, 10)]])],
    );
    let b = given(
        arity(2, 0, 1, 0),
        vec![
            (vec![vec![q(7, 10)]], vec![vec![q(3, 4)]]),
            (vec![vec![q(3, 5)]], vec![vec![q(13, 20)]]),
        ],
    );
    let c = compose_approximations(Op::Seq, &[&a, &b], 1e-9).unwrap();
    let e = &c.approx.entrances[0];
    assert_eq!(e.lower_points(), vec![vec![q(33, 100)]]);
    assert_eq!(e.upper_points().unwrap(), vec![vec![q(99, 200)]]);
    let err = measure_error(&c.approx, Norm::Linf).unwrap();
    assert_eq!(err, q(33, 200));
    let ga = measure_error(&a, Norm::Linf).unwrap();
    let gb = measure_error(&b, Norm::Linf).unwrap();
    assert_eq!((ga.clone(), gb.clone()), (q(1, 10), q(1, 20)));
    let st = c.stage.as_ref().unwrap();
    let stages = [
        measure_error(&st.lower, Norm::Linf).unwrap(),
        measure_error(&st.upper, Norm::Linf).unwrap(),
    ];
    assert_eq!(stages, [q(0, 1), q(0, 1)]);
    let bound = compose_error_bounds(
        BoundKind::RightwardSeq,
        a.arity,
        b.arity,
        &[ga, gb],
        stages,
    )
    .unwrap();
    assert_eq!(bound, q(1, 4));
    assert!(err <= bound);
}

#[test]
fn bound_arithmetic() {
    let z = || q(0, 1);
    let sum = compose_error_bounds(
        BoundKind::Sum,
        arity(1, 0, 1, 0),
        arity(1, 0, 1, 0),
        &[q(1, 10), q(1, 20)],
        [z(), z()],
    );
    assert_eq!(sum.unwrap(), q(1, 10));
    let zero = compose_error_bounds(
        BoundKind::RightwardSeq,
        arity(1, 0, 2, 0),
        arity(2, 0, 1, 0),
        &[z(), z()],
        [z(), z()],
    );
    assert_eq!(zero.unwrap(), z());
    let bad = compose_error_bounds(
        BoundKind::RightwardSeq,
        arity(1, 0, 1, 1),
        arity(1, 1, 1, 0),
        &[z(), z()],
        [z(), z()],
    );
    assert!(matches!(bad, Err(CompError::BoundKind { .. })));
}

#[test]
fn lossy_lower_set_collapses() {
    let a = given(
        arity(1, 0, 2, 0),
        vec![(vec![vec![q(1, 1), q(0, 1)]], vec![vec![q(1, 1), q(0, 1)], vec![q(0, 1), q(1, 1)]])],
    );
    let b = exact(arity(2, 0, 1, 0), vec![vec![vec![q(1, 1)]], vec![vec![q(1, 1)]]]);
    let c = compose_approximations(Op::Seq, &[&a, &b], 1e-9).unwrap();
    assert_eq!(measure_error(&c.approx, Norm::Linf).unwrap(), q(0, 1));
    assert!(measure_error(&a, Norm::Linf).unwrap() > q(0, 1));
    // The real leaves agree.
    let d = Diagram::seq(vec![Diagram::leaf("A", fork()), Diagram::leaf("B", merge())]);
    let r = check_single_exit(&d, 0, 0, 0.0, &CurveCache::<Q>::new()).unwrap();
    assert_eq!((r.lower.clone(), r.upper), (q(1, 1), q(1, 1)));
    assert_eq!(replay(&r.result.canon, &r.scheduler).unwrap(), vec![q(1, 1)]);
}

#[test]
fn sums_keep_child_curves() {
    let d = Diagram::sum(vec![Diagram::leaf("T", two_exit::<Q>()), Diagram::leaf("A", room_a())]);
    let r = approx_multiobj_sd(&d, 0.0, &CurveCache::new()).unwrap();
    let t = approx_multiobj_sd(&Diagram::leaf("T", two_exit::<Q>()), 0.0, &CurveCache::new())
        .unwrap();
    // Exits of the sum: exr1, exr2 of T, exr1 of A, then exl1 of A.
    let mut got = r.approx().entrances[0].lower_points();
    got.sort();
    let mut want: Vec<Vec<Q>> = t.approx().entrances[0]
        .lower_points()
        .into_iter()
        .map(|p| vec![p[0].clone(), p[1].clone(), q(0, 1), q(0, 1)])
        .collect();
    want.sort();
    assert_eq!(got, want);
    assert_eq!(r.approx().entrances.len(), 3);
}

#[test]
fn single_exit_of_two_rooms() {
    let want = q(1, 2) * q(7, 10) / q(79, 100);
    let d = Diagram::seq(vec![Diagram::leaf("A", room_a::<Q>()), Diagram::leaf("B", room_b())]);
    let r = check_single_exit(&d, 0, 0, 1e-6, &CurveCache::new()).unwrap();
    assert!(r.lower <= want && want <= r.upper);
    assert!(r.upper.clone() - r.lower.clone() <= Q::from_f64(1e-6));
    assert_eq!(replay(&r.result.canon, &r.scheduler).unwrap()[0], r.lower);

    let df = Diagram::seq(vec![Diagram::leaf("A", room_a::<f64>()), Diagram::leaf("B", room_b())]);
    let r = check_single_exit(&df, 0, 0, 1e-6, &CurveCache::new()).unwrap();
    let w = want.to_f64();
    assert!(r.lower <= w + 1e-9 && w <= r.upper + 1e-9);
    assert!((replay(&r.result.canon, &r.scheduler).unwrap()[0] - r.lower).abs() < 1e-9);
}

#[test]
fn identity_is_certain() {
    let d = Diagram::leaf("id", OpenMdp::<Q>::identity());
    let r = check_single_exit(&d, 0, 0, 0.0, &CurveCache::new()).unwrap();
    assert_eq!((r.lower, r.upper), (q(1, 1), q(1, 1)));
}

#[test]
fn float_needs_positive_tolerance() {
    let d = Diagram::leaf("T", two_exit::<f64>());
    assert_eq!(
        approx_multiobj_sd(&d, 0.0, &CurveCache::new()).unwrap_err(),
        CompError::ZeroEtaNeedsRational
    );
}

fn repeated(n: usize) -> Diagram<f64> {
    let leaf = Diagram::leaf("A", room_a::<f64>());
    Diagram::seq(vec![leaf; n])
}

#[test]
fn repeated_leaf_is_analysed_once() {
    for n in [2, 3, 10, 100] {
        let cache = CurveCache::new();
        let r = approx_multiobj_sd(&repeated(n), 1e-4, &cache).unwrap();
        assert_eq!(cache.leaf_runs(), 1, "n = {n}");
        assert!(r.canon.distinct_nodes() <= 2 * (usize::BITS - n.leading_zeros()) as usize + 1);
        let again = approx_multiobj_sd(&repeated(n), 1e-4, &cache).unwrap();
        assert_eq!(cache.leaf_runs(), 1);
        assert!(cache.hits() > 0);
        assert_eq!(
            again.approx().entrances[0].lower_points(),
            r.approx().entrances[0].lower_points()
        );
    }
    let off = CurveCache::disabled();
    approx_multiobj_sd(&repeated(8), 1e-4, &off).unwrap();
    assert_eq!((off.leaf_runs(), off.hits()), (8, 0));
}

#[test]
fn cache_hits_equal_recomputation() {
    let cache = CurveCache::new();
    let a = approx_multiobj_sd(&repeated(7), 1e-4, &cache).unwrap();
    let b = approx_multiobj_sd(&repeated(7), 1e-4, &CurveCache::disabled()).unwrap();
    for (x, y) in a.approx().entrances.iter().zip(&b.approx().entrances) {
        assert_eq!(x.lower_points(), y.lower_points());
        assert_eq!(x.upper.halfspaces(), y.upper.halfspaces());
    }
}

#[test]
fn canonical_form_keeps_semantics() {
    for n in [1, 2, 3, 5, 6, 7] {
        let d = repeated(n);
        let c = canonicalize(&d, &mut Hasher::default());
        assert_eq!(semantics(&c.to_diagram()).unwrap(), semantics(&d).unwrap());
    }
}

fn small_leaf(rng: &mut ChaCha8Rng, ar: Arity) -> Diagram<Q> {
    Diagram::leaf("X", random_omdp(rng, ar, LeafLimits::default()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn random_canonical_semantics(seed in any::<u64>()) {
        let d = random_diagram(&mut ChaCha8Rng::seed_from_u64(seed), LeafLimits::default());
        let c = canonicalize(&d, &mut Hasher::default());
        prop_assert_eq!(semantics(&c.to_diagram()).unwrap(), semantics(&d).unwrap());
    }

    #[test]
    fn exact_curves_match_enumeration(seed in any::<u64>()) {
        let d = random_diagram(&mut ChaCha8Rng::seed_from_u64(seed), LeafLimits::default());
        let m = semantics(&d).unwrap();
        let r = approx_multiobj_sd(&d, 0.0, &CurveCache::new()).unwrap();
        for (i, e) in r.approx().entrances.iter().enumerate() {
            let mut got = e.lower_points();
            got.sort();
            prop_assert_eq!(got, exact_pareto(&m, i));
            prop_assert_eq!(e.gap(Norm::L2).unwrap(), q(0, 1));
        }
    }

    #[test]
    fn float_sandwich_and_replay(seed in any::<u64>()) {
        let d = random_diagram(&mut ChaCha8Rng::seed_from_u64(seed), LeafLimits::default());
        let m = semantics(&d).unwrap().map_probs(|p| p.to_f64());
        let df = to_float(&d);
        let r = approx_multiobj_sd(&df, 1e-4, &CurveCache::new()).unwrap();
        for (i, e) in r.approx().entrances.iter().enumerate() {
            for p in dm_points(&m, i) {
                prop_assert!(e.upper_contains(&p).unwrap());
            }
            for (v, p) in e.lower_points().iter().enumerate() {
                let hs = extract_scheduler(&r, i, v).unwrap();
                let got = replay(&r.canon, &hs).unwrap();
                for (x, y) in got.iter().zip(p) {
                    prop_assert!((x - y).abs() <= 1e-6);
                }
            }
        }
    }

    #[test]
    fn composed_error_within_bound(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mid = 1 + (seed % 2) as usize;
        let d = if seed % 3 == 0 {
            Diagram::sum(vec![
                small_leaf(&mut rng, arity(1, 0, 2, 0)),
                small_leaf(&mut rng, arity(1, 0, 1, 0)),
            ])
        } else {
            Diagram::seq(vec![
                small_leaf(&mut rng, arity(1, 0, mid, 0)),
                small_leaf(&mut rng, arity(mid, 0, 2, 0)),
            ])
        };
        let r = approx_multiobj_sd(&d, 0.05, &CurveCache::new()).unwrap();
        let bound = node_error_bound(&r.root).unwrap().unwrap();
        prop_assert!(measure_error(r.approx(), Norm::Linf).unwrap() <= bound);
    }
}

fn to_float(d: &Diagram<Q>) -> Diagram<f64> {
    match d {
        Diagram::Leaf { name, omdp } => Diagram::leaf(name.clone(), omdp.map_probs(|p| p.to_f64())),
        Diagram::Seq(cs) => Diagram::seq(cs.iter().map(to_float).collect()),
        Diagram::Sum(cs) => Diagram::sum(cs.iter().map(to_float).collect()),
        Diagram::Trace(c, k) => Diagram::trace(to_float(c), *k),
    }
}
