use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use sdp_core::linsolve::solve_dense;
use sdp_core::{Rational, Scalar};
use sdp_geometry::{
    distance, gap, prune, to_csv, GeomError, Halfspace, LowerSet, Norm, UpperSet,
};

type Q = Rational;

fn q(n: i64, d: i64) -> Q {
    Q::ratio(n, d)
}

fn pt(v: &[(i64, i64)]) -> Vec<Q> {
    v.iter().map(|(n, d)| q(*n, *d)).collect()
}

fn three_points() -> LowerSet<Q> {
    LowerSet::from_points(
        2,
        vec![
            pt(&[(3, 10), (1, 10)]),
            pt(&[(27, 100), (3, 10)]),
            pt(&[(1, 5), (2, 5)]),
        ],
    )
    .unwrap()
}

/// Membership in the downward convex closure of a planar set: some
/// segment between two vertices dominates the point.
fn planar_oracle(vs: &[Vec<Q>], p: &[Q]) -> bool {
    for a in vs {
        for b in vs {
            // lambda a + (1 - lambda) b >= p on each axis gives an interval.
            let mut lo = Q::from_usize(0);
            let mut hi = Q::from_usize(1);
            for j in 0..2 {
                let slope = a[j].clone() - b[j].clone();
                let need = p[j].clone() - b[j].clone();
                if slope.is_zero() {
                    if need.is_positive() {
                        lo = Q::from_usize(2);
                    }
                } else if slope.is_positive() {
                    lo = lo.max_of(need / slope);
                } else {
                    hi = hi.min_of(need / slope);
                }
            }
            if lo <= hi {
                return true;
            }
        }
    }
    false
}

use num_traits::{Signed, Zero};

#[test]
fn support_values() {
    let l = three_points();
    let w = pt(&[(1, 2), (1, 2)]);
    let oracle = l
        .vertices()
        .iter()
        .map(|v| v[0].clone() * w[0].clone() + v[1].clone() * w[1].clone())
        .fold(Q::zero(), |a, b| a.max_of(b));
    assert_eq!(l.support_value(&w).unwrap(), oracle);
    assert_eq!(oracle, q(3, 10));
    let zero = LowerSet::from_points(2, vec![pt(&[(0, 1), (0, 1)])]).unwrap();
    assert_eq!(zero.support_value(&w).unwrap(), Q::zero());
    let u = UpperSet::<Q>::simplex(2);
    assert_eq!(u.support_value(&pt(&[(1, 1), (0, 1)])).unwrap(), q(1, 1));
    assert!(matches!(
        l.support_value(&pt(&[(1, 1)])),
        Err(GeomError::DimensionMismatch { .. })
    ));
}

#[test]
fn containment() {
    let l = three_points();
    for (p, expected) in [
        (pt(&[(1, 4), (3, 10)]), true),
        (pt(&[(31, 100), (0, 1)]), false),
        (pt(&[(0, 1), (0, 1)]), true),
    ] {
        assert_eq!(l.contains(&p).unwrap(), expected);
        assert_eq!(planar_oracle(l.vertices(), &p), expected);
    }
}

#[test]
fn upper_vertices() {
    let mut u = UpperSet::<Q>::simplex(2);
    u.add(Halfspace {
        w: pt(&[(1, 1), (0, 1)]),
        u: q(3, 10),
    })
    .unwrap();
    u.add(Halfspace {
        w: pt(&[(0, 1), (1, 1)]),
        u: q(2, 5),
    })
    .unwrap();
    assert!(u.vertices().unwrap().contains(&pt(&[(3, 10), (2, 5)])));
    assert_eq!(u.pareto_vertices().unwrap(), vec![pt(&[(3, 10), (2, 5)])]);

    let one = UpperSet::<Q>::simplex(1);
    assert_eq!(one.pareto_vertices().unwrap(), vec![pt(&[(1, 1)])]);

    let cut = UpperSet::with_halfspaces(
        2,
        vec![Halfspace {
            w: pt(&[(1, 2), (1, 2)]),
            u: q(1, 4),
        }],
    )
    .unwrap();
    let mut vs = cut.pareto_vertices().unwrap();
    vs.sort();
    assert_eq!(vs, vec![pt(&[(0, 1), (1, 2)]), pt(&[(1, 2), (0, 1)])]);

    let big = UpperSet::<Q>::simplex(7);
    assert!(matches!(big.vertices(), Err(GeomError::DimensionCap { .. })));
}

#[test]
fn gaps() {
    let l = three_points();
    let u = UpperSet::from_vertices(2, l.vertices().to_vec()).unwrap();
    assert_eq!(gap(&l, &u, Norm::L2).unwrap(), Q::zero());
    assert_eq!(gap(&l, &u, Norm::Linf).unwrap(), Q::zero());

    for (lo, hi, expected) in [
        (q(33, 100), q(99, 200), q(165, 1000)),
        (q(1, 10), q(9, 10), q(4, 5)),
    ] {
        let l = LowerSet::from_points(1, vec![vec![lo]]).unwrap();
        let u = UpperSet::from_vertices(1, vec![vec![hi]]).unwrap();
        assert_eq!(gap(&l, &u, Norm::Linf).unwrap(), expected);
        assert_eq!(gap(&l, &u, Norm::L2).unwrap(), expected);
    }

    let outside = LowerSet::from_points(1, vec![vec![q(1, 2)]]).unwrap();
    let small = UpperSet::from_vertices(1, vec![vec![q(1, 4)]]).unwrap();
    assert!(matches!(
        gap(&outside, &small, Norm::L2),
        Err(GeomError::NotContained { .. })
    ));
}

#[test]
fn facets_of_three_points() {
    let l = three_points();
    let f = l.hull_facets().unwrap();
    let normals: Vec<Vec<Q>> = f.iter().map(|h| h.w.clone()).collect();
    // Segment (0.2,0.4)-(0.27,0.3) and segment (0.27,0.3)-(0.3,0.1).
    assert!(normals.contains(&pt(&[(10, 17), (7, 17)])));
    assert!(normals.contains(&pt(&[(20, 23), (3, 23)])));
    for h in &f {
        let best = l.support_value(&h.w).unwrap();
        assert_eq!(best, h.u);
    }
    let single = LowerSet::from_points(3, vec![pt(&[(1, 5), (1, 5), (1, 5)])]).unwrap();
    let mut ns: Vec<Vec<Q>> = single
        .hull_facets()
        .unwrap()
        .into_iter()
        .map(|h| h.w)
        .collect();
    ns.sort();
    assert_eq!(
        ns,
        vec![
            pt(&[(0, 1), (0, 1), (1, 1)]),
            pt(&[(0, 1), (1, 1), (0, 1)]),
            pt(&[(1, 1), (0, 1), (0, 1)])
        ]
    );
    let line = LowerSet::from_points(
        2,
        vec![
            pt(&[(1, 2), (0, 1)]),
            pt(&[(1, 4), (1, 4)]),
            pt(&[(0, 1), (1, 2)]),
        ],
    )
    .unwrap();
    let inner: Vec<_> = line
        .hull_facets()
        .unwrap()
        .into_iter()
        .filter(|h| h.w.iter().all(|x| x.is_positive()))
        .collect();
    assert_eq!(inner.len(), 1);
    assert_eq!(inner[0].w, pt(&[(1, 2), (1, 2)]));
}

#[test]
fn csv_rows() {
    let csv = to_csv(three_points().vertices());
    assert!(csv.starts_with("x,y\n"));
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.contains("0.27,0.3"));
}

#[test]
fn float_engine_agrees() {
    let l = LowerSet::from_points(2, vec![vec![0.3, 0.1], vec![0.27, 0.3], vec![0.2, 0.4]]).unwrap();
    let u = UpperSet::from_vertices(2, vec![vec![0.3, 0.1], vec![0.27, 0.3], vec![0.2, 0.4]]).unwrap();
    assert!(gap(&l, &u, Norm::L2).unwrap() < 1e-9);
    assert!(l.contains(&[0.25, 0.3]).unwrap());
}

fn random_point(rng: &mut impl Rng, dim: usize) -> Vec<Q> {
    // Small denominators; the coordinates sum to at most one.
    let den = 20;
    let mut left = den;
    (0..dim)
        .map(|_| {
            let x = rng.gen_range(0..=left);
            left -= x;
            q(x, den)
        })
        .collect()
}

fn random_weight(rng: &mut impl Rng, dim: usize) -> Vec<Q> {
    let raw: Vec<i64> = (0..dim).map(|_| rng.gen_range(0..6)).collect();
    let s: i64 = raw.iter().sum();
    if s == 0 {
        let mut w = vec![Q::zero(); dim];
        w[0] = q(1, 1);
        return w;
    }
    raw.into_iter().map(|x| q(x, s)).collect()
}

fn random_upper(rng: &mut impl Rng, dim: usize) -> UpperSet<Q> {
    let mut u = UpperSet::simplex(dim);
    for _ in 0..rng.gen_range(0..5) {
        let w = random_weight(rng, dim);
        u.add(Halfspace {
            w,
            u: q(rng.gen_range(1..10), 10),
        })
        .unwrap();
    }
    u
}

/// Vertices by brute force: every choice of `dim` constraints whose
/// system has a unique feasible solution.
fn brute_vertices(u: &UpperSet<Q>) -> Vec<Vec<Q>> {
    let dim = u.dim();
    let mut rows: Vec<(Vec<Q>, Q)> = Vec::new();
    for j in 0..dim {
        let mut r = vec![Q::zero(); dim];
        r[j] = q(-1, 1);
        rows.push((r, Q::zero()));
    }
    rows.push((vec![q(1, 1); dim], q(1, 1)));
    for h in u.halfspaces() {
        rows.push((h.w.clone(), h.u.clone()));
    }
    let mut out: Vec<Vec<Q>> = Vec::new();
    let n = rows.len();
    let mut idx: Vec<usize> = (0..dim).collect();
    loop {
        let a: Vec<Vec<Q>> = idx.iter().map(|&i| rows[i].0.clone()).collect();
        let b: Vec<Q> = idx.iter().map(|&i| rows[i].1.clone()).collect();
        if let Some(x) = solve_dense(a, b) {
            let ok = rows.iter().all(|(r, c)| {
                r.iter().zip(&x).fold(Q::zero(), |s, (p, y)| s + p * y) <= *c
            });
            if ok && !out.contains(&x) {
                out.push(x);
            }
        }
        // Next combination.
        let mut i = dim;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < n - dim + i {
                idx[i] += 1;
                for k in i + 1..dim {
                    idx[k] = idx[k - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Planar distance from `p` to the boundary chain of a lower set.
fn planar_l2(vs: &[Vec<Q>], p: &[Q]) -> f64 {
    if planar_oracle(vs, p) {
        return 0.0;
    }
    let f: Vec<(f64, f64)> = vs.iter().map(|v| (v[0].to_f64(), v[1].to_f64())).collect();
    let (px, py) = (p[0].to_f64(), p[1].to_f64());
    let mut segs = Vec::new();
    let xmax = f.iter().map(|v| v.0).fold(0.0, f64::max);
    let ymax = f.iter().map(|v| v.1).fold(0.0, f64::max);
    for a in &f {
        segs.push(((0.0, a.1), *a));
        segs.push(((a.0, 0.0), *a));
        for b in &f {
            segs.push((*a, *b));
        }
    }
    segs.push(((0.0, 0.0), (xmax, 0.0)));
    segs.push(((0.0, 0.0), (0.0, ymax)));
    segs.iter()
        .map(|(a, b)| {
            let (dx, dy) = (b.0 - a.0, b.1 - a.1);
            let len = dx * dx + dy * dy;
            let t = if len == 0.0 {
                0.0
            } else {
                (((px - a.0) * dx + (py - a.1) * dy) / len).clamp(0.0, 1.0)
            };
            let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
            ((px - cx).powi(2) + (py - cy).powi(2)).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vertex_enumeration_matches_brute_force(seed in any::<u64>(), dim in 1usize..4) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let u = random_upper(&mut rng, dim);
        let mut dd = u.vertices().unwrap();
        let mut bf = brute_vertices(&u);
        dd.sort();
        bf.sort();
        prop_assert_eq!(dd, bf);
    }

    #[test]
    fn round_trip_through_vertices(seed in any::<u64>(), dim in 2usize..4) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let u = random_upper(&mut rng, dim);
        let back = UpperSet::from_vertices(dim, u.pareto_vertices().unwrap()).unwrap();
        for _ in 0..20 {
            let p = random_point(&mut rng, dim);
            if u.contains(&p).unwrap() {
                prop_assert!(back.contains(&p).unwrap());
            }
            let w = random_weight(&mut rng, dim);
            prop_assert_eq!(back.support_value(&w).unwrap(), u.support_value(&w).unwrap());
        }
    }

    #[test]
    fn sandwich_and_monotone_gap(seed in any::<u64>(), dim in 1usize..4) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Vec<Q>> = (0..rng.gen_range(1..5)).map(|_| random_point(&mut rng, dim)).collect();
        let l = LowerSet::from_points(dim, pts.clone()).unwrap();
        for p in &pts {
            prop_assert!(l.contains(p).unwrap());
        }
        // An upper set that contains L: the simplex cut by facets of a bigger set.
        let mut bigger = pts.clone();
        bigger.push(random_point(&mut rng, dim));
        let u = UpperSet::from_vertices(dim, bigger.clone()).unwrap();
        for v in l.vertices() {
            prop_assert!(u.contains(v).unwrap());
        }
        for _ in 0..5 {
            let w = random_weight(&mut rng, dim);
            prop_assert!(l.support_value(&w).unwrap() <= u.support_value(&w).unwrap());
        }
        for norm in [Norm::L2, Norm::Linf] {
            let g0 = gap(&l, &u, norm).unwrap();
            let mut l2 = l.clone();
            l2.insert(bigger.last().unwrap().clone()).unwrap();
            prop_assert!(gap(&l2, &u, norm).unwrap() <= g0.clone());
            let mut u2 = u.clone();
            let w = random_weight(&mut rng, dim);
            u2.add(Halfspace { u: l.support_value(&w).unwrap(), w }).unwrap();
            prop_assert!(gap(&l, &u2, norm).unwrap() <= g0);
        }
    }

    #[test]
    fn planar_distances_match_segments(seed in any::<u64>()) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Vec<Q>> = (0..rng.gen_range(1..5)).map(|_| random_point(&mut rng, 2)).collect();
        let l = LowerSet::from_points(2, pts).unwrap();
        let facets = l.hull_facets().unwrap();
        for _ in 0..10 {
            let p = random_point(&mut rng, 2);
            let d = distance(&facets, &p, Norm::L2).to_f64();
            prop_assert!((d - planar_l2(l.vertices(), &p)).abs() < 1e-9);
            prop_assert_eq!(l.contains(&p).unwrap(), planar_oracle(l.vertices(), &p));
        }
    }

    #[test]
    fn facets_describe_the_set(seed in any::<u64>(), dim in 2usize..5) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Vec<Q>> = (0..rng.gen_range(1..6)).map(|_| random_point(&mut rng, dim)).collect();
        let l = LowerSet::from_points(dim, pts).unwrap();
        let facets = l.hull_facets().unwrap();
        for h in &facets {
            prop_assert_eq!(l.support_value(&h.w).unwrap(), h.u.clone());
        }
        let u = UpperSet::with_halfspaces(dim, facets).unwrap();
        let mut a = prune(u.vertices().unwrap());
        let mut b = l.vertices().to_vec();
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
    }
}
