//! Acceptance suite: one PASS/FAIL line per criterion.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdp_benchgen::{gen_chain, gen_room, RoomSpec, Safety, Wind};
use sdp_compose::{semantics, Diagram};
use sdp_compositional::{
    approx_multiobj_sd, check_single_exit, compose_approximations, compose_error_bounds,
    extract_scheduler, measure_error, node_error_bound, replay, BoundKind, CurveCache, Op,
};
use sdp_core::{Arity, OpenMdp, Rational, Scalar};
use sdp_geometry::{LowerSet, Norm, UpperSet};
use sdp_io::{build, parse, Report};
use sdp_multiobj::{approx_multiobj, EntranceApprox, SoundApproximation};
use sdp_testkit::fixtures::{fork, merge};
use sdp_testkit::{
    add_dominated_action, arity, dm_points, exact_pareto, exact_pareto_plain, q, random_diagram,
    random_omdp, LeafLimits,
};

type Q = Rational;
type Outcome = Result<String, String>;

const SDP: &str = env!("CARGO_BIN_EXE_sdp");

fn model(name: &str) -> String {
    format!("{}/../../models/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

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

fn to_float(d: &Diagram<Q>) -> Diagram<f64> {
    match d {
        Diagram::Leaf { name, omdp } => Diagram::leaf(name.clone(), omdp.map_probs(|p| p.to_f64())),
        Diagram::Seq(cs) => Diagram::seq(cs.iter().map(to_float).collect()),
        Diagram::Sum(cs) => Diagram::sum(cs.iter().map(to_float).collect()),
        Diagram::Trace(c, k) => Diagram::trace(to_float(c), *k),
    }
}

fn two_exit_curve() -> Outcome {
    let start = Instant::now();
    let out = Command::new(SDP)
        .args(["pareto", &model("two_exit.json"), "--eta", "1e-6", "--arith", "rational"])
        .output()
        .map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    ensure(out.status.success(), || format!("exit status {}", out.status))?;
    let text = String::from_utf8_lossy(&out.stdout);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    ensure(rows == ["0.3,0.1", "0.27,0.3", "0.2,0.4"], || format!("rows {rows:?}"))?;
    ensure(secs < 1.0, || format!("took {secs:.2}s"))?;
    let doc = parse(&std::fs::read_to_string(model("two_exit.json")).unwrap()).unwrap();
    let Diagram::Leaf { omdp, .. } = build::<Q>(&doc).unwrap() else {
        return Err("not a leaf".into());
    };
    let a = approx_multiobj(&omdp, 1e-6).map_err(|e| e.to_string())?;
    let mut pts = a.entrances[0].lower_points();
    pts.sort();
    let want = vec![vec![q(1, 5), q(2, 5)], vec![q(27, 100), q(3, 10)], vec![q(3, 10), q(1, 10)]];
    ensure(pts == want, || format!("exact vertices {pts:?}"))?;
    let gap = a.entrances[0].gap(Norm::L2).unwrap();
    ensure(gap <= q(1, 1_000_000), || format!("gap {gap}"))?;
    Ok(format!("3 exact vertices, gap {gap}, cli {secs:.2}s"))
}

fn bouncing_explosion() -> Outcome {
    let a = exact(arity(1, 0, 1, 1), vec![vec![vec![q(1, 1)]], vec![vec![q(1, 1)]]]);
    let b = given(
        arity(1, 1, 1, 0),
        vec![(vec![vec![q(1, 1000), q(99, 100)]], vec![vec![q(9, 1000), q(99, 100)]])],
    );
    let c = compose_approximations(Op::Seq, &[&a, &b], 1e-9).map_err(|e| e.to_string())?;
    let e = &c.approx.entrances[0];
    let (l, u) = (e.lower_points(), e.upper_points().unwrap());
    ensure(l == vec![vec![q(1, 10)]], || format!("L {l:?}"))?;
    ensure(u == vec![vec![q(9, 10)]], || format!("U {u:?}"))?;
    let err = measure_error(&c.approx, Norm::Linf).unwrap();
    ensure(err == q(4, 5), || format!("error {err}"))?;
    let r = Report::from_approx("comp", &c.approx, Norm::Linf, 0.0, 0.0).unwrap();
    ensure((r.error - 0.8).abs() <= 1e-9, || format!("report E {}", r.error))?;
    Ok("L 1/10, U 9/10, error 4/5".into())
}

fn rightward_example() -> Outcome {
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
    let c = compose_approximations(Op::Seq, &[&a, &b], 1e-9).map_err(|e| e.to_string())?;
    let e = &c.approx.entrances[0];
    let (l, u) = (e.lower_points(), e.upper_points().unwrap());
    ensure(l == vec![vec![q(33, 100)]], || format!("L {l:?}"))?;
    ensure(u == vec![vec![q(99, 200)]], || format!("U {u:?}"))?;
    let err = measure_error(&c.approx, Norm::Linf).unwrap();
    ensure(err == q(33, 200), || format!("error {err}"))?;
    let st = c.stage.as_ref().ok_or("no stage approximations")?;
    let stages = [
        measure_error(&st.lower, Norm::Linf).unwrap(),
        measure_error(&st.upper, Norm::Linf).unwrap(),
    ];
    let gaps = [
        measure_error(&a, Norm::Linf).unwrap(),
        measure_error(&b, Norm::Linf).unwrap(),
    ];
    let bound = compose_error_bounds(BoundKind::RightwardSeq, a.arity, b.arity, &gaps, stages)
        .map_err(|e| e.to_string())?;
    ensure(bound == q(1, 4), || format!("bound {bound}"))?;
    ensure(err <= bound, || format!("{err} > {bound}"))?;
    Ok(format!("L 33/100, U 99/200, error {err}, bound {bound}"))
}

fn two_rooms_single_exit() -> Outcome {
    // Oracle: the best deterministic memoryless scheduler of the monolith.
    let doc = parse(&std::fs::read_to_string(model("two_rooms.json")).unwrap()).unwrap();
    let sem = semantics(&build::<Q>(&doc).unwrap()).unwrap();
    let best = dm_points(&sem, 0)
        .into_iter()
        .map(|p| p[0].clone())
        .max()
        .ok_or("no schedulers")?;
    ensure(best == q(35, 79), || format!("oracle {best}"))?;
    let truth = best.to_f64();
    let mut detail = Vec::new();
    for arith in ["float", "rational"] {
        let out = Command::new(SDP)
            .args(["check", &model("two_rooms.json"), "--exit", "0", "--epsilon", "1e-6"])
            .args(["--arith", arith])
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || format!("{arith}: exit status {}", out.status))?;
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
        let s = &v["extra"]["single_exit"];
        let (lo, up) = (s["lower"].as_f64().unwrap(), s["upper"].as_f64().unwrap());
        let played = s["scheduler"]["replayed"].as_f64().unwrap();
        ensure(lo <= truth + 1e-12 && truth <= up + 1e-12, || {
            format!("{arith}: [{lo}, {up}] misses {truth}")
        })?;
        ensure(up - lo <= 1e-6, || format!("{arith}: width {}", up - lo))?;
        ensure((played - lo).abs() <= 1e-9, || format!("{arith}: replay {played} vs {lo}"))?;
        if arith == "rational" {
            let exact = s["lower_exact"].as_str().unwrap_or("");
            ensure(exact == "35/79", || format!("exact lower {exact}"))?;
        }
        detail.push(format!("{arith} [{lo:.9}, {up:.9}]"));
    }
    Ok(detail.join(", "))
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut vertices = 0;
    for seed in 0..200u64 {
        let d = random_diagram(&mut ChaCha8Rng::seed_from_u64(seed), LeafLimits::default());
        let m = semantics(&d).map_err(|e| e.to_string())?;
        let r = approx_multiobj_sd(&d, 0.0, &CurveCache::new()).map_err(|e| format!("seed {seed}: {e}"))?;
        for (i, e) in r.approx().entrances.iter().enumerate() {
            let mut got = e.lower_points();
            got.sort();
            let want = exact_pareto(&m, i);
            ensure(got == want, || format!("seed {seed}, entrance {i}: {got:?} vs {want:?}"))?;
            vertices += got.len();
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 600.0, || format!("took {secs:.0}s"))?;
    Ok(format!("200 diagrams, {vertices} vertices equal, {secs:.1}s"))
}

fn sandwich_soundness() -> Outcome {
    let mut checked = 0;
    for seed in 0..200u64 {
        let d = random_diagram(&mut ChaCha8Rng::seed_from_u64(seed), LeafLimits::default());
        let m = semantics(&d).unwrap().map_probs(|p| p.to_f64());
        let r = approx_multiobj_sd(&to_float(&d), 1e-4, &CurveCache::new())
            .map_err(|e| format!("seed {seed}: {e}"))?;
        for (i, e) in r.approx().entrances.iter().enumerate() {
            for p in dm_points(&m, i) {
                ensure(e.upper_contains(&p).unwrap(), || format!("seed {seed}: {p:?} outside U"))?;
                checked += 1;
            }
            for (v, p) in e.lower_points().iter().enumerate() {
                let hs = extract_scheduler(&r, i, v).map_err(|e| e.to_string())?;
                let got = replay(&r.canon, &hs).map_err(|e| e.to_string())?;
                let dev = got.iter().zip(p).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                ensure(dev <= 1e-6, || format!("seed {seed}: replay off by {dev}"))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} points checked"))
}

fn dominated_actions() -> Outcome {
    let lim = LeafLimits {
        sink: true,
        ..LeafLimits::default()
    };
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ar = arity(1, 0, rng.gen_range(1..=2), 0);
        let mut m = random_omdp(&mut rng, ar, lim);
        let before = approx_multiobj(&m, 0.0).map_err(|e| e.to_string())?;
        let sink = m.num_states() - 1;
        let candidates: Vec<usize> =
            (0..sink).filter(|&s| !m.mdp.enabled(s).is_empty()).collect();
        let s = candidates[rng.gen_range(0..candidates.len())];
        add_dominated_action(&mut rng, &mut m, s, sink);
        let after = approx_multiobj(&m, 0.0).map_err(|e| e.to_string())?;
        for i in 0..before.entrances.len() {
            let mut b = before.entrances[i].lower_points();
            let mut a = after.entrances[i].lower_points();
            b.sort();
            a.sort();
            ensure(a == b, || format!("seed {seed}: {b:?} became {a:?}"))?;
            let brute = exact_pareto_plain(&m, i);
            ensure(a == brute, || format!("seed {seed}: enumeration gives {brute:?}"))?;
        }
    }
    Ok("50 dominated actions, curves unchanged".into())
}

fn error_within_bound() -> Outcome {
    let leaf = |rng: &mut ChaCha8Rng, ar| Diagram::leaf("X", random_omdp(rng, ar, LeafLimits::default()));
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mid = 1 + (seed % 2) as usize;
        let d = if seed % 2 == 0 {
            Diagram::sum(vec![leaf(&mut rng, arity(1, 0, 2, 0)), leaf(&mut rng, arity(1, 0, 1, 0))])
        } else {
            Diagram::seq(vec![leaf(&mut rng, arity(1, 0, mid, 0)), leaf(&mut rng, arity(mid, 0, 2, 0))])
        };
        let r = approx_multiobj_sd(&d, 0.05, &CurveCache::new()).map_err(|e| e.to_string())?;
        let bound = node_error_bound(&r.root)
            .map_err(|e| e.to_string())?
            .ok_or_else(|| format!("seed {seed}: no bound"))?;
        let err = measure_error(r.approx(), Norm::Linf).unwrap();
        ensure(err <= bound, || format!("seed {seed}: error {err} > bound {bound}"))?;
        if bound > q(0, 1) {
            worst = worst.max((err / bound).to_f64());
        }
    }
    Ok(format!("100 instances, largest error/bound {worst:.3}"))
}

fn chain_caching() -> Outcome {
    let spec = RoomSpec::small(Safety::Safe, Wind::Calm, 0);
    let leaf: Arc<OpenMdp<f64>> = Arc::new(gen_room(&spec).map_err(|e| e.to_string())?);
    let mut rows = Vec::new();
    for n in [10usize, 100, 1000] {
        let d = gen_chain(n, leaf.clone()).map_err(|e| e.to_string())?;
        let cache = CurveCache::new();
        let start = Instant::now();
        let r = approx_multiobj_sd(&d, 1e-4, &cache).map_err(|e| format!("N={n}: {e}"))?;
        let secs = start.elapsed().as_secs_f64();
        let err = measure_error(r.approx(), Norm::Linf).unwrap();
        let states = semantics(&d).unwrap().num_states();
        ensure(cache.leaf_runs() == 1, || format!("N={n}: {} leaf runs", cache.leaf_runs()))?;
        ensure(err < 1e-3, || format!("N={n}: error {err}"))?;
        ensure(states == n * leaf.num_states(), || format!("N={n}: {states} states"))?;
        rows.push((n, secs, err, states));
    }
    for w in rows.windows(2) {
        let (a, b) = (w[0], w[1]);
        ensure(b.1 / b.0 as f64 <= a.1 / a.0 as f64, || {
            format!("time per copy grew from N={} ({:.4}s) to N={} ({:.4}s)", a.0, a.1, b.0, b.1)
        })?;
    }
    Ok(rows
        .iter()
        .map(|(n, s, e, st)| format!("N={n}: {s:.3}s E={e:.1e} states={st}"))
        .collect::<Vec<_>>()
        .join("; "))
}

fn lossy_collapse() -> Outcome {
    let a = given(
        arity(1, 0, 2, 0),
        vec![(vec![vec![q(1, 1), q(0, 1)]], vec![vec![q(1, 1), q(0, 1)], vec![q(0, 1), q(1, 1)]])],
    );
    let b = exact(arity(2, 0, 1, 0), vec![vec![vec![q(1, 1)]], vec![vec![q(1, 1)]]]);
    let c = compose_approximations(Op::Seq, &[&a, &b], 1e-9).map_err(|e| e.to_string())?;
    let err = measure_error(&c.approx, Norm::Linf).unwrap();
    ensure(err == q(0, 1), || format!("error {err}"))?;
    let ga = measure_error(&a, Norm::Linf).unwrap();
    ensure(ga > q(0, 1), || "the lower set of A is not lossy".into())?;
    let d = Diagram::seq(vec![Diagram::leaf("A", fork()), Diagram::leaf("B", merge())]);
    let r = check_single_exit(&d, 0, 0, 0.0, &CurveCache::<Q>::new()).map_err(|e| e.to_string())?;
    ensure(r.lower == q(1, 1) && r.upper == q(1, 1), || format!("[{}, {}]", r.lower, r.upper))?;
    Ok(format!("error 0 with a lossy input of error {ga}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("pareto curve of the two-exit model", two_exit_curve),
        ("error explosion when bouncing", bouncing_explosion),
        ("rightward composition and its bound", rightward_example),
        ("single exit of two rooms", two_rooms_single_exit),
        ("oracle equivalence on 200 random diagrams", oracle_equivalence),
        ("sandwich soundness on 200 random diagrams", sandwich_soundness),
        ("dominated-action invariance", dominated_actions),
        ("composed error within the bound", error_within_bound),
        ("caching on chains", chain_caching),
        ("lossy lower set collapses", lossy_collapse),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail} [{secs:.2}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {why} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
