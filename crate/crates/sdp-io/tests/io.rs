use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sdp_benchgen::{gen_chain, gen_room, RoomSpec, Safety, Wind};
use sdp_compose::{semantics, Diagram};
use sdp_core::{OpenMdp, Rational};
use sdp_geometry::Norm;
use sdp_io::{
    build, emit_report, from_diagram, parse, parse_prob, print, Expr, IoError, Report,
};
use sdp_multiobj::approx_multiobj;
use sdp_testkit::fixtures::{room_a, room_b, two_exit};
use sdp_testkit::{q, random_diagram, LeafLimits};

type Q = Rational;

const TWO_EXIT: &str = include_str!("../../../models/two_exit.json");
const TWO_ROOMS: &str = include_str!("../../../models/two_rooms.json");
const CHAIN_ROOM: &str = include_str!("../../../models/chain_room.json");

#[test]
fn probabilities_are_exact() {
    for s in ["27/100", "0.27", "2.7e-1", "+0.270", "270e-3", "54/200"] {
        assert_eq!(parse_prob(s), Some(q(27, 100)), "{s}");
    }
    assert_eq!(parse_prob("1"), Some(q(1, 1)));
    assert_eq!(parse_prob(".5"), Some(q(1, 2)));
    assert_eq!(parse_prob("-0.5"), Some(q(-1, 2)));
    for s in ["", ".", "abc", "1/0", "0.2.3", "1e", "0x10"] {
        assert_eq!(parse_prob(s), None, "{s}");
    }
}

#[test]
fn two_rooms_document() {
    let doc = parse(TWO_ROOMS).unwrap();
    assert_eq!(doc.leaf_definitions(), 2);
    assert_eq!(doc.root, "AB");
    let d = build::<Q>(&doc).unwrap();
    let expected = Diagram::seq(vec![
        Diagram::leaf("A", room_a::<Q>()),
        Diagram::leaf("B", room_b::<Q>()),
    ]);
    assert_eq!(d, expected);
}

#[test]
fn two_exit_document_matches_fixture() {
    let doc = parse(TWO_EXIT).unwrap();
    let Diagram::Leaf { omdp, .. } = build::<Q>(&doc).unwrap() else {
        panic!("expected a leaf")
    };
    assert_eq!(*omdp, two_exit::<Q>());
    let Diagram::Leaf { omdp, .. } = build::<f64>(&doc).unwrap() else {
        panic!("expected a leaf")
    };
    assert_eq!(*omdp, two_exit::<f64>());
}

#[test]
fn empty_term_table_has_no_root() {
    let e = parse(r#"{"format_version": 1, "root": "x", "terms": {}}"#).unwrap_err();
    assert!(matches!(e, IoError::NoRoot(_)));
    assert!(e.to_string().starts_with("no root"));
    let e = parse(r#"{"format_version": 1, "terms": {"a": "a"}}"#).unwrap_err();
    assert!(matches!(e, IoError::NoRoot(_)));
}

#[test]
fn probability_out_of_range_has_path() {
    let text = TWO_EXIT.replace(r#""exr1": "0.3", "exr2": "0.1", "sink": "0.6""#, r#""exr1": "1.5", "sink": "0""#);
    assert_ne!(text, TWO_EXIT);
    match parse(&text).unwrap_err() {
        IoError::Probability { path, value } => {
            assert_eq!(path, "$.terms.two_exit.omdp.actions.s1[1].to.exr1");
            assert_eq!(value, "1.5");
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn distribution_must_sum_to_one() {
    let text = TWO_EXIT.replace(r#""sink": "0.43""#, r#""sink": "0.42""#);
    let e = parse(&text).unwrap_err();
    assert!(matches!(&e, IoError::Schema { path, .. } if path.ends_with("enr1[1].to")), "{e}");
}

#[test]
fn syntax_errors_carry_lines() {
    let text = TWO_EXIT.replacen("\"root\":", "\"root\"", 1);
    match parse(&text).unwrap_err() {
        IoError::Syntax { line, .. } => assert_eq!(line, 3),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn reference_errors() {
    let unknown = TWO_ROOMS.replace(r#"["A", "B"]"#, r#"["A", "C"]"#);
    match parse(&unknown).unwrap_err() {
        IoError::UnknownReference { path, name } => {
            assert_eq!(name, "C");
            assert_eq!(path, "$.terms.AB.seq[1]");
        }
        other => panic!("unexpected {other}"),
    }
    let cyclic = TWO_ROOMS.replace(r#"["A", "B"]"#, r#"["A", "AB"]"#);
    assert!(matches!(parse(&cyclic).unwrap_err(), IoError::Cycle { .. }));
    let state = TWO_ROOMS.replace(r#""s2": "1""#, r#""s3": "1""#);
    assert!(matches!(
        parse(&state).unwrap_err(),
        IoError::UnknownReference { name, .. } if name == "s3"
    ));
}

#[test]
fn arity_errors_carry_term_path() {
    let swapped = TWO_ROOMS.replace(r#"["A", "B"]"#, r#"["B", "A", "A"]"#);
    match parse(&swapped).unwrap_err() {
        IoError::Arity { path, .. } => assert_eq!(path, "$.terms.AB.seq[1]"),
        other => panic!("unexpected {other}"),
    }
    let wide = TWO_ROOMS.replace(
        r#""AB": { "seq": ["A", "B"] }"#,
        r#""AB": { "trace": { "term": { "seq": ["A", "B"] }, "k": 2 } }"#,
    );
    assert!(matches!(parse(&wide).unwrap_err(), IoError::Arity { .. }));
    let chain = TWO_EXIT.replace(
        r#""root": "two_exit""#,
        r#""root": "c""#,
    );
    let chain = chain.replacen(
        r#""terms": {"#,
        r#""terms": { "c": { "generator": { "chain": { "n": 2, "leaf": "two_exit" } } },"#,
        1,
    );
    assert!(matches!(parse(&chain).unwrap_err(), IoError::Arity { .. }));
}

#[test]
fn exits_must_be_terminal() {
    let text = TWO_EXIT.replace(
        r#""sink": [{ "label": "loop", "to": { "sink": "1" } }]"#,
        r#""sink": [{ "label": "loop", "to": { "sink": "1" } }], "exr1": [{ "to": { "sink": "1" } }]"#,
    );
    assert!(matches!(parse(&text).unwrap_err(), IoError::Schema { .. }));
}

#[test]
fn generators_build_like_direct_calls() {
    let doc = parse(CHAIN_ROOM).unwrap();
    assert_eq!(doc.leaf_definitions(), 1);
    let d = build::<Q>(&doc).unwrap();
    let spec = RoomSpec {
        hole_density: Some(0.0),
        ..RoomSpec::new(3, Safety::Safe, Wind::Calm, 0)
    };
    let direct = gen_chain(3, Arc::new(gen_room::<Q>(&spec).unwrap())).unwrap();
    assert_eq!(d, direct);
    assert_eq!(parse(&print(&doc)).unwrap(), doc);
}

#[test]
fn numbers_are_read_through_their_decimal_form() {
    let text = TWO_EXIT.replace(r#""0.27""#, "0.27").replace(r#""0.43""#, "0.43");
    let doc = parse(&text).unwrap();
    assert_eq!(doc, parse(TWO_EXIT).unwrap());
}

#[test]
fn float_models_export_exactly_summing_documents() {
    let spec = RoomSpec::small(Safety::Unsafe, Wind::Windy, 5);
    let leaf: OpenMdp<f64> = gen_room(&spec).unwrap();
    let d = Diagram::seq(vec![Diagram::leaf("r", leaf.clone()), Diagram::leaf("r", leaf)]);
    let doc = parse(&print(&from_diagram(&d))).unwrap();
    assert_eq!(doc.leaf_definitions(), 2);
    let back = build::<f64>(&doc).unwrap();
    let (a, b) = (semantics(&d).unwrap(), semantics(&back).unwrap());
    for s in 0..a.num_states() {
        for (x, y) in a.mdp.enabled(s).iter().zip(b.mdp.enabled(s)) {
            for ((t, p), (u, r)) in x.dist.iter().zip(&y.dist) {
                assert_eq!(t, u);
                assert!((p - r).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn exact_report() {
    let doc = parse(TWO_EXIT).unwrap();
    let Diagram::Leaf { omdp, .. } = build::<Q>(&doc).unwrap() else {
        panic!("expected a leaf")
    };
    let a = approx_multiobj(&omdp, 0.0).unwrap();
    let r = Report::from_approx("mono", &a, Norm::Linf, 0.5, 0.25).unwrap();
    assert_eq!(r.error, 0.0);
    assert_eq!(r.error_exact.as_deref(), Some("0"));
    assert_eq!(r.p, 3);
    let text = emit_report(&r);
    let keys: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("  \""))
        .map(|l| l.trim().split('"').nth(1).unwrap())
        .collect();
    assert_eq!(
        keys,
        ["t", "t_m", "E", "p", "engine", "eta", "arith", "norm", "E_exact", "entrances"]
    );
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["entrances"][0]["lower"].as_array().unwrap().len(), 3);
}

#[test]
fn lower_vertices_at_small_eta() {
    let doc = parse(TWO_EXIT).unwrap();
    let Diagram::Leaf { omdp, .. } = build::<f64>(&doc).unwrap() else {
        panic!("expected a leaf")
    };
    let a = approx_multiobj(&omdp, 1e-6).unwrap();
    let r = Report::from_approx("mono", &a, Norm::L2, 0.0, 0.0).unwrap();
    assert_eq!(r.p, 3);
    assert!(r.error <= 1e-6);
    assert!(r.error_exact.is_none());
}

fn random_doc(seed: u64) -> (Diagram<Q>, sdp_io::DiagramDocument) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = random_diagram(&mut rng, LeafLimits::default());
    let doc = from_diagram(&d);
    (d, doc)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn print_parse_round_trip(seed in any::<u64>()) {
        let (d, doc) = random_doc(seed);
        let again = parse(&print(&doc)).unwrap();
        prop_assert_eq!(&again, &doc);
        prop_assert_eq!(print(&again), print(&doc));
        let built = build::<Q>(&again).unwrap();
        prop_assert_eq!(semantics(&built).unwrap(), semantics(&d).unwrap());
    }

    #[test]
    fn shared_leaves_stay_shared(seed in any::<u64>(), n in 1usize..5) {
        let (d, _) = random_doc(seed);
        let Some((_, _, leaf)) = d.leaves().into_iter().next() else { unreachable!() };
        let leaf = leaf.clone();
        let dup = Diagram::sum((0..n).map(|_| Diagram::leaf_arc("x", leaf.clone())).collect());
        let doc = from_diagram(&dup);
        prop_assert_eq!(doc.terms.len(), 2);
        let root = doc.term(&doc.root).unwrap();
        prop_assert!(matches!(root, Expr::Sum(cs) if cs.len() == n));
    }
}
