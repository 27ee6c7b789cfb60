use std::collections::HashMap;
use std::sync::Arc;

use num_traits::One;
use sdp_benchgen::{gen_bigrid, gen_chain, gen_dice, gen_room, gen_unigrid, BenchError};
use sdp_compose::{type_check, Diagram};
use sdp_core::{OpenMdp, Rational, Scalar};

use crate::doc::{is_leaf, parse_prob, ActionDoc, DiagramDocument, Expr, Generator, OmdpDoc};
use crate::IoError;

/// Builds the root diagram in the engine `T`.  Every term is built once;
/// references share the leaf oMDPs.
pub fn build<T: Scalar>(doc: &DiagramDocument) -> Result<Diagram<T>, IoError> {
    let mut memo = HashMap::new();
    let d = build_term(doc, &doc.root, "$.root", &mut memo)?;
    type_check(&d).map_err(|source| IoError::Compose {
        path: "$.root".into(),
        source,
    })?;
    Ok(d)
}

fn build_term<T: Scalar>(
    doc: &DiagramDocument,
    name: &str,
    path: &str,
    memo: &mut HashMap<String, Diagram<T>>,
) -> Result<Diagram<T>, IoError> {
    if let Some(d) = memo.get(name) {
        return Ok(d.clone());
    }
    let e = doc.term(name).ok_or_else(|| IoError::UnknownReference {
        path: path.to_string(),
        name: name.to_string(),
    })?;
    let d = build_expr(doc, e, name, &format!("$.terms.{name}"), memo)?;
    memo.insert(name.to_string(), d.clone());
    Ok(d)
}

fn build_expr<T: Scalar>(
    doc: &DiagramDocument,
    e: &Expr,
    name: &str,
    path: &str,
    memo: &mut HashMap<String, Diagram<T>>,
) -> Result<Diagram<T>, IoError> {
    let children = |cs: &[Expr], key: &str, memo: &mut HashMap<String, Diagram<T>>| {
        cs.iter()
            .enumerate()
            .map(|(i, c)| {
                build_expr(doc, c, &format!("{name}/{i}"), &format!("{path}.{key}[{i}]"), memo)
            })
            .collect::<Result<Vec<_>, _>>()
    };
    let bench = |source: BenchError| IoError::Bench {
        path: path.to_string(),
        source,
    };
    Ok(match e {
        Expr::Ref(r) => build_term(doc, r, path, memo)?,
        Expr::Seq(cs) => Diagram::seq(children(cs, "seq", memo)?),
        Expr::Sum(cs) => Diagram::sum(children(cs, "sum", memo)?),
        Expr::Trace(c, k) => Diagram::trace(
            build_expr(doc, c, name, &format!("{path}.trace.term"), memo)?,
            *k,
        ),
        Expr::Omdp(o) => Diagram::leaf(name, o.to_omdp()),
        Expr::Generator(g) => match g {
            Generator::Room(spec) => Diagram::leaf(name, gen_room(spec).map_err(bench)?),
            Generator::Dice(spec) => Diagram::leaf(name, gen_dice(spec).map_err(bench)?),
            Generator::Chain { n, leaf }
            | Generator::Unigrid { n, leaf }
            | Generator::Bigrid { n, leaf } => {
                let lp = format!("{path}.generator.leaf");
                if !is_leaf(doc, leaf) {
                    return Err(IoError::schema(&lp, "a generator leaf must be a single oMDP"));
                }
                let Diagram::Leaf { omdp, .. } = build_expr(doc, leaf, name, &lp, memo)? else {
                    unreachable!("leaf expressions build leaves")
                };
                match g {
                    Generator::Chain { .. } => gen_chain(*n, omdp),
                    Generator::Unigrid { .. } => gen_unigrid(*n, omdp),
                    _ => gen_bigrid(*n, omdp),
                }
                .map_err(bench)?
            }
        },
    })
}

/// Document with one term per distinct leaf and a root term holding the
/// diagram structure.
pub fn from_diagram<T: Scalar>(d: &Diagram<T>) -> DiagramDocument {
    let mut terms: Vec<(String, Expr)> = Vec::new();
    let mut by_ptr: HashMap<*const OpenMdp<T>, String> = HashMap::new();
    let root = structure(d, &mut terms, &mut by_ptr);
    let mut root_name = "main".to_string();
    while terms.iter().any(|(n, _)| *n == root_name) {
        root_name.push('_');
    }
    terms.push((root_name.clone(), root));
    DiagramDocument {
        root: root_name,
        terms,
    }
}

fn structure<T: Scalar>(
    d: &Diagram<T>,
    terms: &mut Vec<(String, Expr)>,
    by_ptr: &mut HashMap<*const OpenMdp<T>, String>,
) -> Expr {
    match d {
        Diagram::Leaf { name, omdp } => {
            let key = Arc::as_ptr(omdp);
            if let Some(n) = by_ptr.get(&key) {
                return Expr::Ref(n.clone());
            }
            let mut n = if name.is_empty() { "leaf".to_string() } else { name.clone() };
            let base = n.clone();
            let mut i = 1;
            while terms.iter().any(|(t, _)| *t == n) {
                i += 1;
                n = format!("{base}_{i}");
            }
            terms.push((n.clone(), Expr::Omdp(omdp_doc(omdp))));
            by_ptr.insert(key, n.clone());
            Expr::Ref(n)
        }
        Diagram::Seq(cs) => Expr::Seq(cs.iter().map(|c| structure(c, terms, by_ptr)).collect()),
        Diagram::Sum(cs) => Expr::Sum(cs.iter().map(|c| structure(c, terms, by_ptr)).collect()),
        Diagram::Trace(c, k) => Expr::Trace(Box::new(structure(c, terms, by_ptr)), *k),
    }
}

fn omdp_doc<T: Scalar>(m: &OpenMdp<T>) -> OmdpDoc {
    let mut o = OmdpDoc::from_omdp(m);
    if !T::EXACT {
        for (_, acts) in &mut o.actions {
            for a in acts.iter_mut() {
                shortest_decimals(a);
            }
        }
    }
    o
}

/// Rewrites float probabilities in their shortest decimal form; the last
/// entry takes the exact residual so that the distribution sums to one.
fn shortest_decimals(a: &mut ActionDoc) {
    let k = a.to.len();
    let mut used = Rational::from_integer(0.into());
    for (i, (_, p)) in a.to.iter_mut().enumerate() {
        if i + 1 == k {
            *p = Rational::one() - &used;
        } else {
            *p = parse_prob(&p.to_f64().to_string()).expect("finite float");
            used += &*p;
        }
    }
}
