use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use sdp_benchgen::{DiceSpec, RoomSpec};
use sdp_core::{validate_omdp, Arity, Mdp, OpenEnds, OpenMdp, Rational, Scalar};
use serde_json::{Map, Value};

use crate::IoError;

pub const FORMAT_VERSION: u64 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct DiagramDocument {
    pub root: String,
    /// In document order.
    pub terms: Vec<(String, Expr)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Ref(String),
    Seq(Vec<Expr>),
    Sum(Vec<Expr>),
    Trace(Box<Expr>, usize),
    Omdp(OmdpDoc),
    Generator(Generator),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Generator {
    Room(RoomSpec),
    Dice(DiceSpec),
    Chain { n: usize, leaf: Box<Expr> },
    Unigrid { n: usize, leaf: Box<Expr> },
    Bigrid { n: usize, leaf: Box<Expr> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OmdpDoc {
    pub states: Vec<String>,
    pub in_r: Vec<String>,
    pub in_l: Vec<String>,
    pub out_r: Vec<String>,
    pub out_l: Vec<String>,
    /// Per state with at least one action, in document order.
    pub actions: Vec<(String, Vec<ActionDoc>)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActionDoc {
    pub label: String,
    pub to: Vec<(String, Rational)>,
}

impl DiagramDocument {
    pub fn term(&self, name: &str) -> Option<&Expr> {
        self.terms.iter().find(|(n, _)| n == name).map(|(_, e)| e)
    }

    /// Leaf definitions (explicit oMDPs, rooms and dice) reachable from the
    /// root, each counted once however often it is referenced.
    pub fn leaf_definitions(&self) -> usize {
        fn walk<'a>(
            doc: &'a DiagramDocument,
            e: &'a Expr,
            seen: &mut HashSet<&'a str>,
            n: &mut usize,
        ) {
            match e {
                Expr::Ref(r) => {
                    if seen.insert(r) {
                        if let Some(t) = doc.term(r) {
                            walk(doc, t, seen, n);
                        }
                    }
                }
                Expr::Seq(cs) | Expr::Sum(cs) => cs.iter().for_each(|c| walk(doc, c, seen, n)),
                Expr::Trace(c, _) => walk(doc, c, seen, n),
                Expr::Omdp(_) | Expr::Generator(Generator::Room(_) | Generator::Dice(_)) => *n += 1,
                Expr::Generator(
                    Generator::Chain { leaf, .. }
                    | Generator::Unigrid { leaf, .. }
                    | Generator::Bigrid { leaf, .. },
                ) => walk(doc, leaf, seen, n),
            }
        }
        let mut n = 0;
        walk(self, &Expr::Ref(self.root.clone()), &mut HashSet::new(), &mut n);
        n
    }
}

impl OmdpDoc {
    pub fn arity(&self) -> Arity {
        Arity {
            m_r: self.in_r.len(),
            m_l: self.out_l.len(),
            n_r: self.out_r.len(),
            n_l: self.in_l.len(),
        }
    }

    pub fn to_omdp<T: Scalar>(&self) -> OpenMdp<T> {
        let mut m: Mdp<T> = Mdp::with_states(self.states.iter().cloned());
        let id = |n: &String| m_find(&self.states, n);
        for (s, acts) in &self.actions {
            for a in acts {
                let dist: Vec<_> = a.to.iter().map(|(t, p)| (id(t), T::from_rational(p))).collect();
                m.add_action(id(s), a.label.clone(), dist)
                    .expect("states checked while parsing");
            }
        }
        let ids = |v: &[String]| v.iter().map(id).collect();
        OpenMdp::new(
            m,
            OpenEnds {
                in_r: ids(&self.in_r),
                in_l: ids(&self.in_l),
                out_r: ids(&self.out_r),
                out_l: ids(&self.out_l),
            },
        )
    }

    pub fn from_omdp<T: Scalar>(m: &OpenMdp<T>) -> Self {
        let names = m.mdp.names();
        let n = |v: &[usize]| v.iter().map(|&s| names[s].clone()).collect();
        let actions = (0..m.num_states())
            .filter(|&s| !m.mdp.enabled(s).is_empty())
            .map(|s| {
                let acts = m
                    .mdp
                    .enabled(s)
                    .iter()
                    .map(|a| ActionDoc {
                        label: a.label.clone(),
                        to: a
                            .dist
                            .iter()
                            .map(|(t, p)| (names[*t].clone(), p.to_rational()))
                            .collect(),
                    })
                    .collect();
                (names[s].clone(), acts)
            })
            .collect();
        OmdpDoc {
            states: names.to_vec(),
            in_r: n(&m.ends.in_r),
            in_l: n(&m.ends.in_l),
            out_r: n(&m.ends.out_r),
            out_l: n(&m.ends.out_l),
            actions,
        }
    }
}

fn m_find(states: &[String], name: &str) -> usize {
    states.iter().position(|s| s == name).expect("states checked while parsing")
}

/// Exact value of `"n/d"`, `"0.27"`, `"-1.5e-3"` and the like.
pub fn parse_prob(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("0{int}{frac}").parse().ok()?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let pow = num_traits::pow(ten, scale.unsigned_abs() as usize);
    let mut r = if scale >= 0 {
        Rational::from_integer(digits * pow)
    } else {
        Rational::new(digits, pow)
    };
    if neg {
        r = -r;
    }
    Some(r)
}

fn obj<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, IoError> {
    v.as_object().ok_or_else(|| IoError::schema(path, "expected an object"))
}

fn single_key<'a>(v: &'a Value, path: &str) -> Result<(&'a str, &'a Value), IoError> {
    let o = obj(v, path)?;
    if o.len() != 1 {
        return Err(IoError::schema(path, "expected an object with exactly one key"));
    }
    let (k, v) = o.iter().next().expect("one entry");
    Ok((k.as_str(), v))
}

fn string_list(v: Option<&Value>, path: &str) -> Result<Vec<String>, IoError> {
    let Some(v) = v else {
        return Ok(Vec::new());
    };
    let a = v.as_array().ok_or_else(|| IoError::schema(path, "expected an array of names"))?;
    a.iter()
        .enumerate()
        .map(|(i, x)| {
            x.as_str()
                .map(str::to_string)
                .ok_or_else(|| IoError::schema(&format!("{path}[{i}]"), "expected a string"))
        })
        .collect()
}

fn count(v: &Value, path: &str) -> Result<usize, IoError> {
    v.as_u64()
        .map(|n| n as usize)
        .ok_or_else(|| IoError::schema(path, "expected a non-negative integer"))
}

fn parse_expr(v: &Value, path: &str) -> Result<Expr, IoError> {
    if let Some(name) = v.as_str() {
        return Ok(Expr::Ref(name.to_string()));
    }
    let (key, body) = single_key(v, path)?;
    let here = format!("{path}.{key}");
    match key {
        "seq" | "sum" => {
            let a = body
                .as_array()
                .ok_or_else(|| IoError::schema(&here, "expected an array"))?;
            if a.is_empty() {
                return Err(IoError::schema(&here, "empty composition"));
            }
            let cs = a
                .iter()
                .enumerate()
                .map(|(i, c)| parse_expr(c, &format!("{here}[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(if key == "seq" { Expr::Seq(cs) } else { Expr::Sum(cs) })
        }
        "trace" => {
            let o = obj(body, &here)?;
            let term = o
                .get("term")
                .ok_or_else(|| IoError::schema(&here, "missing \"term\""))?;
            let k = o
                .get("k")
                .ok_or_else(|| IoError::schema(&here, "missing \"k\""))?;
            Ok(Expr::Trace(
                Box::new(parse_expr(term, &format!("{here}.term"))?),
                count(k, &format!("{here}.k"))?,
            ))
        }
        "omdp" => Ok(Expr::Omdp(parse_omdp(body, &here)?)),
        "generator" => Ok(Expr::Generator(parse_generator(body, &here)?)),
        other => Err(IoError::schema(path, format!("unknown expression kind {other:?}"))),
    }
}

fn parse_generator(v: &Value, path: &str) -> Result<Generator, IoError> {
    let (key, body) = single_key(v, path)?;
    let here = format!("{path}.{key}");
    let serde_err = |e: serde_json::Error| IoError::schema(&here, e.to_string());
    match key {
        "room" => Ok(Generator::Room(
            serde_json::from_value(body.clone()).map_err(serde_err)?,
        )),
        "dice" => Ok(Generator::Dice(
            serde_json::from_value(body.clone()).map_err(serde_err)?,
        )),
        "chain" | "unigrid" | "bigrid" => {
            let o = obj(body, &here)?;
            let n = count(
                o.get("n").ok_or_else(|| IoError::schema(&here, "missing \"n\""))?,
                &format!("{here}.n"),
            )?;
            let leaf = Box::new(parse_expr(
                o.get("leaf")
                    .ok_or_else(|| IoError::schema(&here, "missing \"leaf\""))?,
                &format!("{here}.leaf"),
            )?);
            Ok(match key {
                "chain" => Generator::Chain { n, leaf },
                "unigrid" => Generator::Unigrid { n, leaf },
                _ => Generator::Bigrid { n, leaf },
            })
        }
        other => Err(IoError::schema(path, format!("unknown generator {other:?}"))),
    }
}

fn parse_omdp(v: &Value, path: &str) -> Result<OmdpDoc, IoError> {
    let o = obj(v, path)?;
    for k in o.keys() {
        if !["states", "in_r", "in_l", "out_r", "out_l", "actions"].contains(&k.as_str()) {
            return Err(IoError::schema(path, format!("unknown field {k:?}")));
        }
    }
    let states = string_list(o.get("states"), &format!("{path}.states"))?;
    let mut known = HashSet::new();
    for (i, s) in states.iter().enumerate() {
        if !known.insert(s.as_str()) {
            return Err(IoError::schema(
                &format!("{path}.states[{i}]"),
                format!("duplicate state {s:?}"),
            ));
        }
    }
    let check = |name: &str, p: &str| {
        if known.contains(name) {
            Ok(())
        } else {
            Err(IoError::UnknownReference {
                path: p.to_string(),
                name: name.to_string(),
            })
        }
    };
    let mut ends = Vec::new();
    for key in ["in_r", "in_l", "out_r", "out_l"] {
        let p = format!("{path}.{key}");
        let l = string_list(o.get(key), &p)?;
        for (i, s) in l.iter().enumerate() {
            check(s, &format!("{p}[{i}]"))?;
        }
        ends.push(l);
    }
    let mut actions = Vec::new();
    if let Some(a) = o.get("actions") {
        let ap = format!("{path}.actions");
        for (s, list) in obj(a, &ap)? {
            let sp = format!("{ap}.{s}");
            check(s, &sp)?;
            let list = list
                .as_array()
                .ok_or_else(|| IoError::schema(&sp, "expected an array of actions"))?;
            let mut acts = Vec::new();
            for (i, act) in list.iter().enumerate() {
                let p = format!("{sp}[{i}]");
                acts.push(parse_action(act, &p, &check)?);
            }
            if !acts.is_empty() {
                actions.push((s.clone(), acts));
            }
        }
    }
    let [in_r, in_l, out_r, out_l]: [Vec<String>; 4] = ends.try_into().expect("four lists");
    let doc = OmdpDoc {
        states,
        in_r,
        in_l,
        out_r,
        out_l,
        actions,
    };
    let report = validate_omdp(&doc.to_omdp::<Rational>());
    if !report.is_ok() {
        return Err(IoError::schema(path, report.to_string()));
    }
    Ok(doc)
}

fn parse_action(
    v: &Value,
    path: &str,
    check: &dyn Fn(&str, &str) -> Result<(), IoError>,
) -> Result<ActionDoc, IoError> {
    let o = obj(v, path)?;
    let label = match o.get("label") {
        None => String::new(),
        Some(l) => l
            .as_str()
            .ok_or_else(|| IoError::schema(&format!("{path}.label"), "expected a string"))?
            .to_string(),
    };
    let tp = format!("{path}.to");
    let to = obj(
        o.get("to").ok_or_else(|| IoError::schema(path, "missing \"to\""))?,
        &tp,
    )?;
    let mut dist = Vec::new();
    let mut total = Rational::zero();
    for (t, p) in to {
        let pp = format!("{tp}.{t}");
        check(t, &pp)?;
        let text = match p {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            _ => return Err(IoError::schema(&pp, "expected a probability string")),
        };
        let r = parse_prob(&text).ok_or_else(|| IoError::schema(&pp, format!("not a number: {text:?}")))?;
        if r.is_negative() || r > Rational::one() {
            return Err(IoError::Probability { path: pp, value: text });
        }
        total += &r;
        dist.push((t.clone(), r));
    }
    if total != Rational::one() {
        return Err(IoError::schema(&tp, format!("probabilities sum to {total}, not 1")));
    }
    Ok(ActionDoc { label, to: dist })
}

pub fn parse(text: &str) -> Result<DiagramDocument, IoError> {
    let v: Value = serde_json::from_str(text).map_err(|e| IoError::Syntax {
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    let top = obj(&v, "$")?;
    match top.get("format_version").and_then(Value::as_u64) {
        Some(FORMAT_VERSION) => {}
        Some(other) => {
            return Err(IoError::schema(
                "$.format_version",
                format!("unsupported version {other}"),
            ))
        }
        None => return Err(IoError::schema("$", "missing \"format_version\"")),
    }
    let terms_v = match top.get("terms") {
        Some(t) => obj(t, "$.terms")?,
        None => return Err(IoError::NoRoot("no terms".into())),
    };
    if terms_v.is_empty() {
        return Err(IoError::NoRoot("the term table is empty".into()));
    }
    let root = match top.get("root") {
        Some(Value::String(r)) => r.clone(),
        Some(_) => return Err(IoError::schema("$.root", "expected a term name")),
        None => return Err(IoError::NoRoot("missing \"root\"".into())),
    };
    if !terms_v.contains_key(&root) {
        return Err(IoError::NoRoot(format!("root {root:?} is not a term")));
    }
    let terms = terms_v
        .iter()
        .map(|(n, e)| Ok((n.clone(), parse_expr(e, &format!("$.terms.{n}"))?)))
        .collect::<Result<Vec<_>, IoError>>()?;
    let doc = DiagramDocument { root, terms };
    let mut arities = HashMap::new();
    let mut stack = Vec::new();
    for (name, _) in &doc.terms {
        term_arity(&doc, name, "$.root", &mut arities, &mut stack)?;
    }
    Ok(doc)
}

fn term_arity(
    doc: &DiagramDocument,
    name: &str,
    path: &str,
    memo: &mut HashMap<String, Arity>,
    stack: &mut Vec<String>,
) -> Result<Arity, IoError> {
    if let Some(a) = memo.get(name) {
        return Ok(*a);
    }
    if stack.iter().any(|s| s == name) {
        return Err(IoError::Cycle {
            path: path.to_string(),
            name: name.to_string(),
        });
    }
    let e = doc.term(name).ok_or_else(|| IoError::UnknownReference {
        path: path.to_string(),
        name: name.to_string(),
    })?;
    stack.push(name.to_string());
    let a = expr_arity(doc, e, &format!("$.terms.{name}"), memo, stack)?;
    stack.pop();
    memo.insert(name.to_string(), a);
    Ok(a)
}

fn mismatch(path: &str, msg: String) -> IoError {
    IoError::Arity {
        path: path.to_string(),
        msg,
    }
}

fn expr_arity(
    doc: &DiagramDocument,
    e: &Expr,
    path: &str,
    memo: &mut HashMap<String, Arity>,
    stack: &mut Vec<String>,
) -> Result<Arity, IoError> {
    let zero = Arity {
        m_r: 0,
        m_l: 0,
        n_r: 0,
        n_l: 0,
    };
    match e {
        Expr::Ref(r) => term_arity(doc, r, path, memo, stack),
        Expr::Seq(cs) => {
            let mut out: Option<Arity> = None;
            for (i, c) in cs.iter().enumerate() {
                let a = expr_arity(doc, c, &format!("{path}.seq[{i}]"), memo, stack)?;
                out = Some(match out {
                    None => a,
                    Some(prev) => {
                        if prev.right() != a.left() {
                            return Err(mismatch(
                                &format!("{path}.seq[{i}]"),
                                format!("{prev} does not match {a}"),
                            ));
                        }
                        Arity {
                            n_r: a.n_r,
                            n_l: a.n_l,
                            ..prev
                        }
                    }
                });
            }
            Ok(out.unwrap_or(zero))
        }
        Expr::Sum(cs) => {
            let mut acc = zero;
            for (i, c) in cs.iter().enumerate() {
                acc = acc.sum(&expr_arity(doc, c, &format!("{path}.sum[{i}]"), memo, stack)?);
            }
            Ok(acc)
        }
        Expr::Trace(c, k) => {
            let a = expr_arity(doc, c, &format!("{path}.trace.term"), memo, stack)?;
            if *k > a.m_r || *k > a.n_r {
                return Err(mismatch(path, format!("trace of {k} loops exceeds {a}")));
            }
            Ok(Arity {
                m_r: a.m_r - k,
                n_r: a.n_r - k,
                ..a
            })
        }
        Expr::Omdp(o) => Ok(o.arity()),
        Expr::Generator(g) => {
            let gp = format!("{path}.generator");
            let leaf_arity = |leaf: &Expr,
                              memo: &mut HashMap<String, Arity>,
                              stack: &mut Vec<String>| {
                let lp = format!("{gp}.leaf");
                if !is_leaf(doc, leaf) {
                    return Err(IoError::schema(&lp, "a generator leaf must be a single oMDP"));
                }
                expr_arity(doc, leaf, &lp, memo, stack)
            };
            let ar = |m_r, m_l, n_r, n_l| Arity { m_r, m_l, n_r, n_l };
            match g {
                Generator::Room(r) if r.unidirectional => Ok(ar(2, 0, 2, 0)),
                Generator::Room(_) => Ok(ar(2, 2, 2, 2)),
                Generator::Dice(d) => Ok(ar(d.bands.len(), 0, d.bands.len(), 0)),
                Generator::Chain { leaf, .. } => {
                    let a = leaf_arity(leaf, memo, stack)?;
                    if a.left() != a.right() || a.m_r == 0 {
                        return Err(mismatch(&gp, format!("chain needs (a,b)->(a,b) with a >= 1, got {a}")));
                    }
                    Ok(ar(a.m_r - 1, a.m_l, a.n_r - 1, a.n_l))
                }
                Generator::Unigrid { leaf, .. } => {
                    let a = leaf_arity(leaf, memo, stack)?;
                    if a != ar(2, 0, 2, 0) {
                        return Err(mismatch(&gp, format!("unigrid needs (2,0)->(2,0), got {a}")));
                    }
                    Ok(ar(2, 0, 1, 0))
                }
                Generator::Bigrid { leaf, .. } => {
                    let a = leaf_arity(leaf, memo, stack)?;
                    if a != ar(2, 2, 2, 2) {
                        return Err(mismatch(&gp, format!("bigrid needs (2,2)->(2,2), got {a}")));
                    }
                    Ok(ar(2, 2, 1, 0))
                }
            }
        }
    }
}

pub(crate) fn is_leaf(doc: &DiagramDocument, e: &Expr) -> bool {
    match e {
        Expr::Ref(r) => doc.term(r).is_some_and(|t| is_leaf(doc, t)),
        Expr::Omdp(_) | Expr::Generator(Generator::Room(_) | Generator::Dice(_)) => true,
        _ => false,
    }
}

fn expr_value(e: &Expr) -> Value {
    let one = |k: &str, v: Value| {
        let mut m = Map::new();
        m.insert(k.to_string(), v);
        Value::Object(m)
    };
    match e {
        Expr::Ref(r) => Value::String(r.clone()),
        Expr::Seq(cs) => one("seq", Value::Array(cs.iter().map(expr_value).collect())),
        Expr::Sum(cs) => one("sum", Value::Array(cs.iter().map(expr_value).collect())),
        Expr::Trace(c, k) => {
            let mut m = Map::new();
            m.insert("term".into(), expr_value(c));
            m.insert("k".into(), Value::from(*k));
            one("trace", Value::Object(m))
        }
        Expr::Omdp(o) => one("omdp", omdp_value(o)),
        Expr::Generator(g) => {
            let (k, v) = match g {
                Generator::Room(r) => ("room", serde_json::to_value(r).expect("plain data")),
                Generator::Dice(d) => ("dice", serde_json::to_value(d).expect("plain data")),
                Generator::Chain { n, leaf } => ("chain", sized(*n, leaf)),
                Generator::Unigrid { n, leaf } => ("unigrid", sized(*n, leaf)),
                Generator::Bigrid { n, leaf } => ("bigrid", sized(*n, leaf)),
            };
            one("generator", one(k, v))
        }
    }
}

fn sized(n: usize, leaf: &Expr) -> Value {
    let mut m = Map::new();
    m.insert("n".into(), Value::from(n));
    m.insert("leaf".into(), expr_value(leaf));
    Value::Object(m)
}

fn omdp_value(o: &OmdpDoc) -> Value {
    let names = |v: &[String]| Value::Array(v.iter().cloned().map(Value::String).collect());
    let mut m = Map::new();
    m.insert("states".into(), names(&o.states));
    m.insert("in_r".into(), names(&o.in_r));
    m.insert("in_l".into(), names(&o.in_l));
    m.insert("out_r".into(), names(&o.out_r));
    m.insert("out_l".into(), names(&o.out_l));
    let mut acts = Map::new();
    for (s, list) in &o.actions {
        let list = list
            .iter()
            .map(|a| {
                let mut to = Map::new();
                for (t, p) in &a.to {
                    to.insert(t.clone(), Value::String(p.to_string()));
                }
                let mut am = Map::new();
                am.insert("label".into(), Value::String(a.label.clone()));
                am.insert("to".into(), Value::Object(to));
                Value::Object(am)
            })
            .collect();
        acts.insert(s.clone(), Value::Array(list));
    }
    m.insert("actions".into(), Value::Object(acts));
    Value::Object(m)
}

/// Canonical text: fixed key order and probabilities as reduced `n/d`.
pub fn print(doc: &DiagramDocument) -> String {
    let mut top = Map::new();
    top.insert("format_version".into(), Value::from(FORMAT_VERSION));
    top.insert("root".into(), Value::String(doc.root.clone()));
    let mut terms = Map::new();
    for (n, e) in &doc.terms {
        terms.insert(n.clone(), expr_value(e));
    }
    top.insert("terms".into(), Value::Object(terms));
    serde_json::to_string_pretty(&Value::Object(top)).expect("plain data")
}
