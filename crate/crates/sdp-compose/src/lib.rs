//! String diagrams over open MDPs: type checking, sequential composition,
//! sums, traces and the monolithic semantics.

use std::fmt;
use std::sync::Arc;

use sdp_core::{Action, Arity, OpenEnds, OpenMdp, Scalar, Scheduler};

/// Position of a node: child indices from the root.
pub type NodePath = Vec<usize>;

#[derive(Clone, Debug, PartialEq)]
pub enum Diagram<T> {
    Leaf { name: String, omdp: Arc<OpenMdp<T>> },
    Seq(Vec<Diagram<T>>),
    Sum(Vec<Diagram<T>>),
    /// Loops the last `k` rightward exits back to the last `k` rightward
    /// entrances, pairwise in order.
    Trace(Box<Diagram<T>>, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ComposeError {
    #[error("arity mismatch at {}: {left} does not match {right}", fmt_path(.path))]
    ArityMismatch {
        path: NodePath,
        left: Arity,
        right: Arity,
    },
    #[error("trace of {k} loops at {} exceeds arity {arity}", fmt_path(.path))]
    TraceTooWide { path: NodePath, k: usize, arity: Arity },
    #[error("empty composition at {}", fmt_path(.path))]
    Empty { path: NodePath },
}

pub fn fmt_path(p: &[usize]) -> String {
    if p.is_empty() {
        return "root".to_string();
    }
    let parts: Vec<String> = p.iter().map(|i| i.to_string()).collect();
    format!("root/{}", parts.join("/"))
}

impl<T: Scalar> Diagram<T> {
    pub fn leaf(name: impl Into<String>, omdp: OpenMdp<T>) -> Self {
        Diagram::Leaf {
            name: name.into(),
            omdp: Arc::new(omdp),
        }
    }

    pub fn leaf_arc(name: impl Into<String>, omdp: Arc<OpenMdp<T>>) -> Self {
        Diagram::Leaf {
            name: name.into(),
            omdp,
        }
    }

    pub fn seq(children: Vec<Diagram<T>>) -> Self {
        Diagram::Seq(children)
    }

    pub fn sum(children: Vec<Diagram<T>>) -> Self {
        Diagram::Sum(children)
    }

    pub fn trace(child: Diagram<T>, k: usize) -> Self {
        Diagram::Trace(Box::new(child), k)
    }

    /// Leaves in left-to-right order, with their paths.
    pub fn leaves(&self) -> Vec<(NodePath, &str, &Arc<OpenMdp<T>>)> {
        let mut out = Vec::new();
        self.collect_leaves(&mut Vec::new(), &mut out);
        out
    }

    fn collect_leaves<'a>(
        &'a self,
        path: &mut NodePath,
        out: &mut Vec<(NodePath, &'a str, &'a Arc<OpenMdp<T>>)>,
    ) {
        match self {
            Diagram::Leaf { name, omdp } => out.push((path.clone(), name, omdp)),
            Diagram::Seq(cs) | Diagram::Sum(cs) => {
                for (i, c) in cs.iter().enumerate() {
                    path.push(i);
                    c.collect_leaves(path, out);
                    path.pop();
                }
            }
            Diagram::Trace(c, _) => {
                path.push(0);
                c.collect_leaves(path, out);
                path.pop();
            }
        }
    }

    /// Total number of states of the semantics.
    pub fn num_states(&self) -> usize {
        self.leaves().iter().map(|(_, _, m)| m.num_states()).sum()
    }
}

impl<T: Scalar> fmt::Display for Diagram<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, cs: &[Diagram<T>], op: &str| {
            write!(f, "(")?;
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    write!(f, " {op} ")?;
                }
                write!(f, "{c}")?;
            }
            write!(f, ")")
        };
        match self {
            Diagram::Leaf { name, .. } => write!(f, "{name}"),
            Diagram::Seq(cs) => join(f, cs, ";"),
            Diagram::Sum(cs) => join(f, cs, "+"),
            Diagram::Trace(c, k) => write!(f, "trace[{k}]({c})"),
        }
    }
}

/// Arity of the whole diagram.
pub fn type_check<T: Scalar>(d: &Diagram<T>) -> Result<Arity, ComposeError> {
    check_at(d, &mut Vec::new())
}

fn check_at<T: Scalar>(d: &Diagram<T>, path: &mut NodePath) -> Result<Arity, ComposeError> {
    match d {
        Diagram::Leaf { omdp, .. } => Ok(omdp.arity()),
        Diagram::Seq(cs) => {
            if cs.is_empty() {
                return Err(ComposeError::Empty { path: path.clone() });
            }
            let mut arities = Vec::with_capacity(cs.len());
            for (i, c) in cs.iter().enumerate() {
                path.push(i);
                arities.push(check_at(c, path)?);
                path.pop();
            }
            for w in arities.windows(2) {
                check_seq_arity(&w[0], &w[1], path)?;
            }
            let (first, last) = (arities[0], arities[arities.len() - 1]);
            Ok(Arity {
                m_r: first.m_r,
                m_l: first.m_l,
                n_r: last.n_r,
                n_l: last.n_l,
            })
        }
        Diagram::Sum(cs) => {
            let mut acc = Arity {
                m_r: 0,
                m_l: 0,
                n_r: 0,
                n_l: 0,
            };
            for (i, c) in cs.iter().enumerate() {
                path.push(i);
                acc = acc.sum(&check_at(c, path)?);
                path.pop();
            }
            Ok(acc)
        }
        Diagram::Trace(c, k) => {
            path.push(0);
            let a = check_at(c, path)?;
            path.pop();
            check_trace_arity(&a, *k, path)?;
            Ok(Arity {
                m_r: a.m_r - k,
                m_l: a.m_l,
                n_r: a.n_r - k,
                n_l: a.n_l,
            })
        }
    }
}

fn check_seq_arity(a: &Arity, b: &Arity, path: &NodePath) -> Result<(), ComposeError> {
    if a.right() != b.left() {
        return Err(ComposeError::ArityMismatch {
            path: path.clone(),
            left: *a,
            right: *b,
        });
    }
    Ok(())
}

fn check_trace_arity(a: &Arity, k: usize, path: &NodePath) -> Result<(), ComposeError> {
    if k > a.m_r.min(a.n_r) {
        return Err(ComposeError::TraceTooWide {
            path: path.clone(),
            k,
            arity: *a,
        });
    }
    Ok(())
}

fn bridge<T: Scalar>(m: &mut OpenMdp<T>, from: usize, to: usize) {
    m.mdp.push_action_unchecked(
        from,
        Action {
            label: BRIDGE.to_string(),
            dist: vec![(to, T::one())],
        },
    );
}

/// Label of the Dirac actions added by composition.
pub const BRIDGE: &str = "bridge";

/// `a ; b`: states of `a` first, then those of `b`.
pub fn seq_compose<T: Scalar>(a: &OpenMdp<T>, b: &OpenMdp<T>) -> Result<OpenMdp<T>, ComposeError> {
    check_seq_arity(&a.arity(), &b.arity(), &Vec::new())?;
    let mut out = a.clone();
    let off = out.mdp.append(&b.mdp);
    let be = b.ends.shifted(off);
    for (x, y) in a.ends.out_r.iter().zip(&be.in_r) {
        bridge(&mut out, *x, *y);
    }
    for (x, y) in be.out_l.iter().zip(&a.ends.in_l) {
        bridge(&mut out, *x, *y);
    }
    out.ends = OpenEnds {
        in_r: a.ends.in_r.clone(),
        in_l: be.in_l,
        out_r: be.out_r,
        out_l: a.ends.out_l.clone(),
    };
    Ok(out)
}

/// `a + b`: stacked without interaction.
pub fn sum_compose<T: Scalar>(a: &OpenMdp<T>, b: &OpenMdp<T>) -> OpenMdp<T> {
    let mut out = a.clone();
    let off = out.mdp.append(&b.mdp);
    let be = b.ends.shifted(off);
    out.ends.in_r.extend(be.in_r);
    out.ends.in_l.extend(be.in_l);
    out.ends.out_r.extend(be.out_r);
    out.ends.out_l.extend(be.out_l);
    out
}

/// Bridges the last `k` rightward exits to the last `k` rightward
/// entrances and closes them.
pub fn trace_compose<T: Scalar>(a: &OpenMdp<T>, k: usize) -> Result<OpenMdp<T>, ComposeError> {
    check_trace_arity(&a.arity(), k, &Vec::new())?;
    let mut out = a.clone();
    let nr = out.ends.out_r.len();
    let mr = out.ends.in_r.len();
    let exits = out.ends.out_r.split_off(nr - k);
    let entrances = out.ends.in_r.split_off(mr - k);
    for (x, y) in exits.iter().zip(&entrances) {
        bridge(&mut out, *x, *y);
    }
    Ok(out)
}

/// Where each leaf's states live inside the semantics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeafSpan {
    pub path: NodePath,
    pub name: String,
    pub offset: usize,
    pub len: usize,
    /// Exit states of the leaf, in leaf-local ids.
    pub exits: Vec<usize>,
}

/// The monolithic oMDP of `d`.
pub fn semantics<T: Scalar>(d: &Diagram<T>) -> Result<OpenMdp<T>, ComposeError> {
    type_check(d)?;
    Ok(build(d))
}

/// The semantics together with the location of every leaf.
pub fn semantics_with_layout<T: Scalar>(
    d: &Diagram<T>,
) -> Result<(OpenMdp<T>, Vec<LeafSpan>), ComposeError> {
    let m = semantics(d)?;
    let mut offset = 0;
    let spans = d
        .leaves()
        .into_iter()
        .map(|(path, name, leaf)| {
            let span = LeafSpan {
                path,
                name: name.to_string(),
                offset,
                len: leaf.num_states(),
                exits: leaf.exits(),
            };
            offset += span.len;
            span
        })
        .collect();
    Ok((m, spans))
}

fn build<T: Scalar>(d: &Diagram<T>) -> OpenMdp<T> {
    match d {
        Diagram::Leaf { omdp, .. } => (**omdp).clone(),
        Diagram::Seq(cs) => {
            let mut acc = build(&cs[0]);
            for c in &cs[1..] {
                acc = seq_compose(&acc, &build(c)).expect("type checked");
            }
            acc
        }
        Diagram::Sum(cs) => cs
            .iter()
            .fold(OpenMdp::empty(), |acc, c| sum_compose(&acc, &build(c))),
        Diagram::Trace(c, k) => trace_compose(&build(c), *k).expect("type checked"),
    }
}

/// Restricts a scheduler on the semantics to every leaf; choices at leaf
/// exits (the forced bridges) are dropped.
pub fn split_scheduler<T: Scalar>(
    d: &Diagram<T>,
    s: &Scheduler<T>,
) -> Result<Vec<(LeafSpan, Scheduler<T>)>, ComposeError> {
    let (_, spans) = semantics_with_layout(d)?;
    Ok(spans
        .into_iter()
        .map(|span| {
            let mut r = s.restrict(span.offset, span.len);
            for &x in &span.exits {
                r.unset(x);
            }
            (span, r)
        })
        .collect())
}
