//! Structural hashing and the canonical binary form used for analysis.

use std::collections::HashMap;
use std::sync::Arc;

use sdp_compose::Diagram;
use sdp_core::{OpenMdp, Scalar};
use sha2::{Digest, Sha256};

pub type Hash = [u8; 32];

/// Memo of leaf hashes keyed by the address of the shared leaf.
#[derive(Default)]
pub struct Hasher {
    leaves: HashMap<usize, Hash>,
}

impl Hasher {
    pub fn leaf<T: Scalar>(&mut self, m: &Arc<OpenMdp<T>>) -> Hash {
        let key = Arc::as_ptr(m) as usize;
        *self.leaves.entry(key).or_insert_with(|| leaf_hash(m))
    }
}

/// Content hash of an oMDP: transitions, probabilities and open ends.
/// State and action names do not contribute.
pub fn leaf_hash<T: Scalar>(m: &OpenMdp<T>) -> Hash {
    let mut h = Sha256::new();
    h.update(b"leaf");
    let n = m.mdp.num_states();
    h.update((n as u64).to_le_bytes());
    for s in 0..n {
        let acts = m.mdp.enabled(s);
        h.update((acts.len() as u64).to_le_bytes());
        for a in acts {
            h.update((a.dist.len() as u64).to_le_bytes());
            for (t, p) in &a.dist {
                h.update((*t as u64).to_le_bytes());
                h.update(format!("{p:?};").as_bytes());
            }
        }
    }
    for list in [&m.ends.in_r, &m.ends.in_l, &m.ends.out_r, &m.ends.out_l] {
        h.update((list.len() as u64).to_le_bytes());
        for s in list {
            h.update((*s as u64).to_le_bytes());
        }
    }
    h.finalize().into()
}

fn node_hash(tag: &[u8], children: &[Hash]) -> Hash {
    let mut h = Sha256::new();
    h.update(tag);
    for c in children {
        h.update(c);
    }
    h.finalize().into()
}

/// Binary diagram with a hash per node.
#[derive(Clone, Debug)]
pub enum Canon<T> {
    Leaf {
        hash: Hash,
        name: String,
        omdp: Arc<OpenMdp<T>>,
    },
    Seq(Hash, Arc<Canon<T>>, Arc<Canon<T>>),
    Sum(Hash, Arc<Canon<T>>, Arc<Canon<T>>),
    Trace(Hash, Arc<Canon<T>>, usize),
}

impl<T: Scalar> Canon<T> {
    pub fn hash(&self) -> Hash {
        match self {
            Canon::Leaf { hash, .. } => *hash,
            Canon::Seq(h, ..) | Canon::Sum(h, ..) | Canon::Trace(h, ..) => *h,
        }
    }

    fn seq(a: Canon<T>, b: Canon<T>) -> Self {
        Canon::Seq(node_hash(b"seq", &[a.hash(), b.hash()]), Arc::new(a), Arc::new(b))
    }

    fn sum(a: Canon<T>, b: Canon<T>) -> Self {
        Canon::Sum(node_hash(b"sum", &[a.hash(), b.hash()]), Arc::new(a), Arc::new(b))
    }

    fn trace(a: Canon<T>, k: usize) -> Self {
        let tag = format!("trace{k}");
        Canon::Trace(node_hash(tag.as_bytes(), &[a.hash()]), Arc::new(a), k)
    }

    /// Back to a plain diagram; leaves keep their shared oMDPs.
    pub fn to_diagram(&self) -> Diagram<T> {
        match self {
            Canon::Leaf { name, omdp, .. } => Diagram::leaf_arc(name.clone(), omdp.clone()),
            Canon::Seq(_, a, b) => Diagram::seq(vec![a.to_diagram(), b.to_diagram()]),
            Canon::Sum(_, a, b) => Diagram::sum(vec![a.to_diagram(), b.to_diagram()]),
            Canon::Trace(_, a, k) => Diagram::trace(a.to_diagram(), *k),
        }
    }

    /// Number of distinct subterms.
    pub fn distinct_nodes(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        self.collect(&mut seen);
        seen.len()
    }

    fn collect(&self, seen: &mut std::collections::HashSet<Hash>) {
        if !seen.insert(self.hash()) {
            return;
        }
        match self {
            Canon::Leaf { .. } => {}
            Canon::Seq(_, a, b) | Canon::Sum(_, a, b) => {
                a.collect(seen);
                b.collect(seen);
            }
            Canon::Trace(_, a, _) => a.collect(seen),
        }
    }
}

/// Binary form of `d`.  N-ary nodes are folded to the left, except a
/// sequence of three or more identical children, which is split into
/// balanced halves so that equal halves share one cache entry.  Both
/// forms have the same semantics, state numbering included.
pub fn canonicalize<T: Scalar>(d: &Diagram<T>, hasher: &mut Hasher) -> Canon<T> {
    match d {
        Diagram::Leaf { name, omdp } => Canon::Leaf {
            hash: hasher.leaf(omdp),
            name: name.clone(),
            omdp: omdp.clone(),
        },
        Diagram::Seq(cs) => {
            let cs: Vec<Canon<T>> = cs.iter().map(|c| canonicalize(c, hasher)).collect();
            seq_of(cs)
        }
        Diagram::Sum(cs) => {
            let mut it = cs.iter().map(|c| canonicalize(c, hasher));
            let first = it.next().expect("type checked diagrams are non-empty");
            it.fold(first, Canon::sum)
        }
        Diagram::Trace(c, k) => Canon::trace(canonicalize(c, hasher), *k),
    }
}

fn seq_of<T: Scalar>(mut cs: Vec<Canon<T>>) -> Canon<T> {
    let uniform = cs.len() >= 3 && cs.iter().all(|c| c.hash() == cs[0].hash());
    if uniform {
        return balanced(&cs[0], cs.len(), &mut HashMap::new());
    }
    let rest = cs.split_off(1);
    let first = cs.pop().expect("type checked diagrams are non-empty");
    rest.into_iter().fold(first, Canon::seq)
}

fn balanced<T: Scalar>(c: &Canon<T>, n: usize, memo: &mut HashMap<usize, Canon<T>>) -> Canon<T> {
    if n == 1 {
        return c.clone();
    }
    if let Some(d) = memo.get(&n) {
        return d.clone();
    }
    let left = balanced(c, n / 2, memo);
    let right = balanced(c, n - n / 2, memo);
    let d = Canon::seq(left, right);
    memo.insert(n, d.clone());
    d
}
