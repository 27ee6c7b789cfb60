//! Recursive analysis of canonical diagrams.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use sdp_compose::{fmt_path, semantics, Diagram};
use sdp_core::{Arity, Scalar};
use sdp_geometry::{Halfspace, LowerSet, UpperSet};
use sdp_multiobj::{approx_multiobj, EntranceApprox, SoundApproximation};
use sdp_shortcut::{shortcut_from_lower, shortcut_from_upper};
use sha2::{Digest, Sha256};

use crate::canon::{canonicalize, Canon, Hash, Hasher};
use crate::CompError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    Seq,
    Sum,
    Trace(usize),
}

/// The two analyses of a composed shortcut.
#[derive(Clone, Debug)]
pub struct Stage<T> {
    /// The weighted-query loop on the composition of the children's lower shortcuts.
    pub lower: SoundApproximation<T>,
    /// The weighted-query loop on the composition of the children's upper shortcuts.
    pub upper: SoundApproximation<T>,
    /// The composition of the lower shortcuts, one leaf per child.
    pub lower_diagram: Diagram<T>,
}

#[derive(Clone, Debug)]
pub struct Composed<T> {
    pub approx: SoundApproximation<T>,
    /// Absent for sums, whose curves are the children's.
    pub stage: Option<Stage<T>>,
}

#[derive(Clone, Debug)]
pub struct Analysis<T> {
    pub approx: SoundApproximation<T>,
    /// `None` at leaves.
    pub op: Option<Op>,
    pub stage: Option<Stage<T>>,
    pub children: Vec<Arc<Analysis<T>>>,
}

/// Analyses keyed by structure, tolerance and engine.
pub struct CurveCache<T> {
    map: Mutex<HashMap<Hash, Arc<Analysis<T>>>>,
    enabled: bool,
    hits: AtomicUsize,
    misses: AtomicUsize,
    leaf_runs: AtomicUsize,
}

impl<T: Scalar> Default for CurveCache<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> CurveCache<T> {
    pub fn new() -> Self {
        CurveCache {
            map: Mutex::new(HashMap::new()),
            enabled: true,
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
            leaf_runs: AtomicUsize::new(0),
        }
    }

    /// A cache that never stores anything; counters still work.
    pub fn disabled() -> Self {
        CurveCache {
            enabled: false,
            ..Self::new()
        }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    /// Number of weighted-query runs on leaves.
    pub fn leaf_runs(&self) -> usize {
        self.leaf_runs.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, key: &Hash) -> Option<Arc<Analysis<T>>> {
        if !self.enabled {
            return None;
        }
        self.map.lock().expect("cache lock").get(key).cloned()
    }

    fn put(&self, key: Hash, a: Arc<Analysis<T>>) {
        if self.enabled {
            self.map.lock().expect("cache lock").insert(key, a);
        }
    }
}

fn cache_key<T: Scalar>(h: &Hash, eta: f64) -> Hash {
    let mut d = Sha256::new();
    d.update(h);
    d.update(eta.to_bits().to_le_bytes());
    d.update(T::ENGINE.as_bytes());
    d.finalize().into()
}

/// Result of the compositional analysis of a diagram.
#[derive(Clone, Debug)]
pub struct SdResult<T> {
    pub canon: Canon<T>,
    pub root: Arc<Analysis<T>>,
}

impl<T: Scalar> SdResult<T> {
    pub fn approx(&self) -> &SoundApproximation<T> {
        &self.root.approx
    }
}

/// Compositional analysis: a sound approximation of the semantics of `d`, computed from
/// the leaves upwards.
pub fn approx_multiobj_sd<T: Scalar>(
    d: &Diagram<T>,
    eta: f64,
    cache: &CurveCache<T>,
) -> Result<SdResult<T>, CompError> {
    if !T::EXACT && eta <= 0.0 {
        return Err(CompError::ZeroEtaNeedsRational);
    }
    sdp_compose::type_check(d)?;
    let canon = canonicalize(d, &mut Hasher::default());
    let root = analyze(&canon, eta, cache, &mut Vec::new())?;
    Ok(SdResult { canon, root })
}

fn analyze<T: Scalar>(
    c: &Canon<T>,
    eta: f64,
    cache: &CurveCache<T>,
    path: &mut Vec<usize>,
) -> Result<Arc<Analysis<T>>, CompError> {
    let key = cache_key::<T>(&c.hash(), eta);
    if let Some(a) = cache.get(&key) {
        cache.hits.fetch_add(1, Ordering::Relaxed);
        return Ok(a);
    }
    cache.misses.fetch_add(1, Ordering::Relaxed);
    let child = |c: &Canon<T>, k: usize, path: &mut Vec<usize>| {
        path.push(k);
        let r = analyze(c, eta, cache, path);
        path.pop();
        r
    };
    let (op, children) = match c {
        Canon::Leaf { omdp, .. } => {
            cache.leaf_runs.fetch_add(1, Ordering::Relaxed);
            let approx = approx_multiobj(omdp, eta).map_err(|source| CompError::Analysis {
                path: fmt_path(path),
                source,
            })?;
            let a = Arc::new(Analysis {
                approx,
                op: None,
                stage: None,
                children: Vec::new(),
            });
            cache.put(key, a.clone());
            return Ok(a);
        }
        Canon::Seq(_, a, b) => (Op::Seq, vec![child(a, 0, path)?, child(b, 1, path)?]),
        Canon::Sum(_, a, b) => (Op::Sum, vec![child(a, 0, path)?, child(b, 1, path)?]),
        Canon::Trace(_, a, k) => (Op::Trace(*k), vec![child(a, 0, path)?]),
    };
    let approxes: Vec<&SoundApproximation<T>> = children.iter().map(|a| &a.approx).collect();
    let composed = compose_at(op, &approxes, eta, path)?;
    let a = Arc::new(Analysis {
        approx: composed.approx,
        op: Some(op),
        stage: composed.stage,
        children,
    });
    cache.put(key, a.clone());
    Ok(a)
}

/// One compositional step on given child approximations: build the lower
/// and upper shortcuts, compose them with `op` and analyse both
/// compositions.  The lower set comes from the lower composition, the
/// upper set from the upper one.
pub fn compose_approximations<T: Scalar>(
    op: Op,
    children: &[&SoundApproximation<T>],
    eta: f64,
) -> Result<Composed<T>, CompError> {
    if !T::EXACT && eta <= 0.0 {
        return Err(CompError::ZeroEtaNeedsRational);
    }
    compose_at(op, children, eta, &[])
}

fn compose_at<T: Scalar>(
    op: Op,
    children: &[&SoundApproximation<T>],
    eta: f64,
    path: &[usize],
) -> Result<Composed<T>, CompError> {
    if op == Op::Sum {
        return Ok(Composed {
            approx: sum_approx(children, eta),
            stage: None,
        });
    }
    let build = |upper: bool| -> Result<Diagram<T>, CompError> {
        let mut leaves = Vec::new();
        for (k, a) in children.iter().enumerate() {
            let sc = if upper {
                shortcut_from_upper(a)
            } else {
                shortcut_from_lower(a)
            }
            .map_err(|source| CompError::Shortcut {
                path: fmt_path(path),
                source,
            })?;
            leaves.push(Diagram::leaf(format!("c{k}"), sc.omdp));
        }
        Ok(match op {
            Op::Seq => Diagram::seq(leaves),
            Op::Trace(k) => Diagram::trace(leaves.pop().expect("one child"), k),
            Op::Sum => unreachable!("sums are handled above"),
        })
    };
    let analyse = |d: &Diagram<T>| -> Result<SoundApproximation<T>, CompError> {
        let m = semantics(d)?;
        approx_multiobj(&m, eta).map_err(|source| CompError::Analysis {
            path: fmt_path(path),
            source,
        })
    };
    let lower_diagram = build(false)?;
    let upper_diagram = build(true)?;
    let lower = analyse(&lower_diagram)?;
    let upper = analyse(&upper_diagram)?;
    let entrances = lower
        .entrances
        .iter()
        .zip(&upper.entrances)
        .map(|(lo, up)| merge(lo, up))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Composed {
        approx: SoundApproximation {
            arity: lower.arity,
            eta,
            entrances,
        },
        stage: Some(Stage {
            lower,
            upper,
            lower_diagram,
        }),
    })
}

/// Lower set and schedulers of `lo` with the upper set of `up`, both in
/// the union of their reachable exits.
fn merge<T: Scalar>(
    lo: &EntranceApprox<T>,
    up: &EntranceApprox<T>,
) -> Result<EntranceApprox<T>, CompError> {
    let mut exits: Vec<usize> = lo.exits.iter().chain(&up.exits).copied().collect();
    exits.sort_unstable();
    exits.dedup();
    let dim = exits.len();
    let pos = |j: usize| exits.binary_search(&j).expect("exit in union");
    let lift = |sub: &[usize], p: &[T]| {
        let mut q = vec![T::zero(); dim];
        for (x, &j) in p.iter().zip(sub) {
            q[pos(j)] = x.clone();
        }
        q
    };
    let lower = LowerSet::from_vertices_unpruned(
        dim,
        lo.lower.vertices().iter().map(|p| lift(&lo.exits, p)).collect(),
    );
    let mut hs: Vec<Halfspace<T>> = up
        .upper
        .halfspaces()
        .iter()
        .map(|h| Halfspace {
            w: lift(&up.exits, &h.w),
            u: h.u.clone(),
        })
        .collect();
    for &j in &exits {
        if !up.exits.contains(&j) {
            let mut w = vec![T::zero(); dim];
            w[pos(j)] = T::one();
            hs.push(Halfspace { w, u: T::zero() });
        }
    }
    Ok(EntranceApprox {
        exits: exits.clone(),
        num_exits: lo.num_exits,
        lower,
        upper: UpperSet::with_halfspaces(dim, hs)?,
        schedulers: lo.schedulers.clone(),
        queries: lo.queries + up.queries,
        gap_history: lo.gap_history.clone(),
    })
}

/// Where entrance `i` of a sum of `arities` comes from: (child, child
/// entrance).
pub(crate) fn sum_entrance_owner(arities: &[Arity], i: usize) -> (usize, usize) {
    let total_r: usize = arities.iter().map(|a| a.m_r).sum();
    let (mut i, right) = if i < total_r { (i, true) } else { (i - total_r, false) };
    for (k, a) in arities.iter().enumerate() {
        let here = if right { a.m_r } else { a.n_l };
        if i < here {
            return (k, if right { i } else { a.m_r + i });
        }
        i -= here;
    }
    panic!("entrance out of range for sum");
}

/// Child exits mapped into the exits of the sum.
fn sum_exit_map(arities: &[Arity], k: usize) -> Vec<usize> {
    let total_r: usize = arities.iter().map(|a| a.n_r).sum();
    let r_off: usize = arities[..k].iter().map(|a| a.n_r).sum();
    let l_off: usize = arities[..k].iter().map(|a| a.m_l).sum();
    let a = arities[k];
    (0..a.n_r)
        .map(|o| r_off + o)
        .chain((0..a.m_l).map(|o| total_r + l_off + o))
        .collect()
}

/// Sums do not interact: every entrance keeps its child's curve.
fn sum_approx<T: Scalar>(children: &[&SoundApproximation<T>], eta: f64) -> SoundApproximation<T> {
    let arities: Vec<Arity> = children.iter().map(|c| c.arity).collect();
    let arity = arities.iter().fold(
        Arity {
            m_r: 0,
            m_l: 0,
            n_r: 0,
            n_l: 0,
        },
        |acc, a| acc.sum(a),
    );
    let entrances = (0..arity.entrances())
        .map(|i| {
            let (k, j) = sum_entrance_owner(&arities, i);
            let map = sum_exit_map(&arities, k);
            let e = &children[k].entrances[j];
            EntranceApprox {
                exits: e.exits.iter().map(|&o| map[o]).collect(),
                num_exits: arity.exits(),
                ..e.clone()
            }
        })
        .collect();
    SoundApproximation {
        arity,
        eta,
        entrances,
    }
}
