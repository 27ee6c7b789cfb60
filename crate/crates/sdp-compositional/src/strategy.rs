//! Hierarchical schedulers and their replay on the monolithic semantics.

use std::collections::HashMap;
use std::sync::Arc;

use sdp_compose::{semantics, split_scheduler};
use sdp_core::{absorption, MarkovChain, OpenEnds, Scalar, Scheduler, StateId};
use sdp_geometry::Point;

use crate::analysis::{sum_entrance_owner, Analysis, Op, SdResult};
use crate::canon::Canon;
use crate::CompError;

/// What to play inside a sub-diagram after entering it.
#[derive(Debug)]
pub enum Strategy<T> {
    /// Memoryless scheduler of a leaf.
    Leaf(Arc<Scheduler<T>>),
    /// `per_child[k][j]`: what child `k` plays when entered through its
    /// entrance `j`.
    Node(Vec<Vec<Arc<Strategy<T>>>>),
}

/// Scheduler for the semantics from one entrance, achieving one lower
/// vertex of the root approximation.
#[derive(Clone, Debug)]
pub struct HierarchicalScheduler<T> {
    pub entrance: usize,
    pub vertex: usize,
    pub root: Arc<Strategy<T>>,
}

type Memo<T> = HashMap<(usize, usize, usize), Arc<Strategy<T>>>;

/// The strategy realising lower vertex `vertex` of entrance `entrance`.
pub fn extract_scheduler<T: Scalar>(
    res: &SdResult<T>,
    entrance: usize,
    vertex: usize,
) -> Result<HierarchicalScheduler<T>, CompError> {
    let root = strategy_for(&res.root, entrance, vertex, &mut HashMap::new())?;
    Ok(HierarchicalScheduler {
        entrance,
        vertex,
        root,
    })
}

fn strategy_for<T: Scalar>(
    an: &Arc<Analysis<T>>,
    i: usize,
    v: usize,
    memo: &mut Memo<T>,
) -> Result<Arc<Strategy<T>>, CompError> {
    let key = (Arc::as_ptr(an) as usize, i, v);
    if let Some(s) = memo.get(&key) {
        return Ok(s.clone());
    }
    let e = an.approx.entrances.get(i).ok_or(CompError::OutOfRange {
        what: "entrance",
        index: i,
        len: an.approx.entrances.len(),
    })?;
    let missing = CompError::OutOfRange {
        what: "lower vertex",
        index: v,
        len: e.schedulers.len(),
    };
    let s = match (&an.op, &an.stage) {
        (None, _) => Strategy::Leaf(e.schedulers.get(v).ok_or(missing)?.clone()),
        (Some(Op::Sum), _) => {
            let arities: Vec<_> = an.children.iter().map(|c| c.approx.arity).collect();
            let (owner, j_owner) = sum_entrance_owner(&arities, i);
            let mut per = Vec::new();
            for (k, c) in an.children.iter().enumerate() {
                let mut row = Vec::new();
                for j in 0..c.approx.entrances.len() {
                    let w = if (k, j) == (owner, j_owner) { v } else { 0 };
                    row.push(strategy_for(c, j, w, memo)?);
                }
                per.push(row);
            }
            Strategy::Node(per)
        }
        (Some(_), Some(stage)) => {
            let sigma = e.schedulers.get(v).ok_or(missing)?;
            let parts = split_scheduler(&stage.lower_diagram, sigma)?;
            let mut per = Vec::new();
            for (c, (_, sk)) in an.children.iter().zip(&parts) {
                let mut row = Vec::new();
                // Entrance j of the child shortcut is its state j.
                for j in 0..c.approx.entrances.len() {
                    let a = sk.action(j).unwrap_or(0);
                    row.push(strategy_for(c, j, a, memo)?);
                }
                per.push(row);
            }
            Strategy::Node(per)
        }
        (Some(_), None) => unreachable!("only sums skip the stage analysis"),
    };
    let s = Arc::new(s);
    memo.insert(key, s.clone());
    Ok(s)
}

struct Lay {
    offset: usize,
    len: usize,
    ends: OpenEnds,
    children: Vec<Lay>,
}

impl Lay {
    fn contains(&self, s: StateId) -> bool {
        (self.offset..self.offset + self.len).contains(&s)
    }

    fn at(&self, path: &[usize]) -> &Lay {
        path.iter().fold(self, |l, &k| &l.children[k])
    }
}

fn layout<T: Scalar>(c: &Canon<T>, offset: usize) -> Lay {
    match c {
        Canon::Leaf { omdp, .. } => Lay {
            offset,
            len: omdp.num_states(),
            ends: omdp.ends.shifted(offset),
            children: Vec::new(),
        },
        Canon::Seq(_, a, b) => {
            let la = layout(a, offset);
            let lb = layout(b, offset + la.len);
            let ends = OpenEnds {
                in_r: la.ends.in_r.clone(),
                in_l: lb.ends.in_l.clone(),
                out_r: lb.ends.out_r.clone(),
                out_l: la.ends.out_l.clone(),
            };
            Lay {
                offset,
                len: la.len + lb.len,
                ends,
                children: vec![la, lb],
            }
        }
        Canon::Sum(_, a, b) => {
            let la = layout(a, offset);
            let lb = layout(b, offset + la.len);
            let cat = |x: &[StateId], y: &[StateId]| [x, y].concat();
            let ends = OpenEnds {
                in_r: cat(&la.ends.in_r, &lb.ends.in_r),
                in_l: cat(&la.ends.in_l, &lb.ends.in_l),
                out_r: cat(&la.ends.out_r, &lb.ends.out_r),
                out_l: cat(&la.ends.out_l, &lb.ends.out_l),
            };
            Lay {
                offset,
                len: la.len + lb.len,
                ends,
                children: vec![la, lb],
            }
        }
        Canon::Trace(_, a, k) => {
            let la = layout(a, offset);
            let mut ends = la.ends.clone();
            ends.in_r.truncate(ends.in_r.len() - k);
            ends.out_r.truncate(ends.out_r.len() - k);
            Lay {
                offset,
                len: la.len,
                ends,
                children: vec![la],
            }
        }
    }
}

#[derive(Clone)]
struct Ctx<T> {
    path: Vec<usize>,
    strats: Vec<Arc<Strategy<T>>>,
}

impl<T> Ctx<T> {
    fn key(&self) -> (Vec<usize>, Vec<usize>) {
        (
            self.path.clone(),
            self.strats.iter().map(|s| Arc::as_ptr(s) as usize).collect(),
        )
    }
}

/// Extends `ctx` from its deepest node down to the leaf containing the
/// entrance state `t`.
fn descend<T>(root: &Lay, mut ctx: Ctx<T>, t: StateId) -> Result<Ctx<T>, CompError> {
    let mut node = root.at(&ctx.path);
    while !node.children.is_empty() {
        let per = match &**ctx.strats.last().expect("non-empty context") {
            Strategy::Node(per) => per,
            Strategy::Leaf(_) => return Err(replay_err(t, "leaf strategy at a composite node")),
        };
        let k = node
            .children
            .iter()
            .position(|c| c.contains(t))
            .ok_or_else(|| replay_err(t, "state outside the node"))?;
        let child = &node.children[k];
        let j = child
            .ends
            .entrances()
            .iter()
            .position(|&e| e == t)
            .ok_or_else(|| replay_err(t, "entered through a non-entrance"))?;
        ctx.path.push(k);
        ctx.strats.push(per[k][j].clone());
        node = child;
    }
    Ok(ctx)
}

fn replay_err(s: StateId, why: &str) -> CompError {
    CompError::Replay(format!("state {s}: {why}"))
}

/// Exit distribution of the semantics from the scheduler's entrance when
/// the hierarchical scheduler is played.
pub fn replay<T: Scalar>(
    canon: &Canon<T>,
    hs: &HierarchicalScheduler<T>,
) -> Result<Point<T>, CompError> {
    let sem = semantics(&canon.to_diagram())?;
    let lay = layout(canon, 0);
    let exits = sem.exits();
    let nx = exits.len();
    let exit_index: HashMap<StateId, usize> =
        exits.iter().enumerate().map(|(j, &s)| (s, j)).collect();
    let start_state = *sem.entrances().get(hs.entrance).ok_or(CompError::OutOfRange {
        what: "entrance",
        index: hs.entrance,
        len: sem.entrances().len(),
    })?;

    let mut ctxs: Vec<Ctx<T>> = Vec::new();
    let mut ctx_ids: HashMap<(Vec<usize>, Vec<usize>), usize> = HashMap::new();
    let mut intern = |c: Ctx<T>, ctxs: &mut Vec<Ctx<T>>| {
        *ctx_ids.entry(c.key()).or_insert_with(|| {
            ctxs.push(c);
            ctxs.len() - 1
        })
    };
    // Product states after the `nx` absorbing exit states.
    let mut rows: Vec<Vec<(usize, T)>> = (0..nx).map(|j| vec![(j, T::one())]).collect();
    let mut ids: HashMap<(StateId, usize), usize> = HashMap::new();
    let mut queue: Vec<(StateId, usize, usize)> = Vec::new();
    let mut id_of = |s: StateId, c: usize, rows: &mut Vec<Vec<(usize, T)>>, queue: &mut Vec<_>| {
        if let Some(&j) = exit_index.get(&s) {
            return j;
        }
        *ids.entry((s, c)).or_insert_with(|| {
            rows.push(Vec::new());
            queue.push((s, c, rows.len() - 1));
            rows.len() - 1
        })
    };

    let root_ctx = Ctx {
        path: Vec::new(),
        strats: vec![hs.root.clone()],
    };
    let c0 = intern(descend(&lay, root_ctx, start_state)?, &mut ctxs);
    let start = id_of(start_state, c0, &mut rows, &mut queue);
    while let Some((s, c, me)) = queue.pop() {
        let ctx = ctxs[c].clone();
        let leaf = lay.at(&ctx.path);
        let row = if leaf.ends.exits().contains(&s) {
            // A bridge: find the node that consumed this exit.
            let t = match sem.mdp.enabled(s) {
                [a] if a.dist.len() == 1 => a.dist[0].0,
                _ => return Err(replay_err(s, "leaf exit without a bridge")),
            };
            let mut d = ctx.path.len();
            while d > 0 && lay.at(&ctx.path[..d - 1]).ends.exits().contains(&s) {
                d -= 1;
            }
            if d == 0 {
                return Err(replay_err(s, "open exit treated as a bridge"));
            }
            let base = Ctx {
                path: ctx.path[..d - 1].to_vec(),
                strats: ctx.strats[..d].to_vec(),
            };
            let nc = intern(descend(&lay, base, t)?, &mut ctxs);
            vec![(id_of(t, nc, &mut rows, &mut queue), T::one())]
        } else {
            let sched = match &**ctx.strats.last().expect("non-empty context") {
                Strategy::Leaf(s) => s.clone(),
                Strategy::Node(_) => return Err(replay_err(s, "composite strategy at a leaf")),
            };
            let a = sched
                .action(s - leaf.offset)
                .ok_or_else(|| replay_err(s, "no choice at a reachable state"))?;
            let act = sem
                .mdp
                .enabled(s)
                .get(a)
                .ok_or_else(|| replay_err(s, "choice out of range"))?;
            act.dist
                .iter()
                .map(|(t, p)| (id_of(*t, c, &mut rows, &mut queue), p.clone()))
                .collect()
        };
        rows[me] = row;
    }
    let chain = MarkovChain { rows };
    let targets: Vec<usize> = (0..nx).collect();
    Ok(absorption(&chain, &[start], &targets)?.remove(0))
}
