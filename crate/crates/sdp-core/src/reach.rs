//! Maximal reachability with a deterministic memoryless witness.
//!
//! Maximal end components are collapsed first, so that every scheduler
//! of the quotient leaves the undecided region almost surely.  The
//! quotient is then solved by policy iteration; for the float engine a
//! value iteration from above supplies a sound upper bound.

use crate::graph::{can_reach, forward_reachable, mec_decomposition};
use crate::linsolve::{self, MAX_SWEEPS};
use crate::mdp::{Mdp, StateId};
use crate::scalar::{tol, Scalar};
use crate::scheduler::Scheduler;
use crate::CoreError;

/// Policy iteration rounds before giving up.
pub const MAX_POLICY_ROUNDS: usize = 100_000;
/// Minimal improvement for the float engine to switch actions.
const FLOAT_IMPROVE: f64 = 1e-11;

#[derive(Clone, Debug)]
pub struct MaxReach<T> {
    /// Value of `scheduler` per state; zero outside the region reachable
    /// from the sources.
    pub lower: Vec<T>,
    /// Upper bound on the optimal value per state.
    pub upper: Vec<T>,
    pub scheduler: Scheduler<T>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Succ {
    Node(usize),
    One,
    Zero,
}

struct Quotient<T> {
    node_of: Vec<Option<usize>>,
    /// Per node: its actions as (original state, action index, distribution).
    actions: Vec<Vec<(StateId, usize, Vec<(Succ, T)>)>>,
    /// Per node: member states and their internal actions, for MEC nodes.
    members: Vec<Vec<(StateId, Vec<usize>)>>,
}

/// `max_sigma Pr(source |= <> targets)` and an optimal DM scheduler.
/// Exact for the rational engine; within `1e-9` for floats.
pub fn max_reach<T: Scalar>(
    m: &Mdp<T>,
    source: StateId,
    targets: &[StateId],
) -> Result<(T, Scheduler<T>), CoreError> {
    let delta = if T::EXACT { 0.0 } else { 1e-9 };
    let r = max_reach_bounds(m, &[source], targets, delta)?;
    Ok((r.lower[source].clone(), r.scheduler))
}

/// Sound bounds `lower <= max Pr <= upper` at every source with
/// `upper - lower <= delta`, and a DM scheduler whose value is `lower`.
pub fn max_reach_bounds<T: Scalar>(
    m: &Mdp<T>,
    sources: &[StateId],
    targets: &[StateId],
    delta: f64,
) -> Result<MaxReach<T>, CoreError> {
    if !T::EXACT && delta <= 0.0 {
        return Err(CoreError::ExactToleranceNeedsRational);
    }
    let n = m.num_states();
    for &s in sources.iter().chain(targets) {
        if s >= n {
            return Err(CoreError::UnknownState(s));
        }
    }
    let mut is_target = vec![false; n];
    for &t in targets {
        is_target[t] = true;
    }
    let fwd = forward_reachable(m, sources, |s| is_target[s]);
    let can = can_reach(m, &fwd, &is_target);
    let maybe: Vec<bool> = (0..n).map(|s| fwd[s] && can[s] && !is_target[s]).collect();
    let q = build_quotient(m, &maybe, &is_target);

    let (policy, lower_nodes) = policy_iteration(&q)?;
    let upper_nodes = if T::EXACT {
        lower_nodes.clone()
    } else {
        let source_nodes: Vec<usize> = sources.iter().filter_map(|&s| q.node_of[s]).collect();
        upper_iteration(&q, &lower_nodes, &source_nodes, delta)?
    };

    let mut sched = Scheduler::first_action(m);
    for (node, &(s_star, a_star)) in policy.iter().enumerate() {
        sched.set_action(s_star, a_star);
        if !q.members[node].is_empty() {
            attract(m, &q.members[node], s_star, &mut sched);
        }
    }
    let value = |nodes: &Vec<T>, s: StateId| -> T {
        if is_target[s] {
            T::one()
        } else {
            q.node_of[s].map_or(T::zero(), |k| nodes[k].clone())
        }
    };
    Ok(MaxReach {
        lower: (0..n).map(|s| value(&lower_nodes, s)).collect(),
        upper: (0..n).map(|s| value(&upper_nodes, s)).collect(),
        scheduler: sched,
    })
}

fn build_quotient<T: Scalar>(m: &Mdp<T>, maybe: &[bool], is_target: &[bool]) -> Quotient<T> {
    let n = m.num_states();
    let mecs = mec_decomposition(m, maybe);
    let mut node_of: Vec<Option<usize>> = vec![None; n];
    let mut members: Vec<Vec<(StateId, Vec<usize>)>> = Vec::new();
    for ec in &mecs {
        let id = members.len();
        for &s in &ec.states {
            node_of[s] = Some(id);
        }
        members.push(ec.internal.clone());
    }
    for s in 0..n {
        if maybe[s] && node_of[s].is_none() {
            node_of[s] = Some(members.len());
            members.push(Vec::new());
        }
    }
    let nodes = members.len();
    let mut actions: Vec<Vec<(StateId, usize, Vec<(Succ, T)>)>> = vec![Vec::new(); nodes];
    let mut internal_of: Vec<Option<&Vec<usize>>> = vec![None; n];
    for mem in &members {
        for (s, acts) in mem {
            internal_of[*s] = Some(acts);
        }
    }
    for s in 0..n {
        let Some(node) = node_of[s] else { continue };
        for (a, act) in m.enabled(s).iter().enumerate() {
            if internal_of[s].is_some_and(|v| v.contains(&a)) {
                continue;
            }
            let mut dist: Vec<(Succ, T)> = Vec::new();
            for (t, p) in &act.dist {
                let succ = if is_target[*t] {
                    Succ::One
                } else if let Some(k) = node_of[*t] {
                    Succ::Node(k)
                } else {
                    Succ::Zero
                };
                match dist.iter_mut().find(|(u, _)| *u == succ) {
                    Some((_, q)) => *q = q.clone() + p.clone(),
                    None => dist.push((succ, p.clone())),
                }
            }
            actions[node].push((s, a, dist));
        }
    }
    Quotient {
        node_of,
        actions,
        members,
    }
}

fn q_value<T: Scalar>(dist: &[(Succ, T)], v: &[T]) -> T {
    dist.iter().fold(T::zero(), |acc, (succ, p)| match succ {
        Succ::Node(k) => acc + p.clone() * v[*k].clone(),
        Succ::One => acc + p.clone(),
        Succ::Zero => acc,
    })
}

fn evaluate<T: Scalar>(q: &Quotient<T>, choice: &[usize]) -> Result<Vec<T>, CoreError> {
    let nodes = q.actions.len();
    let mut rows: Vec<Vec<(usize, T)>> = Vec::with_capacity(nodes);
    let mut rhs: Vec<Vec<T>> = Vec::with_capacity(nodes);
    for node in 0..nodes {
        let (_, _, dist) = &q.actions[node][choice[node]];
        let mut row = Vec::new();
        let mut b = T::zero();
        for (succ, p) in dist {
            match succ {
                Succ::Node(k) => row.push((*k, p.clone())),
                Succ::One => b = b + p.clone(),
                Succ::Zero => {}
            }
        }
        rows.push(row);
        rhs.push(vec![b]);
    }
    let x = linsolve::solve_fixpoint(&rows, &rhs)?;
    Ok(x.into_iter().map(|mut v| v.swap_remove(0)).collect())
}

/// Returns the chosen `(state, action)` per node and its value.
#[allow(clippy::type_complexity)]
fn policy_iteration<T: Scalar>(
    q: &Quotient<T>,
) -> Result<(Vec<(StateId, usize)>, Vec<T>), CoreError> {
    let nodes = q.actions.len();
    if nodes == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let thr = T::tol(FLOAT_IMPROVE);
    // Start from the locally greedy choice for the target mass.
    let mut choice: Vec<usize> = (0..nodes)
        .map(|k| {
            let mut best = 0;
            let mut best_v = T::zero() - T::one();
            for (i, (_, _, d)) in q.actions[k].iter().enumerate() {
                let one = d
                    .iter()
                    .filter(|(s, _)| *s == Succ::One)
                    .fold(T::zero(), |acc, (_, p)| acc + p.clone());
                if one > best_v {
                    best_v = one;
                    best = i;
                }
            }
            best
        })
        .collect();
    for _ in 0..MAX_POLICY_ROUNDS {
        let v = evaluate(q, &choice)?;
        let mut improved = false;
        for node in 0..nodes {
            let cur = v[node].clone();
            let mut best = choice[node];
            let mut best_v = cur.clone() + thr.clone();
            for (i, (_, _, d)) in q.actions[node].iter().enumerate() {
                let val = q_value(d, &v);
                if val > best_v {
                    best_v = val;
                    best = i;
                }
            }
            if best != choice[node] {
                choice[node] = best;
                improved = true;
            }
        }
        if !improved {
            let picked = (0..nodes)
                .map(|k| {
                    let (s, a, _) = &q.actions[k][choice[k]];
                    (*s, *a)
                })
                .collect();
            return Ok((picked, v));
        }
    }
    Err(CoreError::NoConvergence)
}

/// Gauss-Seidel value iteration from above until every source node is
/// within `delta` of its lower bound.
fn upper_iteration<T: Scalar>(
    q: &Quotient<T>,
    lower: &[T],
    sources: &[usize],
    delta: f64,
) -> Result<Vec<T>, CoreError> {
    let nodes = q.actions.len();
    let mut u = vec![T::one(); nodes];
    let d = T::from_f64(delta);
    let slack = T::from_f64(tol::DIST);
    let done = |u: &[T]| {
        sources
            .iter()
            .all(|&k| u[k].clone() - lower[k].clone() <= d)
    };
    if done(&u) {
        return Ok(u);
    }
    for _ in 0..MAX_SWEEPS {
        let mut change = T::zero();
        for node in 0..nodes {
            let mut best = T::zero();
            for (_, _, dist) in &q.actions[node] {
                let mut selfp = T::zero();
                let mut rest = T::zero();
                for (succ, p) in dist {
                    match succ {
                        Succ::Node(k) if *k == node => selfp = selfp + p.clone(),
                        Succ::Node(k) => rest = rest + p.clone() * u[*k].clone(),
                        Succ::One => rest = rest + p.clone(),
                        Succ::Zero => {}
                    }
                }
                let val = rest / (T::one() - selfp);
                if val > best {
                    best = val;
                }
            }
            // Keep the bound sound against rounding and never raise it.
            let nv = (best + slack.clone()).min_of(u[node].clone()).max_of(lower[node].clone());
            let diff = u[node].clone() - nv.clone();
            if diff > change {
                change = diff;
            }
            u[node] = nv;
        }
        if done(&u) {
            return Ok(u);
        }
        if change <= T::from_f64(1e-15) {
            return Err(CoreError::NoConvergence);
        }
    }
    Err(CoreError::NoConvergence)
}

/// Inside an end component, steer every member towards `target` using
/// internal actions only.  Members are attracted in breadth-first layers;
/// each picks the action with the most mass into the earlier layers, so
/// that the induced chain drains quickly.
fn attract<T: Scalar>(
    m: &Mdp<T>,
    members: &[(StateId, Vec<usize>)],
    target: StateId,
    sched: &mut Scheduler<T>,
) {
    let mut done: std::collections::HashSet<StateId> = std::collections::HashSet::new();
    done.insert(target);
    loop {
        let mut layer = Vec::new();
        for (s, acts) in members {
            if done.contains(s) {
                continue;
            }
            let mut best: Option<(usize, T)> = None;
            for &a in acts {
                let mass = m.enabled(*s)[a]
                    .dist
                    .iter()
                    .filter(|(t, _)| done.contains(t))
                    .fold(T::zero(), |acc, (_, p)| acc + p.clone());
                if mass > T::zero() && best.as_ref().map_or(true, |(_, b)| mass > *b) {
                    best = Some((a, mass));
                }
            }
            if let Some((a, _)) = best {
                layer.push((*s, a));
            }
        }
        if layer.is_empty() {
            break;
        }
        for (s, a) in layer {
            sched.set_action(s, a);
            done.insert(s);
        }
    }
}
