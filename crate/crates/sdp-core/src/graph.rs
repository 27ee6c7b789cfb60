//! Graph analyses on the support of an MDP: reachability, strongly
//! connected components and maximal end components.

use crate::mdp::{Mdp, StateId};
use crate::scalar::Scalar;

/// States reachable from `from`; states with `stop(s)` are not expanded.
pub fn forward_reachable<T: Scalar>(
    m: &Mdp<T>,
    from: &[StateId],
    stop: impl Fn(StateId) -> bool,
) -> Vec<bool> {
    let mut seen = vec![false; m.num_states()];
    let mut stack = Vec::new();
    for &s in from {
        if !seen[s] {
            seen[s] = true;
            stack.push(s);
        }
    }
    while let Some(s) = stack.pop() {
        if stop(s) {
            continue;
        }
        for a in m.enabled(s) {
            for (t, _) in &a.dist {
                if !seen[*t] {
                    seen[*t] = true;
                    stack.push(*t);
                }
            }
        }
    }
    seen
}

/// States inside `within` from which some target in `targets` is
/// reachable under some scheduler.  Targets are not expanded.
pub fn can_reach<T: Scalar>(m: &Mdp<T>, within: &[bool], targets: &[bool]) -> Vec<bool> {
    let n = m.num_states();
    let mut preds: Vec<Vec<StateId>> = vec![Vec::new(); n];
    for s in 0..n {
        if !within[s] || targets[s] {
            continue;
        }
        for a in m.enabled(s) {
            for (t, _) in &a.dist {
                preds[*t].push(s);
            }
        }
    }
    let mut can = vec![false; n];
    let mut stack: Vec<StateId> = (0..n).filter(|&s| within[s] && targets[s]).collect();
    for &s in &stack {
        can[s] = true;
    }
    while let Some(s) = stack.pop() {
        for &p in &preds[s] {
            if !can[p] {
                can[p] = true;
                stack.push(p);
            }
        }
    }
    can
}

/// Iterative Tarjan over the subgraph induced by `active` states, where
/// the successors of `s` are given by `succ(s)`.  Returns a component id
/// per active state (`usize::MAX` for inactive ones) and the count.
pub fn scc<F>(n: usize, active: &[bool], succ: F) -> (Vec<usize>, usize)
where
    F: Fn(StateId) -> Vec<StateId>,
{
    const UNSET: usize = usize::MAX;
    let mut index = vec![UNSET; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSET; n];
    let mut stack: Vec<StateId> = Vec::new();
    let mut next_index = 0usize;
    let mut ncomp = 0usize;
    for root in 0..n {
        if !active[root] || index[root] != UNSET {
            continue;
        }
        let mut call: Vec<(StateId, Vec<StateId>, usize)> = Vec::new();
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        let succs = succ(root).into_iter().filter(|t| active[*t]).collect();
        call.push((root, succs, 0));
        while let Some((v, succs, pos)) = call.last_mut() {
            let v = *v;
            if *pos < succs.len() {
                let w = succs[*pos];
                *pos += 1;
                if index[w] == UNSET {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    let ws = succ(w).into_iter().filter(|t| active[*t]).collect();
                    call.push((w, ws, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some((u, _, _)) = call.last() {
                    low[*u] = low[*u].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp[w] = ncomp;
                        if w == v {
                            break;
                        }
                    }
                    ncomp += 1;
                }
            }
        }
    }
    (comp, ncomp)
}

/// A maximal end component: its states and, per state, the actions whose
/// support stays inside the component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EndComponent {
    pub states: Vec<StateId>,
    pub internal: Vec<(StateId, Vec<usize>)>,
}

/// Maximal end components of the sub-MDP on `within`.  An action only
/// counts if its whole support lies in `within`.
pub fn mec_decomposition<T: Scalar>(m: &Mdp<T>, within: &[bool]) -> Vec<EndComponent> {
    let n = m.num_states();
    let mut alive: Vec<bool> = within.to_vec();
    let mut allowed: Vec<Vec<usize>> = (0..n)
        .map(|s| {
            if !within[s] {
                return Vec::new();
            }
            (0..m.enabled(s).len())
                .filter(|&a| m.enabled(s)[a].dist.iter().all(|(t, _)| within[*t]))
                .collect()
        })
        .collect();
    for s in 0..n {
        if alive[s] && allowed[s].is_empty() {
            alive[s] = false;
        }
    }
    loop {
        let (comp, _) = scc(n, &alive, |s| {
            let mut v: Vec<StateId> = allowed[s]
                .iter()
                .flat_map(|&a| m.enabled(s)[a].dist.iter().map(|(t, _)| *t))
                .collect();
            v.sort_unstable();
            v.dedup();
            v
        });
        let mut changed = false;
        for s in 0..n {
            if !alive[s] {
                continue;
            }
            let before = allowed[s].len();
            allowed[s].retain(|&a| {
                m.enabled(s)[a]
                    .dist
                    .iter()
                    .all(|(t, _)| alive[*t] && comp[*t] == comp[s])
            });
            if allowed[s].len() != before {
                changed = true;
            }
            if allowed[s].is_empty() {
                alive[s] = false;
                changed = true;
            }
        }
        if !changed {
            let mut groups: std::collections::BTreeMap<usize, Vec<StateId>> =
                std::collections::BTreeMap::new();
            for s in 0..n {
                if alive[s] {
                    groups.entry(comp[s]).or_default().push(s);
                }
            }
            return groups
                .into_values()
                .map(|states| EndComponent {
                    internal: states.iter().map(|&s| (s, allowed[s].clone())).collect(),
                    states,
                })
                .collect();
        }
    }
}
