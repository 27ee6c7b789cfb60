use crate::linsolve;
use crate::mdp::{Mdp, OpenMdp, StateId};
use crate::scheduler::{Choice, Scheduler};
use crate::scalar::Scalar;
use crate::CoreError;

/// Markov chain over dense state ids; terminals carry a self-loop.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovChain<T> {
    pub rows: Vec<Vec<(StateId, T)>>,
}

impl<T: Scalar> MarkovChain<T> {
    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    /// Chain from an MDP in which every state has at most one action.
    pub fn from_mdp(m: &Mdp<T>) -> Result<Self, CoreError> {
        let mut rows = Vec::with_capacity(m.num_states());
        for s in 0..m.num_states() {
            match m.enabled(s) {
                [] => rows.push(vec![(s, T::one())]),
                [a] => rows.push(a.dist.clone()),
                _ => return Err(CoreError::NotAChain(s)),
            }
        }
        Ok(MarkovChain { rows })
    }
}

/// Chain induced by a memoryless scheduler.  States reachable from `from`
/// must have a choice unless terminal; unreachable states without a
/// choice are made absorbing.
pub fn induce_chain<T: Scalar>(
    m: &Mdp<T>,
    sched: &Scheduler<T>,
    from: &[StateId],
) -> Result<MarkovChain<T>, CoreError> {
    let n = m.num_states();
    let mut rows: Vec<Option<Vec<(StateId, T)>>> = vec![None; n];
    let mut stack: Vec<StateId> = from.to_vec();
    let mut seen = vec![false; n];
    for &s in from {
        if s >= n {
            return Err(CoreError::UnknownState(s));
        }
        seen[s] = true;
    }
    while let Some(s) = stack.pop() {
        let row = row_of(m, sched, s)?;
        for (t, _) in &row {
            if !seen[*t] {
                seen[*t] = true;
                stack.push(*t);
            }
        }
        rows[s] = Some(row);
    }
    let rows = rows
        .into_iter()
        .enumerate()
        .map(|(s, r)| match r {
            Some(r) => r,
            None => row_of(m, sched, s).unwrap_or_else(|_| vec![(s, T::one())]),
        })
        .collect();
    Ok(MarkovChain { rows })
}

pub fn induce_chain_open<T: Scalar>(
    m: &OpenMdp<T>,
    sched: &Scheduler<T>,
) -> Result<MarkovChain<T>, CoreError> {
    induce_chain(&m.mdp, sched, &m.entrances())
}

fn row_of<T: Scalar>(
    m: &Mdp<T>,
    sched: &Scheduler<T>,
    s: StateId,
) -> Result<Vec<(StateId, T)>, CoreError> {
    let acts = m.enabled(s);
    if acts.is_empty() {
        return Ok(vec![(s, T::one())]);
    }
    match sched.choice(s) {
        None => Err(CoreError::UndefinedChoice(s)),
        Some(Choice::Det(a)) => acts
            .get(*a)
            .map(|a| a.dist.clone())
            .ok_or(CoreError::BadChoice(s)),
        Some(Choice::Mixed(d)) => {
            let mut row: Vec<(StateId, T)> = Vec::new();
            for (a, w) in d {
                let act = acts.get(*a).ok_or(CoreError::BadChoice(s))?;
                for (t, p) in &act.dist {
                    let v = w.clone() * p.clone();
                    match row.iter_mut().find(|(u, _)| u == t) {
                        Some((_, q)) => *q = q.clone() + v,
                        None => row.push((*t, v)),
                    }
                }
            }
            row.retain(|(_, p)| !p.is_zero());
            Ok(row)
        }
    }
}

/// For each source, the probability of reaching each target first.
/// Targets are treated as absorbing, so the entries of one row are the
/// probabilities of pairwise disjoint events.
pub fn absorption<T: Scalar>(
    c: &MarkovChain<T>,
    sources: &[StateId],
    targets: &[StateId],
) -> Result<Vec<Vec<T>>, CoreError> {
    let n = c.num_states();
    let mut target_idx: Vec<Option<usize>> = vec![None; n];
    for (j, &t) in targets.iter().enumerate() {
        if t >= n {
            return Err(CoreError::UnknownState(t));
        }
        target_idx[t] = Some(j);
    }
    for &s in sources {
        if s >= n {
            return Err(CoreError::UnknownState(s));
        }
    }
    // Forward closure from the sources, stopping at targets.
    let mut fwd = vec![false; n];
    let mut stack: Vec<StateId> = sources.to_vec();
    for &s in sources {
        fwd[s] = true;
    }
    while let Some(s) = stack.pop() {
        if target_idx[s].is_some() {
            continue;
        }
        for (t, _) in &c.rows[s] {
            if !fwd[*t] {
                fwd[*t] = true;
                stack.push(*t);
            }
        }
    }
    // Backward closure from the targets inside the forward set.
    let mut preds: Vec<Vec<StateId>> = vec![Vec::new(); n];
    for s in 0..n {
        if fwd[s] && target_idx[s].is_none() {
            for (t, _) in &c.rows[s] {
                preds[*t].push(s);
            }
        }
    }
    let mut can = vec![false; n];
    let mut stack: Vec<StateId> = targets.iter().copied().filter(|t| fwd[*t]).collect();
    for &t in &stack {
        can[t] = true;
    }
    while let Some(s) = stack.pop() {
        for &p in &preds[s] {
            if !can[p] {
                can[p] = true;
                stack.push(p);
            }
        }
    }
    let unknown: Vec<StateId> = (0..n)
        .filter(|&s| fwd[s] && can[s] && target_idx[s].is_none())
        .collect();
    let mut uidx: Vec<Option<usize>> = vec![None; n];
    for (i, &s) in unknown.iter().enumerate() {
        uidx[s] = Some(i);
    }
    let k = targets.len();
    let mut q: Vec<Vec<(usize, T)>> = Vec::with_capacity(unknown.len());
    let mut b: Vec<Vec<T>> = Vec::with_capacity(unknown.len());
    for &s in &unknown {
        let mut row = Vec::new();
        let mut rhs = vec![T::zero(); k];
        for (t, p) in &c.rows[s] {
            if let Some(j) = target_idx[*t] {
                rhs[j] = rhs[j].clone() + p.clone();
            } else if let Some(i) = uidx[*t] {
                row.push((i, p.clone()));
            }
        }
        q.push(row);
        b.push(rhs);
    }
    let x = linsolve::solve_fixpoint(&q, &b)?;
    Ok(sources
        .iter()
        .map(|&s| {
            if let Some(j) = target_idx[s] {
                let mut v = vec![T::zero(); k];
                v[j] = T::one();
                v
            } else if let Some(i) = uidx[s] {
                x[i].clone()
            } else {
                vec![T::zero(); k]
            }
        })
        .collect())
}

/// `Pr(source |= <> targets)`.
pub fn reach_probs<T: Scalar>(
    c: &MarkovChain<T>,
    source: StateId,
    targets: &[StateId],
) -> Result<T, CoreError> {
    let rows = absorption(c, &[source], targets)?;
    Ok(rows[0].iter().fold(T::zero(), |acc, p| acc + p.clone()))
}
