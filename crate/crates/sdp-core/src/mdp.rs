use std::collections::HashSet;
use std::fmt;

use crate::scalar::{tol, Scalar};
use crate::CoreError;

pub type StateId = usize;

#[derive(Clone, Debug, PartialEq)]
pub struct Action<T> {
    pub label: String,
    /// Successor distribution; no duplicate targets, no zero entries.
    pub dist: Vec<(StateId, T)>,
}

/// Finite MDP with dense state ids and per-state action lists.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Mdp<T> {
    names: Vec<String>,
    actions: Vec<Vec<Action<T>>>,
}

impl<T: Scalar> Mdp<T> {
    pub fn new() -> Self {
        Mdp {
            names: Vec::new(),
            actions: Vec::new(),
        }
    }

    pub fn with_states<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        let mut m = Self::new();
        for n in names {
            m.add_state(n);
        }
        m
    }

    pub fn add_state(&mut self, name: impl Into<String>) -> StateId {
        self.names.push(name.into());
        self.actions.push(Vec::new());
        self.names.len() - 1
    }

    /// Adds an action, merging duplicate successors and dropping zero
    /// entries.  Returns the action's index within `enabled(s)`.
    pub fn add_action(
        &mut self,
        s: StateId,
        label: impl Into<String>,
        dist: impl IntoIterator<Item = (StateId, T)>,
    ) -> Result<usize, CoreError> {
        let n = self.names.len();
        if s >= n {
            return Err(CoreError::UnknownState(s));
        }
        let mut merged: Vec<(StateId, T)> = Vec::new();
        for (t, p) in dist {
            if t >= n {
                return Err(CoreError::UnknownState(t));
            }
            if p.is_zero() {
                continue;
            }
            match merged.iter_mut().find(|(u, _)| *u == t) {
                Some((_, q)) => *q = q.clone() + p,
                None => merged.push((t, p)),
            }
        }
        self.actions[s].push(Action {
            label: label.into(),
            dist: merged,
        });
        Ok(self.actions[s].len() - 1)
    }

    /// Adds an action without merging or range checks.  Used by bulk
    /// constructions that already produce clean distributions.
    pub fn push_action_unchecked(&mut self, s: StateId, action: Action<T>) {
        self.actions[s].push(action);
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.iter().map(Vec::len).sum()
    }

    pub fn num_transitions(&self) -> usize {
        self.actions
            .iter()
            .flat_map(|a| a.iter())
            .map(|a| a.dist.len())
            .sum()
    }

    pub fn enabled(&self, s: StateId) -> &[Action<T>] {
        &self.actions[s]
    }

    pub fn is_terminal(&self, s: StateId) -> bool {
        self.actions[s].is_empty()
    }

    pub fn name(&self, s: StateId) -> &str {
        &self.names[s]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn find(&self, name: &str) -> Option<StateId> {
        self.names.iter().position(|n| n == name)
    }

    pub fn map_probs<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Mdp<U> {
        Mdp {
            names: self.names.clone(),
            actions: self
                .actions
                .iter()
                .map(|acts| {
                    acts.iter()
                        .map(|a| Action {
                            label: a.label.clone(),
                            dist: a.dist.iter().map(|(t, p)| (*t, f(p))).collect(),
                        })
                        .collect()
                })
                .collect(),
        }
    }

    /// Appends all states of `other`, returning the id offset.
    pub fn append(&mut self, other: &Mdp<T>) -> usize {
        let off = self.names.len();
        self.names.extend(other.names.iter().cloned());
        for acts in &other.actions {
            self.actions.push(
                acts.iter()
                    .map(|a| Action {
                        label: a.label.clone(),
                        dist: a.dist.iter().map(|(t, p)| (t + off, p.clone())).collect(),
                    })
                    .collect(),
            );
        }
        off
    }

    /// Checks that every distribution is a probability distribution.
    pub fn check_distribution(&self, s: StateId, a: usize) -> Result<(), String> {
        let act = &self.actions[s][a];
        let mut total = T::zero();
        for (t, p) in &act.dist {
            if *t >= self.num_states() {
                return Err(format!("successor {t} out of range"));
            }
            if p.is_negative() {
                return Err(format!("negative probability {p}"));
            }
            if *p > T::one() + T::tol(tol::DIST) {
                return Err(format!("probability {p} exceeds 1"));
            }
            total = total + p.clone();
        }
        let ok = if T::EXACT {
            total == T::one()
        } else {
            (total.clone() - T::one()).abs() <= T::from_f64(tol::DIST)
        };
        if ok {
            Ok(())
        } else {
            Err(format!("distribution sums to {total}"))
        }
    }
}

/// `(m_r, m_l) -> (n_r, n_l)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Arity {
    pub m_r: usize,
    pub m_l: usize,
    pub n_r: usize,
    pub n_l: usize,
}

impl Arity {
    pub fn left(&self) -> (usize, usize) {
        (self.m_r, self.m_l)
    }

    pub fn right(&self) -> (usize, usize) {
        (self.n_r, self.n_l)
    }

    pub fn entrances(&self) -> usize {
        self.m_r + self.n_l
    }

    pub fn exits(&self) -> usize {
        self.n_r + self.m_l
    }

    /// `(m, 0) -> (l, 0)`.
    pub fn is_rightward(&self) -> bool {
        self.m_l == 0 && self.n_l == 0
    }

    pub fn sum(&self, o: &Arity) -> Arity {
        Arity {
            m_r: self.m_r + o.m_r,
            m_l: self.m_l + o.m_l,
            n_r: self.n_r + o.n_r,
            n_l: self.n_l + o.n_l,
        }
    }
}

impl fmt::Display for Arity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({},{})->({},{})",
            self.m_r, self.m_l, self.n_r, self.n_l
        )
    }
}

/// Ordered open ends of an oMDP.  Entrances are enumerated `I_r` then
/// `I_l`; exits `O_r` then `O_l`.
#[derive(Clone, Debug, PartialEq, Eq, Default, Hash)]
pub struct OpenEnds {
    pub in_r: Vec<StateId>,
    pub in_l: Vec<StateId>,
    pub out_r: Vec<StateId>,
    pub out_l: Vec<StateId>,
}

impl OpenEnds {
    pub fn arity(&self) -> Arity {
        Arity {
            m_r: self.in_r.len(),
            m_l: self.out_l.len(),
            n_r: self.out_r.len(),
            n_l: self.in_l.len(),
        }
    }

    pub fn entrances(&self) -> Vec<StateId> {
        self.in_r.iter().chain(&self.in_l).copied().collect()
    }

    pub fn exits(&self) -> Vec<StateId> {
        self.out_r.iter().chain(&self.out_l).copied().collect()
    }

    pub fn shifted(&self, off: usize) -> OpenEnds {
        let sh = |v: &Vec<StateId>| v.iter().map(|s| s + off).collect();
        OpenEnds {
            in_r: sh(&self.in_r),
            in_l: sh(&self.in_l),
            out_r: sh(&self.out_r),
            out_l: sh(&self.out_l),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OpenMdp<T> {
    pub mdp: Mdp<T>,
    pub ends: OpenEnds,
}

impl<T: Scalar> OpenMdp<T> {
    pub fn new(mdp: Mdp<T>, ends: OpenEnds) -> Self {
        OpenMdp { mdp, ends }
    }

    /// Builds an oMDP and rejects it unless [`validate_omdp`] passes.
    pub fn checked(mdp: Mdp<T>, ends: OpenEnds) -> Result<Self, CoreError> {
        let m = OpenMdp { mdp, ends };
        let report = validate_omdp(&m);
        if report.is_ok() {
            Ok(m)
        } else {
            Err(CoreError::Invalid(report))
        }
    }

    pub fn arity(&self) -> Arity {
        self.ends.arity()
    }

    pub fn entrances(&self) -> Vec<StateId> {
        self.ends.entrances()
    }

    pub fn exits(&self) -> Vec<StateId> {
        self.ends.exits()
    }

    pub fn num_states(&self) -> usize {
        self.mdp.num_states()
    }

    pub fn map_probs<U: Scalar>(&self, f: impl Fn(&T) -> U) -> OpenMdp<U> {
        OpenMdp {
            mdp: self.mdp.map_probs(f),
            ends: self.ends.clone(),
        }
    }

    /// The oMDP with no states.
    pub fn empty() -> Self {
        OpenMdp {
            mdp: Mdp::new(),
            ends: OpenEnds::default(),
        }
    }

    /// One entrance wired with probability one to one exit.
    pub fn identity() -> Self {
        let mut mdp = Mdp::with_states(["in", "out"]);
        mdp.add_action(0, "pass", [(1, T::one())])
            .expect("states exist");
        OpenMdp {
            mdp,
            ends: OpenEnds {
                in_r: vec![0],
                in_l: vec![],
                out_r: vec![1],
                out_l: vec![],
            },
        }
    }

    /// Exit states that are reachable from `entrance` (graph reachability).
    pub fn reachable_exits(&self, entrance: StateId) -> Vec<usize> {
        let exits = self.exits();
        let seen = crate::graph::forward_reachable(&self.mdp, &[entrance], |_| false);
        exits
            .iter()
            .enumerate()
            .filter(|(_, s)| seen[**s])
            .map(|(j, _)| j)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    OpenEndsOverlap { state: StateId },
    DuplicateOpenEnd { state: StateId },
    UnknownOpenEnd { state: StateId },
    ExitNotTerminal { state: StateId },
    TerminalNotExit { state: StateId },
    MalformedDistribution {
        state: StateId,
        action: usize,
        reason: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OpenEndsOverlap { state } => write!(f, "open ends overlap at state {state}"),
            Violation::DuplicateOpenEnd { state } => {
                write!(f, "duplicate open end at state {state}")
            }
            Violation::UnknownOpenEnd { state } => write!(f, "open end {state} is not a state"),
            Violation::ExitNotTerminal { state } => write!(f, "exit not terminal: state {state}"),
            Violation::TerminalNotExit { state } => write!(f, "terminal not exit: state {state}"),
            Violation::MalformedDistribution {
                state,
                action,
                reason,
            } => write!(
                f,
                "malformed distribution at state {state} action {action}: {reason}"
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", msgs.join("; "))
    }
}

pub fn validate_omdp<T: Scalar>(m: &OpenMdp<T>) -> ValidationReport {
    let mut violations = Vec::new();
    let n = m.mdp.num_states();
    let lists = [&m.ends.in_r, &m.ends.in_l, &m.ends.out_r, &m.ends.out_l];
    let mut owner: Vec<Option<usize>> = vec![None; n];
    let mut reported: HashSet<StateId> = HashSet::new();
    for (li, list) in lists.iter().enumerate() {
        for &s in list.iter() {
            if s >= n {
                violations.push(Violation::UnknownOpenEnd { state: s });
                continue;
            }
            match owner[s] {
                Some(prev) if prev == li => {
                    violations.push(Violation::DuplicateOpenEnd { state: s })
                }
                Some(_) => {
                    if reported.insert(s) {
                        violations.push(Violation::OpenEndsOverlap { state: s })
                    }
                }
                None => owner[s] = Some(li),
            }
        }
    }
    let mut is_exit = vec![false; n];
    for &s in m.ends.out_r.iter().chain(&m.ends.out_l) {
        if s < n {
            is_exit[s] = true;
        }
    }
    for s in 0..n {
        let terminal = m.mdp.is_terminal(s);
        if is_exit[s] && !terminal {
            violations.push(Violation::ExitNotTerminal { state: s });
        }
        if terminal && !is_exit[s] {
            violations.push(Violation::TerminalNotExit { state: s });
        }
        for a in 0..m.mdp.enabled(s).len() {
            if let Err(reason) = m.mdp.check_distribution(s, a) {
                violations.push(Violation::MalformedDistribution {
                    state: s,
                    action: a,
                    reason,
                });
            }
        }
    }
    ValidationReport { violations }
}
