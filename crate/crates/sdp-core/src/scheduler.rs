use crate::mdp::{Mdp, StateId};
use crate::scalar::{tol, Scalar};
use crate::CoreError;

/// Choice of a memoryless scheduler at one state.
#[derive(Clone, Debug, PartialEq)]
pub enum Choice<T> {
    Det(usize),
    /// Distribution over enabled action indices.
    Mixed(Vec<(usize, T)>),
}

/// Memoryless scheduler: one optional choice per state.
#[derive(Clone, Debug, PartialEq)]
pub struct Scheduler<T> {
    choices: Vec<Option<Choice<T>>>,
}

impl<T: Scalar> Scheduler<T> {
    pub fn empty(n: usize) -> Self {
        Scheduler {
            choices: vec![None; n],
        }
    }

    pub fn deterministic(actions: Vec<Option<usize>>) -> Self {
        Scheduler {
            choices: actions.into_iter().map(|a| a.map(Choice::Det)).collect(),
        }
    }

    /// Picks the first enabled action at every non-terminal state.
    pub fn first_action(m: &Mdp<T>) -> Self {
        Self::deterministic(
            (0..m.num_states())
                .map(|s| (!m.is_terminal(s)).then_some(0))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }

    pub fn set(&mut self, s: StateId, c: Choice<T>) {
        self.choices[s] = Some(c);
    }

    pub fn set_action(&mut self, s: StateId, a: usize) {
        self.choices[s] = Some(Choice::Det(a));
    }

    pub fn unset(&mut self, s: StateId) {
        self.choices[s] = None;
    }

    pub fn choice(&self, s: StateId) -> Option<&Choice<T>> {
        self.choices.get(s).and_then(|c| c.as_ref())
    }

    /// Deterministic action at `s`, if the choice is deterministic.
    pub fn action(&self, s: StateId) -> Option<usize> {
        match self.choice(s) {
            Some(Choice::Det(a)) => Some(*a),
            _ => None,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        self.choices
            .iter()
            .all(|c| !matches!(c, Some(Choice::Mixed(_))))
    }

    /// Restriction to a contiguous block of states, re-indexed from zero.
    pub fn restrict(&self, offset: usize, len: usize) -> Scheduler<T> {
        Scheduler {
            choices: self.choices[offset..offset + len].to_vec(),
        }
    }

    /// Checks that every choice is supported by enabled actions.
    pub fn check(&self, m: &Mdp<T>) -> Result<(), CoreError> {
        for (s, c) in self.choices.iter().enumerate() {
            let Some(c) = c else { continue };
            let k = if s < m.num_states() {
                m.enabled(s).len()
            } else {
                0
            };
            let ok = match c {
                Choice::Det(a) => *a < k,
                Choice::Mixed(d) => {
                    let total = d.iter().fold(T::zero(), |acc, (_, p)| acc + p.clone());
                    d.iter().all(|(a, p)| *a < k && !p.is_negative())
                        && (total - T::one()).abs() <= T::tol(tol::DIST)
                }
            };
            if !ok {
                return Err(CoreError::BadChoice(s));
            }
        }
        Ok(())
    }

    pub fn map_probs<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Scheduler<U> {
        Scheduler {
            choices: self
                .choices
                .iter()
                .map(|c| {
                    c.as_ref().map(|c| match c {
                        Choice::Det(a) => Choice::Det(*a),
                        Choice::Mixed(d) => {
                            Choice::Mixed(d.iter().map(|(a, p)| (*a, f(p))).collect())
                        }
                    })
                })
                .collect(),
        }
    }
}

/// One memoryless scheduler per entrance.  Play starts with the scheduler
/// of the entrance that was used to enter the oMDP.
#[derive(Clone, Debug, PartialEq)]
pub struct EntranceScheduler<T> {
    pub per_entrance: Vec<Scheduler<T>>,
}
