//! Explicit-state MDPs and open MDPs with exact or floating-point
//! probabilities, memoryless schedulers, induced Markov chains and
//! (maximal) reachability.

pub mod chain;
pub mod graph;
pub mod linsolve;
pub mod mdp;
pub mod reach;
pub mod scalar;
pub mod scheduler;

pub use chain::{absorption, induce_chain, induce_chain_open, reach_probs, MarkovChain};
pub use mdp::{
    validate_omdp, Action, Arity, Mdp, OpenEnds, OpenMdp, StateId, ValidationReport, Violation,
};
pub use reach::{max_reach, max_reach_bounds, MaxReach};
pub use scalar::{approx_eq, rational_to_f64, tol, Rational, Scalar};
pub use scheduler::{Choice, EntranceScheduler, Scheduler};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoreError {
    #[error("unknown state {0}")]
    UnknownState(StateId),
    #[error("invalid open MDP: {0}")]
    Invalid(ValidationReport),
    #[error("scheduler choice at state {0} is not an enabled action")]
    BadChoice(StateId),
    #[error("scheduler undefined on reachable non-terminal state {0}")]
    UndefinedChoice(StateId),
    #[error("state {0} has more than one action; not a Markov chain")]
    NotAChain(StateId),
    #[error("iterative solver did not converge")]
    NoConvergence,
    #[error("zero tolerance requires the rational engine")]
    ExactToleranceNeedsRational,
}
