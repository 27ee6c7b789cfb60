//! Benchmark families: rooms with imprecise movement, dice games, and
//! grid and chain diagrams over a shared leaf.

mod dice;
mod grid;
mod room;

pub use dice::{gen_dice, DiceSpec, Die};
pub use grid::{gen_bigrid, gen_chain, gen_unigrid, routing_leaf};
pub use room::{gen_room, RoomSpec, Safety, Wind};

use sdp_core::{Arity, Scalar};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BenchError {
    #[error("room side must be odd and at least 3, got {0}")]
    InvalidSide(usize),
    #[error("malformed bands: {0}")]
    MalformedBands(String),
    #[error("malformed die: {0}")]
    MalformedDie(String),
    #[error("{family} needs a leaf of arity {expected}, got {got}")]
    LeafArity {
        family: &'static str,
        expected: String,
        got: Arity,
    },
    #[error("{0} must be at least 1")]
    ZeroSize(&'static str),
}

/// `x` rounded to six decimals, as an exact ratio.
pub(crate) fn decimal<T: Scalar>(x: f64) -> T {
    T::ratio((x * 1e6).round() as i64, 1_000_000)
}
