//! Compositional analysis of string diagrams: bottom-up over a canonical
//! binary form of the diagram, a structural cache, hierarchical
//! scheduler extraction and compositional error bounds.

mod analysis;
mod canon;
mod strategy;

pub use analysis::{
    approx_multiobj_sd, compose_approximations, Analysis, Composed, CurveCache, Op, SdResult,
    Stage,
};
pub use canon::{canonicalize, leaf_hash, Canon, Hash, Hasher};
pub use strategy::{extract_scheduler, replay, HierarchicalScheduler, Strategy};

use sdp_compose::{ComposeError, Diagram};
use sdp_core::{Arity, CoreError, Scalar};
use sdp_geometry::{GeomError, Norm};
use sdp_multiobj::{MultiObjError, SoundApproximation};
use sdp_shortcut::ShortcutError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompError {
    #[error(transparent)]
    Compose(#[from] ComposeError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("eta = 0 requires the rational engine")]
    ZeroEtaNeedsRational,
    #[error("at {path}: {source}")]
    Analysis {
        path: String,
        source: MultiObjError,
    },
    #[error("at {path}: {source}")]
    Shortcut {
        path: String,
        source: ShortcutError,
    },
    #[error("{what} {index} out of range ({len} available)")]
    OutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("no convergence down to eta = {eta}: bounds [{lower}, {upper}]")]
    CapReached { lower: f64, upper: f64, eta: f64 },
    #[error("{kind:?} bound does not apply to {left} and {right}")]
    BoundKind {
        kind: BoundKind,
        left: Arity,
        right: Arity,
    },
    #[error("replay failed at {0}")]
    Replay(String),
}

impl CompError {
    /// Iteration-cap and tightening failures, as opposed to bad input.
    pub fn is_resource_cap(&self) -> bool {
        matches!(
            self,
            CompError::CapReached { .. }
                | CompError::Analysis {
                    source: MultiObjError::IterationCap { .. },
                    ..
                }
        )
    }
}

/// Largest gap over all entrances.
pub fn measure_error<T: Scalar>(a: &SoundApproximation<T>, norm: Norm) -> Result<T, CompError> {
    Ok(a.error(norm)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    Sum,
    RightwardSeq,
}

/// A-priori bound on the L-infinity error of a composition.
///
/// `gaps` are the component errors.  For sums the bound is their maximum.
/// For a rightward `A ; B` it is `|O^A| * gap_A + gap_B` plus the two
/// stage gaps `gap(L^{A;B}, U_X)` and `gap(L_X, U^{A;B})`.
pub fn compose_error_bounds<T: Scalar>(
    kind: BoundKind,
    left: Arity,
    right: Arity,
    gaps: &[T],
    stage_gaps: [T; 2],
) -> Result<T, CompError> {
    let bad = || CompError::BoundKind { kind, left, right };
    match kind {
        BoundKind::Sum => Ok(gaps.iter().fold(T::zero(), |m, g| m.max_of(g.clone()))),
        BoundKind::RightwardSeq => {
            if !left.is_rightward() || !right.is_rightward() || left.right() != right.left() {
                return Err(bad());
            }
            let [ga, gb] = gaps else { return Err(bad()) };
            let [s1, s2] = stage_gaps;
            Ok(T::from_usize(left.exits()) * ga.clone() + gb.clone() + s1 + s2)
        }
    }
}

/// The bound of `compose_error_bounds` for an analysed binary node.
pub fn node_error_bound<T: Scalar>(a: &Analysis<T>) -> Result<Option<T>, CompError> {
    let (kind, stage) = match (a.op, &a.stage) {
        (Some(Op::Sum), _) => (BoundKind::Sum, None),
        (Some(Op::Seq), Some(st)) => (BoundKind::RightwardSeq, Some(st)),
        _ => return Ok(None),
    };
    if a.children.len() != 2 {
        return Ok(None);
    }
    let (l, r) = (a.children[0].approx.arity, a.children[1].approx.arity);
    if kind == BoundKind::RightwardSeq && !(l.is_rightward() && r.is_rightward()) {
        return Ok(None);
    }
    let gaps = [
        measure_error(&a.children[0].approx, Norm::Linf)?,
        measure_error(&a.children[1].approx, Norm::Linf)?,
    ];
    let stage_gaps = match stage {
        Some(st) => [
            measure_error(&st.lower, Norm::Linf)?,
            measure_error(&st.upper, Norm::Linf)?,
        ],
        None => [T::zero(), T::zero()],
    };
    compose_error_bounds(kind, l, r, &gaps, stage_gaps).map(Some)
}

/// Number of tightening rounds of `check_single_exit`.
pub const MAX_TIGHTENING_ROUNDS: usize = 8;

#[derive(Clone, Debug)]
pub struct SingleExit<T> {
    pub lower: T,
    pub upper: T,
    /// Tolerance of the last round.
    pub eta: f64,
    pub rounds: usize,
    pub scheduler: HierarchicalScheduler<T>,
    pub result: SdResult<T>,
}

/// Lower value, achieving vertex and upper value for one exit.
pub fn exit_bounds<T: Scalar>(
    a: &SoundApproximation<T>,
    entrance: usize,
    exit: usize,
) -> Result<(T, usize, T), CompError> {
    let e = a.entrances.get(entrance).ok_or(CompError::OutOfRange {
        what: "entrance",
        index: entrance,
        len: a.entrances.len(),
    })?;
    if exit >= e.num_exits {
        return Err(CompError::OutOfRange {
            what: "exit",
            index: exit,
            len: e.num_exits,
        });
    }
    let mut best = (T::zero(), 0);
    for (k, p) in e.lower_points().iter().enumerate() {
        if k == 0 || p[exit] > best.0 {
            best = (p[exit].clone(), k);
        }
    }
    let upper = match e.exits.iter().position(|&j| j == exit) {
        None => T::zero(),
        Some(pos) => {
            let mut w = vec![T::zero(); e.exits.len()];
            w[pos] = T::one();
            e.upper.support_value(&w)?
        }
    };
    Ok((best.0, best.1, upper))
}

/// Bounds on the maximal probability of reaching `exit` from `entrance`
/// with `upper - lower <= eps`, and a scheduler attaining `lower`.  The
/// tolerance starts at `eps` and shrinks tenfold per round.
pub fn check_single_exit<T: Scalar>(
    d: &Diagram<T>,
    entrance: usize,
    exit: usize,
    eps: f64,
    cache: &CurveCache<T>,
) -> Result<SingleExit<T>, CompError> {
    if !T::EXACT && eps <= 0.0 {
        return Err(CompError::ZeroEtaNeedsRational);
    }
    let eps_t = T::from_f64(eps);
    let mut eta = eps;
    let mut last = (0.0, 1.0);
    for round in 1..=MAX_TIGHTENING_ROUNDS {
        let result = approx_multiobj_sd(d, eta, cache)?;
        let (lower, vertex, upper) = exit_bounds(result.approx(), entrance, exit)?;
        if upper.clone() - lower.clone() <= eps_t {
            let scheduler = extract_scheduler(&result, entrance, vertex)?;
            return Ok(SingleExit {
                lower,
                upper,
                eta,
                rounds: round,
                scheduler,
                result,
            });
        }
        last = (lower.to_f64(), upper.to_f64());
        eta /= 10.0;
    }
    Err(CompError::CapReached {
        lower: last.0,
        upper: last.1,
        eta: eta * 10.0,
    })
}
