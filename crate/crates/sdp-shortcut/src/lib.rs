//! Shortcut oMDPs: one state per open end plus a loss state `star`, and
//! per entrance one action for each point of a finite family.

use std::sync::Arc;

use sdp_core::{
    Arity, EntranceScheduler, Mdp, OpenEnds, OpenMdp, Scalar, Scheduler, StateId,
};
use sdp_geometry::{fmt_point, GeomError, Point};
use sdp_multiobj::SoundApproximation;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ShortcutError {
    #[error("entrance {entrance}: point {point} is not a subdistribution over {exits} exits")]
    OutsideSimplex {
        entrance: usize,
        point: String,
        exits: usize,
    },
    #[error("family has {got} entrances, signature {arity} has {want}")]
    EntranceCount {
        arity: Arity,
        got: usize,
        want: usize,
    },
    #[error("entrance {0} has an empty point family")]
    EmptyFamily(usize),
    #[error("entrance {entrance}: shortcut action {action} carries no scheduler")]
    MissingAnnotation { entrance: usize, action: usize },
    #[error("shortcut scheduler gives no single action at entrance {0}")]
    NotDeterministic(usize),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// Where a shortcut action came from.
#[derive(Clone, Debug)]
pub struct Provenance<T> {
    /// Exit distribution over all exits.
    pub point: Point<T>,
    /// Scheduler of the source oMDP achieving `point`, if known.
    pub scheduler: Option<Arc<Scheduler<T>>>,
}

#[derive(Clone, Debug)]
pub struct ShortcutMdp<T> {
    pub omdp: OpenMdp<T>,
    pub star: StateId,
    /// `provenance[i][a]` describes action `a` of entrance `i`.
    pub provenance: Vec<Vec<Provenance<T>>>,
}

impl<T: Scalar> ShortcutMdp<T> {
    pub fn arity(&self) -> Arity {
        self.omdp.arity()
    }

    pub fn num_actions(&self) -> usize {
        self.provenance.iter().map(Vec::len).sum()
    }
}

fn end_names(ar: Arity) -> Vec<String> {
    let mut names = Vec::new();
    names.extend((1..=ar.m_r).map(|k| format!("enr{k}")));
    names.extend((1..=ar.n_l).map(|k| format!("enl{k}")));
    names.extend((1..=ar.n_r).map(|k| format!("exr{k}")));
    names.extend((1..=ar.m_l).map(|k| format!("exl{k}")));
    names
}

/// Shortcut over explicit point families, one per entrance (entrance
/// order: right entrances, then left entrances).  Point order is kept as
/// action order.
pub fn shortcut_from_points<T: Scalar>(
    ar: Arity,
    family: Vec<Vec<Provenance<T>>>,
) -> Result<ShortcutMdp<T>, ShortcutError> {
    let ne = ar.entrances();
    let nx = ar.exits();
    if family.len() != ne {
        return Err(ShortcutError::EntranceCount {
            arity: ar,
            got: family.len(),
            want: ne,
        });
    }
    let mut names = end_names(ar);
    names.push("star".into());
    let mut m = Mdp::with_states(names);
    let star = ne + nx;
    m.add_action(star, "lost", [(star, T::one())])
        .expect("star exists");
    for (i, pts) in family.iter().enumerate() {
        if pts.is_empty() {
            return Err(ShortcutError::EmptyFamily(i));
        }
        for (k, pv) in pts.iter().enumerate() {
            let p = &pv.point;
            let outside = || ShortcutError::OutsideSimplex {
                entrance: i,
                point: fmt_point(p),
                exits: nx,
            };
            if p.len() != nx {
                return Err(outside());
            }
            sdp_geometry::check_subdistribution(p).map_err(|_| outside())?;
            let rest = T::one() - sdp_core::scalar::sum(p);
            let rest = rest.max_of(T::zero());
            let dist = p
                .iter()
                .enumerate()
                .map(|(o, x)| (ne + o, x.clone()))
                .chain(std::iter::once((star, rest)));
            m.add_action(i, format!("p{}", k + 1), dist)
                .expect("states exist");
        }
    }
    let ends = OpenEnds {
        in_r: (0..ar.m_r).collect(),
        in_l: (ar.m_r..ne).collect(),
        out_r: (ne..ne + ar.n_r).collect(),
        out_l: (ne + ar.n_r..ne + nx).collect(),
    };
    Ok(ShortcutMdp {
        omdp: OpenMdp::new(m, ends),
        star,
        provenance: family,
    })
}

/// Shortcut over the lower vertices, annotated with their schedulers
/// where the approximation has them.
pub fn shortcut_from_lower<T: Scalar>(
    a: &SoundApproximation<T>,
) -> Result<ShortcutMdp<T>, ShortcutError> {
    let family = a
        .entrances
        .iter()
        .map(|e| {
            e.lower_points()
                .into_iter()
                .enumerate()
                .map(|(k, point)| Provenance {
                    point,
                    scheduler: e.schedulers.get(k).cloned(),
                })
                .collect()
        })
        .collect();
    shortcut_from_points(a.arity, family)
}

/// Shortcut over the Pareto vertices of the upper sets.
pub fn shortcut_from_upper<T: Scalar>(
    a: &SoundApproximation<T>,
) -> Result<ShortcutMdp<T>, ShortcutError> {
    let mut family = Vec::new();
    for e in &a.entrances {
        let mut pts = e.upper_points()?;
        pts.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
        family.push(
            pts.into_iter()
                .map(|point| Provenance {
                    point,
                    scheduler: None,
                })
                .collect(),
        );
    }
    shortcut_from_points(a.arity, family)
}

/// Entrance-indexed scheduler of the source oMDP that realises the
/// choices of `sched` on the shortcut.
pub fn recover_scheduler<T: Scalar>(
    sc: &ShortcutMdp<T>,
    sched: &Scheduler<T>,
) -> Result<EntranceScheduler<T>, ShortcutError> {
    let mut per_entrance = Vec::new();
    for (i, prov) in sc.provenance.iter().enumerate() {
        let a = sched.action(i).ok_or(ShortcutError::NotDeterministic(i))?;
        let s = prov
            .get(a)
            .and_then(|p| p.scheduler.as_ref())
            .ok_or(ShortcutError::MissingAnnotation {
                entrance: i,
                action: a,
            })?;
        per_entrance.push((**s).clone());
    }
    Ok(EntranceScheduler { per_entrance })
}
