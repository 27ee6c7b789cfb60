//! Sound sandwich approximation of the per-entrance Pareto curves of an
//! open MDP by repeated weighted reachability queries.

use std::sync::Arc;

use rayon::prelude::*;
use sdp_core::{
    absorption, induce_chain, max_reach_bounds, validate_omdp, Arity, CoreError, Mdp, OpenMdp,
    Scalar, Scheduler,
};
use sdp_geometry::dd::Polytope;
use sdp_geometry::{gap_to_points, GeomError, Halfspace, LowerSet, Norm, Point, UpperSet};

/// Default number of weighted queries per entrance.
pub const DEFAULT_ITER_CAP: usize = 10_000;

/// Query cap, overridable through `SDP_ITER_CAP`.
pub fn iteration_cap() -> usize {
    std::env::var("SDP_ITER_CAP")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_ITER_CAP)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MultiObjError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("invalid open MDP: {0}")]
    Invalid(String),
    #[error("eta = 0 requires the rational engine")]
    ZeroEtaNeedsRational,
    #[error("iteration cap of {cap} queries reached at entrance {entrance} with gap {gap}")]
    IterationCap { entrance: usize, cap: usize, gap: f64 },
}

/// Lower and upper set of one entrance.  Both live in the coordinates
/// of `exits`, the exits reachable from the entrance; all other exits are
/// reached with probability zero.
#[derive(Clone, Debug)]
pub struct EntranceApprox<T> {
    pub exits: Vec<usize>,
    pub num_exits: usize,
    pub lower: LowerSet<T>,
    pub upper: UpperSet<T>,
    /// Achieving scheduler per lower vertex, in vertex order.
    pub schedulers: Vec<Arc<Scheduler<T>>>,
    pub queries: usize,
    /// L2 gap before each refinement query after the unit directions.
    pub gap_history: Vec<f64>,
}

impl<T: Scalar> EntranceApprox<T> {
    /// Embeds a reduced point into all exits.
    pub fn expand(&self, p: &[T]) -> Point<T> {
        let mut full = vec![T::zero(); self.num_exits];
        for (x, &j) in p.iter().zip(&self.exits) {
            full[j] = x.clone();
        }
        full
    }

    pub fn reduce(&self, full: &[T]) -> Point<T> {
        self.exits.iter().map(|&j| full[j].clone()).collect()
    }

    pub fn lower_points(&self) -> Vec<Point<T>> {
        self.lower.vertices().iter().map(|p| self.expand(p)).collect()
    }

    pub fn upper_points(&self) -> Result<Vec<Point<T>>, GeomError> {
        Ok(self
            .upper
            .pareto_vertices()?
            .iter()
            .map(|p| self.expand(p))
            .collect())
    }

    pub fn gap(&self, norm: Norm) -> Result<T, GeomError> {
        if self.exits.is_empty() {
            return Ok(T::zero());
        }
        sdp_geometry::gap(&self.lower, &self.upper, norm)
    }

    /// Is the full point inside the upper set?  Mass on unreachable exits
    /// must be zero.
    pub fn upper_contains(&self, full: &[T]) -> Result<bool, GeomError> {
        let eps = T::tol(sdp_core::tol::GEOM);
        let off = (0..self.num_exits)
            .filter(|j| !self.exits.contains(j))
            .all(|j| full[j].abs() <= eps);
        Ok(off && self.upper.contains(&self.reduce(full))?)
    }
}

#[derive(Clone, Debug)]
pub struct SoundApproximation<T> {
    pub arity: Arity,
    pub eta: f64,
    pub entrances: Vec<EntranceApprox<T>>,
}

impl<T: Scalar> SoundApproximation<T> {
    pub fn num_exits(&self) -> usize {
        self.arity.exits()
    }

    /// Largest gap over all entrances.
    pub fn error(&self, norm: Norm) -> Result<T, GeomError> {
        let mut worst = T::zero();
        for e in &self.entrances {
            worst = worst.max_of(e.gap(norm)?);
        }
        Ok(worst)
    }

    pub fn total_lower_vertices(&self) -> usize {
        self.entrances.iter().map(|e| e.lower.vertices().len()).sum()
    }
}

/// Bounds `l <= sup_sigma w . Reach <= u` with `u - l <= delta` from
/// entrance `i`, and a DM scheduler attaining at least `l`.
pub fn weighted_reach_bounds<T: Scalar>(
    m: &OpenMdp<T>,
    i: usize,
    w: &[T],
    delta: f64,
) -> Result<(T, T, Scheduler<T>), MultiObjError> {
    if !T::EXACT && delta <= 0.0 {
        return Err(MultiObjError::ZeroEtaNeedsRational);
    }
    let exits = m.exits();
    let mut mdp: Mdp<T> = m.mdp.clone();
    let target = mdp.add_state("target");
    let sink = mdp.add_state("sink");
    mdp.add_action(sink, "stay", [(sink, T::one())])?;
    for (j, &x) in exits.iter().enumerate() {
        if w[j].is_zero() {
            continue;
        }
        mdp.add_action(
            x,
            "weigh",
            [(target, w[j].clone()), (sink, T::one() - w[j].clone())],
        )?;
    }
    let source = m.entrances()[i];
    let r = max_reach_bounds(&mdp, &[source], &[target], delta)?;
    let mut s = r.scheduler.restrict(0, m.num_states());
    for &x in &exits {
        s.unset(x);
    }
    Ok((r.lower[source].clone(), r.upper[source].clone(), s))
}

/// Exit reach vector from entrance `i` under a memoryless scheduler.
pub fn achieved_point<T: Scalar>(
    m: &OpenMdp<T>,
    i: usize,
    s: &Scheduler<T>,
) -> Result<Point<T>, MultiObjError> {
    let e = m.entrances()[i];
    let c = induce_chain(&m.mdp, s, &[e])?;
    Ok(absorption(&c, &[e], &m.exits())?.remove(0))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Selection<T> {
    Weight(Vec<T>),
    Exhausted,
}

/// Next weight vector: the unit vectors first, then the hull facet of
/// `lower` with the largest slack against the vertices of the upper set.
pub fn select_weight<T: Scalar>(
    lower: &LowerSet<T>,
    upper_vertices: &[Point<T>],
    queries: usize,
    eta: f64,
) -> Result<Selection<T>, GeomError> {
    let dim = lower.dim();
    if queries < dim {
        let mut w = vec![T::zero(); dim];
        w[queries] = T::one();
        return Ok(Selection::Weight(w));
    }
    let eta = T::from_f64(eta);
    let mut best: Option<(T, Vec<T>)> = None;
    for f in lower.hull_facets()? {
        let up = upper_vertices
            .iter()
            .map(|v| sdp_core::scalar::dot(&f.w, v))
            .fold(T::zero(), |a, b| a.max_of(b));
        let slack = up - f.u.clone();
        if slack > eta && best.as_ref().map_or(true, |(b, _)| slack > *b) {
            best = Some((slack, f.w));
        }
    }
    Ok(match best {
        Some((_, w)) => Selection::Weight(w),
        None => Selection::Exhausted,
    })
}

/// Direction from the upper vertex farthest from `lower` towards its
/// nearest point in `lower`.
fn farthest_direction<T: Scalar>(
    lower: &LowerSet<T>,
    upper_vertices: &[Point<T>],
) -> Result<Option<Vec<T>>, GeomError> {
    let facets = lower.hull_facets()?;
    let mut best: Option<(T, &Point<T>)> = None;
    for v in upper_vertices {
        let d = sdp_geometry::distance(&facets, v, Norm::L2);
        if best.as_ref().map_or(true, |(b, _)| d > *b) {
            best = Some((d, v));
        }
    }
    let Some((d, v)) = best else { return Ok(None) };
    if !d.is_positive() {
        return Ok(None);
    }
    let n = v.len();
    let mut g: Vec<Vec<T>> = facets.iter().map(|f| f.w.clone()).collect();
    let mut h: Vec<T> = facets.iter().map(|f| f.u.clone()).collect();
    for j in 0..n {
        let mut row = vec![T::zero(); n];
        row[j] = -T::one();
        g.push(row);
        h.push(T::zero());
    }
    let q = sdp_geometry::qp::project(v, &g, &h);
    let raw: Vec<T> = v
        .iter()
        .zip(&q)
        .map(|(a, b)| (a.clone() - b.clone()).max_of(T::zero()))
        .collect();
    let s = raw.iter().fold(T::zero(), |a, b| a + b.clone());
    if !s.is_positive() {
        return Ok(None);
    }
    Ok(Some(raw.into_iter().map(|x| x / s.clone()).collect()))
}

/// The weighted-query loop for a single entrance.
pub fn approx_entrance<T: Scalar>(
    m: &OpenMdp<T>,
    i: usize,
    eta: f64,
    cap: usize,
) -> Result<EntranceApprox<T>, MultiObjError> {
    if !T::EXACT && eta <= 0.0 {
        return Err(MultiObjError::ZeroEtaNeedsRational);
    }
    let num_exits = m.exits().len();
    let exits = m.reachable_exits(m.entrances()[i]);
    let dim = exits.len();
    if dim == 0 {
        let s = Scheduler::first_action(&m.mdp);
        return Ok(EntranceApprox {
            exits,
            num_exits,
            lower: LowerSet::from_vertices_unpruned(0, vec![Vec::new()]),
            upper: UpperSet::simplex(0),
            schedulers: vec![Arc::new(s)],
            queries: 0,
            gap_history: Vec::new(),
        });
    }
    let delta = eta / 4.0;
    let eta_t = T::from_f64(eta);
    let mut points: Vec<(Point<T>, Arc<Scheduler<T>>)> = Vec::new();
    let mut lower = LowerSet::empty(dim);
    let mut upper = UpperSet::simplex(dim);
    let mut poly: Polytope<T> = Polytope::simplex(dim);
    let mut queries = 0;
    let mut gap_history = Vec::new();
    loop {
        let w = if queries < dim {
            match select_weight(&lower, &[], queries, eta)? {
                Selection::Weight(w) => w,
                Selection::Exhausted => unreachable!("unit vectors come first"),
            }
        } else {
            let uv = poly.points();
            let g = gap_to_points(&lower, &uv, Norm::L2)?;
            gap_history.push(g.to_f64());
            if g <= eta_t {
                break;
            }
            match select_weight(&lower, &uv, queries, eta)? {
                Selection::Weight(w) => w,
                Selection::Exhausted => match farthest_direction(&lower, &uv)? {
                    Some(w) => w,
                    None => break,
                },
            }
        };
        if queries >= cap {
            let g = gap_to_points(&lower, &poly.points(), Norm::L2)?;
            return Err(MultiObjError::IterationCap {
                entrance: i,
                cap,
                gap: g.to_f64(),
            });
        }
        queries += 1;
        let mut full_w = vec![T::zero(); num_exits];
        for (x, &j) in w.iter().zip(&exits) {
            full_w[j] = x.clone();
        }
        let (_, u, s) = weighted_reach_bounds(m, i, &full_w, delta)?;
        let full_p = achieved_point(m, i, &s)?;
        let p: Point<T> = exits.iter().map(|&j| full_p[j].clone()).collect();
        let l = sdp_core::scalar::dot(&w, &p);
        let u = u.max_of(l);
        if lower.insert(p.clone())? {
            points.push((p, Arc::new(s)));
        }
        poly.cut(&w, &u);
        upper.add(Halfspace { w, u })?;
    }
    let schedulers = lower
        .vertices()
        .iter()
        .map(|v| {
            points
                .iter()
                .find(|(p, _)| p == v)
                .map(|(_, s)| s.clone())
                .expect("every vertex was inserted with its scheduler")
        })
        .collect();
    Ok(EntranceApprox {
        exits,
        num_exits,
        lower,
        upper,
        schedulers,
        queries,
        gap_history,
    })
}

/// Weighted-query approximation: per entrance, `gap(L_i, U_i, L2) <= eta`.
pub fn approx_multiobj<T: Scalar>(
    m: &OpenMdp<T>,
    eta: f64,
) -> Result<SoundApproximation<T>, MultiObjError> {
    approx_multiobj_with_cap(m, eta, iteration_cap())
}

pub fn approx_multiobj_with_cap<T: Scalar>(
    m: &OpenMdp<T>,
    eta: f64,
    cap: usize,
) -> Result<SoundApproximation<T>, MultiObjError> {
    if !T::EXACT && eta <= 0.0 {
        return Err(MultiObjError::ZeroEtaNeedsRational);
    }
    let report = validate_omdp(m);
    if !report.is_ok() {
        return Err(MultiObjError::Invalid(report.to_string()));
    }
    let entrances = (0..m.entrances().len())
        .into_par_iter()
        .map(|i| approx_entrance(m, i, eta, cap))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SoundApproximation {
        arity: m.arity(),
        eta,
        entrances,
    })
}
