//! Downward-closed convex sets in the unit cube: lower sets given by
//! vertices, upper sets given by halfspaces intersected with the
//! subdistribution simplex.

pub mod dd;
pub mod lp;
pub mod qp;

use std::fmt::Write as _;
use std::str::FromStr;

use sdp_core::scalar::dot;
use sdp_core::{tol, Scalar};

use crate::dd::Polytope;
use crate::lp::{Constraint, LpResult, Rel};

/// Largest dimension accepted by vertex enumeration.
pub const MAX_DIM: usize = 6;

pub type Point<T> = Vec<T>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Norm {
    L2,
    Linf,
}

impl FromStr for Norm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(Norm::L2),
            "linf" | "l-inf" | "inf" => Ok(Norm::Linf),
            _ => Err(format!("unknown norm '{s}' (expected l2 or linf)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeomError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dimension {dim} exceeds the vertex enumeration cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("lower set is not contained in the upper set: vertex {point}")]
    NotContained { point: String },
    #[error("lower set is empty")]
    EmptyLowerSet,
    #[error("point {point} is outside the subdistribution simplex")]
    OutsideSimplex { point: String },
}

fn check_dim(expected: usize, found: usize) -> Result<(), GeomError> {
    if expected != found {
        return Err(GeomError::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn check_cap(dim: usize) -> Result<(), GeomError> {
    if dim > MAX_DIM {
        return Err(GeomError::DimensionCap { dim, cap: MAX_DIM });
    }
    Ok(())
}

pub fn fmt_point<T: Scalar>(p: &[T]) -> String {
    let parts: Vec<String> = p.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(", "))
}

/// `w . p <= u`.
#[derive(Clone, Debug, PartialEq)]
pub struct Halfspace<T> {
    pub w: Vec<T>,
    pub u: T,
}

/// `dwconvcl` of finitely many vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct LowerSet<T> {
    dim: usize,
    vertices: Vec<Point<T>>,
}

impl<T: Scalar> LowerSet<T> {
    pub fn empty(dim: usize) -> Self {
        LowerSet {
            dim,
            vertices: Vec::new(),
        }
    }

    /// Keeps only vertices that are not dominated by the convex hull of
    /// the others.
    pub fn from_points(dim: usize, points: Vec<Point<T>>) -> Result<Self, GeomError> {
        for p in &points {
            check_dim(dim, p.len())?;
        }
        Ok(LowerSet {
            dim,
            vertices: prune(points),
        })
    }

    /// Vertices as given, without pruning.
    pub fn from_vertices_unpruned(dim: usize, vertices: Vec<Point<T>>) -> Self {
        LowerSet { dim, vertices }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Point<T>] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Adds a point and re-prunes; false if it was already contained.
    pub fn insert(&mut self, p: Point<T>) -> Result<bool, GeomError> {
        check_dim(self.dim, p.len())?;
        if !self.is_empty() && self.contains(&p)? {
            return Ok(false);
        }
        let mut all = self.vertices.clone();
        all.push(p);
        self.vertices = prune(all);
        Ok(true)
    }

    pub fn support_value(&self, w: &[T]) -> Result<T, GeomError> {
        check_dim(self.dim, w.len())?;
        if self.is_empty() {
            return Err(GeomError::EmptyLowerSet);
        }
        Ok(self
            .vertices
            .iter()
            .map(|v| dot(w, v))
            .fold(None, |acc: Option<T>, x| {
                Some(match acc {
                    Some(a) => a.max_of(x),
                    None => x,
                })
            })
            .expect("nonempty"))
    }

    pub fn contains(&self, p: &[T]) -> Result<bool, GeomError> {
        check_dim(self.dim, p.len())?;
        Ok(in_dwconvcl(&self.vertices, p))
    }

    /// Halfspaces with nonnegative normalized normals whose intersection
    /// with the nonnegative orthant is this set.  The unit directions are
    /// always included.
    pub fn hull_facets(&self) -> Result<Vec<Halfspace<T>>, GeomError> {
        if self.is_empty() {
            return Err(GeomError::EmptyLowerSet);
        }
        check_cap(self.dim)?;
        Ok(match self.dim {
            0 => Vec::new(),
            1 => vec![Halfspace {
                w: vec![T::one()],
                u: self.support_value(&[T::one()])?,
            }],
            2 => facets_2d(&self.vertices),
            _ => facets_nd(self.dim, &self.vertices),
        })
    }
}

/// True iff `p` is dominated by a convex combination of `vs`.
pub fn in_dwconvcl<T: Scalar>(vs: &[Point<T>], p: &[T]) -> bool {
    if vs.is_empty() {
        return false;
    }
    let eps = T::tol(tol::GEOM);
    if vs
        .iter()
        .any(|v| v.iter().zip(p).all(|(a, b)| a.clone() + eps.clone() >= *b))
    {
        return true;
    }
    for j in 0..p.len() {
        if vs.iter().all(|v| v[j].clone() + eps.clone() < p[j]) {
            return false;
        }
    }
    let k = vs.len();
    let mut cons = vec![Constraint::new(vec![T::one(); k], Rel::Eq, T::one())];
    for j in 0..p.len() {
        cons.push(Constraint::new(
            vs.iter().map(|v| v[j].clone()).collect(),
            Rel::Ge,
            p[j].clone() - eps.clone(),
        ));
    }
    lp::feasible(k, &cons)
}

/// Removes duplicates and vertices dominated by the hull of the others.
pub fn prune<T: Scalar>(points: Vec<Point<T>>) -> Vec<Point<T>> {
    let eps = T::tol(tol::GEOM);
    let dominated = |a: &Point<T>, b: &Point<T>| {
        a.iter().zip(b).all(|(x, y)| x.clone() <= y.clone() + eps.clone())
    };
    let mut kept: Vec<Point<T>> = Vec::new();
    for p in points {
        if kept.iter().any(|k| dominated(&p, k)) {
            continue;
        }
        kept.retain(|k| !dominated(k, &p));
        kept.push(p);
    }
    let mut i = 0;
    while i < kept.len() && kept.len() > 2 {
        let others: Vec<Point<T>> = kept
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, v)| v.clone())
            .collect();
        if in_dwconvcl(&others, &kept[i]) {
            kept.remove(i);
        } else {
            i += 1;
        }
    }
    kept
}

fn facets_2d<T: Scalar>(vs: &[Point<T>]) -> Vec<Halfspace<T>> {
    let mut pts = prune(vs.to_vec());
    pts.sort_by(|a, b| {
        a[0].partial_cmp(&b[0])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b[1].partial_cmp(&a[1]).unwrap_or(std::cmp::Ordering::Equal))
    });
    let mut out = vec![Halfspace {
        w: vec![T::zero(), T::one()],
        u: pts[0][1].clone(),
    }];
    for pair in pts.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let nx = a[1].clone() - b[1].clone();
        let ny = b[0].clone() - a[0].clone();
        let s = nx.clone() + ny.clone();
        if s.is_zero() {
            continue;
        }
        let w = vec![nx / s.clone(), ny / s];
        let u = dot(&w, a);
        out.push(Halfspace { w, u });
    }
    out.push(Halfspace {
        w: vec![T::one(), T::zero()],
        u: pts[pts.len() - 1][0].clone(),
    });
    out
}

/// Facet normals are the lower vertices of the epigraph of the support
/// function over the weight simplex.
fn facets_nd<T: Scalar>(dim: usize, vs: &[Point<T>]) -> Vec<Halfspace<T>> {
    let mut poly = Polytope::<T>::prism(dim);
    let first_cut = poly.num_constraints();
    for v in vs {
        let last = v[dim - 1].clone();
        let mut a: Vec<T> = v[..dim - 1]
            .iter()
            .map(|x| x.clone() - last.clone())
            .collect();
        a.push(-T::one());
        poly.cut(&a, &-last);
    }
    let mut out: Vec<Halfspace<T>> = Vec::new();
    for vx in poly.vertices() {
        if !(first_cut..poly.num_constraints()).any(|c| vx.tight.contains(c)) {
            continue;
        }
        let mut w: Vec<T> = vx.point[..dim - 1]
            .iter()
            .map(|x| x.clone().max_of(T::zero()))
            .collect();
        let rest = T::one() - w.iter().fold(T::zero(), |a, b| a + b.clone());
        w.push(rest.max_of(T::zero()));
        let s = w.iter().fold(T::zero(), |a, b| a + b.clone());
        let w: Vec<T> = w.into_iter().map(|x| x / s.clone()).collect();
        // Recompute the offset from the vertices for consistency.
        let u = vs
            .iter()
            .map(|v| dot(&w, v))
            .fold(T::zero(), |a, b| a.max_of(b));
        if !out.iter().any(|h| h.w == w) {
            out.push(Halfspace { w, u });
        }
    }
    out
}

/// Intersection of halfspaces with the subdistribution simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct UpperSet<T> {
    dim: usize,
    halfspaces: Vec<Halfspace<T>>,
}

impl<T: Scalar> UpperSet<T> {
    pub fn simplex(dim: usize) -> Self {
        UpperSet {
            dim,
            halfspaces: Vec::new(),
        }
    }

    pub fn with_halfspaces(dim: usize, hs: Vec<Halfspace<T>>) -> Result<Self, GeomError> {
        let mut u = Self::simplex(dim);
        for h in hs {
            u.add(h)?;
        }
        Ok(u)
    }

    /// `dwconvcl(points)` intersected with the simplex, as halfspaces.
    pub fn from_vertices(dim: usize, points: Vec<Point<T>>) -> Result<Self, GeomError> {
        let l = LowerSet::from_points(dim, points)?;
        Self::with_halfspaces(dim, l.hull_facets()?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn halfspaces(&self) -> &[Halfspace<T>] {
        &self.halfspaces
    }

    pub fn add(&mut self, h: Halfspace<T>) -> Result<(), GeomError> {
        check_dim(self.dim, h.w.len())?;
        self.halfspaces.push(h);
        Ok(())
    }

    pub fn contains(&self, p: &[T]) -> Result<bool, GeomError> {
        check_dim(self.dim, p.len())?;
        let eps = T::tol(tol::GEOM);
        let total = p.iter().fold(T::zero(), |a, b| a + b.clone());
        Ok(p.iter().all(|x| *x >= -eps.clone())
            && total <= T::one() + eps.clone()
            && self
                .halfspaces
                .iter()
                .all(|h| dot(&h.w, p) <= h.u.clone() + eps.clone()))
    }

    /// `max { w . p | p in U }` by linear programming.
    pub fn support_value(&self, w: &[T]) -> Result<T, GeomError> {
        check_dim(self.dim, w.len())?;
        if self.dim == 0 {
            return Ok(T::zero());
        }
        let mut cons = vec![Constraint::new(vec![T::one(); self.dim], Rel::Le, T::one())];
        for h in &self.halfspaces {
            cons.push(Constraint::new(h.w.clone(), Rel::Le, h.u.clone()));
        }
        match lp::maximize(w, &cons) {
            LpResult::Optimal { value, .. } => Ok(value),
            _ => Ok(T::zero()),
        }
    }

    /// All vertices of the polytope.
    pub fn vertices(&self) -> Result<Vec<Point<T>>, GeomError> {
        Ok(self.polytope()?.points())
    }

    /// Vertices that matter for the downward closure.
    pub fn pareto_vertices(&self) -> Result<Vec<Point<T>>, GeomError> {
        Ok(prune(self.vertices()?))
    }

    pub fn polytope(&self) -> Result<Polytope<T>, GeomError> {
        check_cap(self.dim)?;
        let mut p = Polytope::simplex(self.dim);
        for h in &self.halfspaces {
            p.cut(&h.w, &h.u);
        }
        Ok(p)
    }
}

/// Distance from `p` to the lower set described by `facets` (its
/// [`LowerSet::hull_facets`]) within the nonnegative orthant.
pub fn distance<T: Scalar>(facets: &[Halfspace<T>], p: &[T], norm: Norm) -> T {
    match norm {
        Norm::Linf => facets
            .iter()
            .map(|f| linf_threshold(f, p))
            .fold(T::zero(), |a, b| a.max_of(b)),
        Norm::L2 => {
            let n = p.len();
            let mut g: Vec<Vec<T>> = facets.iter().map(|f| f.w.clone()).collect();
            let mut h: Vec<T> = facets.iter().map(|f| f.u.clone()).collect();
            for j in 0..n {
                let mut row = vec![T::zero(); n];
                row[j] = -T::one();
                g.push(row);
                h.push(T::zero());
            }
            let q = qp::project(p, &g, &h);
            let d2 = p
                .iter()
                .zip(&q)
                .fold(T::zero(), |acc, (a, b)| {
                    let d = a.clone() - b.clone();
                    acc + d.clone() * d
                });
            d2.sqrt()
        }
    }
}

/// Least `t >= 0` with `sum_j w_j max(p_j - t, 0) <= u`.
fn linf_threshold<T: Scalar>(f: &Halfspace<T>, p: &[T]) -> T {
    let excess = |t: &T| {
        f.w.iter().zip(p).fold(T::zero(), |acc, (w, x)| {
            let d = x.clone() - t.clone();
            if d.is_positive() {
                acc + w.clone() * d
            } else {
                acc
            }
        })
    };
    if excess(&T::zero()) <= f.u {
        return T::zero();
    }
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|a, b| p[*b].partial_cmp(&p[*a]).unwrap_or(std::cmp::Ordering::Equal));
    let mut wsum = T::zero();
    let mut psum = T::zero();
    for (k, &j) in order.iter().enumerate() {
        wsum = wsum + f.w[j].clone();
        psum = psum + f.w[j].clone() * p[j].clone();
        let lo = order
            .get(k + 1)
            .map_or(T::zero(), |&i| p[i].clone().max_of(T::zero()));
        if excess(&lo) > f.u && wsum.is_positive() {
            return ((psum - f.u.clone()) / wsum).max_of(T::zero());
        }
    }
    T::zero()
}

/// `sup_{p in pts} inf_{q in L} |p - q|`.
pub fn gap_to_points<T: Scalar>(
    l: &LowerSet<T>,
    pts: &[Point<T>],
    norm: Norm,
) -> Result<T, GeomError> {
    if l.dim() == 0 {
        return Ok(T::zero());
    }
    let facets = l.hull_facets()?;
    Ok(pts
        .iter()
        .map(|p| distance(&facets, p, norm))
        .fold(T::zero(), |a, b| a.max_of(b)))
}

/// Hausdorff-style gap between `L` and `U`; requires `L` inside `U`.
pub fn gap<T: Scalar>(l: &LowerSet<T>, u: &UpperSet<T>, norm: Norm) -> Result<T, GeomError> {
    check_dim(l.dim(), u.dim())?;
    for v in l.vertices() {
        if !u.contains(v)? {
            return Err(GeomError::NotContained {
                point: fmt_point(v),
            });
        }
    }
    gap_to_points(l, &u.vertices()?, norm)
}

/// Two-column CSV, one row per vertex.
pub fn to_csv<T: Scalar>(points: &[Point<T>]) -> String {
    let mut s = String::from("x,y\n");
    for p in points {
        let x = p.first().map_or(0.0, Scalar::to_f64);
        let y = p.get(1).map_or(0.0, Scalar::to_f64);
        let _ = writeln!(s, "{x},{y}");
    }
    s
}

/// Checks that `p` is a subdistribution.
pub fn check_subdistribution<T: Scalar>(p: &[T]) -> Result<(), GeomError> {
    let eps = T::tol(tol::DIST);
    let total = p.iter().fold(T::zero(), |a, b| a + b.clone());
    if p.iter().any(|x| *x < -eps.clone() || *x > T::one() + eps.clone())
        || total > T::one() + eps
    {
        return Err(GeomError::OutsideSimplex {
            point: fmt_point(p),
        });
    }
    Ok(())
}
