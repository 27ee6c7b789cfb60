//! Incremental vertex enumeration (double description) for bounded
//! polytopes `{x | A x <= b}`.  Every vertex carries the set of
//! constraints tight at it; adjacency uses the combinatorial test.

use sdp_core::{tol, Scalar};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BitSet(Vec<u64>);

impl BitSet {
    pub fn insert(&mut self, i: usize) {
        let (w, b) = (i / 64, i % 64);
        if self.0.len() <= w {
            self.0.resize(w + 1, 0);
        }
        self.0[w] |= 1 << b;
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.get(i / 64).is_some_and(|w| w & (1 << (i % 64)) != 0)
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn intersection(&self, o: &BitSet) -> BitSet {
        BitSet(self.0.iter().zip(&o.0).map(|(a, b)| a & b).collect())
    }

    pub fn union_with(&mut self, o: &BitSet) {
        if self.0.len() < o.0.len() {
            self.0.resize(o.0.len(), 0);
        }
        for (a, b) in self.0.iter_mut().zip(&o.0) {
            *a |= b;
        }
    }

    pub fn is_superset(&self, o: &BitSet) -> bool {
        o.0.iter()
            .enumerate()
            .all(|(i, b)| self.0.get(i).copied().unwrap_or(0) & b == *b)
    }
}

#[derive(Clone, Debug)]
pub struct Vertex<T> {
    pub point: Vec<T>,
    pub tight: BitSet,
}

/// A bounded polytope held by its vertices.
#[derive(Clone, Debug)]
pub struct Polytope<T> {
    dim: usize,
    constraints: usize,
    vertices: Vec<Vertex<T>>,
}

impl<T: Scalar> Polytope<T> {
    /// The subdistribution simplex: constraints `-x_j <= 0` (ids `0..dim`)
    /// and `sum x <= 1` (id `dim`).
    pub fn simplex(dim: usize) -> Self {
        let mut vertices = Vec::with_capacity(dim + 1);
        let mut origin = BitSet::default();
        for j in 0..dim {
            origin.insert(j);
        }
        vertices.push(Vertex {
            point: vec![T::zero(); dim],
            tight: origin,
        });
        for j in 0..dim {
            let mut t = BitSet::default();
            for i in (0..dim).filter(|&i| i != j) {
                t.insert(i);
            }
            t.insert(dim);
            let mut p = vec![T::zero(); dim];
            p[j] = T::one();
            vertices.push(Vertex { point: p, tight: t });
        }
        Polytope {
            dim,
            constraints: dim + 1,
            vertices,
        }
    }

    /// The prism `simplex(dim - 1) x [0, 1]`; constraint ids `0..dim` as
    /// in [`Polytope::simplex`] on the first coordinates, `dim` for
    /// `-z <= 0` and `dim + 1` for `z <= 1`.
    pub fn prism(dim: usize) -> Self {
        let base = Polytope::<T>::simplex(dim - 1);
        let mut vertices = Vec::new();
        for v in &base.vertices {
            for (z, id) in [(T::zero(), dim), (T::one(), dim + 1)] {
                let mut p = v.point.clone();
                p.push(z);
                let mut t = v.tight.clone();
                t.insert(id);
                vertices.push(Vertex { point: p, tight: t });
            }
        }
        Polytope {
            dim,
            constraints: dim + 2,
            vertices,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vertex<T>] {
        &self.vertices
    }

    pub fn points(&self) -> Vec<Vec<T>> {
        self.vertices.iter().map(|v| v.point.clone()).collect()
    }

    /// Number of constraints seen so far; the next cut gets this id.
    pub fn num_constraints(&self) -> usize {
        self.constraints
    }

    /// Intersects with `a . x <= b`.  Returns the id of the new constraint.
    pub fn cut(&mut self, a: &[T], b: &T) -> usize {
        let id = self.constraints;
        self.constraints += 1;
        let eps = T::tol(tol::GEOM);
        let vals: Vec<T> = self
            .vertices
            .iter()
            .map(|v| sdp_core::scalar::dot(a, &v.point) - b.clone())
            .collect();
        let plus: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > eps).collect();
        if plus.is_empty() {
            for (v, val) in self.vertices.iter_mut().zip(&vals) {
                if val.abs() <= eps {
                    v.tight.insert(id);
                }
            }
            return id;
        }
        let minus: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] < -eps.clone()).collect();
        let mut fresh: Vec<Vertex<T>> = Vec::new();
        for &p in &plus {
            for &m in &minus {
                let common = self.vertices[p].tight.intersection(&self.vertices[m].tight);
                if common.len() + 1 < self.dim {
                    continue;
                }
                let blocked = self.vertices.iter().enumerate().any(|(r, v)| {
                    r != p && r != m && v.tight.is_superset(&common)
                });
                if blocked {
                    continue;
                }
                let (vp, vm) = (&self.vertices[p].point, &self.vertices[m].point);
                let t = -vals[m].clone() / (vals[p].clone() - vals[m].clone());
                let point: Vec<T> = vm
                    .iter()
                    .zip(vp)
                    .map(|(x, y)| x.clone() + (y.clone() - x.clone()) * t.clone())
                    .collect();
                let mut tight = common;
                tight.insert(id);
                fresh.push(Vertex { point, tight });
            }
        }
        let mut kept: Vec<Vertex<T>> = Vec::with_capacity(self.vertices.len() + fresh.len());
        for (mut v, val) in std::mem::take(&mut self.vertices).into_iter().zip(vals) {
            if val > eps {
                continue;
            }
            if val.abs() <= eps {
                v.tight.insert(id);
            }
            kept.push(v);
        }
        for v in fresh {
            push_dedup(&mut kept, v);
        }
        self.vertices = kept;
        id
    }
}

fn push_dedup<T: Scalar>(vs: &mut Vec<Vertex<T>>, v: Vertex<T>) {
    let eps = T::tol(tol::GEOM);
    if let Some(w) = vs.iter_mut().find(|w| {
        w.point
            .iter()
            .zip(&v.point)
            .all(|(a, b)| (a.clone() - b.clone()).abs() <= eps)
    }) {
        w.tight.union_with(&v.tight);
    } else {
        vs.push(v);
    }
}
