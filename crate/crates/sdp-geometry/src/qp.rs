//! Euclidean projection onto `{q | G q <= h}` by a primal active-set
//! method.  `q = 0` must be feasible.

use sdp_core::linsolve::solve_dense;
use sdp_core::scalar::dot;
use sdp_core::Scalar;

const MAX_STEPS: usize = 10_000;
const QP_TOL: f64 = 1e-13;

pub fn project<T: Scalar>(p: &[T], g: &[Vec<T>], h: &[T]) -> Vec<T> {
    let n = p.len();
    let eps = T::tol(QP_TOL);
    let mut q = vec![T::zero(); n];
    let mut work: Vec<usize> = Vec::new();
    for _ in 0..MAX_STEPS {
        // Equality-constrained minimizer on the working set.
        let k = work.len();
        let gram: Vec<Vec<T>> = work
            .iter()
            .map(|&i| work.iter().map(|&j| dot(&g[i], &g[j])).collect())
            .collect();
        let rhs: Vec<T> = work.iter().map(|&i| dot(&g[i], p) - h[i].clone()).collect();
        let lambda = if k == 0 {
            Vec::new()
        } else {
            match solve_dense(gram, rhs) {
                Some(l) => l,
                None => {
                    work.pop();
                    continue;
                }
            }
        };
        let mut target = p.to_vec();
        for (l, &i) in lambda.iter().zip(&work) {
            for (t, gi) in target.iter_mut().zip(&g[i]) {
                *t = t.clone() - l.clone() * gi.clone();
            }
        }
        let d: Vec<T> = target
            .iter()
            .zip(&q)
            .map(|(a, b)| a.clone() - b.clone())
            .collect();
        if d.iter().all(|x| x.abs() <= eps) {
            let worst = lambda
                .iter()
                .enumerate()
                .filter(|(_, l)| **l < -eps.clone())
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal));
            match worst {
                None => return q,
                Some((pos, _)) => {
                    work.remove(pos);
                }
            }
            continue;
        }
        let mut alpha = T::one();
        let mut block = None;
        for i in 0..g.len() {
            if work.contains(&i) {
                continue;
            }
            let gd = dot(&g[i], &d);
            if gd <= eps {
                continue;
            }
            let step = (h[i].clone() - dot(&g[i], &q)) / gd;
            if step < alpha {
                alpha = step.max_of(T::zero());
                block = Some(i);
            }
        }
        for (x, dx) in q.iter_mut().zip(&d) {
            *x = x.clone() + alpha.clone() * dx.clone();
        }
        if let Some(i) = block {
            work.push(i);
        }
    }
    q
}
