//! Dense two-phase simplex with Bland's rule: `max c.x` subject to linear
//! constraints and `x >= 0`.

use sdp_core::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rel {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct Constraint<T> {
    pub coef: Vec<T>,
    pub rel: Rel,
    pub rhs: T,
}

impl<T: Scalar> Constraint<T> {
    pub fn new(coef: Vec<T>, rel: Rel, rhs: T) -> Self {
        Constraint { coef, rel, rhs }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpResult<T> {
    Optimal { x: Vec<T>, value: T },
    Infeasible,
    Unbounded,
}

const PIVOT_TOL: f64 = 1e-12;
const FEAS_TOL: f64 = 1e-10;

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    rhs: Vec<T>,
    basis: Vec<usize>,
}

impl<T: Scalar> Tableau<T> {
    fn pivot(&mut self, r: usize, c: usize) {
        let inv = T::one() / self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v = v.clone() * inv.clone();
        }
        self.rhs[r] = self.rhs[r].clone() * inv;
        let prow = self.rows[r].clone();
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            for (j, pv) in prow.iter().enumerate() {
                if !pv.is_zero() {
                    self.rows[i][j] = self.rows[i][j].clone() - f.clone() * pv.clone();
                }
            }
            self.rhs[i] = self.rhs[i].clone() - f * prhs.clone();
        }
        self.basis[r] = c;
    }

    /// Maximizes `obj` over the columns flagged in `allowed`.  Returns
    /// false if unbounded.
    fn optimize(&mut self, obj: &[T], allowed: &[bool]) -> bool {
        let eps = T::tol(PIVOT_TOL);
        let ncols = obj.len();
        loop {
            // Reduced cost c_j - c_B B^-1 A_j.
            let mut enter = None;
            for j in 0..ncols {
                if !allowed[j] || self.basis.contains(&j) {
                    continue;
                }
                let mut rc = obj[j].clone();
                for (i, &b) in self.basis.iter().enumerate() {
                    if !self.rows[i][j].is_zero() {
                        rc = rc - obj[b].clone() * self.rows[i][j].clone();
                    }
                }
                if rc > eps {
                    enter = Some(j);
                    break;
                }
            }
            let Some(c) = enter else { return true };
            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][c].clone();
                if a <= eps {
                    continue;
                }
                let ratio = self.rhs[i].clone() / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr || (ratio == lr && self.basis[i] < self.basis[li]) {
                            Some((i, ratio))
                        } else {
                            Some((li, lr))
                        }
                    }
                };
            }
            let Some((r, _)) = leave else { return false };
            self.pivot(r, c);
        }
    }
}

/// Maximizes `c . x` subject to `cons` and `x >= 0`.
pub fn maximize<T: Scalar>(c: &[T], cons: &[Constraint<T>]) -> LpResult<T> {
    let n = c.len();
    let m = cons.len();
    let nslack = cons.iter().filter(|k| k.rel != Rel::Eq).count();
    let nart = cons
        .iter()
        .filter(|k| match k.rel {
            Rel::Le => k.rhs.is_negative(),
            Rel::Ge => !k.rhs.is_negative(),
            Rel::Eq => true,
        })
        .count();
    let ncols = n + nslack + nart;
    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut is_art = vec![false; ncols];
    let (mut si, mut ai) = (n, n + nslack);
    for k in cons {
        let mut row = vec![T::zero(); ncols];
        let flip = k.rhs.is_negative();
        for (j, v) in k.coef.iter().enumerate() {
            row[j] = if flip { -v.clone() } else { v.clone() };
        }
        let b = if flip { -k.rhs.clone() } else { k.rhs.clone() };
        let rel = match (k.rel, flip) {
            (Rel::Le, true) => Rel::Ge,
            (Rel::Ge, true) => Rel::Le,
            (r, _) => r,
        };
        let slack_sign = match k.rel {
            Rel::Le => Some(T::one()),
            Rel::Ge => Some(-T::one()),
            Rel::Eq => None,
        };
        if let Some(s) = slack_sign {
            row[si] = if flip { -s } else { s };
            si += 1;
        }
        if rel == Rel::Le {
            basis.push(si - 1);
        } else {
            row[ai] = T::one();
            is_art[ai] = true;
            basis.push(ai);
            ai += 1;
        }
        rows.push(row);
        rhs.push(b);
    }
    let mut t = Tableau { rows, rhs, basis };
    let all = vec![true; ncols];
    if nart > 0 {
        let obj1: Vec<T> = (0..ncols)
            .map(|j| if is_art[j] { -T::one() } else { T::zero() })
            .collect();
        t.optimize(&obj1, &all);
        let infeas = t
            .basis
            .iter()
            .zip(&t.rhs)
            .filter(|(b, _)| is_art[**b])
            .fold(T::zero(), |acc, (_, v)| acc + v.clone());
        if infeas > T::tol(FEAS_TOL) {
            return LpResult::Infeasible;
        }
        // Drive remaining artificials out of the basis.
        let mut r = 0;
        while r < t.rows.len() {
            if is_art[t.basis[r]] {
                let col = (0..ncols)
                    .find(|&j| !is_art[j] && t.rows[r][j].abs() > T::tol(PIVOT_TOL));
                match col {
                    Some(c) => t.pivot(r, c),
                    None => {
                        t.rows.remove(r);
                        t.rhs.remove(r);
                        t.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
    }
    let mut obj = vec![T::zero(); ncols];
    obj[..n].clone_from_slice(c);
    let allowed: Vec<bool> = (0..ncols).map(|j| !is_art[j]).collect();
    if !t.optimize(&obj, &allowed) {
        return LpResult::Unbounded;
    }
    let mut x = vec![T::zero(); n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rhs[i].clone();
        }
    }
    let value = x
        .iter()
        .zip(c)
        .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone());
    LpResult::Optimal { x, value }
}

/// True iff the constraints admit some `x >= 0`.
pub fn feasible<T: Scalar>(n: usize, cons: &[Constraint<T>]) -> bool {
    !matches!(maximize(&vec![T::zero(); n], cons), LpResult::Infeasible)
}
