//! Grids are built from anti-diagonal layers: layer `d` is the sum of the
//! cells `(x, y)` with `x + y = d`, ordered by `x`, and a routing leaf
//! between two layers connects east outputs to west inputs and north
//! outputs to south inputs.  Outputs leaving the grid end in a dead
//! state.

use std::sync::Arc;

use sdp_compose::Diagram;
use sdp_core::{Arity, Mdp, OpenEnds, OpenMdp, Scalar};

use crate::BenchError;

fn layer(d: usize, n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .filter_map(|x| d.checked_sub(x).filter(|&y| y < n).map(|y| (x, y)))
        .collect()
}

/// Routing leaf: right entrance `i` goes to right exit `right[i]`, left
/// entrance `i` to left exit `left[i]`; `None` leads to a dead state.
pub fn routing_leaf<T: Scalar>(
    n_in: usize,
    n_out: usize,
    right: &[Option<usize>],
    left: &[Option<usize>],
) -> OpenMdp<T> {
    let bi = !left.is_empty();
    let mut names: Vec<String> = Vec::new();
    names.extend((1..=n_in).map(|i| format!("enr{i}")));
    names.extend((1..=n_out).map(|i| format!("exr{i}")));
    if bi {
        names.extend((1..=n_out).map(|i| format!("enl{i}")));
        names.extend((1..=n_in).map(|i| format!("exl{i}")));
    }
    names.push("dead".into());
    let mut m: Mdp<T> = Mdp::with_states(names);
    let dead = m.num_states() - 1;
    m.add_action(dead, "stay", [(dead, T::one())]).expect("state exists");
    let exr = n_in;
    let enl = n_in + n_out;
    let exl = enl + n_out;
    for (i, t) in right.iter().enumerate() {
        let to = t.map_or(dead, |o| exr + o);
        m.add_action(i, "route", [(to, T::one())]).expect("states exist");
    }
    for (i, t) in left.iter().enumerate() {
        let to = t.map_or(dead, |o| exl + o);
        m.add_action(enl + i, "route", [(to, T::one())])
            .expect("states exist");
    }
    let ends = OpenEnds {
        in_r: (0..n_in).collect(),
        out_r: (exr..exr + n_out).collect(),
        in_l: if bi { (enl..enl + n_out).collect() } else { vec![] },
        out_l: if bi { (exl..exl + n_in).collect() } else { vec![] },
    };
    OpenMdp::new(m, ends)
}

/// Routing between layer `d` and `d + 1`: port `2k` of a cell is its
/// west/east side, port `2k + 1` its south/north side.
fn router<T: Scalar>(d: usize, n: usize, bi: bool) -> OpenMdp<T> {
    let from = layer(d, n);
    let to = layer(d + 1, n);
    let pos = |cells: &[(usize, usize)], p: (usize, usize)| cells.iter().position(|&c| c == p);
    let mut right = Vec::new();
    for &(x, y) in &from {
        right.push(pos(&to, (x + 1, y)).map(|k| 2 * k));
        right.push(pos(&to, (x, y + 1)).map(|k| 2 * k + 1));
    }
    let mut left = Vec::new();
    if bi {
        for &(x, y) in &to {
            left.push(x.checked_sub(1).and_then(|px| pos(&from, (px, y))).map(|k| 2 * k));
            left.push(y.checked_sub(1).and_then(|py| pos(&from, (x, py))).map(|k| 2 * k + 1));
        }
    }
    routing_leaf(2 * from.len(), 2 * to.len(), &right, &left)
}

/// Both outputs of the last cell lead to the single goal exit.
fn goal<T: Scalar>(bi: bool) -> OpenMdp<T> {
    let mut names = vec!["enr1", "enr2", "goal"];
    if bi {
        names.extend(["exl1", "exl2"]);
    }
    let mut m: Mdp<T> = Mdp::with_states(names);
    m.add_action(0, "go", [(2, T::one())]).expect("states exist");
    m.add_action(1, "go", [(2, T::one())]).expect("states exist");
    let ends = OpenEnds {
        in_r: vec![0, 1],
        in_l: vec![],
        out_r: vec![2],
        out_l: if bi { vec![3, 4] } else { vec![] },
    };
    OpenMdp::new(m, ends)
}

fn grid<T: Scalar>(n: usize, leaf: Arc<OpenMdp<T>>, bi: bool) -> Diagram<T> {
    let mut parts = Vec::new();
    for d in 0..2 * n - 1 {
        let cells = layer(d, n);
        let cells: Vec<Diagram<T>> = cells
            .iter()
            .map(|(x, y)| Diagram::leaf_arc(format!("cell{x}_{y}"), leaf.clone()))
            .collect();
        parts.push(if cells.len() == 1 {
            cells.into_iter().next().expect("one cell")
        } else {
            Diagram::sum(cells)
        });
        if d + 1 < 2 * n - 1 {
            parts.push(Diagram::leaf(format!("route{d}"), router(d, n, bi)));
        }
    }
    parts.push(Diagram::leaf("goal", goal(bi)));
    Diagram::seq(parts)
}

fn expect_arity<T: Scalar>(
    family: &'static str,
    leaf: &OpenMdp<T>,
    want: Arity,
) -> Result<(), BenchError> {
    if leaf.arity() == want {
        Ok(())
    } else {
        Err(BenchError::LeafArity {
            family,
            expected: want.to_string(),
            got: leaf.arity(),
        })
    }
}

/// `n` by `n` grid of rightward rooms from `(0,0)` to the goal behind
/// `(n-1,n-1)`.  The leaf must have arity `(2,0) -> (2,0)`.
pub fn gen_unigrid<T: Scalar>(n: usize, leaf: Arc<OpenMdp<T>>) -> Result<Diagram<T>, BenchError> {
    if n == 0 {
        return Err(BenchError::ZeroSize("grid size"));
    }
    let want = Arity {
        m_r: 2,
        m_l: 0,
        n_r: 2,
        n_l: 0,
    };
    expect_arity("unigrid", &leaf, want)?;
    Ok(grid(n, leaf, false))
}

/// Grid of bidirectional rooms, arity `(2,2) -> (2,2)` each, that can
/// also be left towards the south and west.
pub fn gen_bigrid<T: Scalar>(n: usize, leaf: Arc<OpenMdp<T>>) -> Result<Diagram<T>, BenchError> {
    if n == 0 {
        return Err(BenchError::ZeroSize("grid size"));
    }
    let want = Arity {
        m_r: 2,
        m_l: 2,
        n_r: 2,
        n_l: 2,
    };
    expect_arity("bigrid", &leaf, want)?;
    Ok(grid(n, leaf, true))
}

/// `n` copies in sequence whose last right exit loops back to the last
/// right entrance of the first copy.
pub fn gen_chain<T: Scalar>(n: usize, leaf: Arc<OpenMdp<T>>) -> Result<Diagram<T>, BenchError> {
    if n == 0 {
        return Err(BenchError::ZeroSize("chain length"));
    }
    let a = leaf.arity();
    if a.left() != a.right() || a.m_r == 0 {
        return Err(BenchError::LeafArity {
            family: "chain",
            expected: "(a,b)->(a,b) with a >= 1".into(),
            got: a,
        });
    }
    let copies = (0..n)
        .map(|_| Diagram::leaf_arc("room", leaf.clone()))
        .collect();
    Ok(Diagram::trace(Diagram::seq(copies), 1))
}

