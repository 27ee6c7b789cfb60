//! Random small instances and brute-force oracles over deterministic
//! memoryless schedulers.

pub mod fixtures;

use std::collections::HashMap;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdp_compose::Diagram;
use sdp_core::graph::forward_reachable;
use sdp_core::{
    absorption, induce_chain, Arity, Mdp, OpenEnds, OpenMdp, Rational, Scalar, Scheduler, StateId,
};
use sdp_geometry::{prune, Point};

pub fn q(n: i64, d: i64) -> Rational {
    Rational::ratio(n, d)
}

pub fn arity(m_r: usize, m_l: usize, n_r: usize, n_l: usize) -> Arity {
    Arity { m_r, m_l, n_r, n_l }
}

/// Size limits for random leaves.
#[derive(Clone, Copy, Debug)]
pub struct LeafLimits {
    pub max_states: usize,
    pub max_choice_states: usize,
    pub max_actions: usize,
    /// Adds an absorbing non-exit state.
    pub sink: bool,
}

impl Default for LeafLimits {
    fn default() -> Self {
        LeafLimits {
            max_states: 6,
            max_choice_states: 4,
            max_actions: 2,
            sink: false,
        }
    }
}

fn random_dist(rng: &mut impl Rng, succ: &[StateId]) -> Vec<(StateId, Rational)> {
    let k = rng.gen_range(1..=3.min(succ.len()));
    let w: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=4)).collect();
    let tot: i64 = w.iter().sum();
    w.iter()
        .map(|x| (succ[rng.gen_range(0..succ.len())], q(*x, tot)))
        .collect()
}

/// Random valid oMDP of the given arity.  States: entrances, inner
/// states, exits and optionally a sink, in this order.
pub fn random_omdp(rng: &mut impl Rng, ar: Arity, lim: LeafLimits) -> OpenMdp<Rational> {
    let ne = ar.m_r + ar.n_l;
    let nx = ar.n_r + ar.m_l;
    let fixed = ne + nx + usize::from(lim.sink);
    let room = lim.max_states.saturating_sub(fixed);
    let inner = if room == 0 { 0 } else { rng.gen_range(1..=room) };
    let n = fixed + inner;
    let mut m: Mdp<Rational> = Mdp::with_states((0..n).map(|i| format!("s{i}")));
    let first_exit = ne + inner;
    let sink = lim.sink.then_some(n - 1);
    if let Some(s) = sink {
        m.add_action(s, "stay", [(s, q(1, 1))]).expect("state exists");
    }
    let succ: Vec<StateId> = (ne..n).collect();
    let mut deciders: Vec<StateId> = (0..ne + inner).collect();
    // Pick the states that get a genuine choice.
    for i in (1..deciders.len()).rev() {
        deciders.swap(i, rng.gen_range(0..=i));
    }
    deciders.truncate(lim.max_choice_states);
    for s in 0..ne + inner {
        let acts = if deciders.contains(&s) {
            rng.gen_range(1..=lim.max_actions)
        } else {
            1
        };
        for a in 0..acts {
            let d = random_dist(rng, &succ);
            m.add_action(s, format!("a{a}"), d).expect("states exist");
        }
    }
    let e: Vec<StateId> = (0..ne).collect();
    let x: Vec<StateId> = (first_exit..first_exit + nx).collect();
    OpenMdp::new(
        m,
        OpenEnds {
            in_r: e[..ar.m_r].to_vec(),
            in_l: e[ar.m_r..].to_vec(),
            out_r: x[..ar.n_r].to_vec(),
            out_l: x[ar.n_r..].to_vec(),
        },
    )
}

fn random_arity(rng: &mut impl Rng, left: (usize, usize), exits_left: usize) -> Arity {
    // Right side with at most two ends and at most `exits_left` right exits.
    let n_r = rng.gen_range(0..=exits_left.min(2));
    let n_l = rng.gen_range(0..=(2 - n_r).min(1));
    let n_r = if n_r + left.0 + left.1 + n_l == 0 { 1 } else { n_r };
    Arity {
        m_r: left.0,
        m_l: left.1,
        n_r,
        n_l,
    }
}

/// Random diagram with at most three leaves and at most two exits
/// overall.
pub fn random_diagram(rng: &mut impl Rng, lim: LeafLimits) -> Diagram<Rational> {
    let leaf = |rng: &mut dyn RngCore, name: &str, ar: Arity| {
        let mut local = ChaCha8Rng::seed_from_u64(rng.next_u64());
        Diagram::leaf(name, random_omdp(&mut local, ar, lim))
    };
    match rng.gen_range(0..5) {
        0 => {
            let m_r = rng.gen_range(1..=2);
            let m_l = rng.gen_range(0..=(2 - m_r).min(1));
            let ar = random_arity(rng, (m_r, m_l), 2 - m_l);
            leaf(rng, "A", ar)
        }
        1 => {
            // A ; B with a bidirectional middle interface.
            let a = arity(1, rng.gen_range(0..=1), 1, rng.gen_range(0..=1));
            let b_exits = 2 - a.m_l;
            let b = random_arity(rng, a.right(), b_exits);
            Diagram::seq(vec![leaf(rng, "A", a), leaf(rng, "B", b)])
        }
        2 => {
            let a = arity(1, 0, rng.gen_range(1..=2), rng.gen_range(0..=1));
            let b = arity(a.n_r, a.n_l, 1, rng.gen_range(0..=1));
            let c = arity(b.n_r, b.n_l, rng.gen_range(1..=2), 0);
            Diagram::seq(vec![leaf(rng, "A", a), leaf(rng, "B", b), leaf(rng, "C", c)])
        }
        3 => {
            let a = arity(1, 0, 1, 0);
            let b = if rng.gen_bool(0.5) { arity(1, 1, 0, 0) } else { arity(1, 0, 1, 0) };
            Diagram::sum(vec![leaf(rng, "A", a), leaf(rng, "B", b)])
        }
        _ => {
            // (A + B) ; C
            let a = arity(1, 0, 1, 0);
            let b = arity(1, 0, 1, rng.gen_range(0..=1));
            let c = arity(2, b.n_l, rng.gen_range(1..=2), 0);
            Diagram::seq(vec![
                Diagram::sum(vec![leaf(rng, "A", a), leaf(rng, "B", b)]),
                leaf(rng, "C", c),
            ])
        }
    }
}

/// States reachable from `from` with more than one action.
pub fn choice_states<T: Scalar>(m: &Mdp<T>, from: &[StateId]) -> Vec<StateId> {
    let seen = forward_reachable(m, from, |_| false);
    (0..m.num_states())
        .filter(|&s| seen[s] && m.enabled(s).len() > 1)
        .collect()
}

/// Calls `f` with every DM scheduler that differs on the choice states
/// reachable from `from`; elsewhere the first action is used.
pub fn for_each_dm<T: Scalar>(m: &Mdp<T>, from: &[StateId], mut f: impl FnMut(&Scheduler<T>)) {
    let cs = choice_states(m, from);
    let mut sched = Scheduler::first_action(m);
    let mut digits = vec![0usize; cs.len()];
    loop {
        for (&s, &a) in cs.iter().zip(&digits) {
            sched.set_action(s, a);
        }
        f(&sched);
        let mut k = 0;
        loop {
            if k == cs.len() {
                return;
            }
            digits[k] += 1;
            if digits[k] < m.enabled(cs[k]).len() {
                break;
            }
            digits[k] = 0;
            k += 1;
        }
    }
}

pub fn dm_count<T: Scalar>(m: &Mdp<T>, from: &[StateId]) -> usize {
    choice_states(m, from)
        .iter()
        .map(|&s| m.enabled(s).len())
        .product()
}

/// Exit vector from `entrance` (index) under `s`.
pub fn exit_point<T: Scalar>(m: &OpenMdp<T>, entrance: usize, s: &Scheduler<T>) -> Point<T> {
    let e = m.entrances()[entrance];
    let c = induce_chain(&m.mdp, s, &[e]).expect("DM schedulers are total");
    absorption(&c, &[e], &m.exits()).expect("chain solve").remove(0)
}

/// Every DM achieved point from `entrance`.
pub fn dm_points<T: Scalar>(m: &OpenMdp<T>, entrance: usize) -> Vec<Point<T>> {
    let mut out = Vec::new();
    for_each_dm(&m.mdp, &[m.entrances()[entrance]], |s| {
        out.push(exit_point(m, entrance, s))
    });
    out
}

/// Exact Pareto vertices from `entrance`: the vertices of the downward
/// convex closure of all DM points.
///
/// All schedulers are first evaluated in floating point.  Points that are
/// inside the closure of the others by a margin of `1e-6`, and float
/// duplicates up to `1e-9`, are dropped before the survivors are solved
/// exactly and pruned exactly.
pub fn exact_pareto(m: &OpenMdp<Rational>, entrance: usize) -> Vec<Point<Rational>> {
    let mf = m.map_probs(|p| p.to_f64());
    let e = m.entrances()[entrance];
    let mut groups: HashMap<Vec<i64>, (Vec<f64>, Scheduler<Rational>)> = HashMap::new();
    for_each_dm(&m.mdp, &[e], |s| {
        let sf = s.map_probs(|p| p.to_f64());
        let p = exit_point(&mf, entrance, &sf);
        let key: Vec<i64> = p.iter().map(|x| (x * 1e9).round() as i64).collect();
        groups.entry(key).or_insert_with(|| (p, s.clone()));
    });
    let entries: Vec<(Vec<f64>, Scheduler<Rational>)> = groups.into_values().collect();
    let floats: Vec<Vec<f64>> = entries.iter().map(|(p, _)| p.clone()).collect();
    let mut survivors = Vec::new();
    for (i, (p, s)) in entries.iter().enumerate() {
        let others: Vec<Vec<f64>> = floats
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, v)| v.clone())
            .collect();
        let lifted: Vec<f64> = p.iter().map(|x| x + 1e-6).collect();
        if !sdp_geometry::in_dwconvcl(&others, &lifted) {
            survivors.push(exit_point(m, entrance, s));
        }
    }
    let mut v = prune(survivors);
    v.sort();
    v
}

/// Plain exact enumeration without any float filtering.
pub fn exact_pareto_plain(m: &OpenMdp<Rational>, entrance: usize) -> Vec<Point<Rational>> {
    let mut v = prune(dm_points(m, entrance));
    v.sort();
    v
}

/// Adds to state `s` an action dominated by a convex combination of its
/// existing actions: every successor other than `sink` receives at most
/// the mixed probability and the rest goes to `sink`.
pub fn add_dominated_action(
    rng: &mut impl Rng,
    m: &mut OpenMdp<Rational>,
    s: StateId,
    sink: StateId,
) {
    let acts = m.mdp.enabled(s).to_vec();
    let raw: Vec<i64> = acts.iter().map(|_| rng.gen_range(0..4)).collect();
    let tot: i64 = raw.iter().sum::<i64>().max(1);
    let weights: Vec<Rational> = if raw.iter().all(|x| *x == 0) {
        let mut w = vec![q(0, 1); acts.len()];
        w[0] = q(1, 1);
        w
    } else {
        raw.iter().map(|x| q(*x, tot)).collect()
    };
    let mut mix: Vec<(StateId, Rational)> = Vec::new();
    for (a, w) in acts.iter().zip(&weights) {
        for (t, p) in &a.dist {
            let v = w.clone() * p.clone();
            match mix.iter_mut().find(|(u, _)| u == t) {
                Some((_, x)) => *x = x.clone() + v,
                None => mix.push((*t, v)),
            }
        }
    }
    let mut dist: Vec<(StateId, Rational)> = Vec::new();
    let mut used = q(0, 1);
    for (t, p) in mix {
        if t == sink {
            continue;
        }
        let keep = p * q(rng.gen_range(0..=4), 4);
        used = used + keep.clone();
        dist.push((t, keep));
    }
    dist.push((sink, q(1, 1) - used));
    let k = m.mdp.enabled(s).len();
    m.mdp
        .add_action(s, format!("dominated{k}"), dist)
        .expect("states exist");
}
