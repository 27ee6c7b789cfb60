//! Small hand-built models shared by the test suites.

use sdp_core::{Mdp, OpenEnds, OpenMdp, Scalar};

pub fn ends(in_r: &[usize], in_l: &[usize], out_r: &[usize], out_l: &[usize]) -> OpenEnds {
    OpenEnds {
        in_r: in_r.to_vec(),
        in_l: in_l.to_vec(),
        out_r: out_r.to_vec(),
        out_l: out_l.to_vec(),
    }
}

/// Two-entrance room: from the right entrance one step to `s1`, which
/// either flips a coin between the right exit and `s2` or walks to `s2`;
/// `s2` leaves to the left.  The left entrance goes to `s2` or the right
/// exit.
pub fn room_a<T: Scalar>() -> OpenMdp<T> {
    let mut m = Mdp::with_states(["enr1", "exl1", "s1", "s2", "enl1", "exr1"]);
    m.add_action(0, "go", [(2, T::one())]).unwrap();
    m.add_action(2, "top", [(5, T::ratio(1, 2)), (3, T::ratio(1, 2))])
        .unwrap();
    m.add_action(2, "bottom", [(3, T::one())]).unwrap();
    m.add_action(3, "go", [(1, T::one())]).unwrap();
    m.add_action(4, "go", [(3, T::ratio(3, 10)), (5, T::ratio(7, 10))])
        .unwrap();
    OpenMdp::new(m, ends(&[0], &[4], &[5], &[1]))
}

/// Passes right with 0.7, otherwise bounces back left.
pub fn room_b<T: Scalar>() -> OpenMdp<T> {
    let mut m = Mdp::with_states(["enr1", "t1", "exr1", "exl1"]);
    m.add_action(0, "go", [(1, T::ratio(3, 10)), (2, T::ratio(7, 10))])
        .unwrap();
    m.add_action(1, "go", [(3, T::one())]).unwrap();
    OpenMdp::new(m, ends(&[0], &[], &[2], &[3]))
}

/// One entrance, two exits; `(0.3,0.1)`, `(0.27,0.3)` and `(0.2,0.4)` are
/// the Pareto-optimal exit distributions.
pub fn two_exit<T: Scalar>() -> OpenMdp<T> {
    let mut m = Mdp::with_states(["enr1", "s1", "exr1", "exr2", "sink"]);
    m.add_action(0, "a", [(1, T::one())]).unwrap();
    m.add_action(
        0,
        "b",
        [(2, T::ratio(27, 100)), (3, T::ratio(3, 10)), (4, T::ratio(43, 100))],
    )
    .unwrap();
    m.add_action(1, "a", [(2, T::ratio(1, 5)), (3, T::ratio(2, 5)), (4, T::ratio(2, 5))])
        .unwrap();
    m.add_action(1, "b", [(2, T::ratio(3, 10)), (3, T::ratio(1, 10)), (4, T::ratio(3, 5))])
        .unwrap();
    m.add_action(4, "loop", [(4, T::one())]).unwrap();
    OpenMdp::new(m, ends(&[0], &[], &[2, 3], &[]))
}

/// Both entrances lead straight to the single right exit.
pub fn funnel<T: Scalar>() -> OpenMdp<T> {
    let mut m = Mdp::with_states(["enr1", "enl1", "exr1"]);
    m.add_action(0, "go", [(2, T::one())]).unwrap();
    m.add_action(1, "go", [(2, T::one())]).unwrap();
    OpenMdp::new(m, ends(&[0], &[1], &[2], &[]))
}

/// Bounces back left with 0.99, passes with `pass` and is lost otherwise.
pub fn leaky_mirror<T: Scalar>(pass: T) -> OpenMdp<T> {
    let mut m = Mdp::with_states(["enr1", "exr1", "exl1", "t1"]);
    let lost = T::ratio(1, 100) - pass.clone();
    m.add_action(0, "go", [(1, pass), (3, lost), (2, T::ratio(99, 100))])
        .unwrap();
    m.add_action(3, "stuck", [(3, T::one())]).unwrap();
    OpenMdp::new(m, ends(&[0], &[], &[1], &[2]))
}

/// One entrance choosing between two right exits.
pub fn fork<T: Scalar>() -> OpenMdp<T> {
    let mut m = Mdp::with_states(["enr1", "exr1", "exr2"]);
    m.add_action(0, "a", [(1, T::one())]).unwrap();
    m.add_action(0, "b", [(2, T::one())]).unwrap();
    OpenMdp::new(m, ends(&[0], &[], &[1, 2], &[]))
}

/// Two right entrances merging into one right exit.
pub fn merge<T: Scalar>() -> OpenMdp<T> {
    let mut m = Mdp::with_states(["enr1", "enr2", "exr1"]);
    m.add_action(0, "go", [(2, T::one())]).unwrap();
    m.add_action(1, "go", [(2, T::one())]).unwrap();
    OpenMdp::new(m, ends(&[0, 1], &[], &[2], &[]))
}
