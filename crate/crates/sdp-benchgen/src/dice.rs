use std::collections::HashMap;

use sdp_core::{Mdp, OpenEnds, OpenMdp, Scalar, StateId};
use serde::{Deserialize, Serialize};

use crate::BenchError;

pub const MAX_SCORE: i64 = 100;

/// Score change and its weight.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Die {
    pub faces: Vec<(i64, u64)>,
}

impl Die {
    pub fn new(faces: &[(i64, u64)]) -> Self {
        Die {
            faces: faces.to_vec(),
        }
    }
}

/// Dice game: every round one of the dice is chosen and rolled; the
/// score stays within `[0, 100]`.  `bands` are the lower bounds of the
/// score bands; band `j` is `[bands[j], bands[j+1])` and the last one ends
/// at 100.  Entrance `j` starts at score `bands[j]`; exit `j` is reached
/// when the final score lies in band `j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiceSpec {
    pub rounds: usize,
    pub dice: Vec<Die>,
    pub bands: Vec<i64>,
}

impl Default for DiceSpec {
    fn default() -> Self {
        DiceSpec {
            rounds: 100,
            dice: vec![
                Die::new(&[(1, 3), (2, 2), (-1, 1)]),
                Die::new(&[(3, 1), (1, 1), (-2, 1)]),
                Die::new(&[(2, 2), (3, 1), (-3, 1)]),
            ],
            bands: vec![0, 50],
        }
    }
}

impl DiceSpec {
    pub fn with_bands(k: usize) -> Self {
        let k = k.max(1) as i64;
        DiceSpec {
            bands: (0..k).map(|j| j * (MAX_SCORE + 1) / k).collect(),
            ..Self::default()
        }
    }

    fn band(&self, score: i64) -> usize {
        self.bands.iter().rposition(|&b| b <= score).expect("bands start at 0")
    }

    fn check(&self) -> Result<(), BenchError> {
        let b = &self.bands;
        if b.first() != Some(&0) {
            return Err(BenchError::MalformedBands("first band must start at 0".into()));
        }
        if b.windows(2).any(|w| w[0] >= w[1]) || b.last().is_some_and(|&x| x > MAX_SCORE) {
            return Err(BenchError::MalformedBands(format!(
                "lower bounds {b:?} must increase strictly within 0..=100"
            )));
        }
        if self.rounds == 0 {
            return Err(BenchError::ZeroSize("rounds"));
        }
        if self.dice.is_empty() {
            return Err(BenchError::MalformedDie("no dice".into()));
        }
        for (i, d) in self.dice.iter().enumerate() {
            if d.faces.is_empty() || d.faces.iter().all(|f| f.1 == 0) {
                return Err(BenchError::MalformedDie(format!("die {i} has no faces")));
            }
        }
        Ok(())
    }
}

/// Dice game oMDP of arity `(k,0) -> (k,0)` over the reachable
/// `(round, score)` pairs.
pub fn gen_dice<T: Scalar>(spec: &DiceSpec) -> Result<OpenMdp<T>, BenchError> {
    spec.check()?;
    let k = spec.bands.len();
    let mut names: Vec<String> = (1..=k).map(|j| format!("enr{j}")).collect();
    names.extend((1..=k).map(|j| format!("exr{j}")));
    let mut m: Mdp<T> = Mdp::with_states(names);
    let mut index: HashMap<(usize, i64), StateId> = HashMap::new();
    let mut queue = Vec::new();
    let mut state = |m: &mut Mdp<T>, r: usize, s: i64, queue: &mut Vec<(usize, i64, StateId)>| {
        *index.entry((r, s)).or_insert_with(|| {
            let id = m.add_state(format!("r{r}_s{s}"));
            queue.push((r, s, id));
            id
        })
    };
    for (j, &b) in spec.bands.iter().enumerate() {
        let t = state(&mut m, 0, b, &mut queue);
        m.add_action(j, "start", [(t, T::one())]).expect("state exists");
    }
    while let Some((r, s, id)) = queue.pop() {
        for (i, die) in spec.dice.iter().enumerate() {
            let total: u64 = die.faces.iter().map(|f| f.1).sum();
            let mut dist = Vec::new();
            for &(delta, w) in &die.faces {
                let next = (s + delta).clamp(0, MAX_SCORE);
                let t = if r + 1 == spec.rounds {
                    k + spec.band(next)
                } else {
                    state(&mut m, r + 1, next, &mut queue)
                };
                dist.push((t, T::ratio(w as i64, total as i64)));
            }
            m.add_action(id, format!("die{}", i + 1), dist)
                .expect("states exist");
        }
    }
    Ok(OpenMdp::new(
        m,
        OpenEnds {
            in_r: (0..k).collect(),
            in_l: vec![],
            out_r: (k..2 * k).collect(),
            out_l: vec![],
        },
    ))
}
