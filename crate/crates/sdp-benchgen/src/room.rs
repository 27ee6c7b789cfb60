use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sdp_core::{Mdp, OpenEnds, OpenMdp, Scalar, StateId};
use serde::{Deserialize, Serialize};

use crate::{decimal, BenchError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Safety {
    Safe,
    Unsafe,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wind {
    Calm,
    Windy,
}

/// Square room with doors at the four edge centres.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoomSpec {
    pub side: usize,
    pub safety: Safety,
    pub wind: Wind,
    /// Overrides the slip probability of the wind class.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slip: Option<f64>,
    /// Overrides the hole density of the safety class.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hole_density: Option<f64>,
    /// Only west/south entrances and east/north exits.
    #[serde(default)]
    pub unidirectional: bool,
    #[serde(default)]
    pub seed: u64,
}

impl RoomSpec {
    pub fn new(side: usize, safety: Safety, wind: Wind, seed: u64) -> Self {
        RoomSpec {
            side,
            safety,
            wind,
            slip: None,
            hole_density: None,
            unidirectional: false,
            seed,
        }
    }

    /// 7 by 7.
    pub fn small(safety: Safety, wind: Wind, seed: u64) -> Self {
        Self::new(7, safety, wind, seed)
    }

    /// 101 by 101.
    pub fn big(safety: Safety, wind: Wind, seed: u64) -> Self {
        Self::new(101, safety, wind, seed)
    }

    pub fn slip_prob(&self) -> f64 {
        self.slip.unwrap_or(match self.wind {
            Wind::Calm => 0.1,
            Wind::Windy => 0.3,
        })
    }

    pub fn holes(&self) -> f64 {
        self.hole_density.unwrap_or(match self.safety {
            Safety::Safe => 0.02,
            Safety::Unsafe => 0.08,
        })
    }
}

const DIRS: [(i64, i64, &str); 4] = [(0, 1, "N"), (1, 0, "E"), (0, -1, "S"), (-1, 0, "W")];

/// Room oMDP.  Right entrances: west, south; right exits: east, north;
/// left entrances: east, north; left exits: west, south.  A move succeeds
/// with `1 - slip` and drifts to either side with `slip / 2`.  Leaving
/// the room is only possible through a door; elsewhere the walls hold.
pub fn gen_room<T: Scalar>(spec: &RoomSpec) -> Result<OpenMdp<T>, BenchError> {
    let n = spec.side;
    if n < 3 || n % 2 == 0 {
        return Err(BenchError::InvalidSide(n));
    }
    let c = n / 2;
    let uni = spec.unidirectional;
    let mut names: Vec<String> = vec!["in_w".into(), "in_s".into()];
    if !uni {
        names.extend(["in_e".into(), "in_n".into()]);
    }
    names.extend(["out_e".into(), "out_n".into()]);
    if !uni {
        names.extend(["out_w".into(), "out_s".into()]);
    }
    let first_cell = names.len();
    for y in 0..n {
        for x in 0..n {
            names.push(format!("c{x}_{y}"));
        }
    }
    let cell = |x: usize, y: usize| first_cell + y * n + x;
    let doors = [(0, c), (c, 0), (n - 1, c), (c, n - 1)];
    let mut m: Mdp<T> = Mdp::with_states(names);

    let candidates: Vec<(usize, usize)> = (0..n)
        .flat_map(|y| (0..n).map(move |x| (x, y)))
        .filter(|p| !doors.contains(p))
        .collect();
    let count = ((spec.holes() * (n * n) as f64).round() as usize).min(candidates.len());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut hole = vec![false; n * n];
    for i in sample(&mut rng, candidates.len(), count) {
        let (x, y) = candidates[i];
        hole[y * n + x] = true;
    }
    let dead = (count > 0).then(|| m.add_state("dead"));
    if let Some(d) = dead {
        m.add_action(d, "stay", [(d, T::one())]).expect("state exists");
    }

    // Door state reached by leaving cell (x, y) in direction (dx, dy).
    let (out_e, out_n) = if uni { (2, 3) } else { (4, 5) };
    let door = |x: usize, y: usize, dx: i64, dy: i64| -> Option<StateId> {
        match (dx, dy) {
            (1, 0) if (x, y) == (n - 1, c) => Some(out_e),
            (0, 1) if (x, y) == (c, n - 1) => Some(out_n),
            (-1, 0) if !uni && (x, y) == (0, c) => Some(6),
            (0, -1) if !uni && (x, y) == (c, 0) => Some(7),
            _ => None,
        }
    };
    let slip: T = decimal(spec.slip_prob());
    let half = slip.clone() * T::ratio(1, 2);
    for y in 0..n {
        for x in 0..n {
            let s = cell(x, y);
            if hole[y * n + x] {
                m.add_action(s, "fall", [(dead.expect("holes exist"), T::one())])
                    .expect("state exists");
                continue;
            }
            let step = |dx: i64, dy: i64| -> StateId {
                let (tx, ty) = (x as i64 + dx, y as i64 + dy);
                if (0..n as i64).contains(&tx) && (0..n as i64).contains(&ty) {
                    cell(tx as usize, ty as usize)
                } else {
                    door(x, y, dx, dy).unwrap_or(s)
                }
            };
            for (k, &(dx, dy, label)) in DIRS.iter().enumerate() {
                let (lx, ly, _) = DIRS[(k + 3) % 4];
                let (rx, ry, _) = DIRS[(k + 1) % 4];
                m.add_action(
                    s,
                    label,
                    [
                        (step(dx, dy), T::one() - slip.clone()),
                        (step(lx, ly), half.clone()),
                        (step(rx, ry), half.clone()),
                    ],
                )
                .expect("states exist");
            }
        }
    }
    let enter = |m: &mut Mdp<T>, s: StateId, (x, y): (usize, usize)| {
        m.add_action(s, "enter", [(cell(x, y), T::one())])
            .expect("states exist");
    };
    enter(&mut m, 0, (0, c));
    enter(&mut m, 1, (c, 0));
    let ends = if uni {
        OpenEnds {
            in_r: vec![0, 1],
            in_l: vec![],
            out_r: vec![2, 3],
            out_l: vec![],
        }
    } else {
        enter(&mut m, 2, (n - 1, c));
        enter(&mut m, 3, (c, n - 1));
        OpenEnds {
            in_r: vec![0, 1],
            in_l: vec![2, 3],
            out_r: vec![4, 5],
            out_l: vec![6, 7],
        }
    };
    Ok(OpenMdp::new(m, ends))
}
