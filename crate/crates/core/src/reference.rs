//! Slow, direct implementations used to cross-check the fast paths on small
//! grids.
//!
//! Distances come from a forward breadth-first search per `(state, goal)`
//! pair, and information quantities from explicit joint distributions over
//! `(S, G, A, V, Z)` marginalised with hash maps. Nothing here shares code
//! with [`crate::oracle`] or [`crate::info_metrics`].

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::cube_env::{Action, CubeEnv, CubeSlot, CubeState, Goal, Gripper};
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::rep_library::{RepValue, RepresentationSpec};

/// States reachable from `start` by forward search.
pub fn reachable_states(start: CubeState, n: u8) -> HashSet<CubeState> {
    let mut seen = HashSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        for a in Action::ALL {
            let t = s.step(a, n);
            if seen.insert(t) {
                queue.push_back(t);
            }
        }
    }
    seen
}

/// Fewest steps from `s` to a state satisfying `g`, by forward search.
pub fn forward_distance(s: CubeState, g: &Goal, n: u8) -> Option<u32> {
    let mut seen = HashSet::from([s]);
    let mut queue = VecDeque::from([(s, 0u32)]);
    while let Some((x, d)) = queue.pop_front() {
        if x.is_success(g) {
            return Some(d);
        }
        for a in Action::ALL {
            let t = x.step(a, n);
            if seen.insert(t) {
                queue.push_back((t, d + 1));
            }
        }
    }
    None
}

/// Pair filter written out case by case.
pub fn naive_pair_filter(s: &CubeState, g: &Goal) -> bool {
    let target = match g.target {
        crate::cube_env::CubeId::Red => s.red,
        crate::cube_env::CubeId::Blue => s.blue,
    };
    let other = match g.target {
        crate::cube_env::CubeId::Red => s.blue,
        crate::cube_env::CubeId::Blue => s.red,
    };
    match (s.gripper, target, other) {
        (Gripper::None, CubeSlot::Floor(t), CubeSlot::Floor(o)) => t != o && t != g.pos && o != g.pos,
        (_, CubeSlot::Held, CubeSlot::Floor(o)) => s.agent != o && s.agent != g.pos && o != g.pos,
        (_, CubeSlot::Floor(t), CubeSlot::Held) => s.agent != t && s.agent != g.pos && t != g.pos,
        _ => false,
    }
}

/// One atom of the joint law: a pair and one optimal action.
#[derive(Clone, Debug)]
struct Atom {
    prob: f64,
    s: usize,
    g: usize,
    a: usize,
    v: i64,
    z: RepValue,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Var {
    S,
    G,
    A,
    V,
    Z,
}

/// Explicit joint law of `(S, G, A, V, Z)` on the filtered pairs.
pub struct ReferenceJoint {
    atoms: Vec<Atom>,
}

/// Reference quantities in nats.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceInfo {
    pub delta_a: f64,
    pub delta_v: f64,
    pub i_az_sv: f64,
    pub i_ag_sv: f64,
    pub i_av_sz: f64,
    pub h_a_sg: f64,
    pub h_a_sz: f64,
    pub h_v_sz: f64,
    pub h_a_sv: f64,
    pub h_a_svz: f64,
}

fn naive_features(s: &CubeState, g: &Goal, v: i64) -> FeatureVector {
    let agent = s.agent;
    let target = match s.slot(g.target) {
        CubeSlot::Held => agent,
        CubeSlot::Floor(p) => p,
    };
    let dx1 = target.x as i32 - agent.x as i32;
    let dy1 = target.y as i32 - agent.y as i32;
    let dx2 = g.pos.x as i32 - target.x as i32;
    let dy2 = g.pos.y as i32 - target.y as i32;
    FeatureVector {
        h: s.gripper,
        t: g.target,
        dx1,
        dy1,
        dx2,
        dy2,
        d_at: dx1.abs() + dy1.abs(),
        d_bg: dx2.abs() + dy2.abs(),
        v: v as i32,
    }
}

impl ReferenceJoint {
    /// Builds the joint law of `spec` on `env` from forward searches only.
    pub fn new(env: &CubeEnv, spec: &RepresentationSpec) -> Result<Self> {
        let n = env.grid_size();
        let mut pairs = Vec::new();
        for (si, s) in env.states().iter().enumerate() {
            for (gi, g) in env.goals().iter().enumerate() {
                if naive_pair_filter(s, g) {
                    pairs.push((si, gi));
                }
            }
        }
        if pairs.is_empty() {
            return Err(Error::EmptyPairs);
        }
        let w = 1.0 / pairs.len() as f64;
        let mut atoms = Vec::new();
        for (si, gi) in pairs {
            let (s, g) = (env.states()[si], env.goals()[gi]);
            let d = forward_distance(s, &g, n).ok_or(Error::Unreachable { state: si, goal: gi })?;
            let v = -(d as i64);
            let z = spec.encode(&naive_features(&s, &g, v));
            let best: Vec<usize> = Action::ALL
                .iter()
                .filter(|&&a| forward_distance(s.step(a, n), &g, n) == Some(d - 1))
                .map(|a| a.index())
                .collect();
            for &a in &best {
                atoms.push(Atom { prob: w / best.len() as f64, s: si, g: gi, a, v, z });
            }
        }
        Ok(Self { atoms })
    }

    fn entropy_of(&self, vars: &[Var]) -> f64 {
        let mut marginal: HashMap<Vec<i64>, f64> = HashMap::new();
        for atom in &self.atoms {
            let mut key = Vec::new();
            for v in vars {
                match v {
                    Var::S => key.push(atom.s as i64),
                    Var::G => key.push(atom.g as i64),
                    Var::A => key.push(atom.a as i64),
                    Var::V => key.push(atom.v),
                    Var::Z => {
                        key.push(atom.z.len() as i64);
                        key.extend(atom.z.as_slice().iter().map(|&x| x as i64));
                    }
                }
            }
            *marginal.entry(key).or_insert(0.0) += atom.prob;
        }
        -marginal.values().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
    }

    /// `H(X | Y)` as `H(X, Y) - H(Y)`.
    fn cond(&self, x: &[Var], y: &[Var]) -> f64 {
        let joint: Vec<Var> = x.iter().chain(y).copied().collect();
        self.entropy_of(&joint) - self.entropy_of(y)
    }

    pub fn info(&self) -> ReferenceInfo {
        use Var::*;
        let h_a_sg = self.cond(&[A], &[S, G]);
        let h_a_sz = self.cond(&[A], &[S, Z]);
        let h_a_sv = self.cond(&[A], &[S, V]);
        let h_a_svz = self.cond(&[A], &[S, V, Z]);
        let h_v_sz = self.cond(&[V], &[S, Z]);
        ReferenceInfo {
            delta_a: h_a_sz - self.cond(&[A], &[S, Z, G]),
            delta_v: h_v_sz - self.cond(&[V], &[S, Z, G]),
            i_az_sv: h_a_sv - h_a_svz,
            i_ag_sv: h_a_sv - self.cond(&[A], &[S, V, G]),
            i_av_sz: h_a_sz - self.cond(&[A], &[S, Z, V]),
            h_a_sg,
            h_a_sz,
            h_v_sz,
            h_a_sv,
            h_a_svz,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube_env::{passes_pair_filter, GridPos};

    #[test]
    fn forward_search_finds_every_enumerated_state() {
        for n in [2, 3] {
            let env = CubeEnv::new(n).unwrap();
            let start = CubeState {
                gripper: Gripper::None,
                agent: GridPos::new(0, 0),
                red: CubeSlot::Floor(GridPos::new(1, 0)),
                blue: CubeSlot::Floor(GridPos::new(0, 1)),
            };
            let seen = reachable_states(start, n);
            assert_eq!(seen.len(), env.num_states());
            assert!(env.states().iter().all(|s| seen.contains(s)));
        }
    }

    #[test]
    fn naive_filter_matches() {
        let env = CubeEnv::new(3).unwrap();
        for s in env.states() {
            for g in env.goals() {
                assert_eq!(naive_pair_filter(s, g), passes_pair_filter(s, g));
            }
        }
    }

    #[test]
    fn reference_joint_is_normalised() {
        let env = CubeEnv::new(2).unwrap();
        let j = ReferenceJoint::new(&env, &crate::rep_library::baseline(crate::rep_library::BaselineKind::Full))
            .unwrap();
        let total: f64 = j.atoms.iter().map(|a| a.prob).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let info = j.info();
        assert!(info.delta_a.abs() < 1e-12);
        assert!(info.delta_v.abs() < 1e-12);
    }
}
