//! Relative-position features of a `(state, goal)` pair.

use serde::{Deserialize, Serialize};

use crate::cube_env::{CubeEnv, CubeId, GoalIndex, Gripper, StateIndex};
use crate::error::{Error, Result};
use crate::oracle::OracleTables;

/// Displacements agent→target (`dx1`, `dy1`) and target→goal (`dx2`, `dy2`),
/// their Manhattan lengths, and the optimal value. A held target sits on the
/// agent's cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureVector {
    pub h: Gripper,
    pub t: CubeId,
    pub dx1: i32,
    pub dy1: i32,
    pub dx2: i32,
    pub dy2: i32,
    pub d_at: i32,
    pub d_bg: i32,
    pub v: i32,
}

impl FeatureVector {
    pub fn directions(&self) -> [i32; 4] {
        [self.dx1, self.dy1, self.dx2, self.dy2]
    }

    pub fn target_code(&self) -> i32 {
        self.t as i32
    }
}

/// Features of `(s, g)`. Fails when `g` is unreachable from `s`.
pub fn features(env: &CubeEnv, oracle: &OracleTables, s: StateIndex, g: GoalIndex) -> Result<FeatureVector> {
    let v = oracle.value(s, g)?;
    Ok(raw_features(env, s, g, v))
}

fn raw_features(env: &CubeEnv, s: StateIndex, g: GoalIndex, v: i32) -> FeatureVector {
    let st = env.state(s);
    let goal = env.goal(g);
    let agent = st.agent;
    let target = st.cube_pos(goal.target);
    let dx1 = target.x as i32 - agent.x as i32;
    let dy1 = target.y as i32 - agent.y as i32;
    let dx2 = goal.pos.x as i32 - target.x as i32;
    let dy2 = goal.pos.y as i32 - target.y as i32;
    FeatureVector {
        h: st.gripper,
        t: goal.target,
        dx1,
        dy1,
        dx2,
        dy2,
        d_at: dx1.abs() + dy1.abs(),
        d_bg: dx2.abs() + dy2.abs(),
        v,
    }
}

/// Features for every reachable `(state, goal)` pair, state-major.
#[derive(Clone, Debug)]
pub struct FeatureTable {
    num_goals: usize,
    rows: Vec<Option<FeatureVector>>,
}

impl FeatureTable {
    pub fn new(env: &CubeEnv, oracle: &OracleTables) -> Self {
        let ng = env.num_goals();
        let mut rows = Vec::with_capacity(env.num_states() * ng);
        for s in 0..env.num_states() {
            for g in 0..ng {
                let (s, g) = (StateIndex(s as u32), GoalIndex(g as u32));
                rows.push(oracle.value(s, g).ok().map(|v| raw_features(env, s, g, v)));
            }
        }
        Self { num_goals: ng, rows }
    }

    pub fn get(&self, s: StateIndex, g: GoalIndex) -> Result<&FeatureVector> {
        self.rows[s.idx() * self.num_goals + g.idx()]
            .as_ref()
            .ok_or_else(|| Error::Unreachable { state: s.idx(), goal: g.idx() })
    }
}
