//! The representation-conditioned mixed policy and its Monte-Carlo control
//! evaluation.
//!
//! `π_φ(a | s, z)` averages the optimal action law `P*(a | s, g)` uniformly
//! over the goals `g` with `φ(s, g) = z`. Rollouts sample actions from it and
//! count how often the goal is reached within the horizon.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cube_env::{Action, CubeEnv, GoalIndex, Gripper, StateIndex, NUM_ACTIONS};
use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::oracle::OracleTables;
use crate::rep_library::{RepValue, RepresentationSpec};
use crate::rng::{stream, Domain};

/// Goals averaged into `π_φ(· | s, z)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicySupport {
    /// Every goal not yet achieved at `s`.
    #[default]
    Reachable,
    /// Only goals whose pair survives the pair filter.
    Filtered,
}

/// `(s, z) → π_φ(· | s, z)`, stored per state.
#[derive(Clone, Debug)]
pub struct MixedPolicyTable {
    offsets: Vec<usize>,
    keys: Vec<RepValue>,
    rows: Vec<[f64; NUM_ACTIONS]>,
    num_goals: usize,
    /// Row used at `(s, g)`, state-major; [`NO_ROW`] when `(s, z)` has none.
    pair_row: Vec<u32>,
}

const NO_ROW: u32 = u32::MAX;

impl MixedPolicyTable {
    /// Row for `(s, z)`, if any goal at `s` encodes to `z`.
    pub fn get(&self, s: StateIndex, z: &RepValue) -> Option<&[f64; NUM_ACTIONS]> {
        let r = self.offsets[s.idx()]..self.offsets[s.idx() + 1];
        self.keys[r.clone()].iter().position(|k| k == z).map(|i| &self.rows[r.start + i])
    }

    /// Row the policy uses when pursuing `g` from `s`.
    pub fn row_for(&self, s: StateIndex, g: GoalIndex) -> Option<&[f64; NUM_ACTIONS]> {
        match self.pair_row[s.idx() * self.num_goals + g.idx()] {
            NO_ROW => None,
            r => Some(&self.rows[r as usize]),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64; NUM_ACTIONS]> {
        self.rows.iter()
    }
}

/// Builds `π_φ` by averaging `P*(· | s, g)` over each `(s, z)` class.
pub fn build_mixed_policy(
    spec: &RepresentationSpec,
    env: &CubeEnv,
    oracle: &OracleTables,
    features: &FeatureTable,
    support: PolicySupport,
) -> Result<MixedPolicyTable> {
    let mut offsets = Vec::with_capacity(env.num_states() + 1);
    let mut keys = Vec::new();
    let mut rows: Vec<[f64; NUM_ACTIONS]> = Vec::new();
    let mut counts: Vec<f64> = Vec::new();
    offsets.push(0);
    let all_goals: Vec<GoalIndex> = (0..env.num_goals()).map(|g| GoalIndex(g as u32)).collect();
    for s in 0..env.num_states() {
        let s = StateIndex(s as u32);
        let start = keys.len();
        let goals = match support {
            PolicySupport::Reachable => &all_goals[..],
            PolicySupport::Filtered => env.pairs().goals_of(s),
        };
        for &g in goals {
            match oracle.dist(s, g) {
                Some(d) if d > 0 => {}
                _ => continue,
            }
            let z = spec.encode(features.get(s, g)?);
            let p = oracle.optimal_mask(s, g);
            let law = crate::oracle::mask_to_distribution(p);
            let slot = match keys[start..].iter().position(|k| *k == z) {
                Some(i) => start + i,
                None => {
                    keys.push(z);
                    rows.push([0.0; NUM_ACTIONS]);
                    counts.push(0.0);
                    keys.len() - 1
                }
            };
            for a in 0..NUM_ACTIONS {
                rows[slot][a] += law[a];
            }
            counts[slot] += 1.0;
        }
        offsets.push(keys.len());
    }
    for (row, c) in rows.iter_mut().zip(&counts) {
        for x in row.iter_mut() {
            *x /= c;
        }
    }
    let ng = env.num_goals();
    let mut pair_row = vec![NO_ROW; env.num_states() * ng];
    for (s, w) in offsets.windows(2).enumerate() {
        let si = StateIndex(s as u32);
        for g in 0..ng {
            let gi = GoalIndex(g as u32);
            if let Ok(f) = features.get(si, gi) {
                let z = spec.encode(f);
                if let Some(i) = keys[w[0]..w[1]].iter().position(|k| *k == z) {
                    pair_row[s * ng + g] = (w[0] + i) as u32;
                }
            }
        }
    }
    Ok(MixedPolicyTable { offsets, keys, rows, num_goals: ng, pair_row })
}

/// Rollout protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RolloutConfig {
    pub n_tasks: usize,
    pub n_rollouts_per_task: usize,
    pub margin: u32,
    pub horizon_cap: u32,
    pub seed: u64,
    pub support: PolicySupport,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        Self {
            n_tasks: 600,
            n_rollouts_per_task: 50,
            margin: 6,
            horizon_cap: 30,
            seed: 0,
            support: PolicySupport::Reachable,
        }
    }
}

impl RolloutConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_tasks == 0 || self.n_rollouts_per_task == 0 {
            return Err(Error::InvalidConfig("task and rollout counts must be positive".into()));
        }
        if self.horizon_cap == 0 {
            return Err(Error::InvalidConfig("horizon cap must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub state: StateIndex,
    pub goal: GoalIndex,
    pub horizon: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSample {
    pub tasks: Vec<Task>,
    /// Set when fewer eligible pairs than requested tasks existed.
    pub with_replacement: bool,
}

/// `min(D* + margin, cap)`.
pub fn task_horizon(dist: u16, margin: u32, cap: u32) -> u32 {
    (dist as u32 + margin).min(cap)
}

/// Draws start/goal tasks with an empty gripper and the target off its goal
/// cell, uniformly over all such pairs.
pub fn sample_tasks(cfg: &RolloutConfig, env: &CubeEnv, oracle: &OracleTables) -> Result<TaskSample> {
    cfg.validate()?;
    let mut eligible = Vec::new();
    for (si, st) in env.states().iter().enumerate() {
        if st.gripper != Gripper::None {
            continue;
        }
        for (gi, goal) in env.goals().iter().enumerate() {
            if st.cube_pos(goal.target) == goal.pos {
                continue;
            }
            let (s, g) = (StateIndex(si as u32), GoalIndex(gi as u32));
            if let Some(d) = oracle.dist(s, g) {
                eligible.push((s, g, d));
            }
        }
    }
    if eligible.is_empty() {
        return Err(Error::NoEligibleTasks);
    }
    let mut rng = stream(cfg.seed, Domain::Tasks, 0, 0);
    let with_replacement = eligible.len() < cfg.n_tasks;
    let picks: Vec<usize> = if with_replacement {
        (0..cfg.n_tasks).map(|_| rng.random_range(0..eligible.len())).collect()
    } else {
        let mut v = index::sample(&mut rng, eligible.len(), cfg.n_tasks).into_vec();
        v.sort_unstable();
        v
    };
    let tasks = picks
        .into_iter()
        .map(|i| {
            let (state, goal, d) = eligible[i];
            Task { state, goal, horizon: task_horizon(d, cfg.margin, cfg.horizon_cap) }
        })
        .collect();
    Ok(TaskSample { tasks, with_replacement })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RolloutOutcome {
    pub success_rate: f64,
    pub successes: u64,
    pub total_rollouts: u64,
    pub per_task_successes: Vec<u32>,
    /// Steps taken from a uniform fallback because `(s, z)` had no row.
    pub off_support_steps: u64,
    pub tasks_with_replacement: bool,
}

/// Index sampled from `p` with one uniform draw.
pub fn sample_action<R: Rng>(rng: &mut R, p: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (a, &pa) in p.iter().enumerate() {
        if pa > 0.0 {
            acc += pa;
            last = a;
            if u < acc {
                return a;
            }
        }
    }
    last
}

const UNIFORM: [f64; NUM_ACTIONS] = [1.0 / NUM_ACTIONS as f64; NUM_ACTIONS];

/// Runs one rollout; returns `(reached, off_support_steps)`.
fn rollout<R: Rng>(rng: &mut R, task: &Task, env: &CubeEnv, table: &MixedPolicyTable) -> (bool, u64) {
    let mut s = task.state;
    let mut off = 0;
    let mut t = 0;
    loop {
        if env.is_success(s, task.goal) {
            return (true, off);
        }
        if t >= task.horizon {
            return (false, off);
        }
        let p = match table.row_for(s, task.goal) {
            Some(p) => p,
            None => {
                off += 1;
                &UNIFORM
            }
        };
        let a = sample_action(rng, p);
        s = env.next(s, Action::from_index(a));
        t += 1;
    }
}

/// Evaluates `π_φ` on pre-sampled tasks. Each rollout draws from its own
/// `(seed, task, rollout)` stream, so the outcome does not depend on thread
/// count.
pub fn evaluate_tasks(
    cfg: &RolloutConfig,
    env: &CubeEnv,
    table: &MixedPolicyTable,
    sample: &TaskSample,
) -> Result<RolloutOutcome> {
    cfg.validate()?;
    let per_task: Vec<(u32, u64)> = sample
        .tasks
        .par_iter()
        .enumerate()
        .map(|(ti, task)| {
            let mut wins = 0u32;
            let mut off = 0u64;
            for r in 0..cfg.n_rollouts_per_task {
                let mut rng = stream(cfg.seed, Domain::Rollout, ti as u32, r as u32);
                let (ok, o) = rollout(&mut rng, task, env, table);
                wins += ok as u32;
                off += o;
            }
            (wins, off)
        })
        .collect();
    let successes: u64 = per_task.iter().map(|&(w, _)| w as u64).sum();
    let total = (sample.tasks.len() * cfg.n_rollouts_per_task) as u64;
    Ok(RolloutOutcome {
        success_rate: successes as f64 / total as f64,
        successes,
        total_rollouts: total,
        per_task_successes: per_task.iter().map(|&(w, _)| w).collect(),
        off_support_steps: per_task.iter().map(|&(_, o)| o).sum(),
        tasks_with_replacement: sample.with_replacement,
    })
}

/// Builds `π_φ`, samples tasks and runs the full rollout protocol.
pub fn evaluate(
    spec: &RepresentationSpec,
    cfg: &RolloutConfig,
    env: &CubeEnv,
    oracle: &OracleTables,
    features: &FeatureTable,
) -> Result<RolloutOutcome> {
    let table = build_mixed_policy(spec, env, oracle, features, cfg.support)?;
    let sample = sample_tasks(cfg, env, oracle)?;
    evaluate_tasks(cfg, env, &table, &sample)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::compute_oracle;
    use crate::rep_library::{baseline, BaselineKind};

    struct Fixture {
        env: CubeEnv,
        oracle: OracleTables,
        features: FeatureTable,
    }

    fn fixture() -> Fixture {
        let env = CubeEnv::new(4).unwrap();
        let oracle = compute_oracle(&env);
        let features = FeatureTable::new(&env, &oracle);
        Fixture { env, oracle, features }
    }

    #[test]
    fn rows_are_distributions() {
        let f = fixture();
        for kind in BaselineKind::ALL {
            for support in [PolicySupport::Reachable, PolicySupport::Filtered] {
                let t = build_mixed_policy(&baseline(kind), &f.env, &f.oracle, &f.features, support)
                    .unwrap();
                for row in t.rows() {
                    assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                    assert!(row.iter().all(|&x| x >= 0.0));
                }
            }
        }
    }

    #[test]
    fn full_policy_is_optimal_policy() {
        let f = fixture();
        let spec = baseline(BaselineKind::Full);
        let t = build_mixed_policy(&spec, &f.env, &f.oracle, &f.features, PolicySupport::Reachable)
            .unwrap();
        for s in 0..f.env.num_states() {
            let s = StateIndex(s as u32);
            for g in 0..f.env.num_goals() {
                let g = GoalIndex(g as u32);
                if f.env.is_success(s, g) {
                    continue;
                }
                let z = spec.encode(f.features.get(s, g).unwrap());
                assert_eq!(t.get(s, &z).unwrap(), &f.oracle.optimal_policy(s, g).unwrap());
            }
        }
    }

    #[test]
    fn collisions_average_laws() {
        let f = fixture();
        let spec = baseline(BaselineKind::ValueOnly);
        let t = build_mixed_policy(&spec, &f.env, &f.oracle, &f.features, PolicySupport::Filtered)
            .unwrap();
        // Find a state whose class of two or more goals has disjoint single optimal actions.
        let mut checked = 0;
        for s in 0..f.env.num_states() {
            let s = StateIndex(s as u32);
            let goals = f.env.pairs().goals_of(s);
            for (i, &g1) in goals.iter().enumerate() {
                let z = spec.encode(f.features.get(s, g1).unwrap());
                let class: Vec<GoalIndex> = goals
                    .iter()
                    .copied()
                    .filter(|&g| spec.encode(f.features.get(s, g).unwrap()) == z)
                    .collect();
                let mut mean = [0.0; NUM_ACTIONS];
                for &g in &class {
                    let p = f.oracle.optimal_policy(s, g).unwrap();
                    for a in 0..NUM_ACTIONS {
                        mean[a] += p[a] / class.len() as f64;
                    }
                }
                let row = t.get(s, &z).unwrap();
                for a in 0..NUM_ACTIONS {
                    assert!((row[a] - mean[a]).abs() < 1e-12);
                }
                if class.len() == 2 {
                    let m1 = f.oracle.optimal_mask(s, class[0]);
                    let m2 = f.oracle.optimal_mask(s, class[1]);
                    if m1.count_ones() == 1 && m2.count_ones() == 1 && m1 & m2 == 0 {
                        assert_eq!(row[m1.trailing_zeros() as usize], 0.5);
                        assert_eq!(row[m2.trailing_zeros() as usize], 0.5);
                        checked += 1;
                    }
                }
                if i > 3 {
                    break;
                }
            }
            if checked > 20 {
                break;
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn task_sampling_rules() {
        let f = fixture();
        let cfg = RolloutConfig { seed: 3, ..Default::default() };
        let sample = sample_tasks(&cfg, &f.env, &f.oracle).unwrap();
        assert_eq!(sample.tasks.len(), 600);
        assert!(!sample.with_replacement);
        for t in &sample.tasks {
            let st = f.env.state(t.state);
            let goal = f.env.goal(t.goal);
            assert_eq!(st.gripper, Gripper::None);
            assert_ne!(st.cube_pos(goal.target), goal.pos);
            let d = f.oracle.dist(t.state, t.goal).unwrap();
            assert!(d >= 1);
            assert_eq!(t.horizon, (d as u32 + 6).min(30));
        }
        assert_eq!(sample, sample_tasks(&cfg, &f.env, &f.oracle).unwrap());
        let other = sample_tasks(&RolloutConfig { seed: 4, ..cfg }, &f.env, &f.oracle).unwrap();
        assert_ne!(sample, other);
    }

    #[test]
    fn horizon_examples() {
        assert_eq!(task_horizon(10, 6, 30), 16);
        assert_eq!(task_horizon(28, 6, 30), 30);
    }

    #[test]
    fn with_replacement_when_short() {
        let env = CubeEnv::new(2).unwrap();
        let oracle = compute_oracle(&env);
        let cfg = RolloutConfig { n_tasks: 10_000, ..Default::default() };
        let sample = sample_tasks(&cfg, &env, &oracle).unwrap();
        assert!(sample.with_replacement);
        assert_eq!(sample.tasks.len(), 10_000);
    }

    #[test]
    fn invalid_config_rejected() {
        let f = fixture();
        let cfg = RolloutConfig { n_rollouts_per_task: 0, ..Default::default() };
        assert!(matches!(sample_tasks(&cfg, &f.env, &f.oracle), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn full_baseline_always_succeeds_and_is_reproducible() {
        let f = fixture();
        let cfg = RolloutConfig { n_tasks: 100, n_rollouts_per_task: 5, seed: 11, ..Default::default() };
        let spec = baseline(BaselineKind::Full);
        let a = evaluate(&spec, &cfg, &f.env, &f.oracle, &f.features).unwrap();
        assert_eq!(a.success_rate, 1.0);
        assert_eq!(a.off_support_steps, 0);
        let b = evaluate(&spec, &cfg, &f.env, &f.oracle, &f.features).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sample_action_respects_support() {
        let mut rng = stream(1, Domain::Rollout, 0, 0);
        let p = [0.0, 0.5, 0.0, 0.5, 0.0, 0.0];
        let mut hits = [0usize; NUM_ACTIONS];
        for _ in 0..10_000 {
            hits[sample_action(&mut rng, &p)] += 1;
        }
        assert_eq!(hits[0] + hits[2] + hits[4] + hits[5], 0);
        assert!((hits[1] as f64 / 10_000.0 - 0.5).abs() < 0.03);
    }
}
