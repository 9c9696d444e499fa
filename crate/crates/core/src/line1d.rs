//! Goal reaching on a finite window of the integer line.
//!
//! States and goals are the integers in `[-N, N]`, the actions are `-1` and
//! `+1`, and a move that would leave the window leaves the agent in place.
//! The sign encoding `s - g` keeps the optimal direction; the distance
//! encoding `|s - g|` keeps the optimal value but maps the goals on either
//! side of `s` to the same code.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info_metrics::{analyze_joint, InfoAnalysis, JointTable};
use crate::mixed_policy::sample_action;
use crate::rng::{stream, Domain};

/// Action `0` moves by `-1`, action `1` by `+1`.
pub const LINE_ACTIONS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LineConfig {
    pub radius: i64,
    pub gamma: f64,
    pub horizon: u32,
    pub rollouts_per_task: usize,
    pub seed: u64,
}

impl Default for LineConfig {
    fn default() -> Self {
        Self { radius: 10, gamma: 0.9, horizon: 10, rollouts_per_task: 200, seed: 0 }
    }
}

impl LineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.radius < 1 {
            return Err(Error::InvalidConfig("radius must be at least 1".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidConfig("gamma must lie in (0, 1)".into()));
        }
        if self.horizon == 0 || self.rollouts_per_task == 0 {
            return Err(Error::InvalidConfig("horizon and rollouts must be positive".into()));
        }
        Ok(())
    }

    pub fn states(&self) -> impl Iterator<Item = i64> + Clone {
        -self.radius..=self.radius
    }

    pub fn num_states(&self) -> usize {
        (2 * self.radius + 1) as usize
    }

    pub fn step(&self, s: i64, action: usize) -> i64 {
        let next = if action == 0 { s - 1 } else { s + 1 };
        if next.abs() > self.radius {
            s
        } else {
            next
        }
    }
}

/// `-(1 - gamma^|s - g|) / (1 - gamma)`.
pub fn v_star_line(s: i64, g: i64, gamma: f64) -> f64 {
    let d = (s - g).unsigned_abs();
    -(1.0 - gamma.powf(d as f64)) / (1.0 - gamma)
}

pub fn phi_sign(s: i64, g: i64) -> i64 {
    s - g
}

pub fn phi_dist(s: i64, g: i64) -> i64 {
    (s - g).abs()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinePhi {
    Sign,
    Dist,
}

impl LinePhi {
    pub const ALL: [LinePhi; 2] = [LinePhi::Sign, LinePhi::Dist];

    pub fn encode(self, s: i64, g: i64) -> i64 {
        match self {
            LinePhi::Sign => phi_sign(s, g),
            LinePhi::Dist => phi_dist(s, g),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LinePhi::Sign => "sign",
            LinePhi::Dist => "dist",
        }
    }
}

/// The optimal action toward `g != s`.
pub fn optimal_action(s: i64, g: i64) -> usize {
    usize::from(g > s)
}

fn one_hot(a: usize) -> [f64; LINE_ACTIONS] {
    let mut p = [0.0; LINE_ACTIONS];
    p[a] = 1.0;
    p
}

/// `pi_phi(. | s, z)` on the window: the optimal action averaged over goals
/// `g != s` with `phi(s, g) = z`.
#[derive(Clone, Debug)]
pub struct LinePolicy {
    cfg: LineConfig,
    phi: LinePhi,
    /// Indexed by `(s + N) * (2N + 1) + (g + N)`; `None` when `g == s`.
    rows: Vec<Option<[f64; LINE_ACTIONS]>>,
}

impl LinePolicy {
    pub fn new(cfg: &LineConfig, phi: LinePhi) -> Result<Self> {
        cfg.validate()?;
        let w = cfg.num_states();
        let mut rows = vec![None; w * w];
        for s in cfg.states() {
            for g in cfg.states().filter(|&g| g != s) {
                let z = phi.encode(s, g);
                let class: Vec<i64> =
                    cfg.states().filter(|&h| h != s && phi.encode(s, h) == z).collect();
                let mut p = [0.0; LINE_ACTIONS];
                for &h in &class {
                    p[optimal_action(s, h)] += 1.0 / class.len() as f64;
                }
                rows[Self::slot(cfg, s, g)] = Some(p);
            }
        }
        Ok(Self { cfg: *cfg, phi, rows })
    }

    fn slot(cfg: &LineConfig, s: i64, g: i64) -> usize {
        ((s + cfg.radius) * (2 * cfg.radius + 1) + (g + cfg.radius)) as usize
    }

    pub fn phi(&self) -> LinePhi {
        self.phi
    }

    /// Action law at `s` toward goal `g != s`.
    pub fn law(&self, s: i64, g: i64) -> Option<[f64; LINE_ACTIONS]> {
        self.rows[Self::slot(&self.cfg, s, g)]
    }

    /// Exact probability of reaching `g` from `s` within `horizon` steps.
    pub fn exact_success(&self, s: i64, g: i64, horizon: u32) -> f64 {
        let w = self.cfg.num_states();
        let idx = |x: i64| (x + self.cfg.radius) as usize;
        let mut mass = vec![0.0; w];
        mass[idx(s)] = 1.0;
        let mut reached = mass[idx(g)];
        mass[idx(g)] = 0.0;
        for _ in 0..horizon {
            let mut next = vec![0.0; w];
            for x in self.cfg.states() {
                let m = mass[idx(x)];
                if m == 0.0 {
                    continue;
                }
                let p = self.law(x, g).expect("goal cell is absorbed");
                for (a, &pa) in p.iter().enumerate() {
                    next[idx(self.cfg.step(x, a))] += m * pa;
                }
            }
            reached += next[idx(g)];
            next[idx(g)] = 0.0;
            mass = next;
        }
        reached
    }

    fn rollout<R: Rng>(&self, rng: &mut R, s: i64, g: i64) -> bool {
        let mut x = s;
        for _ in 0..self.cfg.horizon {
            if x == g {
                return true;
            }
            let p = self.law(x, g).expect("not at goal");
            x = self.cfg.step(x, sample_action(rng, &p));
        }
        x == g
    }
}

/// Monte-Carlo and exact success of one distance class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceClassResult {
    pub distance: u32,
    pub tasks: usize,
    pub success_rate: f64,
    /// Exact success averaged over the same tasks.
    pub exact_success_rate: f64,
}

/// Rolls out `pi_phi` from every ordered pair in the window, grouped by
/// distance. Distance `0` holds the pairs that start at the goal.
pub fn line_mixed_policy_eval(cfg: &LineConfig, phi: LinePhi) -> Result<Vec<DistanceClassResult>> {
    let policy = LinePolicy::new(cfg, phi)?;
    let max_d = (2 * cfg.radius) as usize;
    let mut wins = vec![0u64; max_d + 1];
    let mut exact = vec![0.0; max_d + 1];
    let mut tasks = vec![0usize; max_d + 1];
    let mut task_id = 0u32;
    for s in cfg.states() {
        for g in cfg.states() {
            let d = (s - g).unsigned_abs() as usize;
            tasks[d] += 1;
            exact[d] += policy.exact_success(s, g, cfg.horizon);
            for r in 0..cfg.rollouts_per_task {
                let mut rng = stream(cfg.seed, Domain::Line, task_id, r as u32);
                wins[d] += policy.rollout(&mut rng, s, g) as u64;
            }
            task_id += 1;
        }
    }
    Ok((0..=max_d)
        .map(|d| DistanceClassResult {
            distance: d as u32,
            tasks: tasks[d],
            success_rate: wins[d] as f64 / (tasks[d] * cfg.rollouts_per_task) as f64,
            exact_success_rate: exact[d] / tasks[d] as f64,
        })
        .collect())
}

/// Joint table over ordered pairs `s != g` with the distance as value level.
pub fn line_joint_table(cfg: &LineConfig) -> Result<JointTable<LINE_ACTIONS>> {
    cfg.validate()?;
    let states = cfg
        .states()
        .map(|s| {
            cfg.states()
                .filter(|&g| g != s)
                .map(|g| (one_hot(optimal_action(s, g)), (s - g).abs()))
                .collect()
        })
        .collect();
    JointTable::from_states(states)
}

/// Representation ids of `phi` in [`line_joint_table`] order.
pub fn line_rep_ids(cfg: &LineConfig, phi: LinePhi) -> Vec<u32> {
    let mut ids = Vec::new();
    for s in cfg.states() {
        for g in cfg.states().filter(|&g| g != s) {
            ids.push((phi.encode(s, g) + 2 * cfg.radius) as u32);
        }
    }
    ids
}

pub fn line_info_report(cfg: &LineConfig, phi: LinePhi) -> Result<InfoAnalysis> {
    analyze_joint(&line_joint_table(cfg)?, &line_rep_ids(cfg, phi))
}

/// A state where `phi_dist` gives the two neighbours the same code while
/// their optimal actions differ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Collision {
    pub state: i64,
    pub code: i64,
    pub action_left: usize,
    pub action_right: usize,
}

/// Collisions at every state with both neighbours in the window.
pub fn dist_collisions(cfg: &LineConfig) -> Vec<Collision> {
    cfg.states()
        .filter(|s| (s - 1).abs() <= cfg.radius && (s + 1).abs() <= cfg.radius)
        .filter(|&s| phi_dist(s, s - 1) == phi_dist(s, s + 1))
        .filter(|&s| optimal_action(s, s - 1) != optimal_action(s, s + 1))
        .map(|s| Collision {
            state: s,
            code: phi_dist(s, s + 1),
            action_left: optimal_action(s, s - 1),
            action_right: optimal_action(s, s + 1),
        })
        .collect()
}
