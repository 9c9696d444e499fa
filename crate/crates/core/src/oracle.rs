//! Exact shortest-path oracle.
//!
//! For every goal a breadth-first search runs backward from the success
//! states over a precomputed predecessor graph. The result is the optimal
//! distance `D*(s, g)`, the optimal value `V* = -D*`, and the set of optimal
//! actions (those whose successor is exactly one step closer).

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::cube_env::{Action, CubeEnv, GoalIndex, StateIndex, NUM_ACTIONS};
use crate::error::{Error, Result};

/// Sentinel for a goal that cannot be reached from a state.
pub const UNREACHABLE: u16 = u16::MAX;

const CACHE_MAGIC: &[u8; 8] = b"ASLORACL";
const CACHE_VERSION: u32 = 1;

/// Distance and optimal-action tables, stored state-major (`s * goals + g`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleTables {
    grid: u8,
    num_states: usize,
    num_goals: usize,
    dist: Vec<u16>,
    masks: Vec<u8>,
}

/// Reverse transition graph in compressed sparse row form.
struct Predecessors {
    offsets: Vec<usize>,
    sources: Vec<u32>,
}

impl Predecessors {
    fn build(env: &CubeEnv) -> Self {
        let n = env.num_states();
        let mut edges: Vec<(u32, u32)> = Vec::with_capacity(n * NUM_ACTIONS);
        for s in 0..n {
            for a in Action::ALL {
                let t = env.next(StateIndex(s as u32), a);
                if t.idx() != s {
                    edges.push((t.0, s as u32));
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let mut offsets = vec![0usize; n + 1];
        for &(t, _) in &edges {
            offsets[t as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        Self { offsets, sources: edges.into_iter().map(|(_, s)| s).collect() }
    }

    fn of(&self, t: usize) -> &[u32] {
        &self.sources[self.offsets[t]..self.offsets[t + 1]]
    }
}

fn bfs_from_goal(env: &CubeEnv, preds: &Predecessors, g: GoalIndex) -> Vec<u16> {
    let n = env.num_states();
    let mut dist = vec![UNREACHABLE; n];
    let mut frontier: Vec<u32> = (0..n as u32)
        .filter(|&s| env.is_success(StateIndex(s), g))
        .collect();
    for &s in &frontier {
        dist[s as usize] = 0;
    }
    let mut depth: u16 = 0;
    while !frontier.is_empty() {
        depth += 1;
        let mut next = Vec::new();
        for &t in &frontier {
            for &s in preds.of(t as usize) {
                if dist[s as usize] == UNREACHABLE {
                    dist[s as usize] = depth;
                    next.push(s);
                }
            }
        }
        next.sort_unstable();
        frontier = next;
    }
    dist
}

/// Builds the oracle with one backward BFS per goal.
pub fn compute_oracle(env: &CubeEnv) -> OracleTables {
    let preds = Predecessors::build(env);
    let ns = env.num_states();
    let ng = env.num_goals();
    let columns: Vec<Vec<u16>> = (0..ng)
        .into_par_iter()
        .map(|g| bfs_from_goal(env, &preds, GoalIndex(g as u32)))
        .collect();

    let mut dist = vec![UNREACHABLE; ns * ng];
    for (g, col) in columns.iter().enumerate() {
        for (s, &d) in col.iter().enumerate() {
            dist[s * ng + g] = d;
        }
    }

    let mut masks = vec![0u8; ns * ng];
    for s in 0..ns {
        for g in 0..ng {
            let d = dist[s * ng + g];
            if d == 0 || d == UNREACHABLE {
                continue;
            }
            let mut mask = 0u8;
            for a in Action::ALL {
                let t = env.next(StateIndex(s as u32), a).idx();
                if dist[t * ng + g] == d - 1 {
                    mask |= 1 << a.index();
                }
            }
            masks[s * ng + g] = mask;
        }
    }

    OracleTables { grid: env.grid_size(), num_states: ns, num_goals: ng, dist, masks }
}

impl OracleTables {
    pub fn grid_size(&self) -> u8 {
        self.grid
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_goals(&self) -> usize {
        self.num_goals
    }

    fn at(&self, s: StateIndex, g: GoalIndex) -> usize {
        s.idx() * self.num_goals + g.idx()
    }

    /// `D*(s, g)`, or `None` when the goal is unreachable.
    pub fn dist(&self, s: StateIndex, g: GoalIndex) -> Option<u16> {
        match self.dist[self.at(s, g)] {
            UNREACHABLE => None,
            d => Some(d),
        }
    }

    /// Raw distance entry; `UNREACHABLE` marks missing paths.
    pub fn raw_dist(&self, s: StateIndex, g: GoalIndex) -> u16 {
        self.dist[self.at(s, g)]
    }

    /// `V*(s, g) = -D*(s, g)`.
    pub fn value(&self, s: StateIndex, g: GoalIndex) -> Result<i32> {
        self.dist(s, g)
            .map(|d| -(d as i32))
            .ok_or_else(|| Error::Unreachable { state: s.idx(), goal: g.idx() })
    }

    /// Bit `a` is set iff action `a` is optimal. Zero at success states and
    /// for unreachable pairs.
    pub fn optimal_mask(&self, s: StateIndex, g: GoalIndex) -> u8 {
        self.masks[self.at(s, g)]
    }

    /// Optimal actions with uniform tie-breaking.
    pub fn optimal_policy(&self, s: StateIndex, g: GoalIndex) -> Result<[f64; NUM_ACTIONS]> {
        match self.dist(s, g) {
            None => Err(Error::Unreachable { state: s.idx(), goal: g.idx() }),
            Some(0) => Err(Error::SuccessState { state: s.idx(), goal: g.idx() }),
            Some(_) => Ok(mask_to_distribution(self.optimal_mask(s, g))),
        }
    }

    pub fn max_finite_dist(&self) -> u16 {
        self.dist.iter().copied().filter(|&d| d != UNREACHABLE).max().unwrap_or(0)
    }

    /// Number of `(s, g)` entries that break the Bellman optimality equations:
    /// zero distance exactly at success states, otherwise one more than the
    /// best successor, with the mask holding exactly the minimising actions.
    pub fn bellman_violations(&self, env: &CubeEnv) -> usize {
        let mut bad = 0;
        for si in 0..self.num_states {
            let s = StateIndex(si as u32);
            for gi in 0..self.num_goals {
                let g = GoalIndex(gi as u32);
                let d = self.raw_dist(s, g);
                if env.is_success(s, g) {
                    bad += usize::from(d != 0 || self.optimal_mask(s, g) != 0);
                    continue;
                }
                let succ: Vec<u16> =
                    Action::ALL.iter().map(|&a| self.raw_dist(env.next(s, a), g)).collect();
                let best = succ.iter().copied().min().unwrap_or(UNREACHABLE);
                if best == UNREACHABLE {
                    bad += usize::from(d != UNREACHABLE);
                    continue;
                }
                let mask = succ
                    .iter()
                    .enumerate()
                    .filter(|&(_, &x)| x == best)
                    .fold(0u8, |m, (a, _)| m | (1 << a));
                bad += usize::from(d != best + 1 || self.optimal_mask(s, g) != mask);
            }
        }
        bad
    }

    /// Overwrites one distance entry. Used to check that verification
    /// notices a corrupted table.
    #[doc(hidden)]
    pub fn corrupt_distance(&mut self, s: StateIndex, g: GoalIndex, d: u16) {
        let i = self.at(s, g);
        self.dist[i] = d;
    }

    /// Number of filtered pairs whose goal is unreachable.
    pub fn unreachable_pairs(&self, env: &CubeEnv) -> usize {
        env.pairs().iter().filter(|&(s, g)| self.dist(s, g).is_none()).count()
    }

    /// Writes the binary cache: header `{magic, version, n, states, goals}`
    /// (little-endian `u32`s after the 8-byte magic), then the row-major
    /// distance table as `u16` and the action masks as bytes.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        w.write_all(CACHE_MAGIC)?;
        for v in [CACHE_VERSION, self.grid as u32, self.num_states as u32, self.num_goals as u32] {
            w.write_all(&v.to_le_bytes())?;
        }
        for d in &self.dist {
            w.write_all(&d.to_le_bytes())?;
        }
        w.write_all(&self.masks)?;
        w.flush()?;
        Ok(())
    }

    /// Reads a cache file and checks its header against `env`.
    pub fn load(path: &Path, env: &CubeEnv) -> Result<Self> {
        let mut r = BufReader::new(fs::File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(Error::CacheMismatch("bad magic".into()));
        }
        let mut header = [0u32; 4];
        for h in header.iter_mut() {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            *h = u32::from_le_bytes(b);
        }
        let expected =
            [CACHE_VERSION, env.grid_size() as u32, env.num_states() as u32, env.num_goals() as u32];
        if header != expected {
            return Err(Error::CacheMismatch(format!("header {header:?}, expected {expected:?}")));
        }
        let cells = env.num_states() * env.num_goals();
        let mut raw = vec![0u8; cells * 2];
        r.read_exact(&mut raw)?;
        let dist = raw.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect();
        let mut masks = vec![0u8; cells];
        r.read_exact(&mut masks)?;
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::CacheMismatch("trailing bytes".into()));
        }
        Ok(Self {
            grid: env.grid_size(),
            num_states: env.num_states(),
            num_goals: env.num_goals(),
            dist,
            masks,
        })
    }

    /// Loads `path` if its header matches, otherwise recomputes and rewrites it.
    pub fn load_or_compute(env: &CubeEnv, path: &Path) -> Result<Self> {
        match Self::load(path, env) {
            Ok(t) => Ok(t),
            Err(Error::Io(_)) | Err(Error::CacheMismatch(_)) => {
                let t = compute_oracle(env);
                t.save(path)?;
                Ok(t)
            }
            Err(e) => Err(e),
        }
    }
}

/// Uniform distribution over the set bits of `mask`.
pub fn mask_to_distribution(mask: u8) -> [f64; NUM_ACTIONS] {
    let k = mask.count_ones();
    let mut p = [0.0; NUM_ACTIONS];
    if k == 0 {
        return p;
    }
    let w = 1.0 / k as f64;
    for (a, slot) in p.iter_mut().enumerate() {
        if mask & (1 << a) != 0 {
            *slot = w;
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube_env::{CubeSlot, CubeState, Gripper};
    use std::collections::{HashMap, VecDeque};

    fn forward_dist(env: &CubeEnv, s: StateIndex, g: GoalIndex) -> Option<u16> {
        let n = env.grid_size();
        let goal = *env.goal(g);
        let start = *env.state(s);
        let mut seen: HashMap<CubeState, u16> = HashMap::new();
        let mut q = VecDeque::new();
        seen.insert(start, 0);
        q.push_back(start);
        while let Some(x) = q.pop_front() {
            let d = seen[&x];
            if x.is_success(&goal) {
                return Some(d);
            }
            for a in Action::ALL {
                let y = x.step(a, n);
                if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(y) {
                    e.insert(d + 1);
                    q.push_back(y);
                }
            }
        }
        None
    }

    #[test]
    fn small_grid_matches_forward_search() {
        let env = CubeEnv::new(2).unwrap();
        let t = compute_oracle(&env);
        for s in 0..env.num_states() {
            for g in 0..env.num_goals() {
                let (s, g) = (StateIndex(s as u32), GoalIndex(g as u32));
                assert_eq!(t.dist(s, g), forward_dist(&env, s, g), "pair {s:?} {g:?}");
            }
        }
    }

    #[test]
    fn bellman_and_zero_iff_success() {
        let env = CubeEnv::new(4).unwrap();
        let t = compute_oracle(&env);
        for s in 0..env.num_states() {
            let s = StateIndex(s as u32);
            for g in 0..env.num_goals() {
                let g = GoalIndex(g as u32);
                let d = t.dist(s, g).expect("every goal is reachable on 4x4");
                assert_eq!(d == 0, env.is_success(s, g));
                if d == 0 {
                    assert_eq!(t.optimal_mask(s, g), 0);
                    continue;
                }
                let best = Action::ALL
                    .iter()
                    .map(|&a| t.dist(env.next(s, a), g).unwrap())
                    .min()
                    .unwrap();
                assert_eq!(best, d - 1);
                let mask = t.optimal_mask(s, g);
                assert_ne!(mask, 0);
                for a in Action::ALL {
                    let on = mask & (1 << a.index()) != 0;
                    assert_eq!(on, t.dist(env.next(s, a), g).unwrap() == d - 1);
                }
            }
        }
    }

    #[test]
    fn additive_estimate_is_exact_with_empty_gripper_on_filtered_pairs() {
        let env = CubeEnv::new(4).unwrap();
        let t = compute_oracle(&env);
        for (s, g) in env.pairs().iter() {
            let st = env.state(s);
            if st.gripper != Gripper::None {
                continue;
            }
            let goal = env.goal(g);
            let target = st.cube_pos(goal.target);
            let d = st.agent.manhattan(target) + target.manhattan(goal.pos) + 2;
            assert_eq!(t.dist(s, g).unwrap() as i32, d);
        }
    }

    #[test]
    fn value_and_policy_accessors() {
        let env = CubeEnv::new(4).unwrap();
        let t = compute_oracle(&env);
        let s = env
            .index_of(&CubeState {
                gripper: Gripper::None,
                agent: crate::cube_env::GridPos::new(0, 0),
                red: CubeSlot::Floor(crate::cube_env::GridPos::new(3, 3)),
                blue: CubeSlot::Floor(crate::cube_env::GridPos::new(1, 1)),
            })
            .unwrap();
        let g = env
            .goal_index(&crate::cube_env::Goal {
                target: crate::cube_env::CubeId::Red,
                pos: crate::cube_env::GridPos::new(3, 3),
            })
            .unwrap();
        assert_eq!(t.value(s, g).unwrap(), 0);
        assert!(matches!(t.optimal_policy(s, g), Err(Error::SuccessState { .. })));

        for (s, g) in env.pairs().iter().take(2000) {
            let p = t.optimal_policy(s, g).unwrap();
            let total: f64 = p.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            let k = t.optimal_mask(s, g).count_ones() as f64;
            for (a, &pa) in p.iter().enumerate() {
                if pa > 0.0 {
                    assert_eq!(pa, 1.0 / k);
                    let next = env.next(s, Action::from_index(a));
                    assert_eq!(t.dist(next, g).unwrap() + 1, t.dist(s, g).unwrap());
                }
            }
        }
    }

    #[test]
    fn greedy_rollout_takes_exactly_dist_steps() {
        let env = CubeEnv::new(4).unwrap();
        let t = compute_oracle(&env);
        for (s, g) in env.pairs().iter().step_by(97) {
            let mut cur = s;
            let mut steps = 0u16;
            while !env.is_success(cur, g) {
                let mask = t.optimal_mask(cur, g);
                let a = mask.trailing_zeros() as usize;
                cur = env.next(cur, Action::from_index(a));
                steps += 1;
            }
            assert_eq!(steps, t.dist(s, g).unwrap());
        }
    }

    #[test]
    fn unreachable_value_errors() {
        let env = CubeEnv::new(2).unwrap();
        let mut t = compute_oracle(&env);
        t.dist[0] = UNREACHABLE;
        let e = t.value(StateIndex(0), GoalIndex(0)).unwrap_err();
        assert!(matches!(e, Error::Unreachable { .. }));
        assert!(matches!(
            t.optimal_policy(StateIndex(0), GoalIndex(0)),
            Err(Error::Unreachable { .. })
        ));
    }

    #[test]
    fn cache_round_trip_and_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("oracle.bin");
        let env2 = CubeEnv::new(2).unwrap();
        let t2 = OracleTables::load_or_compute(&env2, &path).unwrap();
        assert_eq!(OracleTables::load(&path, &env2).unwrap(), t2);

        let env3 = CubeEnv::new(3).unwrap();
        assert!(matches!(OracleTables::load(&path, &env3), Err(Error::CacheMismatch(_))));
        let t3 = OracleTables::load_or_compute(&env3, &path).unwrap();
        assert_eq!(t3, compute_oracle(&env3));
        assert_eq!(OracleTables::load(&path, &env3).unwrap(), t3);
    }

    #[test]
    fn everything_reachable_on_default_grid() {
        let env = CubeEnv::new(4).unwrap();
        let t = compute_oracle(&env);
        assert_eq!(t.unreachable_pairs(&env), 0);
    }
}
