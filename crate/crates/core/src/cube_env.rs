//! The Discrete Cube gridworld.
//!
//! An `n × n` grid holds an agent and two cubes (red and blue). The agent moves
//! in four directions, picks up the cube it stands on and places the held cube
//! on its current cell. Dynamics are deterministic, so every table in this
//! crate is built by exact enumeration.
//!
//! States are enumerated in a canonical order: lexicographic on
//! `(gripper, agent, red, blue)` with `Gripper::None < Red < Blue`,
//! `CubeSlot::Held` before any floor cell, and cells ordered by `(x, y)`.
//! Goals are ordered by `(target, pos)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default grid side length.
pub const DEFAULT_GRID: u8 = 4;

/// Number of primitive actions.
pub const NUM_ACTIONS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridPos {
    pub x: u8,
    pub y: u8,
}

impl GridPos {
    pub const fn new(x: u8, y: u8) -> Self {
        Self { x, y }
    }

    pub fn in_bounds(self, n: u8) -> bool {
        self.x < n && self.y < n
    }

    pub fn manhattan(self, other: GridPos) -> i32 {
        (self.x as i32 - other.x as i32).abs() + (self.y as i32 - other.y as i32).abs()
    }

    /// Row-major cell index `x * n + y`.
    pub fn cell(self, n: u8) -> usize {
        self.x as usize * n as usize + self.y as usize
    }

    pub fn from_cell(cell: usize, n: u8) -> Self {
        Self::new((cell / n as usize) as u8, (cell % n as usize) as u8)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CubeId {
    Red,
    Blue,
}

impl CubeId {
    pub const ALL: [CubeId; 2] = [CubeId::Red, CubeId::Blue];

    pub fn other(self) -> CubeId {
        match self {
            CubeId::Red => CubeId::Blue,
            CubeId::Blue => CubeId::Red,
        }
    }
}

/// What the agent is holding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gripper {
    None,
    Red,
    Blue,
}

impl Gripper {
    pub fn holding(cube: CubeId) -> Gripper {
        match cube {
            CubeId::Red => Gripper::Red,
            CubeId::Blue => Gripper::Blue,
        }
    }

    pub fn held(self) -> Option<CubeId> {
        match self {
            Gripper::None => None,
            Gripper::Red => Some(CubeId::Red),
            Gripper::Blue => Some(CubeId::Blue),
        }
    }

    /// Small integer code used in representation tuples.
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// Location of one cube. A held cube travels with the agent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CubeSlot {
    Held,
    Floor(GridPos),
}

impl CubeSlot {
    pub fn floor(self) -> Option<GridPos> {
        match self {
            CubeSlot::Held => None,
            CubeSlot::Floor(p) => Some(p),
        }
    }
}

/// Environment state. Field order matches the canonical enumeration order,
/// so the derived `Ord` is the enumeration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CubeState {
    pub gripper: Gripper,
    pub agent: GridPos,
    pub red: CubeSlot,
    pub blue: CubeSlot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    Pick,
    Place,
}

impl Action {
    pub const ALL: [Action; NUM_ACTIONS] = [
        Action::Up,
        Action::Down,
        Action::Left,
        Action::Right,
        Action::Pick,
        Action::Place,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Action {
        Self::ALL[i]
    }
}

/// A goal: put `target` on `pos` and let go of it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Goal {
    pub target: CubeId,
    pub pos: GridPos,
}

/// Dense index into the canonical state enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateIndex(pub u32);

/// Dense index into the canonical goal enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GoalIndex(pub u32);

impl StateIndex {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl GoalIndex {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl CubeState {
    pub fn slot(&self, cube: CubeId) -> CubeSlot {
        match cube {
            CubeId::Red => self.red,
            CubeId::Blue => self.blue,
        }
    }

    fn slot_mut(&mut self, cube: CubeId) -> &mut CubeSlot {
        match cube {
            CubeId::Red => &mut self.red,
            CubeId::Blue => &mut self.blue,
        }
    }

    /// Cell occupied by `cube`; a held cube shares the agent's cell.
    pub fn cube_pos(&self, cube: CubeId) -> GridPos {
        self.slot(cube).floor().unwrap_or(self.agent)
    }

    /// Checks every structural invariant for grid side `n`.
    pub fn is_valid(&self, n: u8) -> bool {
        if !self.agent.in_bounds(n) {
            return false;
        }
        for cube in CubeId::ALL {
            let held = self.gripper == Gripper::holding(cube);
            match self.slot(cube) {
                CubeSlot::Held if !held => return false,
                CubeSlot::Floor(_) if held => return false,
                CubeSlot::Floor(p) if !p.in_bounds(n) => return false,
                _ => {}
            }
        }
        match (self.red, self.blue) {
            (CubeSlot::Held, CubeSlot::Held) => false,
            (CubeSlot::Floor(r), CubeSlot::Floor(b)) => r != b,
            _ => true,
        }
    }

    /// Deterministic transition. Movement is clipped at the border; failed
    /// manipulations leave the state unchanged.
    pub fn step(&self, action: Action, n: u8) -> CubeState {
        let mut next = *self;
        let a = self.agent;
        match action {
            Action::Up => next.agent.y = (a.y + 1).min(n - 1),
            Action::Down => next.agent.y = a.y.saturating_sub(1),
            Action::Left => next.agent.x = a.x.saturating_sub(1),
            Action::Right => next.agent.x = (a.x + 1).min(n - 1),
            Action::Pick => {
                if self.gripper == Gripper::None {
                    if let Some(cube) = CubeId::ALL
                        .into_iter()
                        .find(|&c| self.slot(c) == CubeSlot::Floor(a))
                    {
                        *next.slot_mut(cube) = CubeSlot::Held;
                        next.gripper = Gripper::holding(cube);
                    }
                }
            }
            Action::Place => {
                if let Some(held) = self.gripper.held() {
                    if self.slot(held.other()) != CubeSlot::Floor(a) {
                        *next.slot_mut(held) = CubeSlot::Floor(a);
                        next.gripper = Gripper::None;
                    }
                }
            }
        }
        next
    }

    /// Target cube on the goal cell and not held.
    pub fn is_success(&self, goal: &Goal) -> bool {
        self.slot(goal.target) == CubeSlot::Floor(goal.pos)
    }
}

/// Whether `(s, g)` survives the pair filter used for all information
/// quantities: with an empty gripper the two cubes and the goal cell are
/// mutually distinct; while holding, the agent, the floor cube and the goal
/// cell are mutually distinct.
pub fn passes_pair_filter(s: &CubeState, g: &Goal) -> bool {
    match s.gripper.held() {
        None => match (s.red, s.blue) {
            (CubeSlot::Floor(r), CubeSlot::Floor(b)) => r != b && r != g.pos && b != g.pos,
            _ => false,
        },
        Some(held) => match s.slot(held.other()) {
            CubeSlot::Floor(f) => s.agent != f && s.agent != g.pos && f != g.pos,
            CubeSlot::Held => false,
        },
    }
}

/// Filtered `(state, goal)` pairs stored state-major: the goals of state `s`
/// are `goals[offsets[s]..offsets[s + 1]]`, ascending.
#[derive(Clone, Debug)]
pub struct PairSet {
    offsets: Vec<usize>,
    goals: Vec<GoalIndex>,
}

impl PairSet {
    pub fn len(&self) -> usize {
        self.goals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.goals.is_empty()
    }

    pub fn num_states(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Pair-id range belonging to state `s`.
    pub fn range(&self, s: StateIndex) -> std::ops::Range<usize> {
        self.offsets[s.idx()]..self.offsets[s.idx() + 1]
    }

    pub fn goals_of(&self, s: StateIndex) -> &[GoalIndex] {
        &self.goals[self.range(s)]
    }

    pub fn goal(&self, pair: usize) -> GoalIndex {
        self.goals[pair]
    }

    /// All pairs in canonical (state-major, goal-ascending) order.
    pub fn iter(&self) -> impl Iterator<Item = (StateIndex, GoalIndex)> + '_ {
        (0..self.num_states()).flat_map(move |s| {
            let s = StateIndex(s as u32);
            self.goals_of(s).iter().map(move |&g| (s, g))
        })
    }
}

/// Enumerated Discrete Cube instance: states, goals, transition table and
/// filtered pairs. Immutable once built.
#[derive(Clone, Debug)]
pub struct CubeEnv {
    n: u8,
    states: Vec<CubeState>,
    lookup: Vec<u32>,
    goals: Vec<Goal>,
    next: Vec<StateIndex>,
    pairs: PairSet,
}

const NO_STATE: u32 = u32::MAX;

impl CubeEnv {
    pub fn new(n: u8) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidConfig(format!("grid size must be at least 2, got {n}")));
        }
        if n > 15 {
            return Err(Error::InvalidConfig(format!("grid size {n} is too large for exact tables")));
        }
        let states = enumerate_states(n)?;
        let mut lookup = vec![NO_STATE; raw_code_space(n)];
        for (i, s) in states.iter().enumerate() {
            lookup[raw_code(s, n)] = i as u32;
        }
        let cells = n as usize * n as usize;
        let goals: Vec<Goal> = CubeId::ALL
            .into_iter()
            .flat_map(|target| {
                (0..cells).map(move |c| Goal { target, pos: GridPos::from_cell(c, n) })
            })
            .collect();

        let mut next = Vec::with_capacity(states.len() * NUM_ACTIONS);
        for s in &states {
            for a in Action::ALL {
                let t = s.step(a, n);
                let code = lookup[raw_code(&t, n)];
                debug_assert_ne!(code, NO_STATE, "transition left the state set");
                next.push(StateIndex(code));
            }
        }

        let mut offsets = Vec::with_capacity(states.len() + 1);
        let mut pair_goals = Vec::new();
        offsets.push(0);
        for s in &states {
            for (gi, g) in goals.iter().enumerate() {
                if passes_pair_filter(s, g) {
                    pair_goals.push(GoalIndex(gi as u32));
                }
            }
            offsets.push(pair_goals.len());
        }

        Ok(Self {
            n,
            states,
            lookup,
            goals,
            next,
            pairs: PairSet { offsets, goals: pair_goals },
        })
    }

    pub fn grid_size(&self) -> u8 {
        self.n
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_goals(&self) -> usize {
        self.goals.len()
    }

    pub fn states(&self) -> &[CubeState] {
        &self.states
    }

    pub fn goals(&self) -> &[Goal] {
        &self.goals
    }

    pub fn state(&self, s: StateIndex) -> &CubeState {
        &self.states[s.idx()]
    }

    pub fn goal(&self, g: GoalIndex) -> &Goal {
        &self.goals[g.idx()]
    }

    pub fn index_of(&self, s: &CubeState) -> Option<StateIndex> {
        if !s.is_valid(self.n) {
            return None;
        }
        match self.lookup[raw_code(s, self.n)] {
            NO_STATE => None,
            i => Some(StateIndex(i)),
        }
    }

    pub fn goal_index(&self, g: &Goal) -> Option<GoalIndex> {
        if !g.pos.in_bounds(self.n) {
            return None;
        }
        let cells = self.n as usize * self.n as usize;
        let t = match g.target {
            CubeId::Red => 0,
            CubeId::Blue => 1,
        };
        Some(GoalIndex((t * cells + g.pos.cell(self.n)) as u32))
    }

    /// Successor index of `s` under `a`.
    pub fn next(&self, s: StateIndex, a: Action) -> StateIndex {
        self.next[s.idx() * NUM_ACTIONS + a.index()]
    }

    pub fn is_success(&self, s: StateIndex, g: GoalIndex) -> bool {
        self.state(s).is_success(self.goal(g))
    }

    pub fn pairs(&self) -> &PairSet {
        &self.pairs
    }

    /// Filtered pairs as a flat list in canonical order.
    pub fn valid_pairs(&self) -> Vec<(StateIndex, GoalIndex)> {
        self.pairs.iter().collect()
    }
}

/// Every invariant-satisfying state in canonical order.
pub fn enumerate_states(n: u8) -> Result<Vec<CubeState>> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("grid size must be at least 2, got {n}")));
    }
    let cells = n as usize * n as usize;
    let pos = |c: usize| GridPos::from_cell(c, n);
    let floor_slots = || (0..cells).map(|c| CubeSlot::Floor(GridPos::from_cell(c, n)));
    let mut out = Vec::new();
    for gripper in [Gripper::None, Gripper::Red, Gripper::Blue] {
        for a in 0..cells {
            let agent = pos(a);
            match gripper {
                Gripper::None => {
                    for red in floor_slots() {
                        for blue in floor_slots().filter(|&b| b != red) {
                            out.push(CubeState { gripper, agent, red, blue });
                        }
                    }
                }
                Gripper::Red => {
                    for blue in floor_slots() {
                        out.push(CubeState { gripper, agent, red: CubeSlot::Held, blue });
                    }
                }
                Gripper::Blue => {
                    for red in floor_slots() {
                        out.push(CubeState { gripper, agent, red, blue: CubeSlot::Held });
                    }
                }
            }
        }
    }
    debug_assert!(out.windows(2).all(|w| w[0] < w[1]));
    Ok(out)
}

fn raw_code_space(n: u8) -> usize {
    let cells = n as usize * n as usize;
    3 * cells * (cells + 1) * (cells + 1)
}

fn raw_code(s: &CubeState, n: u8) -> usize {
    let cells = n as usize * n as usize;
    let slot = |c: CubeSlot| match c {
        CubeSlot::Held => 0,
        CubeSlot::Floor(p) => 1 + p.cell(n),
    };
    ((s.gripper as usize * cells + s.agent.cell(n)) * (cells + 1) + slot(s.red)) * (cells + 1)
        + slot(s.blue)
}
