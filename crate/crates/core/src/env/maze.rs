//! Grid maze with a noisy red cell.
//!
//! Coordinates: `x` grows left to right, `y` grows bottom to top. The state id of
//! cell `(x, y)` is `y * width + x`, walls included, so feature tables have
//! `width * height` rows.

use super::{Environment, Outcome, Reward, Trajectory, Transition};
use crate::error::{Error, Result};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
}

impl Move {
    pub const ALL: [Move; 4] = [Move::Up, Move::Down, Move::Left, Move::Right];

    pub fn from_id(id: usize) -> Option<Move> {
        Self::ALL.get(id).copied()
    }

    pub fn id(self) -> usize {
        self as usize
    }

    fn delta(self) -> (i32, i32) {
        match self {
            Move::Up => (0, 1),
            Move::Down => (0, -1),
            Move::Left => (-1, 0),
            Move::Right => (1, 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MazeSpec {
    pub width: i32,
    pub height: i32,
    pub walls: BTreeSet<Cell>,
    pub start: Cell,
    pub goal: Cell,
    pub red: Cell,
    pub step_reward: f64,
    /// Replaces the step reward on the move that enters the goal.
    pub goal_reward: f64,
    pub red_noise_scale: f64,
    pub max_episode_len: usize,
    pub discount: f64,
}

/// Default layout: a one-cell-wide ring around a 4x4 block of walls.
///
/// The short route (9 steps) runs along the bottom row and up the right column
/// through red; the long route (11 steps) climbs the left column and crosses the
/// top row. The routes split at the start cell.
const RING: &str = "\
......
.####G
.####.
.####R
.####.
S.....";

/// Alternative layout with a central corridor: red route 7 steps, safe route 11.
const CENTRAL_CORRIDOR: &str = "\
.#G...
.#.#..
.#.#..
.#R#..
.#.#..
S.....";

impl MazeSpec {
    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && c.x < self.width && c.y < self.height
    }

    pub fn is_wall(&self, c: Cell) -> bool {
        self.walls.contains(&c)
    }

    pub fn is_open(&self, c: Cell) -> bool {
        self.in_bounds(c) && !self.is_wall(c)
    }

    pub fn num_cells(&self) -> usize {
        (self.width * self.height) as usize
    }

    pub fn state_id(&self, c: Cell) -> usize {
        (c.y * self.width + c.x) as usize
    }

    pub fn cell(&self, state: usize) -> Option<Cell> {
        if state >= self.num_cells() {
            return None;
        }
        let w = self.width as usize;
        Some(Cell::new((state % w) as i32, (state / w) as i32))
    }

    /// Cell reached by `mv`; blocked moves stay in place.
    pub fn next_cell(&self, from: Cell, mv: Move) -> Cell {
        let (dx, dy) = mv.delta();
        let to = Cell::new(from.x + dx, from.y + dy);
        if self.is_open(to) {
            to
        } else {
            from
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width <= 0 || self.height <= 0 {
            return Err(Error::contract("maze dimensions must be positive"));
        }
        for (name, c) in [("start", self.start), ("goal", self.goal), ("red", self.red)] {
            if !self.in_bounds(c) {
                return Err(Error::contract(format!("{name} {c} is out of bounds")));
            }
            if self.is_wall(c) {
                return Err(Error::contract(format!("{name} {c} is a wall")));
            }
        }
        if self.start == self.goal || self.start == self.red || self.goal == self.red {
            return Err(Error::contract("start, goal and red must be distinct"));
        }
        if self.max_episode_len == 0 {
            return Err(Error::contract("max_episode_len must be positive"));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(Error::contract("discount must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Parse an ASCII map (rows top to bottom: `#` wall, `S` start, `G` goal,
    /// `R` red, `.` free) with the default reward settings.
    pub fn from_ascii(map: &str) -> Result<Self> {
        let rows: Vec<&str> = map.lines().map(str::trim_end).filter(|l| !l.is_empty()).collect();
        if rows.is_empty() {
            return Err(Error::contract("empty maze map"));
        }
        let height = rows.len() as i32;
        let width = rows[0].chars().count() as i32;
        let mut walls = BTreeSet::new();
        let (mut start, mut goal, mut red) = (None, None, None);
        for (row, line) in rows.iter().enumerate() {
            if line.chars().count() as i32 != width {
                return Err(Error::contract(format!("map row {row} has the wrong width")));
            }
            let y = height - 1 - row as i32;
            for (x, ch) in line.chars().enumerate() {
                let c = Cell::new(x as i32, y);
                let slot = match ch {
                    '#' => {
                        walls.insert(c);
                        continue;
                    }
                    '.' => continue,
                    'S' => &mut start,
                    'G' => &mut goal,
                    'R' => &mut red,
                    other => {
                        return Err(Error::contract(format!("unknown map character {other:?}")))
                    }
                };
                if slot.replace(c).is_some() {
                    return Err(Error::contract(format!("map marker {ch} appears twice")));
                }
            }
        }
        let missing = |name: &str| Error::contract(format!("map has no {name} marker"));
        let spec = MazeSpec {
            width,
            height,
            walls,
            start: start.ok_or_else(|| missing("S"))?,
            goal: goal.ok_or_else(|| missing("G"))?,
            red: red.ok_or_else(|| missing("R"))?,
            step_reward: -1.0,
            goal_reward: 10.0,
            red_noise_scale: 30.0,
            max_episode_len: 100,
            discount: 0.999,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_ascii(&self) -> String {
        let mut out = String::new();
        for y in (0..self.height).rev() {
            for x in 0..self.width {
                let c = Cell::new(x, y);
                out.push(if self.is_wall(c) {
                    '#'
                } else if c == self.start {
                    'S'
                } else if c == self.goal {
                    'G'
                } else if c == self.red {
                    'R'
                } else {
                    '.'
                });
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Maze {
    spec: MazeSpec,
}

impl Maze {
    pub fn new(spec: MazeSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec })
    }

    /// The benchmark layout (see the ring map above).
    pub fn canonical() -> Self {
        Self::new(MazeSpec::from_ascii(RING).expect("built-in map")).expect("built-in map")
    }

    pub fn central_corridor() -> Self {
        Self::new(MazeSpec::from_ascii(CENTRAL_CORRIDOR).expect("built-in map"))
            .expect("built-in map")
    }

    pub fn spec(&self) -> &MazeSpec {
        &self.spec
    }

    fn checked_cell(&self, state: usize) -> Result<Cell> {
        let cell = self
            .spec
            .cell(state)
            .ok_or_else(|| Error::contract(format!("state {state} is out of bounds")))?;
        if self.spec.is_wall(cell) {
            return Err(Error::contract(format!("state {state} {cell} is a wall")));
        }
        if cell == self.spec.goal {
            return Err(Error::contract(format!("state {state} is terminal")));
        }
        Ok(cell)
    }

    /// One step with the red-cell noise `z` supplied by the caller.
    pub fn step_with_noise(&self, state: usize, action: usize, z: f64) -> Result<Transition> {
        let outcome = self.outcomes(state, action)?[0];
        let reward = match outcome.reward {
            Reward::Fixed(r) => r,
            Reward::Gaussian { mean, scale } => mean + scale * z,
        };
        Ok(Transition {
            state,
            action,
            reward,
            next_state: outcome.next,
            done: self.is_terminal(outcome.next),
            truncated: false,
        })
    }
}

impl Environment for Maze {
    fn num_states(&self) -> usize {
        self.spec.num_cells()
    }

    fn num_actions(&self) -> usize {
        Move::ALL.len()
    }

    fn initial_state(&self) -> usize {
        self.spec.state_id(self.spec.start)
    }

    fn discount(&self) -> f64 {
        self.spec.discount
    }

    fn max_episode_len(&self) -> usize {
        self.spec.max_episode_len
    }

    fn is_terminal(&self, state: usize) -> bool {
        state == self.spec.state_id(self.spec.goal)
    }

    fn is_valid_state(&self, state: usize) -> bool {
        self.spec.cell(state).is_some_and(|c| !self.spec.is_wall(c))
    }

    fn outcomes(&self, state: usize, action: usize) -> Result<Vec<Outcome>> {
        let cell = self.checked_cell(state)?;
        let mv = Move::from_id(action)
            .ok_or_else(|| Error::contract(format!("unknown maze action {action}")))?;
        let next = self.spec.next_cell(cell, mv);
        let reward = if next == self.spec.goal {
            Reward::Fixed(self.spec.goal_reward)
        } else if next == self.spec.red {
            Reward::Gaussian {
                mean: self.spec.step_reward,
                scale: self.spec.red_noise_scale,
            }
        } else {
            Reward::Fixed(self.spec.step_reward)
        };
        Ok(vec![Outcome {
            prob: 1.0,
            next: self.spec.state_id(next),
            reward,
        }])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PathClass {
    /// Reached the goal without touching red in at most 14 steps.
    RiskAverseLong,
    /// Reached the goal after visiting red.
    RedShort,
    Other,
}

/// Longest goal-reaching red-free episode still counted as the risk-averse route.
pub const RISK_AVERSE_MAX_LEN: usize = 14;

pub fn classify_path(traj: &Trajectory, maze: &MazeSpec) -> PathClass {
    let goal = maze.state_id(maze.goal);
    let red = maze.state_id(maze.red);
    let reached = traj.last_state() == Some(goal);
    if !reached {
        return PathClass::Other;
    }
    if traj.visits(red) {
        PathClass::RedShort
    } else if traj.len() <= RISK_AVERSE_MAX_LEN {
        PathClass::RiskAverseLong
    } else {
        PathClass::Other
    }
}
