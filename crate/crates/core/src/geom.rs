//! Grid coordinates and headings.
//!
//! The world uses `x` growing east and `y` growing north. Patches tile the
//! plane on a lattice of side `P`; cell `(x, y)` lives in patch
//! `(floor(x / P), floor(y / P))`.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub struct Position {
    pub x: i64,
    pub y: i64,
}

impl Position {
    pub const ORIGIN: Position = Position { x: 0, y: 0 };

    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    pub fn chebyshev(self, other: Position) -> i64 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }

    pub fn squared_distance(self, other: Position) -> i64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn patch(self, patch_size: u32) -> PatchCoord {
        let p = patch_size as i64;
        PatchCoord::new(self.x.div_euclid(p), self.y.div_euclid(p))
    }
}

impl Add for Position {
    type Output = Position;
    fn add(self, rhs: Position) -> Position {
        Position::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Position {
    type Output = Position;
    fn sub(self, rhs: Position) -> Position {
        Position::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Coordinate on the patch lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PatchCoord {
    pub x: i64,
    pub y: i64,
}

impl PatchCoord {
    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    /// Lowest-coordinate cell of the patch.
    pub fn origin(self, patch_size: u32) -> Position {
        let p = patch_size as i64;
        Position::new(self.x * p, self.y * p)
    }

    pub fn offset(self, dx: i64, dy: i64) -> PatchCoord {
        PatchCoord::new(self.x + dx, self.y + dy)
    }

    /// The eight surrounding patches in row-major order.
    pub fn neighbors(self) -> impl Iterator<Item = PatchCoord> {
        (-1..=1)
            .flat_map(move |dy| (-1..=1).map(move |dx| (dx, dy)))
            .filter(|&(dx, dy)| dx != 0 || dy != 0)
            .map(move |(dx, dy)| self.offset(dx, dy))
    }

    pub fn contains(self, pos: Position, patch_size: u32) -> bool {
        pos.patch(patch_size) == self
    }
}

impl fmt::Display for PatchCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "N")]
    North,
    #[serde(rename = "E")]
    East,
    #[serde(rename = "S")]
    South,
    #[serde(rename = "W")]
    West,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::North, Direction::East, Direction::South, Direction::West];

    pub fn turn_left(self) -> Direction {
        match self {
            Direction::North => Direction::West,
            Direction::West => Direction::South,
            Direction::South => Direction::East,
            Direction::East => Direction::North,
        }
    }

    pub fn turn_right(self) -> Direction {
        match self {
            Direction::North => Direction::East,
            Direction::East => Direction::South,
            Direction::South => Direction::West,
            Direction::West => Direction::North,
        }
    }

    /// Unit step in the facing direction.
    pub fn forward(self) -> Position {
        match self {
            Direction::North => Position::new(0, 1),
            Direction::East => Position::new(1, 0),
            Direction::South => Position::new(0, -1),
            Direction::West => Position::new(-1, 0),
        }
    }

    /// Unit step to the agent's right.
    pub fn right(self) -> Position {
        self.turn_right().forward()
    }

    /// Heading angle in radians, counterclockwise from east.
    pub fn angle(self) -> f64 {
        use std::f64::consts::{FRAC_PI_2, PI};
        match self {
            Direction::East => 0.0,
            Direction::North => FRAC_PI_2,
            Direction::West => PI,
            Direction::South => -FRAC_PI_2,
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Direction::North => 0,
            Direction::East => 1,
            Direction::South => 2,
            Direction::West => 3,
        }
    }

    pub fn from_index(i: u8) -> Option<Direction> {
        Self::ALL.get(i as usize).copied()
    }
}

/// Maps an egocentric offset (forward, right) into world coordinates.
pub fn egocentric_to_world(dir: Direction, forward: i64, right: i64) -> Position {
    let f = dir.forward();
    let r = dir.right();
    Position::new(f.x * forward + r.x * right, f.y * forward + r.y * right)
}
