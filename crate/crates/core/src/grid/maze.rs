use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

/// Largest accepted maze side, to keep parsing of hostile input cheap.
const MAX_SIDE: usize = 4096;

/// Moves in primitive-action order: up, down, left, right.
pub const MOVES: [(i64, i64); 4] = [(0, -1), (0, 1), (-1, 0), (1, 0)];

/// Rectangular grid of walls and free cells with labelled goal cells.
///
/// Free cells are numbered row-major; that number is the state index used
/// by the environment and the tabular learners.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Maze {
    width: usize,
    height: usize,
    walls: Vec<bool>,
    goals: BTreeMap<char, (usize, usize)>,
    free: Vec<(usize, usize)>,
    index: Vec<Option<usize>>,
}

impl Maze {
    /// Builds a maze from a wall mask (`walls[y * width + x]`) and goal labels.
    pub fn new(
        width: usize,
        height: usize,
        walls: Vec<bool>,
        goals: BTreeMap<char, (usize, usize)>,
    ) -> Result<Self> {
        if width == 0 || height == 0 || walls.len() != width * height {
            return Err(Error::invalid("maze dimensions do not match the wall mask"));
        }
        let mut free = Vec::new();
        let mut index = vec![None; width * height];
        for y in 0..height {
            for x in 0..width {
                if !walls[y * width + x] {
                    index[y * width + x] = Some(free.len());
                    free.push((x, y));
                }
            }
        }
        if free.is_empty() {
            return Err(Error::invalid("maze has no free cell"));
        }
        for (label, &(x, y)) in &goals {
            if x >= width || y >= height || walls[y * width + x] {
                return Err(Error::invalid(format!("goal '{label}' is not on a free cell")));
            }
        }
        let maze = Self {
            width,
            height,
            walls,
            goals,
            free,
            index,
        };
        let reached = maze.distances_from(0).iter().filter(|d| d.is_some()).count();
        if reached != maze.free.len() {
            return Err(Error::invalid("free cells are not connected"));
        }
        Ok(maze)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn is_wall(&self, x: usize, y: usize) -> bool {
        x >= self.width || y >= self.height || self.walls[y * self.width + x]
    }

    pub fn num_free(&self) -> usize {
        self.free.len()
    }

    /// State index of a free cell.
    pub fn state_of(&self, x: usize, y: usize) -> Option<usize> {
        if x >= self.width || y >= self.height {
            return None;
        }
        self.index[y * self.width + x]
    }

    pub fn cell(&self, state: usize) -> (usize, usize) {
        self.free[state]
    }

    pub fn goals(&self) -> &BTreeMap<char, (usize, usize)> {
        &self.goals
    }

    pub fn goal(&self, label: char) -> Result<(usize, usize)> {
        self.goals
            .get(&label)
            .copied()
            .ok_or_else(|| Error::invalid(format!("maze has no goal '{label}'")))
    }

    /// Cell reached by moving in direction `action`; blocked moves stay put.
    pub fn neighbor(&self, state: usize, action: usize) -> usize {
        let (x, y) = self.free[state];
        let (dx, dy) = MOVES[action];
        let nx = x as i64 + dx;
        let ny = y as i64 + dy;
        if nx < 0 || ny < 0 {
            return state;
        }
        self.state_of(nx as usize, ny as usize).unwrap_or(state)
    }

    /// Breadth-first step distances from `state` to every free cell.
    pub fn distances_from(&self, state: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.free.len()];
        dist[state] = Some(0);
        let mut queue = VecDeque::from([state]);
        while let Some(s) = queue.pop_front() {
            let d = dist[s].expect("queued cells have a distance");
            for a in 0..MOVES.len() {
                let n = self.neighbor(s, a);
                if dist[n].is_none() {
                    dist[n] = Some(d + 1);
                    queue.push_back(n);
                }
            }
        }
        dist
    }

    /// Each cell becomes a `factor × factor` block; goals move to the block
    /// centre (or its upper-left middle for even factors).
    pub fn enlarge(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::invalid("enlargement factor must be positive"));
        }
        let (w, h) = (self.width * factor, self.height * factor);
        let walls = (0..w * h)
            .map(|k| self.walls[(k / w / factor) * self.width + (k % w) / factor])
            .collect();
        let goals = self
            .goals
            .iter()
            .map(|(l, &(x, y))| (*l, (x * factor + factor / 2, y * factor + factor / 2)))
            .collect();
        Self::new(w, h, walls, goals)
    }

    /// Nearest free cell to `(x, y)` by Manhattan distance; ties go to the
    /// lowest state index.
    pub fn nearest_free(&self, x: usize, y: usize) -> usize {
        if let Some(s) = self.state_of(x, y) {
            return s;
        }
        let mut best = (usize::MAX, 0);
        for (s, &(fx, fy)) in self.free.iter().enumerate() {
            let d = fx.abs_diff(x) + fy.abs_diff(y);
            if d < best.0 {
                best = (d, s);
            }
        }
        best.1
    }
}

/// Parses the ASCII maze format: `#` wall, `.` free, `1`–`4` source goals,
/// `a`/`b` target goals, one row per line.
pub fn parse_maze(text: &str) -> Result<Maze> {
    let rows: Vec<&str> = text
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .filter(|l| !l.is_empty())
        .collect();
    if rows.is_empty() {
        return Err(Error::parse(0, "empty maze"));
    }
    let width = rows[0].chars().count();
    if width > MAX_SIDE || rows.len() > MAX_SIDE {
        return Err(Error::parse(0, "maze too large"));
    }
    let mut walls = Vec::with_capacity(width * rows.len());
    let mut goals = BTreeMap::new();
    for (y, row) in rows.iter().enumerate() {
        let line = y + 1;
        if row.chars().count() != width {
            return Err(Error::parse(line, format!("row width differs from {width}")));
        }
        for (x, c) in row.chars().enumerate() {
            match c {
                '#' => walls.push(true),
                '.' => walls.push(false),
                '1'..='4' | 'a' | 'b' => {
                    if goals.insert(c, (x, y)).is_some() {
                        return Err(Error::parse(line, format!("goal '{c}' appears twice")));
                    }
                    walls.push(false);
                }
                other => return Err(Error::parse(line, format!("unexpected character {other:?}"))),
            }
        }
    }
    Maze::new(width, rows.len(), walls, goals)
}

impl fmt::Display for Maze {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: BTreeMap<(usize, usize), char> = self.goals.iter().map(|(l, c)| (*c, *l)).collect();
        for y in 0..self.height {
            for x in 0..self.width {
                let c = match labels.get(&(x, y)) {
                    Some(l) => *l,
                    None if self.is_wall(x, y) => '#',
                    None => '.',
                };
                write!(f, "{c}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// The shipped 17×17 multi-room maze.
pub fn shipped_maze() -> Maze {
    parse_maze(include_str!("../../data/maze17.txt")).expect("shipped maze is valid")
}
