//! Bounded woods-style grid worlds.
//!
//! Maps are ASCII grids over `.` (empty), `T` (tree) and `F` (food). The
//! border must be all trees, so every non-tree cell has eight in-grid
//! neighbours. Every empty cell is a start cell.

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::token::{Direction, PerceptKind};

/// A small maze whose free cells all have distinct percepts, so a purely
/// reactive controller can act optimally.
pub const MARKOV_7X5: &str = include_str!("../data/markov7x5.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Empty,
    Tree,
    Food,
}

impl Cell {
    fn from_char(c: char) -> Option<Cell> {
        match c {
            '.' => Some(Cell::Empty),
            'T' => Some(Cell::Tree),
            'F' => Some(Cell::Food),
            _ => None,
        }
    }

    fn to_char(self) -> char {
        match self {
            Cell::Empty => '.',
            Cell::Tree => 'T',
            Cell::Food => 'F',
        }
    }

    pub fn percept(self) -> PerceptKind {
        match self {
            Cell::Empty => PerceptKind::Empty,
            Cell::Tree => PerceptKind::Tree,
            Cell::Food => PerceptKind::Food,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position {
    pub row: usize,
    pub col: usize,
}

impl Position {
    pub fn new(row: usize, col: usize) -> Self {
        Position { row, col }
    }

    /// Neighbour in `dir`. Callers keep positions off the border.
    pub fn step(self, dir: Direction) -> Position {
        let (dr, dc) = dir.offset();
        Position {
            row: self.row.wrapping_add_signed(dr),
            col: self.col.wrapping_add_signed(dc),
        }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// What the agent sees in its eight neighbouring cells, indexed by [`Direction::index`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Percept(pub [PerceptKind; 8]);

impl Percept {
    pub fn get(&self, dir: Direction) -> PerceptKind {
        self.0[dir.index()]
    }
}

impl fmt::Display for Percept {
    /// Eight letters clockwise from N, e.g. `tttetttt`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|k| write!(f, "{}", k.letter()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgentState {
    pub position: Position,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Moved,
    Blocked,
    FoundFood,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Maze {
    name: Option<String>,
    width: usize,
    height: usize,
    cells: Vec<Cell>,
    start_cells: Vec<Position>,
}

impl Maze {
    pub fn load(path: impl AsRef<Path>) -> Result<Maze> {
        Maze::parse(&std::fs::read_to_string(path)?)
    }

    /// Parses a map. A leading `# name=<id>` line is accepted; other `#`
    /// lines and blank lines are skipped.
    pub fn parse(text: &str) -> Result<Maze> {
        let mut name = None;
        let mut rows: Vec<Vec<Cell>> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end();
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(n) = comment.trim().strip_prefix("name=") {
                    name = Some(n.trim().to_string());
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let row = line
                .chars()
                .map(|c| {
                    Cell::from_char(c).ok_or_else(|| {
                        Error::Maze(format!("line {}: unknown cell character `{c}`", i + 1))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if let Some(first) = rows.first() {
                if first.len() != row.len() {
                    return Err(Error::Maze(format!(
                        "line {}: row has {} cells, expected {}",
                        i + 1,
                        row.len(),
                        first.len()
                    )));
                }
            }
            rows.push(row);
        }
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if height < 3 || width < 3 {
            return Err(Error::Maze(format!("{width}x{height} grid is too small")));
        }
        let cells: Vec<Cell> = rows.into_iter().flatten().collect();
        Maze::from_cells(name, width, height, cells)
    }

    pub fn from_cells(
        name: Option<String>,
        width: usize,
        height: usize,
        cells: Vec<Cell>,
    ) -> Result<Maze> {
        if cells.len() != width * height {
            return Err(Error::Maze("cell count does not match dimensions".into()));
        }
        let at = |r: usize, c: usize| cells[r * width + c];
        for r in 0..height {
            for c in 0..width {
                let border = r == 0 || c == 0 || r + 1 == height || c + 1 == width;
                if border && at(r, c) != Cell::Tree {
                    return Err(Error::Maze(format!("border cell ({r},{c}) is not a tree")));
                }
            }
        }
        if !cells.contains(&Cell::Food) {
            return Err(Error::Maze("map has no food".into()));
        }
        let start_cells: Vec<Position> = (0..height)
            .flat_map(|r| (0..width).map(move |c| Position::new(r, c)))
            .filter(|p| at(p.row, p.col) == Cell::Empty)
            .collect();
        if start_cells.is_empty() {
            return Err(Error::Maze("map has no start cells".into()));
        }
        Ok(Maze {
            name,
            width,
            height,
            cells,
            start_cells,
        })
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell(&self, pos: Position) -> Cell {
        self.cells[pos.row * self.width + pos.col]
    }

    /// Row-major order.
    pub fn start_cells(&self) -> &[Position] {
        &self.start_cells
    }

    pub fn percept(&self, pos: Position) -> Percept {
        Percept(Direction::ALL.map(|d| self.cell(pos.step(d)).percept()))
    }

    pub fn step(&self, state: AgentState, dir: Direction) -> (AgentState, Outcome) {
        let target = state.position.step(dir);
        let steps = state.steps + 1;
        match self.cell(target) {
            Cell::Tree => (AgentState { steps, ..state }, Outcome::Blocked),
            Cell::Food => (
                AgentState {
                    position: target,
                    steps,
                },
                Outcome::FoundFood,
            ),
            Cell::Empty => (
                AgentState {
                    position: target,
                    steps,
                },
                Outcome::Moved,
            ),
        }
    }

    /// Shortest number of moves from every cell to the nearest food
    /// (8-connected, trees impassable). `None` for trees and unreachable cells.
    pub fn distances_to_food(&self) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.cells.len()];
        let mut queue = VecDeque::new();
        for (i, &c) in self.cells.iter().enumerate() {
            if c == Cell::Food {
                dist[i] = Some(0);
                queue.push_back(Position::new(i / self.width, i % self.width));
            }
        }
        while let Some(p) = queue.pop_front() {
            let d = dist[p.row * self.width + p.col].unwrap_or(0);
            for dir in Direction::ALL {
                let q = p.step(dir);
                let qi = q.row * self.width + q.col;
                if self.cells[qi] != Cell::Tree && dist[qi].is_none() {
                    dist[qi] = Some(d + 1);
                    queue.push_back(q);
                }
            }
        }
        dist
    }

    /// Shortest distance to food from each start cell, in start-cell order.
    pub fn oracle_steps(&self) -> Result<Vec<usize>> {
        let dist = self.distances_to_food();
        self.start_cells
            .iter()
            .map(|p| {
                dist[p.row * self.width + p.col].ok_or(Error::UnreachableFood {
                    row: p.row,
                    col: p.col,
                })
            })
            .collect()
    }

    /// Mean shortest-path length to food over the start cells, a lower bound
    /// for any controller's mean steps.
    pub fn oracle_mean_steps(&self) -> Result<f64> {
        let steps = self.oracle_steps()?;
        Ok(steps.iter().sum::<usize>() as f64 / steps.len() as f64)
    }

    /// Start cells grouped by identical percept; only groups of two or more
    /// cells are returned.
    pub fn aliased_cells(&self) -> Vec<Vec<Position>> {
        let mut groups: Vec<(Percept, Vec<Position>)> = Vec::new();
        for &p in &self.start_cells {
            let percept = self.percept(p);
            match groups.iter_mut().find(|(q, _)| *q == percept) {
                Some((_, g)) => g.push(p),
                None => groups.push((percept, vec![p])),
            }
        }
        groups
            .into_iter()
            .map(|(_, g)| g)
            .filter(|g| g.len() > 1)
            .collect()
    }
}

impl fmt::Display for Maze {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(name) = &self.name {
            writeln!(f, "# name={name}")?;
        }
        for row in self.cells.chunks(self.width) {
            let line: String = row.iter().map(|c| c.to_char()).collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn degenerate_maps_are_rejected() {
        assert!(matches!(Maze::parse("TTT\nTFT\nTTT"), Err(Error::Maze(m)) if m.contains("start")));
        assert!(matches!(Maze::parse("TTT\nT.T\nTTT"), Err(Error::Maze(m)) if m.contains("food")));
        assert!(matches!(Maze::parse("TTTT\nT.FT\nTTT"), Err(Error::Maze(m)) if m.contains("row")));
        assert!(matches!(Maze::parse("TTTT\nT.XT\nTTTT"), Err(Error::Maze(m)) if m.contains("`X`")));
        assert!(matches!(Maze::parse("TTTT\n..FT\nTTTT"), Err(Error::Maze(m)) if m.contains("border")));
    }

    #[test]
    fn single_start_cell() {
        let m = Maze::parse("# name=tiny\nTTTT\nT.FT\nTTTT\n").unwrap();
        assert_eq!(m.name(), Some("tiny"));
        assert_eq!(m.start_cells(), &[Position::new(1, 1)]);
        assert_eq!(m.percept(Position::new(1, 1)).get(Direction::E), PerceptKind::Food);
        assert_eq!(m.oracle_mean_steps().unwrap(), 1.0);
    }

    #[test]
    fn percepts() {
        let m = Maze::parse("TTTT\nT.FT\nTTTT").unwrap();
        let p = m.percept(Position::new(1, 1));
        assert_eq!(p.to_string(), "ttfttttt");
        let m = Maze::parse("TTTTT\nTT.TT\nT...T\nTTFTT\nTTTTT").unwrap();
        let p = m.percept(Position::new(1, 2));
        for d in [Direction::S, Direction::SE, Direction::SW] {
            assert_eq!(p.get(d), PerceptKind::Empty, "{d}");
        }
        for d in [Direction::N, Direction::NE, Direction::E, Direction::W, Direction::NW] {
            assert_eq!(p.get(d), PerceptKind::Tree, "{d}");
        }
        assert_eq!(m.percept(Position::new(2, 2)).get(Direction::S), PerceptKind::Food);
    }

    #[test]
    fn steps() {
        let m = Maze::parse("TTTTT\nT...T\nT.F.T\nT...T\nTTTTT").unwrap();
        let s = AgentState {
            position: Position::new(3, 1),
            steps: 4,
        };
        let (t, o) = m.step(s, Direction::W);
        assert_eq!((t.position, t.steps, o), (s.position, 5, Outcome::Blocked));
        let (t, o) = m.step(s, Direction::NE);
        assert_eq!((t.position, o), (Position::new(2, 2), Outcome::FoundFood));
        let (t, o) = m.step(s, Direction::N);
        assert_eq!((t.position, o), (Position::new(2, 1), Outcome::Moved));
        let (t, _) = m.step(AgentState { position: Position::new(3, 2), steps: 0 }, Direction::NE);
        assert_eq!(t.position, Position::new(2, 3));
    }

    #[test]
    fn corridor_oracle() {
        let m = Maze::parse("TTTTT\nT..FT\nTTTTT").unwrap();
        assert_eq!(m.oracle_steps().unwrap(), vec![2, 1]);
        assert_eq!(m.oracle_mean_steps().unwrap(), 1.5);
    }

    #[test]
    fn unreachable_food() {
        let m = Maze::parse("TTTTTT\nT.TTFT\nTTTTTT").unwrap();
        assert!(matches!(m.oracle_mean_steps(), Err(Error::UnreachableFood { row: 1, col: 1 })));
    }

    #[test]
    fn aliasing_is_detected() {
        let m = Maze::parse("TTTTTTT\nT....FT\nTTTTTTT").unwrap();
        assert_eq!(
            m.aliased_cells(),
            vec![vec![Position::new(1, 2), Position::new(1, 3)]]
        );
        let corridor = Maze::parse("TTTTT\nT..FT\nTTTTT").unwrap();
        assert!(corridor.aliased_cells().is_empty());
    }

    fn rotate(text: &str) -> String {
        let rows: Vec<Vec<char>> = text.lines().map(|l| l.chars().collect()).collect();
        let (h, w) = (rows.len(), rows[0].len());
        (0..w)
            .map(|c| (0..h).rev().map(|r| rows[r][c]).collect::<String>() + "\n")
            .collect()
    }

    fn mirror(text: &str) -> String {
        text.lines().map(|l| l.chars().rev().collect::<String>() + "\n").collect()
    }

    fn arb_maze() -> impl Strategy<Value = String> {
        (3usize..8, 3usize..8)
            .prop_flat_map(|(w, h)| {
                (
                    Just((w, h)),
                    prop::collection::vec(prop::sample::select(vec!['.', '.', '.', 'T']), w * h),
                    0..w * h,
                )
            })
            .prop_map(|((w, h), mut inner, food)| {
                inner[food] = 'F';
                let mut s = "T".repeat(w + 2) + "\n";
                for r in 0..h {
                    s.push('T');
                    s.extend(&inner[r * w..(r + 1) * w]);
                    s.push_str("T\n");
                }
                s + &"T".repeat(w + 2)
            })
    }

    proptest! {
        #[test]
        fn oracle_is_invariant_under_symmetry(text in arb_maze()) {
            let Ok(m) = Maze::parse(&text) else { return Ok(()) };
            let base = m.oracle_mean_steps().ok();
            let r = Maze::parse(&rotate(&text)).unwrap().oracle_mean_steps().ok();
            let f = Maze::parse(&mirror(&text)).unwrap().oracle_mean_steps().ok();
            prop_assert_eq!(base, r);
            prop_assert_eq!(base, f);
        }
    }
}
