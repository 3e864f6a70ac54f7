//! Direct simulator for elementary cellular automata on a circular row.
//!
//! A neighborhood `(left, center, right)` selects bit `4*left + 2*center + right`
//! of the rule number (Wolfram numbering).

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RowError {
    #[error("a row needs at least one cell")]
    Empty,
    #[error("`{0}` is not a cell; use 0 or 1")]
    BadCell(char),
}

/// One of the 256 elementary rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RuleNumber(u8);

impl RuleNumber {
    pub const fn new(value: u8) -> Self {
        Self(value)
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = RuleNumber> {
        (0..=255u8).map(RuleNumber)
    }

    /// Next state for a neighborhood.
    pub fn outcome(self, left: bool, center: bool, right: bool) -> bool {
        let idx = (left as u8) << 2 | (center as u8) << 1 | right as u8;
        self.0 >> idx & 1 == 1
    }

    /// The rule obtained by swapping left and right neighbors.
    pub fn mirror(self) -> RuleNumber {
        let table = rule_table(self);
        let mut value = 0u8;
        for (idx, &out) in table.iter().enumerate() {
            let (l, c, r) = (idx >> 2 & 1, idx >> 1 & 1, idx & 1);
            let swapped = r << 2 | c << 1 | l;
            value |= (out as u8) << swapped;
        }
        RuleNumber(value)
    }
}

impl From<u8> for RuleNumber {
    fn from(value: u8) -> Self {
        Self(value)
    }
}

impl fmt::Display for RuleNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Outcome for each neighborhood, indexed by `4*left + 2*center + right`.
pub fn rule_table(rule: RuleNumber) -> [bool; 8] {
    std::array::from_fn(|i| rule.0 >> i & 1 == 1)
}

/// A circular row of cells; `true` is on.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Row(Vec<bool>);

impl Row {
    pub fn new(cells: Vec<bool>) -> Result<Self, RowError> {
        if cells.is_empty() {
            return Err(RowError::Empty);
        }
        Ok(Self(cells))
    }

    /// All off, except the cell at `width / 2`.
    pub fn single_on(width: usize) -> Result<Self, RowError> {
        let mut cells = vec![false; width];
        *cells.get_mut(width / 2).ok_or(RowError::Empty)? = true;
        Ok(Self(cells))
    }

    pub fn random(width: usize, rng: &mut impl Rng) -> Result<Self, RowError> {
        Self::new((0..width).map(|_| rng.gen()).collect())
    }

    pub fn width(&self) -> usize {
        self.0.len()
    }

    pub fn cells(&self) -> &[bool] {
        &self.0
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    /// Shifts cells right by `k` positions (cell `i` moves to `i + k`).
    pub fn rotate(&self, k: usize) -> Row {
        let mut cells = self.0.clone();
        let w = cells.len();
        cells.rotate_right(k % w);
        Row(cells)
    }

    pub fn reversed(&self) -> Row {
        Row(self.0.iter().rev().copied().collect())
    }

    /// Index of the first differing cell, if any. Rows of different width
    /// differ at the shorter width.
    pub fn first_difference(&self, other: &Row) -> Option<usize> {
        if let Some(i) = self.0.iter().zip(&other.0).position(|(a, b)| a != b) {
            return Some(i);
        }
        (self.width() != other.width()).then(|| self.width().min(other.width()))
    }
}

impl FromStr for Row {
    type Err = RowError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let cells = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(RowError::BadCell(other)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Row::new(cells)
    }
}

impl fmt::Display for Row {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &c in &self.0 {
            f.write_str(if c { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// One synchronous update with wrap-around neighbors.
pub fn step_row(row: &Row, rule: RuleNumber) -> Row {
    let cells = &row.0;
    let w = cells.len();
    let next = (0..w)
        .map(|i| rule.outcome(cells[(i + w - 1) % w], cells[i], cells[(i + 1) % w]))
        .collect();
    Row(next)
}

/// `iterations + 1` rows, starting with `row`.
pub fn evolve(row: &Row, rule: RuleNumber, iterations: usize) -> Vec<Row> {
    let mut rows = Vec::with_capacity(iterations + 1);
    rows.push(row.clone());
    for _ in 0..iterations {
        let next = step_row(rows.last().expect("non-empty"), rule);
        rows.push(next);
    }
    rows
}
