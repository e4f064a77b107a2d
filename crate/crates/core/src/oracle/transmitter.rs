//! Transmitter arrays: cyclic binary schedules in which every row owns a
//! column where it is the only 1.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::NodeId;
use crate::rng::rng_for;
use crate::{Error, Result};

/// `rows[i][t]` says whether node `i` may transmit in rounds `t (mod m)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransmitterArray {
    rows: Vec<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransmitterVerdict {
    /// `witnesses[i]` is the first column isolating row `i`.
    Pass {
        witnesses: Vec<usize>,
    },
    Fail {
        row: usize,
    },
}

impl TransmitterVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, TransmitterVerdict::Pass { .. })
    }
}

impl TransmitterArray {
    pub fn new(rows: Vec<Vec<bool>>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::Oracle("transmitter array has no rows".into()));
        };
        let m = first.len();
        if m == 0 {
            return Err(Error::Oracle("transmitter array has no columns".into()));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != m) {
            return Err(Error::Oracle(format!("row {i} has length {} instead of {m}", rows[i].len())));
        }
        Ok(Self { rows })
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n).map(|i| (0..n).map(|j| i == j).collect()).collect();
        Self { rows }
    }

    pub fn node_count(&self) -> usize {
        self.rows.len()
    }

    pub fn length(&self) -> usize {
        self.rows[0].len()
    }

    pub fn bit(&self, row: usize, column: usize) -> bool {
        self.rows[row][column]
    }

    /// Nodes whose row has a 1 at column `round mod m`.
    pub fn permitted(&self, round: u64) -> Vec<NodeId> {
        let c = (round % self.length() as u64) as usize;
        (0..self.node_count()).filter(|&i| self.rows[i][c]).collect()
    }

    fn isolates(&self, row: usize, column: usize) -> bool {
        self.rows.iter().enumerate().all(|(j, r)| r[column] == (j == row))
    }

    pub fn verify(&self) -> TransmitterVerdict {
        let mut witnesses = Vec::with_capacity(self.node_count());
        for row in 0..self.node_count() {
            match (0..self.length()).find(|&c| self.isolates(row, c)) {
                Some(c) => witnesses.push(c),
                None => return TransmitterVerdict::Fail { row },
            }
        }
        TransmitterVerdict::Pass { witnesses }
    }

    /// Randomized greedy construction for `n <= 16` nodes.
    ///
    /// Random columns of density `1/n` are drawn; a column is kept when it
    /// isolates a row that has no witness yet, or as a filler while the filler
    /// budget (`n` columns) lasts. Fillers let several nodes share a round.
    pub fn greedy(n: usize, seed: u64) -> Result<Self> {
        if n == 0 || n > 16 {
            return Err(Error::Oracle(format!("greedy transmitter supports 1..=16 nodes, got {n}")));
        }
        let mut rng = rng_for(&[seed, n as u64, 0x7472]);
        let mut columns: Vec<Vec<bool>> = Vec::new();
        let mut covered = vec![false; n];
        let mut fillers = n;
        let mut draws = 0;
        while covered.iter().any(|c| !c) {
            draws += 1;
            let column: Vec<bool> = if draws > 64 * n {
                // drawing is taking too long; isolate the first uncovered row
                let row = covered.iter().position(|c| !c).expect("uncovered row");
                (0..n).map(|j| j == row).collect()
            } else {
                (0..n).map(|_| rng.gen_ratio(1, n as u32)).collect()
            };
            let ones: Vec<usize> = (0..n).filter(|&j| column[j]).collect();
            match ones.as_slice() {
                [row] if !covered[*row] => {
                    covered[*row] = true;
                    columns.push(column);
                }
                [] => {}
                _ if fillers > 0 => {
                    fillers -= 1;
                    columns.push(column);
                }
                _ => {}
            }
        }
        Ok(Self::from_columns(n, &columns))
    }

    /// A random array of exactly `length` columns that passes [`verify`].
    ///
    /// [`verify`]: TransmitterArray::verify
    pub fn random_with_length(n: usize, length: usize, seed: u64) -> Result<Self> {
        if n == 0 || length < n {
            return Err(Error::Oracle(format!("cannot isolate {n} rows in {length} columns")));
        }
        let mut rng = rng_for(&[seed, n as u64, length as u64, 0x726c]);
        let mut slots: Vec<usize> = (0..length).collect();
        slots.shuffle(&mut rng);
        let mut columns: Vec<Vec<bool>> = (0..length).map(|_| (0..n).map(|_| rng.gen_bool(0.5)).collect()).collect();
        for (row, &slot) in slots.iter().take(n).enumerate() {
            columns[slot] = (0..n).map(|j| j == row).collect();
        }
        Ok(Self::from_columns(n, &columns))
    }

    fn from_columns(n: usize, columns: &[Vec<bool>]) -> Self {
        let rows = (0..n).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
        Self { rows }
    }
}

impl fmt::Display for TransmitterArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.rows {
            let line: String = row.iter().map(|&b| if b { '1' } else { '0' }).collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// One row per line, `0`/`1` characters. Blank lines and `#` comments are
/// ignored.
impl FromStr for TransmitterArray {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in s.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    other => Err(Error::Oracle(format!("line {}: unexpected character {other:?}", lineno + 1))),
                })
                .collect::<Result<Vec<bool>>>()?;
            rows.push(row);
        }
        TransmitterArray::new(rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_passes_with_diagonal_witnesses() {
        for n in 1..6 {
            let v = TransmitterArray::identity(n).verify();
            assert_eq!(v, TransmitterVerdict::Pass { witnesses: (0..n).collect() });
        }
    }

    #[test]
    fn all_ones_fails_first_row() {
        let a: TransmitterArray = "11\n11\n".parse().unwrap();
        assert_eq!(a.verify(), TransmitterVerdict::Fail { row: 0 });
    }

    #[test]
    fn identity_permits_round_mod_n() {
        let a = TransmitterArray::identity(3);
        assert_eq!(a.permitted(4), vec![1]);
        assert_eq!(a.permitted(9), vec![0]);
    }

    #[test]
    fn parsing_round_trips_and_rejects_garbage() {
        let a = TransmitterArray::random_with_length(3, 11, 5).unwrap();
        let b: TransmitterArray = a.to_string().parse().unwrap();
        assert_eq!(a, b);
        assert!("10\n1\n".parse::<TransmitterArray>().is_err());
        assert!("1x\n".parse::<TransmitterArray>().is_err());
        assert!("# nothing\n\n".parse::<TransmitterArray>().is_err());
    }

    #[test]
    fn constructors_produce_valid_arrays() {
        for n in 1..=16 {
            for seed in 0..4 {
                assert!(TransmitterArray::greedy(n, seed).unwrap().verify().passed());
            }
        }
        assert!(TransmitterArray::greedy(17, 0).is_err());
        let a = TransmitterArray::random_with_length(3, 11, 1).unwrap();
        assert_eq!(a.length(), 11);
        assert!(a.verify().passed());
        assert!(TransmitterArray::random_with_length(4, 3, 1).is_err());
    }
}
