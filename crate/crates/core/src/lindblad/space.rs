//! Two four-level ions and a truncated cavity mode.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ion level, in basis order (↑, ↓, e, e′).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    Up,
    Down,
    E,
    EPrime,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::Up, Level::Down, Level::E, Level::EPrime];

    pub fn index(self) -> usize {
        match self {
            Level::Up => 0,
            Level::Down => 1,
            Level::E => 2,
            Level::EPrime => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn is_excited(self) -> bool {
        matches!(self, Level::E | Level::EPrime)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IonLabel {
    A,
    B,
}

/// Product basis |a, b, n⟩ with flat index (a·4 + b)·(n_max+1) + n.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositeSpace {
    n_max: usize,
}

pub const ION_LEVELS: usize = 4;

impl CompositeSpace {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::Truncation(n_max));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn photon_states(&self) -> usize {
        self.n_max + 1
    }

    pub fn dim(&self) -> usize {
        ION_LEVELS * ION_LEVELS * self.photon_states()
    }

    pub fn index(&self, a: Level, b: Level, n: usize) -> usize {
        debug_assert!(n <= self.n_max);
        (a.index() * ION_LEVELS + b.index()) * self.photon_states() + n
    }

    pub fn decompose(&self, i: usize) -> (Level, Level, usize) {
        let nf = self.photon_states();
        let n = i % nf;
        let ab = i / nf;
        (
            Level::from_index(ab / ION_LEVELS).expect("index in range"),
            Level::from_index(ab % ION_LEVELS).expect("index in range"),
            n,
        )
    }

    pub fn check_dim(&self, got: usize) -> Result<()> {
        if got == self.dim() {
            Ok(())
        } else {
            Err(Error::Dimension {
                expected: self.dim(),
                got,
            })
        }
    }
}
