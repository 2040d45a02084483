//! Schreier families of countable ordinal index, repeated averages, and exact
//! Schreier-space norms, with finite-horizon constructions built on top of them.
//!
//! Every family `S_xi` depends on the fundamental sequences fixed in [`ordinal`].
//! All arithmetic is exact (`BigRational`).

pub mod averages;
pub mod error;
pub mod families;
pub mod lp;
pub mod norms;
pub mod operators;
pub mod ordinal;
pub mod pairs;
pub mod par;
pub mod set;
pub mod stream;
pub mod vector;

use serde::{Deserialize, Serialize};

pub use error::{Error, Result};
pub use ordinal::{parse_ordinal, Ordinal};
pub use set::FiniteSet;
pub use stream::IndexStream;
pub use vector::{Q, RationalVector};

/// Resource limits shared by every bounded computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Caps {
    /// Largest support handled by the general norm and LP engines.
    pub support: usize,
    /// Largest horizon for enumerations over `[1, horizon]`.
    pub horizon: u64,
    /// Largest ground set for exhaustive set-partition oracles.
    pub brute_force: usize,
    /// Horizon used for empirical tail certificates.
    pub certificate: u64,
    /// Stream elements a single walk may visit, and work steps a single norm evaluation may spend.
    pub materialize: u64,
    /// Largest CNF nesting depth accepted from user input.
    pub cnf_depth: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { support: 24, horizon: 64, brute_force: 12, certificate: 14, materialize: 1 << 22, cnf_depth: 4 }
    }
}
