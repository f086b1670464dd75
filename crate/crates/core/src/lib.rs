//! Exact counting of 2×2 integer matrices with entries bounded by `H` in
//! absolute value and prescribed determinant, together with the arithmetic
//! machinery used to compare those counts with their asymptotic main terms.
//!
//! Module map:
//!
//! * [`arith`] — gcd, divisors, τ, σ, φ, μ and their sieves.
//! * [`divisor_tables`] — the restricted divisor function τ_N, its moments,
//!   shifted convolutions and the signed product counter.
//! * [`exact_count`] — naive and fast counters, sign classes, decomposition.
//! * [`hyperbola`] — points on `uv ≡ K (mod q)` in boxes and under curves.
//! * [`casework`] — per-`(a, c)` solution counts and their region sums.
//! * [`lemmas`] — gcd/totient summation identities.
//! * [`asymptotics`] — main terms, reports and log-log fits.
//! * [`sweep`] — parameter sweeps with CSV/JSON output, driven by the CLI.

pub mod arith;
pub mod asymptotics;
pub mod casework;
pub mod divisor_tables;
pub mod error;
pub mod exact_count;
pub mod format;
pub mod hyperbola;
pub mod lemmas;
pub mod sweep;

pub use error::{Error, Result};

/// Exact non-negative count. Counting arithmetic is carried out in 128 bits
/// with checked operations.
pub type Count = u128;

/// Resource limits shared by every table-building operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    /// Maximum number of table cells a single operation may allocate.
    pub max_cells: u128,
    /// Maximum number of matrices a naive enumeration may visit.
    pub max_enumeration: u128,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_cells: 200_000_000,
            max_enumeration: 10_000_000_000,
        }
    }
}

impl Budget {
    pub fn check(&self, what: &'static str, cells: u128) -> Result<()> {
        if cells > self.max_cells {
            Err(Error::Budget {
                what,
                needed: cells,
                budget: self.max_cells,
            })
        } else {
            Ok(())
        }
    }

    pub fn check_enumeration(&self, what: &'static str, visits: u128) -> Result<()> {
        if visits > self.max_enumeration {
            Err(Error::Budget {
                what,
                needed: visits,
                budget: self.max_enumeration,
            })
        } else {
            Ok(())
        }
    }
}

/// 6/π², the density of coprime pairs.
pub const SIX_OVER_PI_SQ: f64 = 6.0 / (std::f64::consts::PI * std::f64::consts::PI);
