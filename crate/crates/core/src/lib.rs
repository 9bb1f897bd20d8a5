//! Convolutional codes over prime fields, decoded by receding horizon.
//!
//! A convolutional code is handled as a minimal linear system `(A, B, C, D)`
//! over `GF(p)`. Each codeword symbol stacks the system output on top of the
//! input, `c_t = (y_t; u_t)`. The crate provides:
//!
//! * [`gf_linalg`]: exact field, matrix and polynomial-matrix arithmetic,
//! * [`conv_system`]: encoding, codeword membership, zero-return steering and
//!   realization checks,
//! * [`block_code`]: the window block codes `C_N`, syndrome-table decoding with
//!   tie counts, and the distance, covering-radius and density analysis,
//! * [`decoders`]: the receding-horizon decoder and the exact trellis decoder
//!   used as its optimality reference,
//! * [`channel_sim`]: seeded noise injection and the Monte Carlo harness,
//! * [`cli`]: file formats and the command implementations behind `rhcode`.

pub mod block_code;
pub mod channel_sim;
pub mod cli;
pub mod conv_system;
pub mod decoders;
mod error;
pub mod gf_linalg;

pub use error::{Error, Result};

/// Default cap on the number of objects any exhaustive enumeration may visit.
pub const DEFAULT_BUDGET: u64 = 1 << 24;

/// Limits for exhaustive enumerations (codewords, syndromes, trellis states).
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Budget {
    pub max_enumeration: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_enumeration: DEFAULT_BUDGET,
        }
    }
}

impl Budget {
    pub fn new(max_enumeration: u64) -> Self {
        Self { max_enumeration }
    }

    /// Fails with [`Error::BudgetExceeded`] when `needed` is over the cap.
    pub fn check(&self, what: &'static str, needed: u128) -> Result<()> {
        if needed > self.max_enumeration as u128 {
            Err(Error::BudgetExceeded {
                what,
                needed,
                budget: self.max_enumeration,
            })
        } else {
            Ok(())
        }
    }
}

/// `base^exp` without overflow, saturating at `u128::MAX`.
pub(crate) fn checked_pow(base: u64, exp: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u128);
    }
    acc
}
