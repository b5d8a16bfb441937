//! Generalized Einstein kinetics for the bosonic reaction `aφ ⇌ a + φ` in an
//! ideal cavity: mode counting for massless and massive bosons, Bose-Einstein
//! spectral densities, transition probabilities and coefficients (including
//! the matter-wave coefficient `C`), and deterministic/stochastic evolution
//! of mode occupations.

// `!(x > 0.0)` is how NaN gets rejected alongside the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod interaction;
pub mod kinetics;
pub mod physics;
pub mod statistics;

pub use error::{Error, Result};
