//! Acceptance suite; everything lives in `tests/acceptance.rs`.
//!
//! ```text
//! cargo test -p cavity-kinetics-validation --test acceptance
//! ```
