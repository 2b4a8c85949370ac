//! Exact and certified-numeric tools for coefficient sequences of powers of
//! series with non-negative coefficients.
//!
//! The crate has three layers:
//!
//! * exact arithmetic: truncated series, fast integer convolution, power
//!   tables, divisor-sum sequences, log-concavity and unimodality checks,
//!   coefficient decompositions and their residuals, and Nekrasov-Okounkov
//!   polynomials (all rational, no rounding anywhere);
//! * certified numerics: directed-rounding evaluation of series and their
//!   derivatives on the positive axis and on circles, saddle-point location,
//!   argument and modulus bound checks, and oscillatory quadrature with
//!   error enclosures (every reported number carries a rigorous radius);
//! * reporting: machine-readable verification reports, a coefficient-table
//!   cache, and the `lcpow` command-line interface.

pub mod cache;
pub mod cli;
pub mod decomposition;
pub mod error;
pub mod fastconv;
pub mod hiprec;
pub mod logconcavity;
pub mod nekrasov;
pub mod rat;
pub mod report;
pub mod saddle;
pub mod sequences;
pub mod series;
pub mod table;

pub use error::{Error, Result};
