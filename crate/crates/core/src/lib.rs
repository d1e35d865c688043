//! Exact arithmetic engine and verification suites for RTT algebras.
//!
//! The crate builds, from scratch and over exact rationals, the objects of
//! an RTT presentation of a doubled current algebra: truncated
//! iterated-Laurent series, Yang R-matrices and their normalized forms,
//! fusion idempotents on tensor powers, a normal-form engine for the
//! algebra itself, quantum-determinant and trace families, the classical
//! current-algebra limit, and vertex-operator structure maps. On top of the
//! library sit verification suites that machine-check the defining
//! identities; the `ycl` binary exposes them on the command line.

pub mod center;
pub mod coeff;
pub mod diffop;
pub mod error;
pub mod fusion;
pub mod loopalg;
pub mod poly;
pub mod rat;
pub mod series;
pub mod tensor;
pub mod ugl;
pub mod yangian;

pub use error::{Error, Result};
