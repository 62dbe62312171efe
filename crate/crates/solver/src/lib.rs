//! A small incremental SMT-LIB2 solver for quantifier-free problems over
//! booleans and finite enumeration sorts, built on a CDCL SAT core.
//!
//! Usable in-process via [`Engine`], or over stdin/stdout through the
//! `qinv-smt` binary for clients that talk to an external solver process.

pub mod engine;
pub mod sexp;

pub use engine::Engine;
pub use sexp::{Reader, Sexp};
