//! Inference and certification of quantified inductive invariants for
//! finite instances of parameterized protocols.

pub mod certify;
pub mod converge;
pub mod frontend;
pub mod grounder;
pub mod hierarchy;
pub mod ic3;
pub mod ir;
pub mod range;
pub mod smt;
pub mod symmetry;
