//! Linear substitution calculus: four evaluation strategies, eight abstract
//! machines implementing them, and a verifier that checks each machine step
//! against the calculus.

pub mod calculus;
pub mod distillery;
pub mod equivalence;
pub mod harness;
pub mod machines;
pub mod syntax;
