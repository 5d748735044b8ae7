//! Core library for a second-order sequent calculus with ordinal-indexed
//! comprehension, together with the ordinal notation system its proof theory
//! runs on.
//!
//! The crate is split along the natural layers of the problem:
//!
//! * [`ordinal`] — terms of the notation system (closed under `+`, `ω^·`,
//!   `Ω_·`, and collapsing `ψ_σ`), their canonical forms, the total
//!   comparison, and the hull membership tests that gate `ψ`-formation.
//! * [`order`] — checkable certificates for the "much less than" relation
//!   used to justify ordinal descent across proof transformations.
//! * [`index`] — stratification indices: formal maxima of shifted ordinal
//!   and variable atoms, with the measures and substitutions defined on them.
//! * [`formula`] — negation-normal second-order formulas with de Bruijn
//!   binding, classification, grades, and stratification measures.
//! * [`calculus`] — sequent proofs for the basic and indexed calculi,
//!   including well-formedness checks, height/ordinal assignments, and the
//!   side conditions on collapsing inferences.
//! * [`embed`] — the embedding of basic-calculus proofs into the indexed
//!   calculus, and extraction of plain first-order proofs at the far end.
//! * [`reduce`] — the cut-elimination engine: redex search, the individual
//!   reduction steps, and the fuel-bounded normalizer.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod calculus;
pub mod embed;
pub mod formula;
pub mod index;
pub mod order;
pub mod ordinal;
pub mod reduce;
