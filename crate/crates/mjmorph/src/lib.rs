//! Metamorphic testing toolkit for neural method-name predictors.
//!
//! The pipeline: parse programs in a small Java subset (MJ), generate
//! semantically equivalent variants through five source-to-source
//! transformations, prove the equivalence with a differential reference
//! interpreter, query a prediction model with both versions, and flag
//! predictions that change across equivalent programs.

pub mod campaign;
pub mod interp;
pub mod models;
pub mod oracle;
pub mod scope;
pub mod syntax;
pub mod transforms;
