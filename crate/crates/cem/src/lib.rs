//! Contextual evaluation model and the V5 point machine.

pub mod core;
pub mod corpus;
pub mod engine;
pub mod interpreter;
pub mod motivation;
pub mod patterns;
