//! File encryption, reports and test vectors on top of `elastic-core`.

pub mod commands;
pub mod container;
pub mod vectors;
