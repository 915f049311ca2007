//! Diophantine approximation by perfect squares.
pub mod lattice;
pub mod strips;
pub mod measure;
pub mod wave;
