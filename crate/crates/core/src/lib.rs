//! Hierarchical symbolic encoding of 6-axis force/torque streams and
//! SVM-based introspection over the resulting grammars.

pub mod behaviors;
pub mod compositions;
pub mod filterpipe;
pub mod primitives;
pub mod signal;
pub mod symbols;
pub mod features;
pub mod classifier;
pub mod pipeline;
pub mod monitor;
