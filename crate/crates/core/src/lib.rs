//! EFX allocations and orientations on multi-graph instances.

pub mod cut;
pub mod derived;
pub mod error;
pub mod fairness;
pub mod forge;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod rational;
pub mod solvers;
pub mod structure;

pub use error::{Error, Result};
pub use model::{Allocation, AgentId, Bundle, EdgeId, EdgeItem, Instance};
pub use rational::Rational;
