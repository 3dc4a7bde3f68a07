//! Compact message passing simulator with compact tree routing and
//! self-healing reconstruction trees.

pub mod kernel;
pub mod harness;
pub mod hft;
pub mod protocols;
pub mod routing;
