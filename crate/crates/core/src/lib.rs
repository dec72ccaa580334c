//! Geographic and hyperbolic addressing for greedy routing in overlay
//! networks, with a simulation harness.

pub mod addressing;
pub mod geometry;
pub mod harness;
pub mod metrics;
pub mod routing;
pub mod topology;
