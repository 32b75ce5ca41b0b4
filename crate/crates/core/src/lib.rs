pub mod diagnostics;
pub mod graph;
pub mod greedy;
pub mod harness;
pub mod matching;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod rotate;
pub mod verify;
