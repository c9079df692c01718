//! Operator-facing side of `ruleshift-core`: versioned config, route and
//! transcript file formats, checkpoints, the SFT-vs-RL experiment harness,
//! report generation and the line-JSON episode server.

pub mod checkpoint;
pub mod config;
pub mod formats;
pub mod harness;
pub mod report;
pub mod server;
