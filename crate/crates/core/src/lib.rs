//! Rule-variant generalization probes for post-training studies.
//!
//! Two verifier-backed text environments (the GeneralPoints card arithmetic
//! game and a route-following navigation task), a sequential-revision episode
//! engine, a small trainable reference policy with SFT and multi-turn PPO
//! trainers, and the evaluation kit (success rate, per-step accuracy, FLOPs
//! accounting, Savitzky-Golay smoothing).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and the
//! wire-protocol server live in the `ruleshift` companion crate.
#![no_std]
#![warn(rust_2018_idioms, missing_copy_implementations, unused_qualifications)]

extern crate alloc;

pub mod answer;
pub mod equation;
pub mod evalkit;
pub mod gp;
pub mod nav;
pub mod policy;
pub mod revision;
pub mod seed;
pub mod task;

pub use equation::{Expr, Rational, Verdict, VerdictClass};
pub use revision::{Environment, Policy, Transcript};
pub use task::{AnyEnv, EnvSpec};
