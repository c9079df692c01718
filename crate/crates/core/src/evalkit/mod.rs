//! Success rate, per-step accuracy, compute accounting and smoothing.

mod flops;
mod metrics;
mod savgol;

pub use flops::{flops_rl, flops_rl_exact, flops_sft, flops_sft_exact, ExactFlops, FlopsConfig, Lambda};
pub use metrics::{binomial_stderr, per_step_accuracy, success_rate, EnvKind, MetricError, MetricPoint};
pub use savgol::{coefficients, smooth, Edge, SavGol, SmoothError, DEFAULT_ORDER, DEFAULT_WINDOW};
