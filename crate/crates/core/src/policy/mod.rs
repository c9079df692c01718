//! Policies over the two environments and their trainers.

mod baselines;
mod choice;
mod dataset;
pub mod features;
mod tiny;
mod train;

pub use baselines::{matches_expert, ExpertPolicy, RandomPolicy};
pub use choice::{expert_choice, expert_gp_choice, render_choice, render_gp, render_nav, Choice, GpChoice, NUMBER_CLASSES};
pub use dataset::{make_sft_records, SftMode, SftRecord, MAX_INJECTED};
pub use features::{featurize, featurize_gp, featurize_nav, FeatureConfig, Features, DIM};
pub use tiny::{ActMode, TinyParams, TinyPolicy, HIDDEN, NUM_PARAMS, TEMPLATE_GROUPS, TEMPLATE_LOGITS};
pub use train::{
    compute_advantages, normalize_advantages, ppo_update, sft_update, Adam, Differentiable, Eval, PpoSample, PpoStats,
    SoftmaxBandit, TrainConfig, TrainError, Weights,
};
