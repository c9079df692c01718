//! Desk-scale SFT-vs-RL experiment: shared initial checkpoint, separately
//! scaled SFT and PPO runs, and ID/OOD evaluation of every checkpoint.
//!
//! Tokens are counted as whitespace-separated words of prompt and response.
//! Episodes are seeded by index, so results do not depend on thread count.

use std::path::{Path, PathBuf};

use log::info;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use ruleshift_core::evalkit::{
    flops_rl, flops_rl_exact, flops_sft, flops_sft_exact, per_step_accuracy, success_rate, EnvKind, FlopsConfig,
    MetricPoint,
};
use ruleshift_core::policy::{
    compute_advantages, featurize, make_sft_records, ppo_update, sft_update, ActMode, Adam, Choice, ExpertPolicy,
    Features, PpoSample, RandomPolicy, SftMode, SftRecord, TinyParams, TinyPolicy, NUM_PARAMS,
};
use ruleshift_core::revision::{build_prompt, run_episode, run_episode_traced, Transcript};
use ruleshift_core::seed::{derive_seed, rng_from_seed};
use ruleshift_core::{EnvSpec, Policy};
use serde::{Deserialize, Serialize};

use crate::checkpoint::{Checkpoint, CheckpointError};
use crate::config::{Condition, Config, EnvName};
use crate::formats::{read_jsonl, write_jsonl, FormatError};

const SALT_INIT: u64 = 0x1417;
const SALT_SFT: u64 = 0x5f7;
const SALT_RL: u64 = 0x7e1;
const SALT_EVAL: u64 = 0xe7a1;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Env(#[from] ruleshift_core::task::EnvError),
    #[error(transparent)]
    Train(#[from] ruleshift_core::policy::TrainError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Invalid(String),
}

pub fn count_tokens(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

/// Which policy to evaluate.
#[derive(Debug, Clone)]
pub enum PolicyKind {
    Expert,
    Random,
    Tiny(TinyParams, ActMode),
}

impl PolicyKind {
    fn build(&self, cfg: &Config, seed: u64) -> Box<dyn Policy + Send> {
        match self {
            PolicyKind::Expert => Box::new(ExpertPolicy),
            PolicyKind::Random => Box::new(RandomPolicy::new(seed)),
            PolicyKind::Tiny(p, mode) => Box::new(TinyPolicy::new(p.clone(), cfg.features, *mode, seed)),
        }
    }
}

/// Runs `episodes` episodes; episode `i` uses environment seed `derive_seed(seed, i)`.
pub fn rollout(
    cfg: &Config,
    spec: &EnvSpec,
    policy: &PolicyKind,
    episodes: usize,
    seed: u64,
) -> Result<Vec<Transcript>, HarnessError> {
    (0..episodes as u64)
        .into_par_iter()
        .map(|i| {
            let mut env = spec.make(derive_seed(seed, i))?;
            let mut p = policy.build(cfg, derive_seed(seed ^ SALT_EVAL, i));
            Ok(run_episode(&mut env, &mut *p))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub success_rate: MetricPoint,
    pub per_step_accuracy: MetricPoint,
}

pub fn summarize(spec: &EnvSpec, transcripts: &[Transcript]) -> EvalSummary {
    let kind = if spec.is_gp() { EnvKind::Gp } else { EnvKind::Nav };
    EvalSummary {
        success_rate: success_rate(transcripts, kind).expect("at least one episode"),
        per_step_accuracy: per_step_accuracy(transcripts).expect("every episode has a turn"),
    }
}

fn record_tokens(r: &SftRecord) -> u64 {
    count_tokens(&r.prompt) + count_tokens(&r.target)
}

fn sft_pass(
    model: &mut TinyParams,
    opt: &mut Adam,
    data: &mut [(Features, Choice)],
    batch: usize,
    rng: &mut impl rand::Rng,
) -> Result<f64, HarnessError> {
    data.shuffle(rng);
    let mut total = 0.0;
    let mut n = 0;
    for chunk in data.chunks(batch.max(1)) {
        total += sft_update(model, opt, chunk)?;
        n += 1;
    }
    Ok(total / n.max(1) as f64)
}

/// A saved checkpoint with its compute accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointEntry {
    pub index: usize,
    pub file: String,
    pub d_init: u64,
    /// SFT or RL training tokens beyond the initial checkpoint.
    pub d_train: u64,
    pub flops: f64,
    /// Exact FLOPs as a reduced `num/den` string.
    pub flops_exact: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Sft,
    Rl,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Sft => "SFT",
            Stage::Rl => "RL",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub env: EnvName,
    pub stage: Stage,
    /// Verification iterations used during RL training.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub viter: Option<usize>,
    pub config_hash: String,
    pub num_params: usize,
    pub checkpoints: Vec<CheckpointEntry>,
}

pub const MANIFEST: &str = "manifest.json";

impl Manifest {
    pub fn load(dir: &Path) -> Result<Manifest, HarnessError> {
        let path = dir.join(MANIFEST);
        let text = std::fs::read_to_string(&path).map_err(|source| HarnessError::Io { path: path.clone(), source })?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Invalid(format!("{}: {e}", path.display())))
    }

    fn save(&self, dir: &Path) -> Result<(), HarnessError> {
        let path = dir.join(MANIFEST);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|source| HarnessError::Io { path, source })
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn exact_string(e: ruleshift_core::evalkit::ExactFlops) -> String {
    fn gcd(a: u128, b: u128) -> u128 {
        if b == 0 { a } else { gcd(b, a % b) }
    }
    let g = gcd(e.num, e.den).max(1);
    if e.den / g == 1 {
        format!("{}", e.num / g)
    } else {
        format!("{}/{}", e.num / g, e.den / g)
    }
}

fn flops_entry(env: EnvName, stage: Stage, index: usize, d_init: u64, d_train: u64) -> CheckpointEntry {
    let fc = FlopsConfig {
        n: NUM_PARAMS as u64,
        d_init,
        d_sft: if stage == Stage::Sft { d_train } else { 0 },
        d_rl: if stage == Stage::Rl { d_train } else { 0 },
        lambda: env.lambda(),
    };
    let (flops, exact) = match stage {
        Stage::Sft => (flops_sft(&fc), flops_sft_exact(&fc)),
        Stage::Rl => (flops_rl(&fc), flops_rl_exact(&fc)),
    };
    CheckpointEntry { index, file: format!("ckpt_{index:03}.bin"), d_init, d_train, flops, flops_exact: exact_string(exact) }
}

fn stage_dir(out: &Path, stage: Stage, viter: Option<usize>) -> PathBuf {
    match (stage, viter) {
        (Stage::Sft, _) => out.join("sft"),
        (Stage::Rl, v) => out.join(format!("rl_v{}", v.unwrap_or(0))),
    }
}

/// Trains the shared initial checkpoint, then scales SFT from it.
/// Writes `<out>/sft/` with checkpoint 0 being the initial model.
pub fn train_sft(cfg: &Config, env: EnvName, out: &Path) -> Result<Manifest, HarnessError> {
    let x = &cfg.experiment;
    let spec = cfg.spec(env, Condition::Id);
    let dir = stage_dir(out, Stage::Sft, None);
    std::fs::create_dir_all(&dir).map_err(|source| HarnessError::Io { path: dir.clone(), source })?;
    let hash = cfg.policy_hash();
    let mut rng = rng_from_seed(derive_seed(cfg.seed, SALT_SFT));
    let mut model = TinyParams::init(derive_seed(cfg.seed, SALT_INIT));
    let mut opt = Adam::new(NUM_PARAMS, cfg.train.lr);

    let init = make_sft_records(&spec, x.init_records, SftMode::ExpertSingleTurn, derive_seed(cfg.seed, SALT_INIT))?;
    let mut data: Vec<(Features, Choice)> = init.iter().map(|r| (featurize(&r.snapshot, &cfg.features), r.choice)).collect();
    let init_tokens: u64 = init.iter().map(record_tokens).sum();
    let mut d_init = 0;
    for _ in 0..x.init_epochs {
        sft_pass(&mut model, &mut opt, &mut data, cfg.train.batch_size, &mut rng)?;
        d_init += init_tokens;
    }
    let mut manifest = Manifest {
        env,
        stage: Stage::Sft,
        viter: None,
        config_hash: hex(&hash),
        num_params: NUM_PARAMS,
        checkpoints: vec![],
    };
    let entry = flops_entry(env, Stage::Sft, 0, d_init, 0);
    Checkpoint { config_hash: hash, params: model.clone() }.save(&dir.join(&entry.file))?;
    manifest.checkpoints.push(entry);

    let mut d_sft = 0;
    for k in 1..=x.sft_checkpoints {
        let chunk = make_sft_records(&spec, x.sft_chunk, x.sft_mode, derive_seed(cfg.seed ^ SALT_SFT, k as u64))?;
        let mut data: Vec<(Features, Choice)> =
            chunk.iter().map(|r| (featurize(&r.snapshot, &cfg.features), r.choice)).collect();
        let tokens: u64 = chunk.iter().map(record_tokens).sum();
        let mut loss = 0.0;
        for _ in 0..cfg.train.sft_epochs {
            loss = sft_pass(&mut model, &mut opt, &mut data, cfg.train.batch_size, &mut rng)?;
            d_sft += tokens;
        }
        let entry = flops_entry(env, Stage::Sft, k, d_init, d_sft);
        info!("{} sft checkpoint {k}: loss {loss:.4}, {:.3e} FLOPs", env.as_str(), entry.flops);
        Checkpoint { config_hash: hash, params: model.clone() }.save(&dir.join(&entry.file))?;
        manifest.checkpoints.push(entry);
    }
    manifest.save(&dir)?;
    Ok(manifest)
}

/// PPO samples, tokens consumed, mean episode return.
type Rollouts = (Vec<PpoSample<Features, Choice>>, u64, f64);

/// One PPO round's rollouts: samples plus the tokens they consumed.
fn collect(
    cfg: &Config,
    spec: &EnvSpec,
    params: &TinyParams,
    seed: u64,
) -> Result<Rollouts, HarnessError> {
    let t = &cfg.train;
    let episodes: Vec<_> = (0..cfg.experiment.rl_episodes as u64)
        .into_par_iter()
        .map(|i| -> Result<_, HarnessError> {
            let mut env = spec.make(derive_seed(seed, i))?;
            let mut policy = TinyPolicy::new(params.clone(), cfg.features, ActMode::Sample, derive_seed(seed ^ SALT_RL, i));
            let (transcript, steps) = run_episode_traced(&mut env, &mut policy);
            let rewards: Vec<f64> = steps.iter().map(|s| s.reward).collect();
            let values: Vec<f64> = steps.iter().map(|s| s.act.value).collect();
            let adv = compute_advantages(&rewards, &values, t.gamma, t.lambda)?;
            let mut tokens = 0;
            let mut samples = Vec::with_capacity(steps.len());
            for (k, s) in steps.into_iter().enumerate() {
                tokens += count_tokens(&build_prompt(&transcript, k)) + count_tokens(&s.act.text);
                let Some(choice) = s.act.choice else { continue };
                samples.push(PpoSample {
                    input: featurize(&s.snapshot, &cfg.features),
                    choice,
                    old_log_prob: s.act.log_prob,
                    advantage: adv[k],
                    ret: adv[k] + values[k],
                });
            }
            Ok((samples, tokens, transcript.episode_return()))
        })
        .collect::<Result<_, _>>()?;
    let mut all = Vec::new();
    let mut tokens = 0;
    let mut ret = 0.0;
    let n = episodes.len().max(1) as f64;
    for (s, k, r) in episodes {
        all.extend(s);
        tokens += k;
        ret += r;
    }
    Ok((all, tokens, ret / n))
}

/// PPO from the initial checkpoint of `<out>/sft/`, training with `viter`
/// verification iterations. Writes `<out>/rl_v<viter>/`.
pub fn train_rl(cfg: &Config, env: EnvName, viter: usize, out: &Path) -> Result<Manifest, HarnessError> {
    let x = &cfg.experiment;
    let sft_dir = stage_dir(out, Stage::Sft, None);
    let sft = Manifest::load(&sft_dir)?;
    let init_entry = sft.checkpoints.first().ok_or_else(|| HarnessError::Invalid("SFT run has no checkpoints".into()))?;
    let init = Checkpoint::load(&sft_dir.join(&init_entry.file))?;
    let hash = cfg.policy_hash();
    if init.config_hash != hash {
        return Err(HarnessError::Invalid("initial checkpoint was trained with a different config".into()));
    }
    let d_init = init_entry.d_init;
    let spec = cfg.spec(env, Condition::Id).with_verification(viter);
    let dir = stage_dir(out, Stage::Rl, Some(viter));
    std::fs::create_dir_all(&dir).map_err(|source| HarnessError::Io { path: dir.clone(), source })?;
    let mut model = init.params;
    let mut opt = Adam::new(NUM_PARAMS, x.rl_lr);
    let mut rng = rng_from_seed(derive_seed(cfg.seed ^ SALT_RL, viter as u64));
    let mut manifest = Manifest {
        env,
        stage: Stage::Rl,
        viter: Some(viter),
        config_hash: hex(&hash),
        num_params: NUM_PARAMS,
        checkpoints: vec![],
    };
    let entry = flops_entry(env, Stage::Rl, 0, d_init, 0);
    Checkpoint { config_hash: hash, params: model.clone() }.save(&dir.join(&entry.file))?;
    manifest.checkpoints.push(entry);
    let mut d_rl = 0;
    for it in 1..=x.rl_iterations {
        let seed = derive_seed(derive_seed(cfg.seed ^ SALT_RL, viter as u64), it as u64);
        let (mut batch, tokens, mean_return) = collect(cfg, &spec, &model, seed)?;
        d_rl += tokens;
        if !batch.is_empty() {
            let stats = ppo_update(&mut model, &mut opt, &mut batch, &cfg.train, &mut rng)?;
            log::debug!("{} rl v{viter} iter {it}: return {mean_return:.3}, {stats:?}", env.as_str());
        }
        if it % x.rl_checkpoint_every == 0 || it == x.rl_iterations {
            let entry = flops_entry(env, Stage::Rl, manifest.checkpoints.len(), d_init, d_rl);
            info!("{} rl v{viter} checkpoint {}: mean return {mean_return:.3}", env.as_str(), entry.index);
            Checkpoint { config_hash: hash, params: model.clone() }.save(&dir.join(&entry.file))?;
            manifest.checkpoints.push(entry);
        }
    }
    manifest.save(&dir)?;
    Ok(manifest)
}

/// One evaluated metric of one checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub env: EnvName,
    pub stage: Stage,
    pub condition: Condition,
    pub viter: usize,
    pub checkpoint: usize,
    pub compute_gflops: f64,
    pub metric: String,
    pub value: f64,
    pub stderr: f64,
    pub n: usize,
}

pub const METRICS: &str = "metrics.jsonl";

/// Evaluates every checkpoint of every stage found under `run`.
/// SFT checkpoints are evaluated at every configured verification budget;
/// RL checkpoints at the budget they were trained with.
pub fn eval_run(cfg: &Config, run: &Path) -> Result<Vec<MetricRow>, HarnessError> {
    let mut stages = Vec::new();
    let entries = std::fs::read_dir(run).map_err(|source| HarnessError::Io { path: run.to_path_buf(), source })?;
    for e in entries {
        let path = e.map_err(|source| HarnessError::Io { path: run.to_path_buf(), source })?.path();
        if path.join(MANIFEST).is_file() {
            stages.push(path);
        }
    }
    stages.sort();
    if stages.is_empty() {
        return Err(HarnessError::Invalid(format!("{}: no trained stages found", run.display())));
    }
    let mut rows = Vec::new();
    for dir in stages {
        let m = Manifest::load(&dir)?;
        let viters = match m.viter {
            Some(v) => vec![v],
            None => cfg.experiment.viters.clone(),
        };
        for entry in &m.checkpoints {
            let params = Checkpoint::load(&dir.join(&entry.file))?.params;
            for &viter in &viters {
                for condition in [Condition::Id, Condition::Ood] {
                    let spec = cfg.spec(m.env, condition).with_verification(viter);
                    let seed = derive_seed(cfg.seed ^ SALT_EVAL, condition as u64);
                    let ts = rollout(cfg, &spec, &PolicyKind::Tiny(params.clone(), cfg.experiment.eval_mode), cfg.experiment.eval_episodes, seed)?;
                    let s = summarize(&spec, &ts);
                    for (metric, p) in [("success_rate", s.success_rate), ("per_step_accuracy", s.per_step_accuracy)] {
                        rows.push(MetricRow {
                            env: m.env,
                            stage: m.stage,
                            condition,
                            viter,
                            checkpoint: entry.index,
                            compute_gflops: entry.flops / 1e9,
                            metric: metric.into(),
                            value: p.value,
                            stderr: p.stderr,
                            n: p.n,
                        });
                    }
                }
            }
            info!("{} {} checkpoint {} evaluated", m.env.as_str(), m.stage.as_str(), entry.index);
        }
    }
    Ok(rows)
}

pub fn save_metrics(path: &Path, rows: &[MetricRow]) -> Result<(), HarnessError> {
    Ok(write_jsonl(path, rows)?)
}

pub fn load_metrics(path: &Path) -> Result<Vec<MetricRow>, HarnessError> {
    Ok(read_jsonl(path)?)
}

/// The whole pipeline for one environment: SFT, RL at every budget, evaluation.
pub fn run_experiment(cfg: &Config, env: EnvName, out: &Path) -> Result<Vec<MetricRow>, HarnessError> {
    train_sft(cfg, env, out)?;
    for &v in &cfg.experiment.viters {
        train_rl(cfg, env, v, out)?;
    }
    let rows = eval_run(cfg, out)?;
    save_metrics(&out.join(METRICS), &rows)?;
    Ok(rows)
}
