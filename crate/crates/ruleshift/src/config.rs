//! Versioned TOML configuration.
//!
//! Every section has defaults; unknown keys anywhere are errors and the error
//! names the offending field path.

use std::path::{Path, PathBuf};

use ruleshift_core::evalkit::Lambda;
use ruleshift_core::gp::RuleConfig;
use ruleshift_core::nav::{NavConfig, RouteGenConfig};
use ruleshift_core::policy::{ActMode, FeatureConfig, SftMode, TrainConfig};
use ruleshift_core::EnvSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const CONFIG_VERSION: u32 = 1;
pub const CONFIG_ENV: &str = "RULESHIFT_CONFIG";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("unsupported config version {0} (expected {CONFIG_VERSION})")]
    Version(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EnvName {
    Gp,
    Nav,
}

impl EnvName {
    pub fn as_str(self) -> &'static str {
        match self {
            EnvName::Gp => "gp",
            EnvName::Nav => "nav",
        }
    }

    pub fn lambda(self) -> Lambda {
        match self {
            EnvName::Gp => Lambda::GENERAL_POINTS,
            EnvName::Nav => Lambda::NAVIGATION,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Id,
    Ood,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Id => "ID",
            Condition::Ood => "OOD",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GpSection {
    /// Training and in-distribution evaluation rule.
    pub train: RuleConfig,
    /// Out-of-distribution evaluation rule.
    pub ood: RuleConfig,
}

impl Default for GpSection {
    fn default() -> Self {
        GpSection { train: RuleConfig::in_distribution(), ood: RuleConfig::out_of_distribution() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NavSection {
    pub train: NavConfig,
    pub ood: NavConfig,
    pub routes: RouteGenConfig,
}

impl Default for NavSection {
    fn default() -> Self {
        NavSection {
            train: NavConfig::in_distribution(),
            ood: NavConfig::out_of_distribution(),
            routes: RouteGenConfig::default(),
        }
    }
}

/// Sizes of the desk-scale SFT-vs-RL experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Expert records used to train the shared initial checkpoint.
    pub init_records: usize,
    /// Passes over the initial records.
    pub init_epochs: usize,
    /// Fresh SFT records trained on per SFT checkpoint.
    pub sft_chunk: usize,
    pub sft_mode: SftMode,
    pub sft_checkpoints: usize,
    /// Episodes collected per PPO iteration.
    pub rl_episodes: usize,
    pub rl_iterations: usize,
    /// PPO learning rate; `train.lr` drives SFT.
    pub rl_lr: f64,
    /// Iterations between RL checkpoints.
    pub rl_checkpoint_every: usize,
    pub eval_episodes: usize,
    /// Decoding used when evaluating trained checkpoints.
    pub eval_mode: ActMode,
    pub viters: Vec<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            init_records: 6000,
            init_epochs: 2,
            sft_chunk: 1000,
            sft_mode: SftMode::SubOptimal,
            sft_checkpoints: 8,
            rl_episodes: 64,
            rl_iterations: 40,
            rl_lr: 1e-3,
            rl_checkpoint_every: 5,
            eval_episodes: 200,
            eval_mode: ActMode::Sample,
            viters: vec![1, 3, 5, 10],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServerConfig {
    /// `host:port` for TCP; ignored with `--stdio`.
    pub listen: String,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig { listen: "127.0.0.1:7070".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub gp: GpSection,
    #[serde(default)]
    pub nav: NavSection,
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub server: ServerConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            version: CONFIG_VERSION,
            seed: 0,
            gp: GpSection::default(),
            nav: NavSection::default(),
            features: FeatureConfig::default(),
            train: TrainConfig::default(),
            experiment: ExperimentConfig::default(),
            server: ServerConfig::default(),
        }
    }
}

fn field(path: &str, message: impl ToString) -> ConfigError {
    ConfigError::Field { field: path.to_string(), message: message.to_string() }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config, ConfigError> {
        let de = toml::Deserializer::parse(text).map_err(|e| field("<root>", e.message()))?;
        let cfg: Config = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            field(if path == "." { "<root>" } else { &path }, e.inner().message())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path`, else the file named by `RULESHIFT_CONFIG`, else defaults.
    pub fn load(path: Option<&Path>) -> Result<Config, ConfigError> {
        let path = path.map(Path::to_path_buf).or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(&p).map_err(|source| ConfigError::Io { path: p.clone(), source })?;
                Config::from_toml(&text)
            }
            None => Ok(Config::default()),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.version != CONFIG_VERSION {
            return Err(ConfigError::Version(self.version));
        }
        for (name, rule) in [("gp.train", &self.gp.train), ("gp.ood", &self.gp.ood)] {
            rule.validate().map_err(|e| field(name, e))?;
        }
        for (name, nav) in [("nav.train", &self.nav.train), ("nav.ood", &self.nav.ood)] {
            if nav.max_attempts == 0 {
                return Err(field(&format!("{name}.max_attempts"), "must be at least 1"));
            }
        }
        if self.nav.routes.max_straight == 0 {
            return Err(field("nav.routes.max_straight", "must be at least 1"));
        }
        if self.nav.routes.landmarks.len() < self.nav.routes.turning_points + 1 {
            return Err(field("nav.routes.landmarks", "fewer names than the route needs"));
        }
        self.train.validate().map_err(|e| field("train", e))?;
        let x = &self.experiment;
        if x.viters.is_empty() || x.viters.contains(&0) {
            return Err(field("experiment.viters", "must be a non-empty list of positive integers"));
        }
        if !(x.rl_lr.is_finite() && x.rl_lr > 0.0) {
            return Err(field("experiment.rl_lr", "must be a positive number"));
        }
        for (name, v) in [
            ("experiment.init_records", x.init_records),
            ("experiment.eval_episodes", x.eval_episodes),
            ("experiment.rl_episodes", x.rl_episodes),
            ("experiment.rl_checkpoint_every", x.rl_checkpoint_every),
        ] {
            if v == 0 {
                return Err(field(name, "must be at least 1"));
            }
        }
        Ok(())
    }

    pub fn spec(&self, env: EnvName, condition: Condition) -> EnvSpec {
        match (env, condition) {
            (EnvName::Gp, Condition::Id) => EnvSpec::Gp { rule: self.gp.train },
            (EnvName::Gp, Condition::Ood) => EnvSpec::Gp { rule: self.gp.ood },
            (EnvName::Nav, Condition::Id) => EnvSpec::Nav { nav: self.nav.train, routes: self.nav.routes.clone() },
            (EnvName::Nav, Condition::Ood) => EnvSpec::Nav { nav: self.nav.ood, routes: self.nav.routes.clone() },
        }
    }

    /// Hex sha256 of the canonical JSON of the settings that shape a trained policy.
    pub fn policy_hash(&self) -> [u8; 32] {
        let canon = serde_json::json!({
            "features": self.features,
            "train": self.train,
            "gp": self.gp,
            "nav": self.nav,
        });
        Sha256::digest(canon.to_string().as_bytes()).into()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
