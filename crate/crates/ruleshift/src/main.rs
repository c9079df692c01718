use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ruleshift::checkpoint::Checkpoint;
use ruleshift::config::{Condition, Config, EnvName};
use ruleshift::formats::{save_route, write_dataset, write_transcripts};
use ruleshift::harness::{self, PolicyKind, METRICS};
use ruleshift::report;
use ruleshift::server::Server;
use ruleshift_core::gp::{numbers_of, sample_quadruple, solve_formula};
use ruleshift_core::nav::generate_route;
use ruleshift_core::policy::{make_sft_records, SftMode};
use ruleshift_core::seed::derive_seed;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "ruleshift", version, about = "Rule-variant generalization probes: environments, training, evaluation")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Base seed; overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML config file (default: $RULESHIFT_CONFIG, else built-in defaults).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file or directory; stdout where a file is expected and this is omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Emit sampled GeneralPoints hands with their values and a solution.
    Sample {
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, value_enum, default_value_t = Condition::Id)]
        condition: Condition,
    },
    /// Print a formula over the numbers that reaches the target.
    Solve {
        /// Four comma-separated numbers, e.g. 1,3,10,6.
        #[arg(long, value_delimiter = ',', required = true)]
        numbers: Vec<u64>,
        #[arg(long, default_value_t = 24)]
        target: u64,
    },
    /// Generate synthetic route files into the output directory.
    GenRoutes {
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// Write an SFT dataset as JSON lines.
    MakeSftData {
        #[arg(long, value_enum)]
        env: EnvName,
        #[arg(long, value_enum, default_value_t = ModeArg::ExpertSingleTurn)]
        mode: ModeArg,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, value_enum, default_value_t = Condition::Id)]
        condition: Condition,
    },
    /// Train the shared initial checkpoint and SFT series, or PPO from it.
    Train {
        #[arg(value_enum)]
        stage: StageArg,
        #[arg(long, value_enum)]
        env: EnvName,
        /// RL verification iterations; default: every configured preset.
        #[arg(long)]
        viter: Option<usize>,
    },
    /// Evaluate a policy, or every checkpoint of a run directory with `--in`.
    Eval {
        #[arg(long, value_enum, default_value_t = PolicyArg::Expert)]
        policy: PolicyArg,
        /// Checkpoint file for `--policy ckpt`.
        #[arg(long)]
        ckpt: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = EnvName::Gp)]
        env: EnvName,
        #[arg(long, value_enum, default_value_t = Condition::Id)]
        condition: Condition,
        #[arg(long)]
        episodes: Option<usize>,
        /// Verification iterations per episode.
        #[arg(long)]
        viter: Option<usize>,
        /// Run directory written by `train`.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        /// Also write the transcripts as a JSON-lines log.
        #[arg(long)]
        transcripts: Option<PathBuf>,
    },
    /// Serve the line-JSON episode protocol.
    Serve {
        /// Use stdin/stdout instead of TCP.
        #[arg(long)]
        stdio: bool,
        /// `host:port`; overrides the config.
        #[arg(long)]
        listen: Option<String>,
    },
    /// Build the four-condition csv from evaluated runs.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Train, evaluate and report in one go.
    Experiment {
        #[arg(long, value_enum, num_args = 1.., default_values_t = [EnvName::Gp, EnvName::Nav])]
        env: Vec<EnvName>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StageArg {
    Sft,
    Rl,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Expert,
    Random,
    Ckpt,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    ExpertSingleTurn,
    SubOptimal,
}

impl From<ModeArg> for SftMode {
    fn from(m: ModeArg) -> SftMode {
        match m {
            ModeArg::ExpertSingleTurn => SftMode::ExpertSingleTurn,
            ModeArg::SubOptimal => SftMode::SubOptimal,
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn json_lines<T: Serialize>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|i| serde_json::to_string(&i).expect("serializes") + "\n").collect()
}

fn require_out(out: Option<&PathBuf>, what: &str) -> Result<PathBuf> {
    out.cloned().with_context(|| format!("{what} needs --out <dir>"))
}

#[derive(Serialize)]
struct Hand {
    cards: Vec<String>,
    numbers: [u64; 4],
    target: u64,
    formula: Option<String>,
}

#[derive(Serialize)]
struct EvalLine<'a> {
    policy: &'a str,
    env: &'a str,
    condition: &'a str,
    viter: Option<usize>,
    #[serde(flatten)]
    summary: harness::EvalSummary,
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = Config::load(cli.global.config.as_deref())?;
    if let Some(s) = cli.global.seed {
        cfg.seed = s;
    }
    let out = cli.global.out.as_ref();
    match cli.command {
        Command::Sample { count, condition } => {
            let rule = match condition {
                Condition::Id => cfg.gp.train,
                Condition::Ood => cfg.gp.ood,
            };
            let mut hands = Vec::with_capacity(count);
            for i in 0..count as u64 {
                let cards = sample_quadruple(derive_seed(cfg.seed, i), &rule)?;
                let numbers = numbers_of(&cards, &rule);
                hands.push(Hand {
                    cards: cards.iter().map(ToString::to_string).collect(),
                    numbers,
                    target: rule.target,
                    formula: solve_formula(&numbers, rule.target),
                });
            }
            emit(out.map(PathBuf::as_path), &json_lines(hands))
        }
        Command::Solve { numbers, target } => {
            let numbers: [u64; 4] = numbers.try_into().map_err(|_| anyhow::anyhow!("--numbers needs exactly four values"))?;
            match solve_formula(&numbers, target) {
                Some(f) => emit(out.map(PathBuf::as_path), &(f + "\n")),
                None => bail!("no formula over {numbers:?} reaches {target}"),
            }
        }
        Command::GenRoutes { count } => {
            let dir = require_out(out, "gen-routes")?;
            std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            for i in 0..count {
                let route = generate_route(derive_seed(cfg.seed, i as u64), &cfg.nav.routes)?;
                save_route(&dir.join(format!("route_{i:04}.json")), &route)?;
            }
            Ok(())
        }
        Command::MakeSftData { env, mode, count, condition } => {
            let records = make_sft_records(&cfg.spec(env, condition), count, mode.into(), cfg.seed)?;
            match out {
                Some(p) => Ok(write_dataset(p, &records)?),
                None => emit(None, &json_lines(&records)),
            }
        }
        Command::Train { stage, env, viter } => {
            let dir = require_out(out, "train")?;
            match stage {
                StageArg::Sft => {
                    harness::train_sft(&cfg, env, &dir)?;
                }
                StageArg::Rl => {
                    let viters = viter.map_or_else(|| cfg.experiment.viters.clone(), |v| vec![v]);
                    for v in viters {
                        if v == 0 {
                            bail!("--viter must be at least 1");
                        }
                        harness::train_rl(&cfg, env, v, &dir)?;
                    }
                }
            }
            Ok(())
        }
        Command::Eval { policy, ckpt, env, condition, episodes, viter, input, transcripts } => {
            if let Some(run_dir) = input {
                let rows = harness::eval_run(&cfg, &run_dir)?;
                let path = out.cloned().unwrap_or_else(|| run_dir.join(METRICS));
                harness::save_metrics(&path, &rows)?;
                return Ok(());
            }
            let kind = match (policy, ckpt) {
                (PolicyArg::Expert, _) => PolicyKind::Expert,
                (PolicyArg::Random, _) => PolicyKind::Random,
                (PolicyArg::Ckpt, Some(p)) => PolicyKind::Tiny(Checkpoint::load(&p).with_context(|| p.display().to_string())?.params, cfg.experiment.eval_mode),
                (PolicyArg::Ckpt, None) => bail!("--policy ckpt needs --ckpt <file>"),
            };
            let mut spec = cfg.spec(env, condition);
            if let Some(v) = viter {
                if v == 0 {
                    bail!("--viter must be at least 1");
                }
                spec = spec.with_verification(v);
            }
            let n = episodes.unwrap_or(cfg.experiment.eval_episodes);
            if n == 0 {
                bail!("--episodes must be at least 1");
            }
            let ts = harness::rollout(&cfg, &spec, &kind, n, derive_seed(cfg.seed, condition as u64))?;
            if let Some(p) = transcripts {
                write_transcripts(&p, &ts)?;
            }
            let line = EvalLine {
                policy: match policy {
                    PolicyArg::Expert => "expert",
                    PolicyArg::Random => "random",
                    PolicyArg::Ckpt => "ckpt",
                },
                env: env.as_str(),
                condition: condition.as_str(),
                viter,
                summary: harness::summarize(&spec, &ts),
            };
            emit(out.map(PathBuf::as_path), &json_lines([line]))
        }
        Command::Serve { stdio, listen } => {
            let addr = listen.unwrap_or_else(|| cfg.server.listen.clone());
            let server = Server::new(cfg);
            if stdio {
                server.serve_stdio()?;
            } else {
                let listener = std::net::TcpListener::bind(&addr).with_context(|| format!("binding {addr}"))?;
                Arc::new(server).serve_tcp(listener)?;
            }
            Ok(())
        }
        Command::Report { input } => {
            let path = out.cloned().unwrap_or_else(|| PathBuf::from("report.csv"));
            report::report(&input, &path)?;
            Ok(())
        }
        Command::Experiment { env } => {
            let root = require_out(out, "experiment")?;
            for e in env {
                harness::run_experiment(&cfg, e, &root.join(e.as_str()))?;
            }
            report::report(&root, &root.join("report.csv"))?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RULESHIFT_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
