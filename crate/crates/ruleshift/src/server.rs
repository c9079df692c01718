//! Line-delimited JSON protocol exposing environments to external agents.
//!
//! Each request is one JSON object on one line; each response is one JSON
//! object on one line, written in request order. See `docs/PROTOCOL.md`.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use log::{debug, info, warn};
use ruleshift_core::revision::{build_prompt, prompt_hash, EpisodeStatus, Environment, Transcript, Turn};
use ruleshift_core::seed::derive_seed;
use ruleshift_core::{AnyEnv, EnvSpec};
use serde::{Deserialize, Serialize};

use crate::config::{Condition, Config, EnvName};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Request {
    /// Starts an episode. `spec` overrides `env`/`condition`/`viter`, which
    /// otherwise select a preset from the server config.
    Reset {
        #[serde(default)]
        env: Option<EnvName>,
        #[serde(default)]
        condition: Option<Condition>,
        #[serde(default)]
        viter: Option<usize>,
        #[serde(default)]
        spec: Option<EnvSpec>,
        #[serde(default)]
        seed: Option<u64>,
    },
    Step {
        episode: u64,
        output: String,
    },
    Info {
        episode: u64,
    },
    /// The full transcript recorded so far.
    Transcript {
        episode: u64,
    },
    /// Forgets a finished or abandoned episode.
    Close {
        episode: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Response {
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub episode: Option<u64>,
    /// Turns completed so far.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
    /// Prompt for the next turn.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward: Option<f64>,
    /// Terminal budget penalty of this step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verifier: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub done: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<EpisodeStatus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub episode_return: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<Transcript>,
}

impl Response {
    fn error(message: impl Into<String>) -> Self {
        Response { ok: false, error: Some(message.into()), ..Response::default() }
    }
}

struct Session {
    env: AnyEnv,
    transcript: Transcript,
}

/// Shared server state: the episode table and the id allocator.
pub struct Server {
    config: Config,
    next_id: AtomicU64,
    episodes: Mutex<HashMap<u64, Arc<Mutex<Session>>>>,
}

impl Server {
    pub fn new(config: Config) -> Self {
        Server { config, next_id: AtomicU64::new(1), episodes: Mutex::new(HashMap::new()) }
    }

    fn session(&self, id: u64) -> Option<Arc<Mutex<Session>>> {
        self.episodes.lock().expect("episode table lock").get(&id).cloned()
    }

    pub fn handle(&self, req: Request) -> Response {
        match req {
            Request::Reset { env, condition, viter, spec, seed } => {
                let mut spec = spec.unwrap_or_else(|| {
                    self.config.spec(env.unwrap_or(EnvName::Gp), condition.unwrap_or(Condition::Id))
                });
                if let Some(v) = viter {
                    if v == 0 {
                        return Response::error("viter must be at least 1");
                    }
                    spec = spec.with_verification(v);
                }
                let id = self.next_id.fetch_add(1, Ordering::SeqCst);
                let seed = seed.unwrap_or_else(|| derive_seed(self.config.seed, id));
                let env = match spec.make(seed) {
                    Ok(e) => e,
                    Err(e) => return Response::error(e.to_string()),
                };
                let transcript = Transcript::new(env.context());
                let resp = Response {
                    ok: true,
                    episode: Some(id),
                    step: Some(0),
                    prompt: Some(build_prompt(&transcript, 0)),
                    done: Some(env.is_done()),
                    seed: Some(seed),
                    ..Response::default()
                };
                self.episodes
                    .lock()
                    .expect("episode table lock")
                    .insert(id, Arc::new(Mutex::new(Session { env, transcript })));
                resp
            }
            Request::Step { episode, output } => {
                let Some(s) = self.session(episode) else { return Response::error("unknown episode") };
                let mut s = s.lock().expect("session lock");
                let Session { env, transcript } = &mut *s;
                let prompt = build_prompt(transcript, transcript.turns.len());
                let out = match env.step(&output) {
                    Ok(o) => o,
                    Err(e) => return Response::error(e.to_string()),
                };
                transcript.turns.push(Turn {
                    output,
                    verifier: out.verifier.clone(),
                    reward: out.reward,
                    penalty: out.penalty,
                    correct: out.correct,
                    verdict: out.verdict.clone(),
                    next_context: out.next_context,
                    prompt_hash: prompt_hash(&prompt),
                });
                if out.done {
                    transcript.status = out.status;
                }
                let step = transcript.turns.len();
                Response {
                    ok: true,
                    episode: Some(episode),
                    step: Some(step),
                    prompt: Some(build_prompt(transcript, step)),
                    reward: Some(out.reward),
                    penalty: Some(out.penalty),
                    verifier: Some(out.verifier),
                    correct: Some(out.correct),
                    verdict: Some(out.verdict),
                    done: Some(out.done),
                    status: out.status,
                    ..Response::default()
                }
            }
            Request::Info { episode } => {
                let Some(s) = self.session(episode) else { return Response::error("unknown episode") };
                let s = s.lock().expect("session lock");
                let step = s.transcript.turns.len();
                Response {
                    ok: true,
                    episode: Some(episode),
                    step: Some(step),
                    prompt: Some(build_prompt(&s.transcript, step)),
                    done: Some(s.env.is_done()),
                    status: s.transcript.status,
                    episode_return: Some(s.transcript.episode_return()),
                    ..Response::default()
                }
            }
            Request::Transcript { episode } => {
                let Some(s) = self.session(episode) else { return Response::error("unknown episode") };
                let s = s.lock().expect("session lock");
                Response { ok: true, episode: Some(episode), transcript: Some(s.transcript.clone()), ..Response::default() }
            }
            Request::Close { episode } => match self.episodes.lock().expect("episode table lock").remove(&episode) {
                Some(_) => Response { ok: true, episode: Some(episode), ..Response::default() },
                None => Response::error("unknown episode"),
            },
        }
    }

    /// Handles one request line; malformed lines get an error response.
    pub fn handle_line(&self, line: &str) -> String {
        let resp = match serde_json::from_str::<Request>(line) {
            Ok(req) => self.handle(req),
            Err(e) => Response::error(format!("malformed request: {e}")),
        };
        serde_json::to_string(&resp).expect("responses serialize")
    }

    /// Serves one line stream until end of input.
    pub fn serve_stream<R: BufRead, W: Write>(&self, input: R, mut output: W) -> std::io::Result<()> {
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let resp = self.handle_line(&line);
            debug!("<- {line}\n-> {resp}");
            output.write_all(resp.as_bytes())?;
            output.write_all(b"\n")?;
            output.flush()?;
        }
        Ok(())
    }

    pub fn serve_stdio(&self) -> std::io::Result<()> {
        let stdin = std::io::stdin();
        self.serve_stream(stdin.lock(), std::io::stdout().lock())
    }

    /// Accepts connections forever, one handler thread per connection.
    pub fn serve_tcp(self: Arc<Self>, listener: TcpListener) -> std::io::Result<()> {
        info!("listening on {}", listener.local_addr()?);
        for conn in listener.incoming() {
            let conn = match conn {
                Ok(c) => c,
                Err(e) => {
                    warn!("accept failed: {e}");
                    continue;
                }
            };
            let server = Arc::clone(&self);
            std::thread::spawn(move || {
                let peer = conn.peer_addr().map(|a| a.to_string()).unwrap_or_default();
                if let Err(e) = server.serve_connection(conn) {
                    warn!("connection {peer}: {e}");
                }
            });
        }
        Ok(())
    }

    fn serve_connection(&self, conn: TcpStream) -> std::io::Result<()> {
        let reader = BufReader::new(conn.try_clone()?);
        self.serve_stream(reader, conn)
    }
}
