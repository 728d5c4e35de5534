//! Out-of-process predictors speaking newline-delimited JSON on stdio.
//!
//! The child announces itself with `{"type":"ready","protocol":1}`. Each
//! request line `{"type":"predict","scene_id",frames:[{frame_index,k,scene}]}`
//! is answered by exactly one `{"type":"prediction","scene_id",frames:[...]}`
//! line carrying `trajectories` and `probs` per frame.

use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::scene::Scene;

use super::ca::predict_ca;
use super::{validate_response, Predictor, PredictorRequest, PredictorResponse};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);
const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Message {
    Ready {
        protocol: u32,
    },
    Predict {
        scene_id: String,
        frames: Vec<FrameRequest>,
    },
    Prediction {
        scene_id: String,
        frames: Vec<FrameResponse>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct FrameRequest {
    frame_index: usize,
    k: usize,
    scene: serde_json::Value,
}

#[derive(Debug, Serialize, Deserialize)]
struct FrameResponse {
    frame_index: usize,
    trajectories: Vec<Vec<[f64; 2]>>,
    probs: Vec<f64>,
}

/// A predictor running as a child process (`sh -c <command>`).
pub struct ExternalPredictor {
    command: String,
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    stderr: Arc<Mutex<String>>,
    timeout: Duration,
    dead: bool,
}

impl ExternalPredictor {
    /// Start the child and wait for its handshake.
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::ChildExit(format!("cannot start `{command}`: {e}")))?;

        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });

        let stderr = Arc::new(Mutex::new(String::new()));
        let mut err_pipe = child.stderr.take().expect("stderr is piped");
        let sink = Arc::clone(&stderr);
        thread::spawn(move || {
            let mut buf = [0u8; 4096];
            while let Ok(n) = err_pipe.read(&mut buf) {
                if n == 0 {
                    break;
                }
                sink.lock().unwrap().push_str(&String::from_utf8_lossy(&buf[..n]));
            }
        });

        let mut me = Self {
            command: command.to_string(),
            stdin: child.stdin.take(),
            child,
            lines,
            stderr,
            timeout,
            dead: false,
        };
        match me.read_message() {
            Ok(Message::Ready { protocol }) if protocol == PROTOCOL_VERSION => Ok(me),
            Ok(other) => Err(me.fail(Error::Protocol(format!(
                "expected handshake {{\"type\":\"ready\",\"protocol\":1}}, got {other:?}"
            )))),
            Err(Error::ChildExit(msg)) => {
                Err(me.fail(Error::Protocol(format!("no handshake: {msg}"))))
            }
            Err(e) => Err(me.fail(e)),
        }
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    fn read_message(&mut self) -> Result<Message> {
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => serde_json::from_str(&line).map_err(|e| {
                let shown: String = line.chars().take(120).collect();
                Error::Protocol(format!("unparsable line `{shown}`: {e}"))
            }),
            Ok(Err(e)) => Err(Error::ChildExit(format!("reading stdout: {e}"))),
            Err(RecvTimeoutError::Timeout) => Err(Error::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => {
                let status = self.child.wait().map(|s| s.to_string()).unwrap_or_default();
                Err(Error::ChildExit(format!("stdout closed ({status})")))
            }
        }
    }

    /// Stop the child and attach whatever it wrote to stderr.
    fn fail(&mut self, err: Error) -> Error {
        self.shutdown();
        let stderr = self.stderr_text();
        if stderr.is_empty() {
            return err;
        }
        let echo = format!("child stderr: {}", stderr.trim_end());
        match err {
            Error::Protocol(m) => Error::Protocol(format!("{m}; {echo}")),
            Error::ChildExit(m) => Error::ChildExit(format!("{m}; {echo}")),
            other => {
                log::error!("{echo}");
                other
            }
        }
    }

    fn stderr_text(&self) -> String {
        // The reader thread may still be draining the pipe of an exited child.
        for _ in 0..20 {
            if !self.stderr.lock().unwrap().is_empty() {
                break;
            }
            thread::sleep(Duration::from_millis(10));
        }
        self.stderr.lock().unwrap().clone()
    }

    fn shutdown(&mut self) {
        if !self.dead {
            self.dead = true;
            self.stdin = None;
            let _ = self.child.kill();
            let _ = self.child.wait();
        }
    }

    fn exchange(&mut self, scene_id: &str, requests: &[PredictorRequest]) -> Result<Vec<PredictorResponse>> {
        let msg = Message::Predict {
            scene_id: scene_id.to_string(),
            frames: requests
                .iter()
                .map(|r| FrameRequest {
                    frame_index: r.frame_index,
                    k: r.k,
                    scene: r.scene.to_json_value(),
                })
                .collect(),
        };
        let mut line = serde_json::to_string(&msg)?;
        line.push('\n');
        let stdin = self.stdin.as_mut().expect("live child has stdin");
        stdin
            .write_all(line.as_bytes())
            .and_then(|_| stdin.flush())
            .map_err(|e| Error::ChildExit(format!("writing request: {e}")))?;

        let (sid, frames) = match self.read_message()? {
            Message::Prediction { scene_id, frames } => (scene_id, frames),
            other => {
                return Err(Error::Protocol(format!(
                    "expected a prediction message, got {other:?}"
                )))
            }
        };
        if sid != scene_id {
            return Err(Error::Protocol(format!(
                "response for scene {sid} to a request for {scene_id}"
            )));
        }
        if frames.len() != requests.len() {
            return Err(Error::Shape(format!(
                "expected {} frames, found {}",
                requests.len(),
                frames.len()
            )));
        }
        requests
            .iter()
            .zip(frames)
            .map(|(req, f)| {
                let resp = PredictorResponse {
                    frame_index: f.frame_index,
                    trajectories: f
                        .trajectories
                        .into_iter()
                        .map(|t| t.into_iter().map(|[x, y]| Vec2::new(x, y)).collect())
                        .collect(),
                    probs: f.probs,
                };
                validate_response(req, &resp)?;
                Ok(resp)
            })
            .collect()
    }
}

impl Predictor for ExternalPredictor {
    fn predict(&mut self, scene_id: &str, requests: &[PredictorRequest]) -> Result<Vec<PredictorResponse>> {
        if self.dead {
            return Err(Error::ChildExit(format!("`{}` is no longer running", self.command)));
        }
        self.exchange(scene_id, requests).map_err(|e| match e {
            // The stream position is unknown after these; the child is unusable.
            Error::Timeout(_) | Error::Protocol(_) | Error::ChildExit(_) => self.fail(e),
            other => other,
        })
    }
}

impl Drop for ExternalPredictor {
    fn drop(&mut self) {
        self.shutdown();
    }
}

/// Misbehaviours the loopback server can simulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopbackFault {
    NoHandshake,
    DropTrajectory,
    BadProbs,
    Silent,
    Garbage,
}

impl std::str::FromStr for LoopbackFault {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "no-handshake" => Self::NoHandshake,
            "drop-trajectory" => Self::DropTrajectory,
            "bad-probs" => Self::BadProbs,
            "silent" => Self::Silent,
            "garbage" => Self::Garbage,
            _ => return Err(Error::InvalidParams(format!("unknown fault `{s}`"))),
        })
    }
}

/// Reference server: answers every frame with the constant-acceleration
/// model, optionally misbehaving. Returns when stdin closes.
pub fn serve_loopback(
    input: impl BufRead,
    mut output: impl Write,
    fault: Option<LoopbackFault>,
) -> Result<()> {
    let io_err = |e| Error::io("<stdout>", e);
    if fault == Some(LoopbackFault::NoHandshake) {
        eprintln!("loopback: refusing to shake hands");
        return Err(Error::Protocol("handshake refused".into()));
    }
    writeln!(output, "{}", serde_json::to_string(&Message::Ready { protocol: PROTOCOL_VERSION })?)
        .and_then(|_| output.flush())
        .map_err(io_err)?;

    for line in input.lines() {
        let line = line.map_err(|e| Error::io("<stdin>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (scene_id, frames) = match serde_json::from_str(&line)? {
            Message::Predict { scene_id, frames } => (scene_id, frames),
            other => return Err(Error::Protocol(format!("unexpected message {other:?}"))),
        };
        match fault {
            Some(LoopbackFault::Silent) => {
                thread::sleep(Duration::from_secs(3600));
                continue;
            }
            Some(LoopbackFault::Garbage) => {
                writeln!(output, "this is not json").and_then(|_| output.flush()).map_err(io_err)?;
                continue;
            }
            _ => {}
        }
        let mut answers = Vec::with_capacity(frames.len());
        for f in frames {
            let scene = Scene::from_json_value(f.scene)?;
            let resp = predict_ca(&scene, f.k)?;
            let mut trajectories: Vec<Vec<[f64; 2]>> = resp
                .trajectories
                .iter()
                .map(|t| t.iter().map(|p| [p.x, p.y]).collect())
                .collect();
            let mut probs = resp.probs;
            match fault {
                Some(LoopbackFault::DropTrajectory) => {
                    trajectories.pop();
                    probs.pop();
                }
                Some(LoopbackFault::BadProbs) => probs.iter_mut().for_each(|p| *p *= 0.8),
                _ => {}
            }
            answers.push(FrameResponse {
                frame_index: f.frame_index,
                trajectories,
                probs,
            });
        }
        let reply = Message::Prediction {
            scene_id,
            frames: answers,
        };
        writeln!(output, "{}", serde_json::to_string(&reply)?)
            .and_then(|_| output.flush())
            .map_err(io_err)?;
    }
    Ok(())
}
