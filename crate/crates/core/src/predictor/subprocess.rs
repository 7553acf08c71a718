//! Client for an external predictor process.
//!
//! One child process serves every caller. Requests are written under a lock,
//! at most `max_in_flight` are outstanding at once, and a reader thread
//! routes replies to their waiting callers by id, so replies may arrive in
//! any order.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use super::protocol::{Handshake, Reply, Request, PROTOCOL_VERSION};
use super::{Predictor, TagScores};
use crate::audio::AudioClip;
use crate::error::{Error, Result};

type Outcome = std::result::Result<BTreeMap<String, f64>, String>;

#[derive(Default)]
struct Router {
    pending: HashMap<u64, Sender<Outcome>>,
    /// Set once the child's stdout is closed or unreadable.
    dead: Option<String>,
}

struct Shared {
    router: Mutex<Router>,
    slot_freed: Condvar,
    max_in_flight: usize,
}

impl Shared {
    /// Removes a pending request, freeing its slot. Returns the sender if the
    /// request was still pending.
    fn take(&self, id: u64) -> Option<Sender<Outcome>> {
        let mut router = self.router.lock().unwrap();
        let tx = router.pending.remove(&id);
        if tx.is_some() {
            self.slot_freed.notify_all();
        }
        tx
    }

    fn fail_all(&self, reason: String) {
        let mut router = self.router.lock().unwrap();
        for (_, tx) in router.pending.drain() {
            let _ = tx.send(Err(reason.clone()));
        }
        router.dead = Some(reason);
        self.slot_freed.notify_all();
    }
}

pub struct SubprocessPredictor {
    command: String,
    handshake: Handshake,
    shared: Arc<Shared>,
    stdin: Mutex<Option<BufWriter<ChildStdin>>>,
    child: Mutex<Child>,
    reader: Option<JoinHandle<()>>,
    next_id: AtomicU64,
    timeout: Duration,
}

impl std::fmt::Debug for SubprocessPredictor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SubprocessPredictor")
            .field("command", &self.command)
            .field("handshake", &self.handshake)
            .finish()
    }
}

fn shell(command: &str) -> Command {
    if cfg!(windows) {
        let mut c = Command::new("cmd");
        c.args(["/C", command]);
        c
    } else {
        let mut c = Command::new("sh");
        c.args(["-c", command]);
        c
    }
}

impl SubprocessPredictor {
    /// Starts `command` through the shell and waits up to `timeout` for its
    /// handshake line.
    pub fn spawn(command: &str, max_in_flight: usize, timeout: Duration) -> Result<Self> {
        if max_in_flight == 0 {
            return Err(Error::arg("max_in_flight", "must be at least 1"));
        }
        let mut child = shell(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Predictor(format!("cannot start '{command}': {e}")))?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");

        let shared = Arc::new(Shared {
            router: Mutex::new(Router::default()),
            slot_freed: Condvar::new(),
            max_in_flight,
        });
        let (hs_tx, hs_rx) = mpsc::channel::<std::result::Result<String, String>>();
        let reader_shared = shared.clone();
        let reader = std::thread::Builder::new()
            .name("predictor-reader".into())
            .spawn(move || read_loop(BufReader::new(stdout), hs_tx, reader_shared))
            .map_err(|e| Error::Predictor(format!("cannot start reader thread: {e}")))?;

        let mut this = Self {
            command: command.to_string(),
            handshake: Handshake {
                protocol: 0,
                input_rate: 0,
                input_length: 0,
                tags: vec![],
            },
            shared,
            stdin: Mutex::new(Some(BufWriter::new(stdin))),
            child: Mutex::new(child),
            reader: Some(reader),
            next_id: AtomicU64::new(0),
            timeout,
        };

        let line = match hs_rx.recv_timeout(timeout) {
            Ok(Ok(line)) => line,
            Ok(Err(e)) => return Err(Error::Predictor(format!("handshake: {e}"))),
            Err(_) => {
                return Err(Error::Predictor(format!(
                    "handshake: no reply from '{command}' within {timeout:?}"
                )))
            }
        };
        let hs: Handshake = serde_json::from_str(&line)
            .map_err(|e| Error::Predictor(format!("handshake: malformed line {line:?}: {e}")))?;
        if hs.protocol != PROTOCOL_VERSION {
            return Err(Error::Predictor(format!(
                "handshake: protocol {} unsupported (expected {PROTOCOL_VERSION})",
                hs.protocol
            )));
        }
        if hs.input_rate == 0 || hs.input_length == 0 || hs.tags.is_empty() {
            return Err(Error::Predictor(format!(
                "handshake: input_rate, input_length and tags must be nonempty/positive, got {hs:?}"
            )));
        }
        this.handshake = hs;
        Ok(this)
    }

    pub fn handshake(&self) -> &Handshake {
        &self.handshake
    }

    /// Sends one request and returns the channel its reply will arrive on.
    fn submit(&self, clip: &AudioClip) -> Result<(u64, Receiver<Outcome>)> {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let (tx, rx) = mpsc::channel();
        {
            let mut router = self.shared.router.lock().unwrap();
            loop {
                if let Some(reason) = &router.dead {
                    return Err(Error::PredictorRequest {
                        id,
                        message: reason.clone(),
                    });
                }
                if router.pending.len() < self.shared.max_in_flight {
                    break;
                }
                router = self.shared.slot_freed.wait(router).unwrap();
            }
            router.pending.insert(id, tx);
        }
        let mut line = serde_json::to_string(&Request::new(id, clip))?;
        line.push('\n');
        let written = {
            let mut stdin = self.stdin.lock().unwrap();
            match stdin.as_mut() {
                Some(w) => w.write_all(line.as_bytes()).and_then(|_| w.flush()),
                None => Err(std::io::Error::other("predictor is shut down")),
            }
        };
        if let Err(e) = written {
            self.shared.take(id);
            return Err(Error::PredictorRequest {
                id,
                message: format!("writing request: {e}"),
            });
        }
        Ok((id, rx))
    }

    fn wait(&self, id: u64, rx: Receiver<Outcome>, deadline: Instant) -> Result<TagScores> {
        let remaining = deadline.saturating_duration_since(Instant::now());
        let outcome = match rx.recv_timeout(remaining) {
            Ok(o) => o,
            Err(RecvTimeoutError::Timeout) => {
                // the reply may have raced in between the timeout and take()
                if self.shared.take(id).is_some() {
                    Err(format!("no reply within {:?}", self.timeout))
                } else {
                    rx.try_recv().unwrap_or_else(|_| Err("reply lost".into()))
                }
            }
            Err(RecvTimeoutError::Disconnected) => Err("predictor connection closed".into()),
        };
        let raw = outcome.map_err(|message| Error::PredictorRequest { id, message })?;
        self.to_scores(id, raw)
    }

    fn to_scores(&self, id: u64, raw: BTreeMap<String, f64>) -> Result<TagScores> {
        let mut clamped = BTreeMap::new();
        for (tag, s) in raw {
            if !s.is_finite() {
                return Err(Error::PredictorRequest {
                    id,
                    message: format!("score for '{tag}' is not finite"),
                });
            }
            if !(0.0..=1.0).contains(&s) {
                log::warn!("predictor request {id}: score {s} for '{tag}' clamped to [0, 1]");
            }
            clamped.insert(tag, s.clamp(0.0, 1.0));
        }
        TagScores::new(clamped).map_err(|e| Error::PredictorRequest {
            id,
            message: e.to_string(),
        })
    }
}

fn read_loop(
    mut stdout: BufReader<std::process::ChildStdout>,
    handshake: Sender<std::result::Result<String, String>>,
    shared: Arc<Shared>,
) {
    let mut first = true;
    let mut line = String::new();
    loop {
        line.clear();
        match stdout.read_line(&mut line) {
            Ok(0) => {
                if first {
                    let _ = handshake.send(Err("child closed stdout before handshake".into()));
                }
                shared.fail_all("predictor process exited".into());
                return;
            }
            Ok(_) => {}
            Err(e) => {
                if first {
                    let _ = handshake.send(Err(format!("reading stdout: {e}")));
                }
                shared.fail_all(format!("reading predictor output: {e}"));
                return;
            }
        }
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if first {
            first = false;
            let _ = handshake.send(Ok(text.to_string()));
            continue;
        }
        match serde_json::from_str::<Reply>(text) {
            Ok(reply) => {
                let id = reply.id();
                match shared.take(id) {
                    Some(tx) => {
                        let outcome = match reply {
                            Reply::Scores { scores, .. } => Ok(scores),
                            Reply::Error { error, .. } => Err(format!("predictor error: {error}")),
                        };
                        let _ = tx.send(outcome);
                    }
                    None => log::warn!("predictor replied to unknown or expired request {id}"),
                }
            }
            Err(e) => {
                // without an id the reply cannot be matched; the stream is unusable
                shared.fail_all(format!("malformed reply {text:?}: {e}"));
                return;
            }
        }
    }
}

impl Predictor for SubprocessPredictor {
    fn tags(&self) -> &[String] {
        &self.handshake.tags
    }

    fn input_rate(&self) -> u32 {
        self.handshake.input_rate
    }

    fn input_length(&self) -> usize {
        self.handshake.input_length
    }

    /// Pipelines the whole batch, keeping at most `max_in_flight` requests
    /// outstanding.
    fn score_batch(&self, clips: &[AudioClip]) -> Result<Vec<TagScores>> {
        let mut waiting = std::collections::VecDeque::new();
        let mut out = Vec::with_capacity(clips.len());
        for clip in clips {
            // drain our own oldest request first so a full window cannot
            // deadlock a single caller
            if waiting.len() >= self.shared.max_in_flight {
                let (id, rx, deadline) = waiting.pop_front().unwrap();
                out.push(self.wait(id, rx, deadline)?);
            }
            let (id, rx) = self.submit(clip)?;
            waiting.push_back((id, rx, Instant::now() + self.timeout));
        }
        for (id, rx, deadline) in waiting {
            out.push(self.wait(id, rx, deadline)?);
        }
        Ok(out)
    }

    fn describe(&self) -> String {
        format!("subprocess({})", self.command)
    }
}

impl Drop for SubprocessPredictor {
    fn drop(&mut self) {
        // closing stdin asks the child to exit
        self.stdin.lock().unwrap().take();
        let mut child = self.child.lock().unwrap();
        let deadline = Instant::now() + Duration::from_secs(2);
        loop {
            match child.try_wait() {
                Ok(Some(_)) => break,
                Ok(None) if Instant::now() < deadline => {
                    std::thread::sleep(Duration::from_millis(10))
                }
                _ => {
                    let _ = child.kill();
                    let _ = child.wait();
                    break;
                }
            }
        }
        drop(child);
        if let Some(h) = self.reader.take() {
            let _ = h.join();
        }
    }
}
