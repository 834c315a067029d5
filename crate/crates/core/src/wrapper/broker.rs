//! Client side: owns the long-lived helper process and funnels execution
//! requests through it.

use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use parking_lot::Mutex;
use serde_json::value::RawValue;

use super::protocol::{FrameErrorKind, RequestFrame, ResponseFrame};
use super::{BrokerError, ExecError};

pub const BROKER_ENV: &str = "ANNOTIUM_BROKER";
pub const BROKER_BIN: &str = "annotium-broker";

#[derive(Clone, Debug)]
pub struct BrokerConfig {
    pub program: PathBuf,
    pub args: Vec<String>,
    /// How long the helper gets to answer its first ping.
    pub startup_timeout: Duration,
    /// Extra time allowed on top of a request's own timeout before the
    /// helper is considered hung.
    pub grace: Duration,
}

impl BrokerConfig {
    pub fn new(program: impl Into<PathBuf>) -> Self {
        BrokerConfig {
            program: program.into(),
            args: Vec::new(),
            startup_timeout: Duration::from_secs(5),
            grace: Duration::from_secs(5),
        }
    }

    pub fn with_args<I, S>(mut self, args: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.args = args.into_iter().map(Into::into).collect();
        self
    }

    /// `$ANNOTIUM_BROKER`, else an `annotium-broker` binary next to the
    /// running executable (or one directory up, for test binaries).
    pub fn locate() -> Option<Self> {
        if let Some(p) = std::env::var_os(BROKER_ENV) {
            return Some(Self::new(p));
        }
        let exe = std::env::current_exe().ok()?;
        let mut dir = exe.parent();
        for _ in 0..2 {
            let d = dir?;
            let candidate = d.join(BROKER_BIN);
            if candidate.is_file() {
                return Some(Self::new(candidate));
            }
            dir = d.parent();
        }
        None
    }
}

#[derive(Clone, Debug)]
pub struct ExecRequest {
    pub argv: Vec<String>,
    /// Interchange bytes fed to the child's standard input.
    pub input: Vec<u8>,
    pub timeout: Duration,
}

#[derive(Clone, Debug)]
pub struct ExecResult {
    pub exit_code: i32,
    /// Interchange bytes the child wrote to standard output.
    pub output: Vec<u8>,
    pub stderr: String,
    pub wall_time: Duration,
    pub pid: u32,
    pub broker_pid: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LogOutcome {
    Ok,
    Failed(String),
}

#[derive(Clone, Debug)]
pub struct LogEntry {
    pub req: u64,
    pub argv: Vec<String>,
    pub broker_pid: Option<u32>,
    pub outcome: LogOutcome,
}

struct Helper {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Helper {
    fn pid(&self) -> u32 {
        self.child.id()
    }

    fn alive(&mut self) -> bool {
        matches!(self.child.try_wait(), Ok(None))
    }

    fn send(&mut self, frame: &RequestFrame) -> Result<(), String> {
        let mut line = serde_json::to_vec(frame).map_err(|e| e.to_string())?;
        line.push(b'\n');
        self.stdin
            .write_all(&line)
            .and_then(|_| self.stdin.flush())
            .map_err(|e| format!("write to broker failed: {e}"))
    }

    /// Reads frames until the one answering `req` arrives. Stale frames from
    /// an earlier, abandoned request are skipped.
    fn receive(&mut self, req: u64, deadline: Instant) -> Result<ResponseFrame, Failure> {
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            let line = match self.lines.recv_timeout(left) {
                Ok(Ok(line)) => line,
                Ok(Err(e)) => return Err(Failure::Down(format!("read from broker failed: {e}"))),
                Err(RecvTimeoutError::Timeout) => {
                    return Err(Failure::Down("broker did not answer in time".into()))
                }
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(Failure::Down("broker closed its output".into()))
                }
            };
            let frame: ResponseFrame = serde_json::from_str(&line)
                .map_err(|e| Failure::Protocol(format!("bad frame from broker: {e}")))?;
            if frame.req == req {
                return Ok(frame);
            }
        }
    }

    fn shutdown(mut self) {
        drop(self.stdin);
        let deadline = Instant::now() + Duration::from_millis(500);
        while Instant::now() < deadline {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(5));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

enum Failure {
    /// The helper is gone or hung; worth one restart.
    Down(String),
    Protocol(String),
}

/// Handle to the helper process. Cheap to share behind an `Arc`; requests
/// are serialized.
pub struct Broker {
    config: BrokerConfig,
    helper: Mutex<Option<Helper>>,
    counter: Mutex<u64>,
    log: Mutex<Vec<LogEntry>>,
}

impl std::fmt::Debug for Broker {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Broker")
            .field("program", &self.config.program)
            .finish_non_exhaustive()
    }
}

impl Broker {
    pub fn new(config: BrokerConfig) -> Self {
        Broker {
            config,
            helper: Mutex::new(None),
            counter: Mutex::new(0),
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn config(&self) -> &BrokerConfig {
        &self.config
    }

    /// Starts the helper if it is not already running and returns its pid.
    pub fn start(&self) -> Result<u32, BrokerError> {
        let mut slot = self.helper.lock();
        self.ensure(&mut slot)
    }

    /// Pid of the running helper, if any.
    pub fn helper_pid(&self) -> Option<u32> {
        let mut slot = self.helper.lock();
        let h = slot.as_mut()?;
        h.alive().then(|| h.pid())
    }

    /// Number of request ids handed out so far.
    pub fn requests_issued(&self) -> u64 {
        *self.counter.lock()
    }

    pub fn log(&self) -> Vec<LogEntry> {
        self.log.lock().clone()
    }

    pub fn shutdown(&self) {
        if let Some(h) = self.helper.lock().take() {
            h.shutdown();
        }
    }

    fn next_req(&self) -> u64 {
        let mut c = self.counter.lock();
        *c += 1;
        *c
    }

    fn ensure(&self, slot: &mut Option<Helper>) -> Result<u32, BrokerError> {
        if let Some(h) = slot.as_mut() {
            if h.alive() {
                return Ok(h.pid());
            }
        }
        if let Some(old) = slot.take() {
            old.shutdown();
        }
        let mut helper = self.spawn()?;
        let req = self.next_req();
        let ping = RequestFrame {
            req,
            ping: true,
            argv: Vec::new(),
            timeout: 0.0,
            doc: None,
        };
        let deadline = Instant::now() + self.config.startup_timeout;
        let answered = helper
            .send(&ping)
            .map_err(Failure::Down)
            .and_then(|_| helper.receive(req, deadline));
        match answered {
            Ok(frame) if frame.pong => {
                let pid = helper.pid();
                *slot = Some(helper);
                Ok(pid)
            }
            Ok(_) => {
                helper.shutdown();
                Err(BrokerError::Unresponsive("ping was not answered with pong".into()))
            }
            Err(Failure::Down(m)) | Err(Failure::Protocol(m)) => {
                helper.shutdown();
                Err(BrokerError::Unresponsive(m))
            }
        }
    }

    fn spawn(&self) -> Result<Helper, BrokerError> {
        let program = &self.config.program;
        let mut child = Command::new(program)
            .args(&self.config.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| BrokerError::Spawn {
                path: program.clone(),
                message: e.to_string(),
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::Builder::new()
            .name("broker-reader".into())
            .spawn(move || {
                for line in BufReader::new(stdout).lines() {
                    let stop = line.is_err();
                    if tx.send(line).is_err() || stop {
                        break;
                    }
                }
            })
            .map_err(|e| BrokerError::Spawn {
                path: program.clone(),
                message: e.to_string(),
            })?;
        Ok(Helper {
            child,
            stdin,
            lines: rx,
        })
    }

    /// Runs one command through the helper. If the helper has died or hangs
    /// it is restarted once and the request resent.
    pub fn exec(&self, request: &ExecRequest) -> Result<ExecResult, ExecError> {
        let doc = if request.input.is_empty() {
            None
        } else {
            let text = String::from_utf8(request.input.clone())
                .map_err(|e| ExecError::Protocol(format!("input is not UTF-8: {e}")))?;
            Some(
                RawValue::from_string(text)
                    .map_err(|e| ExecError::Protocol(format!("input is not JSON: {e}")))?,
            )
        };
        let mut slot = self.helper.lock();
        let mut last_down = String::new();
        for _attempt in 0..2 {
            self.ensure(&mut slot).map_err(|e| self.logged_start_failure(request, e))?;
            let helper = slot.as_mut().expect("helper running");
            let broker_pid = helper.pid();
            let req = self.next_req();
            let frame = RequestFrame {
                req,
                ping: false,
                argv: request.argv.clone(),
                timeout: request.timeout.as_secs_f64(),
                doc: doc.clone(),
            };
            let deadline = Instant::now() + request.timeout + self.config.grace;
            let result = helper
                .send(&frame)
                .map_err(Failure::Down)
                .and_then(|_| helper.receive(req, deadline));
            match result {
                Ok(resp) => {
                    let outcome = interpret(resp, request);
                    self.record(req, request, Some(broker_pid), &outcome);
                    return outcome;
                }
                Err(Failure::Protocol(m)) => {
                    let err = ExecError::Protocol(m);
                    self.record(req, request, Some(broker_pid), &Err(err.clone()));
                    return Err(err);
                }
                Err(Failure::Down(m)) => {
                    tracing::warn!(broker_pid, "broker down: {m}; restarting");
                    self.record(req, request, Some(broker_pid), &Err(ExecError::BrokerDown(m.clone())));
                    if let Some(h) = slot.take() {
                        h.shutdown();
                    }
                    last_down = m;
                }
            }
        }
        Err(ExecError::BrokerDown(last_down))
    }

    fn logged_start_failure(&self, request: &ExecRequest, e: BrokerError) -> ExecError {
        let err = ExecError::Broker(e);
        self.log.lock().push(LogEntry {
            req: 0,
            argv: request.argv.clone(),
            broker_pid: None,
            outcome: LogOutcome::Failed(err.to_string()),
        });
        err
    }

    fn record(
        &self,
        req: u64,
        request: &ExecRequest,
        broker_pid: Option<u32>,
        outcome: &Result<ExecResult, ExecError>,
    ) {
        self.log.lock().push(LogEntry {
            req,
            argv: request.argv.clone(),
            broker_pid,
            outcome: match outcome {
                Ok(_) => LogOutcome::Ok,
                Err(e) => LogOutcome::Failed(e.to_string()),
            },
        });
    }
}

impl Drop for Broker {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn interpret(resp: ResponseFrame, request: &ExecRequest) -> Result<ExecResult, ExecError> {
    if let Some(err) = resp.error {
        return Err(match err.kind {
            FrameErrorKind::Timeout => ExecError::Timeout {
                pid: resp.pid.unwrap_or(0),
                after: request.timeout,
            },
            FrameErrorKind::Spawn => ExecError::Spawn(err.detail),
            FrameErrorKind::Protocol | FrameErrorKind::Request => ExecError::Protocol(err.detail),
        });
    }
    let exit_code = resp
        .exit
        .ok_or_else(|| ExecError::Protocol("response carries no exit status".into()))?;
    if exit_code != 0 {
        return Err(ExecError::NonZeroExit {
            code: exit_code,
            stderr: resp.stderr,
        });
    }
    let output = resp
        .doc
        .ok_or_else(|| ExecError::Protocol("response carries no document".into()))?;
    Ok(ExecResult {
        exit_code,
        output: output.get().as_bytes().to_vec(),
        stderr: resp.stderr,
        wall_time: Duration::from_secs_f64(resp.wall_ms / 1000.0),
        pid: resp.pid.unwrap_or(0),
        broker_pid: resp.broker_pid,
    })
}

/// Starts a helper from `config` and waits for it to answer.
pub fn start_broker(config: BrokerConfig) -> Result<Broker, BrokerError> {
    let broker = Broker::new(config);
    broker.start()?;
    Ok(broker)
}
