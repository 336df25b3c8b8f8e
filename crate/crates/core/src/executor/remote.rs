use std::io::{self, BufRead, BufReader, Read, Write};
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use super::wire::{to_line, Hello, Request, Response, WireProgram, PROTOCOL_VERSION};
use super::{ExecError, ExecErrorKind, Executor};
use crate::dsl::RenderParams;
use crate::model::{Program, VisualState};
use crate::raster::Raster;

/// Generous enough for real path-traced renders.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

fn render_request(id: u64, programs: &[Program], params: &RenderParams) -> Request {
    Request::Render {
        id,
        programs: programs
            .iter()
            .map(|p| WireProgram {
                domain: p.domain(),
                source: p.source().to_string(),
            })
            .collect(),
        width: params.width,
        height: params.height,
        seed: params.seed,
    }
}

fn check_hello(line: &str) -> Result<Hello, ExecError> {
    let hello: Hello = serde_json::from_str(line)
        .map_err(|e| ExecError::protocol(format!("bad handshake reply `{}`: {e}", line.trim())))?;
    if hello.op != "hello" {
        return Err(ExecError::protocol(format!("expected hello, got op `{}`", hello.op)));
    }
    if hello.protocol != PROTOCOL_VERSION {
        return Err(ExecError::protocol(format!(
            "server speaks protocol {}, client speaks {PROTOCOL_VERSION}",
            hello.protocol
        )));
    }
    Ok(hello)
}

/// One stream-based executor connection. Requests are serialized; the
/// connection is marked broken after any protocol failure or timeout, since a
/// late reply would desynchronize the id sequence.
pub struct Connection {
    writer: Box<dyn Write + Send>,
    lines: Receiver<io::Result<String>>,
    next_id: u64,
    timeout: Duration,
    broken: bool,
    handshaken: bool,
    child: Option<Child>,
}

impl Connection {
    pub fn new<R, W>(reader: R, writer: W, timeout: Duration) -> Self
    where
        R: Read + Send + 'static,
        W: Write + Send + 'static,
    {
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(reader).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Self {
            writer: Box::new(writer),
            lines: rx,
            next_id: 1,
            timeout,
            broken: false,
            handshaken: false,
            child: None,
        }
    }

    /// Launches `sh -c <command>` and connects to its stdio.
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self, ExecError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| ExecError::internal(format!("failed to launch `{command}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut conn = Self::new(stdout, stdin, timeout);
        conn.child = Some(child);
        Ok(conn)
    }

    pub fn is_broken(&self) -> bool {
        self.broken
    }

    fn send(&mut self, line: &str) -> Result<(), ExecError> {
        let r = self
            .writer
            .write_all(line.as_bytes())
            .and_then(|_| self.writer.flush());
        r.map_err(|e| {
            self.broken = true;
            ExecError::protocol(format!("write to executor failed: {e}"))
        })
    }

    fn recv(&mut self) -> Result<String, ExecError> {
        loop {
            let line = match self.lines.recv_timeout(self.timeout) {
                Ok(Ok(line)) => line,
                Ok(Err(e)) => {
                    self.broken = true;
                    return Err(ExecError::protocol(format!("read from executor failed: {e}")));
                }
                Err(RecvTimeoutError::Timeout) => {
                    self.broken = true;
                    return Err(ExecError::new(
                        ExecErrorKind::Timeout,
                        format!("no reply within {:?}", self.timeout),
                    ));
                }
                Err(RecvTimeoutError::Disconnected) => {
                    self.broken = true;
                    return Err(ExecError::protocol("executor closed the stream"));
                }
            };
            if !line.trim().is_empty() {
                return Ok(line);
            }
        }
    }

    pub fn handshake(&mut self) -> Result<Hello, ExecError> {
        self.send(&to_line(&Hello::new(&["render"])))?;
        let line = self.recv()?;
        let hello = check_hello(&line).inspect_err(|_| self.broken = true)?;
        self.handshaken = true;
        Ok(hello)
    }

    pub fn render(&mut self, programs: &[Program], params: &RenderParams) -> Result<Raster, ExecError> {
        if self.broken {
            return Err(ExecError::protocol("connection is broken"));
        }
        if !self.handshaken {
            return Err(ExecError::protocol("handshake not completed"));
        }
        let id = self.next_id;
        self.next_id += 1;
        self.send(&to_line(&render_request(id, programs, params)))?;
        let line = self.recv()?;
        let resp: Response = serde_json::from_str(&line).map_err(|e| {
            self.broken = true;
            ExecError::protocol(format!("malformed response frame: {e}"))
        })?;
        let result = resp.into_result(id);
        if let Err(e) = &result {
            if matches!(e.kind, ExecErrorKind::Protocol | ExecErrorKind::Timeout) {
                self.broken = true;
            }
        }
        result
    }
}

impl Drop for Connection {
    fn drop(&mut self) {
        if let Some(child) = &mut self.child {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

/// Executor backed by a pool of subprocesses speaking the wire protocol over
/// stdio. Broken connections are replaced on the next request.
pub struct SubprocessExecutor {
    command: String,
    slots: Vec<Mutex<Option<Connection>>>,
    next: AtomicUsize,
    timeout: Duration,
}

impl SubprocessExecutor {
    pub fn new(command: impl Into<String>, pool: usize) -> Self {
        Self {
            command: command.into(),
            slots: (0..pool.max(1)).map(|_| Mutex::new(None)).collect(),
            next: AtomicUsize::new(0),
            timeout: DEFAULT_TIMEOUT,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }
}

impl Executor for SubprocessExecutor {
    fn execute(&self, programs: &[Program], params: &RenderParams) -> Result<VisualState, ExecError> {
        if programs.is_empty() {
            return Err(ExecError::internal("no programs to execute"));
        }
        let slot = self.next.fetch_add(1, Ordering::Relaxed) % self.slots.len();
        let mut guard = self.slots[slot]
            .lock()
            .map_err(|_| ExecError::internal("connection lock poisoned"))?;
        if guard.as_ref().is_none_or(Connection::is_broken) {
            *guard = None;
            let mut conn = Connection::spawn(&self.command, self.timeout)?;
            conn.handshake()?;
            *guard = Some(conn);
        }
        let conn = guard.as_mut().expect("connection present");
        let result = conn.render(programs, params);
        if conn.is_broken() {
            *guard = None;
        }
        Ok(VisualState {
            image: result?,
            seed: params.seed,
            program_ids: programs.iter().map(|p| p.id().to_string()).collect(),
        })
    }
}

/// Executor reached with `POST <base>/render`, one JSON message per request.
pub struct HttpExecutor {
    endpoint: String,
    agent: ureq::Agent,
    timeout: Duration,
    handshaken: Mutex<bool>,
    next_id: AtomicU64,
}

impl HttpExecutor {
    pub fn new(url: impl Into<String>) -> Self {
        let url = url.into();
        let endpoint = if url.trim_end_matches('/').ends_with("/render") {
            url
        } else {
            format!("{}/render", url.trim_end_matches('/'))
        };
        let mut me = Self {
            endpoint,
            agent: ureq::Agent::new_with_defaults(),
            timeout: DEFAULT_TIMEOUT,
            handshaken: Mutex::new(false),
            next_id: AtomicU64::new(1),
        };
        me.rebuild_agent();
        me
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self.rebuild_agent();
        self
    }

    fn rebuild_agent(&mut self) {
        self.agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .http_status_as_error(false)
            .build()
            .into();
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn post(&self, body: &str) -> Result<String, ExecError> {
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .header("Content-Type", "application/json")
            .send(body)
            .map_err(transport_error)?;
        resp.body_mut()
            .with_config()
            .limit(256 * 1024 * 1024)
            .read_to_string()
            .map_err(transport_error)
    }

    fn ensure_handshake(&self) -> Result<(), ExecError> {
        let mut done = self
            .handshaken
            .lock()
            .map_err(|_| ExecError::internal("handshake lock poisoned"))?;
        if !*done {
            let reply = self.post(&to_line(&Hello::new(&["render"])))?;
            check_hello(&reply)?;
            *done = true;
        }
        Ok(())
    }
}

fn transport_error(e: ureq::Error) -> ExecError {
    match e {
        ureq::Error::Timeout(t) => ExecError::new(ExecErrorKind::Timeout, format!("timed out: {t}")),
        other => ExecError::protocol(format!("http transport: {other}")),
    }
}

impl Executor for HttpExecutor {
    fn execute(&self, programs: &[Program], params: &RenderParams) -> Result<VisualState, ExecError> {
        if programs.is_empty() {
            return Err(ExecError::internal("no programs to execute"));
        }
        self.ensure_handshake()?;
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let reply = self.post(&to_line(&render_request(id, programs, params)))?;
        let resp: Response = serde_json::from_str(&reply)
            .map_err(|e| ExecError::protocol(format!("malformed response: {e}")))?;
        Ok(VisualState {
            image: resp.into_result(id)?,
            seed: params.seed,
            program_ids: programs.iter().map(|p| p.id().to_string()).collect(),
        })
    }
}
