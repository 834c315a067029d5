//! The broker side of the protocol. Runs inside the helper process: reads
//! request frames, runs one child per request and answers with a response
//! frame. Requests are handled strictly in arrival order.

use std::io::{self, BufRead, Read, Write};
use std::os::unix::process::CommandExt;
use std::process::{Child, Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde_json::value::RawValue;

use super::protocol::{minify_json, FrameError, FrameErrorKind, RequestFrame, ResponseFrame};

const POLL: Duration = Duration::from_millis(2);

/// Serves frames until `input` reaches end of file.
pub fn serve_broker<R: BufRead, W: Write>(input: R, mut output: W) -> io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = match serde_json::from_str::<RequestFrame>(&line) {
            Ok(req) => handle(req),
            Err(e) => {
                let req = serde_json::from_str::<serde_json::Value>(&line)
                    .ok()
                    .and_then(|v| v.get("req").and_then(|r| r.as_u64()))
                    .unwrap_or(0);
                failure(req, None, FrameErrorKind::Request, e.to_string(), Duration::ZERO)
            }
        };
        serde_json::to_writer(&mut output, &response)?;
        output.write_all(b"\n")?;
        output.flush()?;
    }
    Ok(())
}

fn failure(
    req: u64,
    pid: Option<u32>,
    kind: FrameErrorKind,
    detail: String,
    wall: Duration,
) -> ResponseFrame {
    ResponseFrame {
        req,
        pong: false,
        exit: None,
        stderr: String::new(),
        doc: None,
        error: Some(FrameError { kind, detail }),
        pid,
        broker_pid: std::process::id(),
        wall_ms: wall.as_secs_f64() * 1000.0,
    }
}

fn handle(req: RequestFrame) -> ResponseFrame {
    if req.ping {
        return ResponseFrame {
            req: req.req,
            pong: true,
            exit: None,
            stderr: String::new(),
            doc: None,
            error: None,
            pid: None,
            broker_pid: std::process::id(),
            wall_ms: 0.0,
        };
    }
    let started = Instant::now();
    let Some((program, args)) = req.argv.split_first() else {
        return failure(req.req, None, FrameErrorKind::Request, "empty argv".into(), Duration::ZERO);
    };
    if !(req.timeout.is_finite() && req.timeout > 0.0) {
        return failure(
            req.req,
            None,
            FrameErrorKind::Request,
            format!("invalid timeout {}", req.timeout),
            Duration::ZERO,
        );
    }
    let timeout = Duration::from_secs_f64(req.timeout);

    // Own process group so a timeout also takes down anything the child forked.
    let spawned = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .process_group(0)
        .spawn();
    let mut child = match spawned {
        Ok(c) => c,
        Err(e) => {
            return failure(
                req.req,
                None,
                FrameErrorKind::Spawn,
                format!("{program}: {e}"),
                started.elapsed(),
            )
        }
    };
    let pid = child.id();

    let input = req.doc.map(|d| d.get().to_owned()).unwrap_or_default();
    let mut stdin = child.stdin.take().expect("piped stdin");
    let writer = thread::spawn(move || {
        // The child may exit without reading; a broken pipe is not our error.
        let _ = stdin.write_all(input.as_bytes());
    });
    let stdout = drain(child.stdout.take().expect("piped stdout"));
    let stderr = drain(child.stderr.take().expect("piped stderr"));

    let status = wait_with_deadline(&mut child, started + timeout);
    let _ = writer.join();
    let Some(status) = status else {
        kill_group(pid);
        let _ = child.wait();
        let stderr = stderr.join().unwrap_or_default();
        let mut frame = failure(
            req.req,
            Some(pid),
            FrameErrorKind::Timeout,
            format!("killed after {:.3}s", timeout.as_secs_f64()),
            started.elapsed(),
        );
        frame.stderr = String::from_utf8_lossy(&stderr).into_owned();
        return frame;
    };
    // Stragglers the child left behind would otherwise hold the pipes open.
    kill_group(pid);
    let stdout = stdout.join().unwrap_or_default();
    let stderr = String::from_utf8_lossy(&stderr.join().unwrap_or_default()).into_owned();
    let wall = started.elapsed();
    let exit = status.code().unwrap_or_else(|| {
        use std::os::unix::process::ExitStatusExt;
        128 + status.signal().unwrap_or(0)
    });

    let mut frame = ResponseFrame {
        req: req.req,
        pong: false,
        exit: Some(exit),
        stderr,
        doc: None,
        error: None,
        pid: Some(pid),
        broker_pid: std::process::id(),
        wall_ms: wall.as_secs_f64() * 1000.0,
    };
    if exit == 0 {
        match parse_output(&stdout) {
            Ok(doc) => frame.doc = Some(doc),
            Err(detail) => {
                frame.error = Some(FrameError {
                    kind: FrameErrorKind::Protocol,
                    detail,
                })
            }
        }
    }
    frame
}

fn parse_output(stdout: &[u8]) -> Result<Box<RawValue>, String> {
    let text = std::str::from_utf8(stdout)
        .map_err(|e| format!("output is not UTF-8: {e}"))?
        .trim();
    if text.is_empty() {
        return Err("empty output".into());
    }
    let raw: Box<RawValue> =
        serde_json::from_str(text).map_err(|e| format!("output is not JSON: {e}"))?;
    if raw.get().contains('\n') {
        RawValue::from_string(minify_json(raw.get())).map_err(|e| e.to_string())
    } else {
        Ok(raw)
    }
}

fn drain<R: Read + Send + 'static>(mut r: R) -> thread::JoinHandle<Vec<u8>> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = r.read_to_end(&mut buf);
        buf
    })
}

fn wait_with_deadline(child: &mut Child, deadline: Instant) -> Option<std::process::ExitStatus> {
    loop {
        match child.try_wait() {
            Ok(Some(status)) => return Some(status),
            Ok(None) => {}
            Err(_) => return None,
        }
        let now = Instant::now();
        if now >= deadline {
            return None;
        }
        thread::sleep(POLL.min(deadline - now));
    }
}

fn kill_group(pid: u32) {
    // SAFETY: plain syscall; a stale group id only yields ESRCH.
    unsafe {
        libc::kill(-(pid as libc::pid_t), libc::SIGKILL);
    }
}
