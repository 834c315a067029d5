//! Running external programs as components. A single long-lived helper
//! process (the broker) spawns one child per request, so the main process
//! never forks while holding its own locks and threads.

mod broker;
mod external;
mod helper;
pub mod protocol;

use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

use crate::model::Violation;
use crate::storage::StorageError;

pub use broker::{
    start_broker, Broker, BrokerConfig, ExecRequest, ExecResult, LogEntry, LogOutcome, BROKER_BIN,
    BROKER_ENV,
};
pub use external::{build_argv, wrap_external_component, WrapperComponent, DEFAULT_TIMEOUT};
pub use helper::serve_broker;

/// The helper itself could not be brought up.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum BrokerError {
    #[error("cannot start broker {}: {message}", path.display())]
    Spawn { path: PathBuf, message: String },
    #[error("broker is not responding: {0}")]
    Unresponsive(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("timed out after {:.3}s; child {pid} was killed", after.as_secs_f64())]
    Timeout { pid: u32, after: Duration },
    #[error("exited with status {code}: {}", stderr.trim())]
    NonZeroExit { code: i32, stderr: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("cannot start command: {0}")]
    Spawn(String),
    #[error("broker went down: {0}")]
    BrokerDown(String),
    #[error(transparent)]
    Broker(#[from] BrokerError),
}

#[derive(Debug, Error)]
pub enum WrapperError {
    #[error("component {0:?} is not a wrapper")]
    NotAWrapper(String),
    #[error("command template is empty")]
    EmptyCommand,
    #[error("command template refers to unbound parameter {0:?}")]
    UnboundPlaceholder(String),
    #[error("document cannot be sent: {0}")]
    InvalidInput(StorageError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error("wrapper returned an unreadable document: {0}")]
    BadOutput(String),
    #[error("wrapper returned an invalid document ({} violations)", .0.len())]
    ValidationFailed(Vec<Violation>),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::component::{resolve_parameters, ParamKind, ParameterSpec, SuppliedParams};

    fn params(pairs: &[(&str, &str)]) -> crate::component::BoundParams {
        let specs: Vec<_> = pairs
            .iter()
            .map(|(n, _)| ParameterSpec::required(*n, ParamKind::String))
            .collect();
        let supplied: SuppliedParams = pairs
            .iter()
            .map(|(n, v)| (n.to_string(), serde_json::json!(v)))
            .collect();
        resolve_parameters(&specs, &supplied).unwrap()
    }

    #[test]
    fn placeholders_do_not_word_split() {
        let p = params(&[("lexicon", "/tmp/my lex.txt"), ("mode", "fast")]);
        let argv = build_argv("tagger --lex {lexicon} --mode={mode}", &p).unwrap();
        assert_eq!(argv, ["tagger", "--lex", "/tmp/my lex.txt", "--mode=fast"]);
    }

    #[test]
    fn unbound_placeholder_is_an_error() {
        let p = params(&[]);
        assert!(matches!(
            build_argv("x {missing}", &p),
            Err(WrapperError::UnboundPlaceholder(n)) if n == "missing"
        ));
        assert!(matches!(build_argv("   ", &p), Err(WrapperError::EmptyCommand)));
    }

    #[test]
    fn serve_loop_answers_ping_and_bad_frames() {
        let input = b"{\"req\":1,\"ping\":true}\nnot json\n{\"req\":4,\"argv\":[]}\n";
        let mut out = Vec::new();
        serve_broker(&input[..], &mut out).unwrap();
        let frames: Vec<protocol::ResponseFrame> = String::from_utf8(out)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(frames.len(), 3);
        assert!(frames[0].pong);
        assert_eq!(frames[1].error.as_ref().unwrap().kind, protocol::FrameErrorKind::Request);
        assert_eq!(frames[2].req, 4);
        assert_eq!(frames[2].error.as_ref().unwrap().kind, protocol::FrameErrorKind::Request);
    }

    #[test]
    fn serve_loop_runs_a_child() {
        let req = r#"{"req":7,"argv":["cat"],"timeout":5,"doc":{"a": [1, 2]}}"#;
        let mut out = Vec::new();
        serve_broker(format!("{req}\n").as_bytes(), &mut out).unwrap();
        let f: protocol::ResponseFrame = serde_json::from_slice(&out).unwrap();
        assert_eq!(f.exit, Some(0));
        assert_eq!(f.doc.unwrap().get(), r#"{"a": [1, 2]}"#);
        assert!(f.pid.is_some());
    }

    #[test]
    fn serve_loop_reports_spawn_failure() {
        let req = r#"{"req":2,"argv":["/nonexistent/tool"],"timeout":5}"#;
        let mut out = Vec::new();
        serve_broker(format!("{req}\n").as_bytes(), &mut out).unwrap();
        let f: protocol::ResponseFrame = serde_json::from_slice(&out).unwrap();
        assert_eq!(f.error.unwrap().kind, protocol::FrameErrorKind::Spawn);
    }
}
