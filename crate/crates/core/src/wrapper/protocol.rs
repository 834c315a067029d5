//! Frames exchanged with the broker helper: one JSON object per line on the
//! helper's standard input (requests) and standard output (responses).

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

#[derive(Debug, Serialize, Deserialize)]
pub struct RequestFrame {
    pub req: u64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub ping: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub argv: Vec<String>,
    /// Seconds.
    #[serde(default)]
    pub timeout: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc: Option<Box<RawValue>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameErrorKind {
    /// The child ran past its timeout and was killed.
    Timeout,
    /// The command could not be started.
    Spawn,
    /// The child exited 0 but its output is not a JSON document.
    Protocol,
    /// The request frame itself was malformed.
    Request,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameError {
    pub kind: FrameErrorKind,
    pub detail: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ResponseFrame {
    pub req: u64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub pong: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exit: Option<i32>,
    #[serde(default)]
    pub stderr: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc: Option<Box<RawValue>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<FrameError>,
    /// Process id of the child that ran the command.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pid: Option<u32>,
    pub broker_pid: u32,
    #[serde(default)]
    pub wall_ms: f64,
}

/// Removes insignificant whitespace so a JSON text fits on one frame line.
/// Input must already be valid JSON.
pub fn minify_json(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_string = false;
    let mut escaped = false;
    for c in text.chars() {
        if in_string {
            out.push(c);
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
        } else if c == '"' {
            in_string = true;
            out.push(c);
        } else if !c.is_whitespace() {
            out.push(c);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minify_keeps_string_contents() {
        let pretty = "{\n  \"text\": \"a b\\\" c\",\n  \"n\": [1, 2]\n}";
        assert_eq!(minify_json(pretty), r#"{"text":"a b\" c","n":[1,2]}"#);
    }

    #[test]
    fn request_frame_shape() {
        let doc = RawValue::from_string(r#"{"version":1}"#.into()).unwrap();
        let f = RequestFrame {
            req: 3,
            ping: false,
            argv: vec!["cat".into()],
            timeout: 1.5,
            doc: Some(doc),
        };
        assert_eq!(
            serde_json::to_string(&f).unwrap(),
            r#"{"req":3,"argv":["cat"],"timeout":1.5,"doc":{"version":1}}"#
        );
    }
}
