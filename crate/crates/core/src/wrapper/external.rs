use std::sync::Arc;
use std::time::Duration;

use crate::component::{BoundParams, ComponentDescriptor, ComponentKind};
use crate::model::Document;
use crate::storage::{export_document, import_interchange};

use super::{Broker, ExecRequest, ExecResult, WrapperError};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

/// Expands a command template into an argument vector. The template is split
/// on whitespace first; `{name}` placeholders are then replaced by parameter
/// values, so a value containing spaces stays a single argument.
pub fn build_argv(template: &str, params: &BoundParams) -> Result<Vec<String>, WrapperError> {
    let argv = template
        .split_whitespace()
        .map(|word| substitute(word, params))
        .collect::<Result<Vec<_>, _>>()?;
    if argv.is_empty() {
        return Err(WrapperError::EmptyCommand);
    }
    Ok(argv)
}

fn substitute(word: &str, params: &BoundParams) -> Result<String, WrapperError> {
    let mut out = String::with_capacity(word.len());
    let mut rest = word;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let Some(close) = after.find('}') else {
            out.push_str(&rest[open..]);
            return Ok(out);
        };
        let name = &after[..close];
        match params.get(name) {
            Some(v) => out.push_str(&v.to_string()),
            None => return Err(WrapperError::UnboundPlaceholder(name.to_owned())),
        }
        rest = &after[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// A component implemented by an external program reached through the broker.
#[derive(Debug, Clone)]
pub struct WrapperComponent {
    descriptor: Arc<ComponentDescriptor>,
    command: String,
    broker: Arc<Broker>,
    timeout: Duration,
}

impl WrapperComponent {
    pub fn descriptor(&self) -> &ComponentDescriptor {
        &self.descriptor
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    /// Sends `doc` to the external program and replaces it with the returned
    /// document. On any failure `doc` is left untouched.
    pub fn run(&self, doc: &mut Document, params: &BoundParams) -> Result<ExecResult, WrapperError> {
        let argv = build_argv(&self.command, params)?;
        let input = export_document(doc).map_err(WrapperError::InvalidInput)?;
        let result = self.broker.exec(&ExecRequest {
            argv,
            input,
            timeout: self.timeout,
        })?;
        let mut returned =
            import_interchange(&result.output).map_err(|e| WrapperError::BadOutput(e.to_string()))?;
        if returned.id() != doc.id() {
            return Err(WrapperError::BadOutput(format!(
                "returned document id {:?}, expected {:?}",
                returned.id(),
                doc.id()
            )));
        }
        let violations = returned.validate();
        if !violations.is_empty() {
            return Err(WrapperError::ValidationFailed(violations));
        }
        // A wrapper may not hand out ids the store already used.
        if returned.next_id() < doc.next_id() {
            returned
                .advance_next_id(doc.next_id())
                .map_err(|e| WrapperError::BadOutput(e.to_string()))?;
        }
        *doc = returned;
        Ok(result)
    }
}

/// Binds a wrapper descriptor to a broker.
pub fn wrap_external_component(
    descriptor: Arc<ComponentDescriptor>,
    broker: Arc<Broker>,
) -> Result<WrapperComponent, WrapperError> {
    let command = match &descriptor.kind {
        ComponentKind::Wrapper { command } => command.clone(),
        ComponentKind::Native => return Err(WrapperError::NotAWrapper(descriptor.name.clone())),
    };
    Ok(WrapperComponent {
        descriptor,
        command,
        broker,
        timeout: DEFAULT_TIMEOUT,
    })
}
