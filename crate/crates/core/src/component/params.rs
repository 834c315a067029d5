//! Typed component parameters and their binding.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ParamKind {
    String,
    Path,
    Integer,
    Boolean,
    Enum(Vec<String>),
}

impl ParamKind {
    pub fn name(&self) -> &'static str {
        match self {
            ParamKind::String => "STRING",
            ParamKind::Path => "PATH",
            ParamKind::Integer => "INTEGER",
            ParamKind::Boolean => "BOOLEAN",
            ParamKind::Enum(_) => "ENUM",
        }
    }

    /// Checks and converts a raw JSON value. Strings are accepted for every
    /// kind so command-line values (`key=value`) bind the same way.
    pub fn coerce(&self, raw: &Value) -> Option<ParamValue> {
        match (self, raw) {
            (ParamKind::String, Value::String(s)) => Some(ParamValue::String(s.clone())),
            (ParamKind::Path, Value::String(s)) if !s.is_empty() => {
                Some(ParamValue::Path(PathBuf::from(s)))
            }
            (ParamKind::Integer, Value::Number(n)) => n.as_i64().map(ParamValue::Integer),
            (ParamKind::Integer, Value::String(s)) => s.trim().parse().ok().map(ParamValue::Integer),
            (ParamKind::Boolean, Value::Bool(b)) => Some(ParamValue::Boolean(*b)),
            (ParamKind::Boolean, Value::String(s)) => match s.as_str() {
                "true" | "yes" | "1" => Some(ParamValue::Boolean(true)),
                "false" | "no" | "0" => Some(ParamValue::Boolean(false)),
                _ => None,
            },
            (ParamKind::Enum(choices), Value::String(s)) if choices.contains(s) => {
                Some(ParamValue::String(s.clone()))
            }
            _ => None,
        }
    }
}

/// A bound parameter value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParamValue {
    String(String),
    Path(PathBuf),
    Integer(i64),
    Boolean(bool),
}

impl ParamValue {
    pub fn to_json(&self) -> Value {
        match self {
            ParamValue::String(s) => Value::String(s.clone()),
            ParamValue::Path(p) => Value::String(p.display().to_string()),
            ParamValue::Integer(i) => Value::from(*i),
            ParamValue::Boolean(b) => Value::Bool(*b),
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::String(s) => f.write_str(s),
            ParamValue::Path(p) => write!(f, "{}", p.display()),
            ParamValue::Integer(i) => write!(f, "{i}"),
            ParamValue::Boolean(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParameterSpec {
    pub name: String,
    pub kind: ParamKind,
    pub default: Option<ParamValue>,
    pub required: bool,
}

impl ParameterSpec {
    pub fn required(name: impl Into<String>, kind: ParamKind) -> Self {
        ParameterSpec {
            name: name.into(),
            kind,
            default: None,
            required: true,
        }
    }

    pub fn optional(name: impl Into<String>, kind: ParamKind, default: Option<ParamValue>) -> Self {
        ParameterSpec {
            name: name.into(),
            kind,
            default,
            required: false,
        }
    }

    pub(crate) fn check(&self) -> Result<(), String> {
        if self.name.is_empty() {
            return Err("parameter name is empty".into());
        }
        if self.required && self.default.is_some() {
            return Err(format!("required parameter {:?} has a default", self.name));
        }
        if let ParamKind::Enum(choices) = &self.kind {
            if choices.is_empty() {
                return Err(format!("enum parameter {:?} has no choices", self.name));
            }
        }
        if let Some(d) = &self.default {
            if self.kind.coerce(&d.to_json()).is_none() {
                return Err(format!(
                    "default {d} of parameter {:?} is not a valid {}",
                    self.name,
                    self.kind.name()
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error, Serialize)]
#[serde(tag = "error", content = "parameter")]
pub enum ParamError {
    #[error("missing required parameter {0:?}")]
    MissingRequired(String),
    #[error("parameter {0:?} has the wrong type")]
    TypeMismatch(String),
    #[error("unknown parameter {0:?}")]
    UnknownParameter(String),
}

/// Parameter values handed to a component on each execution.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BoundParams(BTreeMap<String, ParamValue>);

impl BoundParams {
    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.0.get(name)
    }

    pub fn path(&self, name: &str) -> Option<&Path> {
        match self.0.get(name)? {
            ParamValue::Path(p) => Some(p),
            _ => None,
        }
    }

    pub fn string(&self, name: &str) -> Option<&str> {
        match self.0.get(name)? {
            ParamValue::String(s) => Some(s),
            _ => None,
        }
    }

    pub fn integer(&self, name: &str) -> Option<i64> {
        match self.0.get(name)? {
            ParamValue::Integer(i) => Some(*i),
            _ => None,
        }
    }

    pub fn boolean(&self, name: &str) -> Option<bool> {
        match self.0.get(name)? {
            ParamValue::Boolean(b) => Some(*b),
            _ => None,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ParamValue)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Raw parameter values as supplied by a caller, keyed by parameter name.
pub type SuppliedParams = BTreeMap<String, Value>;

/// Binds supplied values against the declared parameters: unknown names
/// and ill-typed values are rejected, defaults fill the gaps, required
/// parameters must be present.
pub fn resolve_parameters(
    specs: &[ParameterSpec],
    supplied: &SuppliedParams,
) -> Result<BoundParams, ParamError> {
    if let Some(unknown) = supplied.keys().find(|k| !specs.iter().any(|p| &p.name == *k)) {
        return Err(ParamError::UnknownParameter(unknown.clone()));
    }
    let mut bound = BTreeMap::new();
    for spec in specs {
        match supplied.get(&spec.name) {
            Some(raw) => {
                let v = spec
                    .kind
                    .coerce(raw)
                    .ok_or_else(|| ParamError::TypeMismatch(spec.name.clone()))?;
                bound.insert(spec.name.clone(), v);
            }
            None if spec.required => return Err(ParamError::MissingRequired(spec.name.clone())),
            None => {
                if let Some(d) = &spec.default {
                    bound.insert(spec.name.clone(), d.clone());
                }
            }
        }
    }
    Ok(BoundParams(bound))
}
