use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Condition, ParamKind, ParamValue, ParameterSpec, RegistryError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ComponentKind {
    Native,
    /// External program; `command` is a whitespace-separated argument
    /// template with `{param}` placeholders.
    Wrapper { command: String },
}

/// Declaration of a component: what it needs, what it adds, how it is
/// parameterised and how it runs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentDescriptor {
    pub name: String,
    pub kind: ComponentKind,
    pub preconditions: BTreeSet<Condition>,
    pub postconditions: BTreeSet<Condition>,
    pub parameters: Vec<ParameterSpec>,
    pub viewers: Vec<String>,
}

impl ComponentDescriptor {
    pub fn native(name: impl Into<String>) -> Self {
        ComponentDescriptor {
            name: name.into(),
            kind: ComponentKind::Native,
            preconditions: BTreeSet::new(),
            postconditions: BTreeSet::new(),
            parameters: Vec::new(),
            viewers: Vec::new(),
        }
    }

    pub fn wrapper(name: impl Into<String>, command: impl Into<String>) -> Self {
        ComponentDescriptor {
            kind: ComponentKind::Wrapper {
                command: command.into(),
            },
            ..Self::native(name)
        }
    }

    pub fn pre(mut self, c: Condition) -> Self {
        self.preconditions.insert(c);
        self
    }

    pub fn post(mut self, c: Condition) -> Self {
        self.postconditions.insert(c);
        self
    }

    pub fn param(mut self, p: ParameterSpec) -> Self {
        self.parameters.push(p);
        self
    }

    pub fn viewer(mut self, v: impl Into<String>) -> Self {
        self.viewers.push(v.into());
        self
    }

    pub fn is_wrapper(&self) -> bool {
        matches!(self.kind, ComponentKind::Wrapper { .. })
    }

    /// Checks the descriptor's own invariants.
    pub fn check(&self) -> Result<(), RegistryError> {
        let invalid = |msg: String| Err(RegistryError::InvalidDescriptor {
            name: self.name.clone(),
            reason: msg,
        });
        if self.name.is_empty() {
            return invalid("name is empty".into());
        }
        if let ComponentKind::Wrapper { command } = &self.kind {
            if command.trim().is_empty() {
                return invalid("wrapper command is empty".into());
            }
        }
        for c in self.preconditions.iter().chain(&self.postconditions) {
            if c.annotation_type.is_empty() || c.attribute.as_deref() == Some("") {
                return invalid(format!("condition {c} has an empty field"));
            }
        }
        if let Some(c) = self.preconditions.intersection(&self.postconditions).next() {
            return invalid(format!("condition {c} is both a pre- and a post-condition"));
        }
        let mut seen = BTreeSet::new();
        for p in &self.parameters {
            p.check().or_else(invalid)?;
            if !seen.insert(&p.name) {
                return invalid(format!("parameter {:?} declared twice", p.name));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(DescriptorFile::from(self)).expect("descriptor serialization")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&DescriptorFile::from(self)).expect("descriptor serialization")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, RegistryError> {
        let file: DescriptorFile =
            serde_json::from_slice(bytes).map_err(|e| RegistryError::Parse(e.to_string()))?;
        let d = ComponentDescriptor::try_from(file)?;
        d.check()?;
        Ok(d)
    }

    pub fn read(path: &Path) -> Result<Self, RegistryError> {
        let bytes = std::fs::read(path).map_err(|e| RegistryError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&bytes).map_err(|e| match e {
            RegistryError::Parse(m) => RegistryError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

impl Serialize for ComponentDescriptor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        DescriptorFile::from(self).serialize(s)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DescriptorFile {
    name: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    command: Option<String>,
    #[serde(default)]
    pre: Vec<Condition>,
    #[serde(default)]
    post: Vec<Condition>,
    #[serde(default)]
    params: Vec<ParamFile>,
    #[serde(default)]
    viewers: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamFile {
    name: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    default: Option<Value>,
    #[serde(default)]
    required: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    choices: Option<Vec<String>>,
}

impl From<&ComponentDescriptor> for DescriptorFile {
    fn from(d: &ComponentDescriptor) -> Self {
        let (kind, command) = match &d.kind {
            ComponentKind::Native => ("NATIVE", None),
            ComponentKind::Wrapper { command } => ("WRAPPER", Some(command.clone())),
        };
        DescriptorFile {
            name: d.name.clone(),
            kind: kind.into(),
            command,
            pre: d.preconditions.iter().cloned().collect(),
            post: d.postconditions.iter().cloned().collect(),
            params: d
                .parameters
                .iter()
                .map(|p| ParamFile {
                    name: p.name.clone(),
                    kind: p.kind.name().into(),
                    default: p.default.as_ref().map(ParamValue::to_json),
                    required: p.required,
                    choices: match &p.kind {
                        ParamKind::Enum(c) => Some(c.clone()),
                        _ => None,
                    },
                })
                .collect(),
            viewers: d.viewers.clone(),
        }
    }
}

impl TryFrom<DescriptorFile> for ComponentDescriptor {
    type Error = RegistryError;

    fn try_from(f: DescriptorFile) -> Result<Self, Self::Error> {
        let invalid = |reason: String| RegistryError::InvalidDescriptor {
            name: f.name.clone(),
            reason,
        };
        let kind = match (f.kind.as_str(), &f.command) {
            ("NATIVE", None) => ComponentKind::Native,
            ("NATIVE", Some(_)) => return Err(invalid("native components take no command".into())),
            ("WRAPPER", Some(c)) => ComponentKind::Wrapper { command: c.clone() },
            ("WRAPPER", None) => return Err(invalid("wrapper command is empty".into())),
            (k, _) => return Err(invalid(format!("unknown kind {k:?}"))),
        };
        let mut parameters = Vec::with_capacity(f.params.len());
        for p in &f.params {
            let pk = match (p.kind.as_str(), &p.choices) {
                ("STRING", None) => ParamKind::String,
                ("PATH", None) => ParamKind::Path,
                ("INTEGER", None) => ParamKind::Integer,
                ("BOOLEAN", None) => ParamKind::Boolean,
                ("ENUM", Some(c)) => ParamKind::Enum(c.clone()),
                ("ENUM", None) => return Err(invalid(format!("enum parameter {:?} needs choices", p.name))),
                (k, _) => return Err(invalid(format!("parameter {:?}: bad kind {k:?}", p.name))),
            };
            let default = match &p.default {
                None | Some(Value::Null) => None,
                Some(v) => Some(pk.coerce(v).ok_or_else(|| {
                    invalid(format!("default of parameter {:?} does not match its kind", p.name))
                })?),
            };
            parameters.push(ParameterSpec {
                name: p.name.clone(),
                kind: pk,
                default,
                required: p.required,
            });
        }
        Ok(ComponentDescriptor {
            name: f.name.clone(),
            kind,
            preconditions: f.pre.into_iter().collect(),
            postconditions: f.post.into_iter().collect(),
            parameters,
            viewers: f.viewers,
        })
    }
}
