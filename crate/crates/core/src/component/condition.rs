use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A piece of linguistic information: annotations of a type exist, or
/// annotations of a type carry a named attribute.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Condition {
    #[serde(rename = "type")]
    pub annotation_type: String,
    #[serde(rename = "attr", default, skip_serializing_if = "Option::is_none")]
    pub attribute: Option<String>,
}

impl Condition {
    pub fn exists(annotation_type: impl Into<String>) -> Self {
        Condition {
            annotation_type: annotation_type.into(),
            attribute: None,
        }
    }

    pub fn with_attribute(annotation_type: impl Into<String>, attribute: impl Into<String>) -> Self {
        Condition {
            annotation_type: annotation_type.into(),
            attribute: Some(attribute.into()),
        }
    }

    /// `(T, none)` for any condition on type `T`.
    pub fn type_only(&self) -> Condition {
        Condition::exists(self.annotation_type.clone())
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.attribute {
            Some(a) => write!(f, "({},{})", self.annotation_type, a),
            None => write!(f, "({},·)", self.annotation_type),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("invalid condition {0:?}: expected TYPE or TYPE:ATTRIBUTE")]
pub struct ConditionParseError(pub String);

impl FromStr for Condition {
    type Err = ConditionParseError;

    /// Parses `token` or `token:pos`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ConditionParseError(s.to_owned());
        match s.split_once(':') {
            Some((t, a)) if !t.is_empty() && !a.is_empty() => Ok(Condition::with_attribute(t, a)),
            Some(_) => Err(err()),
            None if !s.is_empty() => Ok(Condition::exists(s)),
            None => Err(err()),
        }
    }
}

/// Adds `cond` to the set along with the `(T, none)` condition it implies.
pub fn insert_with_implied(set: &mut BTreeSet<Condition>, cond: &Condition) {
    if cond.attribute.is_some() {
        set.insert(cond.type_only());
    }
    set.insert(cond.clone());
}
