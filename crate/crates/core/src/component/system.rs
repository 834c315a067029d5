//! Pipeline validation and automatic ordering from pre/post-conditions.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::condition::insert_with_implied;
use super::{Condition, Registry, RegistryError, SuppliedParams};

/// A named, ordered pipeline with per-component parameter values.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct System {
    pub name: String,
    pub components: Vec<String>,
    #[serde(default)]
    pub params: BTreeMap<String, SuppliedParams>,
}

impl System {
    pub fn new<I, S>(name: impl Into<String>, components: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        System {
            name: name.into(),
            components: components.into_iter().map(Into::into).collect(),
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(
        mut self,
        component: &str,
        name: &str,
        value: impl Into<serde_json::Value>,
    ) -> Self {
        self.params
            .entry(component.to_owned())
            .or_default()
            .insert(name.to_owned(), value.into());
        self
    }

    pub fn params_for(&self, component: &str) -> SuppliedParams {
        self.params.get(component).cloned().unwrap_or_default()
    }
}

/// A precondition that is not available when its component runs.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConditionViolation {
    pub component: String,
    pub condition: Condition,
}

impl std::fmt::Display for ConditionViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} requires {}", self.component, self.condition)
    }
}

/// Simulates the pipeline left to right starting from `initial`; every
/// precondition missing at its component's turn is reported.
pub fn validate_system(
    registry: &Registry,
    components: &[String],
    initial: &BTreeSet<Condition>,
) -> Result<Vec<ConditionViolation>, RegistryError> {
    let mut available = closure(initial);
    let mut violations = Vec::new();
    for name in components {
        let d = registry.require(name)?;
        for c in d.preconditions.difference(&available) {
            violations.push(ConditionViolation {
                component: name.clone(),
                condition: c.clone(),
            });
        }
        for c in &d.postconditions {
            insert_with_implied(&mut available, c);
        }
    }
    Ok(violations)
}

fn closure(initial: &BTreeSet<Condition>) -> BTreeSet<Condition> {
    let mut out = BTreeSet::new();
    for c in initial {
        insert_with_implied(&mut out, c);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum OrderError {
    #[error("no valid order: {} cannot run, missing {}", .unplaced.join(", "),
        .missing.iter().map(ToString::to_string).collect::<Vec<_>>().join(", "))]
    NoValidOrder {
        unplaced: Vec<String>,
        missing: Vec<Condition>,
    },
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

/// Orders `names` so that every precondition is produced before use. At
/// each step the runnable component with the smallest name goes next.
pub fn order_components<'a, I>(
    registry: &Registry,
    names: I,
    initial: &BTreeSet<Condition>,
) -> Result<Vec<String>, OrderError>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut remaining: BTreeSet<&str> = BTreeSet::new();
    for n in names {
        registry.require(n)?;
        remaining.insert(n);
    }
    let mut available = closure(initial);
    let mut order = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let next = remaining.iter().copied().find(|n| {
            registry
                .get(n)
                .is_some_and(|d| d.preconditions.is_subset(&available))
        });
        let Some(next) = next else {
            let mut missing = BTreeSet::new();
            for n in &remaining {
                let d = registry.get(n).expect("checked above");
                missing.extend(d.preconditions.difference(&available).cloned());
            }
            return Err(OrderError::NoValidOrder {
                unplaced: remaining.iter().map(|s| s.to_string()).collect(),
                missing: missing.into_iter().collect(),
            });
        };
        remaining.remove(next);
        for c in &registry.get(next).expect("checked above").postconditions {
            insert_with_implied(&mut available, c);
        }
        order.push(next.to_owned());
    }
    Ok(order)
}
