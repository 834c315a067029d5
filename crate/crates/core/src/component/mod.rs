//! Component descriptors, the registry, pipeline validation and ordering,
//! and skeleton generation.

mod condition;
mod descriptor;
mod params;
mod registry;
mod scaffold;
mod system;

use thiserror::Error;

use crate::model::Document;

pub use condition::{insert_with_implied, Condition, ConditionParseError};
pub use descriptor::{ComponentDescriptor, ComponentKind};
pub use params::{
    resolve_parameters, BoundParams, ParamError, ParamKind, ParamValue, ParameterSpec,
    SuppliedParams,
};
pub use registry::Registry;
pub use scaffold::{
    descriptor_file_name, scaffold_component, Scaffold, ScaffoldError, ScaffoldKind,
    ScaffoldRequest,
};
pub use system::{order_components, validate_system, ConditionViolation, OrderError, System};

/// An in-process component. Implementations must be reentrant: the engine
/// may run one instance on several documents at once.
pub trait NativeComponent: Send + Sync {
    fn run(&self, doc: &mut Document, params: &BoundParams) -> Result<(), ComponentError>;
}

impl<F> NativeComponent for F
where
    F: Fn(&mut Document, &BoundParams) -> Result<(), ComponentError> + Send + Sync,
{
    fn run(&self, doc: &mut Document, params: &BoundParams) -> Result<(), ComponentError> {
        self(doc, params)
    }
}

/// Failure reported by a component implementation.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ComponentError {
    #[error("cannot load resource {path}: {message}")]
    Resource { path: String, message: String },
    #[error("{0}")]
    Failed(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("component {0:?} is already registered")]
    DuplicateName(String),
    #[error("invalid descriptor {name:?}: {reason}")]
    InvalidDescriptor { name: String, reason: String },
    #[error("unknown component {0:?}")]
    UnknownComponent(String),
    #[error("cannot parse descriptor: {0}")]
    Parse(String),
    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
}

#[cfg(test)]
mod tests;
