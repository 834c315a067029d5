//! Executes systems over documents and collections.

mod report;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::component::{
    insert_with_implied, resolve_parameters, validate_system, BoundParams, ComponentDescriptor,
    ComponentError, ComponentKind, Condition, ConditionViolation, ParamError, Registry,
    RegistryError, SuppliedParams, System,
};
use crate::model::{Collection, Document};
use crate::wrapper::{wrap_external_component, Broker, WrapperError, DEFAULT_TIMEOUT};

pub use report::{ComponentRun, DocumentReport, MutationSummary, RunReport, Status, Totals};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct RunOptions {
    pub continue_on_error: bool,
    pub strict_postconditions: bool,
    /// Validate only; nothing is executed.
    pub dry_run: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            continue_on_error: true,
            strict_postconditions: false,
            dry_run: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("system is invalid{}: {}", document.as_ref().map(|d| format!(" for document {d:?}")).unwrap_or_default(),
        violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    ValidationFailed {
        document: Option<String>,
        violations: Vec<ConditionViolation>,
    },
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error("parameters of {component}: {source}")]
    Params {
        component: String,
        #[source]
        source: ParamError,
    },
    #[error("preconditions not met: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join(", "))]
    PreconditionUnmet(Vec<Condition>),
    #[error("{component} failed: {source}")]
    Component {
        component: String,
        #[source]
        source: ComponentError,
    },
    #[error("{component} failed: {source}")]
    Wrapper {
        component: String,
        #[source]
        source: WrapperError,
    },
    #[error("native component {0:?} has no implementation")]
    NoImplementation(String),
    #[error("wrapper component {0:?} needs an execution broker")]
    NoBroker(String),
    #[error("postconditions of {component} not fulfilled: {}", missing.iter().map(ToString::to_string).collect::<Vec<_>>().join(", "))]
    PostconditionUnfulfilled {
        component: String,
        missing: Vec<Condition>,
    },
}

/// The set of conditions a document already satisfies: `(T,·)` for every
/// annotation type present and `(T,a)` for every attribute seen on type `T`.
pub fn derive_initial_conditions(doc: &Document) -> BTreeSet<Condition> {
    let mut out = BTreeSet::new();
    for a in doc.annotations() {
        let t = a.annotation_type();
        if !out.contains(&Condition::exists(t)) {
            out.insert(Condition::exists(t));
        }
        for name in a.attributes().names() {
            out.insert(Condition::with_attribute(t, name));
        }
    }
    out
}

/// Postconditions of `descriptor` that the change `summary` (which produced
/// `after`) does not deliver.
pub fn verify_postconditions(
    summary: &MutationSummary,
    after: &Document,
    descriptor: &ComponentDescriptor,
) -> Vec<Condition> {
    descriptor
        .postconditions
        .iter()
        .filter(|c| !summary.fulfils(after, c))
        .cloned()
        .collect()
}

struct Step {
    descriptor: Arc<ComponentDescriptor>,
    params: BoundParams,
}

/// Runs components from a registry; wrapper components go through the
/// broker when one is attached.
#[derive(Clone, Debug)]
pub struct Engine {
    registry: Arc<Registry>,
    broker: Option<Arc<Broker>>,
    wrapper_timeout: Duration,
}

impl Engine {
    pub fn new(registry: Arc<Registry>) -> Self {
        Engine {
            registry,
            broker: None,
            wrapper_timeout: DEFAULT_TIMEOUT,
        }
    }

    pub fn with_broker(mut self, broker: Arc<Broker>) -> Self {
        self.broker = Some(broker);
        self
    }

    pub fn with_wrapper_timeout(mut self, timeout: Duration) -> Self {
        self.wrapper_timeout = timeout;
        self
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn broker(&self) -> Option<&Arc<Broker>> {
        self.broker.as_ref()
    }

    fn plan(&self, system: &System) -> Result<Vec<Step>, EngineError> {
        system
            .components
            .iter()
            .map(|name| {
                let descriptor = self
                    .registry
                    .shared(name)
                    .ok_or_else(|| RegistryError::UnknownComponent(name.clone()))?;
                let params = resolve_parameters(&descriptor.parameters, &system.params_for(name))
                    .map_err(|source| EngineError::Params {
                        component: name.clone(),
                        source,
                    })?;
                Ok(Step { descriptor, params })
            })
            .collect()
    }

    /// Violations of `system` against what `doc` already provides.
    pub fn check(&self, system: &System, doc: &Document) -> Result<Vec<ConditionViolation>, EngineError> {
        Ok(validate_system(
            &self.registry,
            &system.components,
            &derive_initial_conditions(doc),
        )?)
    }

    fn execute(
        &self,
        descriptor: &Arc<ComponentDescriptor>,
        params: &BoundParams,
        doc: &mut Document,
    ) -> Result<(), EngineError> {
        let name = &descriptor.name;
        match &descriptor.kind {
            ComponentKind::Native => {
                let imp = self
                    .registry
                    .implementation(name)
                    .ok_or_else(|| EngineError::NoImplementation(name.clone()))?;
                let outcome = catch_unwind(AssertUnwindSafe(|| imp.run(doc, params)))
                    .unwrap_or_else(|_| Err(ComponentError::Failed("component panicked".into())));
                outcome.map_err(|source| EngineError::Component {
                    component: name.clone(),
                    source,
                })
            }
            ComponentKind::Wrapper { .. } => {
                let broker = self
                    .broker
                    .clone()
                    .ok_or_else(|| EngineError::NoBroker(name.clone()))?;
                let wrap = |source| EngineError::Wrapper {
                    component: name.clone(),
                    source,
                };
                wrap_external_component(descriptor.clone(), broker)
                    .map_err(wrap)?
                    .with_timeout(self.wrapper_timeout)
                    .run(doc, params)
                    .map(|_| ())
                    .map_err(wrap)
            }
        }
    }

    /// Runs one component after checking its preconditions against the
    /// document's current state. On error the document is left as it was.
    pub fn run_component(
        &self,
        name: &str,
        doc: &mut Document,
        params: &SuppliedParams,
    ) -> Result<MutationSummary, EngineError> {
        let descriptor = self
            .registry
            .shared(name)
            .ok_or_else(|| RegistryError::UnknownComponent(name.to_owned()))?;
        let mut available = BTreeSet::new();
        for c in derive_initial_conditions(doc) {
            insert_with_implied(&mut available, &c);
        }
        let missing: Vec<_> = descriptor.preconditions.difference(&available).cloned().collect();
        if !missing.is_empty() {
            return Err(EngineError::PreconditionUnmet(missing));
        }
        let bound = resolve_parameters(&descriptor.parameters, params).map_err(|source| {
            EngineError::Params {
                component: name.to_owned(),
                source,
            }
        })?;
        let before = doc.clone();
        if let Err(e) = self.execute(&descriptor, &bound, doc) {
            *doc = before;
            return Err(e);
        }
        Ok(MutationSummary::between(&before, doc))
    }

    /// Runs `system` over a single document, restoring it on failure.
    pub fn run_document(
        &self,
        system: &System,
        doc: &mut Document,
        options: &RunOptions,
    ) -> Result<DocumentReport, EngineError> {
        let plan = self.plan(system)?;
        let violations = self.check(system, doc)?;
        if !violations.is_empty() {
            if options.continue_on_error && !options.dry_run {
                let mut r = DocumentReport::new(doc.id(), Status::Skipped);
                r.violations = violations;
                return Ok(r);
            }
            return Err(EngineError::ValidationFailed {
                document: Some(doc.id().to_owned()),
                violations,
            });
        }
        if options.dry_run {
            return Ok(DocumentReport::new(doc.id(), Status::Ok));
        }
        Ok(self.process(&plan, doc, options))
    }

    fn process(&self, plan: &[Step], doc: &mut Document, options: &RunOptions) -> DocumentReport {
        let snapshot = doc.clone();
        let mut report = DocumentReport::new(doc.id(), Status::Ok);
        for step in plan {
            let name = &step.descriptor.name;
            let before = options.strict_postconditions.then(|| doc.clone());
            let ids_before = doc.next_id();
            let started = Instant::now();
            let outcome = self.execute(&step.descriptor, &step.params, doc);
            let millis = started.elapsed().as_secs_f64() * 1000.0;
            let outcome = outcome.and_then(|()| {
                let Some(before) = &before else { return Ok(()) };
                let summary = MutationSummary::between(before, doc);
                let missing = verify_postconditions(&summary, doc, &step.descriptor);
                if missing.is_empty() {
                    Ok(())
                } else if doc.text().trim().is_empty() {
                    report.warnings.push(format!(
                        "{name}: unfulfilled on empty text: {}",
                        missing.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
                    ));
                    Ok(())
                } else {
                    Err(EngineError::PostconditionUnfulfilled {
                        component: name.clone(),
                        missing,
                    })
                }
            });
            if let Err(e) = outcome {
                tracing::debug!(document = doc.id(), component = %name, "failed: {e}");
                *doc = snapshot;
                report.status = Status::Failed;
                report.error = Some(e.to_string());
                report.failed_component = Some(name.clone());
                report.components.clear();
                report.added.clear();
                return report;
            }
            let mut added = std::collections::BTreeMap::new();
            for a in doc.annotations().filter(|a| a.id() >= ids_before) {
                *added.entry(a.annotation_type().to_owned()).or_default() += 1;
            }
            for (t, n) in &added {
                *report.added.entry(t.clone()).or_default() += n;
            }
            report.components.push(ComponentRun {
                name: name.clone(),
                millis,
                added,
            });
        }
        report
    }

    /// Runs `system` over every document of `collection`.
    ///
    /// With `continue_on_error` documents are processed in parallel; a
    /// document whose preconditions are unmet is skipped and a failing one
    /// is restored and marked failed. Without it, validation covers every
    /// document before anything runs and the first failure stops the run.
    pub fn run_system(
        &self,
        system: &System,
        collection: &mut Collection,
        options: &RunOptions,
    ) -> Result<RunReport, EngineError> {
        let plan = self.plan(system)?;
        let validate_all = options.dry_run || !options.continue_on_error;
        if validate_all {
            if collection.is_empty() {
                let violations = validate_system(&self.registry, &system.components, &BTreeSet::new())?;
                if !violations.is_empty() {
                    return Err(EngineError::ValidationFailed {
                        document: None,
                        violations,
                    });
                }
            }
            for doc in collection.documents() {
                let violations = self.check(system, doc)?;
                if !violations.is_empty() {
                    return Err(EngineError::ValidationFailed {
                        document: Some(doc.id().to_owned()),
                        violations,
                    });
                }
            }
        }
        if options.dry_run {
            let mut report = RunReport::new(&system.name, &system.components, Vec::new());
            report.dry_run = true;
            return Ok(report);
        }

        let mut reports = Vec::with_capacity(collection.len());
        let mut aborted = false;
        if options.continue_on_error {
            reports = collection
                .documents_map_mut()
                .par_values_mut()
                .map(|doc| {
                    let violations = self.check(system, doc)?;
                    if violations.is_empty() {
                        Ok(self.process(&plan, doc, options))
                    } else {
                        let mut r = DocumentReport::new(doc.id(), Status::Skipped);
                        r.violations = violations;
                        Ok(r)
                    }
                })
                .collect::<Result<Vec<_>, EngineError>>()?;
        } else {
            for doc in collection.documents_mut() {
                let r = self.process(&plan, doc, options);
                let failed = r.status == Status::Failed;
                reports.push(r);
                if failed {
                    aborted = true;
                    break;
                }
            }
        }
        let mut report = RunReport::new(&system.name, &system.components, reports);
        report.aborted = aborted;
        Ok(report)
    }
}
