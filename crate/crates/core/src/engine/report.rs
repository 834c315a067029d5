use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::component::{Condition, ConditionViolation, System};
use crate::model::{AnnotationId, Document};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Ok,
    Skipped,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentRun {
    pub name: String,
    pub millis: f64,
    /// Annotations added, by type.
    pub added: BTreeMap<String, usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocumentReport {
    pub id: String,
    pub status: Status,
    pub components: Vec<ComponentRun>,
    pub added: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// The component that failed, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_component: Option<String>,
    /// Unmet preconditions that caused a skip.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<ConditionViolation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl DocumentReport {
    pub(crate) fn new(id: &str, status: Status) -> Self {
        DocumentReport {
            id: id.to_owned(),
            status,
            components: Vec::new(),
            added: BTreeMap::new(),
            error: None,
            failed_component: None,
            violations: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn added_of(&self, annotation_type: &str) -> usize {
        self.added.get(annotation_type).copied().unwrap_or(0)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub ok: usize,
    pub skipped: usize,
    pub failed: usize,
    pub added: BTreeMap<String, usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub system: String,
    pub components: Vec<String>,
    #[serde(default)]
    pub dry_run: bool,
    /// Set when a failure stopped the run before every document was seen.
    #[serde(default)]
    pub aborted: bool,
    pub documents: Vec<DocumentReport>,
    pub totals: Totals,
}

impl RunReport {
    pub fn new(system: &str, components: &[String], documents: Vec<DocumentReport>) -> Self {
        let mut totals = Totals::default();
        for d in &documents {
            match d.status {
                Status::Ok => totals.ok += 1,
                Status::Skipped => totals.skipped += 1,
                Status::Failed => totals.failed += 1,
            }
            for (t, n) in &d.added {
                *totals.added.entry(t.clone()).or_default() += n;
            }
        }
        RunReport {
            system: system.to_owned(),
            components: components.to_vec(),
            dry_run: false,
            aborted: false,
            documents,
            totals,
        }
    }

    /// A report for a run over a single document.
    pub fn single(system: &System, document: DocumentReport, dry_run: bool) -> Self {
        let mut r = RunReport::new(&system.name, &system.components, vec![document]);
        r.dry_run = dry_run;
        r
    }

    pub fn document(&self, id: &str) -> Option<&DocumentReport> {
        self.documents.iter().find(|d| d.id == id)
    }

    pub fn statuses(&self) -> Vec<Status> {
        self.documents.iter().map(|d| d.status).collect()
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// What one component did to a document.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationSummary {
    pub added: Vec<AnnotationId>,
    pub removed: Vec<AnnotationId>,
    /// Attributes created or changed on annotations that already existed.
    pub attributes_written: Vec<(AnnotationId, String)>,
    pub added_by_type: BTreeMap<String, usize>,
}

impl MutationSummary {
    pub fn between(before: &Document, after: &Document) -> Self {
        let mut s = MutationSummary::default();
        for a in after.annotations() {
            match before.get_annotation(a.id()) {
                Err(_) => {
                    s.added.push(a.id());
                    *s.added_by_type.entry(a.annotation_type().to_owned()).or_default() += 1;
                }
                Ok(old) => {
                    for (name, value) in a.attributes().iter() {
                        if old.attribute(name) != Some(value) {
                            s.attributes_written.push((a.id(), name.to_owned()));
                        }
                    }
                }
            }
        }
        s.removed = before
            .annotations()
            .map(|a| a.id())
            .filter(|id| !after.contains(*id))
            .collect();
        s
    }

    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty() && self.attributes_written.is_empty()
    }

    /// Whether this change delivers `cond`: a new annotation of the type
    /// (carrying the attribute, if one is named), or the named attribute
    /// written onto an existing annotation of the type.
    pub fn fulfils(&self, after: &Document, cond: &Condition) -> bool {
        let type_of = |id: AnnotationId| {
            after
                .get_annotation(id)
                .ok()
                .filter(|a| a.annotation_type() == cond.annotation_type)
        };
        let new = self.added.iter().filter_map(|id| type_of(*id)).any(|a| match &cond.attribute {
            None => true,
            Some(name) => a.attributes().contains(name),
        });
        new || match &cond.attribute {
            None => false,
            Some(name) => self
                .attributes_written
                .iter()
                .any(|(id, n)| n == name && type_of(*id).is_some()),
        }
    }
}
