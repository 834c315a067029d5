//! Skeleton generation for new components.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use super::{ComponentDescriptor, Condition, ParameterSpec, Registry};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScaffoldKind {
    Native,
    Wrapper,
}

#[derive(Clone, Debug)]
pub struct ScaffoldRequest {
    pub name: String,
    pub kind: ScaffoldKind,
    pub preconditions: BTreeSet<Condition>,
    pub postconditions: BTreeSet<Condition>,
    pub parameters: Vec<ParameterSpec>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScaffoldError {
    #[error("component {0:?} already exists")]
    DuplicateName(String),
    #[error("invalid component: {0}")]
    Invalid(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Files written by [`scaffold_component`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scaffold {
    pub descriptor_file: PathBuf,
    pub stub_file: PathBuf,
    pub descriptor: ComponentDescriptor,
}

pub fn descriptor_file_name(name: &str) -> String {
    format!("{name}.component.json")
}

/// Writes `<name>.component.json` and a stub implementation into
/// `out_dir`: a Rust source file for native components, an executable
/// identity filter script for wrappers. Existing files are never
/// overwritten.
pub fn scaffold_component(
    req: &ScaffoldRequest,
    out_dir: &Path,
    registry: Option<&Registry>,
) -> Result<Scaffold, ScaffoldError> {
    if !is_identifier(&req.name) {
        return Err(ScaffoldError::Invalid(format!(
            "{:?} must be ASCII letters, digits or underscores",
            req.name
        )));
    }
    if registry.is_some_and(|r| r.contains(&req.name)) {
        return Err(ScaffoldError::DuplicateName(req.name.clone()));
    }
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| ScaffoldError::Io { path, source }
    };
    fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    let out_dir = out_dir.canonicalize().map_err(io(out_dir))?;
    let descriptor_file = out_dir.join(descriptor_file_name(&req.name));
    let stub_file = match req.kind {
        ScaffoldKind::Native => out_dir.join(format!("{}.rs", req.name)),
        ScaffoldKind::Wrapper => out_dir.join(format!("{}.sh", req.name)),
    };
    if descriptor_file.exists() || stub_file.exists() {
        return Err(ScaffoldError::DuplicateName(req.name.clone()));
    }

    let mut descriptor = match req.kind {
        ScaffoldKind::Native => ComponentDescriptor::native(&req.name),
        ScaffoldKind::Wrapper => {
            ComponentDescriptor::wrapper(&req.name, stub_file.display().to_string())
        }
    };
    descriptor.preconditions = req.preconditions.clone();
    descriptor.postconditions = req.postconditions.clone();
    descriptor.parameters = req.parameters.clone();
    descriptor
        .check()
        .map_err(|e| ScaffoldError::Invalid(e.to_string()))?;

    let stub = match req.kind {
        ScaffoldKind::Native => native_stub(&descriptor),
        ScaffoldKind::Wrapper => wrapper_stub(&descriptor),
    };
    fs::write(&stub_file, stub).map_err(io(&stub_file))?;
    #[cfg(unix)]
    if req.kind == ScaffoldKind::Wrapper {
        use std::os::unix::fs::PermissionsExt;
        fs::set_permissions(&stub_file, fs::Permissions::from_mode(0o755))
            .map_err(io(&stub_file))?;
    }
    let mut json = descriptor.to_json_pretty();
    json.push('\n');
    fs::write(&descriptor_file, json).map_err(io(&descriptor_file))?;
    Ok(Scaffold {
        descriptor_file,
        stub_file,
        descriptor,
    })
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    chars
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn list(conds: &BTreeSet<Condition>) -> String {
    if conds.is_empty() {
        return "none".into();
    }
    conds
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

fn type_name(name: &str) -> String {
    name.split('_')
        .filter(|p| !p.is_empty())
        .map(|p| {
            let mut c = p.chars();
            let first = c.next().map(|f| f.to_ascii_uppercase()).unwrap_or_default();
            std::iter::once(first).chain(c).collect::<String>()
        })
        .collect()
}

fn native_stub(d: &ComponentDescriptor) -> String {
    format!(
        r#"use annotium::component::{{BoundParams, ComponentError, NativeComponent}};
use annotium::Document;

/// `{name}` component.
///
/// Requires: {pre}
/// Produces: {post}
pub struct {ty};

impl NativeComponent for {ty} {{
    fn run(&self, doc: &mut Document, params: &BoundParams) -> Result<(), ComponentError> {{
        // Add the annotations promised by the post-conditions.
        let _ = (doc, params);
        Ok(())
    }}
}}
"#,
        name = d.name,
        pre = list(&d.preconditions),
        post = list(&d.postconditions),
        ty = type_name(&d.name),
    )
}

fn wrapper_stub(d: &ComponentDescriptor) -> String {
    format!(
        "#!/bin/sh\n\
         # {name}: wrapper component.\n\
         # Requires: {pre}\n\
         # Produces: {post}\n\
         #\n\
         # Reads one interchange document on standard input and writes the\n\
         # processed document to standard output. Exit non-zero on failure;\n\
         # anything on standard error is reported as diagnostics.\n\
         exec cat\n",
        name = d.name,
        pre = list(&d.preconditions),
        post = list(&d.postconditions),
    )
}
