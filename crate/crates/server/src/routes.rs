use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{Path, Query, State};
use axum::http::header::CONTENT_TYPE;
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Deserialize;
use serde_json::{json, Value};

use annotium::component::{SuppliedParams, System};
use annotium::engine::{RunOptions, Status};
use annotium::storage::{
    annotations_to_json, attributes_from_json, check_document_id, export_document,
    import_document, import_interchange, AnnotationDraft, EncodingId,
};
use annotium::{AnnotationId, Document};

use crate::error::{ApiError, ApiResult};
use crate::state::AppState;

type AppRef = State<Arc<AppState>>;

fn json_bytes(status: StatusCode, bytes: Vec<u8>) -> Response {
    (status, [(CONTENT_TYPE, "application/json")], bytes).into_response()
}

/// Turns body-extraction failures (notably the upload limit) into JSON.
fn body(body: Result<Bytes, BytesRejection>) -> ApiResult<Bytes> {
    body.map_err(|r| {
        let status = r.status();
        let error = if status == StatusCode::PAYLOAD_TOO_LARGE {
            "payload too large"
        } else {
            "bad request"
        };
        ApiError::new(status, error, r.body_text())
    })
}

fn parse_json<T: serde::de::DeserializeOwned>(bytes: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(bytes).map_err(|e| ApiError::bad_request(e.to_string()))
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> ApiResult<T> + Send + 'static,
) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

pub async fn healthz() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

pub async fn not_found() -> ApiError {
    ApiError::not_found("no such endpoint")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewCollection {
    name: String,
}

pub async fn create_collection(
    State(app): AppRef,
    raw: Result<Bytes, BytesRejection>,
) -> ApiResult<Response> {
    let req: NewCollection = parse_json(&body(raw)?)?;
    let app2 = app.clone();
    let name = req.name.clone();
    blocking(move || app2.create_collection(&name)).await?;
    Ok((StatusCode::CREATED, Json(json!({ "name": req.name }))).into_response())
}

pub async fn list_collections(State(app): AppRef) -> Json<Value> {
    let list: Vec<_> = app
        .collection_names()
        .into_iter()
        .map(|(name, documents)| json!({ "name": name, "documents": documents }))
        .collect();
    Json(Value::Array(list))
}

pub async fn list_documents(State(app): AppRef, Path(c): Path<String>) -> ApiResult<Json<Value>> {
    let slot = app.slot(&c)?;
    let col = slot.collection.read();
    let list: Vec<_> = col
        .documents()
        .map(|d| json!({ "id": d.id(), "chars": d.len_chars(), "annotations": d.annotation_count() }))
        .collect();
    Ok(Json(Value::Array(list)))
}

#[derive(Deserialize, Default)]
pub struct UploadParams {
    encoding: Option<String>,
    id: Option<String>,
}

fn fresh_id(app: &AppState, c: &str) -> ApiResult<String> {
    let slot = app.slot(c)?;
    let col = slot.collection.read();
    Ok((1..)
        .map(|n| format!("doc-{n}"))
        .find(|id| col.document(id).is_none())
        .expect("unbounded"))
}

pub async fn upload(
    State(app): AppRef,
    Path(c): Path<String>,
    Query(params): Query<UploadParams>,
    headers: HeaderMap,
    raw: Result<Bytes, BytesRejection>,
) -> ApiResult<Response> {
    let slot = app.slot(&c)?;
    let bytes = body(raw)?;
    let content_type = headers
        .get(CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or("text/plain")
        .split(';')
        .next()
        .unwrap_or("")
        .trim()
        .to_ascii_lowercase();
    let doc = match content_type.as_str() {
        "application/json" => {
            let mut doc = import_interchange(&bytes)?;
            if let Some(id) = params.id {
                doc.set_id(id);
            }
            let violations = doc.validate();
            if !violations.is_empty() {
                return Err(annotium::storage::StorageError::ValidationFailed(violations).into());
            }
            doc
        }
        "text/plain" | "application/octet-stream" | "" => {
            let encoding: EncodingId = match params.encoding.as_deref() {
                None => EncodingId::Utf8,
                Some(e) => e.parse().map_err(|e: annotium::storage::UnknownEncoding| {
                    ApiError::bad_request(e.to_string())
                })?,
            };
            let id = match params.id {
                Some(id) => id,
                None => fresh_id(&app, &c)?,
            };
            import_document(&bytes, encoding, &id)?
        }
        other => {
            return Err(ApiError::new(
                StatusCode::UNSUPPORTED_MEDIA_TYPE,
                "unsupported media type",
                format!("cannot upload {other}; use text/plain or application/json"),
            ))
        }
    };
    check_document_id(doc.id())?;
    let id = doc.id().to_owned();
    let claim = slot.claim(&id)?;
    if slot.collection.read().document(&id).is_some() {
        return Err(ApiError::conflict(format!("document {id} already exists")));
    }
    blocking(move || slot.commit(&claim, doc)).await?;
    Ok((StatusCode::CREATED, Json(json!({ "id": id }))).into_response())
}

pub async fn get_document(
    State(app): AppRef,
    Path((c, d)): Path<(String, String)>,
) -> ApiResult<Response> {
    let slot = app.slot(&c)?;
    let col = slot.collection.read();
    let doc = col
        .document(&d)
        .ok_or_else(|| ApiError::not_found(format!("document {d}")))?;
    Ok(json_bytes(StatusCode::OK, export_document(doc)?))
}

pub async fn delete_document(
    State(app): AppRef,
    Path((c, d)): Path<(String, String)>,
) -> ApiResult<StatusCode> {
    let slot = app.slot(&c)?;
    let claim = slot.claim(&d)?;
    blocking(move || slot.remove(&claim, &d)).await?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Deserialize, Default)]
pub struct QueryParams {
    #[serde(rename = "type")]
    annotation_type: Option<String>,
    start: Option<usize>,
    end: Option<usize>,
    attr: Option<String>,
    value: Option<String>,
}

pub async fn query(
    State(app): AppRef,
    Path((c, d)): Path<(String, String)>,
    params: Result<Query<QueryParams>, axum::extract::rejection::QueryRejection>,
) -> ApiResult<Response> {
    let Query(p) = params.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let q = annotium::Query::from_parts(p.annotation_type, p.start, p.end, p.attr, p.value)?;
    let slot = app.slot(&c)?;
    let col = slot.collection.read();
    let doc = col
        .document(&d)
        .ok_or_else(|| ApiError::not_found(format!("document {d}")))?;
    let found = q.run(doc)?;
    Ok(json_bytes(StatusCode::OK, annotations_to_json(&found)))
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunRequest {
    system: Option<String>,
    components: Option<Vec<String>>,
    #[serde(default)]
    params: BTreeMap<String, SuppliedParams>,
    #[serde(default)]
    options: Option<RunOptions>,
}

fn resolve_system(app: &AppState, req: RunRequest) -> ApiResult<(System, RunOptions)> {
    let mut system = match (req.system, req.components) {
        (Some(name), None) => app
            .systems
            .iter()
            .find(|s| s.name == name)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("system {name}")))?,
        (None, Some(components)) => System::new("adhoc", components),
        _ => {
            return Err(ApiError::bad_request(
                "give exactly one of \"system\" or \"components\"",
            ))
        }
    };
    for (component, values) in req.params {
        let slot = system.params.entry(component).or_default();
        slot.extend(values);
    }
    Ok((system, req.options.unwrap_or_default()))
}

pub async fn run(
    State(app): AppRef,
    Path((c, d)): Path<(String, String)>,
    raw: Result<Bytes, BytesRejection>,
) -> ApiResult<Response> {
    let req: RunRequest = parse_json(&body(raw)?)?;
    let (system, options) = resolve_system(&app, req)?;
    let slot = app.slot(&c)?;
    let claim = slot.claim(&d)?;
    let mut doc = slot.snapshot(&d)?;
    let app2 = app.clone();
    let report = blocking(move || {
        let engine = &app2.engine;
        // Unknown components and bad parameters surface before validation.
        let violations = engine.check(&system, &doc)?;
        if !violations.is_empty() {
            return Err(annotium::engine::EngineError::ValidationFailed {
                document: Some(doc.id().to_owned()),
                violations,
            }
            .into());
        }
        let report = engine.run_document(&system, &mut doc, &options)?;
        if report.status == Status::Ok && !options.dry_run {
            slot.commit(&claim, doc)?;
        }
        Ok(annotium::engine::RunReport::single(&system, report, options.dry_run))
    })
    .await?;
    if report.documents.iter().any(|r| r.status == Status::Failed) {
        let detail = report.documents[0].error.clone().unwrap_or_default();
        let body = json!({ "error": "component failed", "detail": detail, "report": report });
        return Ok((StatusCode::INTERNAL_SERVER_ERROR, Json(body)).into_response());
    }
    Ok(Json(report).into_response())
}

pub async fn components(State(app): AppRef) -> Json<Value> {
    Json(Value::Array(
        app.engine.registry().descriptors().map(|d| d.to_json()).collect(),
    ))
}

pub async fn systems(State(app): AppRef) -> Json<Value> {
    Json(serde_json::to_value(&app.systems).unwrap_or_default())
}

// Annotation editing, used by the browser annotator.

fn parse_annotation_id(raw: &str) -> ApiResult<AnnotationId> {
    raw.parse::<u64>()
        .map(AnnotationId)
        .map_err(|_| ApiError::bad_request(format!("invalid annotation id {raw:?}")))
}

/// Applies `edit` to a copy of the document and commits it if the result
/// is valid.
async fn edit<T: Send + 'static>(
    app: Arc<AppState>,
    c: String,
    d: String,
    edit: impl FnOnce(&mut Document) -> ApiResult<T> + Send + 'static,
) -> ApiResult<(T, Document)> {
    let slot = app.slot(&c)?;
    let claim = slot.claim(&d)?;
    let mut doc = slot.snapshot(&d)?;
    blocking(move || {
        let out = edit(&mut doc)?;
        let violations = doc.validate();
        if !violations.is_empty() {
            return Err(annotium::storage::StorageError::ValidationFailed(violations).into());
        }
        slot.commit(&claim, doc.clone())?;
        Ok((out, doc))
    })
    .await
}

fn annotation_json(doc: &Document, id: AnnotationId) -> ApiResult<Response> {
    let a = doc.get_annotation(id)?;
    let mut arr: Vec<Value> = serde_json::from_slice(&annotations_to_json(&[a])).unwrap_or_default();
    Ok(Json(arr.pop().unwrap_or_default()).into_response())
}

pub async fn create_annotation(
    State(app): AppRef,
    Path((c, d)): Path<(String, String)>,
    raw: Result<Bytes, BytesRejection>,
) -> ApiResult<Response> {
    let draft = AnnotationDraft::from_json(&body(raw)?)?;
    let (id, doc) = edit(app, c, d, move |doc| Ok(draft.add_to(doc)?)).await?;
    let mut resp = annotation_json(&doc, id)?;
    *resp.status_mut() = StatusCode::CREATED;
    Ok(resp)
}

pub async fn put_attributes(
    State(app): AppRef,
    Path((c, d, a)): Path<(String, String, String)>,
    raw: Result<Bytes, BytesRejection>,
) -> ApiResult<Response> {
    let id = parse_annotation_id(&a)?;
    let attrs = attributes_from_json(&body(raw)?)?;
    let ((), doc) = edit(app, c, d, move |doc| {
        for attr in attrs {
            doc.put_annotation_attribute(id, attr)?;
        }
        Ok(())
    })
    .await?;
    annotation_json(&doc, id)
}

pub async fn delete_attribute(
    State(app): AppRef,
    Path((c, d, a, name)): Path<(String, String, String, String)>,
) -> ApiResult<Response> {
    let id = parse_annotation_id(&a)?;
    let ((), doc) = edit(app, c, d, move |doc| {
        doc.annotation_attributes_mut(id)?
            .remove(&name)
            .map(|_| ())
            .ok_or_else(|| ApiError::not_found(format!("attribute {name}")))
    })
    .await?;
    annotation_json(&doc, id)
}

pub async fn delete_annotation(
    State(app): AppRef,
    Path((c, d, a)): Path<(String, String, String)>,
) -> ApiResult<StatusCode> {
    let id = parse_annotation_id(&a)?;
    edit(app, c, d, move |doc| Ok(doc.remove_annotation(id).map(|_| ())?)).await?;
    Ok(StatusCode::NO_CONTENT)
}
