//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if any
//! criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::alloc::{GlobalAlloc, Layout, System as SystemAlloc};
use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicIsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use annotium::builtin::{
    builtin_registry, pos_tag, standard_system, tokenize_html, Lexicon, POS_TAGGER,
    SENTENCE_SPLITTER, TOKENIZER,
};
use annotium::component::{
    order_components, validate_system, ComponentDescriptor, Condition, OrderError, Registry, System,
};
use annotium::engine::{Engine, RunOptions, Status};
use annotium::storage::{
    decode, export_document, import_document, import_interchange, load_collection, save_collection,
    AnnotationDraft, CompactDocument, EncodingId,
};
use annotium::wrapper::{start_broker, Broker, BrokerConfig, ExecError, ExecRequest};
use annotium::{Attribute, Collection, Document, Span};
use rand::rngs::StdRng;
use rand::Rng;
use serde_json::{json, Value};

struct Counting;

static LIVE: AtomicIsize = AtomicIsize::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        LIVE.fetch_add(layout.size() as isize, Ordering::Relaxed);
        SystemAlloc.alloc(layout)
    }
    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        LIVE.fetch_sub(layout.size() as isize, Ordering::Relaxed);
        SystemAlloc.dealloc(ptr, layout)
    }
    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        LIVE.fetch_add(new_size as isize - layout.size() as isize, Ordering::Relaxed);
        SystemAlloc.realloc(ptr, layout, new_size)
    }
}

#[global_allocator]
static ALLOC: Counting = Counting;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .canonicalize()
        .unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

fn corpus() -> Vec<Document> {
    let mut rng = common::rng(20_240_501);
    (0..500).map(|i| common::random_document(&mut rng, &format!("d{i}"), 200)).collect()
}

// ---- criteria ----

fn figure2_golden() -> Outcome {
    let started = Instant::now();
    let text = std::fs::read_to_string(fixture("figure2.txt")).map_err(|e| e.to_string())?;
    let mut doc = Document::new("figure2", text);
    let engine = Engine::new(Arc::new(builtin_registry()));
    let system = standard_system(Some(&fixture("figure2.lex")));
    let report = engine
        .run_document(&system, &mut doc, &RunOptions::default())
        .map_err(|e| e.to_string())?;
    ensure!(report.status == Status::Ok, "pipeline status {:?}", report.status);
    let link = std::fs::read(fixture("figure2.link.json")).map_err(|e| e.to_string())?;
    let draft = AnnotationDraft::from_json(&link).map_err(|e| e.to_string())?;
    draft.add_to(&mut doc).map_err(|e| e.to_string())?;
    let bytes = export_document(&doc).map_err(|e| e.to_string())?;
    let golden = std::fs::read(fixture("figure2.golden.json")).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    ensure!(bytes == golden, "export differs from golden file");
    ensure!(doc.annotation_count() == 8, "{} annotations", doc.annotation_count());
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("8 annotations byte-identical, {:.1} ms", elapsed.as_secs_f64() * 1e3))
}

fn query_oracle(corpus: &[Document]) -> Outcome {
    let started = Instant::now();
    let mut rng = common::rng(99);
    let mut checks = 0usize;
    for doc in corpus {
        for ty in common::TYPES {
            ensure!(
                common::ids(doc.select_by_type(ty)) == common::oracle_by_type(doc, ty),
                "select_by_type({ty}) on {}",
                doc.id()
            );
            checks += 1;
        }
        for (ty, name, value) in common::sample_values(doc) {
            ensure!(
                common::ids(doc.select_matching(&ty, &name, &value))
                    == common::oracle_matching(doc, &ty, &name, &value),
                "select_matching({ty},{name},{value:?}) on {}",
                doc.id()
            );
            checks += 1;
        }
        for (s, e) in common::sample_ranges(&mut rng, doc, 10) {
            let got = doc.select_overlapping(s, e).map_err(|e| e.to_string())?;
            ensure!(
                common::ids(got) == common::oracle_overlapping(doc, s, e),
                "select_overlapping({s},{e}) on {}",
                doc.id()
            );
            checks += 1;
        }
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!("{} documents, {checks} queries, {:.2} s", corpus.len(), elapsed.as_secs_f64()))
}

fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let bytes = std::fs::read(&p).unwrap();
                out.push((p, bytes));
            }
        }
    }
    out.sort();
    out
}

fn persistence(corpus: &[Document]) -> Outcome {
    let started = Instant::now();
    let mut c = Collection::new("random");
    for doc in corpus {
        let bytes = export_document(doc).map_err(|e| e.to_string())?;
        let back = import_interchange(&bytes).map_err(|e| e.to_string())?;
        ensure!(&back == doc, "interchange round trip changed {}", doc.id());
        c.add_document(doc.clone()).map_err(|e| e.to_string())?;
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    save_collection(&c, dir.path()).map_err(|e| e.to_string())?;
    let first = snapshot(dir.path());
    let loaded = load_collection(dir.path()).map_err(|e| e.to_string())?;
    ensure!(loaded == c, "loaded collection differs");
    save_collection(&loaded, dir.path()).map_err(|e| e.to_string())?;
    ensure!(snapshot(dir.path()) == first, "save/load/save not byte-identical");
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!("{} documents, {} files, {:.2} s", corpus.len(), first.len(), elapsed.as_secs_f64()))
}

fn permutations(items: &[String]) -> Vec<Vec<String>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head.clone());
            out.push(p);
        }
    }
    out
}

fn random_condition(rng: &mut StdRng) -> Condition {
    let ty = ["a", "b", "c", "d"][rng.random_range(0..4)];
    if rng.random_bool(0.5) {
        Condition::with_attribute(ty, "x")
    } else {
        Condition::exists(ty)
    }
}

fn random_conditions(rng: &mut StdRng, max: usize) -> BTreeSet<Condition> {
    (0..rng.random_range(0..=max)).map(|_| random_condition(rng)).collect()
}

fn pipeline_validation() -> Outcome {
    let r = builtin_registry();
    let none = BTreeSet::new();
    let v = validate_system(&r, &[POS_TAGGER.to_owned()], &none).map_err(|e| e.to_string())?;
    ensure!(
        v.iter().any(|v| v.component == POS_TAGGER && v.condition == Condition::exists("token")),
        "[pos_tagger] not rejected for missing (token,·): {v:?}"
    );
    let order = order_components(&r, [POS_TAGGER, SENTENCE_SPLITTER, TOKENIZER], &none)
        .map_err(|e| e.to_string())?;
    ensure!(
        validate_system(&r, &order, &none).map_err(|e| e.to_string())?.is_empty(),
        "ordering {order:?} does not validate"
    );

    let mut rng = common::rng(4242);
    let (mut solvable, mut unsolvable) = (0, 0);
    for case in 0..50 {
        let mut reg = Registry::new();
        for i in 0..rng.random_range(1..=5) {
            let pre = random_conditions(&mut rng, 1);
            let post = random_conditions(&mut rng, 2).difference(&pre).cloned().collect();
            let mut d = ComponentDescriptor::native(format!("c{i}"));
            d.preconditions = pre;
            d.postconditions = post;
            reg.register(d).map_err(|e| e.to_string())?;
        }
        let initial = random_conditions(&mut rng, 2);
        let all: Vec<String> = reg.names().map(str::to_owned).collect();
        let valid: Vec<Vec<String>> = permutations(&all)
            .into_iter()
            .filter(|p| validate_system(&reg, p, &initial).map(|v| v.is_empty()).unwrap_or(false))
            .collect();
        match order_components(&reg, all.iter().map(String::as_str), &initial) {
            Ok(order) => {
                ensure!(valid.contains(&order), "case {case}: {order:?} is not a valid permutation");
                solvable += 1;
            }
            Err(OrderError::NoValidOrder { .. }) => {
                ensure!(valid.is_empty(), "case {case}: no order found but {} exist", valid.len());
                unsolvable += 1;
            }
            Err(e) => return Err(format!("case {case}: {e}")),
        }
    }
    Ok(format!("order {order:?}; 50 random sets ({solvable} orderable, {unsolvable} not)"))
}

fn html_selection() -> Outcome {
    let text = std::fs::read_to_string(fixture("three_elements.html")).map_err(|e| e.to_string())?;
    let mut doc = Document::new("html", text.trim_end_matches('\n'));
    tokenize_html(&mut doc);
    let lexicon = Lexicon::load(&fixture("figure2.lex")).map_err(|e| e.to_string())?;
    pos_tag(&mut doc, &lexicon);
    let tokens = doc.select_by_type("token");
    let (mut html, mut plain) = (0, 0);
    for t in &tokens {
        let is_html = t.attributes().get("type").and_then(|v| v.as_str()) == Some("HTML");
        let has_pos = t.attributes().get("pos").is_some();
        ensure!(is_html != has_pos, "token {} html={is_html} pos={has_pos}", t.id());
        if is_html {
            html += 1;
        } else {
            plain += 1;
        }
    }
    ensure!(html == 7, "expected 6 tags and 1 entity, saw {html} HTML tokens");
    // Token texts plus the whitespace between them rebuild the document.
    let chars: Vec<char> = doc.text().chars().collect();
    let mut rebuilt = String::new();
    let mut at = 0;
    for t in &tokens {
        let s = t.spans()[0];
        let gap: String = chars[at..s.start].iter().collect();
        ensure!(gap.chars().all(char::is_whitespace), "non-space gap {gap:?} before {}", s.start);
        rebuilt.push_str(&gap);
        rebuilt.push_str(doc.span_text(s).ok_or("span out of range")?);
        at = s.end;
    }
    let tail: String = chars[at..].iter().collect();
    ensure!(tail.chars().all(char::is_whitespace), "non-space tail {tail:?}");
    rebuilt.push_str(&tail);
    ensure!(rebuilt == doc.text(), "reconstruction differs");
    Ok(format!("{html} HTML tokens without pos, {plain} text tokens with pos, text rebuilt"))
}

fn reference_table(name: &str) -> Result<BTreeMap<u8, char>, String> {
    let text = std::fs::read_to_string(fixture(&format!("encodings/{name}.txt"))).map_err(|e| e.to_string())?;
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let mut cols = l.split('\t');
            let mut hex = |what: &str| {
                cols.next()
                    .and_then(|c| u32::from_str_radix(c.trim_start_matches("0x"), 16).ok())
                    .ok_or_else(|| format!("{name}: bad {what} in {l:?}"))
            };
            let byte = hex("byte")?;
            let cp = hex("code point")?;
            Ok((byte as u8, char::from_u32(cp).ok_or("bad code point")?))
        })
        .collect()
}

fn encodings() -> Outcome {
    let mut counts = Vec::new();
    for (enc, name) in [(EncodingId::Iso8859_7, "ISO-8859-7"), (EncodingId::Windows1253, "WINDOWS-1253")] {
        let table = reference_table(name)?;
        for b in 0..=255u8 {
            match table.get(&b) {
                Some(&c) => {
                    ensure!(enc.decode_byte(b) == Some(c), "{name} {b:#04x}: {:?} != {c:?}", enc.decode_byte(b));
                    ensure!(decode(&[b], enc).ok().as_deref() == Some(c.to_string().as_str()), "{name} {b:#04x}");
                }
                None => {
                    ensure!(enc.decode_byte(b).is_none(), "{name} {b:#04x} should be undefined");
                    ensure!(decode(&[b], enc).is_err(), "{name} {b:#04x} decoded");
                }
            }
        }
        counts.push(format!("{name} {} code points", table.len()));
    }
    let bytes = std::fs::read(fixture("greek.iso-8859-7.txt")).map_err(|e| e.to_string())?;
    let mut doc = import_document(&bytes, EncodingId::Iso8859_7, "greek").map_err(|e| e.to_string())?;
    annotium::builtin::tokenize(&mut doc);
    let word = doc
        .select_overlapping(9, 14)
        .map_err(|e| e.to_string())?
        .into_iter()
        .find(|a| a.annotation_type() == "token")
        .ok_or("no token at [9,14)")?;
    ensure!(word.spans()[0] == Span::new(9, 14), "token at {:?}", word.spans());
    ensure!(doc.span_text(Span::new(9, 14)) == Some("κόσμε"), "wrong text at [9,14)");
    let back = import_interchange(&export_document(&doc).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure!(back == doc, "Greek document changed in round trip");
    Ok(format!("{}; Greek spans intact", counts.join(", ")))
}

fn broker() -> Result<Arc<Broker>, String> {
    let config = BrokerConfig::new(env!("CARGO_BIN_EXE_annotium")).with_args(["broker"]);
    start_broker(config).map(Arc::new).map_err(|e| e.to_string())
}

fn stub(name: &str) -> String {
    fixture(&format!("stubs/{name}")).display().to_string()
}

fn wrapper_broker() -> Outcome {
    let b = broker()?;
    let mut r = builtin_registry();
    for (name, script) in [("identity", "identity.sh"), ("crashy", "crash_on_marker.sh")] {
        r.register(ComponentDescriptor::wrapper(name, stub(script))).map_err(|e| e.to_string())?;
    }
    let engine = Engine::new(Arc::new(r)).with_broker(b.clone());

    // identity: export bytes unchanged
    let golden = std::fs::read(fixture("figure2.golden.json")).map_err(|e| e.to_string())?;
    let mut doc = import_interchange(&golden).map_err(|e| e.to_string())?;
    let summary = engine
        .run_component("identity", &mut doc, &Default::default())
        .map_err(|e| e.to_string())?;
    ensure!(summary.is_empty(), "identity reported changes");
    ensure!(export_document(&doc).map_err(|e| e.to_string())? == golden, "identity changed bytes");

    // crash: {OK, FAILED, OK}, the failed document restored
    let mut c = Collection::new("c");
    for (id, text) in [("d1", "first doc."), ("d2", "second CRASH doc."), ("d3", "third doc.")] {
        c.add_document(Document::new(id, text)).map_err(|e| e.to_string())?;
    }
    let before = export_document(c.document("d2").unwrap()).map_err(|e| e.to_string())?;
    let system = System::new("s", [TOKENIZER, "crashy", "identity"]);
    let report = engine.run_system(&system, &mut c, &RunOptions::default()).map_err(|e| e.to_string())?;
    ensure!(
        report.statuses() == [Status::Ok, Status::Failed, Status::Ok],
        "statuses {:?}",
        report.statuses()
    );
    ensure!(
        export_document(c.document("d2").unwrap()).map_err(|e| e.to_string())? == before,
        "failed document not restored"
    );

    // timeout: the child is killed
    let started = Instant::now();
    let err = b
        .exec(&ExecRequest {
            argv: vec![stub("sleep.sh"), "30".into()],
            input: export_document(&Document::new("t", "x")).map_err(|e| e.to_string())?,
            timeout: Duration::from_secs(1),
        })
        .err()
        .ok_or("sleep stub was not stopped")?;
    let ExecError::Timeout { pid, .. } = err else {
        return Err(format!("expected timeout, got {err}"));
    };
    let waited = started.elapsed();
    ensure!(waited < Duration::from_secs(5), "timeout took {waited:?}");
    ensure!(!Path::new(&format!("/proc/{pid}")).exists(), "child {pid} still running");
    Ok(format!("identity byte-identical; {{OK,FAILED,OK}}; child {pid} killed after {:.2} s", waited.as_secs_f64()))
}

fn remote_local() -> Outcome {
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    rt.block_on(async {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut config = annotium_server::ServerConfig::new(dir.path());
        config.port = 0;
        let engine = Engine::new(Arc::new(builtin_registry()));
        let server = annotium_server::serve(config, engine).await.map_err(|e| e.to_string())?;
        let base = format!("http://{}/api/v1", server.addr);
        let client = reqwest::Client::new();
        let err = |e: reqwest::Error| e.to_string();
        let lexicon = fixture("figure2.lex").display().to_string();
        let text = std::fs::read(fixture("figure2.txt")).map_err(|e| e.to_string())?;

        client.post(format!("{base}/collections")).json(&json!({"name": "demo"})).send().await.map_err(err)?;
        let r = client
            .post(format!("{base}/collections/demo/documents?id=fig2"))
            .header("content-type", "text/plain")
            .body(text.clone())
            .send()
            .await
            .map_err(err)?;
        ensure!(r.status().as_u16() == 201, "upload status {}", r.status());
        let r = client
            .post(format!("{base}/collections/demo/documents/fig2/run"))
            .json(&json!({"system": "standard", "params": {"pos_tagger": {"lexicon": lexicon}}}))
            .send()
            .await
            .map_err(err)?;
        ensure!(r.status().is_success(), "run status {}", r.status());
        let remote = client
            .get(format!("{base}/collections/demo/documents/fig2"))
            .send()
            .await
            .map_err(err)?
            .bytes()
            .await
            .map_err(err)?;

        let mut local = import_document(&text, EncodingId::Utf8, "fig2").map_err(|e| e.to_string())?;
        let mut col = Collection::new("local");
        col.add_document(local.clone()).map_err(|e| e.to_string())?;
        let engine = Engine::new(Arc::new(builtin_registry()));
        let system = standard_system(Some(&fixture("figure2.lex")));
        engine.run_system(&system, &mut col, &RunOptions::default()).map_err(|e| e.to_string())?;
        local = col.document("fig2").cloned().ok_or("local document missing")?;
        ensure!(
            remote.as_ref() == export_document(&local).map_err(|e| e.to_string())?.as_slice(),
            "remote export differs from local run_system output"
        );

        let r = client
            .post(format!("{base}/collections/demo/documents?id=bare"))
            .header("content-type", "text/plain")
            .body(text)
            .send()
            .await
            .map_err(err)?;
        ensure!(r.status().as_u16() == 201, "second upload status {}", r.status());
        let r = client
            .post(format!("{base}/collections/demo/documents/bare/run"))
            .json(&json!({"components": [POS_TAGGER], "params": {"pos_tagger": {"lexicon": lexicon}}}))
            .send()
            .await
            .map_err(err)?;
        let status = r.status().as_u16();
        let body: Value = r.json().await.map_err(err)?;
        ensure!(status == 422, "expected 422, got {status}: {body}");
        let expected = json!({"component": "pos_tagger", "condition": {"type": "token"}});
        ensure!(
            body["detail"].as_array().is_some_and(|v| v.contains(&expected)),
            "422 body lacks violation: {body}"
        );
        server.shutdown().await.map_err(|e| e.to_string())?;
        Ok(format!("export-identical ({} bytes); 422 lists {expected}", remote.len()))
    })
}

fn measure<T>(build: impl FnOnce() -> T) -> (T, isize) {
    let before = LIVE.load(Ordering::Relaxed);
    let value = build();
    (value, LIVE.load(Ordering::Relaxed) - before)
}

fn interning(corpus: &[Document]) -> Outcome {
    let mut rng = common::rng(77);
    for doc in corpus {
        let compact = CompactDocument::from_document(doc).map_err(|e| e.to_string())?;
        ensure!(compact.to_document() == *doc, "{} changed when interned", doc.id());
        for ty in common::TYPES {
            ensure!(compact.select_by_type(ty) == common::ids(doc.select_by_type(ty)), "by_type {ty}");
        }
        for (ty, name, value) in common::sample_values(doc) {
            ensure!(
                compact.select_matching(&ty, &name, &value) == common::ids(doc.select_matching(&ty, &name, &value)),
                "matching {ty} {name} on {}",
                doc.id()
            );
        }
        for (s, e) in common::sample_ranges(&mut rng, doc, 5) {
            let a = compact.select_overlapping(s, e).map_err(|e| e.to_string())?;
            let b = common::ids(doc.select_overlapping(s, e).map_err(|e| e.to_string())?);
            ensure!(a == b, "overlapping {s},{e} on {}", doc.id());
        }
    }
    let text = "word ".repeat(10_000);
    let (doc, plain) = measure(|| {
        let mut doc = Document::new("big", text.as_str());
        for i in 0..10_000 {
            doc.add_annotation(
                "token",
                vec![Span::new(i * 5, i * 5 + 4)],
                vec![Attribute::new("type", "ELW"), Attribute::new("pos", "NN")],
            )
            .expect("valid token");
        }
        doc
    });
    let (compact, interned) = measure(|| CompactDocument::from_document(&doc));
    let compact = compact.map_err(|e| e.to_string())?;
    ensure!(compact.select_by_type("token").len() == 10_000, "interned copy lost tokens");
    ensure!(interned < plain, "interned {interned} B is not below uninterned {plain} B");
    Ok(format!(
        "{} documents query-identical; 10,000 tokens: {interned} B interned < {plain} B plain",
        corpus.len()
    ))
}

fn run(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    match outcome {
        Ok(detail) => {
            println!("PASS {name}: {detail}");
            true
        }
        Err(why) => {
            println!("FAIL {name}: {why}");
            false
        }
    }
}

fn main() -> ExitCode {
    let corpus = corpus();
    let results = [
        run("figure2-golden", figure2_golden),
        run("query-oracle", || query_oracle(&corpus)),
        run("persistence-round-trip", || persistence(&corpus)),
        run("pipeline-validation", pipeline_validation),
        run("html-aware-selection", html_selection),
        run("encoding", encodings),
        run("wrapper-broker", wrapper_broker),
        run("remote-local-equivalence", remote_local),
        run("interning", || interning(&corpus)),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
