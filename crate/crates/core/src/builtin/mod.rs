//! Native demonstration components: plain and HTML-aware tokenizers, a
//! sentence splitter and a lexicon-driven part-of-speech tagger.

mod html;
mod pos;
mod sentence;
mod tokenizer;

use std::sync::Arc;

pub use html::{scan_html, tokenize_html};
pub use pos::{pos_tag, Lexicon, LexiconError, FALLBACK_TAG, POS};
pub use sentence::{split_sentences, CONSTITUENTS, SENTENCE};
pub use tokenizer::{scan, tokenize, RawToken, TokenClass, TOKEN, TOKEN_CLASS};

use crate::component::{
    BoundParams, ComponentDescriptor, ComponentError, Condition, NativeComponent, ParamKind,
    ParameterSpec, Registry, RegistryError, System,
};
use crate::model::Document;

pub const TOKENIZER: &str = "tokenizer";
pub const HTML_TOKENIZER: &str = "html_tokenizer";
pub const SENTENCE_SPLITTER: &str = "sentence_splitter";
pub const POS_TAGGER: &str = "pos_tagger";
pub const LEXICON_PARAM: &str = "lexicon";
pub const STANDARD_SYSTEM: &str = "standard";

/// tokenizer → sentence_splitter → pos_tagger, with the lexicon bound if
/// given.
pub fn standard_system(lexicon: Option<&std::path::Path>) -> System {
    let system = System::new(STANDARD_SYSTEM, [TOKENIZER, SENTENCE_SPLITTER, POS_TAGGER]);
    match lexicon {
        Some(p) => system.with_param(POS_TAGGER, LEXICON_PARAM, p.display().to_string()),
        None => system,
    }
}

fn token_producer(name: &str, viewer: &str) -> ComponentDescriptor {
    ComponentDescriptor::native(name)
        .post(Condition::exists(TOKEN))
        .post(Condition::with_attribute(TOKEN, TOKEN_CLASS))
        .viewer(viewer)
}

pub fn tokenizer_descriptor() -> ComponentDescriptor {
    token_producer(TOKENIZER, "text-highlight")
}

pub fn html_tokenizer_descriptor() -> ComponentDescriptor {
    token_producer(HTML_TOKENIZER, "html-preview")
}

pub fn sentence_splitter_descriptor() -> ComponentDescriptor {
    ComponentDescriptor::native(SENTENCE_SPLITTER)
        .pre(Condition::exists(TOKEN))
        .post(Condition::exists(SENTENCE))
        .post(Condition::with_attribute(SENTENCE, CONSTITUENTS))
        .viewer("constituents-outline")
}

/// The tagger works sentence by sentence, so it also requires sentences.
pub fn pos_tagger_descriptor() -> ComponentDescriptor {
    ComponentDescriptor::native(POS_TAGGER)
        .pre(Condition::exists(TOKEN))
        .pre(Condition::exists(SENTENCE))
        .post(Condition::with_attribute(TOKEN, POS))
        .param(ParameterSpec::required(LEXICON_PARAM, ParamKind::Path))
        .viewer("text-highlight")
        .viewer("attribute-table")
}

struct Tokenizer;
struct HtmlTokenizer;
struct SentenceSplitter;
struct PosTagger;

impl NativeComponent for Tokenizer {
    fn run(&self, doc: &mut Document, _: &BoundParams) -> Result<(), ComponentError> {
        tokenize(doc);
        Ok(())
    }
}

impl NativeComponent for HtmlTokenizer {
    fn run(&self, doc: &mut Document, _: &BoundParams) -> Result<(), ComponentError> {
        tokenize_html(doc);
        Ok(())
    }
}

impl NativeComponent for SentenceSplitter {
    fn run(&self, doc: &mut Document, _: &BoundParams) -> Result<(), ComponentError> {
        split_sentences(doc);
        Ok(())
    }
}

impl NativeComponent for PosTagger {
    fn run(&self, doc: &mut Document, params: &BoundParams) -> Result<(), ComponentError> {
        let path = params
            .path(LEXICON_PARAM)
            .ok_or_else(|| ComponentError::Failed("lexicon parameter is not bound".into()))?;
        let lexicon = Lexicon::load(path).map_err(|e| ComponentError::Resource {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        pos_tag(doc, &lexicon);
        Ok(())
    }
}

/// Registers the four builtin components with their implementations.
pub fn register_builtins(registry: &mut Registry) -> Result<(), RegistryError> {
    registry.register_native(tokenizer_descriptor(), Arc::new(Tokenizer))?;
    registry.register_native(html_tokenizer_descriptor(), Arc::new(HtmlTokenizer))?;
    registry.register_native(sentence_splitter_descriptor(), Arc::new(SentenceSplitter))?;
    registry.register_native(pos_tagger_descriptor(), Arc::new(PosTagger))?;
    Ok(())
}

/// A registry holding just the builtin components.
pub fn builtin_registry() -> Registry {
    let mut r = Registry::new();
    register_builtins(&mut r).expect("builtin descriptors are valid and distinct");
    r
}
