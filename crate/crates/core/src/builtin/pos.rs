use std::collections::HashMap;
use std::path::Path;

use super::tokenizer::{TokenClass, TOKEN, TOKEN_CLASS};
use crate::model::{AnnotationId, Attribute, Document};

pub const POS: &str = "pos";
/// Tag given to alphabetic and numeric tokens missing from the lexicon.
pub const FALLBACK_TAG: &str = "NN";

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("cannot read lexicon {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("lexicon line {line}: {message}")]
    Format { line: usize, message: String },
}

/// Case-sensitive surface form → tag map.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: HashMap<String, String>,
}

impl Lexicon {
    /// Parses `surface<TAB>tag` lines; blank lines and `#` comments are
    /// skipped.
    pub fn parse(source: &str) -> Result<Self, LexiconError> {
        let mut entries = HashMap::new();
        for (n, line) in source.lines().enumerate() {
            let line_no = n + 1;
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: &str| LexiconError::Format {
                line: line_no,
                message: message.to_owned(),
            };
            let (surface, tag) = line.split_once('\t').ok_or_else(|| err("expected surface<TAB>tag"))?;
            let tag = tag.trim();
            if surface.is_empty() || tag.is_empty() {
                return Err(err("empty surface form or tag"));
            }
            if entries.insert(surface.to_owned(), tag.to_owned()).is_some() {
                return Err(err(&format!("duplicate surface form {surface:?}")));
            }
        }
        Ok(Lexicon { entries })
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn tag(&self, surface: &str) -> Option<&str> {
        self.entries.get(surface).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Writes `pos` on every non-HTML token: the lexicon tag for its exact
/// text, else the text itself for punctuation, else [`FALLBACK_TAG`].
/// Returns the ids of tagged tokens.
pub fn pos_tag(doc: &mut Document, lexicon: &Lexicon) -> Vec<AnnotationId> {
    let mut assignments = Vec::new();
    for tok in doc.select_by_type(TOKEN) {
        let class = tok.attribute(TOKEN_CLASS).and_then(|v| v.as_str());
        if class == Some(TokenClass::Html.as_str()) {
            continue;
        }
        let surface: String = match doc.annotated_text(tok.id()) {
            Ok(parts) => parts.concat(),
            Err(_) => continue,
        };
        let is_punc = match class {
            Some(c) => c == TokenClass::Punc.as_str(),
            None => {
                let mut cs = surface.chars();
                cs.next().is_some_and(|c| !c.is_alphanumeric()) && cs.next().is_none()
            }
        };
        let tag = match lexicon.tag(&surface) {
            Some(t) => t.to_owned(),
            None if is_punc => surface.clone(),
            None => FALLBACK_TAG.to_owned(),
        };
        assignments.push((tok.id(), tag));
    }
    for (id, tag) in &assignments {
        doc.put_annotation_attribute(*id, Attribute::new(POS, tag.as_str()))
            .expect("token exists");
    }
    assignments.into_iter().map(|(id, _)| id).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::tokenizer::tokenize;

    fn figure2_lexicon() -> Lexicon {
        Lexicon::parse("# sample\nThis\tPN\nis\tVB\na\tIDT\nsimple\tADJ\nsentence\tNN\n").unwrap()
    }

    fn tags(doc: &Document) -> Vec<String> {
        doc.select_by_type(TOKEN)
            .iter()
            .map(|t| t.attribute(POS).map(|v| v.to_string()).unwrap_or_default())
            .collect()
    }

    #[test]
    fn figure2_tags() {
        let mut doc = Document::new("d", "This is a simple sentence.");
        tokenize(&mut doc);
        pos_tag(&mut doc, &figure2_lexicon());
        assert_eq!(tags(&doc), ["PN", "VB", "IDT", "ADJ", "NN", "."]);
    }

    #[test]
    fn unknown_word_falls_back() {
        let mut doc = Document::new("d", "zorblax 42");
        tokenize(&mut doc);
        pos_tag(&mut doc, &Lexicon::default());
        assert_eq!(tags(&doc), ["NN", "NN"]);
    }

    #[test]
    fn retagging_is_idempotent() {
        let mut doc = Document::new("d", "This is a simple sentence.");
        tokenize(&mut doc);
        pos_tag(&mut doc, &figure2_lexicon());
        let once = doc.clone();
        pos_tag(&mut doc, &figure2_lexicon());
        assert_eq!(doc, once);
    }

    #[test]
    fn lexicon_format_errors() {
        assert!(matches!(
            Lexicon::parse("a\tX\na\tY\n"),
            Err(LexiconError::Format { line: 2, .. })
        ));
        assert!(matches!(
            Lexicon::parse("novalue\n"),
            Err(LexiconError::Format { line: 1, .. })
        ));
        assert!(matches!(
            Lexicon::parse("x\t \n"),
            Err(LexiconError::Format { line: 1, .. })
        ));
        assert!(matches!(
            Lexicon::load(Path::new("/nonexistent/lex.tsv")),
            Err(LexiconError::Io { .. })
        ));
    }
}
