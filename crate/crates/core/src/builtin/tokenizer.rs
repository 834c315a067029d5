use std::fmt;

use crate::model::{AnnotationId, Attribute, Document, Span};

pub const TOKEN: &str = "token";
pub const TOKEN_CLASS: &str = "type";

/// Surface class written to a token's `type` attribute.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TokenClass {
    /// Capitalised word: first letter upper case, no other upper case.
    Efw,
    /// Word without upper-case letters.
    Elw,
    /// Any other casing (`USA`, `iPhone`).
    Eaw,
    Num,
    Punc,
    Html,
}

impl TokenClass {
    pub fn as_str(self) -> &'static str {
        match self {
            TokenClass::Efw => "EFW",
            TokenClass::Elw => "ELW",
            TokenClass::Eaw => "EAW",
            TokenClass::Num => "NUM",
            TokenClass::Punc => "PUNC",
            TokenClass::Html => "HTML",
        }
    }

    pub fn of_word(word: &str) -> TokenClass {
        let mut chars = word.chars();
        let first_upper = chars.next().is_some_and(char::is_uppercase);
        let rest_upper = chars.any(char::is_uppercase);
        match (first_upper, rest_upper) {
            (true, false) => TokenClass::Efw,
            (false, false) => TokenClass::Elw,
            _ => TokenClass::Eaw,
        }
    }
}

impl fmt::Display for TokenClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Run {
    Alpha,
    Digit,
}

fn run_of(c: char) -> Option<Run> {
    if c.is_numeric() {
        Some(Run::Digit)
    } else if c.is_alphabetic() {
        Some(Run::Alpha)
    } else {
        None
    }
}

/// A token found in text, in character offsets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawToken {
    pub span: Span,
    pub class: TokenClass,
}

/// Splits `chars[from..to]` into plain tokens; spans index into `chars`.
pub(crate) fn scan_plain(chars: &[char], from: usize, to: usize, out: &mut Vec<RawToken>) {
    let mut i = from;
    while i < to {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        match run_of(c) {
            Some(kind) => {
                let start = i;
                while i < to && run_of(chars[i]) == Some(kind) {
                    i += 1;
                }
                let class = match kind {
                    Run::Digit => TokenClass::Num,
                    Run::Alpha => TokenClass::of_word(&chars[start..i].iter().collect::<String>()),
                };
                out.push(RawToken {
                    span: Span::new(start, i),
                    class,
                });
            }
            None => {
                out.push(RawToken {
                    span: Span::new(i, i + 1),
                    class: TokenClass::Punc,
                });
                i += 1;
            }
        }
    }
}

pub fn scan(text: &str) -> Vec<RawToken> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    scan_plain(&chars, 0, chars.len(), &mut out);
    out
}

pub(crate) fn add_tokens(doc: &mut Document, tokens: Vec<RawToken>) -> Vec<AnnotationId> {
    tokens
        .into_iter()
        .map(|t| {
            doc.add_annotation(
                TOKEN,
                vec![t.span],
                vec![Attribute::new(TOKEN_CLASS, t.class.as_str())],
            )
            .expect("scanner spans lie within the text and are disjoint")
        })
        .collect()
}

/// Adds one `token` annotation per alphabetic run, digit run or other
/// non-whitespace character, left to right.
pub fn tokenize(doc: &mut Document) -> Vec<AnnotationId> {
    let tokens = scan(doc.text());
    add_tokens(doc, tokens)
}
