//! Tokenizer that keeps HTML markup and character entities as single
//! `HTML` tokens and tokenizes the remaining text normally.

use super::tokenizer::{add_tokens, scan_plain, RawToken, TokenClass};
use crate::model::{AnnotationId, Document, Span};

/// End (exclusive) of a markup region starting at `chars[i] == '<'`, if the
/// region is terminated.
fn markup_end(chars: &[char], i: usize) -> Option<usize> {
    let rest = &chars[i..];
    if rest.starts_with(&['<', '!', '-', '-']) {
        let body = &chars[i + 4..];
        return body
            .windows(3)
            .position(|w| w == ['-', '-', '>'])
            .map(|p| i + 4 + p + 3);
    }
    // Only `<x`, `</`, `<!` and `<?` open markup; `a < b` stays punctuation.
    let opener = rest.get(1)?;
    if !(opener.is_ascii_alphabetic() || matches!(opener, '/' | '!' | '?')) {
        return None;
    }
    for (k, &c) in rest.iter().enumerate().skip(1) {
        match c {
            '>' => return Some(i + k + 1),
            '<' => return None,
            _ => {}
        }
    }
    None
}

/// End (exclusive) of an entity `&name;`, `&#123;` or `&#x1F;` at `i`.
fn entity_end(chars: &[char], i: usize) -> Option<usize> {
    let mut j = i + 1;
    let body_start;
    if chars.get(j) == Some(&'#') {
        j += 1;
        let hex = matches!(chars.get(j), Some('x' | 'X'));
        if hex {
            j += 1;
        }
        body_start = j;
        while j < chars.len()
            && (if hex {
                chars[j].is_ascii_hexdigit()
            } else {
                chars[j].is_ascii_digit()
            })
        {
            j += 1;
        }
    } else {
        body_start = j;
        if !chars.get(j).is_some_and(char::is_ascii_alphabetic) {
            return None;
        }
        while j < chars.len() && chars[j].is_ascii_alphanumeric() {
            j += 1;
        }
    }
    (j > body_start && chars.get(j) == Some(&';')).then_some(j + 1)
}

pub fn scan_html(text: &str) -> Vec<RawToken> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut plain_from = 0;
    let mut i = 0;
    while i < chars.len() {
        let end = match chars[i] {
            '<' => markup_end(&chars, i),
            '&' => entity_end(&chars, i),
            _ => None,
        };
        match end {
            Some(end) => {
                scan_plain(&chars, plain_from, i, &mut out);
                out.push(RawToken {
                    span: Span::new(i, end),
                    class: TokenClass::Html,
                });
                i = end;
                plain_from = end;
            }
            None => i += 1,
        }
    }
    scan_plain(&chars, plain_from, chars.len(), &mut out);
    out
}

/// Adds `token` annotations, flagging markup and entities with
/// `type=HTML`. An unterminated `<` is ordinary punctuation.
pub fn tokenize_html(doc: &mut Document) -> Vec<AnnotationId> {
    let tokens = scan_html(doc.text());
    add_tokens(doc, tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn show(text: &str) -> Vec<(String, &'static str, usize, usize)> {
        let chars: Vec<char> = text.chars().collect();
        scan_html(text)
            .into_iter()
            .map(|t| {
                (
                    chars[t.span.start..t.span.end].iter().collect(),
                    t.class.as_str(),
                    t.span.start,
                    t.span.end,
                )
            })
            .collect()
    }

    fn t(s: &str, c: &'static str, a: usize, b: usize) -> (String, &'static str, usize, usize) {
        (s.to_owned(), c, a, b)
    }

    #[test]
    fn bold_markup() {
        assert_eq!(
            show("<b>Hi</b>"),
            vec![t("<b>", "HTML", 0, 3), t("Hi", "EFW", 3, 5), t("</b>", "HTML", 5, 9)]
        );
    }

    #[test]
    fn entities() {
        assert_eq!(
            show("a &amp; b"),
            vec![t("a", "ELW", 0, 1), t("&amp;", "HTML", 2, 7), t("b", "ELW", 8, 9)]
        );
        assert_eq!(show("&#945;")[0].1, "HTML");
        assert_eq!(show("&#x3B1;")[0].1, "HTML");
        assert_eq!(show("AT&T")[1], t("&", "PUNC", 2, 3));
        assert_eq!(show("&;")[0], t("&", "PUNC", 0, 1));
    }

    #[test]
    fn unterminated_markup_is_punctuation() {
        assert_eq!(
            show("x < 3"),
            vec![t("x", "ELW", 0, 1), t("<", "PUNC", 2, 3), t("3", "NUM", 4, 5)]
        );
        assert_eq!(show("<b")[0], t("<", "PUNC", 0, 1));
        assert_eq!(show("<!-- open")[0], t("<", "PUNC", 0, 1));
    }

    #[test]
    fn comments_and_attributes() {
        assert_eq!(
            show(r#"<!-- a > b --><a href="x y">Go</a>"#),
            vec![
                t("<!-- a > b -->", "HTML", 0, 14),
                t(r#"<a href="x y">"#, "HTML", 14, 28),
                t("Go", "EFW", 28, 30),
                t("</a>", "HTML", 30, 34),
            ]
        );
    }

    #[test]
    fn tokens_and_whitespace_rebuild_text() {
        let text = "<p>Hello, <i>big</i> world &amp; 42 friends!</p>\n<br/> x < y";
        let chars: Vec<char> = text.chars().collect();
        let mut rebuilt = String::new();
        let mut pos = 0;
        for tok in scan_html(text) {
            let gap: String = chars[pos..tok.span.start].iter().collect();
            assert!(gap.chars().all(char::is_whitespace), "{gap:?}");
            rebuilt.push_str(&gap);
            rebuilt.extend(&chars[tok.span.start..tok.span.end]);
            pos = tok.span.end;
        }
        rebuilt.extend(&chars[pos..]);
        assert_eq!(rebuilt, text);
    }
}
