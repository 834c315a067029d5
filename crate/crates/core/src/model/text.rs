//! Document text addressed by character (Unicode scalar value) offsets.

const CHECKPOINT_STRIDE: usize = 64;

/// Owned text with a sparse char→byte index.
///
/// ASCII text needs no index. Otherwise the byte offset of every
/// `CHECKPOINT_STRIDE`-th character is recorded and lookups walk forward
/// from the nearest checkpoint.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Text {
    raw: String,
    char_len: usize,
    checkpoints: Vec<usize>,
}

impl Text {
    pub fn new(raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let mut char_len = 0;
        let mut checkpoints = Vec::new();
        if raw.is_ascii() {
            char_len = raw.len();
        } else {
            for (byte, _) in raw.char_indices() {
                if char_len % CHECKPOINT_STRIDE == 0 {
                    checkpoints.push(byte);
                }
                char_len += 1;
            }
        }
        Text {
            raw,
            char_len,
            checkpoints,
        }
    }

    pub fn as_str(&self) -> &str {
        &self.raw
    }

    /// Length in characters.
    pub fn len(&self) -> usize {
        self.char_len
    }

    pub fn is_empty(&self) -> bool {
        self.char_len == 0
    }

    /// Byte offset of character `index`; `index == len()` maps to the end.
    pub fn byte_offset(&self, index: usize) -> Option<usize> {
        if index > self.char_len {
            return None;
        }
        if index == self.char_len {
            return Some(self.raw.len());
        }
        if self.checkpoints.is_empty() {
            return Some(index);
        }
        let base = self.checkpoints[index / CHECKPOINT_STRIDE];
        let skip = index % CHECKPOINT_STRIDE;
        self.raw[base..].char_indices().nth(skip).map(|(b, _)| base + b)
    }

    /// Character offset of a byte position that lies on a char boundary.
    pub fn char_offset(&self, byte: usize) -> Option<usize> {
        if !self.raw.is_char_boundary(byte) {
            return None;
        }
        if self.checkpoints.is_empty() {
            return Some(byte);
        }
        let block = self.checkpoints.partition_point(|&b| b <= byte) - 1;
        let base = self.checkpoints[block];
        Some(block * CHECKPOINT_STRIDE + self.raw[base..byte].chars().count())
    }

    /// Slice by character offsets `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Option<&str> {
        if start > end {
            return None;
        }
        let from = self.byte_offset(start)?;
        let to = self.byte_offset(end)?;
        Some(&self.raw[from..to])
    }

    pub fn into_string(self) -> String {
        self.raw
    }
}

impl From<&str> for Text {
    fn from(s: &str) -> Self {
        Text::new(s)
    }
}

impl From<String> for Text {
    fn from(s: String) -> Self {
        Text::new(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_offsets_are_identity() {
        let t = Text::new("This is a simple sentence.");
        assert_eq!(t.len(), 26);
        assert_eq!(t.slice(17, 25), Some("sentence"));
        assert_eq!(t.byte_offset(26), Some(26));
        assert_eq!(t.byte_offset(27), None);
    }

    #[test]
    fn greek_offsets_count_scalar_values() {
        let t = Text::new("αβ γ");
        assert_eq!(t.len(), 4);
        assert_eq!(t.slice(0, 2), Some("αβ"));
        assert_eq!(t.slice(3, 4), Some("γ"));
        assert_eq!(t.char_offset(5), Some(3));
        assert_eq!(t.char_offset(1), None);
    }

    #[test]
    fn long_text_crosses_checkpoints() {
        let s: String = "ωa".repeat(200);
        let t = Text::new(s.clone());
        for (i, (b, _)) in s.char_indices().enumerate() {
            assert_eq!(t.byte_offset(i), Some(b));
            assert_eq!(t.char_offset(b), Some(i));
        }
        assert_eq!(t.slice(130, 132), Some("ωa"));
    }
}
