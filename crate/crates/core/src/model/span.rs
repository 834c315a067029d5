use std::fmt;

/// Half-open character interval `[start, end)`.
///
/// Construction does not validate; documents check spans against their text
/// when annotations are added and during validation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub const fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    /// Overlap test used by range queries.
    ///
    /// A non-empty query `[s, e)` matches when `start < e && end > s`. A
    /// zero-width query `[p, p)` matches spans with `start <= p < end` and
    /// zero-width spans sitting exactly at `p`.
    pub fn intersects(&self, start: usize, end: usize) -> bool {
        if start == end {
            (self.start <= start && start < self.end) || (self.start == start && self.end == start)
        } else {
            self.start < end && self.end > start
        }
    }
}

impl From<(usize, usize)> for Span {
    fn from((start, end): (usize, usize)) -> Self {
        Span { start, end }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{})", self.start, self.end)
    }
}
