use super::{Annotation, AttributeValue, Document, ModelError};

/// Composable annotation filter shared by the command line and HTTP query
/// surfaces. Unset fields do not constrain the result.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Query {
    pub annotation_type: Option<String>,
    pub attribute: Option<String>,
    pub value: Option<AttributeValue>,
    pub range: Option<(usize, usize)>,
}

impl Query {
    pub fn of_type(t: impl Into<String>) -> Self {
        Query {
            annotation_type: Some(t.into()),
            ..Default::default()
        }
    }

    pub fn with_attribute(mut self, name: impl Into<String>, value: Option<AttributeValue>) -> Self {
        self.attribute = Some(name.into());
        self.value = value;
        self
    }

    pub fn with_range(mut self, start: usize, end: usize) -> Self {
        self.range = Some((start, end));
        self
    }

    /// Builds a query from loosely supplied parts, as they arrive from a
    /// command line or a URL. A range needs both ends; a value is matched as
    /// a STRING attribute.
    pub fn from_parts(
        annotation_type: Option<String>,
        start: Option<usize>,
        end: Option<usize>,
        attribute: Option<String>,
        value: Option<String>,
    ) -> Result<Self, ModelError> {
        let range = match (start, end) {
            (Some(s), Some(e)) if s > e => return Err(ModelError::InvalidRange { start: s, end: e }),
            (Some(s), Some(e)) => Some((s, e)),
            (None, None) => None,
            _ => {
                return Err(ModelError::InvalidQuery(
                    "a range needs both start and end".into(),
                ))
            }
        };
        if value.is_some() && attribute.is_none() {
            return Err(ModelError::InvalidQuery(
                "a value filter needs an attribute name".into(),
            ));
        }
        Ok(Query {
            annotation_type,
            attribute,
            value: value.map(AttributeValue::String),
            range,
        })
    }

    /// Results come back in canonical order.
    pub fn run<'d>(&self, doc: &'d Document) -> Result<Vec<&'d Annotation>, ModelError> {
        if self.value.is_some() && self.attribute.is_none() {
            return Err(ModelError::InvalidQuery(
                "a value filter needs an attribute name".into(),
            ));
        }
        let mut out = match (&self.annotation_type, &self.attribute, &self.value) {
            (Some(t), Some(name), Some(value)) => doc.select_matching(t, name, value),
            (Some(t), _, _) => doc.select_by_type(t),
            (None, _, _) => match self.range {
                Some((s, e)) => doc.select_overlapping(s, e)?,
                None => {
                    let mut all: Vec<&Annotation> = doc.annotations().collect();
                    super::document::sort_canonical(&mut all);
                    all
                }
            },
        };
        if let Some((s, e)) = self.range {
            if s > e {
                return Err(ModelError::InvalidRange { start: s, end: e });
            }
            out.retain(|a| a.intersects(s, e));
        }
        if let Some(name) = &self.attribute {
            match &self.value {
                Some(v) => out.retain(|a| a.attribute(name) == Some(v)),
                None => out.retain(|a| a.attributes().contains(name)),
            }
        }
        Ok(out)
    }
}
