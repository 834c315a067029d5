//! Input filters: byte sequences in a supported encoding to Unicode text.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::tables;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EncodingId {
    #[serde(rename = "UTF-8")]
    Utf8,
    #[serde(rename = "UTF-16LE")]
    Utf16Le,
    #[serde(rename = "UTF-16BE")]
    Utf16Be,
    #[serde(rename = "ISO-8859-1")]
    Iso8859_1,
    #[serde(rename = "ISO-8859-7")]
    Iso8859_7,
    #[serde(rename = "WINDOWS-1252")]
    Windows1252,
    #[serde(rename = "WINDOWS-1253")]
    Windows1253,
}

impl EncodingId {
    pub const ALL: [EncodingId; 7] = [
        EncodingId::Utf8,
        EncodingId::Utf16Le,
        EncodingId::Utf16Be,
        EncodingId::Iso8859_1,
        EncodingId::Iso8859_7,
        EncodingId::Windows1252,
        EncodingId::Windows1253,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EncodingId::Utf8 => "UTF-8",
            EncodingId::Utf16Le => "UTF-16LE",
            EncodingId::Utf16Be => "UTF-16BE",
            EncodingId::Iso8859_1 => "ISO-8859-1",
            EncodingId::Iso8859_7 => "ISO-8859-7",
            EncodingId::Windows1252 => "WINDOWS-1252",
            EncodingId::Windows1253 => "WINDOWS-1253",
        }
    }

    fn upper_half(self) -> Option<&'static [u16; 128]> {
        match self {
            EncodingId::Iso8859_7 => Some(&tables::ISO_8859_7),
            EncodingId::Windows1252 => Some(&tables::WINDOWS_1252),
            EncodingId::Windows1253 => Some(&tables::WINDOWS_1253),
            _ => None,
        }
    }

    /// Decodes one byte of a single-byte encoding; `None` if undefined or
    /// the encoding is multi-byte.
    pub fn decode_byte(self, b: u8) -> Option<char> {
        match self {
            EncodingId::Iso8859_1 => Some(char::from(b)),
            EncodingId::Utf8 | EncodingId::Utf16Le | EncodingId::Utf16Be => None,
            _ if b < 0x80 => Some(char::from(b)),
            _ => {
                let cp = self.upper_half()?[(b - 0x80) as usize];
                if cp == 0xFFFF {
                    None
                } else {
                    char::from_u32(cp as u32)
                }
            }
        }
    }
}

impl fmt::Display for EncodingId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown encoding {0:?}")]
pub struct UnknownEncoding(pub String);

impl FromStr for EncodingId {
    type Err = UnknownEncoding;

    /// Case-insensitive; common aliases accepted.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace('_', "-");
        Ok(match norm.as_str() {
            "UTF-8" | "UTF8" => EncodingId::Utf8,
            "UTF-16LE" | "UTF16LE" => EncodingId::Utf16Le,
            "UTF-16BE" | "UTF16BE" => EncodingId::Utf16Be,
            "ISO-8859-1" | "LATIN1" | "LATIN-1" => EncodingId::Iso8859_1,
            "ISO-8859-7" | "GREEK" => EncodingId::Iso8859_7,
            "WINDOWS-1252" | "CP1252" => EncodingId::Windows1252,
            "WINDOWS-1253" | "CP1253" => EncodingId::Windows1253,
            _ => return Err(UnknownEncoding(s.to_owned())),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("cannot decode {encoding}: invalid byte sequence at offset {offset}")]
pub struct DecodeError {
    pub encoding: EncodingId,
    pub offset: usize,
}

/// Decodes `bytes` to text. A leading byte-order mark is dropped for the
/// Unicode encodings.
pub fn decode(bytes: &[u8], encoding: EncodingId) -> Result<String, DecodeError> {
    let err = |offset| DecodeError { encoding, offset };
    match encoding {
        EncodingId::Utf8 => {
            let (body, skipped) = match bytes.strip_prefix(b"\xEF\xBB\xBF") {
                Some(rest) => (rest, 3),
                None => (bytes, 0),
            };
            std::str::from_utf8(body)
                .map(str::to_owned)
                .map_err(|e| err(skipped + e.valid_up_to()))
        }
        EncodingId::Utf16Le | EncodingId::Utf16Be => decode_utf16(bytes, encoding),
        _ => bytes
            .iter()
            .enumerate()
            .map(|(i, &b)| encoding.decode_byte(b).ok_or_else(|| err(i)))
            .collect(),
    }
}

fn decode_utf16(bytes: &[u8], encoding: EncodingId) -> Result<String, DecodeError> {
    let err = |offset| DecodeError { encoding, offset };
    let units: Vec<u16> = bytes
        .chunks(2)
        .enumerate()
        .map(|(i, pair)| match (pair, encoding) {
            ([a, b], EncodingId::Utf16Le) => Ok(u16::from_le_bytes([*a, *b])),
            ([a, b], _) => Ok(u16::from_be_bytes([*a, *b])),
            _ => Err(err(i * 2)),
        })
        .collect::<Result<_, _>>()?;
    let skip = usize::from(units.first() == Some(&0xFEFF));
    let mut out = String::with_capacity(units.len());
    let mut pos = skip;
    for decoded in char::decode_utf16(units[skip..].iter().copied()) {
        match decoded {
            Ok(c) => {
                out.push(c);
                pos += c.len_utf16();
            }
            Err(_) => return Err(err(pos * 2)),
        }
    }
    Ok(out)
}
