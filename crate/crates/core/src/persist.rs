//! Container format for fitted forests and models.
//!
//! A file is one ASCII header line followed by a JSON document:
//!
//! ```text
//! kirsf-<kind> <version>\n
//! { ...serialized value... }
//! ```
//!
//! `<kind>` is `forest` or `model`; `<version>` is [`FORMAT_VERSION`].
//! Floats are written in shortest round-trip form and parsed exactly, so a
//! saved forest predicts bit-identically after loading.

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kind {
    Forest,
    Model,
}

impl Kind {
    fn tag(self) -> &'static str {
        match self {
            Kind::Forest => "kirsf-forest",
            Kind::Model => "kirsf-model",
        }
    }
}

pub(crate) fn encode<T: Serialize>(kind: Kind, value: &T) -> Result<Vec<u8>> {
    let mut out = format!("{} {}\n", kind.tag(), FORMAT_VERSION).into_bytes();
    serde_json::to_writer(&mut out, value)
        .map_err(|e| Error::CorruptPayload(format!("serialization failed: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

pub(crate) fn decode<T: DeserializeOwned>(kind: Kind, bytes: &[u8]) -> Result<T> {
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::CorruptPayload("missing header line".into()))?;
    let header = std::str::from_utf8(&bytes[..newline])
        .map_err(|_| Error::CorruptPayload("header is not UTF-8".into()))?;
    let (tag, version) = header
        .split_once(' ')
        .ok_or_else(|| Error::CorruptPayload(format!("malformed header '{header}'")))?;
    if tag != kind.tag() {
        return Err(Error::CorruptPayload(format!(
            "expected a {} file, found '{tag}'",
            kind.tag()
        )));
    }
    let found: u32 = version
        .trim()
        .parse()
        .map_err(|_| Error::CorruptPayload(format!("malformed version '{version}'")))?;
    if found != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            expected: FORMAT_VERSION,
            found,
        });
    }
    serde_json::from_slice(&bytes[newline + 1..]).map_err(|e| Error::CorruptPayload(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_checks() {
        let bytes = encode(Kind::Forest, &vec![0.1f64, 1e-300, -0.0]).unwrap();
        assert!(bytes.starts_with(b"kirsf-forest 1\n"));
        let back: Vec<f64> = decode(Kind::Forest, &bytes).unwrap();
        assert_eq!(back[0].to_bits(), 0.1f64.to_bits());
        assert_eq!(back[1].to_bits(), 1e-300f64.to_bits());
        assert_eq!(back[2].to_bits(), (-0.0f64).to_bits());

        assert!(matches!(decode::<Vec<f64>>(Kind::Model, &bytes), Err(Error::CorruptPayload(_))));
        let err = decode::<Vec<f64>>(Kind::Forest, b"kirsf-forest 7\n[]").unwrap_err();
        assert_eq!(
            err.to_string(),
            "model format version mismatch: file is version 7, this build reads version 1"
        );
        assert!(matches!(decode::<Vec<f64>>(Kind::Forest, b"kirsf-fo"), Err(Error::CorruptPayload(_))));
        assert!(matches!(decode::<Vec<f64>>(Kind::Forest, b"kirsf-forest 1\n[0.1, "), Err(Error::CorruptPayload(_))));
    }
}
