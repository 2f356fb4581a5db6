//! Canonical JSON encoding and content digests.
//!
//! Canonical form: object keys sorted, no insignificant whitespace, numbers in
//! shortest round-trip form, UTF-8. `serde_json::Map` is backed by a
//! `BTreeMap` in this workspace, so key order falls out of serialization.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Serializes any value to its canonical JSON string.
pub fn to_canonical_string<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    // Round-trip through `Value` so struct field order does not leak into the output.
    let value = serde_json::to_value(value)?;
    serde_json::to_string(&value)
}

/// Canonical string of an already-built JSON value. Infallible for `Value`.
pub fn canonical_value(value: &Value) -> String {
    serde_json::to_string(value).expect("serializing a serde_json::Value cannot fail")
}

/// Hex-encoded SHA-256 of raw bytes.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hex-encoded SHA-256 of the canonical encoding of `value`.
pub fn digest_of<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    Ok(sha256_hex(to_canonical_string(value)?.as_bytes()))
}
