//! Short content fingerprints used to tie pipeline artifacts together.

use serde::Serialize;
use sha2::{Digest, Sha256};

/// First 8 bytes of SHA-256, hex-encoded (16 chars).
pub fn hex16(bytes: impl AsRef<[u8]>) -> String {
    let digest = Sha256::digest(bytes.as_ref());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Fingerprint of a serializable value under a format tag. The tag keeps
/// fingerprints of different record kinds from colliding even when their
/// JSON happens to match.
pub fn of_value<T: Serialize>(tag: &str, value: &T) -> String {
    let json = serde_json::to_string(value).expect("fingerprinted values must serialize");
    hex16(format!("{tag}\x1f{json}"))
}
