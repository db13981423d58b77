//! SHA-256 helpers.

use sha2::{Digest, Sha256};

/// Hex SHA-256 over length-prefixed parts, so part boundaries are unambiguous.
pub fn sha256_hex(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}
