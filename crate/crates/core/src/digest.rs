use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// First 16 hex chars of the SHA-256; enough to tell transcript payloads apart.
pub fn short_digest(bytes: &[u8]) -> String {
    sha256_hex(bytes)[..16].to_string()
}
