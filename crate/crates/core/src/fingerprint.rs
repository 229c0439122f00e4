//! Whitespace normalization and 128-bit content fingerprints.
//!
//! Every content-identity decision in the crate (graph node hashes, duplicate
//! pruning, embedding cache keys) goes through [`normalize`] followed by MD5.

use std::fmt;

use md5::{Digest, Md5};
use serde::{Deserialize, Serialize};

/// Strips leading/trailing whitespace and collapses internal whitespace runs
/// (including newlines) to a single space.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// MD5 digest of raw bytes.
pub fn md5(bytes: &[u8]) -> Fingerprint {
    let digest = Md5::digest(bytes);
    let mut raw = [0u8; 16];
    raw.copy_from_slice(&digest);
    Fingerprint(u128::from_be_bytes(raw))
}

/// Fingerprint of the normalized form of `text`.
pub fn fingerprint(text: &str) -> Fingerprint {
    md5(normalize(text).as_bytes())
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Fingerprint(pub u128);

impl Fingerprint {
    pub fn to_hex(self) -> String {
        hex::encode(self.0.to_be_bytes())
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fingerprint({})", self.to_hex())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rfc1321_vectors() {
        assert_eq!(md5(b"").to_hex(), "d41d8cd98f00b204e9800998ecf8427e");
        assert_eq!(md5(b"abc").to_hex(), "900150983cd24fb0d6963f7d28e17f72");
        assert_eq!(
            md5(b"message digest").to_hex(),
            "f96b697d7cb7938d525a2f31aaf161d0"
        );
    }

    #[test]
    fn normalization_collapses_whitespace() {
        assert_eq!(normalize("  a   =\t1 \n"), "a = 1");
        assert_eq!(normalize(""), "");
        assert_eq!(normalize("x\n\n  y"), "x y");
        assert_eq!(fingerprint(" a = 1"), fingerprint("a  =  1\n"));
    }
}
