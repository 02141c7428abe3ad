use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

const ALPHABET: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";

/// Length of engine-minted ids (about 95 bits of entropy).
pub const MINTED_ID_LEN: usize = 16;
pub const MAX_ID_LEN: usize = 64;

/// Opaque, URL-safe node identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NodeId(String);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid node id {0:?}: expected 1-64 characters from [A-Za-z0-9_-]")]
pub struct InvalidId(pub String);

impl NodeId {
    pub fn new(s: impl Into<String>) -> Result<NodeId, InvalidId> {
        let s = s.into();
        if is_valid_id(&s) {
            Ok(NodeId(s))
        } else {
            Err(InvalidId(s))
        }
    }

    pub fn random(rng: &mut impl Rng) -> NodeId {
        NodeId(random_token(rng, MINTED_ID_LEN))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

pub fn is_valid_id(s: &str) -> bool {
    !s.is_empty()
        && s.len() <= MAX_ID_LEN
        && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

pub(crate) fn random_token(rng: &mut impl Rng, len: usize) -> String {
    (0..len)
        .map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())] as char)
        .collect()
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for NodeId {
    type Error = InvalidId;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        NodeId::new(s)
    }
}

impl From<NodeId> for String {
    fn from(id: NodeId) -> String {
        id.0
    }
}

impl AsRef<str> for NodeId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}
