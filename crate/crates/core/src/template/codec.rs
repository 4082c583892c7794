//! Template file format, little-endian:
//!
//! | offset | size | field                          |
//! |--------|------|--------------------------------|
//! | 0      | 4    | magic `IOMX`                   |
//! | 4      | 2    | version (1)                    |
//! | 6      | 1    | mode (0 raw, 1 angular)        |
//! | 7      | 1    | reserved, 0                    |
//! | 8      | 8    | seed                           |
//! | 16     | 4    | l                              |
//! | 20     | 4    | k                              |
//! | 24     | 4    | d                              |
//! | 28     | 2*l  | indices, 0-based, each `< k`   |

use super::{FusionMode, RevocableTemplate};
use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"IOMX";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 28;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("bad magic {0:02x?}, expected \"IOMX\"")]
    BadMagic([u8; 4]),
    #[error("unsupported template version {0}")]
    UnsupportedVersion(u16),
    #[error("unknown fusion mode byte {0}")]
    BadMode(u8),
    #[error("reserved byte must be zero, found {0}")]
    Reserved(u8),
    #[error("invalid header: {0}")]
    BadHeader(String),
    #[error("index {index} at position {position} is not below k = {k}")]
    IndexOutOfRange { position: usize, index: u16, k: u32 },
    #[error("truncated template: need {expected} bytes, have {found}")]
    Truncated { expected: usize, found: usize },
    #[error("{0} unexpected trailing bytes")]
    TrailingBytes(usize),
}

/// File size for a template with `l` indices.
pub const fn serialized_len(l: usize) -> usize {
    HEADER_LEN + 2 * l
}

pub fn serialize(t: &RevocableTemplate) -> Vec<u8> {
    let mut out = Vec::with_capacity(serialized_len(t.l()));
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(t.mode().as_byte());
    out.push(0);
    out.extend_from_slice(&t.seed().to_le_bytes());
    out.extend_from_slice(&(t.l() as u32).to_le_bytes());
    out.extend_from_slice(&(t.k() as u32).to_le_bytes());
    out.extend_from_slice(&(t.dimension() as u32).to_le_bytes());
    for &x in t.indices() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

pub fn deserialize(bytes: &[u8]) -> Result<RevocableTemplate, CodecError> {
    if bytes.len() < HEADER_LEN {
        if bytes.len() >= 4 && bytes[..4] != MAGIC {
            return Err(CodecError::BadMagic(bytes[..4].try_into().expect("4 bytes")));
        }
        return Err(CodecError::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
    if magic != MAGIC {
        return Err(CodecError::BadMagic(magic));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(CodecError::UnsupportedVersion(version));
    }
    let mode = FusionMode::from_byte(bytes[6]).ok_or(CodecError::BadMode(bytes[6]))?;
    if bytes[7] != 0 {
        return Err(CodecError::Reserved(bytes[7]));
    }
    let seed = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    let l = u32_at(bytes, 16) as usize;
    let k = u32_at(bytes, 20);
    let d = u32_at(bytes, 24) as usize;
    if l == 0 || k == 0 || k > 65_536 {
        return Err(CodecError::BadHeader(format!("l = {l}, k = {k}")));
    }
    let expected = serialized_len(l);
    if bytes.len() < expected {
        return Err(CodecError::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(CodecError::TrailingBytes(bytes.len() - expected));
    }
    let indices: Vec<u16> = bytes[HEADER_LEN..]
        .chunks_exact(2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .collect();
    if let Some((position, &index)) = indices.iter().enumerate().find(|(_, &x)| u32::from(x) >= k) {
        return Err(CodecError::IndexOutOfRange { position, index, k });
    }
    RevocableTemplate::new(mode, seed, k as usize, d, indices)
        .map_err(|e| CodecError::BadHeader(e.to_string()))
}
