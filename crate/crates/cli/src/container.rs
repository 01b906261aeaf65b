//! On-disk ciphertext container.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "ELCX"
//! 4       1     version (1)
//! 5       1     cipher id (1 = sp16, 2 = sp8)
//! 6       1     level n
//! 7       8     payload length in bits, big-endian
//! 15      ...   payload, right-padded with zero bits to whole octets
//! ```

use elastic_core::{BitString, ElasticParams, ToyCipher};
use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"ELCX";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 15;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ContainerError {
    #[error("bad container length: {actual} octets, expected {expected}")]
    BadLength { expected: usize, actual: usize },
    #[error("bad magic: not an ELCX container")]
    BadMagic,
    #[error("bad version {0} (supported: {VERSION})")]
    BadVersion(u8),
    #[error("unknown cipher id {0}")]
    UnknownCipher(u8),
    #[error("payload of {bits} bits is not longer than the {block}-bit block of {cipher}")]
    TooShort {
        bits: u64,
        block: usize,
        cipher: ToyCipher,
    },
    #[error("header says level {header} but {bits} bits need level {expected}")]
    LevelMismatch {
        header: u8,
        expected: u32,
        bits: u64,
    },
    #[error("nonzero padding bits after the payload")]
    DirtyPadding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub cipher: ToyCipher,
    pub level: u8,
    pub bit_len: u64,
}

impl Header {
    pub fn for_payload(cipher: ToyCipher, bit_len: usize) -> Result<Self, ContainerError> {
        let spec = *cipher.base().spec();
        let params =
            ElasticParams::for_length(bit_len, &spec).map_err(|_| ContainerError::TooShort {
                bits: bit_len as u64,
                block: spec.block_bits(),
                cipher,
            })?;
        Ok(Self {
            cipher,
            level: params.level() as u8,
            bit_len: bit_len as u64,
        })
    }

    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[..4].copy_from_slice(&MAGIC);
        out[4] = VERSION;
        out[5] = self.cipher.id();
        out[6] = self.level;
        out[7..].copy_from_slice(&self.bit_len.to_be_bytes());
        out
    }
}

pub fn encode(header: &Header, payload: &BitString) -> Vec<u8> {
    debug_assert_eq!(payload.len() as u64, header.bit_len);
    let mut out = header.to_bytes().to_vec();
    out.extend(payload.to_bytes());
    out
}

pub fn decode(bytes: &[u8]) -> Result<(Header, BitString), ContainerError> {
    if bytes.len() < HEADER_LEN {
        return Err(ContainerError::BadLength {
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    if bytes[..4] != MAGIC {
        return Err(ContainerError::BadMagic);
    }
    if bytes[4] != VERSION {
        return Err(ContainerError::BadVersion(bytes[4]));
    }
    let cipher = ToyCipher::from_id(bytes[5]).ok_or(ContainerError::UnknownCipher(bytes[5]))?;
    let level = bytes[6];
    let bit_len = u64::from_be_bytes(bytes[7..HEADER_LEN].try_into().expect("8 octets"));
    let spec = *cipher.base().spec();
    if bit_len <= spec.block_bits() as u64 {
        return Err(ContainerError::TooShort {
            bits: bit_len,
            block: spec.block_bits(),
            cipher,
        });
    }
    let payload_len = bit_len.div_ceil(8);
    let expected = usize::try_from(payload_len)
        .ok()
        .and_then(|p| p.checked_add(HEADER_LEN))
        .ok_or(ContainerError::BadLength {
            expected: usize::MAX,
            actual: bytes.len(),
        })?;
    if bytes.len() != expected {
        return Err(ContainerError::BadLength {
            expected,
            actual: bytes.len(),
        });
    }
    let bits = bit_len as usize;
    let params = ElasticParams::for_length(bits, &spec).expect("length checked above");
    if params.level() != level as u32 {
        return Err(ContainerError::LevelMismatch {
            header: level,
            expected: params.level(),
            bits: bit_len,
        });
    }
    let spare = (8 - bits % 8) % 8;
    if spare > 0 && bytes[bytes.len() - 1] & ((1u8 << spare) - 1) != 0 {
        return Err(ContainerError::DirtyPadding);
    }
    let payload = BitString::from_bytes(&bytes[HEADER_LEN..], bits).expect("length checked above");
    Ok((
        Header {
            cipher,
            level,
            bit_len,
        },
        payload,
    ))
}
