//! QR payload: the only channel from the voting device to the audit device.
//!
//! Fixed binary layout, then base64 text armor for QR transport:
//!
//!   version (1) | election id (16) | voter id (16) |
//!   blinded randomness (ballot length x scalar) | ballot digest (32)
//!
//! The digest binds the payload to the exact ciphertexts the voting device
//! claims to have cast, so the audit device notices a server presenting a
//! different ballot.

use base64::prelude::{Engine, BASE64_STANDARD};
use thiserror::Error;

use crate::group::PrimeGroup;

use super::{ElectionId, VoterId};

pub const QR_VERSION: u8 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PayloadError {
    #[error("unknown payload version {0}")]
    UnknownVersion(u8),
    #[error("payload is {got} bytes, expected {expected}")]
    BadLength { expected: usize, got: usize },
    #[error("blinded randomness field is not a canonical scalar")]
    InvalidScalar,
    #[error("payload armor is not valid base64")]
    BadArmor,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QrPayload<G: PrimeGroup> {
    pub election_id: ElectionId,
    pub voter_id: VoterId,
    pub blinded_randomness: Vec<G::Scalar>,
    pub ballot_digest: [u8; 32],
}

impl<G: PrimeGroup> QrPayload<G> {
    pub fn encoded_len(group: &G, ballot_length: usize) -> usize {
        1 + 16 + 16 + ballot_length * group.params().scalar_len + 32
    }

    pub fn to_bytes(&self, group: &G) -> Vec<u8> {
        let mut bytes = vec![QR_VERSION];
        bytes.extend_from_slice(&self.election_id);
        bytes.extend_from_slice(&self.voter_id);
        for r in &self.blinded_randomness {
            bytes.extend_from_slice(&group.encode_scalar(r));
        }
        bytes.extend_from_slice(&self.ballot_digest);
        bytes
    }

    pub fn from_bytes(group: &G, ballot_length: usize, bytes: &[u8]) -> Result<Self, PayloadError> {
        let expected = Self::encoded_len(group, ballot_length);
        if bytes.len() != expected {
            return Err(PayloadError::BadLength { expected, got: bytes.len() });
        }
        if bytes[0] != QR_VERSION {
            return Err(PayloadError::UnknownVersion(bytes[0]));
        }
        let election_id: ElectionId = bytes[1..17].try_into().unwrap();
        let voter_id: VoterId = bytes[17..33].try_into().unwrap();
        let scalar_len = group.params().scalar_len;
        let mut blinded_randomness = Vec::with_capacity(ballot_length);
        for i in 0..ballot_length {
            let start = 33 + i * scalar_len;
            let scalar = group
                .decode_scalar(&bytes[start..start + scalar_len])
                .map_err(|_| PayloadError::InvalidScalar)?;
            blinded_randomness.push(scalar);
        }
        let ballot_digest: [u8; 32] = bytes[bytes.len() - 32..].try_into().unwrap();
        Ok(Self { election_id, voter_id, blinded_randomness, ballot_digest })
    }

    pub fn to_armored(&self, group: &G) -> String {
        BASE64_STANDARD.encode(self.to_bytes(group))
    }

    pub fn from_armored(group: &G, ballot_length: usize, armor: &str) -> Result<Self, PayloadError> {
        let bytes = BASE64_STANDARD.decode(armor.trim()).map_err(|_| PayloadError::BadArmor)?;
        Self::from_bytes(group, ballot_length, &bytes)
    }
}
