//! Bijection between the vote alphabet and group elements.
//!
//! Vote index v maps to g^(v+1), skipping the identity. Encoding performs the
//! exponentiation (so ballot preparation costs match the usual three
//! exponentiations per element); decoding is a table lookup built once at
//! setup, so the audit device pays nothing for it.

use std::collections::HashMap;

use thiserror::Error;

use crate::group::{OpMeter, PrimeGroup};

pub type VoteIdx = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodingError {
    #[error("vote index {0} outside the alphabet")]
    VoteOutOfRange(VoteIdx),
    /// Decoded plaintext is not the encoding of any alphabet member.
    #[error("group element does not encode a vote")]
    UnknownVote,
}

#[derive(Clone, Debug)]
pub struct VoteEncoding<G: PrimeGroup> {
    alphabet_size: u32,
    table: Vec<G::Element>,
    lookup: HashMap<Vec<u8>, VoteIdx>,
}

impl<G: PrimeGroup> VoteEncoding<G> {
    pub fn new(group: &G, alphabet_size: u32) -> Self {
        let mut table = Vec::with_capacity(alphabet_size as usize);
        let mut lookup = HashMap::new();
        let mut cur = group.generator();
        for v in 0..alphabet_size {
            lookup.insert(group.encode_element(&cur), v);
            table.push(cur.clone());
            cur = group.mul(&cur, &group.generator());
        }
        Self { alphabet_size, table, lookup }
    }

    pub fn alphabet_size(&self) -> u32 {
        self.alphabet_size
    }

    pub fn encode(
        &self,
        group: &G,
        v: VoteIdx,
        meter: &OpMeter,
    ) -> Result<G::Element, EncodingError> {
        if v >= self.alphabet_size {
            return Err(EncodingError::VoteOutOfRange(v));
        }
        Ok(group.exp(&group.generator(), &group.scalar_from_u64(u64::from(v) + 1), meter))
    }

    pub fn decode(&self, group: &G, m: &G::Element) -> Result<VoteIdx, EncodingError> {
        self.lookup.get(&group.encode_element(m)).copied().ok_or(EncodingError::UnknownVote)
    }

    /// The element encoding vote v, without charging an exponentiation.
    pub fn element(&self, v: VoteIdx) -> Option<&G::Element> {
        self.table.get(v as usize)
    }
}
