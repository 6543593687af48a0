//! Pedersen commitments over the protocol group: the ballot analogue used by
//! commitment-based voting schemes. Com(v; r) = g^v * h^r with a second
//! generator h whose discrete log nobody knows (derived by hashing into the
//! group, so there is no trusted setup).

use thiserror::Error;

use crate::encoding::VoteIdx;
use crate::group::{OpMeter, PrimeGroup};

#[derive(Clone, Debug)]
pub struct PedersenParams<G: PrimeGroup> {
    pub g: G::Element,
    pub h: G::Element,
}

impl<G: PrimeGroup> PedersenParams<G> {
    pub fn derive(group: &G, context_tag: &[u8]) -> Self {
        Self {
            g: group.generator(),
            h: group.hash_to_element(b"pedersen", context_tag),
        }
    }

    /// Params with an explicitly chosen second generator, for fixed test
    /// vectors.
    pub fn with_h(group: &G, h: G::Element) -> Self {
        Self { g: group.generator(), h }
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum OpenError {
    /// No alphabet member matches the claimed opening.
    #[error("commitment does not open to any alphabet value under the supplied randomness")]
    OpeningMismatch,
}

pub fn commit<G: PrimeGroup>(
    group: &G,
    params: &PedersenParams<G>,
    value: &G::Scalar,
    r: &G::Scalar,
    meter: &OpMeter,
) -> G::Element {
    group.mul(&group.exp(&params.g, value, meter), &group.exp(&params.h, r, meter))
}

/// c * h^x = Com(v; r + x): the commitment analogue of ciphertext
/// re-randomization.
pub fn rerandomize<G: PrimeGroup>(
    group: &G,
    params: &PedersenParams<G>,
    c: &G::Element,
    x: &G::Scalar,
    meter: &OpMeter,
) -> G::Element {
    group.mul(c, &group.exp(&params.h, x, meter))
}

/// Recovers the committed vote from the commitment randomness alone: returns
/// v iff c * h^(-r) = g^v for some v in the alphabet.
pub fn open_with_randomness<G: PrimeGroup>(
    group: &G,
    params: &PedersenParams<G>,
    c: &G::Element,
    r: &G::Scalar,
    alphabet_size: u32,
    meter: &OpMeter,
) -> Result<VoteIdx, OpenError> {
    let unmasked = group.mul(c, &group.exp(&params.h, &group.scalar_neg(r), meter));
    let mut cur = group.identity();
    for v in 0..alphabet_size {
        if cur == unmasked {
            return Ok(v);
        }
        cur = group.mul(&cur, &params.g);
    }
    Err(OpenError::OpeningMismatch)
}
