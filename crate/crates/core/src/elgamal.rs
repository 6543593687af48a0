//! Re-randomizable ElGamal with special decryption.
//!
//! A ciphertext is the pair (u, w) = (g^r, m * pk^r). Anyone holding the
//! encryption randomness r can recover m without the secret key, and anyone
//! at all can re-randomize a ciphertext into a fresh encryption of the same
//! plaintext. Re-randomization is homomorphic with respect to randomness:
//! enc(pk, m, x + r) = rerandomize(pk, enc(pk, m, r), x).

use rand_core::RngCore;
use thiserror::Error;

use crate::group::{GroupError, OpMeter, PrimeGroup};

#[derive(Clone, Debug)]
pub struct KeyPair<G: PrimeGroup> {
    pub sk: G::Scalar,
    pub pk: G::Element,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ciphertext<G: PrimeGroup> {
    pub u: G::Element,
    pub w: G::Element,
}

impl<G: PrimeGroup> Ciphertext<G> {
    /// Canonical wire encoding: element bytes of u, then of w.
    pub fn to_bytes(&self, group: &G) -> Vec<u8> {
        let mut bytes = group.encode_element(&self.u);
        bytes.extend_from_slice(&group.encode_element(&self.w));
        bytes
    }

    pub fn from_bytes(group: &G, bytes: &[u8]) -> Result<Self, GroupError> {
        let n = group.params().element_len;
        if bytes.len() != 2 * n {
            return Err(GroupError::BadLength { expected: 2 * n, got: bytes.len() });
        }
        Ok(Self {
            u: group.decode_element(&bytes[..n])?,
            w: group.decode_element(&bytes[n..])?,
        })
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum SpecialDecError {
    /// The supplied randomness does not open this ciphertext; the audit
    /// failure signal.
    #[error("ciphertext was not produced with the supplied randomness")]
    RandomnessMismatch,
}

pub fn keygen<G: PrimeGroup, R: RngCore + ?Sized>(
    group: &G,
    rng: &mut R,
    meter: &OpMeter,
) -> KeyPair<G> {
    let sk = group.random_scalar(rng);
    let pk = group.exp(&group.generator(), &sk, meter);
    KeyPair { sk, pk }
}

pub fn encrypt<G: PrimeGroup>(
    group: &G,
    pk: &G::Element,
    m: &G::Element,
    r: &G::Scalar,
    meter: &OpMeter,
) -> Ciphertext<G> {
    Ciphertext {
        u: group.exp(&group.generator(), r, meter),
        w: group.mul(m, &group.exp(pk, r, meter)),
    }
}

/// Standard decryption; only the demo tally uses it.
pub fn decrypt<G: PrimeGroup>(
    group: &G,
    sk: &G::Scalar,
    ct: &Ciphertext<G>,
    meter: &OpMeter,
) -> G::Element {
    let shared = group.exp(&ct.u, sk, meter);
    group.mul(&ct.w, &group.inv(&shared))
}

/// (u * g^x, w * pk^x): a fresh encryption of the same plaintext under
/// randomness r + x. Costs exactly 2 exponentiations.
pub fn rerandomize<G: PrimeGroup>(
    group: &G,
    pk: &G::Element,
    ct: &Ciphertext<G>,
    x: &G::Scalar,
    meter: &OpMeter,
) -> Ciphertext<G> {
    Ciphertext {
        u: group.mul(&ct.u, &group.exp(&group.generator(), x, meter)),
        w: group.mul(&ct.w, &group.exp(pk, x, meter)),
    }
}

/// Recovers the plaintext from the encryption randomness alone: checks that
/// u = g^r and returns w * pk^(-r). Costs exactly 2 exponentiations on the
/// success path.
pub fn special_decrypt<G: PrimeGroup>(
    group: &G,
    pk: &G::Element,
    ct: &Ciphertext<G>,
    r: &G::Scalar,
    meter: &OpMeter,
) -> Result<G::Element, SpecialDecError> {
    if group.exp(&group.generator(), r, meter) != ct.u {
        return Err(SpecialDecError::RandomnessMismatch);
    }
    let mask = group.exp(pk, &group.scalar_neg(r), meter);
    Ok(group.mul(&ct.w, &mask))
}
