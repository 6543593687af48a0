//! Desk-scale Schnorr group: the order-11 subgroup of Z_23* generated by 2.
//!
//! Small enough that every protocol property can be checked by exhaustive
//! enumeration against an independent integer-arithmetic oracle.

use rand_core::RngCore;

use super::{GroupError, GroupParams, OpMeter, PrimeGroup};
use crate::hashing::sha256_parts;

const P: u32 = 23;
const Q: u8 = 11;
/// Powers of 2 mod 23 (the quadratic residues), in exponent order.
const MEMBERS: [u8; 11] = [1, 2, 4, 8, 16, 9, 18, 13, 3, 6, 12];
/// Largest multiple of 11 that fits in a byte; draws at or above it are
/// rejected so the residue is exactly uniform.
const REJECT_ABOVE: u8 = 252;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TinyScalar(u8);

impl TinyScalar {
    pub fn value(&self) -> u8 {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TinyElement(u8);

impl TinyElement {
    pub fn residue(&self) -> u8 {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct TinyGroup;

fn modpow(base: u32, mut exp: u32) -> u32 {
    let mut acc = 1u32;
    let mut cur = base % P;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * cur % P;
        }
        cur = cur * cur % P;
        exp >>= 1;
    }
    acc
}

fn mod_inverse(a: u32) -> u32 {
    // p is tiny; a scan beats carrying an extended-gcd around.
    (1..P).find(|&x| a * x % P == 1).expect("nonzero residue")
}

impl TinyGroup {
    pub fn element(residue: u8) -> Option<TinyElement> {
        MEMBERS.contains(&residue).then_some(TinyElement(residue))
    }

    pub fn scalar(v: u64) -> TinyScalar {
        TinyScalar((v % u64::from(Q)) as u8)
    }
}

impl PrimeGroup for TinyGroup {
    type Scalar = TinyScalar;
    type Element = TinyElement;

    fn params(&self) -> GroupParams {
        GroupParams {
            name: "tiny",
            order_be: vec![Q],
            element_len: 1,
            scalar_len: 1,
        }
    }

    fn generator(&self) -> TinyElement {
        TinyElement(2)
    }

    fn identity(&self) -> TinyElement {
        TinyElement(1)
    }

    fn exp(&self, base: &TinyElement, s: &TinyScalar, meter: &OpMeter) -> TinyElement {
        meter.record_exp();
        TinyElement(modpow(u32::from(base.0), u32::from(s.0)) as u8)
    }

    fn mul(&self, a: &TinyElement, b: &TinyElement) -> TinyElement {
        TinyElement((u32::from(a.0) * u32::from(b.0) % P) as u8)
    }

    fn inv(&self, a: &TinyElement) -> TinyElement {
        TinyElement(mod_inverse(u32::from(a.0)) as u8)
    }

    fn scalar_from_u64(&self, v: u64) -> TinyScalar {
        Self::scalar(v)
    }

    fn scalar_add(&self, a: &TinyScalar, b: &TinyScalar) -> TinyScalar {
        TinyScalar((a.0 + b.0) % Q)
    }

    fn scalar_sub(&self, a: &TinyScalar, b: &TinyScalar) -> TinyScalar {
        TinyScalar((a.0 + Q - b.0) % Q)
    }

    fn scalar_mul(&self, a: &TinyScalar, b: &TinyScalar) -> TinyScalar {
        TinyScalar((u32::from(a.0) * u32::from(b.0) % u32::from(Q)) as u8)
    }

    fn scalar_neg(&self, a: &TinyScalar) -> TinyScalar {
        TinyScalar((Q - a.0) % Q)
    }

    fn scalar_inv(&self, a: &TinyScalar) -> Option<TinyScalar> {
        (1..Q).find(|&x| u32::from(a.0) * u32::from(x) % u32::from(Q) == 1).map(TinyScalar)
    }

    fn random_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> TinyScalar {
        loop {
            let mut byte = [0u8; 1];
            rng.fill_bytes(&mut byte);
            if byte[0] <= REJECT_ABOVE {
                return TinyScalar(byte[0] % Q);
            }
        }
    }

    fn scalar_script_bytes(&self, s: &TinyScalar) -> Vec<u8> {
        vec![s.0]
    }

    fn encode_element(&self, a: &TinyElement) -> Vec<u8> {
        vec![a.0]
    }

    fn decode_element(&self, bytes: &[u8]) -> Result<TinyElement, GroupError> {
        if bytes.len() != 1 {
            return Err(GroupError::BadLength { expected: 1, got: bytes.len() });
        }
        Self::element(bytes[0]).ok_or(GroupError::NotInGroup)
    }

    fn encode_scalar(&self, s: &TinyScalar) -> Vec<u8> {
        vec![s.0]
    }

    fn decode_scalar(&self, bytes: &[u8]) -> Result<TinyScalar, GroupError> {
        if bytes.len() != 1 {
            return Err(GroupError::BadLength { expected: 1, got: bytes.len() });
        }
        if bytes[0] >= Q {
            return Err(GroupError::NotInGroup);
        }
        Ok(TinyScalar(bytes[0]))
    }

    fn hash_to_element(&self, domain: &[u8], data: &[u8]) -> TinyElement {
        // Squaring maps onto the quadratic residues, i.e. exactly the order-11
        // subgroup; skip 0 and 1 so the result can serve as a second generator.
        let mut counter = 0u32;
        loop {
            let digest = sha256_parts(&[b"castaudit/tiny/h2g", domain, data, &counter.to_be_bytes()]);
            let x = u32::from(digest[0]) % P;
            let candidate = x * x % P;
            if candidate > 1 {
                return TinyElement(candidate as u8);
            }
            counter += 1;
        }
    }

    fn hash_to_scalar(&self, domain: &[u8], data: &[u8]) -> TinyScalar {
        let digest = sha256_parts(&[b"castaudit/tiny/h2s", domain, data]);
        let wide = u64::from_be_bytes(digest[..8].try_into().unwrap());
        TinyScalar((wide % u64::from(Q)) as u8)
    }
}
