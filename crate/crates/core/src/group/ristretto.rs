//! Production backend over the ristretto255 prime-order group.

use curve25519_dalek::constants::RISTRETTO_BASEPOINT_POINT;
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoPoint};
use curve25519_dalek::scalar::Scalar;
use curve25519_dalek::traits::Identity;
use rand_core::RngCore;

use super::{GroupError, GroupParams, OpMeter, PrimeGroup};
use crate::hashing::sha512_parts;

const ELEMENT_LEN: usize = 32;
const SCALAR_LEN: usize = 32;
/// The ristretto255 group order, big-endian.
const ORDER_BE: [u8; 32] = [
    0x10, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
    0x00, 0x14, 0xde, 0xf9, 0xde, 0xa2, 0xf7, 0x9c, 0xd6, 0x58, 0x12, 0x63, 0x1a, 0x5c, 0xf5,
    0xd3, 0xed,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct RistrettoGroup;

impl PrimeGroup for RistrettoGroup {
    type Scalar = Scalar;
    type Element = RistrettoPoint;

    fn params(&self) -> GroupParams {
        GroupParams {
            name: "ristretto255",
            order_be: ORDER_BE.to_vec(),
            element_len: ELEMENT_LEN,
            scalar_len: SCALAR_LEN,
        }
    }

    fn generator(&self) -> RistrettoPoint {
        RISTRETTO_BASEPOINT_POINT
    }

    fn identity(&self) -> RistrettoPoint {
        RistrettoPoint::identity()
    }

    fn exp(&self, base: &RistrettoPoint, s: &Scalar, meter: &OpMeter) -> RistrettoPoint {
        meter.record_exp();
        base * s
    }

    fn mul(&self, a: &RistrettoPoint, b: &RistrettoPoint) -> RistrettoPoint {
        a + b
    }

    fn inv(&self, a: &RistrettoPoint) -> RistrettoPoint {
        -a
    }

    fn scalar_from_u64(&self, v: u64) -> Scalar {
        Scalar::from(v)
    }

    fn scalar_add(&self, a: &Scalar, b: &Scalar) -> Scalar {
        a + b
    }

    fn scalar_sub(&self, a: &Scalar, b: &Scalar) -> Scalar {
        a - b
    }

    fn scalar_mul(&self, a: &Scalar, b: &Scalar) -> Scalar {
        a * b
    }

    fn scalar_neg(&self, a: &Scalar) -> Scalar {
        -a
    }

    fn scalar_inv(&self, a: &Scalar) -> Option<Scalar> {
        (*a != Scalar::ZERO).then(|| a.invert())
    }

    fn random_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> Scalar {
        let mut wide = [0u8; 64];
        rng.fill_bytes(&mut wide);
        Scalar::from_bytes_mod_order_wide(&wide)
    }

    fn scalar_script_bytes(&self, s: &Scalar) -> Vec<u8> {
        let mut bytes = vec![0u8; 64];
        bytes[..32].copy_from_slice(&s.to_bytes());
        bytes
    }

    fn encode_element(&self, a: &RistrettoPoint) -> Vec<u8> {
        a.compress().to_bytes().to_vec()
    }

    fn decode_element(&self, bytes: &[u8]) -> Result<RistrettoPoint, GroupError> {
        let compressed = CompressedRistretto::from_slice(bytes)
            .map_err(|_| GroupError::BadLength { expected: ELEMENT_LEN, got: bytes.len() })?;
        compressed.decompress().ok_or(GroupError::NotInGroup)
    }

    fn encode_scalar(&self, s: &Scalar) -> Vec<u8> {
        let mut bytes = s.to_bytes();
        bytes.reverse();
        bytes.to_vec()
    }

    fn decode_scalar(&self, bytes: &[u8]) -> Result<Scalar, GroupError> {
        if bytes.len() != SCALAR_LEN {
            return Err(GroupError::BadLength { expected: SCALAR_LEN, got: bytes.len() });
        }
        let mut le: [u8; 32] = bytes.try_into().unwrap();
        le.reverse();
        Option::from(Scalar::from_canonical_bytes(le)).ok_or(GroupError::NotInGroup)
    }

    fn hash_to_element(&self, domain: &[u8], data: &[u8]) -> RistrettoPoint {
        let wide = sha512_parts(&[b"castaudit/ristretto/h2g", domain, data]);
        RistrettoPoint::from_uniform_bytes(&wide)
    }

    fn hash_to_scalar(&self, domain: &[u8], data: &[u8]) -> Scalar {
        let wide = sha512_parts(&[b"castaudit/ristretto/h2s", domain, data]);
        Scalar::from_bytes_mod_order_wide(&wide)
    }
}
