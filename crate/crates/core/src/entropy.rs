//! Injectable entropy sources.
//!
//! Protocol code never touches OS entropy directly; every operation that
//! needs randomness takes an `RngCore` handle. Deterministic runs seed a
//! ChaCha generator, and exhaustive tests feed exact byte scripts through
//! [`ScriptedRng`].

use rand_core::{impls, Error, RngCore};

use crate::group::PrimeGroup;

/// Entropy source that replays a fixed byte script.
///
/// Panics on exhaustion when used through the infallible `RngCore` entry
/// points; `try_fill_bytes` reports the exhaustion as an error instead.
/// Test-only by design.
#[derive(Debug, Clone)]
pub struct ScriptedRng {
    script: Vec<u8>,
    pos: usize,
}

impl ScriptedRng {
    pub fn new(script: Vec<u8>) -> Self {
        Self { script, pos: 0 }
    }

    /// Script that makes `group.random_scalar` produce exactly the given
    /// draws, in order.
    pub fn for_scalars<G: PrimeGroup>(group: &G, draws: &[G::Scalar]) -> Self {
        let mut script = Vec::new();
        for s in draws {
            script.extend_from_slice(&group.scalar_script_bytes(s));
        }
        Self::new(script)
    }

    pub fn remaining(&self) -> usize {
        self.script.len() - self.pos
    }

    /// Append more bytes to the tail of the script.
    pub fn extend(&mut self, bytes: &[u8]) {
        self.script.extend_from_slice(bytes);
    }
}

impl RngCore for ScriptedRng {
    fn next_u32(&mut self) -> u32 {
        impls::next_u32_via_fill(self)
    }

    fn next_u64(&mut self) -> u64 {
        impls::next_u64_via_fill(self)
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.try_fill_bytes(dest).expect("scripted entropy source exhausted");
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), Error> {
        if self.remaining() < dest.len() {
            return Err(Error::new(EntropyExhausted));
        }
        dest.copy_from_slice(&self.script[self.pos..self.pos + dest.len()]);
        self.pos += dest.len();
        Ok(())
    }
}

#[derive(Debug)]
pub struct EntropyExhausted;

impl std::fmt::Display for EntropyExhausted {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "scripted entropy source exhausted")
    }
}

impl std::error::Error for EntropyExhausted {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{PrimeGroup, RistrettoGroup, TinyGroup};

    #[test]
    fn replays_script() {
        let mut rng = ScriptedRng::new(vec![7, 9]);
        let mut buf = [0u8; 1];
        rng.fill_bytes(&mut buf);
        assert_eq!(buf[0], 7);
        assert_eq!(rng.remaining(), 1);
    }

    #[test]
    fn exhaustion_is_an_error() {
        let mut rng = ScriptedRng::new(vec![1]);
        let mut buf = [0u8; 2];
        assert!(rng.try_fill_bytes(&mut buf).is_err());
    }

    #[test]
    fn scalar_scripts_reproduce_draws() {
        let tiny = TinyGroup;
        let draws = [TinyGroup::scalar(4), TinyGroup::scalar(0), TinyGroup::scalar(10)];
        let mut rng = ScriptedRng::for_scalars(&tiny, &draws);
        for want in &draws {
            assert_eq!(tiny.random_scalar(&mut rng), *want);
        }

        let prod = RistrettoGroup;
        let s = prod.scalar_from_u64(123_456_789);
        let mut rng = ScriptedRng::for_scalars(&prod, &[s]);
        assert_eq!(prod.random_scalar(&mut rng), s);
    }
}
