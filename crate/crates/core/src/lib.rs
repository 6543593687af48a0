//! Building blocks for second-device ballot audit ("cast and audit") voting
//! flows: a prime-order group abstraction with a production backend and a
//! brute-forceable test backend, re-randomizable ElGamal and Pedersen ballots,
//! an interactive zero-knowledge proof of correct re-randomization with a
//! committed verifier challenge, the four-role audit protocol, deniability and
//! server-view simulators, and a bulletin board with signed cast confirmations.

pub mod board;
pub mod commitment_flow;
pub mod elgamal;
pub mod encoding;
pub mod entropy;
pub mod group;
pub mod hashing;
pub mod pedersen;
pub mod protocol;
pub mod zk;

pub use group::{GroupError, OpMeter, PrimeGroup, RistrettoGroup, TinyGroup};
