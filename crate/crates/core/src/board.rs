//! Public bulletin board with signed cast confirmations.
//!
//! The voting server signs every cast ballot and publishes (voter id,
//! ciphertext, signature) records on an append-only board. A voter holding a
//! valid confirmation that is missing from the board has transferable
//! evidence of server misbehavior. A naive trusted-decryption tally is
//! provided for demos; verifiable tallying is out of scope.

use std::collections::BTreeMap;

use base64::prelude::{Engine, BASE64_STANDARD};
use rand_core::RngCore;
use thiserror::Error;

use crate::elgamal::{decrypt, Ciphertext};
use crate::encoding::{VoteEncoding, VoteIdx};
use crate::group::{OpMeter, PrimeGroup};
use crate::hashing::sha256_parts;
use crate::protocol::VoterId;

const SIGN_DOMAIN: &[u8] = b"castaudit/confirmation/v1";
const CHAIN_GENESIS: &[u8] = b"castaudit/board/genesis";

#[derive(Clone, Debug)]
pub struct SigningKeyPair<G: PrimeGroup> {
    pub sk: G::Scalar,
    pub vk: G::Element,
}

pub fn signing_keygen<G: PrimeGroup, R: RngCore + ?Sized>(
    group: &G,
    rng: &mut R,
    meter: &OpMeter,
) -> SigningKeyPair<G> {
    let sk = group.random_scalar(rng);
    let vk = group.exp(&group.generator(), &sk, meter);
    SigningKeyPair { sk, vk }
}

/// Schnorr signature over the protocol group with a domain-separated
/// challenge hash.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature<G: PrimeGroup> {
    pub commitment: G::Element,
    pub response: G::Scalar,
}

fn challenge_scalar<G: PrimeGroup>(
    group: &G,
    vk: &G::Element,
    commitment: &G::Element,
    msg: &[u8],
) -> G::Scalar {
    let mut data = group.encode_element(vk);
    data.extend_from_slice(&group.encode_element(commitment));
    data.extend_from_slice(msg);
    group.hash_to_scalar(SIGN_DOMAIN, &data)
}

pub fn sign<G: PrimeGroup, R: RngCore + ?Sized>(
    group: &G,
    keys: &SigningKeyPair<G>,
    msg: &[u8],
    rng: &mut R,
    meter: &OpMeter,
) -> Signature<G> {
    let nonce = group.random_scalar(rng);
    sign_with_nonce(group, keys, msg, &nonce, meter)
}

pub fn sign_with_nonce<G: PrimeGroup>(
    group: &G,
    keys: &SigningKeyPair<G>,
    msg: &[u8],
    nonce: &G::Scalar,
    meter: &OpMeter,
) -> Signature<G> {
    let commitment = group.exp(&group.generator(), nonce, meter);
    let challenge = challenge_scalar(group, &keys.vk, &commitment, msg);
    let response = group.scalar_add(nonce, &group.scalar_mul(&challenge, &keys.sk));
    Signature { commitment, response }
}

pub fn verify<G: PrimeGroup>(
    group: &G,
    vk: &G::Element,
    msg: &[u8],
    sig: &Signature<G>,
    meter: &OpMeter,
) -> bool {
    let challenge = challenge_scalar(group, vk, &sig.commitment, msg);
    group.exp(&group.generator(), &sig.response, meter)
        == group.mul(&sig.commitment, &group.exp(vk, &challenge, meter))
}

/// Signed ballot cast confirmation: binds the voter id and the cast
/// ciphertext under the server's signing key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Confirmation<G: PrimeGroup> {
    pub voter_id: VoterId,
    pub ballot_digest: [u8; 32],
    pub signature: Signature<G>,
}

fn confirmation_message<G: PrimeGroup>(
    group: &G,
    voter_id: &VoterId,
    ciphertexts: &[Ciphertext<G>],
) -> Vec<u8> {
    let mut msg = voter_id.to_vec();
    for ct in ciphertexts {
        msg.extend_from_slice(&ct.to_bytes(group));
    }
    msg
}

pub fn ballot_digest<G: PrimeGroup>(group: &G, ciphertexts: &[Ciphertext<G>]) -> [u8; 32] {
    let mut bytes = Vec::new();
    for ct in ciphertexts {
        bytes.extend_from_slice(&ct.to_bytes(group));
    }
    sha256_parts(&[b"castaudit/ballot", &bytes])
}

pub fn sign_confirmation<G: PrimeGroup, R: RngCore + ?Sized>(
    group: &G,
    keys: &SigningKeyPair<G>,
    voter_id: VoterId,
    ciphertexts: &[Ciphertext<G>],
    rng: &mut R,
    meter: &OpMeter,
) -> Confirmation<G> {
    let signature = sign(group, keys, &confirmation_message(group, &voter_id, ciphertexts), rng, meter);
    Confirmation { voter_id, ballot_digest: ballot_digest(group, ciphertexts), signature }
}

pub fn verify_confirmation<G: PrimeGroup>(
    group: &G,
    vk: &G::Element,
    confirmation: &Confirmation<G>,
    ciphertexts: &[Ciphertext<G>],
    meter: &OpMeter,
) -> bool {
    confirmation.ballot_digest == ballot_digest(group, ciphertexts)
        && verify(
            group,
            vk,
            &confirmation_message(group, &confirmation.voter_id, ciphertexts),
            &confirmation.signature,
            meter,
        )
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BallotRecord<G: PrimeGroup> {
    pub voter_id: VoterId,
    pub ciphertexts: Vec<Ciphertext<G>>,
    pub confirmation: Confirmation<G>,
}

impl<G: PrimeGroup> BallotRecord<G> {
    /// Record line content: voter_id, ciphertexts, then the signature pair.
    pub fn to_bytes(&self, group: &G) -> Vec<u8> {
        let mut bytes = self.voter_id.to_vec();
        for ct in &self.ciphertexts {
            bytes.extend_from_slice(&ct.to_bytes(group));
        }
        bytes.extend_from_slice(&group.encode_element(&self.confirmation.signature.commitment));
        bytes.extend_from_slice(&group.encode_scalar(&self.confirmation.signature.response));
        bytes
    }

    pub fn from_bytes(group: &G, bytes: &[u8]) -> Result<Self, BoardError> {
        let elem_len = group.params().element_len;
        let scalar_len = group.params().scalar_len;
        let fixed = 16 + elem_len + scalar_len;
        if bytes.len() <= fixed || !(bytes.len() - fixed).is_multiple_of(2 * elem_len) {
            return Err(BoardError::MalformedRecord);
        }
        let voter_id: VoterId = bytes[..16].try_into().unwrap();
        let ct_bytes = &bytes[16..bytes.len() - elem_len - scalar_len];
        let ciphertexts = ct_bytes
            .chunks(2 * elem_len)
            .map(|c| Ciphertext::from_bytes(group, c))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| BoardError::MalformedRecord)?;
        let tail = &bytes[bytes.len() - elem_len - scalar_len..];
        let signature = Signature {
            commitment: group.decode_element(&tail[..elem_len]).map_err(|_| BoardError::MalformedRecord)?,
            response: group.decode_scalar(&tail[elem_len..]).map_err(|_| BoardError::MalformedRecord)?,
        };
        let ballot_digest = ballot_digest(group, &ciphertexts);
        Ok(Self {
            voter_id,
            ciphertexts,
            confirmation: Confirmation { voter_id, ballot_digest, signature },
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoardError {
    #[error("record signature does not verify")]
    InvalidSignature,
    #[error("voter already has a published ballot")]
    DuplicateVoter,
    #[error("record bytes are malformed")]
    MalformedRecord,
}

/// Append-only list of published ballot records. Entries are chained by
/// digest so any auditor can check that history was never rewritten.
#[derive(Clone, Debug)]
pub struct BulletinBoard<G: PrimeGroup> {
    records: Vec<BallotRecord<G>>,
    chain: Vec<[u8; 32]>,
    allow_revote: bool,
}

impl<G: PrimeGroup> BulletinBoard<G> {
    pub fn new(allow_revote: bool) -> Self {
        Self {
            records: Vec::new(),
            chain: vec![sha256_parts(&[CHAIN_GENESIS])],
            allow_revote,
        }
    }

    pub fn publish(
        &mut self,
        group: &G,
        vk: &G::Element,
        record: BallotRecord<G>,
        meter: &OpMeter,
    ) -> Result<(), BoardError> {
        if !verify_confirmation(group, vk, &record.confirmation, &record.ciphertexts, meter) {
            return Err(BoardError::InvalidSignature);
        }
        if !self.allow_revote && self.records.iter().any(|r| r.voter_id == record.voter_id) {
            return Err(BoardError::DuplicateVoter);
        }
        let head = *self.chain.last().expect("genesis digest");
        self.chain.push(sha256_parts(&[&head, &record.to_bytes(group)]));
        self.records.push(record);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[BallotRecord<G>] {
        &self.records
    }

    /// The latest published record for a voter; earlier entries stay on the
    /// board but no longer count.
    pub fn live_record(&self, voter_id: &VoterId) -> Option<&BallotRecord<G>> {
        self.records.iter().rev().find(|r| r.voter_id == *voter_id)
    }

    /// Only the latest record per voter, in publication order.
    pub fn live_records(&self) -> Vec<&BallotRecord<G>> {
        let mut live: Vec<&BallotRecord<G>> = Vec::new();
        for record in &self.records {
            if let Some(slot) = live.iter_mut().find(|r| r.voter_id == record.voter_id) {
                *slot = record;
            } else {
                live.push(record);
            }
        }
        live
    }

    /// Chained digest over the first `n` records; auditors compare prefixes
    /// to detect rewritten history.
    pub fn prefix_digest(&self, n: usize) -> [u8; 32] {
        self.chain[n.min(self.chain.len() - 1)]
    }

    pub fn head_digest(&self) -> [u8; 32] {
        self.prefix_digest(self.records.len())
    }

    /// Newline-delimited export: one base64 record per line, deterministic.
    pub fn export(&self, group: &G) -> String {
        let mut out = String::new();
        for record in &self.records {
            out.push_str(&BASE64_STANDARD.encode(record.to_bytes(group)));
            out.push('\n');
        }
        out
    }

    /// Rebuilds a board from an export, verifying every signature.
    pub fn import(
        group: &G,
        vk: &G::Element,
        export: &str,
        allow_revote: bool,
        meter: &OpMeter,
    ) -> Result<Self, BoardError> {
        let mut board = Self::new(allow_revote);
        for line in export.lines() {
            if line.is_empty() {
                continue;
            }
            let bytes = BASE64_STANDARD.decode(line).map_err(|_| BoardError::MalformedRecord)?;
            let record = BallotRecord::from_bytes(group, &bytes)?;
            board.publish(group, vk, record, meter)?;
        }
        Ok(board)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReceiptVerdict {
    Accept,
    Reject,
    /// The confirmation is validly signed but the board carries no matching
    /// record: transferable evidence that the server misbehaved.
    ServerMisbehaviorEvidence,
}

/// Voter-side receipt check: the confirmation must verify against the ballot
/// the voter believes was cast, and the board must carry that exact ballot.
pub fn receipt_check<G: PrimeGroup>(
    group: &G,
    vk: &G::Element,
    board: &BulletinBoard<G>,
    confirmation: &Confirmation<G>,
    expected: &[Ciphertext<G>],
    meter: &OpMeter,
) -> ReceiptVerdict {
    if !verify_confirmation(group, vk, confirmation, expected, meter) {
        return ReceiptVerdict::Reject;
    }
    match board.live_record(&confirmation.voter_id) {
        Some(record) if ballot_digest(group, &record.ciphertexts) == confirmation.ballot_digest => {
            ReceiptVerdict::Accept
        }
        _ => ReceiptVerdict::ServerMisbehaviorEvidence,
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TallyError {
    #[error("a published ballot decrypts to a non-alphabet plaintext")]
    UnknownVote,
}

/// Demo tally: trusted decryption of every live record and a per-vote count.
pub fn naive_tally<G: PrimeGroup>(
    group: &G,
    sk: &G::Scalar,
    encoding: &VoteEncoding<G>,
    board: &BulletinBoard<G>,
    meter: &OpMeter,
) -> Result<BTreeMap<Vec<VoteIdx>, u64>, TallyError> {
    let mut counts = BTreeMap::new();
    for record in board.live_records() {
        let mut vote = Vec::with_capacity(record.ciphertexts.len());
        for ct in &record.ciphertexts {
            let m = decrypt(group, sk, ct, meter);
            vote.push(encoding.decode(group, &m).map_err(|_| TallyError::UnknownVote)?);
        }
        *counts.entry(vote).or_insert(0) += 1;
    }
    Ok(counts)
}
